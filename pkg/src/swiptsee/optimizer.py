"""Maximum secure-energy-efficiency power allocation.

Maximises total secrecy rate over consumed power subject to

* C1: per-port budget, ``sum_k p[i, k] <= max_port_power[i]``
* C2: ``p >= 0``
* C3: Bob harvest floors, ``harvest_bob[k] >= min_harvest_bob[k]``
* C4: Eve harvest cap, ``harvest_eve[m] <= eve_harvest_cap`` for every Eve

C3 and C4 are linear in the per-port totals, so the feasible set is a
polytope.  The fractional objective is handled by Dinkelbach's method; each
parametric subproblem ``F(p) - lam * G(p)`` is solved by projected gradient
ascent with Barzilai-Borwein steps and Armijo backtracking, projecting onto
the polytope with Dykstra's algorithm.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import linprog, lsq_linear

from . import kernels
from .errors import GridTooLargeError
from .model import ChannelRealization, PowerAllocation, SystemConfig, harvest_coefficients

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_FAILURE = "numerical_failure"

FEAS_TOL = 1e-8
LN2 = math.log(2.0)
KKT_TOL = 1e-5


@dataclass(frozen=True)
class SolverOptions:
    outer_tol: float = 1e-8
    inner_tol: float = 1e-8
    max_outer: int = 100
    max_inner: int = 10000
    restarts: int = 5
    seed: int = 0
    projection_max_iter: int = 2000

    def __post_init__(self):
        if not (self.outer_tol > 0 and self.inner_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.restarts < 1 or self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class SolveReport:
    allocation: Optional[PowerAllocation]
    see_value: float
    lambda_trace: list = field(default_factory=list)
    kkt_residual: float = math.inf
    constraint_slacks: dict = field(default_factory=dict)
    status: str = NUMERICAL_FAILURE
    restart_values: list = field(default_factory=list)
    # users whose Eve SNR is not below Bob's at the returned point
    assumption_violations: list = field(default_factory=list)
    infeasible_constraints: list = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        vals = [np.min(v) for v in self.constraint_slacks.values() if np.size(v)]
        return float(min(vals)) if vals else math.inf

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "see": self.see_value,
            "kkt_residual": self.kkt_residual,
            "allocation": None if self.allocation is None else self.allocation.p.tolist(),
            "lambda_trace": list(self.lambda_trace),
            "constraint_slacks": {k: np.asarray(v).tolist() for k, v in self.constraint_slacks.items()},
            "restart_values": list(self.restart_values),
            "assumption_violations": list(self.assumption_violations),
            "infeasible_constraints": list(self.infeasible_constraints),
        }


class FeasibilityResult(NamedTuple):
    feasible: bool
    allocation: Optional[PowerAllocation]
    margin: float
    conflicting: list


class SubproblemResult(NamedTuple):
    allocation: PowerAllocation
    status: str
    iterations: int
    stationarity: float


def _nnls(A, b):
    """min |A x - b| over x >= 0, returning ``(x, residual_norm)``.

    Bounded-variable least squares; scipy's ``nnls`` in 1.15 can stop at
    non-optimal points, which would corrupt projections and KKT residuals.
    """
    res = lsq_linear(A, b, bounds=(0.0, np.inf), method="bvls", tol=1e-15)
    x = np.clip(res.x, 0.0, None)
    return x, float(np.linalg.norm(A @ x - b))


def project_polytope(v, pmax, A, c, max_iter: int):
    """Euclidean projection onto {x >= 0, row sums <= pmax, <A_l, x> <= c_l}.

    Dykstra's algorithm (compiled kernel) first; it can crawl between nearly
    parallel faces, so when it does not converge the projection is solved
    exactly as a least-distance program via one NNLS.
    Returns ``(x, ok)``.
    """
    v = np.ascontiguousarray(v, dtype=float)
    x, _, ok = kernels.project(v, pmax, A, c, max_iter)
    # the kernel's tolerance scales with |v|; demand feasibility at the scale of x
    if ok and kernels.max_violation(x, pmax, A, c) <= 1e-12 * max(1.0, float(np.abs(x).max())):
        return x, True
    n = v.size
    rows = [-np.eye(n)]
    bounds = [np.zeros(n)]
    N, K = v.shape
    finite = np.isfinite(pmax)
    if finite.any():
        rows.append(np.kron(np.eye(N), np.ones((1, K)))[finite])
        bounds.append(np.asarray(pmax)[finite])
    if len(c):
        rows.append(A.reshape(len(c), n))
        bounds.append(c)
    C, d = np.vstack(rows), np.concatenate(bounds)
    # min |z| s.t. C (v + z) <= d  <=>  G z >= h with G = -C, h = C v - d
    G, h = -C, C @ v.ravel() - d
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(n + 1)
    f[-1] = 1.0
    u, _ = _nnls(E, f)
    r = E @ u - f
    if not abs(r[-1]) > 1e-14:
        return x, False
    z = -r[:n] / r[-1]
    y = np.clip((v.ravel() + z).reshape(v.shape), 0.0, None)
    viol = kernels.max_violation(np.ascontiguousarray(y), pmax, A, c)
    return y, viol <= 1e-12 * max(1.0, float(np.abs(y).max()))


class _Problem:
    """Arrays of one (cfg, ch) instance in the layout the kernels expect."""

    def __init__(self, cfg: SystemConfig, ch: ChannelRealization, secure: bool = True):
        ch.check(cfg)
        self.cfg = cfg
        self.secure = secure
        N, K = cfg.shape
        self.shape = (N, K)
        self.gb = np.ascontiguousarray(ch.gains_bob, dtype=float)
        self.ge = np.ascontiguousarray(ch.gains_eve, dtype=float)
        self.ps_bob = np.ascontiguousarray(cfg.ps_bob, dtype=float)
        self.ps_eve = float(cfg.ps_eve)
        self.pmax = np.ascontiguousarray(cfg.max_port_power, dtype=float)
        self.pc = float(cfg.circuit_power)
        self.hb, self.he = harvest_coefficients(cfg, ch)
        self.emin = np.asarray(cfg.min_harvest_bob, dtype=float)
        self.cap = np.full(cfg.n_eves, cfg.eve_harvest_cap)

        # C3/C4 as <A_l, p> <= c_l with unit-norm A_l; trivially slack ones dropped
        normals, bounds, names = [], [], []
        for k in range(K):
            if self.emin[k] > 0:
                normals.append(-np.repeat(self.hb[k][:, None], K, axis=1))
                bounds.append(-self.emin[k])
                names.append(f"C3[{k}]")
        for m in range(cfg.n_eves):
            if math.isfinite(self.cap[m]):
                normals.append(np.repeat(self.he[m][:, None], K, axis=1))
                bounds.append(self.cap[m])
                names.append(f"C4[{m}]")
        self.names = names
        A = np.array(normals, dtype=float).reshape(len(normals), N, K)
        c = np.array(bounds, dtype=float)
        norms = np.sqrt(np.einsum("lij,lij->l", A, A)) if len(c) else np.zeros(0)
        # a zero normal is either always satisfied or never; keep it out of Dykstra
        keep = norms > 0
        self.degenerate = [(names[l], c[l]) for l in np.flatnonzero(~keep)]
        self.A = np.ascontiguousarray(A[keep] / norms[keep, None, None])
        self.c = np.ascontiguousarray(c[keep] / norms[keep])
        self.halfspace_names = [n for n, kp in zip(names, keep) if kp]

    def rate(self, p):
        return kernels.objective_grad(self.gb, self.ge, self.ps_bob, self.ps_eve, p, self.secure)

    def power(self, p):
        return float(p.sum()) + self.pc

    def project(self, v, max_iter):
        x, ok = project_polytope(v, self.pmax, self.A, self.c, max_iter)
        return x, 0, ok

    def inner(self):
        """Smooth form of the problem for the ascent (see ``_Lifted``)."""
        return _Lifted(self) if self.secure and self.ge.shape[1] > 1 else _Plain(self)

    def slacks(self, p) -> dict:
        rows = p.sum(axis=1)
        return {
            "C1": self.pmax - rows,
            "C2": p.ravel().copy(),
            "C3": self.hb @ rows - self.emin,
            "C4": self.cap - self.he @ rows,
        }


class _Plain:
    """Single eavesdropper (or no secrecy term): the objective is already smooth."""

    def __init__(self, prob: _Problem):
        self.prob = prob
        self.rate, self.power, self.project = prob.rate, prob.power, prob.project
        self.dG = 1.0  # gradient of consumed power

    def violation(self, x):
        p = self.prob
        return kernels.max_violation(np.ascontiguousarray(x), p.pmax, p.A, p.c)

    def lift(self, p):
        return np.array(p, dtype=float)

    def drop(self, x):
        return x


class _Lifted:
    """Epigraph form of the worst-Eve objective.

    ``max_m E[m, k]`` is replaced by a variable ``t[k]`` with linear
    constraints ``t[k] >= E[m, k]``; since the rate decreases in ``t`` the
    optimum has ``t = max_m E`` and the objective becomes smooth.  ``t`` is
    stored as an extra row of the variable matrix with an unbounded budget, so
    the projection kernels are reused unchanged.  The row holds ``t / s``
    with ``s`` the largest Eve gain-vector norm, which keeps the epigraph
    halfspaces well separated (Dykstra crawls between nearly parallel ones).
    """

    def __init__(self, prob: _Problem):
        self.prob = prob
        N, K = prob.shape
        M = prob.ge.shape[1]
        self.pmax = np.ascontiguousarray(np.append(prob.pmax, np.inf))
        self.s = float(np.linalg.norm(prob.ge, axis=0).max()) or 1.0
        rows = [np.concatenate([a, np.zeros((1, K))]) for a in prob.A]
        bounds = list(prob.c)
        for k in range(K):
            for m in range(M):
                a = np.zeros((N + 1, K))
                a[:N, k] = prob.ge[:, m]
                a[N, k] = -self.s
                n = np.linalg.norm(a)
                rows.append(a / n)
                bounds.append(0.0)
        self.A = np.ascontiguousarray(np.array(rows).reshape(len(rows), N + 1, K))
        self.c = np.ascontiguousarray(bounds, dtype=float)
        self.dG = np.vstack([np.ones((N, K)), np.zeros((1, K))])

    def lift(self, p):
        p = np.asarray(p, dtype=float)
        return np.vstack([p, (self.prob.ge.T @ p).max(axis=0) / self.s])

    def drop(self, x):
        return np.ascontiguousarray(x[:-1])

    def rate(self, x):
        prob = self.prob
        K = prob.shape[1]
        p, t = np.ascontiguousarray(x[:-1]), self.s * x[-1]
        val, g = kernels.objective_grad(prob.gb, prob.ge, prob.ps_bob, prob.ps_eve, p, False)
        val -= float(np.sum(np.log2(1.0 + prob.ps_eve * t))) / K
        gt = -self.s * prob.ps_eve / ((1.0 + prob.ps_eve * t) * LN2) / K
        return val, np.vstack([g, gt])

    def power(self, x):
        return float(x[:-1].sum()) + self.prob.pc

    def violation(self, x):
        return kernels.max_violation(np.ascontiguousarray(x), self.pmax, self.A, self.c)

    def project(self, v, max_iter):
        x, ok = project_polytope(v, self.pmax, self.A, self.c, max_iter)
        return x, 0, ok


def constraint_slacks(cfg, ch, alloc) -> dict:
    p = alloc.p if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    return _Problem(cfg, ch).slacks(p)


# -- feasibility ---------------------------------------------------------------

def _lp_rows(prob: _Problem, subset):
    """Inequality rows (over p flattened port-major) for C1 and chosen C3/C4."""
    N, K = prob.shape
    rows, rhs = [], []
    for i in range(N):
        r = np.zeros((N, K))
        r[i] = 1.0
        rows.append(r.ravel())
        rhs.append(prob.pmax[i])
    for name in subset:
        kind, idx = name[:2], int(name[3:-1])
        if kind == "C3":
            rows.append(-np.repeat(prob.hb[idx][:, None], K, axis=1).ravel())
            rhs.append(-prob.emin[idx])
        else:
            rows.append(np.repeat(prob.he[idx][:, None], K, axis=1).ravel())
            rhs.append(prob.cap[idx])
    return np.array(rows), np.array(rhs)


def _feasible_lp(prob: _Problem, subset) -> bool:
    A, b = _lp_rows(prob, subset)
    n = A.shape[1]
    res = linprog(np.zeros(n), A_ub=A, b_ub=b + 1e-12 * np.maximum(1.0, np.abs(b)),
                  bounds=[(0, None)] * n, method="highs")
    return res.status == 0


def check_feasibility(cfg: SystemConfig, ch: ChannelRealization) -> FeasibilityResult:
    """Find a maximally interior feasible point, or explain infeasibility.

    Maximises the common margin ``t`` by which every constraint (each row
    normalised) holds.  ``t > 0`` gives a strictly feasible point.  When the
    constraints cannot all hold, a deletion filter over C3/C4 returns an
    irreducible conflicting subset (C1-C2 always included).
    """
    prob = _Problem(cfg, ch)
    for name, bound in prob.degenerate:
        # zero harvest coefficients: C3 with a positive floor can never hold
        if name.startswith("C3") and -bound > 0:
            return FeasibilityResult(False, None, -math.inf, [name])
    A, b = _lp_rows(prob, prob.names)
    N, K = prob.shape
    n = N * K
    # p >= t as well, so the point is interior to C2 when t > 0
    A_full = np.vstack([A, -np.eye(n)])
    b_full = np.concatenate([b, np.zeros(n)])
    norms = np.linalg.norm(A_full, axis=1)
    norms[norms == 0] = 1.0
    A_lp = np.hstack([A_full / norms[:, None], np.ones((len(b_full), 1))])
    b_lp = b_full / norms
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=A_lp, b_ub=b_lp, bounds=[(0, None)] * n + [(None, float(prob.pmax.max()))],
                  method="highs")
    if res.status == 0 and res.x[-1] >= -1e-12:
        p = np.clip(res.x[:n].reshape(N, K), 0.0, None)
        return FeasibilityResult(True, PowerAllocation(p), float(res.x[-1]), [])

    conflict = list(prob.names)
    for name in list(conflict):
        trial = [x for x in conflict if x != name]
        if not _feasible_lp(prob, trial):
            conflict = trial
    margin = float(res.x[-1]) if res.status == 0 else -math.inf
    return FeasibilityResult(False, None, margin, conflict)


def min_power_point(cfg, ch) -> Optional[PowerAllocation]:
    """Feasible allocation of least total transmit power (LP)."""
    prob = _Problem(cfg, ch)
    A, b = _lp_rows(prob, prob.names)
    n = A.shape[1]
    res = linprog(np.ones(n), A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return None
    p = np.clip(res.x.reshape(prob.shape), 0.0, None)
    p, _, _ = prob.project(p, 20000)  # remove LP round-off
    return PowerAllocation(np.clip(p, 0.0, None))


# -- inner solver --------------------------------------------------------------

def _ascent(prob, lam: float, x0: np.ndarray, opts: SolverOptions):
    """Projected gradient ascent on F - lam * G from a feasible ``x0``."""
    x = np.array(x0, dtype=float)
    F, gF = prob.rate(x)
    phi = F - lam * prob.power(x)
    g = gF - lam * prob.dG
    step = 1.0 / max(1e-12, float(np.abs(g).max()))
    x_prev = g_prev = None
    stationarity = math.inf
    flat = 0  # consecutive accepted steps that barely move x
    for it in range(1, opts.max_inner + 1):
        trial, _, ok = prob.project(x + g, opts.projection_max_iter)
        stationarity = float(np.abs(trial - x).max())
        # measured relative to the gradient, like the KKT residual
        tol = opts.inner_tol * max(1.0, float(np.abs(g).max()))
        if stationarity <= tol:
            return x, OPTIMAL, it, stationarity
        if flat >= 20 and stationarity <= 1e3 * tol:
            # projection accuracy limits further progress
            return x, OPTIMAL, it, stationarity
        if x_prev is not None:
            dx, dg = x - x_prev, g - g_prev
            curv = -float(np.sum(dx * dg))
            step = float(np.sum(dx * dx)) / curv if curv > 1e-300 else 1e6 * step
            step = min(max(step, 1e-12), 1e12)
        for _ in range(80):
            cand, _, ok = prob.project(x + step * g, opts.projection_max_iter)
            if not ok and prob.violation(cand) > 1e-12 * max(1.0, float(np.abs(cand).max())):
                return x, NUMERICAL_FAILURE, it, stationarity
            Fc, gFc = prob.rate(cand)
            Gc = prob.power(cand)
            phic = Fc - lam * Gc
            d = cand - x
            if phic >= phi + 1e-4 * float(np.sum(g * d)):
                break
            # Near stationarity the decrease test drowns in rounding of phi;
            # accept if the step has not overshot along its direction.
            noise = 64 * np.finfo(float).eps * (abs(Fc) + abs(lam) * Gc + 1.0)
            if abs(phic - phi) <= noise and float(np.sum((gFc - lam * prob.dG) * d)) >= 0.0:
                break
            step *= 0.5
        else:
            # no ascent even for tiny steps: stationary up to rounding
            if stationarity <= 1e3 * tol:
                return x, OPTIMAL, it, stationarity
            return x, NUMERICAL_FAILURE, it, stationarity
        moved = float(np.abs(d).max())
        flat = flat + 1 if moved <= 1e-12 * max(1.0, float(np.abs(x).max())) else 0
        x_prev, g_prev = x, g
        x, phi, g = cand, phic, gFc - lam * prob.dG
    return x, MAX_ITERATIONS, opts.max_inner, stationarity


def dinkelbach_subproblem(cfg, ch, lam: float, start, opts: SolverOptions = SolverOptions(),
                          secure: bool = True) -> SubproblemResult:
    """Maximise total rate minus ``lam`` times consumed power from ``start``."""
    prob = _Problem(cfg, ch, secure)
    x0 = start.p if isinstance(start, PowerAllocation) else np.asarray(start, dtype=float)
    x0, _, _ = prob.project(x0, opts.projection_max_iter)
    inner = prob.inner()
    x, status, it, st = _ascent(inner, lam, inner.lift(x0), opts)
    return SubproblemResult(PowerAllocation(np.clip(inner.drop(x), 0.0, None)), status, it, st)


def _dinkelbach(prob: _Problem, x0: np.ndarray, opts: SolverOptions):
    inner = prob.inner()
    x = inner.lift(x0)
    lam = inner.rate(x)[0] / inner.power(x)
    trace = [lam]
    for _ in range(opts.max_outer):
        x, status, _, _ = _ascent(inner, lam, x, opts)
        # tighten the epigraph variable: feasible, and never lowers the rate
        x = inner.lift(np.clip(inner.drop(x), 0.0, None))
        F = inner.rate(x)[0]
        G = inner.power(x)
        gap = F - lam * G
        # ascent from the previous iterate keeps gap >= 0, so lam cannot drop
        # beyond rounding; clamp that away to keep the trace monotone
        lam_new = max(lam, F / G)
        trace.append(lam_new)
        if gap <= opts.outer_tol * max(1.0, abs(lam_new)):
            return inner.drop(x), trace, OPTIMAL if status != NUMERICAL_FAILURE else status
        if status == NUMERICAL_FAILURE and lam_new <= lam:
            # inner solve stalled (e.g. at a tie between Eves) without progress
            return inner.drop(x), trace, status
        lam = lam_new
    return inner.drop(x), trace, MAX_ITERATIONS


# -- verification --------------------------------------------------------------

def _kkt(prob: _Problem, p: np.ndarray, act_tol: float = 1e-7, tie_tol: float = 1e-9) -> float:
    N, K = prob.shape
    F, _ = prob.rate(p)
    G = prob.power(p)
    # Bob part of the SEE gradient, and one Eve-part column per (user, tied Eve):
    # where several Eves attain the max the objective is nonsmooth and any
    # convex combination of their gradients is a valid supergradient
    B = np.einsum("jk,jk->k", prob.gb, p)
    target = np.zeros((N, K))
    for k in range(K):
        target[:, k] = prob.gb[:, k] * prob.ps_bob[k] / ((1.0 + prob.ps_bob[k] * B[k]) * LN2)
    target = ((target / K - F / G) / G).ravel()
    eve_cols, groups = [], []
    if prob.secure:
        E = prob.ge.T @ p  # (M, K)
        for k in range(K):
            top = E[:, k].max()
            ce = prob.ps_eve / ((1.0 + prob.ps_eve * top) * LN2) / K / G
            tied = np.flatnonzero(E[:, k] >= top - tie_tol * max(1.0, abs(top)))
            groups.append(range(len(eve_cols), len(eve_cols) + len(tied)))
            for m in tied:
                col = np.zeros((N, K))
                col[:, k] = -prob.ge[:, m] * ce
                eve_cols.append(col.ravel())
    normals, slack = [], []
    for i in range(N):
        for k in range(K):
            if p[i, k] <= act_tol * max(1.0, prob.pmax[i]):
                e = np.zeros(N * K)
                e[i * K + k] = -1.0
                normals.append(e)
                slack.append(p[i, k])
    rows = p.sum(axis=1)
    for i in range(N):
        s = prob.pmax[i] - rows[i]
        if s <= act_tol * max(1.0, prob.pmax[i]):
            r = np.zeros((N, K))
            r[i] = 1.0
            normals.append(r.ravel())
            slack.append(s)
    for l in range(len(prob.c)):
        s = prob.c[l] - float(np.sum(prob.A[l] * p))
        if s <= act_tol * (1.0 + abs(prob.c[l])):
            normals.append(prob.A[l].ravel())
            slack.append(s)
    # solve  target + sum theta * eve_col = sum mu * normal,  theta in simplices, mu >= 0
    # as one NNLS with heavily weighted simplex rows
    cols = [-c for c in eve_cols] + normals
    grad_scale = np.linalg.norm(target + (np.sum(eve_cols, axis=0) / max(1, len(groups)) if eve_cols else 0.0))
    scale = max(1.0, float(grad_scale))
    if not cols:
        return float(np.linalg.norm(target)) / scale
    Amat = np.array(cols).T
    rhs = target
    if groups:
        w = 1e4 * scale
        eq = np.zeros((len(groups), len(cols)))
        for g_, idx in enumerate(groups):
            eq[g_, list(idx)] = w
        Amat = np.vstack([Amat, eq])
        rhs = np.concatenate([target, np.full(len(groups), w)])
    coef, resid = _nnls(Amat, rhs)
    mu = coef[len(eve_cols):]
    comp = float(np.sum(mu * np.abs(slack)))
    return (resid + comp) / scale


def kkt_residual(cfg, ch, alloc, secure: bool = True) -> float:
    """Scaled first-order optimality violation of SEE at ``alloc``.

    Distance from the SEE gradient to the cone spanned by the outward normals
    of the (nearly) active constraints, plus multiplier-weighted slack of
    those constraints, divided by ``max(1, |grad|)``.  Zero at a KKT point.
    """
    p = alloc.p if isinstance(alloc, PowerAllocation) else np.asarray(alloc, dtype=float)
    return _kkt(_Problem(cfg, ch, secure), p)


def _starts(prob: _Problem, first: np.ndarray, opts: SolverOptions):
    rng = np.random.default_rng(opts.seed)
    yield first
    N, K = prob.shape
    for _ in range(opts.restarts - 1):
        raw = rng.uniform(size=(N, K)) * (prob.pmax / K)[:, None]
        x, _, ok = prob.project(raw, opts.projection_max_iter)
        if ok:
            yield x


def solve_p1(cfg: SystemConfig, ch: ChannelRealization, opts: SolverOptions = SolverOptions(),
             secure: bool = True) -> SolveReport:
    """Globally maximise SEE over C1-C4.

    ``secure=False`` solves the same problem for plain energy efficiency
    (Eve's rate dropped from the objective, constraints unchanged).
    """
    feas = check_feasibility(cfg, ch)
    if not feas.feasible:
        return SolveReport(None, math.nan, status=INFEASIBLE, infeasible_constraints=feas.conflicting)
    prob = _Problem(cfg, ch, secure)
    x0, _, ok = prob.project(feas.allocation.p, opts.projection_max_iter)
    if not ok:
        x0 = feas.allocation.p  # the phase-1 point is strictly feasible already

    runs = []
    for idx, start in enumerate(_starts(prob, x0, opts)):
        x, trace, status = _dinkelbach(prob, start, opts)
        x = np.clip(x, 0.0, None)
        feasible = min(float(np.min(v)) for v in prob.slacks(x).values() if np.size(v)) >= -FEAS_TOL
        runs.append((prob.rate(x)[0] / prob.power(x), idx, x, trace, status, feasible))
        log.debug("restart %d: see=%.12g status=%s outer=%d feasible=%s",
                  idx, runs[-1][0], status, len(trace), feasible)
    # an infeasible end point (failed projection) never wins; the phase-1 run
    # starts feasible, so fall back to all runs only if every one drifted
    pool = [r for r in runs if r[5]] or runs
    best = max(pool, key=lambda r: (r[0], -r[1]))
    value, _, x, trace, status, _ = best

    # identically-zero (or flat) objective: prefer the least-power feasible point
    low = min_power_point(cfg, ch)
    if low is not None and low.total < x.sum():
        lv = prob.rate(low.p)[0] / prob.power(low.p) if prob.power(low.p) > 0 else -math.inf
        if lv >= value - 1e-12 * max(1.0, abs(value)):
            x, value = low.p, lv

    slacks = prob.slacks(x)
    kkt = _kkt(prob, x)
    min_slack = min(float(np.min(v)) for v in slacks.values() if np.size(v))
    # the returned status is what the final point certifies, not how the runs ended
    if min_slack >= -FEAS_TOL and kkt <= KKT_TOL:
        status = OPTIMAL
    elif status == OPTIMAL:
        status = NUMERICAL_FAILURE
    violations = []
    if secure:
        B = np.einsum("jk,jk->k", prob.gb, x)
        E = (prob.ge.T @ x).max(axis=0)
        violations = [k for k in range(prob.shape[1]) if not prob.ps_bob[k] * B[k] > prob.ps_eve * E[k]]
    return SolveReport(
        allocation=PowerAllocation(x),
        see_value=float(value),
        lambda_trace=[float(v) for v in trace],
        kkt_residual=float(kkt),
        constraint_slacks=slacks,
        status=status,
        restart_values=[float(r[0]) for r in runs],
        assumption_violations=violations,
    )


def grid_oracle(cfg, ch, resolution: int, secure: bool = True, max_dim: int = 4):
    """Brute-force maximiser over a uniform grid of every p[i, k].

    Returns ``(PowerAllocation, see)`` or ``None`` when no grid point is
    feasible.  Refuses problems with more than ``max_dim`` variables.
    """
    if cfg.n_ports * cfg.n_users > max_dim:
        raise GridTooLargeError(
            f"{cfg.n_ports * cfg.n_users} variables exceeds the limit of {max_dim} for grid search")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    prob = _Problem(cfg, ch, secure)
    val, p = kernels.grid_search(
        prob.gb, prob.ge, prob.ps_bob, prob.ps_eve, prob.pmax, prob.pc,
        np.ascontiguousarray(prob.hb), np.ascontiguousarray(prob.emin),
        np.ascontiguousarray(prob.he), np.ascontiguousarray(prob.cap, dtype=float),
        int(resolution), secure,
    )
    if p is None:
        return None
    return PowerAllocation(p), float(val)
