"""Closed-form outage probability of secure energy efficiency.

All ports transmit at the same power ``p`` (blanket transmission) and the
Bob/Eve channel sums are Erlang(N, 1).  With ``w_b = ps_bob * p / noise_bob``
and ``w_e = ps_eve * p / noise_eve`` the effective SNRs are ``X = w_b X''``
and ``Y = w_e Y''``; ``alpha = 1 / w_b`` and ``beta = 1 / w_e`` are their
Erlang rates.  Outage means ``log2(1 + X) - log2(1 + Y) < z`` with
``z = (N p + p_c) * threshold``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import NumericalRangeError, QuadratureError

LN2 = math.log(2.0)
ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class OutageScenario:
    n_ports: int
    port_power: float
    circuit_power: float = 0.0
    ps_bob: float = 0.5
    ps_eve: float = 0.5
    noise_bob: float = 1e-5
    noise_eve: float = 1e-4
    threshold: float = 0.0
    n_eves: int = 1

    def __post_init__(self):
        for name in ("n_ports", "n_eves"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        for name in ("port_power", "circuit_power", "ps_bob", "ps_eve",
                     "noise_bob", "noise_eve", "threshold"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.port_power > 0.0:
            raise ValueError("port_power must be > 0")
        if self.circuit_power < 0.0:
            raise ValueError("circuit_power must be >= 0")
        if not (0.0 < self.ps_bob <= 1.0 and 0.0 < self.ps_eve <= 1.0):
            raise ValueError("power-splitting ratios must lie in (0, 1]")
        if not (self.noise_bob > 0.0 and self.noise_eve > 0.0):
            raise ValueError("noise powers must be > 0")
        if not self.threshold >= 0.0:
            raise ValueError("threshold must be >= 0")

    @property
    def w_bob(self) -> float:
        return self.ps_bob * self.port_power / self.noise_bob

    @property
    def w_eve(self) -> float:
        return self.ps_eve * self.port_power / self.noise_eve

    @property
    def alpha(self) -> float:
        return self.noise_bob / (self.ps_bob * self.port_power)

    @property
    def beta(self) -> float:
        return self.noise_eve / (self.ps_eve * self.port_power)

    @property
    def z(self) -> float:
        return (self.n_ports * self.port_power + self.circuit_power) * self.threshold

    def replace(self, **changes) -> "OutageScenario":
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(changes)
        return OutageScenario(**fields)


def _check_order(n) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"Erlang order must be a positive integer, got {n}")
    return int(n)


def _lower_series(n: int, x: float) -> float:
    # P(n, x) = e^-x x^n / n! * sum_m x^m / ((n+1)...(n+m)); converges for any x,
    # used only for x < n + 1 where it needs few terms.
    log_pref = -x + n * math.log(x) - math.lgamma(n + 1)
    total, term, m = 1.0, 1.0, 0
    while term > 1e-17 * total:
        m += 1
        term *= x / (n + m)
        total += term
    return math.exp(log_pref) * total


def _upper_finite(n: int, x: float) -> float:
    # Q(n, x) = e^-x sum_{k<n} x^k / k!
    logs = [k * math.log(x) - math.lgamma(k + 1) - x for k in range(n)]
    top = max(logs)
    return math.exp(top) * math.fsum(math.exp(v - top) for v in logs)


def regularized_lower_gamma(n: int, x: float) -> float:
    """Erlang(n, 1) CDF, i.e. gamma_inc(n, x) / (n - 1)!."""
    n = _check_order(n)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < n + 1:
        return min(1.0, _lower_series(n, x))
    return 1.0 - _upper_finite(n, x)


def regularized_upper_gamma(n: int, x: float) -> float:
    """Complement of :func:`regularized_lower_gamma`, accurate in the tail."""
    n = _check_order(n)
    if x < 0 or math.isnan(x):
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < n + 1:
        return 1.0 - _lower_series(n, x)
    return _upper_finite(n, x)


def _absorb(p: float, what: str) -> float:
    if 0.0 <= p <= 1.0:
        return p
    excess = -p if p < 0 else p - 1.0
    if excess > ROUNDING_SLACK:
        warnings.warn(f"{what}: value {p!r} outside [0, 1] by {excess:.3g}", RuntimeWarning, stacklevel=3)
    return min(1.0, max(0.0, p))


def _log_binom(n: int, j: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)


def _log_pow2_minus_one(z: float) -> float:
    """log(2^z - 1) for z > 0 without overflow."""
    if z * LN2 > 30:
        return z * LN2 + math.log1p(-math.exp(-z * LN2))
    return math.log(math.expm1(z * LN2))


def _log_series_terms(N: int, alpha: float, beta: float, z: float) -> list[float]:
    log_a = z * LN2
    log_b = _log_pow2_minus_one(z) if z > 0 else -math.inf
    # alpha * (2^z - 1) may overflow to inf; that just sends every term to 0
    log_alpha_b = math.log(alpha) + log_b
    alpha_b = 0.0 if z == 0 else (math.inf if log_alpha_b > 709.0 else math.exp(log_alpha_b))
    log_rate = np.logaddexp(log_a + math.log(alpha), math.log(beta))
    log_K = N * math.log(beta) - alpha_b - math.lgamma(N)
    terms = []
    for n in range(N):
        head = log_K + n * math.log(alpha) - math.lgamma(n + 1)
        for j in range(n + 1):
            k = n - j
            if k and z == 0:
                continue  # b = 0 kills every term but j == n
            t = head + _log_binom(n, j) + (k * log_b if k else 0.0)
            terms.append(t + j * log_a + math.lgamma(j + N) - (j + N) * log_rate)
    return terms


def outage_closed_form(s: OutageScenario) -> float:
    """Outage probability for one eavesdropper with unknown CSI.

    Every summand of the series is positive, so it is summed in log space;
    ``2^z`` never has to be formed explicitly.
    """
    if s.z == math.inf:
        return 1.0
    terms = _log_series_terms(s.n_ports, s.alpha, s.beta, s.z)
    if any(math.isnan(t) for t in terms):
        raise NumericalRangeError(
            "NaN in log-space series",
            {"N": s.n_ports, "alpha": s.alpha, "beta": s.beta, "z": s.z, "terms": terms},
        )
    stay = float(np.exp(special.logsumexp(terms)))
    return _absorb(1.0 - stay, "outage_closed_form")


def outage_closed_form_naive(s: OutageScenario) -> float:
    """Direct evaluation with plain powers and factorials.

    Overflows for moderate ``z``; kept as a cross-check for the log-space path.
    """
    N, al, be = s.n_ports, s.alpha, s.beta
    a = 2.0 ** s.z
    b = a - 1.0
    K = be**N * math.exp(al * (1.0 - a)) / math.factorial(N - 1)
    acc = 0.0
    for n in range(N):
        inner = 0.0
        for j in range(n + 1):
            inner += math.comb(n, j) * b ** (n - j) * a**j * math.factorial(j + N - 1) / (a * al + be) ** (j + N)
        acc += al**n / math.factorial(n) * inner
    return 1.0 - K * acc


def outage_known_bob(s: OutageScenario, bob_channel_sum: float) -> float:
    """Outage when Bob's channel sum is known and only Eve's CSI is not."""
    if bob_channel_sum < 0:
        raise ValueError("bob_channel_sum must be >= 0")
    q = (1.0 + s.w_bob * bob_channel_sum) * 2.0 ** (-s.z) - 1.0
    if q <= 0.0:
        return 1.0
    return regularized_upper_gamma(s.n_ports, s.beta * q)


class SeriesValue(NamedTuple):
    value: float
    cancellation_error: float


def eve_cdf_term(s: OutageScenario) -> SeriesValue:
    """P(Y_m < Q'') using the printed closed form with rates swapped.

    For ``z > 0`` the series alternates in sign and is summed with
    :func:`math.fsum`.  ``cancellation_error`` is ``eps`` times the sum of
    term magnitudes times the term count, a bound on the rounding error of
    the individual terms.  Note the printed form integrates over regions where
    ``Q'' < 0`` as well; compare with :func:`quadrature_eve_cdf`.
    """
    N, al, be, z = s.n_ports, s.alpha, s.beta, s.z
    log_a = -z * LN2
    a = math.exp(log_a)
    b = math.expm1(-z * LN2)  # 2^-z - 1, in [-1, 0]
    log_abs_b = math.log(-b) if b < 0 else -math.inf
    log_rate = math.log(be * a + al)
    log_K = N * math.log(al) + be * (-b) - math.lgamma(N)  # e^{beta (1 - 2^-z)} = e^{-beta b}
    signs, logs = [], []
    for n in range(N):
        head = log_K + n * math.log(be) - math.lgamma(n + 1)
        for j in range(n + 1):
            k = n - j
            if k > 0 and b == 0.0:
                continue
            lm = head + _log_binom(n, j) + (k * log_abs_b if k else 0.0)
            lm += j * log_a + math.lgamma(j + N) - (j + N) * log_rate
            logs.append(lm)
            signs.append(-1.0 if k % 2 else 1.0)
    top = max(logs)
    if top > 700:
        raise NumericalRangeError("series terms overflow", {"N": N, "alpha": al, "beta": be, "z": z, "max_log_term": top})
    terms = [sg * math.exp(lm) for sg, lm in zip(signs, logs)]
    total = math.fsum(terms)
    err = float(np.finfo(float).eps) * len(terms) * math.fsum(abs(t) for t in terms)
    if err > 0.5:
        raise NumericalRangeError(
            "alternating series lost all significant digits",
            {"N": N, "alpha": al, "beta": be, "z": z, "sum": total, "error_estimate": err},
        )
    return SeriesValue(1.0 - total, err)


def outage_worst_case(s: OutageScenario) -> float:
    """Worst case over ``s.n_eves`` iid eavesdroppers, from the printed series."""
    term = eve_cdf_term(s).value
    return 1.0 - term**s.n_eves


def quadrature_eve_cdf(s: OutageScenario, tol: float = 1e-12, power: int = 1) -> float:
    """P(Y < Q''(X)) by adaptive quadrature over Bob's Erlang channel sum.

    Integrates in the unscaled variable ``u = X''`` from the point where
    ``Q''`` turns positive; below it the event is impossible.  With
    ``power=M`` the conditional CDF is raised to the M-th power inside the
    integral, giving P(max_m Y_m < Q''(X)) for M iid eavesdroppers.
    """
    N, z = s.n_ports, s.z
    w_b, beta = s.w_bob, s.beta
    scale = 2.0 ** (-z)
    u0 = math.expm1(z * LN2) / w_b if z * LN2 < 700 else math.inf
    if u0 == math.inf:
        return 0.0
    log_norm = -math.lgamma(N)

    def integrand(u):
        q = (1.0 + w_b * u) * scale - 1.0
        if q <= 0.0 or u <= 0.0:
            return 0.0
        dens = math.exp((N - 1) * math.log(u) - u + log_norm)
        return float(special.gammainc(N, beta * q)) ** power * dens

    # Erlang(N, 1) tail beyond `hi` is below 1e-18 for every N in range.
    lo = max(u0, 0.0)
    hi = lo + N + 60.0 + 10.0 * math.sqrt(N)
    breaks = sorted({lo, hi, lo + 1.0, lo + N, lo + 2.0 * N + 5, max(N - 1.0, lo)})
    total, err_sum = 0.0, 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, err = integrate.quad(integrand, a, b, epsabs=tol, epsrel=tol, limit=200)
        total += val
        err_sum += err
    if err_sum > 1e3 * tol:
        raise QuadratureError(f"quadrature did not converge: estimated error {err_sum:.3g}", err_sum)
    return _absorb(total, "quadrature_eve_cdf")


def outage_worst_case_quadrature(s: OutageScenario) -> float:
    """``1 - quadrature_eve_cdf(s) ** M``: the product form, exact terms."""
    return 1.0 - quadrature_eve_cdf(s) ** s.n_eves


def outage_worst_case_exact(s: OutageScenario) -> float:
    """Worst-case outage with the shared Bob channel integrated out last.

    The eavesdropper events all depend on the same ``X``, so they are only
    conditionally independent; for ``M > 1`` this differs from the product
    form.
    """
    return _absorb(1.0 - quadrature_eve_cdf(s, power=s.n_eves), "outage_worst_case_exact")
