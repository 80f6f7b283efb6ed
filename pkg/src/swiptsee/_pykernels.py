"""Pure numpy implementations of the optimizer hot loops.

Same signatures and semantics as the compiled ``_ckernels`` module; used when
the extension is not built or when ``SWIPTSEE_PURE_PYTHON`` is set.
"""
import math

import numpy as np

LN2 = math.log(2.0)


def objective_grad(gb, ge, ps_bob, ps_eve, p, secure=True):
    """Total (worst-case Eve) secrecy rate and its gradient w.r.t. ``p``.

    With several eavesdroppers the gradient is that of the active Eve
    (lowest index on ties), i.e. a subgradient of the max.
    """
    K = p.shape[1]
    B = np.einsum("jk,jk->k", gb, p)
    bob_den = 1.0 + ps_bob * B
    value = np.log2(bob_den).sum()
    grad = gb * (ps_bob / (bob_den * LN2))
    if secure:
        E = ge.T @ p
        worst = np.argmax(E, axis=0)
        Ew = E[worst, np.arange(K)]
        eve_den = 1.0 + ps_eve * Ew
        value -= np.log2(eve_den).sum()
        grad -= ge[:, worst] * (ps_eve / (eve_den * LN2))
    return value / K, grad / K


def _project_rows(y, pmax):
    # x >= 0 and sum_k x[i, k] <= pmax[i], row by row
    x = np.maximum(y, 0.0)
    over = x.sum(axis=1) > pmax
    for i in np.flatnonzero(over):
        u = np.sort(y[i])[::-1]
        css = np.cumsum(u) - pmax[i]
        ks = np.arange(1, u.size + 1)
        rho = np.flatnonzero(u - css / ks > 0)[-1]
        theta = css[rho] / (rho + 1.0)
        x[i] = np.maximum(y[i] - theta, 0.0)
    return x


def max_violation(x, pmax, A, c):
    v = max(0.0, float(-x.min()), float((x.sum(axis=1) - pmax).max()))
    if len(c):
        v = max(v, float((np.tensordot(A, x, axes=2) - c).max()))
    return v


def project(v, pmax, A, c, max_iter=5000, tol=1e-13):
    """Dykstra projection onto {x >= 0, row sums <= pmax, <A_l, x> <= c_l}.

    ``A`` has shape (L, N, K).  Returns ``(x, cycles, converged)``.
    """
    x = np.array(v, dtype=float)
    L = len(c)
    if L == 0:
        return _project_rows(x, pmax), 1, True
    norms = np.einsum("lij,lij->l", A, A)
    q = np.zeros((L + 1,) + x.shape)
    scale = 1.0 + float(np.abs(x).max())
    for cycle in range(1, max_iter + 1):
        prev = x
        q_prev = q.copy()
        y = x + q[0]
        x = _project_rows(y, pmax)
        q[0] = y - x
        for l in range(L):
            y = x + q[l + 1]
            s = float(np.sum(A[l] * y)) - c[l]
            x = y - (s / norms[l]) * A[l] if s > 0 and norms[l] > 0 else y
            q[l + 1] = y - x
        # x alone can sit still for a cycle while the corrections q still move
        change = max(float(np.abs(x - prev).max()), float(np.abs(q - q_prev).max()))
        if change <= tol * scale and max_violation(x, pmax, A, c) <= tol * scale:
            return x, cycle, True
    return x, max_iter, False


def _prefixes(d, K, R):
    """Grid index tuples for the first ``d`` variables, row budgets respected.

    Variables are the entries of p flattened port-major; the last one varies
    fastest.
    """
    def rec(prefix, used):
        if len(prefix) == d:
            yield prefix
            return
        if len(prefix) % K == 0:
            used = 0
        for t in range(R + 1 - used):
            yield from rec(prefix + (t,), used + t)
    yield from rec((), 0)


def grid_search(gb, ge, ps_bob, ps_eve, pmax, pc, hb, emin, he, cap, resolution, secure=True):
    """Exhaustive search over p[i, k] = pmax[i] * t / (resolution - 1).

    Points violating the per-port budget, a Bob harvest floor or an Eve
    harvest cap are skipped.  Returns ``(best_value, best_p)``; ``best_p`` is
    ``None`` when no grid point is feasible.  Ties keep the first point in
    port-major lexicographic order.
    """
    N, K = gb.shape
    d = N * K
    R = resolution - 1
    nb = min(d, 2)  # trailing variables handled as one vectorised block
    tail = np.indices((R + 1,) * nb).reshape(nb, -1).T  # first column slowest
    tol_b = 1e-12 * np.maximum(1.0, np.abs(emin))
    tol_e = 1e-12 * np.maximum(1.0, np.abs(np.where(np.isfinite(cap), cap, 0.0)))
    step = pmax / R

    best_val, best_t = -np.inf, None
    for prefix in _prefixes(d - nb, K, R):
        t = np.zeros((len(tail), d), dtype=np.int64)
        t[:, : d - nb] = prefix
        t[:, d - nb:] = tail
        counts = t.reshape(-1, N, K)
        ok = np.all(counts.sum(axis=2) <= R, axis=1)
        if not ok.any():
            continue
        p = counts * step[None, :, None]
        rowsum = p.sum(axis=2)
        ok &= np.all(rowsum @ hb.T >= emin - tol_b, axis=1)
        ok &= np.all(rowsum @ he.T <= cap + tol_e, axis=1)
        den = rowsum.sum(axis=1) + pc
        ok &= den > 0
        if not ok.any():
            continue
        num = np.log2(1.0 + ps_bob * np.einsum("njk,jk->nk", p, gb)).sum(axis=1)
        if secure:
            E = np.einsum("njk,jm->nmk", p, ge).max(axis=1)
            num = num - np.log2(1.0 + ps_eve * E).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(ok, num / K / np.where(ok, den, 1.0), -np.inf)
        j = int(np.argmax(val))
        if val[j] > best_val:
            best_val, best_t = float(val[j]), counts[j]
    if best_t is None:
        return -np.inf, None
    return best_val, best_t * step[:, None]
