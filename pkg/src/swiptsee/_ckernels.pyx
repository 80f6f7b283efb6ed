# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled optimizer kernels; see ``_pykernels`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, log2, fabs, INFINITY

cnp.import_array()

cdef double LN2 = log(2.0)


def objective_grad(const double[:, ::1] gb, const double[:, ::1] ge,
                   const double[::1] ps_bob, double ps_eve,
                   const double[:, ::1] p, bint secure=True):
    cdef Py_ssize_t N = p.shape[0], K = p.shape[1], M = ge.shape[1]
    cdef Py_ssize_t i, k, m, worst
    cdef double B, E, best, value = 0.0, cb, ce
    grad_arr = np.empty((N, K))
    cdef double[:, ::1] grad = grad_arr
    for k in range(K):
        B = 0.0
        for i in range(N):
            B += gb[i, k] * p[i, k]
        value += log2(1.0 + ps_bob[k] * B)
        cb = ps_bob[k] / ((1.0 + ps_bob[k] * B) * LN2)
        for i in range(N):
            grad[i, k] = gb[i, k] * cb
        if secure:
            worst = 0
            best = -INFINITY
            for m in range(M):
                E = 0.0
                for i in range(N):
                    E += ge[i, m] * p[i, k]
                if E > best:
                    best = E
                    worst = m
            value -= log2(1.0 + ps_eve * best)
            ce = ps_eve / ((1.0 + ps_eve * best) * LN2)
            for i in range(N):
                grad[i, k] -= ge[i, worst] * ce
    for i in range(N):
        for k in range(K):
            grad[i, k] /= K
    return value / K, grad_arr


cdef void _project_rows(double[:, ::1] y, const double[::1] pmax, double[:, ::1] out, double[::1] buf) noexcept nogil:
    cdef Py_ssize_t N = y.shape[0], K = y.shape[1], i, k, j
    cdef double s, u, css, theta
    for i in range(N):
        s = 0.0
        for k in range(K):
            out[i, k] = y[i, k] if y[i, k] > 0.0 else 0.0
            s += out[i, k]
        if s <= pmax[i]:
            continue
        # sort row descending into buf (K is small)
        for k in range(K):
            u = y[i, k]
            j = k
            while j > 0 and buf[j - 1] < u:
                buf[j] = buf[j - 1]
                j -= 1
            buf[j] = u
        css = 0.0
        theta = 0.0
        for k in range(K):
            css += buf[k]
            if buf[k] - (css - pmax[i]) / (k + 1.0) > 0.0:
                theta = (css - pmax[i]) / (k + 1.0)
        for k in range(K):
            u = y[i, k] - theta
            out[i, k] = u if u > 0.0 else 0.0


cdef double _violation(double[:, ::1] x, const double[::1] pmax, const double[:, :, ::1] A,
                       const double[::1] c) noexcept nogil:
    cdef Py_ssize_t N = x.shape[0], K = x.shape[1], L = c.shape[0], i, k, l
    cdef double v = 0.0, s
    for i in range(N):
        s = 0.0
        for k in range(K):
            if -x[i, k] > v:
                v = -x[i, k]
            s += x[i, k]
        if s - pmax[i] > v:
            v = s - pmax[i]
    for l in range(L):
        s = 0.0
        for i in range(N):
            for k in range(K):
                s += A[l, i, k] * x[i, k]
        if s - c[l] > v:
            v = s - c[l]
    return v


def max_violation(double[:, ::1] x, const double[::1] pmax, const double[:, :, ::1] A, const double[::1] c):
    return _violation(x, pmax, A, c)


def project(v, const double[::1] pmax, const double[:, :, ::1] A, const double[::1] c,
            int max_iter=5000, double tol=1e-13):
    cdef double[:, ::1] x = np.array(v, dtype=float, order="C")
    cdef Py_ssize_t N = x.shape[0], K = x.shape[1], L = c.shape[0]
    cdef Py_ssize_t i, k, l, cycle
    cdef double[:, ::1] y = np.empty((N, K))
    cdef double[:, ::1] prev = np.empty((N, K))
    cdef double[:, :, ::1] q = np.zeros((L + 1, N, K))
    cdef double[::1] buf = np.empty(K)
    cdef double[::1] norms = np.zeros(L)
    cdef double scale = 0.0, s, step, change, u
    if L == 0:
        out = np.empty((N, K))
        _project_rows(x, pmax, out, buf)
        return out, 1, True
    for i in range(N):
        for k in range(K):
            if fabs(x[i, k]) > scale:
                scale = fabs(x[i, k])
    scale += 1.0
    for l in range(L):
        for i in range(N):
            for k in range(K):
                norms[l] += A[l, i, k] * A[l, i, k]
    cdef bint converged = False
    with nogil:
        for cycle in range(1, max_iter + 1):
            change = 0.0  # largest move of x or of any correction q this cycle
            for i in range(N):
                for k in range(K):
                    prev[i, k] = x[i, k]
                    y[i, k] = x[i, k] + q[0, i, k]
            _project_rows(y, pmax, x, buf)
            for i in range(N):
                for k in range(K):
                    u = y[i, k] - x[i, k]
                    if fabs(u - q[0, i, k]) > change:
                        change = fabs(u - q[0, i, k])
                    q[0, i, k] = u
            for l in range(L):
                s = 0.0
                for i in range(N):
                    for k in range(K):
                        y[i, k] = x[i, k] + q[l + 1, i, k]
                        s += A[l, i, k] * y[i, k]
                s -= c[l]
                step = s / norms[l] if (s > 0.0 and norms[l] > 0.0) else 0.0
                for i in range(N):
                    for k in range(K):
                        x[i, k] = y[i, k] - step * A[l, i, k]
                        u = y[i, k] - x[i, k]
                        if fabs(u - q[l + 1, i, k]) > change:
                            change = fabs(u - q[l + 1, i, k])
                        q[l + 1, i, k] = u
            for i in range(N):
                for k in range(K):
                    if fabs(x[i, k] - prev[i, k]) > change:
                        change = fabs(x[i, k] - prev[i, k])
            if change <= tol * scale and _violation(x, pmax, A, c) <= tol * scale:
                converged = True
                break
    return np.asarray(x), (cycle if converged else max_iter), converged


def grid_search(const double[:, ::1] gb, const double[:, ::1] ge, const double[::1] ps_bob, double ps_eve,
                const double[::1] pmax, double pc, const double[:, ::1] hb, const double[::1] emin,
                const double[:, ::1] he, const double[::1] cap, int resolution, bint secure=True):
    cdef Py_ssize_t N = gb.shape[0], K = gb.shape[1], M = ge.shape[1]
    cdef Py_ssize_t d = N * K, R = resolution - 1
    cdef Py_ssize_t W = K + M * K + K + M + 1
    cdef Py_ssize_t oE = K, oHB = K + M * K, oHE = K + M * K + K, oT = W - 1
    cdef Py_ssize_t level, i, k, m, w, kk
    cdef double pw, num, den, val, best_val = -INFINITY, worst
    cdef bint ok, found = False
    cdef double[:, ::1] acc = np.zeros((d + 1, W))
    cdef long[::1] t = np.zeros(d, dtype=np.int_)
    cdef long[::1] used = np.zeros(d, dtype=np.int_)
    cdef long[::1] best_t = np.zeros(d, dtype=np.int_)
    cdef double[::1] step = np.empty(N)
    cdef double[::1] tol_b = np.empty(K)
    cdef double[::1] tol_e = np.empty(M)
    for i in range(N):
        step[i] = pmax[i] / R
    for k in range(K):
        tol_b[k] = 1e-12 * (fabs(emin[k]) if fabs(emin[k]) > 1.0 else 1.0)
    for m in range(M):
        tol_e[m] = 1e-12 * (fabs(cap[m]) if (fabs(cap[m]) > 1.0 and cap[m] < INFINITY) else 1.0)

    cdef Py_ssize_t last = d - 1, il = (d - 1) // K, kl = (d - 1) % K
    cdef long tl, ub
    cdef double base_num, pl, B, E
    with nogil:
        if d == 1:
            level = -1  # no prefix variables; go straight to the inner loop once
        else:
            level = 0
            t[0] = -1
        while True:
            if d > 1:
                t[level] += 1
                if t[level] > R - used[level]:
                    level -= 1
                    if level < 0:
                        break
                    continue
                i = level // K
                k = level % K
                pw = step[i] * t[level]
                for w in range(W):
                    acc[level + 1, w] = acc[level, w]
                acc[level + 1, k] += gb[i, k] * pw
                for m in range(M):
                    acc[level + 1, oE + m * K + k] += ge[i, m] * pw
                    acc[level + 1, oHE + m] += he[m, i] * pw
                for kk in range(K):
                    acc[level + 1, oHB + kk] += hb[kk, i] * pw
                acc[level + 1, oT] += pw
                if level + 1 < last:
                    level += 1
                    t[level] = -1
                    used[level] = 0 if level % K == 0 else used[level - 1] + t[level - 1]
                    continue
            used[last] = 0 if last % K == 0 else used[last - 1] + t[last - 1]
            # every user but kl is fully assigned: its rate term is fixed
            base_num = 0.0
            for kk in range(K):
                if kk == kl:
                    continue
                base_num += log2(1.0 + ps_bob[kk] * acc[last, kk])
                if secure:
                    worst = -INFINITY
                    for m in range(M):
                        if acc[last, oE + m * K + kk] > worst:
                            worst = acc[last, oE + m * K + kk]
                    base_num -= log2(1.0 + ps_eve * worst)
            ub = R - used[last]
            for tl in range(ub + 1):
                pl = step[il] * tl
                ok = True
                for kk in range(K):
                    if acc[last, oHB + kk] + hb[kk, il] * pl < emin[kk] - tol_b[kk]:
                        ok = False
                for m in range(M):
                    if acc[last, oHE + m] + he[m, il] * pl > cap[m] + tol_e[m]:
                        ok = False
                den = acc[last, oT] + pl + pc
                if not ok or den <= 0.0:
                    continue
                B = acc[last, kl] + gb[il, kl] * pl
                num = base_num + log2(1.0 + ps_bob[kl] * B)
                if secure:
                    worst = -INFINITY
                    for m in range(M):
                        E = acc[last, oE + m * K + kl] + ge[il, m] * pl
                        if E > worst:
                            worst = E
                    num -= log2(1.0 + ps_eve * worst)
                val = num / K / den
                if val > best_val:
                    best_val = val
                    found = True
                    for w in range(last):
                        best_t[w] = t[w]
                    best_t[last] = tl
            if d == 1:
                break
    if not found:
        return -np.inf, None
    counts = np.asarray(best_t).reshape(N, K)
    return best_val, counts * (np.asarray(pmax) / R)[:, None]
