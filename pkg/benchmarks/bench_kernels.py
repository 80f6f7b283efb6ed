"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-repeat time for each backend and
the speedup, then a full ``solve_p1`` under each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from swiptsee import kernels


def inputs(rng, N=4, K=3, M=2, L=5):
    gb, ge = rng.exponential(size=(N, K)), rng.exponential(size=(N, M))
    psb = rng.uniform(0.3, 0.9, K)
    p = rng.uniform(0, 1, (N, K))
    pmax = np.full(N, 1.0)
    A = rng.normal(size=(L, N, K))
    A /= np.sqrt(np.einsum("lij,lij->l", A, A))[:, None, None]
    c = np.einsum("lij,ij->l", A, p * 0.3) + 0.1
    v = rng.normal(scale=2.0, size=(N, K))
    return gb, ge, psb, p, pmax, A, c, v


def cases(rng):
    gb, ge, psb, p, pmax, A, c, v = inputs(rng)
    g1, e1 = rng.exponential(3.0, size=(3, 2)), rng.exponential(0.5, size=(3, 2))
    hb, he = rng.uniform(0.1, 1, (2, 3)), rng.uniform(0.1, 1, (2, 3))
    pm3 = np.ones(3)
    return {
        "objective_grad": (lambda b: b.objective_grad(gb, ge, psb, 0.5, p), 2000),
        "project": (lambda b: b.project(v, pmax, A, c, 20000), 200),
        "grid_search": (lambda b: b.grid_search(g1, e1, psb[:2], 0.5, pm3, 0.3, hb, 0.2 * hb @ pm3,
                                                  he, 0.8 * he @ pm3, 9), 3),
    }


def solve_time(repeat):
    """Best wall time of ``solve_p1`` on a fixed 4-port, 2-user, 2-Eve instance."""
    from swiptsee import ChannelRealization, SystemConfig, solve_p1
    rng = np.random.default_rng(7)
    cfg = SystemConfig(n_ports=4, n_users=2, n_eves=2, circuit_power=0.5, max_port_power=1.0,
                       noise_bob=1.0, noise_eve=1.0)
    ch = ChannelRealization(rng.exponential(5.0, (4, 2)), rng.exponential(0.5, (4, 2)))
    return min(timeit.repeat(lambda: solve_p1(cfg, ch), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--solve-only", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.solve_only:
        print(f"{kernels.BACKEND} {solve_time(args.repeat) * 1e3:.1f}")
        return
    try:
        backends = {"python": kernels.get_backend("python"), "cython": kernels.get_backend("cython")}
    except ImportError:
        sys.exit("compiled kernels not built: run `python setup.py build_ext --inplace` first")
    print(f"{'kernel':<16}{'python':>12}{'cython':>12}{'speedup':>10}")
    for name, (fn, number) in cases(np.random.default_rng(0)).items():
        t = {k: min(timeit.repeat(lambda: fn(b), number=number, repeat=args.repeat)) / number
             for k, b in backends.items()}
        print(f"{name:<16}{t['python'] * 1e6:>10.1f}us{t['cython'] * 1e6:>10.1f}us{t['python'] / t['cython']:>9.1f}x")
    # end to end: the backend is fixed at import, so each run gets a fresh interpreter
    t = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SWIPTSEE_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, __file__, "--solve-only", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        name, ms = out.stdout.split()
        t[name] = float(ms)
    print(f"{'solve_p1':<16}{t['python']:>10.1f}ms{t['cython']:>10.1f}ms{t['python'] / t['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
