"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 20] [--full-drops 3]

Times ``mm_solve`` and ``power_iteration`` for several IRS sizes, then a
full decentralized run on the default R=3 scenario, once per backend.
"""
import argparse
import time

import numpy as np

from irsadmm import kernels
from irsadmm.consensus import run_decentralized
from irsadmm.model import ScenarioConfig, generate_scenario


def _problem(n, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Z = A @ A.conj().T
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    th = np.exp(2j * np.pi * rng.random(n))
    return Z, q, th


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--full-drops", type=int, default=3)
    args = ap.parse_args(argv)

    names = sorted(kernels.BACKENDS)
    if "cython" not in names:
        print("compiled extension not built; only the python backend is timed")
    prev = kernels.BACKEND
    rows = []
    try:
        for n in (16, 48, 96):
            Z, q, th = _problem(n)
            zeta = float(np.linalg.eigvalsh(Z)[-1]) * (1 + 1e-8)
            for name in names:
                kernels.set_backend(name)
                t_mm = best_of(lambda: kernels.mm_solve(Z, q, th, zeta, 100, 0.0), args.repeat)
                t_pi = best_of(lambda: kernels.power_iteration(Z, 200, 0.0), args.repeat)
                rows.append((f"mm_solve NR={n} (100 it)", name, t_mm))
                rows.append((f"power_iteration NR={n} (200 it)", name, t_pi))

        cfg = ScenarioConfig(B=4, R=3, K=4, N=16, Nt=8)
        drops = [generate_scenario(cfg, s) for s in range(args.full_drops)]
        for name in names:
            kernels.set_backend(name)

            def full():
                for sc, ch in drops:
                    run_decentralized(sc, ch)

            rows.append((f"decentralized run x{args.full_drops}", name, best_of(full, 1)))
    finally:
        kernels.set_backend(prev)

    print(f"{'case':34s} {'backend':8s} {'seconds':>10s} {'speedup':>8s}")
    base = {case: t for case, name, t in rows if name == "python"}
    for case, name, t in rows:
        print(f"{case:34s} {name:8s} {t:10.5f} {base[case] / t:8.2f}")


if __name__ == "__main__":
    main()
