"""Benchmark the compiled kernels against the pure-numpy fallback.

Run as `python -m lqgcomm.benchmark [--steps N]`. Reports steps/s for
the closed-loop simulation and the filter pass on both backends and
checks that they agree.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ._kernels import pure

try:
    from ._kernels import _native
except ImportError:  # pragma: no cover
    _native = None


def _workload(steps: int):
    rng = np.random.default_rng(2024)
    d1 = 2
    a = np.array([[0.6, 0.2], [0.1, 0.5]])
    b = np.array([[1.0, 0.0], [0.3, 1.0]])
    k_bar = 0.3 * np.eye(2)
    l_c = 0.4 * np.eye(2)
    d_c = np.eye(2)
    s = rng.normal(size=(steps, d1))
    w = rng.normal(size=(steps, d1))
    q = rng.normal(size=(steps + 1, d1))
    x1 = np.zeros(d1)
    return a, b, k_bar, l_c, d_c, s, w, q, x1


def _time(fn, *args, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(steps: int = 1_000_000) -> dict:
    args = _workload(steps)
    results = {"steps": steps}
    t_pure, out_pure = _time(pure.sim_noisy, *args)
    results["pure_sim_s"] = t_pure
    print(f"sim_noisy   pure:     {t_pure:8.3f} s  ({steps / t_pure:12.0f} steps/s)")
    if _native is not None:
        t_nat, out_nat = _time(_native.sim_noisy,
                               *[np.ascontiguousarray(a) for a in args])
        results["native_sim_s"] = t_nat
        print(f"sim_noisy   compiled: {t_nat:8.3f} s  ({steps / t_nat:12.0f} steps/s)"
              f"  speedup x{t_pure / t_nat:.0f}")
        worst = max(float(np.max(np.abs(p - n)))
                    for p, n in zip(out_pure, out_nat))
        results["sim_max_diff"] = worst
        print(f"            max |pure - compiled| = {worst:.3e}")
        assert worst <= 1e-9, "backends disagree beyond rounding"

    a, b, k_bar, l_c, d_c, s, w, q, x1 = args
    z = out_pure[0] + 0.1
    rho1 = np.zeros(a.shape[0])
    t_pure, innov_pure = _time(pure.kf_innovations, a, d_c, l_c, z, None, rho1)
    results["pure_kf_s"] = t_pure
    print(f"kf pass     pure:     {t_pure:8.3f} s  ({steps / t_pure:12.0f} steps/s)")
    if _native is not None:
        t_nat, innov_nat = _time(_native.kf_innovations, a, d_c, l_c,
                                 np.ascontiguousarray(z), None, rho1)
        results["native_kf_s"] = t_nat
        print(f"kf pass     compiled: {t_nat:8.3f} s  ({steps / t_nat:12.0f} steps/s)"
              f"  speedup x{t_pure / t_nat:.0f}")
        worst = max(float(np.max(np.abs(p - n)))
                    for p, n in zip(innov_pure, innov_nat))
        results["kf_max_diff"] = worst
        print(f"            max |pure - compiled| = {worst:.3e}")
        assert worst <= 1e-9, "backends disagree beyond rounding"
    else:
        print("compiled kernels not built; showing the pure backend only")
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=1_000_000)
    args = parser.parse_args(argv)
    run(args.steps)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
