"""Compare the compiled and pure-Python SSA kernels.

Usage: python3 benchmarks/bench_ssa.py [--repeats 5] [--scale 1 10]

Each case simulates one bit-1 window at the default parameters, with the
receptor count multiplied by ``scale``. Both backends get identically
seeded generators and must return identical counts.
"""

import argparse
import time

import numpy as np

from fddmc import SystemConfig, derive_all
from fddmc._core import available_backends
from fddmc.kinetics import LigandKinetics, simulate_bound_counts


def run_once(cfg, derived, kin, backend, seed):
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    series = simulate_bound_counts(
        cfg.N_r, derived.c_m1, derived.mu_ci, kin, None, cfg.N, cfg.dt, rng, backend=backend
    )
    return time.perf_counter() - start, series.counts


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--scale", type=int, nargs="+", default=[1, 10])
    args = ap.parse_args(argv)

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "cython" not in backends:
        print("compiled kernel not built; only the fallback is timed")

    for scale in args.scale:
        cfg = SystemConfig().replace(N_r=SystemConfig().N_r * scale)
        derived = derive_all(cfg)
        kin = LigandKinetics.from_config(cfg)
        best, outputs = {}, {}
        for name in backends:
            run_once(cfg, derived, kin, name, 0)  # warm-up
            times = []
            for r in range(args.repeats):
                dt_run, counts = run_once(cfg, derived, kin, name, r)
                times.append(dt_run)
                outputs.setdefault(name, []).append(counts)
            best[name] = min(times)
        line = f"N_r={cfg.N_r:>6d}  " + "  ".join(f"{n}: {best[n] * 1e3:8.2f} ms" for n in backends)
        if len(backends) == 2:
            same = all(np.array_equal(a, b) for a, b in zip(*outputs.values()))
            line += f"  speedup {best['python'] / best['cython']:6.1f}x  identical={same}"
        print(line)


if __name__ == "__main__":
    main()
