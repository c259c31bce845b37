"""Compare the compiled and pure-Python profile kernels.

    python3 benchmarks/bench_kernels.py [--dt SECONDS] [--repeat N]
"""
import argparse
import math
import timeit

import numpy as np

from arbcsim import _kernels
from arbcsim.battery import ProfileParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dt", type=float, default=1.0, help="tick length in seconds")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    params = ProfileParams()
    dt_h = args.dt / 3600.0
    n = int(math.ceil(params.session_cutoff_h / dt_h)) + 2
    prm = params.packed()
    kernels = {"python": _kernels.python_profile_trajectory}
    if _kernels.cython_profile_trajectory is not None:
        kernels["cython"] = _kernels.cython_profile_trajectory
    else:
        print("compiled extension not built; timing the fallback only")

    results = {name: k(prm, dt_h, n) for name, k in kernels.items()}
    ticks = len(results["python"][0])
    times = {}
    for name, k in kernels.items():
        best = min(timeit.repeat(lambda: k(prm, dt_h, n), number=1, repeat=args.repeat))
        times[name] = best
        print(f"{name:>7}: {best * 1e3:9.2f} ms  ({ticks} ticks, {best / ticks * 1e9:7.1f} ns/tick)")
    if "cython" in times:
        same = all(np.array_equal(a, b) for a, b in zip(results["python"][:5], results["cython"][:5]))
        print(f"speedup: {times['python'] / times['cython']:.1f}x, outputs identical: {same}")


if __name__ == "__main__":
    main()
