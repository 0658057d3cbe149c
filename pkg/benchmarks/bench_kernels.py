"""Compare the numba and numpy simplex kernels.

Two measurements per backend:

* micro: the basis-inverse update and the primal ratio test on random data
  of the size the medium instance produces;
* solve: one end-to-end MILP solve of the bundled medium instance, run in a
  fresh interpreter with PLANNER_NUMBA set so the backend switch is the real one.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from intermodal.solver import kernels

SOLVE = ("import time; from intermodal.io import load; from intermodal.pipeline import solve_instance;"
         "from intermodal.model import RiskParams; from intermodal.solver import BACKEND;"
         "inst, scen = load('medium'); solve_instance(inst, scen, RiskParams(0.5, 0.5));"  # warm-up / jit
         "t = time.perf_counter(); o = solve_instance(inst, scen, RiskParams(0.5, 0.5));"
         "print(BACKEND, time.perf_counter() - t, o.objective)")


def micro(backend, m: int, repeat: int) -> dict[str, float]:
    price, ratio, _, update = backend
    rng = np.random.default_rng(0)
    binv = rng.normal(size=(m, m))
    alpha = rng.normal(size=m) + 2.0
    xb = rng.uniform(0, 5, m)
    lbb, ubb = np.zeros(m), np.full(m, 6.0)
    basis = np.arange(m, dtype=np.int64)
    d = rng.normal(size=3 * m)
    status = rng.integers(0, 3, 3 * m).astype(np.int64)
    # one call first so numba compile time stays out of the numbers
    update(binv.copy(), alpha, 0)
    ratio(alpha, xb, lbb, ubb, 1.0, np.inf, 1e-9, 1e-9, False, basis)
    price(d, status, 1e-9, False)
    n = 200
    return {
        "update": min(timeit.repeat(lambda: update(binv, alpha, 1), number=n, repeat=repeat)) / n,
        "ratio": min(timeit.repeat(lambda: ratio(alpha, xb, lbb, ubb, 1.0, np.inf, 1e-9, 1e-9, False, basis),
                                   number=n, repeat=repeat)) / n,
        "price": min(timeit.repeat(lambda: price(d, status, 1e-9, False), number=n, repeat=repeat)) / n,
    }


def solve_time(flag: str) -> tuple[str, float, float]:
    env = dict(os.environ, PLANNER_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True, text=True, check=True)
    name, secs, obj = out.stdout.split()
    return name, float(secs), float(obj)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--rows", type=int, default=300, help="basis dimension for the micro benchmark")
    args = ap.parse_args()

    backends = [("numpy", kernels.numpy_kernels)]
    if kernels.numba_kernels is not None:
        backends.append(("numba", kernels.numba_kernels))
    print(f"micro, basis dimension {args.rows} (microseconds per call)")
    for name, backend in backends:
        t = micro(backend, args.rows, args.repeat)
        print(f"  {name:6s} " + "  ".join(f"{k} {v * 1e6:9.2f}" for k, v in t.items()))

    print("end-to-end medium solve, lambda 0.5, alpha 0.5")
    for flag in ("0", "1"):
        name, secs, obj = solve_time(flag)
        print(f"  {name:6s} {secs:8.3f} s  objective {obj:.6f}")


if __name__ == "__main__":
    main()
