"""Time the zonal-series kernels with numba and with the numpy fallback.

The fallback is selected by ``CMCLAB_DISABLE_NUMBA=1`` at import time, so each
backend runs in its own subprocess:

    python3 benchmarks/bench_kernels.py [--points 20000] [--caps 120] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _worker(points, caps, repeat):
    import numpy as np

    from cmclab import _accel, greens, symmetry
    from cmclab._kernels import contract, zonal_table

    p, q = 1, 2
    gens = [symmetry.compile_generator(p, q, g) for g in symmetry.default_admissible_generators(p, q)]
    group = symmetry.close_group(p, q, gens)
    field = greens.solve_greens(p, q, symmetry.orbit(group), caps, caps)
    rng = np.random.default_rng(0)
    z = rng.normal(size=(points, p + q + 2))
    tau = rng.uniform(-1, 1, points)
    coef = field.series_coefficients()

    def best(fn):
        fn()  # warm-up, includes compilation
        times = []
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        return min(times)

    pt = zonal_table(p, caps, tau)
    qt = zonal_table(q, caps, tau)
    result = {
        "numba": _accel.use_numba(),
        "zonal_table": best(lambda: zonal_table(q, caps, tau)),
        "contract": best(lambda: contract(coef, pt, qt)),
        "evaluate_jets": best(lambda: greens.evaluate_jets(field, z)),
    }
    print(json.dumps(result))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--caps", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        _worker(args.points, args.caps, args.repeat)
        return
    rows = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, CMCLAB_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker", "--points", str(args.points),
                              "--caps", str(args.caps), "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        rows[label] = json.loads(out.stdout.strip().splitlines()[-1])
    print(f"{'kernel':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for key in ("zonal_table", "contract", "evaluate_jets"):
        a, b = rows["numba"][key], rows["numpy"][key]
        print(f"{key:<14}{a:>12.4f}{b:>12.4f}{b / a:>10.2f}")
    if not rows["numba"]["numba"]:
        print("numba unavailable: both columns use the numpy fallback")


if __name__ == "__main__":
    main()
