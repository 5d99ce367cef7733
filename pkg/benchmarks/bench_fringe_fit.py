"""Compare the compiled fringe-fit kernel against the numpy fallback.

The Monte-Carlo error pipeline runs hundreds of fits per waveguide, so the
inner Gauss-Newton loop is the only part of the package worth compiling.
This script times both implementations on the same resampled scans and
checks that they agree on the fitted parameters.

Run:  python3 benchmarks/bench_fringe_fit.py [--fits 800] [--points 81]
"""

import argparse
import math
import time

import numpy as np

from sppdecoh._kernels import py_backend

try:
    from sppdecoh._kernels import _cyfringe
except ImportError:
    _cyfringe = None

LAMBDA0 = 810e-9
KNOWNS = (0.5, 0.5, 1.33, 0.0, 1.33)  # R, T, g1p, g2p, gt1
TRUTH = (1.117, 2.2, 1.0, 72000.0)  # gamma_eff, delta, s, i_in


def make_instances(n_fits: int, n_points: int, seed: int = 0):
    x = np.arange(n_points) * 20e-9
    mean = py_backend.fringe_curve(x, TRUTH, KNOWNS, LAMBDA0)
    rng = np.random.default_rng(seed)
    instances = []
    for _ in range(n_fits):
        y = rng.poisson(mean).astype(float)
        w = 1.0 / np.maximum(y, 1.0)
        instances.append((y, w))
    return x, instances


def run(backend, x, instances):
    p0 = TRUTH
    results = []
    start = time.perf_counter()
    for y, w in instances:
        params, _, _, _, converged = backend.lm_fit_fringe(
            x, y, w, p0, KNOWNS, LAMBDA0
        )
        results.append((params, converged))
    elapsed = time.perf_counter() - start
    return elapsed, results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fits", type=int, default=800)
    parser.add_argument("--points", type=int, default=81)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    x, instances = make_instances(args.fits, args.points, args.seed)

    t_py, r_py = run(py_backend, x, instances)
    print(f"python backend: {args.fits} fits in {t_py:.3f} s "
          f"({1e3 * t_py / args.fits:.3f} ms/fit)")

    if _cyfringe is None:
        print("compiled backend not available; nothing to compare")
        return 0

    t_cy, r_cy = run(_cyfringe, x, instances)
    print(f"cython backend: {args.fits} fits in {t_cy:.3f} s "
          f"({1e3 * t_cy / args.fits:.3f} ms/fit)")
    print(f"speedup: {t_py / t_cy:.1f}x")

    worst = 0.0
    for (p_a, c_a), (p_b, c_b) in zip(r_py, r_cy):
        if c_a != c_b:
            print("convergence flags disagree")
            return 1
        scale = np.maximum(np.abs(p_a), 1.0)
        worst = max(worst, float(np.max(np.abs(p_a - p_b) / scale)))
    print(f"worst relative parameter disagreement: {worst:.3e}")
    if not (math.isfinite(worst) and worst < 1e-8):
        print("backends disagree beyond tolerance")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
