"""Compare the compiled and numpy kernel backends on the desk map.

Usage: python benchmarks/bench_kernels.py [--repeat R]

Each kernel is timed with ``timeit`` (best of R) on both backends and the
outputs are compared.  Orbits are compared over their first 20 steps only:
rounding differences grow like lambda^n along a chaotic orbit.  Exits with status 1 if the compiled extension
is not built.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from reslab import _kernels_py
from reslab.torus_maps import DESK_EPSILON, DESK_MAP, catalog_map

try:
    from reslab import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None


def cases(args):
    rng = np.random.default_rng(0)
    pts = rng.random((200_000, 2))
    return {
        "orbit (10^6 steps)": lambda m: m.orbit(*args, 0.1, 0.2, 10**6),
        "inverse_orbit (10^5 steps)": lambda m: m.inverse_orbit(*args, 0.1, 0.2, 10**5),
        "map_and_jacobian (2e5 pts)": lambda m: m.map_and_jacobian(*args, pts),
        "iterate_with_jacobian (2e4 pts, n=10)": lambda m: m.iterate_with_jacobian(*args, pts[:20_000], 10),
    }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    a = p.parse_args(argv)
    if _kernels_c is None:
        print("compiled extension reslab._kernels is not built; run `pip install -e . --no-build-isolation`")
        return 1
    args = catalog_map(DESK_MAP, DESK_EPSILON).kernel_args()
    print(f"{'kernel':40s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max rel diff':>12s}")
    for name, fn in cases(args).items():
        out_py, out_c = fn(_kernels_py), fn(_kernels_c)
        flat_py = np.concatenate([np.ravel(o) for o in (out_py if isinstance(out_py, tuple) else (out_py,))])
        flat_c = np.concatenate([np.ravel(o) for o in (out_c if isinstance(out_c, tuple) else (out_c,))])
        if name.startswith(("orbit", "inverse_orbit")):
            flat_py, flat_c = np.ravel(out_py[:20]), np.ravel(out_c[:20])
        diff = float(np.max(np.abs(flat_py - flat_c) / np.maximum(1.0, np.abs(flat_py))))
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=a.repeat))
        t_c = min(timeit.repeat(lambda: fn(_kernels_c), number=1, repeat=a.repeat))
        print(f"{name:40s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:7.1f}x {diff:12.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
