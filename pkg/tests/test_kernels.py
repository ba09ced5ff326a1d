import os
import subprocess
import sys

import numpy as np
import pytest

from reslab import _kernels_py, kernels
from reslab.torus_maps import catalog_map

try:
    from reslab import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


@pytest.fixture
def args():
    return catalog_map("cat_kick", 0.01).kernel_args()


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    forced = os.environ.get("RESLAB_PURE_PYTHON", "") not in ("", "0")
    assert (kernels.BACKEND == "cython") == (compiled is not None and not forced)


def test_pure_python_switch():
    env = dict(os.environ, RESLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import reslab; print(reslab.BACKEND)"], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "python"


@needs_ext
def test_map_and_jacobian_agree(args):
    pts = np.random.default_rng(0).random((100, 2))
    a = _kernels_py.map_and_jacobian(*args, pts)
    b = compiled.map_and_jacobian(*args, pts)
    assert np.allclose(a[0], b[0], atol=1e-14, rtol=0) and np.allclose(a[1], b[1], atol=1e-13, rtol=0)


@needs_ext
def test_iterate_agree(args):
    pts = np.random.default_rng(1).random((50, 2))
    a = _kernels_py.iterate_with_jacobian(*args, pts, 5)
    b = compiled.iterate_with_jacobian(*args, pts, 5)
    assert np.allclose(a[0], b[0], atol=1e-12, rtol=0) and np.allclose(a[1], b[1], rtol=1e-12)


@needs_ext
def test_orbits_agree(args):
    a = _kernels_py.orbit(*args, 0.1, 0.2, 200)
    b = compiled.orbit(*args, 0.1, 0.2, 200)
    assert a.shape == b.shape == (201, 2)
    assert np.max(np.abs(a[:20] - b[:20])) <= 1e-12
    ai = _kernels_py.inverse_orbit(*args, 0.3, 0.4, 20)
    bi = compiled.inverse_orbit(*args, 0.3, 0.4, 20)
    assert np.max(np.abs(ai - bi)) <= 1e-12


def test_inverse_undoes_forward(args):
    fwd = kernels.orbit(*args, 0.25, 0.6, 1)
    back = kernels.inverse_orbit(*args, float(fwd[1, 0]), float(fwd[1, 1]), 1)
    d = back[1] - fwd[0]
    assert np.max(np.abs(d - np.round(d))) <= 1e-13
