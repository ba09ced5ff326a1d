"""Build the optional Cython kernels.  The package works without them."""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RESLAB_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext = Extension(
            "reslab._kernels",
            ["src/reslab/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
