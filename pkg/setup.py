"""Build shim for the compiled sampling kernel.

The package works without the extension (a vectorized numpy fallback is
selected at import time); the extension just makes long stochastic
simulations faster.
"""

import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "frontier_lab._kernels._contract",
        ["src/frontier_lab/_kernels/_contract.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
