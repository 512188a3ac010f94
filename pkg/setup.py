"""Build script: compiles the hot-loop kernels when Cython and a C compiler
are available.  The package falls back to pure-Python kernels otherwise, so
a failed extension build is not fatal (set LDINT_NO_EXTENSION=1 to skip)."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LDINT_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        # -fno-builtin stops gcc from fusing sin/cos pairs into sincos, which
        # can differ by an ulp and break bitwise parity with the pure-Python
        # kernels; no fast-math for the same reason
        ext_modules = cythonize(
            [
                Extension(
                    "ldint._kernels",
                    ["src/ldint/_kernels.pyx"],
                    extra_compile_args=["-O3", "-fno-builtin"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
