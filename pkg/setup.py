"""Build script: compiles the cubic-solver hot kernels when a C toolchain is
available, otherwise installs with the pure-NumPy fallback only."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CNSMAX_SKIP_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/cnsmax/_kernels/_fast.pyx"],
            compiler_directives={"language_level": "3"},
        )
        for ext in ext_modules:
            ext.include_dirs.append(np.get_include())
            ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
