"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy/scipy fallback is selected
at import time), so the extension is marked optional and a failed build does
not fail the install.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "uscharvest._stacked_csr",
                ["src/uscharvest/_stacked_csr.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
