"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time); a failed compile therefore only costs speed, not correctness.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fedgnn_backdoor.kernels._csr_cy",
                ["src/fedgnn_backdoor/kernels/_csr_cy.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.optional = True
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
