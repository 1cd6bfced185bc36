"""Build the optional compiled kernel; the package works without it."""
import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python kernel is selected at import time
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "cartan_forge._kernel",
                ["src/cartan_forge/_kernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
