"""Build script: compiles the optional fast kernel extension when Cython is
available. The package works without it (numpy fallback selected at import)."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("BLACKBOXLAB_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "blackboxlab._kernels._fast",
                    ["src/blackboxlab/_kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
