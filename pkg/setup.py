"""Build script for the optional compiled fringe-fit kernel.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the Cython build is attempted only when Cython is
available.  Build in place with

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "sppdecoh._kernels._cyfringe",
                ["src/sppdecoh/_kernels/_cyfringe.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
