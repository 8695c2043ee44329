# Builds the optional compiled kernel extension.  The package works without
# it (a pure-numpy fallback is selected at import), but the per-symbol
# adaptive updates are several times faster compiled.
#
#   pip install -e . --no-build-isolation
# or, for an in-tree build of just the extension:
#   python setup.py build_ext --inplace

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "uwbjio._kernels",
                ["src/uwbjio/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
