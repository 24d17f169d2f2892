"""Build script: compiles the optional Cython routing kernel.

If the extension cannot be built (no compiler, no Cython), the package
installs anyway and falls back to the pure-Python kernel at import time.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "mrpp._kernel._cyroute",
                ["src/mrpp/_kernel/_cyroute.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"mrpp: skipping Cython extension build ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
