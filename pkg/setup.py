"""Build script: compiles the optional simulation core extension.

The package works without the extension (a pure-Python twin of the kernel is
selected at import time), so a failed compile degrades to a source-only
install instead of aborting.  Set TIERSIM_NO_EXT=1 to skip the build
explicitly.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("TIERSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tiersim._core",
                    ["src/tiersim/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        print(
            "tiersim: Cython not available, building without the compiled core",
            file=sys.stderr,
        )

setup(ext_modules=ext_modules)
