"""Build script: compiles the optional Cython stepper kernel.

The package works without the extension (a pure-Python twin is selected at
import time), so a failed compile only costs speed.  Set FLOWBOUND_NO_EXT=1
to skip the extension build entirely.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    if os.environ.get("FLOWBOUND_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        return []
    ext = Extension(
        "flowbound._stepper",
        ["src/flowbound/_stepper.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


class optional_build_ext(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"flowbound: extension build skipped ({exc}); "
                  "using pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"flowbound: building {ext.name} failed ({exc}); "
                  "using pure-Python kernels")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
