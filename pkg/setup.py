"""Build script for the optional native kernel extension.

The package is fully functional without the extension (a vectorized NumPy
fallback is selected at import time), so a failed compile downgrades to a
warning instead of aborting the install.
"""

import sys

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building partcomplete.kernels._native failed ({exc}); "
            "the pure NumPy kernel fallback will be used.",
            file=sys.stderr,
        )


def extensions():
    from Cython.Build import cythonize

    ext = Extension(
        "partcomplete.kernels._native",
        ["src/partcomplete/kernels/_native.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
