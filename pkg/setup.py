"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension; pitchclust._kernels
falls back to a NumPy implementation at import time when the compiled
module is absent or fails to build.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Let the build proceed when the extension cannot be compiled."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, headers, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the pitchclust Cython kernels failed ({exc}); "
            "installing with the pure-NumPy fallback only.",
            file=sys.stderr,
        )


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(
            f"WARNING: {exc}; pitchclust will use the pure-NumPy kernel fallback.",
            file=sys.stderr,
        )
        return []
    ext = Extension(
        "pitchclust._kernels._core",
        ["src/pitchclust/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
