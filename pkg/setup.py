"""Build script: compiles the optional tridiagonal/CN kernel extension.

The extension is a speed-up only. If Cython or a C compiler is missing the
build falls through and the package installs with the pure NumPy/SciPy
kernels selected at import time.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "ratiofield._kernels._core",
        ["src/ratiofield/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


class OptionalBuildExt(build_ext):
    """Swallow extension build failures; the fallback kernels cover them."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
