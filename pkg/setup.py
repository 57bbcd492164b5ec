"""Build hooks for the optional compiled kernel extension.

The package is pure Python plus one Cython extension holding the hot
numeric kernels. The extension is strictly optional: if Cython, numpy
headers, or a C compiler are missing the build falls back to the pure
numpy kernel implementations and everything still works.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    # A failed compile must not fail the install; the package selects
    # the numpy fallback at import time when the extension is absent.
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"wardwatt: skipping compiled kernels ({exc!r})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"wardwatt: skipping {ext.name} ({exc!r})")


def _extensions():
    if os.environ.get("WARDWATT_NO_EXTENSION") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover - toolchain dependent
        return []
    ext = Extension(
        "wardwatt._kernels._compiled",
        ["src/wardwatt/_kernels/_compiled.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
