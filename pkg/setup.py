"""Build script: compiles the optional Cython stepping kernel.

The package works without the extension (a pure-numpy fallback with the
same semantics is selected at import time), so a failed extension build
degrades to the slow backend instead of breaking the install.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never let an extension build failure break the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
            sys.stderr.write(f"warning: compiled kernel skipped ({exc}); "
                             "falling back to the pure-python backend\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            sys.stderr.write(f"warning: building {ext.name} failed ({exc}); "
                             "falling back to the pure-python backend\n")


def extensions():
    if os.environ.get("ELLIPSAX_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover
        return []
    ext = Extension(
        "ellipsax._kernel._stepper",
        ["src/ellipsax/_kernel/_stepper.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
