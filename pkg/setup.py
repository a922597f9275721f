"""Build script: compiles the optional Cython kernel for the counter-based RNG.

The package is fully functional without the extension (a vectorized numpy
fallback is selected at import time), so any failure to build it degrades
gracefully to a pure-Python install.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible; warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: skipping optional extension build ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping optional extension {ext.name} ({exc})")


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available, installing without compiled kernels")
        return []
    ext = Extension(
        "spdelab._philox_cy",
        ["src/spdelab/_philox_cy.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
