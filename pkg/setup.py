"""Build hook for the optional compiled kernel extension.

All package metadata lives in pyproject.toml.  The extension is a speedup
only: if Cython or a C compiler is unavailable the build falls back to the
pure-Python kernels and the package remains fully functional.  Set
CCSEG_SKIP_NATIVE=1 to skip the extension on purpose.
"""

import os

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.errors import CCompilerError, ExecError, PlatformError


class optional_build_ext(build_ext):
    """build_ext that downgrades compiler failures to a warning."""

    def run(self):
        try:
            super().run()
        except (PlatformError, FileNotFoundError) as exc:
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except (CCompilerError, ExecError, PlatformError, FileNotFoundError) as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(f"WARNING: native kernel build skipped ({exc}); "
              "falling back to pure-Python kernels")


def extensions():
    if os.environ.get("CCSEG_SKIP_NATIVE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; using pure-Python kernels")
        return []
    return cythonize(
        ["src/ccseg/_kernels/_native.pyx"],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
