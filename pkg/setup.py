"""Build script for the optional compiled SSA kernel.

The package works without a C compiler or Cython; in that case only the
pure-Python kernel is installed.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("FDDMC_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "fddmc._core._ssa",
        ["src/fddmc/_core/_ssa.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=_extensions())
