"""Build script for the optional compiled GF kernels.

The package works without the extension (a pure numpy fallback is selected
at import time), so a failed compile must not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "subgen._kernels._cygf",
                ["src/subgen/_kernels/_cygf.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
