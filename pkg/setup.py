"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-Python twin of the
kernels is selected at import time), so a failed compile only costs
speed.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mixupgeom.kernels._fast",
                ["src/mixupgeom/kernels/_fast.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"cython unavailable, building pure-python only: {exc}")

setup(ext_modules=ext_modules)
