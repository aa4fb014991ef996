"""Build script: compiles the optional Monte Carlo kernel extension.

The package works without the extension (a pure-Python engine with
identical semantics is selected at import time), so a missing Cython
or a failed compile should not block installation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("branchworlds.oracle._kernel", ["src/branchworlds/oracle/_kernel.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
