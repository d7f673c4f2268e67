"""Builds the optional compiled dynamics kernel.

The package works without it: ``iter_replay._kernels`` falls back to the
pure-Python step when the extension is missing.  FMA contraction is disabled
so the compiled step rounds like the Python one.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # Cython unavailable: install the pure-Python package
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "iter_replay._kernels._step_cy",
                ["src/iter_replay/_kernels/_step_cy.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
