"""Build hook for the optional compiled kernels.

Packaging metadata lives in pyproject.toml. If Cython or a C compiler is
missing the extension is skipped and the pure-Python kernels are used.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "slowgrowth._kernels",
                ["src/slowgrowth/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
