"""Build hook for the optional compiled kernel tables.

The package works without the extension (numpy fallback), so a missing
Cython or compiler only skips the build.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HOULUO_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension(
                "houluo._ckernels",
                ["src/houluo/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
