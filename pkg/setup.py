"""Build the optional compiled kernels; the package falls back to pure Python
when the extension cannot be built."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("AQMARK_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("aqmark._kernels", ["src/aqmark/_kernels.pyx"],
                       extra_compile_args=["-O2"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
