"""Build the optional compiled eigensolver; installs pure-Python if that fails."""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("LOCALADJ_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "localadj.linalg._eigh_core",
                    ["src/localadj/linalg/_eigh_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O2"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
