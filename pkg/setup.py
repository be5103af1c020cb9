"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: autorc.nn.kernels
falls back to a numpy implementation when the compiled module is absent.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "autorc.nn.kernels._native",
        ["src/autorc/nn/kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level="3")
except ImportError:
    pass

setup(ext_modules=ext_modules)
