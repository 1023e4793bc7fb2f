"""Build script for the optional compiled kernel.

The package works without the extension (a vectorized numpy fallback is
selected at import time), so a missing compiler or Cython must not fail the
install.
"""

from setuptools import Extension, setup


def extension_modules():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "hob.kernels._zie_core",
        sources=["src/hob/kernels/_zie_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extension_modules())
