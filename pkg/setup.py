import os

from setuptools import Extension, setup


def native_extensions():
    """Build the compiled kernel module when Cython is available.

    The package runs fine without it (a numpy fallback is selected at
    import time), so a missing compiler or Cython is not fatal.
    """
    if os.environ.get("LCP_PURE_PYTHON"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "lcp._kernels._native",
        ["src/lcp/_kernels/_native.pyx"],
        language="c++",
        extra_compile_args=["-O3"],
    )
    return cythonize(ext, language_level="3")


setup(ext_modules=native_extensions())
