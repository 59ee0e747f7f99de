"""Build script for the optional compiled kernel.

The package is pure Python except for one hot loop (the retarded spherical
integral).  If Cython or a C compiler is unavailable the build still
succeeds and the package falls back to the numpy implementation at import.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "torwave._retarded",
        ["src/torwave/_retarded.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
