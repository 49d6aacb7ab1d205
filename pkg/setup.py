"""Builds the optional compiled force-assembly kernel.

The package works without it (a pure-numpy backend is selected at import
time); building the extension speeds up the explicit time-stepping loop
considerably.  Requires Cython and a C compiler.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "tissuefit.kernels._core",
                ["src/tissuefit/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
