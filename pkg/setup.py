from setuptools import setup, Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "homelink.wireproto._ckernels",
                ["src/homelink/wireproto/_ckernels.pyx"],
                optional=True,
            )
        ]
    )
except ImportError:
    # no Cython: the pure-Python kernels are used at runtime
    ext_modules = []

setup(ext_modules=ext_modules)
