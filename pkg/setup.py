import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "gpdnorm._kernels",
        ["src/gpdnorm/_kernels.pyx"],
        include_dirs=[numpy.get_include(), "src/gpdnorm"],
        extra_compile_args=["-O3", "-fopenmp-simd"],
        libraries=["mvec", "m"],
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
