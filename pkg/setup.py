from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package works without the extension; ccd._backend falls back to
    # the pure-Python kernels.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "ccd._kernels",
                ["src/ccd/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
