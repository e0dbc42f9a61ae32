from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback is used at import time
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("ridgeless._core", ["src/ridgeless/_core.pyx"])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
