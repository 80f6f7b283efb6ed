import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "swiptsee._ckernels",
                ["src/swiptsee/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
