import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback kernel is used
    cythonize = None

# -ffp-contract=off keeps the compiled kernel from fusing multiply-adds, so it
# tracks the numpy fallback to the last few ulps.
compile_args = ["-O3", "-ffp-contract=off", "-fopenmp"]
link_args = ["-fopenmp"]
if os.environ.get("SPDEIS_NO_OPENMP"):
    compile_args.remove("-fopenmp")
    link_args = []

extensions = [
    Extension(
        "spdeis._kernels",
        ["src/spdeis/_kernels.pyx"],
        include_dirs=[np.get_include(), "src/spdeis"],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False, "cdivision": True},
    )
    if cythonize is not None
    else [],
)
