import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-python install, numpy fallback kernels only
    cythonize = None


def _openmp_flags():
    if os.environ.get("KDS_LAB_NO_OPENMP") or sys.platform == "darwin":
        return [], []
    return ["-fopenmp"], ["-fopenmp"]


ext_modules = []
if cythonize is not None:
    cflags, lflags = _openmp_flags()
    ext_modules = cythonize(
        [Extension("kds_lab.evolution._kernels",
                   ["src/kds_lab/evolution/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   extra_compile_args=["-O3"] + cflags,
                   extra_link_args=lflags)],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
