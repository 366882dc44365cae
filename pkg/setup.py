"""Build the optional compiled kernels.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and falls back to the numpy kernels.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("LOOPDVS_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "loopdvs._ckernels",
                    ["src/loopdvs/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: results must match the numpy kernels bit for bit
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
