"""Build script for the optional compiled Lyapunov kernel.

The package works without the extension; ``dampnorm._kernels`` falls back to
the NumPy implementation when the compiled module cannot be imported.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("DAMPNORM_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dampnorm._lyap_ext",
                    ["src/dampnorm/_lyap_ext.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
