"""Build hook for the optional compiled fusion kernels.

The package works without the extension; ``skit.fusion.kernels`` falls back
to the numpy implementation when ``skit.fusion._kernels`` cannot be imported.
Set ``SKIT_NO_EXT=1`` to skip compilation entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SKIT_NO_EXT"):
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
                    "skit.fusion._kernels",
                    ["src/skit/fusion/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # keep arithmetic bit-compatible with the numpy fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
