import numpy as np
from setuptools import Extension, setup

# The compiled kernel is optional: the package falls back to a numpy
# implementation at import time if the extension is missing.
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "eddydg._fastgram",
                ["src/eddydg/_fastgram.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    print("Cython not available, building without the compiled kernel")
    extensions = []

setup(ext_modules=extensions)
