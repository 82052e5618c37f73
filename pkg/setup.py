import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ADAPTEDOT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python fallback is used at import time
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "adaptedot.ot._transport",
                    ["src/adaptedot/ot/_transport.pyx"],
                    include_dirs=[np.get_include()],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
