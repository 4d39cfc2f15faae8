from setuptools import setup, Extension


def get_extensions():
    """Build the compiled kernel module; fall back to pure numpy if unavailable."""
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython/numpy unavailable at build time; "
              "installing with the pure-numpy kernel backend only.")
        return []

    extensions = [
        Extension(
            "sdelab.backends._kernels",
            sources=["src/sdelab/backends/_kernels.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
    ]
    return cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=get_extensions())
