"""Kernel backend selection.

The hot per-step kernels exist twice: a Cython extension (``_kernels``) and a
pure-numpy fallback (``_kernels_np``) with identical signatures.  The compiled
module is preferred when importable; ``SDELAB_BACKEND=numpy`` or
``SDELAB_BACKEND=compiled`` forces a choice.  Within one backend results are
bit-reproducible; across backends they agree to floating-point tolerance
(transcendental functions may differ in the last ulps).
"""

import os

from . import _kernels_np

_FORCED = os.environ.get("SDELAB_BACKEND", "").strip().lower()

if _FORCED == "numpy":
    _impl = _kernels_np
elif _FORCED == "compiled":
    from . import _kernels as _impl  # type: ignore[no-redef]
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_np


def backend_name() -> str:
    """Name of the active kernel backend (``"compiled"`` or ``"numpy"``)."""
    return _impl.NAME


def use(name: str) -> None:
    """Switch backends at runtime (used by tests and benchmarks)."""
    global _impl
    if name == "numpy":
        _impl = _kernels_np
    elif name == "compiled":
        from . import _kernels
        _impl = _kernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def available_backends() -> list[str]:
    names = ["numpy"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def gm1d_eps(*args, **kwargs):
    return _impl.gm1d_eps(*args, **kwargs)


def gm1d_step(*args, **kwargs):
    return _impl.gm1d_step(*args, **kwargs)


def empirical_eps(*args, **kwargs):
    return _impl.empirical_eps(*args, **kwargs)
