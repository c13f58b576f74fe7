"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``QPGREEN_BACKEND=python`` forces the fallback and
``QPGREEN_BACKEND=cython`` makes a missing extension an error.
"""

from __future__ import annotations

import os

import numpy as np

from qpgreen import _kernels_py

_choice = os.environ.get("QPGREEN_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"QPGREEN_BACKEND must be auto, python or cython, not {_choice!r}")

_impl = _kernels_py
BACKEND = "python"
if _choice != "python":
    try:
        from qpgreen import _kernels as _compiled
    except ImportError:
        if _choice == "cython":
            raise
    else:
        _impl = _compiled
        BACKEND = "cython"


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def _c128(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.complex128)


def compensated_sum(values) -> complex:
    return _impl.compensated_sum(_c128(np.ravel(values)))


def direct_image_sum(dists, phases, sigma: complex, dimension: int) -> complex:
    return _impl.direct_image_sum(_f64(dists), _c128(phases), complex(sigma), int(dimension))


def dual_sum(qr, kperp, rperp: float, mode: int) -> complex:
    return _impl.dual_sum(_f64(qr), _c128(kperp), float(rperp), int(mode))


def laplace_image_sum(dists, phases, eta: float, dimension: int) -> complex:
    return _impl.laplace_image_sum(_f64(dists), _c128(phases), float(eta), int(dimension))


def backends() -> dict:
    """Both implementations keyed by name (the compiled one only if available)."""
    out = {"python": _kernels_py}
    try:
        from qpgreen import _kernels as compiled
    except ImportError:
        pass
    else:
        out["cython"] = compiled
    return out
