"""Kernel backend selection.

The compiled extension is used when it imports; ``KDS_LAB_BACKEND=python``
forces the numpy implementation.
"""
import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("KDS_LAB_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def backend_module(name=None):
    name = name or BACKEND
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    return _kernels_py


def set_num_threads(n):
    if _compiled is not None:
        _compiled.set_num_threads(int(n))


def _prep(u):
    u = np.asarray(u)
    dtype = complex if np.iscomplexobj(u) else float
    return np.ascontiguousarray(u, dtype=dtype)


class Kernels:
    """Thin dispatcher so callers can pin a backend explicitly."""

    def __init__(self, name=None):
        self.name = name or BACKEND
        self.mod = backend_module(self.name)

    def dr1(self, u, h):
        return self.mod.dr1(_prep(u), h)

    def dr2(self, u, h):
        return self.mod.dr2(_prep(u), h)

    def dth1(self, u, parity, h):
        return self.mod.dth1(_prep(u), np.asarray(parity, dtype=float), h)

    def dth2(self, u, parity, h):
        return self.mod.dth2(_prep(u), np.asarray(parity, dtype=float), h)

    def ko_dissipation(self, u, parity, sigma, h_r, h_t):
        return self.mod.ko_dissipation(_prep(u), np.asarray(parity, dtype=float), sigma,
                                       h_r, h_t)

    def scalar_rhs(self, u, v, coef, m, h_r, h_t, parity, forcing=None):
        n_comp = np.shape(u)[0]
        parity = np.array(np.broadcast_to(np.asarray(parity, dtype=float), (n_comp,)))
        if self.name == "cython":
            return self.mod.scalar_rhs(u, v, coef, m, h_r, h_t, parity, forcing)
        if m != 0:
            u = np.asarray(u, dtype=complex)
        return self.mod.scalar_rhs(u, v, coef, m, h_r, h_t, parity, forcing)

    def contract_operator(self, coef, jets):
        return self.mod.contract_operator(np.ascontiguousarray(coef, dtype=float),
                                          np.ascontiguousarray(jets, dtype=float))


default = Kernels()
