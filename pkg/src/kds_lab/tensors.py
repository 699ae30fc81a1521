"""Tensor calculus on metric jets.

All routines broadcast over arbitrary leading axes.  Index layout:

* ``g[..., a, b]``            metric components
* ``dg[..., s, a, b]``        partial_s g_ab
* ``d2g[..., s, t, a, b]``    partial_s partial_t g_ab
* ``gamma[..., c, a, b]``     Christoffel symbol Gamma^c_ab

Curvature sign convention: ``ricci`` returns the tensor for which the
vacuum equations with cosmological constant read ``Ric + Lambda g = 0`` and
for which the one-form identity ``-2 div(trace_reverse(sym_grad psi)) =
box psi - Ric(psi, .)`` holds.  This is minus the Ricci tensor built from the
usual ``R^a_bcd = d_c Gamma^a_db - ...`` contraction, so de Sitter space has
``Ric = -Lambda g``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

DIM = 4
# symmetric index pairs in the storage order used for 10-component tensors
SYM_PAIRS = [(a, b) for a in range(DIM) for b in range(a, DIM)]


@dataclass(frozen=True)
class MetricJet:
    """Metric, inverse and partial derivatives at one or many points."""

    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    d2g: Optional[np.ndarray] = None

    @classmethod
    def from_metric(cls, g, dg, d2g=None):
        return cls(g=g, g_inv=np.linalg.inv(g), dg=dg, d2g=d2g)

    def __add__(self, other):
        """Jet of ``g + h`` for a symmetric tensor jet ``h``."""
        g = self.g + other.h
        dg = self.dg + other.dh
        d2g = None
        if self.d2g is not None and other.d2h is not None:
            d2g = self.d2g + other.d2h
        return MetricJet.from_metric(g, dg, d2g)


@dataclass(frozen=True)
class SymTensorJet:
    """A symmetric 2-tensor with its first (and optionally second) partials."""

    h: np.ndarray
    dh: np.ndarray
    d2h: Optional[np.ndarray] = None

    def scaled(self, c):
        return SymTensorJet(c * self.h, c * self.dh,
                            None if self.d2h is None else c * self.d2h)

    def __add__(self, other):
        d2h = None
        if self.d2h is not None and other.d2h is not None:
            d2h = self.d2h + other.d2h
        return SymTensorJet(self.h + other.h, self.dh + other.dh, d2h)

    def __neg__(self):
        return self.scaled(-1.0)


def pack_sym(t):
    """``(..., 4, 4)`` symmetric tensor -> ``(..., 10)`` components."""
    return np.stack([t[..., a, b] for a, b in SYM_PAIRS], axis=-1)


def unpack_sym(c):
    """``(..., 10)`` components -> ``(..., 4, 4)`` symmetric tensor."""
    out = np.zeros(c.shape[:-1] + (DIM, DIM), dtype=c.dtype)
    for k, (a, b) in enumerate(SYM_PAIRS):
        out[..., a, b] = c[..., k]
        out[..., b, a] = c[..., k]
    return out


def inverse_derivative(g_inv, dg):
    """partial_s g^ab = -g^ac partial_s g_cd g^db."""
    gi = g_inv[..., None, :, :]
    return -(gi @ dg @ gi)


def christoffel_lowered(dg):
    """Gamma_{c a b} = (d_a g_cb + d_b g_ca - d_c g_ab) / 2."""
    return 0.5 * (np.einsum("...acb->...cab", dg)
                  + np.einsum("...bca->...cab", dg)
                  - dg)


def _raise_first(g_inv, low):
    """``g^cd T_dab`` for ``T[..., d, a, b]`` (matmul over flattened ``ab``)."""
    shape = low.shape
    flat = low.reshape(shape[:-2] + (16,))
    return (g_inv @ flat).reshape(shape)


def christoffel(g_inv, dg):
    return _raise_first(g_inv, christoffel_lowered(dg))


def christoffel_derivative(g_inv, dg, d2g):
    """partial_s Gamma^c_ab from an exact second-order jet.

    Returns ``dgamma[..., s, c, a, b]``.
    """
    low = christoffel_lowered(dg)
    # partial_s Gamma_{c a b}
    dlow = 0.5 * (np.einsum("...sacb->...scab", d2g)
                  + np.einsum("...sbca->...scab", d2g)
                  - d2g)
    dinv = inverse_derivative(g_inv, dg)
    n = low.shape[:-3]
    first = (dinv @ low.reshape(n + (1, 4, 16))).reshape(n + (4, 4, 4, 4))
    return first + _raise_first(g_inv[..., None, :, :], dlow)


def ricci_from_christoffel(gamma, dgamma):
    """Ricci tensor (module sign convention) from Gamma and its partials."""
    n = gamma.shape[:-3]
    trace_g = np.einsum("...aab->...b", gamma)
    # sum_ab Gamma^a_nb Gamma^b_am as a product over the flattened (a, b) pair
    left = np.swapaxes(gamma, -3, -2).reshape(n + (4, 16))
    right = np.swapaxes(gamma, -3, -1).reshape(n + (4, 16))
    standard = (np.einsum("...aamn->...mn", dgamma)
                - np.einsum("...naam->...mn", dgamma)
                + (trace_g[..., None, :] @ gamma.reshape(n + (4, 16))).reshape(n + (4, 4))
                - right @ np.swapaxes(left, -1, -2))
    return -standard


def ricci_from_jet(jet):
    gamma = christoffel(jet.g_inv, jet.dg)
    dgamma = christoffel_derivative(jet.g_inv, jet.dg, jet.d2g)
    return ricci_from_christoffel(gamma, dgamma)


def contracted_christoffel(g_inv, gamma):
    """Gamma^c = g^ab Gamma^c_ab."""
    return np.einsum("...ab,...cab->...c", g_inv, gamma)


def lie_derivative_metric(g, dg, X, dX):
    """(L_X g)_ab for vector components ``X[..., s]`` and ``dX[..., a, s]`` = d_a X^s."""
    return (np.einsum("...s,...sab->...ab", X, dg)
            + np.einsum("...sb,...as->...ab", g, dX)
            + np.einsum("...as,...bs->...ab", g, dX))


def covariant_derivative_oneform(omega, domega, gamma):
    """nabla_a omega_b = d_a omega_b - Gamma^s_ab omega_s."""
    return domega - np.einsum("...sab,...s->...ab", gamma, omega)


def covariant_derivative_sym(h, dh, gamma):
    """nabla_s h_ab for a symmetric tensor; returns ``[..., s, a, b]``."""
    return (dh
            - np.einsum("...csa,...cb->...sab", gamma, h)
            - np.einsum("...csb,...ac->...sab", gamma, h))


def trace(h, g_inv):
    return np.einsum("...ab,...ab->...", g_inv, h)


def metric_compatibility_residual(jet, gamma=None):
    """max |nabla_c g_ab| evaluated from the jet's own Christoffels."""
    if gamma is None:
        gamma = christoffel(jet.g_inv, jet.dg)
    return np.max(np.abs(covariant_derivative_sym(jet.g, jet.dg, gamma)))


def lorentzian(g):
    """True where ``g`` has signature (-,+,+,+)."""
    ev = np.linalg.eigvalsh(g)
    return (ev[..., 0] < 0) & (ev[..., 1] > 0)
