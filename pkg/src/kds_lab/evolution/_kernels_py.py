"""Pure numpy implementations of the stencil kernels.

Fields are ``(n_comp, n_r, n_theta)`` arrays (real or complex); ``parity``
holds one pole parity per component.
"""
import numpy as np

from .grid import D1_BOUNDARY, D2_BOUNDARY, KO_WEIGHTS


def _boundary_rows(u, out, weights, scale, sign):
    for row in range(2):
        acc = 0.0
        acc_hi = 0.0
        for k, w in enumerate(weights[row]):
            if w != 0.0:
                acc = acc + w * u[:, k, :]
                acc_hi = acc_hi + w * u[:, -1 - k, :]
        out[:, row, :] = acc * scale
        out[:, -1 - row, :] = sign * acc_hi * scale


def dr1(u, h):
    out = np.empty_like(u)
    s = 1.0 / (12.0 * h)
    out[:, 2:-2, :] = (u[:, :-4, :] - 8.0 * u[:, 1:-3, :] + 8.0 * u[:, 3:-1, :]
                       - u[:, 4:, :]) * s
    _boundary_rows(u, out, D1_BOUNDARY, s, -1.0)
    return out


def dr2(u, h):
    out = np.empty_like(u)
    s = 1.0 / (12.0 * h * h)
    out[:, 2:-2, :] = (-u[:, :-4, :] + 16.0 * u[:, 1:-3, :] - 30.0 * u[:, 2:-2, :]
                       + 16.0 * u[:, 3:-1, :] - u[:, 4:, :]) * s
    _boundary_rows(u, out, D2_BOUNDARY, s, 1.0)
    return out


def pad_theta(u, parity, width):
    p = np.asarray(parity).reshape(-1, 1, 1)
    lo = p * u[:, :, width - 1::-1]
    hi = p * u[:, :, :-width - 1:-1]
    return np.concatenate([lo, u, hi], axis=2)


def dth1(u, parity, h):
    e = pad_theta(u, parity, 2)
    n = u.shape[2]
    return (e[:, :, 0:n] - 8.0 * e[:, :, 1:n + 1] + 8.0 * e[:, :, 3:n + 3]
            - e[:, :, 4:n + 4]) / (12.0 * h)


def dth2(u, parity, h):
    e = pad_theta(u, parity, 2)
    n = u.shape[2]
    return (-e[:, :, 0:n] + 16.0 * e[:, :, 1:n + 1] - 30.0 * e[:, :, 2:n + 2]
            + 16.0 * e[:, :, 3:n + 3] - e[:, :, 4:n + 4]) / (12.0 * h * h)


def ko_dissipation(u, parity, sigma, h_r, h_t):
    """Sixth-difference Kreiss-Oliger term; radial part on interior rows only."""
    out = np.zeros_like(u)
    n_r, n = u.shape[1], u.shape[2]
    acc = 0.0
    for k, w in enumerate(KO_WEIGHTS):
        acc = acc + w * u[:, k:n_r - 6 + k, :]
    out[:, 3:n_r - 3, :] = acc * (sigma / (64.0 * h_r))
    e = pad_theta(u, parity, 3)
    acc = 0.0
    for k, w in enumerate(KO_WEIGHTS):
        acc = acc + w * e[:, :, k:n + k]
    out += acc * (sigma / (64.0 * h_t))
    return out


# coefficient rows of the scalar operator, see background.SCALAR_COEFFS
def scalar_rhs(u, v, coef, m, h_r, h_t, parity, forcing=None):
    """d_t v for box u = f on every component of ``(n_comp, n_r, n_theta)`` fields.

    The operator is ``sqrt|g| box`` in divergence form.  Radial terms use the
    skew-symmetric split ``D(a v) + a D v`` and ``D(a D u)`` so the interior
    discretisation stays energy-neutral where the radial shift is large.
    """
    att, atr, arr, athth, bth, arp, atp, app, w = coef
    ur = dr1(u, h_r)
    rest = (dr1(atr * v, h_r) + atr * dr1(v, h_r) + dr1(arr * ur, h_r)
            + athth * dth2(u, parity, h_t) + bth * dth1(u, parity, h_t))
    if m != 0:
        im = 1j * m
        rest = rest + (im * (dr1(arp * u, h_r) + arp * ur) + 2.0 * im * atp * v
                       - m * m * app * u)
    if forcing is not None:
        rest = rest - w * forcing
    return -rest / att


def contract_operator(coef, jets):
    """out[c, i, j] = sum_{k, s} coef[i, j, c, k, s] jets[k, s, i, j]."""
    return np.einsum("ijcks,ksij->cij", coef, jets, optimize=True)
