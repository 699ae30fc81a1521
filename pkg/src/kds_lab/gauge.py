"""Harmonic-gauge machinery acting on pointwise jets.

Conventions (fixed by the identities checked in the test-suite):

* ``symmetric_gradient(w) = -1/2 L_{w#} g = -nabla_(a w_b)``
* ``linearized_constraint(h) = g^{ab} nabla_a h_bm - 1/2 nabla_m tr h``, the
  directional derivative of ``constraint_op(g_b + eps h, g_b)`` at eps = 0
* ``constraint_propagation_op(psi) = box psi - Ric(psi, .)`` (module Ricci
  convention, see :mod:`kds_lab.tensors`), realized also as
  ``-2 div(trace_reversal(symmetric_gradient psi))``
* ``gauge_fixed_einstein(g) = Ric(g) + Lambda g - symmetric_gradient(Upsilon)``
  whose principal part is ``+1/2 g^{ab} d_a d_b`` acting on components.

Jets may carry arbitrary leading axes (grid nodes); all routines broadcast.
"""
import numpy as np

from . import tensors
from .errors import DegenerateLapse, EpsilonUnderflow
from .tensors import MetricJet, SymTensorJet

EPS_MACH = np.finfo(float).eps


def _gamma(jet):
    return tensors.christoffel(jet.g_inv, jet.dg)


def constraint_op(g_jet, g0_jet):
    """Upsilon(g, g0)_m = g_mc g^ab (Gamma[g]^c_ab - Gamma[g0]^c_ab)."""
    diff = _gamma(g_jet) - _gamma(g0_jet)
    c = np.einsum("...ab,...cab->...c", g_jet.g_inv, diff)
    return np.einsum("...mc,...c->...m", g_jet.g, c)


def trace_reversal(h, g_jet):
    """h - 1/2 (tr_g h) g."""
    tr = tensors.trace(h, g_jet.g_inv)
    return h - 0.5 * tr[..., None, None] * g_jet.g


def trace_reversal_jet(h_jet, g_jet):
    """Trace reversal with first partials carried along."""
    h, dh = h_jet.h, h_jet.dh
    tr = tensors.trace(h, g_jet.g_inv)
    dinv = tensors.inverse_derivative(g_jet.g_inv, g_jet.dg)
    dtr = (np.einsum("...sab,...ab->...s", dinv, h)
           + np.einsum("...ab,...sab->...s", g_jet.g_inv, dh))
    hh = h - 0.5 * tr[..., None, None] * g_jet.g
    dhh = (dh - 0.5 * dtr[..., :, None, None] * g_jet.g[..., None, :, :]
           - 0.5 * tr[..., None, None, None] * g_jet.dg)
    return SymTensorJet(hh, dhh)


def divergence(k_jet, g_jet, gamma=None):
    """(div k)_m = g^ab nabla_a k_bm for a symmetric tensor jet."""
    if gamma is None:
        gamma = _gamma(g_jet)
    nk = tensors.covariant_derivative_sym(k_jet.h, k_jet.dh, gamma)
    return np.einsum("...ab,...abm->...m", g_jet.g_inv, nk)


def linearized_constraint(h_jet, g_jet):
    """Linearization of ``constraint_op(., g)`` at ``g`` in the direction ``h``."""
    return divergence(trace_reversal_jet(h_jet, g_jet), g_jet)


def _covariant_oneform(omega, domega, gamma):
    """D[..., b, n] = nabla_b omega_n from omega and d_s omega_n."""
    return tensors.covariant_derivative_oneform(omega, domega, gamma)


def symmetric_gradient(omega, domega, g_jet):
    """-(nabla_a w_b + nabla_b w_a) / 2.

    ``domega[..., s, a]`` holds ``d_s omega_a``.
    """
    D = _covariant_oneform(omega, domega, _gamma(g_jet))
    return -0.5 * (D + np.swapaxes(D, -1, -2))


def _second_covariant_oneform(omega, domega, d2omega, g_jet):
    """nabla_b w_n and its coordinate partials d_a(nabla_b w_n)."""
    gamma = _gamma(g_jet)
    dgamma = tensors.christoffel_derivative(g_jet.g_inv, g_jet.dg, g_jet.d2g)
    D = _covariant_oneform(omega, domega, gamma)
    dD = (d2omega
          - np.einsum("...asbn,...s->...abn", dgamma, omega)
          - np.einsum("...sbn,...as->...abn", gamma, domega))
    return gamma, dgamma, D, dD


def symmetric_gradient_jet(omega, domega, d2omega, g_jet):
    """symmetric_gradient together with its first partials."""
    _, _, D, dD = _second_covariant_oneform(omega, domega, d2omega, g_jet)
    k = -0.5 * (D + np.swapaxes(D, -1, -2))
    dk = -0.5 * (dD + np.swapaxes(dD, -1, -2))
    return SymTensorJet(k, dk)


def constraint_propagation_op(omega, domega, d2omega, g_jet, realization="box"):
    """Apply the constraint propagation operator to a one-form jet.

    ``realization='box'`` evaluates ``box w - Ric(w, .)``;
    ``realization='divergence'`` evaluates ``-2 div(trace_reversal(sym_grad w))``.
    The background jet must carry second partials.
    """
    if realization == "divergence":
        k = symmetric_gradient_jet(omega, domega, d2omega, g_jet)
        return -2.0 * divergence(trace_reversal_jet(k, g_jet), g_jet)
    if realization != "box":
        raise ValueError(f"unknown realization {realization!r}")
    gamma, dgamma, D, dD = _second_covariant_oneform(omega, domega, d2omega, g_jet)
    # nabla_a nabla_b w_n
    DD = (dD
          - np.einsum("...sab,...sn->...abn", gamma, D)
          - np.einsum("...san,...bs->...abn", gamma, D))
    box = np.einsum("...ab,...abn->...n", g_jet.g_inv, DD)
    ric = tensors.ricci_from_christoffel(gamma, dgamma)
    ric_w = np.einsum("...ns,...sr,...r->...n", ric, g_jet.g_inv, omega)
    return box - ric_w


def reference_christoffels(g0_jet):
    """``(Gamma0, d Gamma0)`` of a reference jet, reusable across calls."""
    return (_gamma(g0_jet),
            tensors.christoffel_derivative(g0_jet.g_inv, g0_jet.dg, g0_jet.d2g))


def gauge_fixed_einstein(g_jet, g0_jet, lam, reference=None):
    """E(g) = Ric(g) + Lambda g - symmetric_gradient(Upsilon(g, g0)).

    Both jets need second partials.  Upsilon's partials follow from the
    product rule on ``g_mc g^ab (Gamma^c_ab - Gamma0^c_ab)``.  ``reference``
    may carry precomputed :func:`reference_christoffels` of ``g0``.
    """
    g, g_inv, dg = g_jet.g, g_jet.g_inv, g_jet.dg
    gamma = _gamma(g_jet)
    dgamma = tensors.christoffel_derivative(g_inv, dg, g_jet.d2g)
    gamma0, dgamma0 = reference if reference is not None else reference_christoffels(g0_jet)
    dinv = tensors.inverse_derivative(g_inv, dg)
    diff = gamma - gamma0
    c = np.einsum("...ab,...cab->...c", g_inv, diff)
    dc = (np.einsum("...sab,...cab->...sc", dinv, diff)
          + np.einsum("...ab,...scab->...sc", g_inv, dgamma - dgamma0))
    ups = np.einsum("...mc,...c->...m", g, c)
    dups = (np.einsum("...smc,...c->...sm", dg, c)
            + np.einsum("...mc,...sc->...sm", g, dc))
    nabla_ups = dups - np.einsum("...sab,...s->...ab", gamma, ups)
    ric = tensors.ricci_from_christoffel(gamma, dgamma)
    return ric + lam * g + 0.5 * (nabla_ups + np.swapaxes(nabla_ups, -1, -2))


def _jet_scale(h_jet):
    parts = [np.max(np.abs(h_jet.h)), np.max(np.abs(h_jet.dh))]
    if h_jet.d2h is not None:
        parts.append(np.max(np.abs(h_jet.d2h)))
    return float(max(parts))


def _central(bg_jet, g0_jet, lam, h_jet, eps):
    plus = gauge_fixed_einstein(bg_jet + h_jet.scaled(eps), g0_jet, lam)
    minus = gauge_fixed_einstein(bg_jet + h_jet.scaled(-eps), g0_jet, lam)
    return (plus - minus) / (2.0 * eps)


def linearized_einstein(h_jet, bg_jet, lam, g0_jet=None, eps=None, rtol=1e-6,
                        max_halvings=8, return_eps=False):
    """Gauged linearized Einstein operator induced by central differences.

    ``eps`` defaults to ``cbrt(machine eps) / scale(h)`` and is accepted once
    the results at ``eps`` and ``2 eps`` agree to ``rtol`` relative to the
    output scale; otherwise it is halved.  Complex ``h`` is handled by
    linearity on real and imaginary parts.
    """
    if g0_jet is None:
        g0_jet = bg_jet
    if np.iscomplexobj(h_jet.h):
        re = SymTensorJet(h_jet.h.real, h_jet.dh.real,
                          None if h_jet.d2h is None else h_jet.d2h.real)
        im = SymTensorJet(h_jet.h.imag, h_jet.dh.imag,
                          None if h_jet.d2h is None else h_jet.d2h.imag)
        a = linearized_einstein(re, bg_jet, lam, g0_jet, eps, rtol, max_halvings)
        b = linearized_einstein(im, bg_jet, lam, g0_jet, eps, rtol, max_halvings)
        return a + 1j * b
    scale = _jet_scale(h_jet)
    if scale == 0.0:
        out = np.zeros_like(h_jet.h)
        return (out, 0.0) if return_eps else out
    if eps is not None:
        out = _central(bg_jet, g0_jet, lam, h_jet, eps)
        return (out, eps) if return_eps else out
    eps = EPS_MACH ** (1.0 / 3.0) / scale
    for _ in range(max_halvings):
        one = _central(bg_jet, g0_jet, lam, h_jet, eps)
        two = _central(bg_jet, g0_jet, lam, h_jet, 2.0 * eps)
        ref = max(float(np.max(np.abs(one))), 1e-300)
        if np.max(np.abs(one - two)) <= rtol * ref + 1e3 * EPS_MACH / (eps * scale):
            return (one, eps) if return_eps else one
        eps *= 0.5
        if eps * scale < 1e3 * EPS_MACH:
            break
    raise EpsilonUnderflow("no stable step for the directional derivative",
                           last_eps=eps, scale=scale)


def nonlinearity_eval(h_jet, bg_jet, lam, g0_jet=None):
    """N(h) = L h - E(g_b + h); vanishes quadratically at h = 0."""
    if g0_jet is None:
        g0_jet = bg_jet
    if _jet_scale(h_jet) == 0.0:
        return np.zeros_like(h_jet.h)
    lin = linearized_einstein(h_jet, bg_jet, lam, g0_jet)
    return lin - gauge_fixed_einstein(bg_jet + h_jet, g0_jet, lam)


# ---------------------------------------------------------------------------
# slice gauge projection


def _lapse_guard(g_inv_tt, threshold):
    worst = float(np.min(np.abs(g_inv_tt)))
    if worst < threshold:
        raise DegenerateLapse("|G(dt*, dt*)| below threshold", min_abs=worst,
                              threshold=threshold)


def _solve_time_components(residual, g_inv_tt, h1):
    """Fix d_t h_{t mu} so that a constraint affine in them vanishes.

    With the other slots frozen, the t-component of the constraint depends on
    ``d_t h_tt`` through ``g^tt / 2`` alone and the spatial components depend
    on ``d_t h_ti`` through ``g^tt`` alone; ``residual`` is the constraint
    evaluated with those slots set to zero.
    """
    out = h1.copy()
    gtt = g_inv_tt
    out[..., 0, 0] = -2.0 * residual[..., 0] / gtt
    for i in (1, 2, 3):
        val = -residual[..., i] / gtt
        out[..., 0, i] = val
        out[..., i, 0] = val
    return out


def _zero_time_components(h1):
    z = h1.copy()
    z[..., 0, :] = 0.0
    z[..., :, 0] = 0.0
    return z


def gauge_project_slice(h0, h1, background, slice_time=0.0, threshold=1e-8):
    """Linear slice projection: recompute ``d_t h_{t mu}`` from the constraint.

    ``h0`` and ``h1`` are ``(n_r, n_theta, 4, 4)`` arrays on the background
    grid (``h1 = d_t h``).  ``h0`` and the spatial block of ``h1`` are
    returned untouched.  The stationary background makes ``slice_time``
    immaterial; it is accepted for interface symmetry.
    """
    bg = background
    _lapse_guard(bg.g_inv[..., 0, 0], threshold)
    h1z = _zero_time_components(h1)
    res = linearized_constraint(bg.slice_jet(h0, h1z), bg.jet)
    return h0.copy(), _solve_time_components(res, bg.g_inv[..., 0, 0], h1z)


def gauge_project_slice_nonlinear(h0, h1, background, threshold=1e-8):
    """Nonlinear completion: make ``Upsilon(g_b + h, g_b)`` vanish on the slice.

    The constraint is affine in ``d_t h_{t mu}`` with coefficients taken from
    the full inverse metric, so one solve is exact.
    """
    bg = background
    h1z = _zero_time_components(h1)
    full = bg.jet + bg.slice_jet(h0, h1z)
    _lapse_guard(full.g_inv[..., 0, 0], threshold)
    res = constraint_op(full, bg.jet)
    return h0.copy(), _solve_time_components(res, full.g_inv[..., 0, 0], h1z)
