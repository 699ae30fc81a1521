"""Kerr-de Sitter geometry: parameters, horizons, charts and curvature.

Coordinates are ordered ``(t, r, theta, phi)``; in the Kerr-star chart the
first and last are ``t*`` and ``phi*``.  Every metric component depends on
``(r, theta)`` only, so partials along ``t`` and ``phi`` vanish identically.

The Kerr-star chart is obtained from Boyer-Lindquist by ``t* = t - F(r)``,
``phi* = phi - Phi(r)`` with

    F'   = s(r) (1 + lambda)(r^2 + a^2) / Delta + c(r)
    Phi' = s(r) a (1 + lambda) / Delta

where ``s`` switches from -1 (event side) through 0 (middle interval) to +1
(cosmological side) and ``c = -s^3``.  Substituting, every 1/Delta cancels
where ``s^2 = 1`` and the metric takes the manifestly regular form

    g = P A(x)A - Q B(x)B - (s / (1 + lambda)) (B(x)dr + dr(x)B)
        + (1 - s^2) rho^2 / Delta dr^2 + rho^2 / kappa dtheta^2

with ``A = a dt* + a c dr - (r^2 + a^2) dphi*`` and
``B = dt* + c dr - a sin^2(theta) dphi*``.  Setting ``s = c = 0`` recovers
Boyer-Lindquist exactly, so both charts share one implementation.
"""
from dataclasses import dataclass, field
from math import comb
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from . import tensors
from .errors import (ChartDomainViolation, InvalidParameter, RootFindingFailed,
                     SpacelikenessLost, SpinTooLarge, StencilOutOfDomain,
                     SubextremalityViolated)
from .tensors import MetricJet

BOYER_LINDQUIST = "BoyerLindquist"
KERR_STAR = "KerrStar"
T, R, TH, PH = 0, 1, 2, 3

COMPLEX_STEP = 1e-30


# ---------------------------------------------------------------------------
# parameters and horizons


@dataclass(frozen=True)
class BlackHoleParams:
    lam: float
    mass: float
    spin: float = 0.0
    spin_cap: float = 0.1

    @property
    def lambda_b(self):
        return self.lam * self.spin ** 2 / 3.0

    def delta(self, r):
        a2 = self.spin ** 2
        return (r * r + a2) * (1.0 - self.lam * r * r / 3.0) - 2.0 * self.mass * r

    def delta_prime(self, r):
        a2 = self.spin ** 2
        return (2.0 * r * (1.0 - self.lam * r * r / 3.0)
                - 2.0 * self.lam * r * (r * r + a2) / 3.0 - 2.0 * self.mass)

    def mu(self, r):
        """Schwarzschild-de Sitter lapse ``1 - 2M/r - Lambda r^2 / 3``."""
        return 1.0 - 2.0 * self.mass / r - self.lam * r * r / 3.0

    def rho2(self, r, theta):
        return r * r + self.spin ** 2 * np.cos(theta) ** 2

    def kappa(self, theta):
        return 1.0 + self.lambda_b * np.cos(theta) ** 2

    def as_dict(self):
        return {"lambda": self.lam, "mass": self.mass, "spin": self.spin,
                "spin_cap": self.spin_cap}


def validate_params(lam, mass, spin=0.0, spin_cap=0.1):
    """Check the subextremal, slowly rotating regime and build the params.

    ``mass = 0`` is accepted and describes pure de Sitter space.
    """
    if not lam > 0:
        raise InvalidParameter("cosmological constant must be positive", lam=lam)
    if not mass >= 0:
        raise InvalidParameter("mass must be non-negative", mass=mass)
    if not spin >= 0:
        raise InvalidParameter("spin must be non-negative", spin=spin)
    if 1.0 - 9.0 * lam * mass ** 2 <= 0.0:
        raise SubextremalityViolated(
            "1 - 9 Lambda M^2 must be positive",
            value=1.0 - 9.0 * lam * mass ** 2)
    if spin > spin_cap * mass:
        if not (mass == 0 and spin == 0):
            raise SpinTooLarge(
                f"spin {spin} exceeds cap {spin_cap} * M = {spin_cap * mass}",
                spin=spin, cap=spin_cap * mass)
    return BlackHoleParams(float(lam), float(mass), float(spin), float(spin_cap))


@dataclass(frozen=True)
class HorizonData:
    roots: tuple
    r_negative: float
    r_event: float
    r_cosmo: float
    epsilon_ext: float

    @property
    def r_inner_cap(self):
        return self.r_event - self.epsilon_ext

    @property
    def r_outer_cap(self):
        return self.r_cosmo + self.epsilon_ext

    def as_dict(self):
        return {"roots": list(self.roots), "r_negative": self.r_negative,
                "r_event": self.r_event, "r_cosmo": self.r_cosmo,
                "epsilon_ext": self.epsilon_ext,
                "r_inner_cap": self.r_inner_cap, "r_outer_cap": self.r_outer_cap}


def _delta_roots(params, n_scan=20000):
    R_ds = np.sqrt(3.0 / params.lam)
    grid = np.linspace(-2.0 * R_ds, 2.0 * R_ds, n_scan + 1)
    vals = params.delta(grid)
    roots = []
    for i in range(n_scan):
        lo, hi = grid[i], grid[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi < 0.0:
            x = optimize.brentq(params.delta, lo, hi, xtol=1e-15, rtol=1e-15,
                                maxiter=200)
            for _ in range(3):
                d = params.delta_prime(x)
                if d == 0.0:
                    break
                x_new = x - params.delta(x) / d
                if abs(params.delta(x_new)) > abs(params.delta(x)):
                    break
                x = x_new
            roots.append(x)
    return sorted(roots)


def horizon_radii(params, epsilon_ext=None, epsilon_fraction=0.05):
    """Real roots of Delta_b and the extended interval around the exterior.

    ``epsilon_ext`` defaults to ``epsilon_fraction * (r_cosmo - r_event)``.
    For pure de Sitter (M = 0) the double root at the origin plays the role
    of the event horizon.
    """
    roots = _delta_roots(params)
    scale = max(1.0, params.lam * max(abs(x) for x in roots) ** 3) if roots else 1.0
    for x in roots:
        res = abs(params.delta(x))
        if res > 1e-10 * scale:
            raise RootFindingFailed("Delta residual too large", root=x, residual=res)
    positive = [x for x in roots if x > 0]
    negative = [x for x in roots if x < 0]
    if params.mass == 0.0:
        if len(positive) != 1:
            raise RootFindingFailed("expected a single cosmological root", roots=roots)
        r_event, r_cosmo = 0.0, positive[0]
        roots = sorted(roots + [0.0])
    else:
        if len(positive) < 2:
            raise RootFindingFailed("fewer than two positive roots", roots=roots)
        r_event, r_cosmo = positive[-2], positive[-1]
    r_negative = negative[0] if negative else float("nan")
    if epsilon_ext is None:
        epsilon_ext = epsilon_fraction * (r_cosmo - r_event)
    if not epsilon_ext > 0:
        raise InvalidParameter("epsilon_ext must be positive", epsilon_ext=epsilon_ext)
    hz = HorizonData(tuple(float(x) for x in roots), float(r_negative),
                     float(r_event), float(r_cosmo), float(epsilon_ext))
    if params.mass > 0:
        lower = [x for x in roots if x < r_event]
        if lower and hz.r_inner_cap <= lower[-1]:
            raise InvalidParameter("epsilon_ext reaches the next root of Delta",
                                   epsilon_ext=epsilon_ext)
        probe_in = np.linspace(hz.r_inner_cap, r_event, 64)[:-1]
        probe_out = np.linspace(r_cosmo, hz.r_outer_cap, 64)[1:]
        if np.any(params.delta(probe_in) >= 0) or np.any(params.delta(probe_out) >= 0):
            raise InvalidParameter("Delta must be negative on both extension strips",
                                   epsilon_ext=epsilon_ext)
    return hz


# ---------------------------------------------------------------------------
# chart profile


def smoothstep_coefficients(order):
    """Polynomial coefficients (highest power first) of the C^order smoothstep."""
    n = order
    coef = np.zeros(2 * n + 2)
    for k in range(n + 1):
        power = n + k + 1
        coef[power] = comb(n + k, k) * comb(2 * n + 1, n - k) * (-1) ** k
    return coef[::-1]


# C^5 step: the lowest order for which 4th-order differences of the
# Christoffel symbols keep their nominal order across transition zones
SMOOTHSTEP_ORDER = 5
SMOOTHSTEP = smoothstep_coefficients(SMOOTHSTEP_ORDER)
SMOOTHSTEP_D1 = np.polyder(SMOOTHSTEP)


def smoothstep(x):
    """0 for x <= 0, 1 for x >= 1, C^5 polynomial in between (complex-step safe)."""
    x = np.asarray(x)
    xr = np.real(x)
    inner = np.polyval(SMOOTHSTEP, x)
    return np.where(xr <= 0.0, 0.0 * x, np.where(xr >= 1.0, 1.0 + 0.0 * x, inner))


def smoothstep_prime(x):
    x = np.asarray(x)
    xr = np.real(x)
    inner = np.polyval(SMOOTHSTEP_D1, x)
    return np.where((xr <= 0.0) | (xr >= 1.0), 0.0 * x, inner)


def default_middle_interval(params, horizons, width_fraction=0.05):
    """Narrow interval centred on the midpoint of (r_event, r_cosmo).

    Centring balances the two transition zones of ``s``, whose width sets
    the finite-difference error of curvature evaluations.
    """
    r_e, r_c = horizons.r_event, horizons.r_cosmo
    centre = 0.5 * (r_e + r_c)
    half = 0.5 * width_fraction * (r_c - r_e)
    return (centre - half, centre + half)


@dataclass(frozen=True)
class ChartProfile:
    """The switching function ``s`` and the derived ``F'``, ``Phi'`` and ``F``."""

    params: BlackHoleParams
    horizons: HorizonData
    middle_interval: tuple
    event_flat: float  # s = -1 for r <= event_flat
    cosmo_flat: float  # s = +1 for r >= cosmo_flat
    spacelike_margin: float = float("nan")
    _F_anchor: float = field(default=0.0, repr=False)

    def s(self, r):
        r1, r2 = self.middle_interval
        left = -1.0 + smoothstep((r - self.event_flat) / (r1 - self.event_flat))
        right = smoothstep((r - r2) / (self.cosmo_flat - r2))
        rr = np.real(r)
        return np.where(rr <= r1, left, np.where(rr >= r2, right, 0.0 * r))

    def ds(self, r):
        r1, r2 = self.middle_interval
        wl = r1 - self.event_flat
        wr = self.cosmo_flat - r2
        left = smoothstep_prime((r - self.event_flat) / wl) / wl
        right = smoothstep_prime((r - r2) / wr) / wr
        rr = np.real(r)
        return np.where(rr <= r1, left, np.where(rr >= r2, right, 0.0 * r))

    def c(self, r):
        return -self.s(r) ** 3

    def dc(self, r):
        s = self.s(r)
        return -3.0 * s * s * self.ds(r)

    def F_prime(self, r):
        p = self.params
        L = 1.0 + p.lambda_b
        return self.s(r) * L * (r * r + p.spin ** 2) / p.delta(r) + self.c(r)

    def Phi_prime(self, r):
        p = self.params
        return self.s(r) * p.spin * (1.0 + p.lambda_b) / p.delta(r)

    def F(self, r):
        """F(r) on the open exterior, normalised to vanish on the middle interval."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        r1, r2 = self.middle_interval
        out = np.zeros_like(r)
        for i, x in enumerate(r):
            if not (self.horizons.r_event < x < self.horizons.r_cosmo):
                out[i] = np.nan
            elif x < r1:
                out[i] = -integrate.quad(self.F_prime, x, r1, limit=200)[0]
            elif x > r2:
                out[i] = integrate.quad(self.F_prime, r2, x, limit=200)[0]
        return out

    def Phi(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        r1, r2 = self.middle_interval
        out = np.zeros_like(r)
        for i, x in enumerate(r):
            if not (self.horizons.r_event < x < self.horizons.r_cosmo):
                out[i] = np.nan
            elif x < r1:
                out[i] = -integrate.quad(self.Phi_prime, x, r1, limit=200)[0]
            elif x > r2:
                out[i] = integrate.quad(self.Phi_prime, r2, x, limit=200)[0]
        return out


def chart_profile_build(params, horizons, middle_interval=None, flat_fraction=0.02,
                        n_check=(257, 33)):
    """Build the Kerr-star profile and verify that t*-slices are spacelike.

    ``flat_fraction`` sets how far into the exterior ``s`` stays exactly
    +-1 beyond each horizon.
    """
    if middle_interval is None:
        middle_interval = default_middle_interval(params, horizons)
    r1, r2 = middle_interval
    if not horizons.r_event < r1 < r2 < horizons.r_cosmo:
        raise InvalidParameter("middle interval must lie strictly inside the exterior",
                               middle_interval=middle_interval)
    event_flat = horizons.r_event + flat_fraction * (r1 - horizons.r_event)
    cosmo_flat = horizons.r_cosmo - flat_fraction * (horizons.r_cosmo - r2)
    profile = ChartProfile(params, horizons, tuple(middle_interval), event_flat,
                           cosmo_flat)
    nr, nth = n_check
    rr = np.linspace(horizons.r_inner_cap, horizons.r_outer_cap, nr)
    th = (np.arange(nth) + 0.5) * np.pi / nth
    Rg, THg = np.meshgrid(rr, th, indexing="ij")
    g, _ = kerr_star_components(params, profile, Rg, THg)
    gtt = np.linalg.inv(g)[..., T, T]
    worst = float(np.max(gtt))
    if worst >= 0.0:
        raise SpacelikenessLost("G(dt*, dt*) >= 0 on the extended grid", max_gtt=worst)
    return ChartProfile(params, horizons, tuple(middle_interval), event_flat,
                        cosmo_flat, spacelike_margin=-worst)


# ---------------------------------------------------------------------------
# metric components


def _components(params, r, theta, s, ds, c, dc, want_derivs=True):
    """Metric (and r/theta partials) for given switch values; see module doc."""
    a = params.spin
    lam = params.lam
    L = 1.0 + params.lambda_b
    L2 = L * L
    a2 = a * a
    r = np.asarray(r)
    theta = np.asarray(theta)
    sin, cos = np.sin(theta), np.cos(theta)
    sin2 = sin * sin
    rho2 = r * r + a2 * cos * cos
    delta = (r * r + a2) * (1.0 - lam * r * r / 3.0) - 2.0 * params.mass * r
    kap = 1.0 + params.lambda_b * cos * cos

    P = kap * sin2 / (L2 * rho2)
    Q = delta / (L2 * rho2)
    one_m_s2 = 1.0 - s * s
    active = one_m_s2 != 0.0
    safe_delta = np.where(active, delta, 1.0)
    W = np.where(active, one_m_s2 * rho2 / safe_delta, 0.0 * r)
    Th = rho2 / kap

    zero = 0.0 * (r + theta)
    one = zero + 1.0
    A = np.stack([zero + a, a * c + zero, zero, -(r * r + a2) + zero], axis=-1)
    B = np.stack([one, c + zero, zero, -a * sin2 + zero], axis=-1)
    e_r = np.stack([zero, one, zero, zero], axis=-1)
    e_th = np.stack([zero, zero, one, zero], axis=-1)

    def outer(u, v):
        return u[..., :, None] * v[..., None, :]

    def sym(u, v):
        return outer(u, v) + outer(v, u)

    s_ = s + zero
    g = (P[..., None, None] * outer(A, A) - Q[..., None, None] * outer(B, B)
         - (s_ / L)[..., None, None] * sym(B, e_r)
         + W[..., None, None] * outer(e_r, e_r) + Th[..., None, None] * outer(e_th, e_th))
    if not want_derivs:
        return g, None

    rho2_r = 2.0 * r + zero
    rho2_t = -2.0 * a2 * sin * cos + zero
    delta_r = (2.0 * r * (1.0 - lam * r * r / 3.0)
               - 2.0 * lam * r * (r * r + a2) / 3.0 - 2.0 * params.mass) + zero
    kap_t = -2.0 * params.lambda_b * sin * cos + zero
    sin2_t = 2.0 * sin * cos + zero

    P_r = -P * rho2_r / rho2
    P_t = (kap_t * sin2 + kap * sin2_t) / (L2 * rho2) - P * rho2_t / rho2
    Q_r = delta_r / (L2 * rho2) - Q * rho2_r / rho2
    Q_t = -Q * rho2_t / rho2
    W_r = np.where(active,
                   (-2.0 * s * ds) * rho2 / safe_delta
                   + one_m_s2 * (rho2_r / safe_delta - rho2 * delta_r / safe_delta ** 2),
                   0.0 * zero)
    W_t = np.where(active, one_m_s2 * rho2_t / safe_delta, 0.0 * zero)
    Th_r = rho2_r / kap
    Th_t = rho2_t / kap - rho2 * kap_t / kap ** 2

    A_r = np.stack([zero, a * dc + zero, zero, -2.0 * r + zero], axis=-1)
    B_r = np.stack([zero, dc + zero, zero, zero], axis=-1)
    B_t = np.stack([zero, zero, zero, -a * sin2_t], axis=-1)
    ds_ = ds + zero

    dg_r = (P_r[..., None, None] * outer(A, A) + P[..., None, None] * sym(A_r, A)
            - Q_r[..., None, None] * outer(B, B) - Q[..., None, None] * sym(B_r, B)
            - (ds_ / L)[..., None, None] * sym(B, e_r)
            - (s_ / L)[..., None, None] * sym(B_r, e_r)
            + W_r[..., None, None] * outer(e_r, e_r)
            + Th_r[..., None, None] * outer(e_th, e_th))
    dg_t = (P_t[..., None, None] * outer(A, A)
            - Q_t[..., None, None] * outer(B, B) - Q[..., None, None] * sym(B_t, B)
            - (s_ / L)[..., None, None] * sym(B_t, e_r)
            + W_t[..., None, None] * outer(e_r, e_r)
            + Th_t[..., None, None] * outer(e_th, e_th))
    dg = np.zeros(g.shape[:-2] + (4, 4, 4), dtype=g.dtype)
    dg[..., R, :, :] = dg_r
    dg[..., TH, :, :] = dg_t
    return g, dg


def kerr_star_components(params, profile, r, theta, want_derivs=True):
    s, ds = profile.s(r), profile.ds(r)
    return _components(params, r, theta, s, ds, profile.c(r), profile.dc(r),
                       want_derivs)


def bl_components(params, r, theta, want_derivs=True):
    z = 0.0 * np.asarray(r)
    return _components(params, r, theta, z, z, z, z, want_derivs)


def _second_partials(fn, r, theta):
    """d2g via complex-step differentiation of the closed-form first partials."""
    h = COMPLEX_STEP
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    _, dg_rc = fn(r + 1j * h, theta + 0j)
    _, dg_tc = fn(r + 0j, theta + 1j * h)
    shape = np.broadcast(r, theta).shape
    d2g = np.zeros(shape + (4, 4, 4, 4))
    d2g[..., R, :, :, :] = np.imag(dg_rc) / h
    d2g[..., TH, :, :, :] = np.imag(dg_tc) / h
    return d2g


@dataclass(frozen=True)
class SpacetimePoint:
    t_star: float
    r: float
    theta: float
    phi_star: float = 0.0
    chart: str = KERR_STAR


def _check_theta(theta):
    th = np.asarray(theta)
    if np.any(th <= 0.0) or np.any(th >= np.pi):
        raise ChartDomainViolation("theta must lie in (0, pi)")


def metric_bl(params, point=None, *, r=None, theta=None, second=False, horizons=None):
    """Boyer-Lindquist jet; refuses points on or beyond either horizon."""
    if point is not None:
        r, theta = point.r, point.theta
    hz = horizons if horizons is not None else horizon_radii(params)
    rr = np.asarray(r)
    if np.any(rr <= hz.r_event) or np.any(rr >= hz.r_cosmo):
        raise ChartDomainViolation("Boyer-Lindquist chart requires r_event < r < r_cosmo",
                                   r_event=hz.r_event, r_cosmo=hz.r_cosmo)
    _check_theta(theta)
    g, dg = bl_components(params, r, theta)
    d2g = _second_partials(lambda x, y: bl_components(params, x, y), r, theta) if second else None
    return MetricJet.from_metric(g, dg, d2g)


def check_extended(profile, r):
    hz = profile.horizons
    rr = np.asarray(r)
    tol = 1e-12 * (hz.r_outer_cap - hz.r_inner_cap)
    if np.any(rr < hz.r_inner_cap - tol) or np.any(rr > hz.r_outer_cap + tol):
        raise ChartDomainViolation("Kerr-star chart requires r in the extended interval",
                                   r_min=hz.r_inner_cap, r_max=hz.r_outer_cap)


def metric_kerr_star(params, profile, point=None, *, r=None, theta=None, second=False,
                     check_domain=True):
    """Kerr-star jet, regular across both horizons."""
    if point is not None:
        r, theta = point.r, point.theta
    if check_domain:
        check_extended(profile, r)
    _check_theta(theta)
    g, dg = kerr_star_components(params, profile, r, theta)
    d2g = None
    if second:
        d2g = _second_partials(
            lambda x, y: kerr_star_components(params, profile, x, y), r, theta)
    return MetricJet.from_metric(g, dg, d2g)


def metric_jet(params, profile, point=None, *, chart=KERR_STAR, **kw):
    if point is not None:
        chart = point.chart
    if chart == BOYER_LINDQUIST:
        return metric_bl(params, point, horizons=None if profile is None else profile.horizons, **kw)
    return metric_kerr_star(params, profile, point, **kw)


def g_inv_dtdt(params, profile, point=None, *, r=None, theta=None):
    """-1 / G(dt*, dt*); positive where t*-slices are spacelike."""
    jet = metric_kerr_star(params, profile, point, r=r, theta=theta)
    return -1.0 / jet.g_inv[..., T, T]


def ergosphere_indicator(params, profile, point=None, *, r=None, theta=None):
    """g(T, T); positive inside the ergoregion."""
    if point is not None:
        r, theta = point.r, point.theta
    g, _ = kerr_star_components(params, profile, r, theta, want_derivs=False)
    return g[..., T, T]


# ---------------------------------------------------------------------------
# Killing and other vectorfields


class Vectorfield:
    """Vector components as a function of ``(t, r, theta, phi)``.

    ``jacobian`` returns ``dX[..., a, s] = partial_a X^s``; when not supplied
    it is computed with fourth-order central differences.
    """

    def __init__(self, components, jacobian=None, label="custom", stationary=False,
                 fd_step=1e-4):
        self._components = components
        self._jacobian = jacobian
        self.label = label
        self.stationary = stationary
        self.fd_step = fd_step

    def __call__(self, t, r, theta, phi):
        return self._components(t, r, theta, phi)

    def jacobian(self, t, r, theta, phi):
        if self._jacobian is not None:
            return self._jacobian(t, r, theta, phi)
        x = [np.asarray(v, dtype=float) for v in (t, r, theta, phi)]
        h = self.fd_step
        cols = []
        for a in range(4):
            def shifted(k):
                y = list(x)
                y[a] = x[a] + k * h
                return np.asarray(self._components(*y))
            cols.append((shifted(-2) - 8 * shifted(-1) + 8 * shifted(1) - shifted(2))
                        / (12 * h))
        return np.stack(cols, axis=-2)


def _constant_field(vec, label):
    vec = np.asarray(vec, dtype=float)

    def comp(t, r, theta, phi):
        shape = np.broadcast(t, r, theta, phi).shape
        return np.broadcast_to(vec, shape + (4,)).copy()

    def jac(t, r, theta, phi):
        shape = np.broadcast(t, r, theta, phi).shape
        return np.zeros(shape + (4, 4))

    return Vectorfield(comp, jac, label=label, stationary=True)


def killing_T():
    return _constant_field([1.0, 0.0, 0.0, 0.0], "T")


def killing_Phi():
    return _constant_field([0.0, 0.0, 0.0, 1.0], "Phi")


def coordinate_field(index):
    v = np.zeros(4)
    v[index] = 1.0
    return _constant_field(v, "coordinate")


# ---------------------------------------------------------------------------
# curvature


def christoffel(params, profile, point=None, chart=KERR_STAR, *, r=None, theta=None):
    if point is not None:
        chart = point.chart
        r, theta = point.r, point.theta
    if chart == BOYER_LINDQUIST:
        jet = metric_bl(params, r=r, theta=theta,
                        horizons=None if profile is None else profile.horizons)
    else:
        jet = metric_kerr_star(params, profile, r=r, theta=theta)
    return tensors.christoffel(jet.g_inv, jet.dg)


def _gamma_fn(params, profile, chart):
    if chart == BOYER_LINDQUIST:
        def fn(r, theta):
            g, dg = bl_components(params, r, theta)
            return tensors.christoffel(np.linalg.inv(g), dg)
    else:
        def fn(r, theta):
            g, dg = kerr_star_components(params, profile, r, theta)
            return tensors.christoffel(np.linalg.inv(g), dg)
    return fn


def ricci(params, profile, point=None, chart=KERR_STAR, spacing=1e-3, *, r=None,
          theta=None):
    """Ricci tensor with Christoffel partials from 4th-order central differences.

    ``spacing`` is a scalar or an ``(h_r, h_theta)`` pair.  Raises
    StencilOutOfDomain if the stencil leaves the chart.
    """
    if point is not None:
        chart = point.chart
        r, theta = point.r, point.theta
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    h_r, h_t = (spacing, spacing) if np.ndim(spacing) == 0 else spacing
    if np.any(theta - 2 * h_t <= 0) or np.any(theta + 2 * h_t >= np.pi):
        raise StencilOutOfDomain("theta stencil reaches a pole")
    if chart == BOYER_LINDQUIST:
        hz = profile.horizons if profile is not None else horizon_radii(params)
        lo, hi = hz.r_event, hz.r_cosmo
        bad = np.any(r - 2 * h_r <= lo) or np.any(r + 2 * h_r >= hi)
    else:
        hz = profile.horizons
        lo, hi = hz.r_inner_cap, hz.r_outer_cap
        bad = np.any(r - 2 * h_r < lo - 1e-12) or np.any(r + 2 * h_r > hi + 1e-12)
    if bad:
        raise StencilOutOfDomain("radial stencil leaves the chart", r_min=lo, r_max=hi)
    fn = _gamma_fn(params, profile, chart)
    gamma = fn(r, theta)

    def d(axis_shift):
        if axis_shift == R:
            f = [fn(r + k * h_r, theta) for k in (-2, -1, 1, 2)]
            h = h_r
        else:
            f = [fn(r, theta + k * h_t) for k in (-2, -1, 1, 2)]
            h = h_t
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)

    dgamma = np.zeros(gamma.shape[:-3] + (4, 4, 4, 4))
    dgamma[..., R, :, :, :] = d(R)
    dgamma[..., TH, :, :, :] = d(TH)
    return tensors.ricci_from_christoffel(gamma, dgamma)


def einstein_residual(params, profile, point=None, chart=KERR_STAR, spacing=1e-3, **kw):
    """max |Ric + Lambda g| at the given point(s)."""
    if point is not None:
        kw.setdefault("r", point.r)
        kw.setdefault("theta", point.theta)
        chart = point.chart
    ric = ricci(params, profile, chart=chart, spacing=spacing, **kw)
    if chart == BOYER_LINDQUIST:
        g, _ = bl_components(params, kw["r"], kw["theta"], want_derivs=False)
    else:
        g, _ = kerr_star_components(params, profile, kw["r"], kw["theta"], want_derivs=False)
    return np.abs(ric + params.lam * g)


def lie_derivative_metric(params, profile, X, point=None, *, chart=KERR_STAR,
                          t=0.0, r=None, theta=None, phi=0.0):
    """(L_X g)_ab, which is twice the deformation tensor of X."""
    if point is not None:
        t, r, theta, phi, chart = point.t_star, point.r, point.theta, point.phi_star, point.chart
    if chart == BOYER_LINDQUIST:
        jet = metric_bl(params, r=r, theta=theta,
                        horizons=None if profile is None else profile.horizons)
    else:
        jet = metric_kerr_star(params, profile, r=r, theta=theta)
    comps = np.asarray(X(t, r, theta, phi))
    jac = np.asarray(X.jacobian(t, r, theta, phi))
    return tensors.lie_derivative_metric(jet.g, jet.dg, comps, jac)


# ---------------------------------------------------------------------------
# grid-level reports


def signature_ok(g):
    return bool(np.all(tensors.lorentzian(g)))


def inverse_residual(jet):
    eye = np.eye(4)
    return float(np.max(np.abs(np.einsum("...ab,...bc->...ac", jet.g, jet.g_inv) - eye)))


def einstein_residual_on_grid(params, profile, n_r, n_theta=32, polar_margin=0.5):
    """max |Ric + Lambda g| over the interior nodes of an extended-domain grid.

    Christoffel partials use the grid spacings, so the value measures the
    stencil truncation error at that resolution.  Interior nodes are those
    whose five-point stencils stay inside the chart and at least
    ``polar_margin`` away from the poles, where the ``cot(theta)`` terms in
    the Christoffels would otherwise dominate the truncation error.
    """
    hz = profile.horizons
    r = np.linspace(hz.r_inner_cap, hz.r_outer_cap, n_r)
    h_r = r[1] - r[0]
    h_t = np.pi / n_theta
    theta = (np.arange(n_theta) + 0.5) * h_t
    theta = theta[(theta - 2 * h_t >= polar_margin) & (theta + 2 * h_t <= np.pi - polar_margin)]
    R_, TH_ = np.meshgrid(r[2:-2], theta, indexing="ij")
    res = einstein_residual(params, profile, r=R_, theta=TH_, spacing=(h_r, h_t))
    return float(res.max())
