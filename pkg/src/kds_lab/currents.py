"""Energy-momentum tensors, multiplier currents and slice energies.

Fields are scalar azimuthal modes ``h(r, theta) e^{i m phi}`` or the ten
real components of an ``m = 0`` symmetric tensor.  Tensor-valued fields use
the component-sum convention: ``T[h] = sum_k T[h_k]`` over the packed
components, which is the flat-space energy of each component and keeps
every quadratic form real and explicit.

The slice energy of a multiplier ``X`` is ``E = -int sqrt|g| J^{t*}``.  With
cap fluxes ``flux_outer = -int sqrt|g| J^r`` at the outer cap and
``flux_inner = +int sqrt|g| J^r`` at the inner cap the divergence identity
integrated over a slab reads

    E(t2) - E(t1) + flux_outer + flux_inner + bulk = 0,

with ``bulk = int sqrt|g| (Re[(X + q) conj(h) f] + K)``.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry, quadrature, tensors
from .errors import InvalidParameter, TimelikenessLost


@dataclass(frozen=True)
class FieldJet:
    """Field values and coordinate gradients ``grad[..., a] = d_a h``."""

    value: np.ndarray
    grad: np.ndarray


# ---------------------------------------------------------------------------
# pointwise quadratic forms


def _re_outer(grad):
    """Re(conj(d_mu h) d_nu h), symmetric."""
    return np.real(np.einsum("...a,...b->...ab", np.conj(grad), grad))


def gradient_square(h_jet, g_inv):
    """``g^{ab} d_a h conj(d_b h)`` (real)."""
    return np.einsum("...ab,...ab->...", g_inv, _re_outer(h_jet.grad))


def energy_momentum_tensor(h_jet, g_jet):
    """T_ab = Re(conj(d_a h) d_b h) - 1/2 g_ab g^{cd} d_c h conj(d_d h)."""
    return _re_outer(h_jet.grad) - 0.5 * g_jet.g * gradient_square(h_jet, g_jet.g_inv)[..., None, None]


def deformation_tensor(X, dX, g_jet, realization="covariant", gamma=None):
    """pi^X_ab = (nabla_a X_b + nabla_b X_a) / 2.

    ``X[..., s]`` are components and ``dX[..., a, s] = d_a X^s``.  The
    ``"lie"`` realization evaluates half the Lie derivative of the metric
    instead.
    """
    if realization == "lie":
        return 0.5 * tensors.lie_derivative_metric(g_jet.g, g_jet.dg, X, dX)
    if realization != "covariant":
        raise InvalidParameter(f"unknown realization {realization!r}")
    if gamma is None:
        gamma = tensors.christoffel(g_jet.g_inv, g_jet.dg)
    X_low = np.einsum("...bs,...s->...b", g_jet.g, X)
    dX_low = (np.einsum("...abs,...s->...ab", g_jet.dg, X)
              + np.einsum("...bs,...as->...ab", g_jet.g, dX))
    nab = tensors.covariant_derivative_oneform(X_low, dX_low, gamma)
    return 0.5 * (nab + np.swapaxes(nab, -1, -2))


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class Corrector:
    """Scalar corrector ``q(r, theta)`` with its coordinate jet."""

    value: Callable
    grad: Callable
    hessian: Callable
    label: str = "q"

    def box(self, r, theta, g_jet, contracted):
        """box q = g^{ab} d_a d_b q - Gamma^c d_c q."""
        return (np.einsum("...ab,...ab->...", g_jet.g_inv, self.hessian(r, theta))
                - np.einsum("...c,...c->...", contracted, self.grad(r, theta)))


def constant_corrector(c):
    def value(r, theta):
        return np.full(np.broadcast(r, theta).shape, float(c))

    def grad(r, theta):
        return np.zeros(np.broadcast(r, theta).shape + (4,))

    def hessian(r, theta):
        return np.zeros(np.broadcast(r, theta).shape + (4, 4))

    return Corrector(value, grad, hessian, label=f"const({c})")


@dataclass
class MultiplierValues:
    X: np.ndarray
    dX: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    box_q: np.ndarray


@dataclass
class Multiplier:
    """Stationary vectorfield ``X`` with corrector ``q`` (``None`` means 0)."""

    X: geometry.Vectorfield
    q: Optional[Corrector] = None
    label: str = "X"
    delta: float = float("nan")  # verified timelike margin, when applicable
    _cache: dict = field(default_factory=dict, repr=False)

    def evaluate(self, r, theta, g_jet, contracted=None):
        zero_t = np.zeros(np.broadcast(r, theta).shape)
        X = np.asarray(self.X(zero_t, r, theta, zero_t), dtype=float)
        dX = np.asarray(self.X.jacobian(zero_t, r, theta, zero_t), dtype=float)
        if self.q is None:
            q = zero_t
            dq = np.zeros(zero_t.shape + (4,))
            box_q = zero_t
        else:
            if contracted is None:
                contracted = tensors.contracted_christoffel(
                    g_jet.g_inv, tensors.christoffel(g_jet.g_inv, g_jet.dg))
            q = self.q.value(r, theta)
            dq = self.q.grad(r, theta)
            box_q = self.q.box(r, theta, g_jet, contracted)
        return MultiplierValues(X, dX, q, dq, box_q)

    def on_background(self, background):
        key = id(background)
        if key not in self._cache:
            self._cache.clear()
            self._cache[key] = self.evaluate(background.R, background.TH, background.jet,
                                             background.contracted)
        return self._cache[key]


def time_multiplier():
    return Multiplier(geometry.killing_T(), None, label="T")


def phi_multiplier():
    return Multiplier(geometry.killing_Phi(), None, label="Phi")


def _values(mult, g_jet, r, theta):
    if isinstance(mult, MultiplierValues):
        return mult
    return mult.evaluate(r, theta, g_jet)


def j_current(mult, h_jet, g_jet, r=None, theta=None):
    """J_a = X^b T_ab + q Re(conj(h) d_a h) - 1/2 d_a q |h|^2 (lower index)."""
    mv = _values(mult, g_jet, r, theta)
    T = energy_momentum_tensor(h_jet, g_jet)
    J = np.einsum("...ab,...b->...a", T, mv.X)
    abs2 = np.abs(h_jet.value) ** 2
    J = J + mv.q[..., None] * np.real(np.conj(h_jet.value)[..., None] * h_jet.grad)
    return J - 0.5 * mv.dq * abs2[..., None]


def k_current(mult, h_jet, g_jet, r=None, theta=None, realization="covariant"):
    """K = pi^X . T + q grad h . grad conj(h) - 1/2 box q |h|^2."""
    mv = _values(mult, g_jet, r, theta)
    pi = deformation_tensor(mv.X, mv.dX, g_jet, realization)
    T = energy_momentum_tensor(h_jet, g_jet)
    Gi = g_jet.g_inv
    piT = np.einsum("...ab,...ac,...bd,...cd->...", pi, Gi, Gi, T)
    return (piT + mv.q * gradient_square(h_jet, Gi)
            - 0.5 * mv.box_q * np.abs(h_jet.value) ** 2)


def multiplier_source(mult, h_jet, forcing, r=None, theta=None, g_jet=None):
    """Re[(X + q) conj(h) f]: the forcing part of the divergence identity."""
    mv = _values(mult, g_jet, r, theta)
    Xh = np.einsum("...a,...a->...", mv.X, np.conj(h_jet.grad))
    return np.real((Xh + mv.q * np.conj(h_jet.value)) * forcing)


# ---------------------------------------------------------------------------
# redshift multiplier


def blend_function(r, a, r1, r2, b):
    """C^5 radial cutoff: 0 outside (a, b), 1 on [r1, r2]."""
    left = geometry.smoothstep((r - a) / (r1 - a))
    right = 1.0 - geometry.smoothstep((r - r2) / (b - r2))
    return np.where(r <= r1, left, np.where(r >= r2, right, 1.0))


def blend_derivative(r, a, r1, r2, b):
    left = geometry.smoothstep_prime((r - a) / (r1 - a)) / (r1 - a)
    right = -geometry.smoothstep_prime((r - r2) / (b - r2)) / (b - r2)
    return np.where(r <= r1, left, np.where(r >= r2, right, 0.0))


def default_blend_interval(profile, fraction=0.25):
    hz = profile.horizons
    r1, r2 = profile.middle_interval
    return (hz.r_event + fraction * (r1 - hz.r_event),
            hz.r_cosmo - fraction * (hz.r_cosmo - r2))


def redshift_multiplier_build(params, profile, blend_interval=None, n_check=(257, 33)):
    """N = chi T + (1 - chi) (-grad t*) with chi = 1 on the middle interval.

    ``blend_interval = (a, b)`` is where ``chi`` reaches zero.  Timelikeness
    is verified on an extended-grid sample; the margin ``delta`` with
    ``g(N, N) <= -delta`` is stored on the multiplier.
    """
    if blend_interval is None:
        blend_interval = default_blend_interval(profile)
    a, b = blend_interval
    r1, r2 = profile.middle_interval
    if not a < r1 < r2 < b:
        raise InvalidParameter("blend interval must enclose the middle interval",
                               blend_interval=blend_interval)

    def components(t, r, theta, phi):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        jet = geometry.metric_kerr_star(params, profile, r=r, theta=theta)
        chi = blend_function(r, a, r1, r2, b)
        e_t = np.zeros(r.shape + (4,))
        e_t[..., 0] = 1.0
        return chi[..., None] * e_t - (1.0 - chi)[..., None] * jet.g_inv[..., 0, :]

    def jacobian(t, r, theta, phi):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        jet = geometry.metric_kerr_star(params, profile, r=r, theta=theta)
        chi = blend_function(r, a, r1, r2, b)
        dchi = blend_derivative(r, a, r1, r2, b)
        dginv = tensors.inverse_derivative(jet.g_inv, jet.dg)  # [s, a, b]
        out = -(1.0 - chi)[..., None, None] * dginv[..., :, 0, :]
        out[..., 1, 0] += dchi
        out[..., 1, :] += dchi[..., None] * jet.g_inv[..., 0, :]
        return out

    X = geometry.Vectorfield(components, jacobian, label="N", stationary=True)
    hz = profile.horizons
    rr = np.linspace(hz.r_inner_cap, hz.r_outer_cap, n_check[0])
    th = (np.arange(n_check[1]) + 0.5) * np.pi / n_check[1]
    R, TH = np.meshgrid(rr, th, indexing="ij")
    jet = geometry.metric_kerr_star(params, profile, r=R, theta=TH)
    N = components(0.0, R, TH, 0.0)
    gNN = np.einsum("...a,...ab,...b->...", N, jet.g, N)
    worst = float(np.max(gNN))
    if worst >= 0.0:
        raise TimelikenessLost("g(N, N) >= 0 on the extended grid", max_gNN=worst)
    return Multiplier(X, None, label="N", delta=-worst)


# ---------------------------------------------------------------------------
# slice integrals


def _scalar_field_jets(state, background):
    """List of per-component FieldJets on the grid."""
    jets = []
    if state.u.shape[0] == 1:
        grad = background.scalar_gradient(state.u[0], state.v[0])
        jets.append(FieldJet(state.u[0], grad))
    else:
        slots = background.tensor_slots(np.real(state.u), np.real(state.v))
        for k in range(state.u.shape[0]):
            grad = np.stack([slots[k, 1 + a] for a in range(4)], axis=-1)
            jets.append(FieldJet(slots[k, 0], grad))
    return jets


def current_upper(mult, state, background):
    """Sum over components of the current with raised index, ``(n_r, n_theta, 4)``."""
    mv = mult.on_background(background)
    J = 0.0
    for jet in _scalar_field_jets(state, background):
        J = J + j_current(mv, jet, background.jet)
    return np.einsum("...ab,...b->...a", background.g_inv, J)


def _sin(background):
    return np.sin(background.TH)


def slice_energy(mult, state, background, weighted=True):
    """E = -int_Sigma sqrt|g| J^{t*} dr dtheta dphi."""
    J = current_upper(mult, state, background)
    dens = -J[..., 0]
    if weighted:
        dens = dens * background.sqrt_g
    return quadrature.integrate_slice(dens / _sin(background), background.grid)


def cap_fluxes(mult, state, background):
    """Instantaneous ``(flux_inner, flux_outer)`` rates through the caps."""
    J = current_upper(mult, state, background)
    dens = background.sqrt_g * J[..., 1] / _sin(background)
    inner = float(quadrature.integrate_sphere(dens[0]))
    outer = float(-quadrature.integrate_sphere(dens[-1]))
    return inner, outer


def bulk_density(mult, state, background, forcing=None):
    """int over a slice of sqrt|g| (K + Re[(X + q) conj(h) f])."""
    mv = mult.on_background(background)
    total = np.zeros(background.grid.shape)
    jets = _scalar_field_jets(state, background)
    for k, jet in enumerate(jets):
        total = total + k_current(mv, jet, background.jet)
        if forcing is not None:
            f = np.asarray(forcing).reshape((len(jets),) + background.grid.shape)[k]
            total = total + multiplier_source(mv, jet, f)
    return quadrature.integrate_slice(background.sqrt_g * total / _sin(background),
                                      background.grid)


def gradient_l2_squared(state, background, weighted=False):
    """sum_a ||d_a h||^2 over the slice (coordinate gradient, t* included)."""
    dens = 0.0
    for jet in _scalar_field_jets(state, background):
        dens = dens + np.sum(np.abs(jet.grad) ** 2, axis=-1)
    if weighted:
        dens = dens * background.sqrt_g / _sin(background)
    return quadrature.integrate_slice(dens, background.grid)


@dataclass
class EnergyReport:
    t_star: float
    energies: dict
    flux_inner: float
    flux_outer: float
    bulk_K: float
    identity_residual: float = float("nan")

    def as_row(self, names):
        return ([self.t_star] + [self.energies[n] for n in names]
                + [self.flux_inner, self.flux_outer, self.bulk_K, self.identity_residual])


@dataclass
class BalanceResult:
    residual: float
    E1: float
    E2: float
    flux_inner: float
    flux_outer: float
    bulk: float
    reports: list


def divergence_residual(mult, snapshots, background, interval=None, forcing=None):
    """Normalised imbalance of the integrated divergence identity.

    ``snapshots`` is a uniformly spaced time series of StateVectors and
    ``forcing`` an optional callable ``f(t_star)`` for the scalar source.
    """
    if interval is not None:
        lo, hi = interval
        snapshots = [s for s in snapshots if lo - 1e-12 <= s.t_star <= hi + 1e-12]
    if len(snapshots) < 2:
        raise InvalidParameter("need at least two snapshots in the interval")
    times = np.array([s.t_star for s in snapshots])
    fin, fout, bulk, reports = [], [], [], []
    for s in snapshots:
        i, o = cap_fluxes(mult, s, background)
        f = None if forcing is None else forcing(s.t_star)
        b = bulk_density(mult, s, background, f)
        fin.append(i)
        fout.append(o)
        bulk.append(b)
    E1 = slice_energy(mult, snapshots[0], background)
    E2 = slice_energy(mult, snapshots[-1], background)
    Fi = quadrature.integrate_time(fin, times)
    Fo = quadrature.integrate_time(fout, times)
    B = quadrature.integrate_time(bulk, times)
    residual = abs(E2 - E1 + Fi + Fo + B) / abs(E1)
    reports = [EnergyReport(float(t), {mult.label: None}, i, o, b)
               for t, i, o, b in zip(times, fin, fout, bulk)]
    return BalanceResult(float(residual), E1, E2, Fi, Fo, B, reports)


def energy_series(mults, snapshots, background, forcing=None):
    """Per-snapshot EnergyReports with the running identity residual of the first multiplier."""
    times = np.array([s.t_star for s in snapshots])
    main = mults[0]
    E = {m.label: [slice_energy(m, s, background) for s in snapshots] for m in mults}
    rates = [cap_fluxes(main, s, background) for s in snapshots]
    bulk = [bulk_density(main, s, background, None if forcing is None else forcing(s.t_star))
            for s in snapshots]
    out = []
    E0 = E[main.label][0]
    for n in range(len(snapshots)):
        sl = slice(0, n + 1)
        Fi = quadrature.integrate_time([r[0] for r in rates[sl]], times[sl])
        Fo = quadrature.integrate_time([r[1] for r in rates[sl]], times[sl])
        B = quadrature.integrate_time(bulk[sl], times[sl])
        res = abs(E[main.label][n] - E0 + Fi + Fo + B) / abs(E0) if E0 != 0 else float("nan")
        out.append(EnergyReport(float(times[n]), {k: v[n] for k, v in E.items()},
                                rates[n][0], rates[n][1], bulk[n], res))
    return out


# ---------------------------------------------------------------------------
# coercivity and Gronwall


@dataclass
class CoercivityReport:
    c: float
    C: float
    samples: int

    @property
    def ratio(self):
        return self.C / self.c


def coercivity_constants(mult, background, n_samples=64, seed=0, n_modes=4, weighted=True):
    """Measure ``c ||grad h||^2 <= E <= C ||grad h||^2`` on random smooth fields.

    Fields are random combinations of low radial and polar modes, with a
    random time derivative of the same shape.  The reference norm uses the
    ``sqrt|g|`` weight when ``weighted`` is set.
    """
    from .evolution.solver import StateVector

    rng = np.random.default_rng(seed)
    grid = background.grid
    x = (background.R - grid.r_min) / (grid.r_max - grid.r_min)
    th = background.TH
    par = background.scalar_parity[0]
    ratios = []
    for _ in range(n_samples):
        fields = []
        for _ in range(2):
            f = np.zeros(grid.shape)
            for i in range(n_modes):
                for j in range(n_modes):
                    ang = np.cos(2 * j * th) if par > 0 else np.sin((2 * j + 1) * th)
                    f += rng.standard_normal() * np.cos(np.pi * i * x + rng.uniform(0, 2 * np.pi)) * ang
            fields.append(f)
        s = StateVector(fields[0][None], fields[1][None])
        E = slice_energy(mult, s, background)
        ref = gradient_l2_squared(s, background, weighted=weighted)
        ratios.append(E / ref)
    ratios = np.array(ratios)
    return CoercivityReport(float(ratios.min()), float(ratios.max()), n_samples)


@dataclass
class GronwallRun:
    """Inputs of one run for the Gronwall-type bound."""

    times: np.ndarray
    h_norms: np.ndarray  # ||h(t)||_{H^1} at each time
    data_norm: float
    forcing_norms: Optional[np.ndarray] = None  # ||f(t)|| at each time
    label: str = ""


@dataclass
class GronwallReport:
    constant: float
    per_run: list
    unconstrained: bool
    degraded: bool


def gronwall_bound_check(runs, sigma):
    """Smallest C with sup e^{-sigma t} ||h|| <= C (data + int e^{-sigma s} ||f|| ds).

    Runs with vanishing right-hand side and vanishing solution carry no
    constraint (reported as NaN).  ``degraded`` flags a spread larger than 2x
    among the constrained runs, which for a refinement family signals
    resolution dependence.
    """
    per_run = []
    for run in runs:
        t = np.asarray(run.times, dtype=float)
        lhs = float(np.max(np.exp(-sigma * t) * np.asarray(run.h_norms)))
        rhs = float(run.data_norm)
        if run.forcing_norms is not None:
            rhs += quadrature.integrate_time(np.exp(-sigma * t) * np.asarray(run.forcing_norms), t)
        if rhs == 0.0:
            per_run.append(float("nan") if lhs == 0.0 else float("inf"))
        else:
            per_run.append(lhs / rhs)
    finite = [c for c in per_run if np.isfinite(c)]
    if not finite:
        return GronwallReport(float("nan"), per_run, True, False)
    degraded = max(finite) > 2.0 * min(finite)
    return GronwallReport(max(finite), per_run, False, degraded)
