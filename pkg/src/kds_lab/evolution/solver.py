"""Right-hand sides, time stepping and the evolution driver."""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import gauge, tensors
from ..errors import InvalidParameter, NonFiniteState, SignatureLost, UnsupportedBackground
from .background import (AXISYMMETRIC, SECOND_PAIRS, SPHERICAL, spherical_expand,
                         spherical_projection)

SCALAR = "scalar"
TENSOR = "tensor"
NONLINEAR = "nonlinear"


@dataclass
class StateVector:
    """Fields ``u`` and ``v = d_t u`` with shape ``(n_comp, n_r, n_theta)``."""

    u: np.ndarray
    v: np.ndarray
    t_star: float = 0.0

    def copy(self):
        return StateVector(self.u.copy(), self.v.copy(), self.t_star)

    @property
    def n_comp(self):
        return self.u.shape[0]


@dataclass(frozen=True)
class EvolutionConfig:
    cfl: float = 0.25
    t_end: float = 1.0
    stencil_order: int = 4
    dissipation_strength: float = 0.01
    output_stride: int = 1

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise InvalidParameter("cfl must lie in (0, 1)", cfl=self.cfl)
        if self.dissipation_strength < 0:
            raise InvalidParameter("dissipation must be non-negative",
                                   dissipation_strength=self.dissipation_strength)
        if self.stencil_order != 4:
            raise InvalidParameter("only fourth-order stencils are implemented",
                                   stencil_order=self.stencil_order)
        if self.output_stride < 1:
            raise InvalidParameter("output_stride must be >= 1")


# ---------------------------------------------------------------------------
# right-hand sides


class ScalarRHS:
    """box_g u = f for a single azimuthal mode."""

    kind = SCALAR

    def __init__(self, background, forcing: Optional[Callable] = None):
        self.bg = background
        self.forcing = forcing
        self.parity = background.scalar_parity

    def __call__(self, state):
        bg = self.bg
        f = None
        if self.forcing is not None:
            f = np.asarray(self.forcing(state.t_star)).reshape(state.u.shape)
        vdot = bg.kernels.scalar_rhs(state.u, state.v, bg.coef, bg.mode_m,
                                     bg.grid.spacing_r, bg.grid.spacing_theta,
                                     self.parity, f)
        return state.v, vdot


class TensorRHS:
    """Linear gauged Einstein system L h = 0.

    The principal part ``box / 2`` runs through the divergence-form scalar
    kernel on each component; the induced lower-order operator supplies the
    coupling as a forcing term.
    """

    kind = TENSOR

    def __init__(self, background, symmetry=SPHERICAL):
        _check_tensor_background(background, symmetry)
        self.bg = background
        self.symmetry = symmetry
        self.parity = background.tensor_parity
        self.lower = background.lower_order_operator()

    def __call__(self, state):
        bg = self.bg
        slots = bg.tensor_slots(state.u, state.v)
        f = -2.0 * bg.kernels.contract_operator(self.lower, slots[:, :5])
        vdot = bg.kernels.scalar_rhs(state.u, state.v, bg.coef, 0, bg.grid.spacing_r,
                                     bg.grid.spacing_theta, self.parity, f)
        return state.v, _sector(vdot, bg.grid, self.symmetry)

    def project(self, u):
        return spherical_projection(u, self.bg.grid) if self.symmetry == SPHERICAL else u


class NonlinearRHS:
    """Full gauge-fixed Einstein system for g = g_b + h with g0 = g_b.

    E is linear in second derivatives with coefficient ``G^{ab}/2`` of the
    full metric, so ``E = G^{ab} d_a d_b h / 2 + N`` with ``N`` the value of
    E at vanishing second derivatives of h.  The background part of the
    principal term uses the scalar kernel; the rest enters as forcing.
    """

    kind = NONLINEAR

    def __init__(self, background, symmetry=SPHERICAL):
        _check_tensor_background(background, symmetry)
        self.bg = background
        self.symmetry = symmetry
        self.parity = background.tensor_parity
        self._ref = None

    def project(self, u):
        return spherical_projection(u, self.bg.grid) if self.symmetry == SPHERICAL else u

    def _reference(self, cols):
        if self._ref is None:
            bjet = _columns_of(self.bg.jet, cols)
            self._ref = (bjet, gauge.reference_christoffels(bjet))
        return self._ref

    def __call__(self, state):
        bg = self.bg
        cols = equatorial_columns(bg.grid) if self.symmetry == SPHERICAL else slice(None)
        slots = bg.tensor_slots(state.u, state.v)[..., cols]
        d2 = slots[:, 5:].copy()
        slots[:, 5:] = 0.0
        bjet, ref = self._reference(cols)
        jet = bjet + bg.jet_from_slots(slots)
        check_signature(jet.g)
        E = gauge.gauge_fixed_einstein(jet, bjet, bg.lam, reference=ref)
        N = np.moveaxis(tensors.pack_sym(E), -1, 0)
        dG = np.moveaxis(jet.g_inv - bjet.g_inv, (-2, -1), (0, 1))
        X = 2.0 * N
        contracted = bg.contracted[:, cols]
        for a in range(4):
            X = X + contracted[..., a] * slots[:, 1 + a]
        for n, (a, b) in enumerate(SECOND_PAIRS):
            if (a, b) == (0, 0):
                continue
            X = X + (1.0 if a == b else 2.0) * dG[a, b] * d2[:, n]
        ratio = bjet.g_inv[..., 0, 0] / jet.g_inv[..., 0, 0]
        if self.symmetry == SPHERICAL:
            full = np.zeros((10,) + bg.grid.shape)
            full[..., cols] = X
            X = full
        vdot = bg.kernels.scalar_rhs(state.u, state.v, bg.coef, 0, bg.grid.spacing_r,
                                     bg.grid.spacing_theta, self.parity, -X)
        if self.symmetry == SPHERICAL:
            return state.v, spherical_expand(vdot[..., cols] * ratio, bg.grid, cols)
        return state.v, vdot * ratio


def equatorial_columns(grid):
    """The theta column pair straddling the equator."""
    n = grid.n_theta
    return slice((n - 1) // 2, n // 2 + 1)


def _sector(vdot, grid, symmetry):
    # spherical fields are read off at the equator, away from the axis
    # where theta stencils of h_phph = K sin^2(theta) are least accurate
    if symmetry != SPHERICAL:
        return vdot
    cols = equatorial_columns(grid)
    return spherical_expand(vdot[..., cols], grid, cols)


def _columns_of(jet, cols):
    return tensors.MetricJet(jet.g[:, cols], jet.g_inv[:, cols], jet.dg[:, cols],
                             None if jet.d2g is None else jet.d2g[:, cols])


def _check_tensor_background(background, symmetry):
    if background.params.spin != 0.0 or background.mode_m != 0:
        raise UnsupportedBackground("tensor evolution needs a = 0 and m = 0",
                                    spin=background.params.spin, mode_m=background.mode_m)
    if symmetry not in (SPHERICAL, AXISYMMETRIC):
        raise InvalidParameter(f"unknown symmetry {symmetry!r}")


def check_signature(g):
    det = np.linalg.det(g)
    spatial = np.linalg.eigvalsh(g[..., 1:, 1:])
    if np.any(det >= 0) or np.any(spatial[..., 0] <= 0):
        raise SignatureLost("perturbed metric is no longer Lorentzian with spacelike slices",
                            max_det=float(np.max(det)),
                            min_spatial_eig=float(np.min(spatial[..., 0])))


def make_rhs(kind, background, forcing=None, symmetry=SPHERICAL):
    """Right-hand side object for ``kind``.

    Tensor and nonlinear runs default to the spherically symmetric sector:
    the staggered-axis discretisation of the full axisymmetric tensor
    system does not enforce the axis regularity relations between
    components and develops a fast-growing axis mode.
    """
    if kind == SCALAR:
        return ScalarRHS(background, forcing)
    if forcing is not None:
        raise InvalidParameter("forcing is only supported for scalar runs")
    if kind == TENSOR:
        return TensorRHS(background, symmetry)
    if kind == NONLINEAR:
        return NonlinearRHS(background, symmetry)
    raise InvalidParameter(f"unknown rhs kind {kind!r}")


def scalar_wave_rhs(state, background, forcing=None):
    return ScalarRHS(background, forcing)(state)


def tensor_wave_rhs(state, background, symmetry=SPHERICAL):
    return TensorRHS(background, symmetry)(state)


def nonlinear_rhs(state, params, g0_background, symmetry=SPHERICAL):
    if params != g0_background.params:
        raise InvalidParameter("g0 background must be built for the same parameters")
    return NonlinearRHS(g0_background, symmetry)(state)


# ---------------------------------------------------------------------------
# stepping


def courant_dt(grid, background, cfl):
    """cfl times the smallest cell-crossing time of the local light cones."""
    G = background.g_inv
    gtt, gthth, gpp = G[..., 0, 0], G[..., 2, 2], G[..., 3, 3]
    speed_t = np.sqrt(gthth / -gtt)
    dt = min(grid.spacing_r / _max_radial_speed(background),
             grid.spacing_theta / np.max(speed_t))
    if grid.mode_m != 0:
        omega = abs(grid.mode_m) * np.sqrt(np.max(gpp / -gtt))
        dt = min(dt, 1.0 / omega)
    return cfl * float(dt)


def crossing_time(grid, background):
    """Radial extent divided by the fastest radial characteristic speed."""
    return (grid.r_max - grid.r_min) / _max_radial_speed(background)


def _max_radial_speed(background):
    G = background.g_inv
    gtt, gtr, grr = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    disc = np.sqrt(np.maximum(gtr * gtr - gtt * grr, 0.0))
    return float(np.max(np.maximum(np.abs((gtr + disc) / gtt), np.abs((gtr - disc) / gtt))))


def _check_finite(state):
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
        raise NonFiniteState("non-finite values in the evolved state", t_star=state.t_star)


def rk4_step(state, rhs, dt, dissipation=0.0):
    """Classic RK4 followed by a Kreiss-Oliger update of both fields."""
    if dt == 0.0:
        return state.copy()

    def shifted(k, a):
        return StateVector(state.u + a * k[0], state.v + a * k[1], state.t_star + a * dt)

    k1 = rhs(state)
    k2 = rhs(shifted(k1, 0.5 * dt))
    k3 = rhs(shifted(k2, 0.5 * dt))
    k4 = rhs(shifted(k3, dt))
    u = state.u + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    v = state.v + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    if dissipation > 0.0:
        bg = rhs.bg
        g = bg.grid
        u = u + dt * bg.kernels.ko_dissipation(u, rhs.parity, dissipation,
                                               g.spacing_r, g.spacing_theta)
        v = v + dt * bg.kernels.ko_dissipation(v, rhs.parity, dissipation,
                                               g.spacing_r, g.spacing_theta)
    project = getattr(rhs, "project", None)
    if project is not None:
        u, v = project(u), project(v)
    out = StateVector(u, v, state.t_star + dt)
    _check_finite(out)
    return out


@dataclass
class EvolutionResult:
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    energies: dict = field(default_factory=dict)
    dt: float = 0.0
    steps: int = 0
    completed: bool = True
    error: Optional[dict] = None


def evolve(initial, config, background, rhs_kind=SCALAR, forcing=None,
           energy_fns=None, dt=None, keep_snapshots=True, symmetry=SPHERICAL):
    """Integrate from ``initial`` to ``config.t_end``.

    ``energy_fns`` maps names to callables ``f(state) -> float`` evaluated at
    every output.  On a step failure the partial series is returned with the
    error recorded.
    """
    rhs = make_rhs(rhs_kind, background, forcing, symmetry)
    if dt is None:
        dt = courant_dt(background.grid, background, config.cfl)
    span = config.t_end - initial.t_star
    n_steps = max(int(np.ceil(span / dt - 1e-12)), 0)
    if n_steps:
        dt = span / n_steps
    energy_fns = energy_fns or {}
    res = EvolutionResult(energies={k: [] for k in energy_fns}, dt=dt)
    state = initial.copy()
    project = getattr(rhs, "project", None)
    if project is not None:  # data outside the evolved sector is dropped
        state = StateVector(project(state.u), project(state.v), state.t_star)

    def record(s):
        res.times.append(s.t_star)
        if keep_snapshots:
            res.snapshots.append(s)
        for name, fn in energy_fns.items():
            res.energies[name].append(float(fn(s)))

    record(state)
    for step in range(1, n_steps + 1):
        try:
            state = rk4_step(state, rhs, dt, config.dissipation_strength)
        except (NonFiniteState, SignatureLost) as exc:
            res.completed = False
            res.error = exc.to_dict()
            break
        res.steps = step
        if step % config.output_stride == 0 or step == n_steps:
            record(state)
    return res


# ---------------------------------------------------------------------------
# snapshots


def write_snapshot(stem, grid, state, components):
    """Little-endian float64 payload plus JSON sidecar header.

    Complex fields are stored as interleaved (re, im) pairs.
    """
    stem = Path(stem)
    data = np.stack([state.u, state.v])
    is_complex = bool(np.iscomplexobj(data))
    flat = data.astype("<c16").view("<f8") if is_complex else data.astype("<f8")
    stem.with_suffix(".bin").write_bytes(np.ascontiguousarray(flat).tobytes())
    header = {"grid": grid.as_dict(), "mode": grid.mode_m, "components": list(components),
              "t_star": state.t_star, "fields": ["u", "v"], "shape": list(data.shape),
              "dtype": "complex128-interleaved" if is_complex else "float64",
              "byte_order": "little"}
    stem.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))
    return header


def read_snapshot(stem):
    stem = Path(stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    raw = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f8")
    if header["dtype"].startswith("complex"):
        raw = raw.view("<c16")
    data = raw.reshape(header["shape"])
    return header, StateVector(data[0].copy(), data[1].copy(), header["t_star"])
