"""Reusable run setups: backgrounds, initial data and multipliers.

The CLI and the acceptance suite build their runs through these helpers so
that both exercise identical configurations.
"""
from dataclasses import dataclass

import numpy as np

from . import currents, gauge, geometry
from .errors import InvalidParameter
from .evolution.background import Background
from .evolution.grid import build_grid
from .evolution.solver import StateVector


@dataclass
class Setup:
    params: object
    horizons: object
    profile: object
    grid: object
    background: object


def make_setup(lam=3.0, mass=0.1, spin=0.0, n_r=64, n_theta=16, mode_m=0, spin_cap=0.1,
               epsilon_fraction=0.05):
    params = geometry.validate_params(lam, mass, spin, spin_cap=spin_cap)
    hz = geometry.horizon_radii(params, epsilon_fraction=epsilon_fraction)
    profile = geometry.chart_profile_build(params, hz)
    grid = build_grid(hz, n_r, n_theta, mode_m=mode_m)
    return Setup(params, hz, profile, grid, Background(params, profile, grid))


def setup_from_config(cfg, n_r=None):
    p, g = cfg.params, cfg.grid
    return make_setup(p.lam, p.mass, p.spin, n_r or g.n_r, g.n_theta, g.mode_m, p.spin_cap,
                      g.epsilon_ext_fraction)


def refined_setup(setup):
    """Same scenario on ``grid.refined()`` (halved spacings, nested radial nodes)."""
    grid = setup.grid.refined()
    return Setup(setup.params, setup.horizons, setup.profile, grid,
                 Background(setup.params, setup.profile, grid))


def default_center(profile):
    r1, r2 = profile.middle_interval
    return 0.5 * (r1 + r2)


def scalar_pulse(setup, amplitude=1.0, center=None, width=0.05):
    """Time-symmetric radial Gaussian, times ``sin^|m| theta`` for a mode m."""
    center = default_center(setup.profile) if center is None else center
    bg = setup.background
    u = amplitude * np.exp(-((bg.R - center) / width) ** 2)
    m = setup.grid.mode_m
    if m != 0:
        u = (u * np.sin(bg.TH) ** abs(m)).astype(complex)
    u = u[None]
    return StateVector(u, np.zeros_like(u))


def tensor_bump(setup, amplitude=1e-3, center=None, width=0.08, nonlinear=True):
    """Spherically symmetric bump in ``h_tt``, ``h_rr`` and ``K``, slice-projected.

    ``h_thth = K`` and ``h_phph = K sin^2 theta`` with ``K = b r^2 / 2``.  The
    time derivatives of the ``t``-components are fixed by the slice gauge
    projection so that the gauge condition holds initially.
    """
    center = default_center(setup.profile) if center is None else center
    bg = setup.background
    b = amplitude * np.exp(-((bg.R - center) / width) ** 2)
    h0 = np.zeros(setup.grid.shape + (4, 4))
    h0[..., 0, 0] = b
    h0[..., 1, 1] = b
    h0[..., 2, 2] = 0.5 * b * bg.R ** 2
    h0[..., 3, 3] = h0[..., 2, 2] * np.sin(bg.TH) ** 2
    h1 = np.zeros_like(h0)
    project = gauge.gauge_project_slice_nonlinear if nonlinear else gauge.gauge_project_slice
    h0, h1 = project(h0, h1, bg)
    return StateVector(bg.pack(h0), bg.pack(h1))


def multipliers(names, setup):
    out = []
    for name in names:
        if name == "T":
            out.append(currents.time_multiplier())
        elif name == "Phi":
            out.append(currents.phi_multiplier())
        elif name == "N":
            out.append(currents.redshift_multiplier_build(setup.params, setup.profile))
        else:
            raise InvalidParameter(f"unknown multiplier {name!r}")
    return out


def upsilon_max(setup, state):
    """max |Upsilon(g_b + h, g_b)| over the grid for a packed tensor state."""
    bg = setup.background
    jet = bg.jet + bg.jet_from_slots(bg.tensor_slots(np.real(state.u), np.real(state.v)))
    return float(np.abs(gauge.constraint_op(jet, bg.jet)).max())
