"""Versioned tolerance table shared by the CLI checks and the acceptance suite."""
import copy

VERSION = "2026.10-1"

_TABLE = {
    # exact-geometry identities
    "inverse_residual": 1e-12,
    "delta_at_horizon": 1e-12,
    "killing_deformation": 1e-10,
    "upsilon_background": 1e-12,
    "geometry_runtime_s": 10.0,
    # Einstein residual of the stencil Ricci
    "ricci_order": 3.5,
    "ricci_abs_at_256": 1e-6,
    "ricci_resolutions": [64, 128, 256],
    "ricci_runtime_s": 120.0,
    # regular chart
    "middle_interval_F": 1e-14,
    # divergence identity
    "divergence_residual_128": 1e-3,
    "divergence_shrink": 6.0,
    "divergence_runtime_s": 300.0,
    # redshift multiplier and coercivity
    "coercivity_ratio": 1e3,
    # slice projection
    "projection_floor_factor": 10.0,
    "projection_quadratic": [80.0, 120.0],
    # quadratic remainder
    "nonlinear_halving": [3.5, 4.5],
    # constraint propagation
    "constraint_refinement": 8.0,
    "constraint_crossings": 5.0,
    "constraint_amplitude": 1e-3,
    # decay fits
    "decay_resolution_change": 0.10,
    "decay_spin_change": 0.20,
    "decay_runtime_s": 600.0,
    # interpolation toy
    "interpolation_tol": 1e-12,
    "interpolation_fields": 10000,
    # scalar self-convergence
    "convergence_order": 3.0,
}


def get(name):
    return copy.deepcopy(_TABLE[name])


def table():
    """The full table with its version, as embedded in every manifest."""
    return {"version": VERSION, "values": copy.deepcopy(_TABLE)}
