"""Uniform (r, theta) grid on the extended domain with a staggered polar axis.

Radial nodes include both caps.  Polar nodes sit at ``(j + 1/2) * pi / n``
so no node lies on an axis; values across a pole are supplied by parity
ghosts, ``u(-theta) = p * u(theta)``.  A scalar azimuthal mode ``m`` has
``p = (-1)^m``; tensor components additionally flip sign once per theta
index they carry.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import GridTooCoarse

MIN_POINTS = 16

# fourth-order stencils, weights in units of 1/(12 h) and 1/(12 h^2)
D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0])
D1_BOUNDARY = np.array([[-25.0, 48.0, -36.0, 16.0, -3.0, 0.0],
                        [-3.0, -10.0, 18.0, -6.0, 1.0, 0.0]])
D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])
D2_BOUNDARY = np.array([[45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
                        [10.0, -15.0, -4.0, 14.0, -6.0, 1.0]])
KO_WEIGHTS = np.array([1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0])


@dataclass(frozen=True)
class Grid2D:
    r_min: float
    r_max: float
    n_r: int
    n_theta: int
    mode_m: int = 0

    @property
    def spacing_r(self):
        return (self.r_max - self.r_min) / (self.n_r - 1)

    @property
    def spacing_theta(self):
        return np.pi / self.n_theta

    @property
    def r(self):
        return np.linspace(self.r_min, self.r_max, self.n_r)

    @property
    def theta(self):
        return (np.arange(self.n_theta) + 0.5) * self.spacing_theta

    def mesh(self):
        return np.meshgrid(self.r, self.theta, indexing="ij")

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    def as_dict(self):
        return {"r_min": self.r_min, "r_max": self.r_max, "n_r": self.n_r,
                "n_theta": self.n_theta, "mode_m": self.mode_m,
                "spacing_r": self.spacing_r, "spacing_theta": self.spacing_theta}

    def refined(self):
        """Grid with halved spacings; radial nodes nest, polar nodes interleave."""
        return Grid2D(self.r_min, self.r_max, 2 * self.n_r - 1, 2 * self.n_theta,
                      self.mode_m)


def build_grid(horizons, n_r, n_theta, mode_m=0):
    if n_r < MIN_POINTS or n_theta < MIN_POINTS:
        raise GridTooCoarse(f"need at least {MIN_POINTS} points per direction",
                            n_r=n_r, n_theta=n_theta)
    return Grid2D(horizons.r_inner_cap, horizons.r_outer_cap, int(n_r), int(n_theta),
                  int(mode_m))


def scalar_parity(mode_m):
    return 1 if mode_m % 2 == 0 else -1


def tensor_parity(mode_m, pairs):
    """Per-component pole parity for components listed as index tuples."""
    base = scalar_parity(mode_m)
    return np.array([base * (-1) ** sum(1 for i in pair if i == 2) for pair in pairs],
                    dtype=np.int64)


def restrict_to_coarse(fine, parity=1):
    """Map a field on ``grid.refined()`` to the coarse grid with O(h^4) error.

    Radial nodes are injected; polar values are interpolated to the coarse
    staggered nodes (midway between fine pairs) with the cubic midpoint rule.
    """
    u = np.asarray(fine)[..., ::2, :]
    n = u.shape[-1]
    ext = np.concatenate([parity * u[..., :1], u, parity * u[..., -1:]], axis=-1)
    # coarse node j lies between fine nodes 2j and 2j+1 (ext offset 1)
    a = ext[..., 0:n - 1:2]
    b = ext[..., 1:n:2]
    c = ext[..., 2:n + 1:2]
    d = ext[..., 3:n + 2:2]
    return (-a + 9.0 * b + 9.0 * c - d) / 16.0
