"""Quadrature weights shared by slice integrals, fluxes and norms."""
import numpy as np

# Gregory end corrections: fourth order on uniform nodes
_GREGORY_END = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])


def gregory_weights(n, h):
    """Weights of the fourth-order Gregory rule on ``n`` uniform nodes.

    Falls back to the trapezoid rule when ``n < 6``.
    """
    if n < 2:
        return np.zeros(n)
    if n < 6:
        w = np.ones(n)
        w[0] = w[-1] = 0.5
        return h * w
    w = np.ones(n)
    w[:3] = _GREGORY_END
    w[-3:] = _GREGORY_END[::-1]
    return h * w


def fejer_weights(n):
    """Fejer's first rule for ``int_0^pi G(theta) sin(theta) dtheta``.

    Nodes are the staggered polar nodes ``(j + 1/2) pi / n``; the integrand
    passed to the weights is ``G``, i.e. with the ``sin(theta)`` removed.
    """
    theta = (np.arange(n) + 0.5) * np.pi / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k * k - 1.0)
    return 2.0 / n * (1.0 - 2.0 * s.sum(axis=1))


def slice_weights(grid):
    """``(n_r, n_theta)`` weights for ``int dr sin(theta) dtheta dphi`` of ``G``."""
    wr = gregory_weights(grid.n_r, grid.spacing_r)
    wt = fejer_weights(grid.n_theta)
    return 2.0 * np.pi * np.outer(wr, wt)


def integrate_slice(values_over_sin, grid):
    """Integral of ``values_over_sin * sin(theta)`` over a slice (phi gives 2 pi)."""
    w = slice_weights(grid)
    return float(np.sum((w * values_over_sin).ravel()))


def integrate_sphere(values_over_sin):
    """``2 pi int_0^pi G sin(theta) dtheta`` along the last axis."""
    w = fejer_weights(values_over_sin.shape[-1])
    return 2.0 * np.pi * np.sum(values_over_sin * w, axis=-1)


def integrate_time(values, times):
    """Gregory-rule time integral over uniformly spaced samples."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        return 0.0
    h = (times[-1] - times[0]) / (len(times) - 1)
    if not np.allclose(np.diff(times), h, rtol=1e-9, atol=1e-12):
        return float(np.trapezoid(values, times))
    return float(np.sum(gregory_weights(len(times), h) * values))
