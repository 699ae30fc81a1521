"""Sobolev-type norms, decay fits, the interpolation check and convergence orders."""
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import (InvalidParameter, NonMonotoneRefinement, NonPositiveEnergy,
                     RegularityBudgetExceeded, WindowTooShort)

COORDINATE = "coordinate"
WEIGHTED = "weighted"
MAX_ORDER = 6  # derivative budget of the repeated fourth-order stencils
MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class NormSpec:
    k: int
    alpha: float = 0.0
    measure: str = COORDINATE

    def __post_init__(self):
        if not 0 <= self.k <= MAX_ORDER:
            raise RegularityBudgetExceeded(f"k must lie in 0..{MAX_ORDER}", k=self.k)
        if self.measure not in (COORDINATE, WEIGHTED):
            raise InvalidParameter(f"unknown measure {self.measure!r}")


@dataclass(frozen=True)
class DecayFit:
    rate: float  # h-convention: E ~ exp(-2 rate t)
    energy_rate: float
    amplitude: float
    window: tuple
    residual: float
    resolution_tag: str = ""

    def as_dict(self):
        return {"rate": self.rate, "energy_rate": self.energy_rate,
                "amplitude": self.amplitude, "window": list(self.window),
                "residual": self.residual, "resolution_tag": self.resolution_tag,
                "conventions": {"rate": "amplitude of h, E ~ exp(-2 rate t)",
                                "energy_rate": "slice energy, E ~ exp(-energy_rate t)"}}


# ---------------------------------------------------------------------------
# slice norms


def _all_derivatives(u, grid, kernels, parity, k):
    """Derivative families up to order ``k``, parity-consistent in theta."""
    m = grid.mode_m
    levels = [[(u, parity)]]
    for _ in range(k):
        nxt = []
        for f, p in levels[-1]:
            f3 = f[None]
            nxt.append((kernels.dr1(f3, grid.spacing_r)[0], p))
            nxt.append((kernels.dth1(f3, [p], grid.spacing_theta)[0], -p))
            if m != 0:
                nxt.append((1j * m * f, p))
        levels.append(nxt)
    return levels


def hk_norm(field_slice, k, measure=COORDINATE, grid=None, background=None, kernels=None,
            parity=None):
    """Cumulative ``H^k`` norm of a field on a slice.

    ``field_slice`` is ``(n_r, n_theta)`` or ``(n_comp, n_r, n_theta)``; tensor
    components are summed.  The measure is ``dr sin(theta) dtheta dphi``,
    optionally weighted by ``sqrt|g| / sin(theta)``.
    """
    spec = NormSpec(k, 0.0, measure)
    if background is not None:
        grid = background.grid
        kernels = kernels or background.kernels
    if grid is None:
        raise InvalidParameter("hk_norm needs a grid or a background")
    if kernels is None:
        from .evolution.kernels import default as kernels
    u = np.asarray(field_slice)
    if u.ndim == 2:
        u = u[None]
    if parity is None:
        if u.shape[0] == 1:
            parity = [1 if grid.mode_m % 2 == 0 else -1]
        elif background is not None:
            parity = background.tensor_parity
        else:
            raise InvalidParameter("tensor fields need a parity per component")
    parity = np.broadcast_to(np.asarray(parity, dtype=float), (u.shape[0],))
    weight = np.ones(grid.shape)
    if spec.measure == WEIGHTED:
        if background is None:
            raise InvalidParameter("the weighted measure needs a background")
        weight = background.sqrt_g / np.sin(background.TH)
    w = quadrature.slice_weights(grid) * weight
    total = 0.0
    for c in range(u.shape[0]):
        for level in _all_derivatives(u[c], grid, kernels, parity[c], spec.k):
            for f, _ in level:
                total += float(np.sum((w * np.abs(f) ** 2).ravel()))
    return float(np.sqrt(max(total, 0.0)))


def weighted_spacetime_norm(series, k, alpha, times=None, **norm_kw):
    """``( int e^{2 alpha t} ||h(t)||_{H^k}^2 dt )^{1/2}`` over the run window.

    ``series`` is a sequence of slice fields or of precomputed norms (floats);
    the time integral uses the trapezoid rule on the given samples.
    """
    if times is None:
        times = [s.t_star for s in series]
        values = [hk_norm(s.u, k, **norm_kw) for s in series]
    else:
        values = [float(s) if np.ndim(s) == 0 else hk_norm(s, k, **norm_kw) for s in series]
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        return 0.0
    integrand = np.exp(2.0 * alpha * times) * values ** 2
    return float(np.sqrt(np.trapezoid(integrand, times)))


def d_kam_norm(forcing_series, data_pair, k, alpha, m, times=None, **norm_kw):
    """``||f||_{H^{k+m-1, alpha}} + ||h0||_{H^{k+m}} + ||h1||_{H^{k+m-1}}``.

    ``forcing_series`` may be ``None`` (no forcing) and ``data_pair`` may be
    ``None`` (no data).
    """
    if k + m > MAX_ORDER:
        raise RegularityBudgetExceeded("k + m exceeds the derivative budget",
                                       k=k, m=m, budget=MAX_ORDER)
    if k < 0 or m < 1:
        raise InvalidParameter("need k >= 0 and m >= 1", k=k, m=m)
    total = 0.0
    if forcing_series is not None:
        total += weighted_spacetime_norm(forcing_series, k + m - 1, alpha, times=times,
                                         **norm_kw)
    if data_pair is not None:
        h0, h1 = data_pair
        total += hk_norm(h0, k + m, **norm_kw) + hk_norm(h1, k + m - 1, **norm_kw)
    return total


# ---------------------------------------------------------------------------
# decay fits


def decay_rate_fit(energy_series, window=None, times=None, resolution_tag=""):
    """Least-squares fit of ``log E`` against ``t*``.

    ``energy_series`` is a sequence of energies with ``times`` or a sequence
    of ``(t, E)`` pairs.  ``window`` is ``(t_lo, t_hi)``; by default the last
    half of the run.  The slope gives the energy rate; the amplitude rate of
    ``h`` is half of it, and both are reported.
    """
    if times is None:
        arr = np.asarray(energy_series, dtype=float)
        times, energies = arr[:, 0], arr[:, 1]
    else:
        times = np.asarray(times, dtype=float)
        energies = np.asarray(energy_series, dtype=float)
    if window is None:
        window = (times[0] + 0.5 * (times[-1] - times[0]), times[-1])
    lo, hi = window
    if lo < times[0] - 1e-12 or hi > times[-1] + 1e-12 or lo >= hi:
        raise InvalidParameter("fit window must lie inside the run", window=window)
    sel = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    t, e = times[sel], energies[sel]
    if len(t) < MIN_FIT_SAMPLES:
        raise WindowTooShort("need at least 10 samples in the fit window", samples=len(t))
    if np.any(e <= 0.0):
        raise NonPositiveEnergy("energies must be positive on the fit window",
                                min_energy=float(e.min()))
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A, np.log(e), rcond=None)
    fit = A @ coef
    residual = float(np.sqrt(np.mean((np.log(e) - fit) ** 2)))
    energy_rate = float(-coef[1])
    return DecayFit(rate=0.5 * energy_rate, energy_rate=energy_rate,
                    amplitude=float(np.exp(coef[0])), window=(float(lo), float(hi)),
                    residual=residual, resolution_tag=resolution_tag)


# ---------------------------------------------------------------------------
# interpolation inequality on a periodic spectral toy


@dataclass
class InterpolationReport:
    l: int
    N: int
    theta: float
    max_ratio: float
    min_ratio: float
    n_fields: int
    holds: bool

    def as_dict(self):
        return dict(self.__dict__)


def spectral_norms(coeffs, s_values, n_grid):
    """``||u||_s = (sum <k>^{2s} |u_k|^2)^{1/2}`` for rows of Fourier coefficients."""
    k = np.fft.fftfreq(n_grid, d=1.0 / n_grid)
    bracket2 = 1.0 + k * k
    p = np.abs(coeffs) ** 2
    return {s: np.sqrt(np.sum(p * bracket2 ** s, axis=-1)) for s in s_values}


def interpolation_check(test_fields, l=3, N=6, tol=1e-12):
    """Verify ``||u||_{l+2} <= ||u||_l^{1-theta} ||u||_N^theta`` with ``theta = 2/(N-l)``.

    ``test_fields`` is an array of periodic samples with shape
    ``(n_fields, n_grid)``.
    """
    if not N > l + 2 - 1e-12 or N <= l:
        raise InvalidParameter("need N >= l + 2", l=l, N=N)
    u = np.atleast_2d(np.asarray(test_fields))
    n_grid = u.shape[-1]
    coeffs = np.fft.fft(u, axis=-1) / n_grid
    theta = 2.0 / (N - l)
    norms = spectral_norms(coeffs, (l, l + 2, N), n_grid)
    # compare in logs to keep high powers representable
    lhs = np.log(norms[l + 2])
    rhs = (1.0 - theta) * np.log(norms[l]) + theta * np.log(norms[N])
    ratio = np.exp(lhs - rhs)
    return InterpolationReport(l, N, theta, float(ratio.max()), float(ratio.min()),
                               int(u.shape[0]), bool(ratio.max() <= 1.0 + tol))


def random_periodic_fields(n_fields, n_grid=64, k_max=16, seed=0):
    """Random real trigonometric polynomials with decaying spectra."""
    rng = np.random.default_rng(seed)
    x = 2.0 * np.pi * np.arange(n_grid) / n_grid
    k = np.arange(1, k_max + 1)
    decay = rng.uniform(0.5, 3.0, size=(n_fields, 1))
    amp = rng.standard_normal((n_fields, k_max)) * k ** -decay
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n_fields, k_max))
    const = rng.standard_normal((n_fields, 1))
    return const + np.einsum("fk,fkx->fx", amp, np.cos(np.einsum("k,x->kx", k, x)[None]
                                                       + phase[..., None]))


def single_frequency_fields(n_grid=64, k_max=16):
    x = 2.0 * np.pi * np.arange(n_grid) / n_grid
    return np.array([np.cos(k * x) for k in range(0, k_max + 1)])


# ---------------------------------------------------------------------------
# convergence


def _diff_norm(a, b, norm):
    if norm is None:
        return float(np.sqrt(np.mean(np.abs(np.asarray(a) - np.asarray(b)) ** 2)))
    return float(norm(np.asarray(a) - np.asarray(b)))


def convergence_order(coarse, mid, fine, norm=None):
    """``log2(|coarse - mid| / |mid - fine|)`` for a refinement-by-2 triple.

    Inputs are scalars or arrays already sampled on common points.
    """
    d1 = _diff_norm(coarse, mid, norm)
    d2 = _diff_norm(mid, fine, norm)
    if d2 == 0.0 or d1 <= d2:
        raise NonMonotoneRefinement("differences do not shrink under refinement",
                                    coarse_mid=d1, mid_fine=d2)
    return float(np.log2(d1 / d2))
