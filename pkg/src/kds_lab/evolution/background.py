"""Per-grid caches of the stationary background and field-jet assembly."""
import numpy as np

from .. import gauge, geometry, tensors
from ..errors import UnsupportedBackground
from ..tensors import SYM_PAIRS, MetricJet, SymTensorJet
from .grid import scalar_parity, tensor_parity
from .kernels import default as default_kernels

# rows of the divergence-form scalar operator; a_xy = sqrt|g| G^{xy} and
# b_th = d_theta a_thth
SCALAR_COEFFS = ("a_tt", "a_tr", "a_rr", "a_thth", "b_th", "a_rp", "a_tp", "a_pp", "w")

# jet slots: value, four first partials, ten second partials (s <= t)
SECOND_PAIRS = [(s, t) for s in range(4) for t in range(s, 4)]
N_SLOTS = 1 + 4 + len(SECOND_PAIRS)
SLOT_TT = 5
COMPLEX_STEP = 1e-20


def first_slot(s):
    return 1 + s


def second_slot(s, t):
    s, t = min(s, t), max(s, t)
    return 5 + SECOND_PAIRS.index((s, t))


class Background:
    """Metric jets, Christoffels and operator coefficients at every grid node.

    The background is stationary and axisymmetric, so all caches are built
    once and shared read-only by every right-hand side evaluation.
    """

    def __init__(self, params, profile, grid, kernels=None):
        self.params = params
        self.profile = profile
        self.grid = grid
        self.kernels = kernels or default_kernels
        R, TH = grid.mesh()
        self.R, self.TH = R, TH
        self.jet = geometry.metric_kerr_star(params, profile, r=R, theta=TH, second=True)
        self.gamma = tensors.christoffel(self.jet.g_inv, self.jet.dg)
        self.contracted = tensors.contracted_christoffel(self.jet.g_inv, self.gamma)
        self.sqrt_g = np.sqrt(-np.linalg.det(self.jet.g))
        self.coef = scalar_coefficients(self.jet)
        self.mode_m = grid.mode_m
        self.scalar_parity = np.array([scalar_parity(grid.mode_m)])
        self.tensor_parity = tensor_parity(grid.mode_m, SYM_PAIRS)
        self._tensor_operator = None
        self._probe = None

    # -- convenience views
    @property
    def g(self):
        return self.jet.g

    @property
    def g_inv(self):
        return self.jet.g_inv

    @property
    def lam(self):
        return self.params.lam

    # -- derivative helpers on (n_comp, n_r, n_theta) fields
    def d_r(self, u):
        return self.kernels.dr1(u, self.grid.spacing_r)

    def d_rr(self, u):
        return self.kernels.dr2(u, self.grid.spacing_r)

    def d_th(self, u, parity):
        return self.kernels.dth1(u, parity, self.grid.spacing_theta)

    def d_thth(self, u, parity):
        return self.kernels.dth2(u, parity, self.grid.spacing_theta)

    # -- scalar jets
    def scalar_gradient(self, u, v):
        """``(n_r, n_theta, 4)`` coordinate gradient of a scalar mode."""
        u = np.asarray(u).reshape((1,) + self.grid.shape)
        v = np.asarray(v).reshape((1,) + self.grid.shape)
        m = self.mode_m
        ur = self.d_r(u)[0]
        uth = self.d_th(u, self.scalar_parity)[0]
        dt = v[0]
        dp = 1j * m * u[0] if m != 0 else np.zeros_like(u[0])
        dtype = complex if (m != 0 or np.iscomplexobj(u) or np.iscomplexobj(v)) else float
        return np.stack([dt, ur, uth, dp], axis=-1).astype(dtype)

    # -- tensor jets
    def pack(self, h):
        """``(..., 4, 4)`` grid tensor -> ``(10, n_r, n_theta)``."""
        return np.ascontiguousarray(np.moveaxis(tensors.pack_sym(h), -1, 0))

    def unpack(self, c):
        return tensors.unpack_sym(np.moveaxis(np.asarray(c), 0, -1))

    def slice_jet(self, h0, h1):
        """First-order jet of a tensor field on a slice; ``h1`` is d_t h."""
        par = self.tensor_parity
        c = self.pack(h0)
        dh = np.zeros(h0.shape[:-2] + (4, 4, 4), dtype=np.result_type(h0, h1))
        dh[..., 0, :, :] = h1
        dh[..., 1, :, :] = self.unpack(self.d_r(c))
        dh[..., 2, :, :] = self.unpack(self.d_th(c, par))
        if self.mode_m != 0:
            dh = dh.astype(complex)
            dh[..., 3, :, :] = 1j * self.mode_m * h0
        return SymTensorJet(h0, dh)

    def tensor_slots(self, h, v):
        """Jet slots ``(10, N_SLOTS, n_r, n_theta)`` of an m = 0 tensor state.

        The d_t d_t slot is left at zero; it is what the evolution solves for.
        """
        par = self.tensor_parity
        hr = self.d_r(h)
        vr = self.d_r(v)
        out = np.zeros((10, N_SLOTS) + self.grid.shape)
        out[:, 0] = h
        out[:, first_slot(0)] = v
        out[:, first_slot(1)] = hr
        out[:, first_slot(2)] = self.d_th(h, par)
        out[:, second_slot(0, 1)] = vr
        out[:, second_slot(0, 2)] = self.d_th(v, par)
        out[:, second_slot(1, 1)] = self.d_rr(h)
        out[:, second_slot(1, 2)] = self.d_th(hr, par)
        out[:, second_slot(2, 2)] = self.d_thth(h, par)
        return out

    def jet_from_slots(self, slots):
        """SymTensorJet with node-leading layout from packed slots."""
        s = np.moveaxis(slots, (0, 1), (-2, -1))  # (n_r, n_theta, 10, N_SLOTS)
        h = tensors.unpack_sym(s[..., 0])
        dh = np.stack([tensors.unpack_sym(s[..., first_slot(a)]) for a in range(4)], axis=-3)
        d2h = np.zeros(h.shape[:-2] + (4, 4, 4, 4), dtype=h.dtype)
        for a in range(4):
            for b in range(4):
                d2h[..., a, b, :, :] = tensors.unpack_sym(s[..., second_slot(a, b)])
        return SymTensorJet(h, dh, d2h)

    # -- induced linear operator
    def probe_operator(self):
        """Per-node coefficients ``[..., c, k, s]`` of the gauged linearized operator.

        Induced by complex-step probing of :func:`gauge.gauge_fixed_einstein`
        with unit jets; complex-step makes each column exact to roundoff.
        """
        if self._probe is not None:
            return self._probe
        if self.params.spin != 0.0 or self.mode_m != 0:
            raise UnsupportedBackground("tensor evolution needs a = 0 and m = 0",
                                        spin=self.params.spin, mode_m=self.mode_m)
        shape = self.grid.shape
        coef = np.zeros(shape + (10, 10, N_SLOTS))
        for k in range(10):
            for s in range(N_SLOTS):
                slots = np.zeros((10, N_SLOTS) + shape, dtype=complex)
                slots[k, s] = 1j * COMPLEX_STEP
                jet = self.jet_from_slots(slots)
                E = gauge.gauge_fixed_einstein(self.jet + jet, self.jet, self.lam)
                coef[..., :, k, s] = tensors.pack_sym(E).imag / COMPLEX_STEP
        self._probe = coef
        return coef

    def principal_defect(self):
        """max deviation of the probed second-order part from ``G^{ab}/2`` per component."""
        coef = self.probe_operator()
        G = self.g_inv
        eye = np.eye(10)
        worst = 0.0
        for (s, t) in SECOND_PAIRS:
            w = 0.5 * G[..., s, t] if s == t else G[..., s, t]
            expect = w[..., None, None] * eye
            worst = max(worst, float(np.max(np.abs(coef[..., second_slot(s, t)] - expect))))
        return worst

    def lower_order_operator(self):
        """``[..., c, k, s]`` over slots 0..4 such that ``box h_c = -2 sum lower * slots``.

        The gauged operator is ``G^{ab} d_a d_b h / 2`` plus lower-order
        terms; adding ``Gamma^s / 2`` converts the principal part to
        ``box / 2``, which the divergence-form scalar kernel evaluates.
        """
        coef = self.probe_operator()
        low = coef[..., :5].copy()
        for s in range(4):
            low[..., :, :, first_slot(s)] += 0.5 * (self.contracted[..., s, None, None]
                                                   * np.eye(10))
        return np.ascontiguousarray(low)

    def tensor_operator(self):
        """``(A, M)`` with ``A`` the d_t^2 block and ``M = -A^{-1}`` (other slots)."""
        if self._tensor_operator is not None:
            return self._tensor_operator
        coef = self.probe_operator()
        A = coef[..., SLOT_TT]
        rest = coef.copy()
        rest[..., SLOT_TT] = 0.0
        Ainv = np.linalg.inv(A)
        M = -np.einsum("...ck,...kjs->...cjs", Ainv, rest)
        self._tensor_operator = (A, np.ascontiguousarray(M))
        return self._tensor_operator


SPHERICAL = "spherical"
AXISYMMETRIC = "axisymmetric"
_TT, _TR, _RR, _THTH, _PP = (SYM_PAIRS.index(p) for p in
                             [(0, 0), (0, 1), (1, 1), (2, 2), (3, 3)])


def spherical_projection(u, grid):
    """Project packed tensor fields onto the spherically symmetric sector.

    Keeps ``h_tt``, ``h_tr``, ``h_rr`` and ``K`` with ``h_thth = K`` and
    ``h_phph = K sin^2(theta)``, each replaced by its polar average.
    """
    from ..quadrature import fejer_weights

    w = fejer_weights(grid.n_theta) / 2.0
    s2 = np.sin(grid.theta) ** 2
    out = np.zeros_like(u)
    for k in (_TT, _TR, _RR):
        out[k] = (u[k] @ w)[:, None]
    K = ((0.5 * (u[_THTH] + u[_PP] / s2)) @ w)[:, None]
    out[_THTH] = K
    out[_PP] = K * s2
    return out


def spherical_expand(u, grid, cols):
    """Spherical-sector field on the full grid from its values on ``cols``.

    The radial profiles are column means; ``K`` is read off ``h_thth`` and
    ``h_phph / sin^2(theta)``.
    """
    s2 = np.sin(grid.theta) ** 2
    out = np.zeros(u.shape[:1] + grid.shape, dtype=u.dtype)
    for k in (_TT, _TR, _RR):
        out[k] = u[k].mean(axis=1)[:, None]
    K = (0.5 * (u[_THTH] + u[_PP] / s2[cols])).mean(axis=1)[:, None]
    out[_THTH] = K
    out[_PP] = K * s2
    return out


def scalar_coefficients(jet):
    """Rows of :data:`SCALAR_COEFFS` from a metric jet with shape ``(n_r, n_theta)``."""
    g_inv = jet.g_inv
    w = np.sqrt(-np.linalg.det(jet.g))
    dinv = tensors.inverse_derivative(g_inv, jet.dg)
    dlnw_th = 0.5 * np.einsum("...ab,...ab->...", g_inv, jet.dg[..., 2, :, :])
    a = w[..., None, None] * g_inv
    b_th = a[..., 2, 2] * dlnw_th + w * dinv[..., 2, 2, 2]
    return np.ascontiguousarray(np.stack([
        a[..., 0, 0], a[..., 0, 1], a[..., 1, 1], a[..., 2, 2], b_th,
        a[..., 1, 3], a[..., 0, 3], a[..., 3, 3], w]).real)


def metric_jet_from_state(background, h, v):
    """Full metric jet ``g_b + h`` for a packed m = 0 tensor state (d_t^2 h = 0)."""
    slots = background.tensor_slots(h, v)
    return background.jet + background.jet_from_slots(slots)
