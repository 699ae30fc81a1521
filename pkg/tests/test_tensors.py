import numpy as np

from kds_lab import tensors

from conftest import sym


def test_pack_roundtrip(rng):
    h = sym(rng.standard_normal((5, 4, 4)))
    c = tensors.pack_sym(h)
    assert c.shape == (5, 10)
    np.testing.assert_array_equal(tensors.unpack_sym(c), h)


def test_inverse_derivative(rng):
    g = sym(rng.standard_normal((4, 4))) + 6 * np.eye(4)
    dg = sym(rng.standard_normal((4, 4, 4)))
    h = 1e-6
    fd = np.stack([(np.linalg.inv(g + h * dg[s]) - np.linalg.inv(g - h * dg[s])) / (2 * h)
                   for s in range(4)])
    np.testing.assert_allclose(tensors.inverse_derivative(np.linalg.inv(g), dg), fd, atol=1e-8)


def test_christoffel_symmetric(rng):
    g = sym(rng.standard_normal((3, 4, 4))) + 6 * np.eye(4)
    dg = sym(rng.standard_normal((3, 4, 4, 4)))
    G = tensors.christoffel(np.linalg.inv(g), dg)
    np.testing.assert_allclose(G, np.swapaxes(G, -1, -2), atol=1e-14)


def test_christoffel_derivative_matches_differences(rng):
    # metric g(x) = g0 + x^s A_s + 1/2 x^s x^t B_st, derivatives at x = 0 and shifted
    g0 = sym(rng.standard_normal((4, 4))) + 6 * np.eye(4)
    A = sym(rng.standard_normal((4, 4, 4)))
    B = rng.standard_normal((4, 4, 4, 4))
    B = sym(0.5 * (B + np.swapaxes(B, 0, 1)))

    def gamma_at(x):
        g = g0 + np.einsum("s,sab->ab", x, A) + 0.5 * np.einsum("s,t,stab->ab", x, x, B)
        dg = A + np.einsum("t,stab->sab", x, B)
        return tensors.christoffel(np.linalg.inv(g), dg)

    dG = tensors.christoffel_derivative(np.linalg.inv(g0), A, B)
    h = 1e-5
    for s in range(4):
        e = np.zeros(4)
        e[s] = h
        fd = (gamma_at(e) - gamma_at(-e)) / (2 * h)
        np.testing.assert_allclose(dG[s], fd, atol=1e-7)


def test_lorentzian():
    assert tensors.lorentzian(np.diag([-1.0, 1, 1, 1]))
    assert not tensors.lorentzian(np.diag([1.0, 1, 1, 1]))
    assert not tensors.lorentzian(np.diag([-1.0, -1, 1, 1]))
