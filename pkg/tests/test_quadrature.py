import numpy as np
import pytest

from kds_lab import quadrature


def test_gregory_exact_for_cubics():
    x = np.linspace(0.0, 2.0, 11)
    w = quadrature.gregory_weights(11, x[1] - x[0])
    assert np.sum(w * x ** 3) == pytest.approx(4.0, rel=1e-13)


def test_gregory_fourth_order():
    errs = []
    for n in (21, 41):
        x = np.linspace(0.0, 1.0, n)
        errs.append(abs(np.sum(quadrature.gregory_weights(n, x[1] - x[0]) * np.exp(x))
                        - (np.e - 1)))
    assert errs[0] / errs[1] > 14


@pytest.mark.parametrize("n", [8, 16, 33])
def test_fejer_sphere_moments(n):
    th = (np.arange(n) + 0.5) * np.pi / n
    w = quadrature.fejer_weights(n)
    # int_0^pi cos^2(theta) sin(theta) dtheta = 2/3
    assert np.sum(w) == pytest.approx(2.0, rel=1e-13)
    assert np.sum(w * np.cos(th) ** 2) == pytest.approx(2.0 / 3.0, rel=1e-13)


def test_time_integral_nonuniform_falls_back():
    t = np.array([0.0, 0.1, 0.3, 0.6])
    assert quadrature.integrate_time(2 * t, t) == pytest.approx(0.36)
