import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miura.analysis import (
    ConstraintFields,
    ConvergenceTable,
    constraint_fields,
    convergence_rate,
    error_norms,
    pointwise_constraints,
)
from miura.cases import hyperboloid_case, rotation
from miura.forms import Assembler
from miura.mesh import Rect, build_rect_mesh
from miura.spaces import interpolate, matrix_to_components, taylor_hood


class QuadraticField:
    def gradient(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        cols = [x * x, x * y, 1 + y, y * y, 2 * x, x - y]
        return np.stack(cols, -1).reshape(x.shape + (2, 3)).swapaxes(-1, -2)

    def gradient_derivatives(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        o, z = np.ones_like(x), np.zeros_like(x)
        dx = np.stack([2 * x, y, z, z, 2 * o, o], -1).reshape(x.shape + (2, 3)).swapaxes(-1, -2)
        dy = np.stack([z, x, o, 2 * y, z, -o], -1).reshape(x.shape + (2, 3)).swapaxes(-1, -2)
        return dx, dy


def test_error_norms_vanish_for_quadratics():
    asm = Assembler(taylor_hood(build_rect_mesh(Rect(0, 1, 0, 1), 2, 3)))
    ex = QuadraticField()
    l2, h1 = error_norms(asm, interpolate(asm.spaces.W, ex.gradient), ex)
    assert l2 <= 1e-12 and h1 <= 1e-12


def test_error_norms_of_zero_field():
    asm = Assembler(taylor_hood(build_rect_mesh(Rect(0, 1, 0, 1), 1, 1)))
    ex = QuadraticField()
    l2, h1 = error_norms(asm, np.zeros(asm.spaces.n_g), ex)
    # int of |G|^2 over the unit square, computed by hand
    l2_expected = 1 / 5 + 1 / 9 + 7 / 3 + 1 / 5 + 4 / 3 + 1 / 6
    semi_expected = 4 / 3 + 1 / 3 + 1 / 3 + 4 + 1 + 1 + 4 / 3 + 1
    assert l2 == pytest.approx(math.sqrt(l2_expected), rel=1e-13)
    assert h1 == pytest.approx(math.sqrt(l2_expected + semi_expected), rel=1e-13)


def test_rate_examples():
    assert convergence_rate(1.0, 1.0, 10, 40) == 0.0
    assert convergence_rate(1.0, 0.25, 10, 40) == pytest.approx(2.0)
    # consecutive H1 errors of the published hyperboloid table, 4x cells
    assert convergence_rate(1.064e-2, 2.658e-3, 100, 400) == pytest.approx(2.0011, abs=1e-4)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-8, 1), st.floats(1e-8, 1), st.integers(1, 10**6), st.integers(1, 10**6))
def test_rate_antisymmetric(e1, e2, n1, n2):
    if n1 == n2:
        return
    assert convergence_rate(e1, e2, n1, n2) == pytest.approx(convergence_rate(e2, e1, n2, n1))


@pytest.mark.parametrize("args", [(0, 1, 1, 2), (1, -1, 1, 2), (1, 1, 0, 2), (1, 1, 3, 3)])
def test_rate_errors(args):
    with pytest.raises(ValueError):
        convergence_rate(*args)


def test_table_rates():
    t = ConvergenceTable()
    t.add(0.5, 100, 3, 1.0, 0.5, 8)
    assert t.rows[0].h1_rate is None
    t.add(0.25, 400, 3, 0.25, 0.0625, 32)
    assert t.rows[1].h1_rate == pytest.approx(2.0)
    assert t.rows[1].l2_rate == pytest.approx(3.0)
    assert "rate" in t.format()


def test_exact_hyperboloid_constraints():
    case = hyperboloid_case()
    asm = Assembler(taylor_hood(case.build_mesh(2, 12)))
    xq = asm.xq.reshape(-1, 2)
    G = matrix_to_components(case.exact.gradient(xq[:, 0], xq[:, 1]))
    u, v, gx2, gy2, ok = pointwise_constraints(G)
    assert np.abs(u).max() <= 1e-12 and np.abs(v).max() <= 1e-12
    assert np.all(gy2 > 1) and ok.all()


def test_zero_gx():
    G = np.zeros((4, 6))
    G[:, 3:] = [[1.5, 0, 0], [0, 2, 0], [0, 0, 0.5], [1, 1, 1]]
    u, v, _, gy2, ok = pointwise_constraints(G)
    assert np.all(u == 0)
    assert np.allclose(v, np.log(gy2))


def test_v_guard():
    G = np.zeros((2, 6))
    G[0, 0] = 2.0  # 1 - |gx|^2/4 = 0
    G[0, 4] = 1.5
    G[1, 3] = 1e-8  # |gy|^2 = 1e-16
    u, v, _, _, ok = pointwise_constraints(G)
    assert not ok.any() and np.isnan(v).all()


def test_omega_prime_and_sups():
    u = np.array([[0.1, 0.2], [5.0, 5.0]])
    v = np.array([[0.3, np.nan], [9.0, 9.0]])
    gy2 = np.array([[2.0, 3.0], [0.5, 2.0]])
    cf = ConstraintFields(u, v, np.zeros_like(u), gy2, np.all(gy2 > 1, axis=1), ~np.isnan(v))
    assert cf.omega_prime.tolist() == [True, False]
    assert cf.sup_u == 0.2 and cf.sup_v == 0.3
    assert cf.omega_prime_fraction == 0.5 and cf.n_undefined == 1
    empty = ConstraintFields(u, v, u, np.zeros_like(u), np.zeros(2, bool), ~np.isnan(v))
    assert empty.sup_u == 0.0 and empty.sup_v == 0.0


def test_omega_prime_rotation_invariant(rng):
    asm = Assembler(taylor_hood(build_rect_mesh(Rect(0, 1, 0, 1), 2, 2)))
    g = 0.8 * rng.standard_normal(asm.spaces.n_g)
    R = rotation(0.9, "x") @ rotation(0.4, "z")
    G = g.reshape(-1, 2, 3)
    gr = np.einsum("ij,naj->nai", R, G).ravel()
    a, b = constraint_fields(asm, g), constraint_fields(asm, gr)
    assert np.array_equal(a.omega_prime, b.omega_prime)
    assert np.allclose(a.u, b.u) and np.allclose(a.gy2, b.gy2)
