"""Field-expression calculus tests; finite differences appear only as the
independent oracle for the structural derivatives."""

import numpy as np
import pytest

from multiform import fields as f
from multiform.fields import (
    BladeExp,
    Const,
    GradeError,
    PolyMap,
    ScalarFn,
    ScalarMap,
    apply_del,
    boundary_current_flat,
    check_identity_flat,
    coordinate,
    curl,
    del_expr,
    directional_derivative,
    divergence,
    gauss_check,
    gradient,
    multivector_derivative,
    position,
    position_form,
    prod,
    scale,
)
from multiform.sampling import random_field, random_points, random_vector
from multiform.sta import GAMMA, GAMMA_UP, Multivector, ONE, PSEUDOSCALAR


def fd_derivative(expr, a, x, h=1e-3):
    """Richardson-extrapolated central difference along a."""
    av = a.vector_coords()
    x = np.asarray(x, float)

    def delta(step):
        up = expr.sample((x + step * av).reshape(1, 4))[0]
        dn = expr.sample((x - step * av).reshape(1, 4))[0]
        return (up - dn) / (2 * step)

    d1 = delta(h)
    d2 = delta(h / 2)
    return (4.0 * d2 - d1) / 3.0


def test_position_field_derivative_is_direction():
    a = Multivector.vector([1.0, 2.0, 3.0, 4.0])
    x = position_form([0.3, -0.2, 0.5, 0.1])
    assert directional_derivative(position(), a, x).isclose(a)


def test_square_coordinate_spec_values():
    # X(x) = (x.k)^2 with k = g0: derivative along g0 is 2(x.k)(k.g0)
    expr = PolyMap(coordinate(GAMMA[0]), [0.0, 0.0, 1.0])
    at_origin = directional_derivative(expr, GAMMA[0], np.zeros(4))
    assert at_origin.norm() <= 1e-15
    at_g0 = directional_derivative(expr, GAMMA[0], np.array([1.0, 0, 0, 0]))
    assert at_g0.isclose(Multivector.scalar(2.0), tol=1e-14)
    # analytic chain-rule oracle at a generic point and direction
    rng = np.random.default_rng(0)
    k = random_vector(rng)
    expr = PolyMap(coordinate(k), [0.0, 0.0, 1.0])
    x = rng.uniform(-1, 1, 4)
    a = random_vector(rng)
    want = 2.0 * position_form(x).sp(k) * k.sp(a)
    got = directional_derivative(expr, a, x)
    assert got.comps[0] == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("seed", range(4))
def test_structural_derivative_matches_fd_on_random_trees(seed):
    rng = np.random.default_rng(seed)
    expr = random_field(rng, {0, 1, 2, 3, 4}, degree=3)
    for _ in range(5):
        x = rng.uniform(-1, 1, 4)
        a = random_vector(rng)
        got = directional_derivative(expr, a, x).comps
        want = fd_derivative(expr, a, x)
        denom = max(1.0, np.abs(want).max())
        assert np.abs(got - want).max() / denom <= 1e-6


def test_every_node_kind_derivative_against_fd():
    rng = np.random.default_rng(7)
    pos = position()
    s = coordinate(random_vector(rng))
    hline = [
        Const(Multivector(rng.uniform(-1, 1, 16))),
        pos,
        scale(1.3, prod(pos, Const(Multivector.blade(0b0110)), "gp")),
        prod(pos, pos, "op"),
        prod(Const(Multivector.blade(0b0011)), pos, "lc"),
        prod(pos, pos, "sp"),
        prod(Const(Multivector.blade(0b0101)), pos, "cross"),
        PolyMap(s, rng.uniform(-1, 1, 4)),
        ScalarMap(scale(0.4, s), "sin"),
        ScalarMap(scale(0.4, s), "cos"),
        ScalarMap(scale(0.4, s), "exp"),
        ScalarMap(f.add(Const(Multivector.scalar(2.0)), scale(0.2, s)), "recip"),
        BladeExp(GAMMA[1] ^ GAMMA[2], scale(0.5, s)),  # negative square
        BladeExp(GAMMA[0] ^ GAMMA[1], scale(0.5, s)),  # positive square
        random_field(rng, {1, 2}).reverse(),
        random_field(rng, {0, 1, 2, 3, 4}).restrict({1, 3}),
        del_expr(random_field(rng, {1, 2}), "curl"),
    ]
    for expr in hline:
        x = rng.uniform(-0.8, 0.8, 4)
        a = random_vector(rng)
        got = directional_derivative(expr, a, x).comps
        want = fd_derivative(expr, a, x)
        denom = max(1.0, np.abs(want).max())
        assert np.abs(got - want).max() / denom <= 1e-6, type(expr).__name__


def test_blade_exp_requires_scalar_square():
    non_blade = Multivector.blade(0b0110) + Multivector.blade(0b1001)
    with pytest.raises(ValueError):
        BladeExp(non_blade, coordinate(GAMMA[0]))
    with pytest.raises(GradeError):
        ScalarMap(position(), "sin")
    with pytest.raises(GradeError):
        position().deriv(PSEUDOSCALAR)


def test_del_operators_on_position():
    # gamma^mu gamma_mu summation oracle
    summed = sum((GAMMA_UP[mu] * GAMMA[mu] for mu in range(4)), Multivector.zero())
    assert summed == Multivector.scalar(4.0)
    x = np.array([0.4, 0.1, -0.7, 0.2])
    assert gradient(position(), x).isclose(Multivector.scalar(4.0), tol=1e-14)
    assert divergence(position(), x).isclose(Multivector.scalar(4.0), tol=1e-14)
    assert curl(position(), x).norm() <= 1e-15


def test_gradient_of_coordinate_is_the_direction():
    rng = np.random.default_rng(1)
    k = random_vector(rng)
    x = rng.uniform(-1, 1, 4)
    assert gradient(coordinate(k), x).isclose(k, tol=1e-13)


def test_gradient_splits_into_divergence_plus_curl():
    rng = np.random.default_rng(2)
    pts = random_points(rng, 20)
    for _ in range(10):
        X = random_field(rng, {0, 1, 2, 3, 4})
        g = del_expr(X, "gradient").sample(pts)
        d = del_expr(X, "divergence").sample(pts)
        c = del_expr(X, "curl").sample(pts)
        assert np.abs(g - d - c).max() <= 1e-10
    with pytest.raises(ValueError):
        apply_del(X, "laplacian", pts[0])


def test_multivector_derivative_rules():
    # square rule d/dX (X.X) = 2X, at the point 3 g0
    got = multivector_derivative(lambda W: W.sp(W), 3.0 * GAMMA[0], {1}, poly_degree=2)
    assert got.isclose(6.0 * GAMMA[0], tol=1e-12)
    # rule 2: d/dX (X.Y) keeps the grades of X
    Y = GAMMA[0] + Multivector.blade(0b0011)
    got = multivector_derivative(lambda W: W.sp(Y), GAMMA[2], {1}, poly_degree=1)
    assert got.isclose(GAMMA[0], tol=1e-13)
    # rule 3 with the reversion pair, against per-blade numerics
    rng = np.random.default_rng(3)
    for _ in range(25):
        X0 = Multivector(rng.uniform(-1, 1, 16)).restrict({0, 2, 4})
        Yv = Multivector(rng.uniform(-1, 1, 16))
        Zv = Multivector(rng.uniform(-1, 1, 16))
        got = multivector_derivative(
            lambda W: ((Yv * W) * Zv).sp(W), X0, {0, 2, 4}, poly_degree=2
        )
        want = ((Yv * X0) * Zv + (Yv.reverse() * X0) * Zv.reverse()).restrict({0, 2, 4})
        assert (got - want).norm() <= 1e-6 * max(1.0, want.norm())


def test_multivector_derivative_nonpolynomial():
    """Richardson path: d/dX sin(X.Y) = cos(X.Y) <Y>_G."""
    rng = np.random.default_rng(8)
    for _ in range(10):
        X0 = Multivector(rng.uniform(-1, 1, 16)).restrict({1, 2})
        Y = Multivector(rng.uniform(-1, 1, 16))
        got = multivector_derivative(lambda W: np.sin(W.sp(Y)), X0, {1, 2})
        want = np.cos(X0.sp(Y)) * Y.restrict({1, 2})
        assert (got - want).norm() <= 1e-6 * max(1.0, want.norm())


def test_multivector_derivative_grade_mismatch():
    with pytest.raises(GradeError):
        multivector_derivative(lambda W: W.sp(W), GAMMA[0] + ONE, {1})


def test_scalar_fn_wrapper():
    fn = ScalarFn(lambda W: W.sp(W), arity=1, grades=({1},), poly_degree=2)
    got = multivector_derivative(fn, 2.0 * GAMMA[1], {1})
    assert got.isclose(4.0 * GAMMA[1], tol=1e-12)


def test_boundary_current_trivial_cases():
    pts = random_points(np.random.default_rng(4), 10)
    # a . scalar = 0 for every direction
    v = boundary_current_flat(Const(Multivector.scalar(3.0)), position(), "lc")
    assert np.abs(v.sample(pts)).max() == 0.0
    # grade mismatch in the scalar product kills the wedge current of (x, x)
    v = boundary_current_flat(position(), position(), "op")
    assert np.abs(v.sample(pts)).max() <= 1e-15


def test_flat_identities():
    rng = np.random.default_rng(5)
    pts = random_points(rng, 50)
    # constants: everything vanishes exactly
    X = Const(Multivector(rng.uniform(-1, 1, 16)))
    Y = Const(Multivector(rng.uniform(-1, 1, 16)))
    for kind in ("lc", "op", "gp"):
        assert check_identity_flat(X, Y, kind, pts) == 0.0
    # the position field against itself
    assert check_identity_flat(position(), position(), "lc", pts) <= 1e-10
    # random smooth mixed-grade fields
    for kind in ("lc", "op", "gp"):
        worst = 0.0
        for _ in range(8):
            X = random_field(rng, {0, 1, 2, 3, 4})
            Y = random_field(rng, {0, 1, 2, 3, 4})
            worst = max(worst, check_identity_flat(X, Y, kind, pts))
        assert worst <= 1e-8, kind


def test_gauss_check_linear_field():
    # div x = 4 oracle: both sides equal 4 * box volume
    box = (np.array([0.0, -0.5, 0.2, 1.0]), np.array([1.0, 0.5, 1.2, 3.0]))
    volume = float(np.prod(box[1] - box[0]))
    vol_int, flux = gauss_check(position(), box, 4)
    assert vol_int == pytest.approx(4.0 * volume, rel=1e-12)
    assert flux == pytest.approx(4.0 * volume, rel=1e-12)


def test_gauss_check_constant_field():
    rng = np.random.default_rng(6)
    v = Const(Multivector.vector(rng.uniform(-1, 1, 4)))
    vol_int, flux = gauss_check(v, (np.zeros(4), np.ones(4)), 3)
    assert abs(vol_int) <= 1e-14
    assert abs(flux) <= 1e-12


def test_gauss_check_convergence_rate():
    # midpoint rule: the volume/flux discrepancy shrinks at second order
    v = prod(Const(GAMMA[1]), ScalarMap(coordinate(GAMMA[1] + GAMMA[0]), "sin"), "gp")
    box = (np.zeros(4), np.ones(4))
    d8 = abs(np.subtract(*gauss_check(v, box, 8)))
    d16 = abs(np.subtract(*gauss_check(v, box, 16)))
    assert d8 / d16 == pytest.approx(4.0, abs=0.8)
    with pytest.raises(ValueError):
        gauss_check(v, box, 1)
