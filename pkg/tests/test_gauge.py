"""Gauge background and covariant-derivative tests."""

import numpy as np
import pytest

from multiform import sta
from multiform.fields import (
    BladeExp,
    Const,
    GradeError,
    ScalarMap,
    coordinate,
    directional_derivative,
    apply_del,
    position,
    prod,
    scale,
)
from multiform.gauge import (
    ExtensorField,
    GaugeBackground,
    RotorError,
    RotorField,
    check_identity_gauge,
    check_identity_spinor,
    check_pushforward_vs_omega,
    check_spinor_gradient_split,
    covariant_directional,
    gauge_del,
    identity_background,
    rotor_gauge,
    spinor_directional,
    spinor_grad,
)
from multiform.extensor import SingularExtensorError
from multiform.sampling import (
    random_even_field,
    random_field,
    random_invertible_h,
    random_omega,
    random_points,
    random_rotor,
    random_vector,
)
from multiform.sta import GAMMA, Multivector, ONE


def simple_rotor():
    """R(x) = exp(e12 (x.g0)/2): a single-blade rotor, unit by construction."""
    return BladeExp(GAMMA[1] ^ GAMMA[2], scale(0.5, coordinate(GAMMA[0])))


def test_trivial_rotor_gives_flat_background():
    bg = rotor_gauge(Const(ONE))
    x = np.array([0.3, 0.1, -0.2, 0.5])
    assert np.allclose(bg.h.matrix_at(x), np.eye(4), atol=1e-14)
    assert bg.omega.at(x, GAMMA[0]).norm() <= 1e-14
    assert bg.compatible


def test_rotor_background_properties():
    bg = rotor_gauge(simple_rotor())
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.uniform(-1, 1, 4)
        # unit determinant and orthogonality h_adj = h^-1
        assert bg.h.det_at(x) == pytest.approx(1.0, abs=1e-10)
        m = bg.h.matrix_at(x)
        madj = bg.h.matrix_at(x, "adjoint")
        assert np.allclose(madj @ m, np.eye(4), atol=1e-10)
        # the connection is bivector valued
        a = random_vector(rng)
        om = bg.omega.at(x, a)
        assert om.grade_set(1e-12) <= {2}


def test_rotor_compatibility_oracle():
    """D_a(h(C)) = h(a.dC) for constant C: the closed form behind Omega."""
    bg = rotor_gauge(simple_rotor())
    rng = np.random.default_rng(1)
    for _ in range(5):
        C = Multivector(rng.uniform(-1, 1, 16))
        transported = bg.h.apply_expr(Const(C), "direct")
        x = rng.uniform(-1, 1, 4)
        a = random_vector(rng)
        got = covariant_directional(transported, a, x, bg)
        # a.dC = 0 for constant C, so the covariant derivative must vanish
        assert got.norm() <= 1e-10


def test_rotor_transport_of_nonconstant_field():
    rng = np.random.default_rng(2)
    R = random_rotor(rng)
    bg = rotor_gauge(R)
    C = random_field(rng, {1, 2})
    transported = bg.h.apply_expr(C, "direct")
    for _ in range(4):
        x = rng.uniform(-1, 1, 4)
        a = random_vector(rng)
        got = covariant_directional(transported, a, x, bg)
        want = bg.h.apply_expr(C.deriv(a), "direct").at(x)
        assert (got - want).norm() <= 1e-9


def test_non_unit_rotor_rejected():
    grower = prod(
        Const(ONE + Multivector.blade(0b0110, 0.0)),
        ScalarMap(coordinate(GAMMA[0]), "exp"),
        "gp",
    )
    with pytest.raises(RotorError):
        rotor_gauge(grower)
    with pytest.raises(GradeError):
        RotorField(position())


def test_covariant_directional_reductions():
    idbg = identity_background()
    rng = np.random.default_rng(3)
    X = random_field(rng, {1, 2})
    x = rng.uniform(-1, 1, 4)
    a = random_vector(rng)
    got = covariant_directional(X, a, x, idbg)
    assert (got - directional_derivative(X, a, x)).norm() <= 1e-14
    # constant scalar field: scalars are central, so Omega x X = 0
    bg = rotor_gauge(simple_rotor())
    const_scalar = Const(Multivector.scalar(2.5))
    assert covariant_directional(const_scalar, a, x, bg).norm() <= 1e-14


def test_spinor_directional():
    rng = np.random.default_rng(4)
    idbg = identity_background()
    psi = random_even_field(rng)
    x = rng.uniform(-1, 1, 4)
    a = random_vector(rng)
    got = spinor_directional(psi, a, x, idbg)
    assert (got - directional_derivative(psi, a, x)).norm() <= 1e-14
    # constant spinor with a nonzero connection: only the (1/2) Omega psi term
    om = random_omega(rng)
    bg = GaugeBackground(ExtensorField.identity(), om, compatible=False)
    psi0 = Multivector(rng.uniform(-1, 1, 16)).restrict({0, 2, 4})
    got = spinor_directional(Const(psi0), a, x, bg)
    want = 0.5 * (om.at(x, a) * psi0)
    assert (got - want).norm() <= 1e-13
    with pytest.raises(GradeError):
        spinor_directional(position(), a, x, bg)


def test_gauge_del_flat_limit():
    idbg = identity_background()
    rng = np.random.default_rng(5)
    X = random_field(rng, {0, 1, 2})
    x = rng.uniform(-1, 1, 4)
    for mode in ("gradient", "divergence", "curl"):
        flat = apply_del(X, mode, x)
        for construction in ("omega", "pushforward"):
            got = gauge_del(X, mode, x, idbg, construction)
            assert (got - flat).norm() <= 1e-12


def test_gauge_del_constructions_agree_on_rotor_background():
    rng = np.random.default_rng(6)
    bg = rotor_gauge(random_rotor(rng))
    pts = random_points(rng, 30)
    for _ in range(3):
        X = random_field(rng, {0, 1, 2, 3, 4})
        assert check_pushforward_vs_omega(X, bg, pts) <= 1e-8


def test_pushforward_curl_of_scaled_position():
    # constant h = 2 id: D ^ x = h*[d ^ (2x)] = 0, the curl of a linear
    # isotropic field
    h2 = ExtensorField.from_matrix(2.0 * np.eye(4))
    bg = GaugeBackground(h2, None, compatible=False)
    x = np.array([0.7, -0.1, 0.4, 0.2])
    got = gauge_del(position(), "curl", x, bg, "pushforward")
    assert got.norm() <= 1e-13


def test_gauge_del_singular_h_rejected():
    entries = [[Const(Multivector.scalar(0.0)) for _ in range(4)] for _ in range(4)]
    bad = GaugeBackground(ExtensorField(entries), None, compatible=False)
    with pytest.raises(SingularExtensorError):
        gauge_del(position(), "curl", np.zeros(4), bad, "pushforward")


def test_gauge_identity_flat_limit():
    rng = np.random.default_rng(7)
    pts = random_points(rng, 30)
    idbg = identity_background()
    X = random_field(rng, {0, 1, 2, 3, 4})
    Y = random_field(rng, {0, 1, 2, 3, 4})
    for kind in ("lc", "op", "gp"):
        assert check_identity_gauge(X, Y, kind, idbg, pts) <= 1e-8


def test_gauge_identities_rotor_and_pushforward():
    rng = np.random.default_rng(8)
    pts = random_points(rng, 40)
    rotor_bg = rotor_gauge(random_rotor(rng))
    free_bg = GaugeBackground(random_invertible_h(rng), None, compatible=False)
    # constant non-orthogonal h is also fine for the pushforward construction
    const_h = GaugeBackground(
        ExtensorField.from_matrix(np.eye(4) + 0.2 * np.arange(16).reshape(4, 4) / 16),
        None,
        compatible=False,
    )
    for kind in ("lc", "op", "gp"):
        for _ in range(2):
            X = random_field(rng, {0, 1, 2, 3, 4})
            Y = random_field(rng, {0, 1, 2, 3, 4})
            assert check_identity_gauge(X, Y, kind, rotor_bg, pts, "omega") <= 1e-7
            assert check_identity_gauge(X, Y, kind, free_bg, pts, "pushforward") <= 1e-7
            assert check_identity_gauge(X, Y, kind, const_h, pts, "pushforward") <= 1e-7


def test_spinor_identities():
    rng = np.random.default_rng(9)
    pts = random_points(rng, 30)
    bg = rotor_gauge(random_rotor(rng))
    for _ in range(3):
        psi = random_even_field(rng)
        phi = random_even_field(rng)
        assert check_identity_spinor(psi, phi, bg, pts, which="both") <= 1e-7
    # the derivative form holds for arbitrary, incompatible connections
    wild = GaugeBackground(random_invertible_h(rng), random_omega(rng), False)
    for _ in range(3):
        psi = random_even_field(rng)
        phi = random_even_field(rng)
        assert check_identity_spinor(psi, phi, wild, pts, which="derivative") <= 1e-7
    with pytest.raises(GradeError):
        check_identity_spinor(position(), phi, bg, pts)


def test_spinor_identity_constant_equal_spinors():
    """The grade-2 cancellation mechanism at psi = phi = const."""
    rng = np.random.default_rng(10)
    om = random_omega(rng)
    bg = GaugeBackground(ExtensorField.identity(), om, compatible=False)
    psi0 = Multivector(rng.uniform(-1, 1, 16)).restrict({0, 2, 4})
    pts = random_points(rng, 20)
    psi = Const(psi0)
    assert check_identity_spinor(psi, psi, bg, pts, which="derivative") <= 1e-12
    # directly: sum_mu h*(g^mu) . <psi Omega(g_mu) psi~>_2 = 0 by grade
    worst = 0.0
    for mu in range(4):
        w = (psi0 * om.column(mu).at(pts[0])) * psi0.reverse()
        worst = max(worst, abs(sta.GAMMA_UP[mu].sp(w)))
    assert worst <= 1e-13


def test_spinor_gradient_split_identity():
    rng = np.random.default_rng(11)
    pts = random_points(rng, 25)
    for bg in (
        rotor_gauge(random_rotor(rng)),
        GaugeBackground(random_invertible_h(rng), random_omega(rng), False),
    ):
        for _ in range(2):
            psi = random_even_field(rng)
            assert check_spinor_gradient_split(psi, bg, pts) <= 1e-9


def test_spinor_grad_flat_reduction():
    idbg = identity_background()
    rng = np.random.default_rng(12)
    psi = random_even_field(rng)
    x = rng.uniform(-1, 1, 4)
    got = spinor_grad(psi, x, idbg)
    want = apply_del(psi, "gradient", x)
    assert (got - want).norm() <= 1e-13
