"""Named verification scenarios and their machine-readable reports.

Each scenario runs a battery of checks at configurable seed / point count /
lattice size and records one (name, max residual, tolerance, pass, wall
time) row per check.  Reports are deterministic for a fixed configuration
up to the wall-time fields.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import __version__, sta
from .extensor import (
    Extensor11,
    adjoint,
    determinant,
    gauge_star,
    invert,
    outermorphism_matrix,
)
from .fields import (
    BladeExp,
    Const,
    PolyMap,
    ScalarMap,
    apply_del,
    check_identity_flat,
    coordinate,
    del_expr,
    directional_derivative,
    gauss_check,
    multivector_derivative,
    position,
    prod,
    scale,
)
from .gauge import (
    GaugeBackground,
    check_identity_gauge,
    check_identity_spinor,
    check_pushforward_vs_omega,
    check_spinor_gradient_split,
    gauge_del,
    identity_background,
    rotor_gauge,
    spinor_grad,
)
from .lagrangian import (
    decomposition_check,
    ele_residual_flat,
    ele_residual_gauge,
    ele_residual_reference,
    ele_residual_spinor,
    I_SIGMA3,
    make_builtin,
    variation,
)
from .lattice import (
    Lattice,
    LatticeField,
    action_gradient,
    discrete_action,
    discrete_ele_residual,
    discrete_gauss,
    discretize,
    maxwell_operator,
    solve_maxwell,
)
from .sampling import (
    random_even_field,
    random_field,
    random_invertible_h,
    random_multivector,
    random_omega,
    random_points,
    random_rotor,
    random_rotor_background,
    random_vector,
)
from .sta import GAMMA, Multivector, PSEUDOSCALAR


@dataclass
class ScenarioConfig:
    """Configuration for one scenario run."""

    scenario: str
    seed: int = 0
    points: int = 100
    lattice_n: int = 8
    tolerances: dict = dataclass_field(default_factory=dict)
    out: str | None = None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise KeyError(f"unknown scenario {self.scenario!r}")
        if self.points < 1:
            raise ValueError("point count must be at least 1")
        if self.lattice_n < 4:
            raise ValueError("lattice size must be at least 4")
        for name, tol in self.tolerances.items():
            if not float(tol) > 0:
                raise ValueError(f"tolerance for {name!r} must be positive")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": int(self.seed),
            "points": int(self.points),
            "lattice_n": int(self.lattice_n),
            "tolerances": {k: float(v) for k, v in sorted(self.tolerances.items())},
            "out": self.out,
        }


@dataclass
class CheckRecord:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    seconds: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": float(self.max_residual),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            "seconds": float(self.seconds),
        }


@dataclass
class Report:
    config: ScenarioConfig
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
            "version": __version__,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


class _Runner:
    """Collects check records, applying per-check tolerance overrides."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.records: list[CheckRecord] = []

    def check(self, name: str, residual: float, default_tol: float) -> None:
        tol = float(self.cfg.tolerances.get(name, default_tol))
        elapsed = time.perf_counter() - self._t0
        self.records.append(CheckRecord(name, float(residual), tol, residual <= tol, elapsed))
        self._t0 = time.perf_counter()

    def start(self) -> None:
        self._t0 = time.perf_counter()


# ---------------------------------------------------------------------------
# scenario bodies
# ---------------------------------------------------------------------------


def _scenario_algebra(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    eta = np.diag([1.0, -1.0, -1.0, -1.0])

    worst = 0.0
    for mu in range(4):
        for nu in range(4):
            lhs = GAMMA[mu] * GAMMA[nu] + GAMMA[nu] * GAMMA[mu]
            worst = max(worst, (lhs - Multivector.scalar(2 * eta[mu, nu])).norm())
    run.check("anticommutation", worst, 0.0)

    worst = 0.0
    for mu in range(4):
        a = GAMMA[mu]
        for bm in range(16):
            B = Multivector.blade(bm)
            for cm in range(16):
                C = Multivector.blade(cm)
                worst = max(worst, abs((a << B).sp(C) - B.sp(a ^ C)))
    run.check("contraction-duality", worst, 0.0)

    worst = 0.0
    for _ in range(200):
        x, y, z = (random_multivector(rng, {0, 1, 2, 3, 4}) for _ in range(3))
        scale_ = max(x.norm() * y.norm() * z.norm(), 1e-30)
        worst = max(worst, (((x * y) * z) - (x * (y * z))).norm() / scale_)
    run.check("associativity", worst, 1e-12)

    worst = 0.0
    for _ in range(50):
        x, y = (random_multivector(rng, {0, 1, 2, 3, 4}) for _ in range(2))
        s = max(x.norm() * y.norm(), 1e-30)
        worst = max(worst, ((x * y).reverse() - y.reverse() * x.reverse()).norm() / s)
        worst = max(worst, abs(x.sp(y) - (x * y.reverse()).grade(0).comps[0]) / s)
    run.check("reversion-and-scalar-product", worst, 1e-13)

    worst = 0.0
    for vm in (1, 2, 4, 8):
        a = Multivector.blade(vm)
        for ym in range(16):
            y = Multivector.blade(ym)
            worst = max(worst, ((a * y) - ((a << y) + (a ^ y))).norm())
    x = random_multivector(rng, {0, 1, 2, 3, 4})
    worst = max(worst, (sum((x.grade(r) for r in range(5)), Multivector.zero()) - x).norm())
    even = random_multivector(rng, {0, 2, 4})
    worst = max(worst, (PSEUDOSCALAR * even - even * PSEUDOSCALAR).norm())
    run.check("product-decomposition", worst, 0.0)

    # extensor invariants over random invertible maps
    worst_outer, worst_transport, worst_adj, worst_det = 0.0, 0.0, 0.0, 0.0
    eye16 = np.eye(16)
    count = 0
    while count < 100:
        m = rng.uniform(-1, 1, (4, 4)) + np.eye(4)
        if abs(np.linalg.det(m)) < 0.1:
            continue
        count += 1
        t = Extensor11(m)
        big = outermorphism_matrix(m)
        A = random_multivector(rng, {0, 1, 2})
        B = random_multivector(rng, {1, 2, 3})
        lhs = Multivector(big @ (A ^ B).comps)
        rhs = Multivector(big @ A.comps) ^ Multivector(big @ B.comps)
        worst_outer = max(worst_outer, (lhs - rhs).norm() / max(1.0, lhs.norm()))
        tadj = adjoint(t)
        for mu in range(4):
            a, ta = GAMMA[mu], tadj(GAMMA[mu])
            lhs_rows = sta.lc(a.comps, big.T)  # rows: a . extend(blade_j)
            rhs_rows = sta.lc(ta.comps, eye16) @ big.T
            worst_transport = max(worst_transport, float(np.abs(lhs_rows - rhs_rows).max()))
        r = int(rng.integers(0, 5))
        A, B = random_multivector(rng, {r}), random_multivector(rng, {r})
        worst_adj = max(
            worst_adj,
            abs(
                float(sta.sp(big @ A.comps, B.comps))
                - float(sta.sp(A.comps, outermorphism_matrix(tadj.m) @ B.comps))
            ),
        )
        d = determinant(t)
        worst_det = max(worst_det, abs(d - np.linalg.det(m)) / max(1.0, abs(d)))
        star = gauge_star(t)
        worst_det = max(worst_det, abs(determinant(star) * d - 1.0))
        worst_det = max(
            worst_det, (invert(t).compose(t)(GAMMA[0]) - GAMMA[0]).norm()
        )
    run.check("outermorphism-multiplicativity", worst_outer, 1e-10)
    run.check("contraction-transport", worst_transport, 1e-9)
    run.check("adjoint-extension", worst_adj, 1e-10)
    run.check("determinant-consistency", worst_det, 1e-9)


def _scenario_identities_flat(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, cfg.points)
    all_grades = {0, 1, 2, 3, 4}

    pair_counts = {"lc": 17, "op": 17, "gp": 16}
    for kind, npairs in pair_counts.items():
        worst = 0.0
        for _ in range(npairs):
            X = random_field(rng, all_grades)
            Y = random_field(rng, all_grades)
            worst = max(worst, check_identity_flat(X, Y, kind, pts))
        run.check(f"identity-flat-{kind}", worst, 1e-8)

    worst = 0.0
    for _ in range(10):
        X = random_field(rng, all_grades)
        grad = del_expr(X, "gradient").sample(pts)
        split = del_expr(X, "divergence").sample(pts) + del_expr(X, "curl").sample(pts)
        worst = max(worst, float(np.abs(grad - split).max()))
    run.check("gradient-splits", worst, 1e-10)

    # midpoint Gauss checks: exact closure for v = x, then trig convergence
    vol, flux = gauss_check(position(), (np.zeros(4), np.ones(4)), 4)
    run.check("gauss-linear", max(abs(vol - 4.0), abs(flux - 4.0)), 1e-12)
    v = prod(Const(GAMMA[1]), ScalarMap(coordinate(random_vector(rng)), "sin"), "gp")
    d8 = abs(np.subtract(*gauss_check(v, (np.zeros(4), np.ones(4)), 8)))
    d16 = abs(np.subtract(*gauss_check(v, (np.zeros(4), np.ones(4)), 16)))
    ratio = d8 / max(d16, 1e-300)
    run.check("gauss-quadratic-convergence", abs(ratio - 4.0), 0.8)


def _scenario_identities_gauge(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, cfg.points)
    all_grades = {0, 1, 2, 3, 4}

    bg = random_rotor_background(rng)
    pair_counts = {"lc": 6, "op": 6, "gp": 5}
    for kind, npairs in pair_counts.items():
        worst = 0.0
        for _ in range(npairs):
            X = random_field(rng, all_grades)
            Y = random_field(rng, all_grades)
            worst = max(worst, check_identity_gauge(X, Y, kind, bg, pts, "omega"))
        run.check(f"identity-gauge-rotor-{kind}", worst, 1e-7)

    hbg = GaugeBackground(random_invertible_h(rng), None, compatible=False)
    for kind in ("lc", "op", "gp"):
        worst = 0.0
        for _ in range(3):
            X = random_field(rng, all_grades)
            Y = random_field(rng, all_grades)
            worst = max(worst, check_identity_gauge(X, Y, kind, hbg, pts, "pushforward"))
        run.check(f"identity-gauge-pushforward-{kind}", worst, 1e-7)

    worst = 0.0
    for _ in range(5):
        X = random_field(rng, all_grades)
        worst = max(worst, check_pushforward_vs_omega(X, bg, pts))
    run.check("construction-agreement", worst, 1e-7)

    worst = 0.0
    for _ in range(5):
        psi = random_even_field(rng)
        phi = random_even_field(rng)
        worst = max(worst, check_identity_spinor(psi, phi, bg, pts, which="both"))
    run.check("spinor-identities-rotor", worst, 1e-7)

    incompatible = GaugeBackground(random_invertible_h(rng), random_omega(rng), False)
    worst = 0.0
    for _ in range(5):
        psi = random_even_field(rng)
        phi = random_even_field(rng)
        worst = max(
            worst, check_identity_spinor(psi, phi, incompatible, pts, which="derivative")
        )
    run.check("spinor-identity-arbitrary-omega", worst, 1e-7)

    worst = 0.0
    for background in (bg, incompatible):
        for _ in range(3):
            psi = random_even_field(rng)
            worst = max(worst, check_spinor_gradient_split(psi, background, pts))
    run.check("spinor-gradient-split", worst, 1e-9)

    worst = 0.0
    X = random_field(rng, all_grades)
    flat_bg = identity_background()
    for mode in ("gradient", "divergence", "curl"):
        for construction in ("omega", "pushforward"):
            for i in range(min(10, pts.shape[0])):
                got = gauge_del(X, mode, pts[i], flat_bg, construction)
                want = apply_del(X, mode, pts[i])
                worst = max(worst, (got - want).norm())
    run.check("flat-limit", worst, 1e-12)


def _scenario_derivatives(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.points

    worst_xx, worst_xy, worst_sandwich = 0.0, 0.0, 0.0
    for _ in range(n):
        grades = frozenset(rng.choice([0, 1, 2, 3, 4], size=rng.integers(1, 4), replace=False).tolist())
        X0 = random_multivector(rng, grades)
        got = multivector_derivative(lambda W: W.sp(W), X0, grades, poly_degree=2)
        want = 2.0 * X0
        worst_xx = max(worst_xx, (got - want).norm() / max(1.0, want.norm()))

        Y = random_multivector(rng, {0, 1, 2, 3, 4})
        got = multivector_derivative(lambda W: W.sp(Y), X0, grades, poly_degree=1)
        want = Y.restrict(grades)
        worst_xy = max(worst_xy, (got - want).norm() / max(1.0, want.norm()))

        Xe = random_multivector(rng, {0, 2, 4})
        Yv = random_multivector(rng, {0, 1, 2, 3, 4})
        Zv = random_multivector(rng, {0, 1, 2, 3, 4})
        got = multivector_derivative(
            lambda W: ((Yv * W) * Zv).sp(W), Xe, {0, 2, 4}, poly_degree=2
        )
        want = ((Yv * Xe) * Zv + (Yv.reverse() * Xe) * Zv.reverse()).restrict({0, 2, 4})
        worst_sandwich = max(worst_sandwich, (got - want).norm() / max(1.0, want.norm()))
    run.check("mvderiv-square", worst_xx, 1e-6)
    run.check("mvderiv-pairing", worst_xy, 1e-6)
    run.check("mvderiv-sandwich", worst_sandwich, 1e-6)

    # structural derivatives vs a central-difference oracle on every node kind
    worst = 0.0
    pts = random_points(rng, 10)
    exprs = []
    pos = position()
    k1, k2 = random_vector(rng), random_vector(rng)
    s1 = coordinate(k1)
    exprs.append(Const(random_multivector(rng, {1, 3})))
    exprs.append(pos)
    exprs.append(scale(1.7, prod(pos, Const(random_multivector(rng, {2})), "gp")))
    exprs.append(prod(pos, pos, "op"))
    exprs.append(prod(Const(random_multivector(rng, {2})), pos, "lc"))
    exprs.append(prod(pos, pos, "sp"))
    exprs.append(prod(Const(random_multivector(rng, {2})), pos, "cross"))
    exprs.append(PolyMap(s1, rng.uniform(-1, 1, 4)))
    for kind in ("sin", "cos", "exp"):
        exprs.append(ScalarMap(scale(0.5, s1), kind))
    exprs.append(BladeExp(GAMMA[1] ^ GAMMA[2], scale(0.6, coordinate(k2))))
    exprs.append(BladeExp(GAMMA[0] ^ GAMMA[1], scale(0.4, coordinate(k2))))
    exprs.append(random_field(rng, {0, 1, 2, 3, 4}).reverse())
    exprs.append(random_field(rng, {0, 1, 2, 3, 4}).restrict({1, 2}))
    exprs.append(del_expr(random_field(rng, {1, 2}), "curl"))
    hfield = random_invertible_h(rng)
    inner = random_field(rng, {1, 2})
    for variant in ("direct", "adjoint", "inverse", "star"):
        exprs.append(hfield.apply_expr(inner, variant))
    exprs.append(hfield.det_expr())
    for expr in exprs:
        for i in range(3):
            x = pts[i]
            a = random_vector(rng)
            got = directional_derivative(expr, a, x).comps
            h = 1e-3
            xp = x + h * a.vector_coords()
            xm = x - h * a.vector_coords()
            d1 = (expr.sample(xp.reshape(1, 4))[0] - expr.sample(xm.reshape(1, 4))[0]) / (2 * h)
            xp2 = x + 0.5 * h * a.vector_coords()
            xm2 = x - 0.5 * h * a.vector_coords()
            d2 = (expr.sample(xp2.reshape(1, 4))[0] - expr.sample(xm2.reshape(1, 4))[0]) / h
            fd = (4.0 * d2 - d1) / 3.0
            denom = max(1.0, float(np.abs(fd).max()))
            worst = max(worst, float(np.abs(got - fd).max()) / denom)
    run.check("structural-vs-finite-difference", worst, 1e-6)


def _plane_wave_potential():
    k = Multivector.vector([1.0, 1.0, 0.0, 0.0])
    return prod(Const(GAMMA[2]), ScalarMap(coordinate(k), "cos"), "gp")


def _free_spinor(m: float, c: float, hbar: float):
    return BladeExp(GAMMA[1] ^ GAMMA[2], scale(m * c / hbar, coordinate(GAMMA[0])))


def _scenario_maxwell_flat(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, min(cfg.points, 40))
    L = make_builtin("maxwell_flat")

    A = _plane_wave_potential()
    worst = max(ele_residual_flat(L, A, pts[i]).norm() for i in range(pts.shape[0]))
    run.check("plane-wave-residual", worst, 1e-9)

    worst = 0.0
    for _ in range(5):
        Ar = random_field(rng, {1})
        for i in range(3):
            r1 = ele_residual_flat(L, Ar, pts[i])
            r2 = ele_residual_reference(L, Ar, pts[i])
            worst = max(worst, (r1 - r2).norm() / max(1.0, r1.norm()))
    run.check("residual-two-paths", worst, 1e-8)

    worst_var, worst_dec = 0.0, 0.0
    for _ in range(10):
        Ar = random_field(rng, {1})
        Av = random_field(rng, {1})
        for i in range(3):
            x = pts[i]
            got = variation(L, Ar, Av, x)
            h = 1e-5
            from .fields import add as fadd

            def act(lam):
                Xl = fadd(Ar, scale(lam, Av))
                return L.density(Xl.at(x), del_expr(Xl, "curl").at(x), x)

            fd = (act(h) - act(-h)) / (2 * h)
            worst_var = max(worst_var, abs(got - fd))
            worst_dec = max(worst_dec, decomposition_check(L, Ar, Av, x))
    run.check("variation-vs-fd", worst_var, 1e-8)
    run.check("decomposition", worst_dec, 1e-7)


def _scenario_dirac_flat(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, min(cfg.points, 40))
    params = {"m": 1.3, "hbar": 0.7, "c": 1.1, "e": 0.8}
    L = make_builtin("dirac_flat", params=params)
    psi = _free_spinor(params["m"], params["c"], params["hbar"])

    # validate the candidate by substitution into the first-order equation
    worst = 0.0
    mc = params["m"] * params["c"]
    for i in range(pts.shape[0]):
        from .fields import gradient

        eq = (gradient(psi, pts[i]) * I_SIGMA3) * params["hbar"] - (
            psi.at(pts[i]) * GAMMA[0]
        ) * mc
        worst = max(worst, eq.norm())
    run.check("candidate-substitution", worst, 1e-10)

    worst = max(ele_residual_flat(L, psi, pts[i]).norm() for i in range(pts.shape[0]))
    run.check("free-spinor-residual", worst, 1e-8)

    worst = 0.0
    for _ in range(10):
        psir = random_even_field(rng)
        eta = random_even_field(rng)
        for i in range(3):
            worst = max(worst, decomposition_check(L, psir, eta, pts[i]))
    run.check("decomposition", worst, 1e-7)

    one = Const(Multivector.scalar(1.0))
    dens = L.density(one.at(pts[0]), Multivector.zero(), pts[0])
    run.check("unit-spinor-density", abs(dens + mc), 1e-12)


def _scenario_maxwell_gauge(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, min(cfg.points, 20))
    L = make_builtin("maxwell_gauge")
    Lflat = make_builtin("maxwell_flat")
    bg = random_rotor_background(rng)

    A_g = bg.h.apply_expr(_plane_wave_potential(), "direct")
    worst = 0.0
    for construction in ("omega", "pushforward"):
        worst = max(
            worst,
            max(
                ele_residual_gauge(L, A_g, pts[i], bg, construction).norm()
                for i in range(min(6, pts.shape[0]))
            ),
        )
    run.check("transported-plane-wave-residual", worst, 1e-6)

    idbg = identity_background()
    worst = 0.0
    for _ in range(3):
        Ar = random_field(rng, {1})
        for i in range(3):
            rg = ele_residual_gauge(L, Ar, pts[i], idbg)
            rf = ele_residual_flat(Lflat, Ar, pts[i])
            worst = max(worst, (rg - rf).norm())
    run.check("flat-degeneration", worst, 1e-10)

    worst = 0.0
    for _ in range(3):
        Ar = random_field(rng, {1})
        for i in range(2):
            r1 = ele_residual_gauge(L, Ar, pts[i], bg)
            r2 = ele_residual_reference(L, Ar, pts[i], bg)
            worst = max(worst, (r1 - r2).norm() / max(1.0, r1.norm()))
    run.check("residual-two-paths", worst, 1e-8)

    worst = 0.0
    for _ in range(5):
        Ar = random_field(rng, {1})
        Av = random_field(rng, {1})
        for i in range(2):
            worst = max(worst, decomposition_check(L, Ar, Av, pts[i], bg))
    run.check("decomposition", worst, 1e-7)


def _scenario_dirac_gauge(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    pts = random_points(rng, min(cfg.points, 20))
    params = {"m": 1.3, "hbar": 0.7, "c": 1.1, "e": 0.8}
    L = make_builtin("dirac_gauge", params=params)
    Lflat = make_builtin("dirac_flat", params=params)

    # transport the free solution with the rotor that induces the background
    R = random_rotor(rng)
    bg = rotor_gauge(R)
    psi_flat = _free_spinor(params["m"], params["c"], params["hbar"])
    psi_g = prod(R, psi_flat, "gp")
    worst = max(
        ele_residual_spinor(L, psi_g, pts[i], bg).norm()
        for i in range(min(8, pts.shape[0]))
    )
    run.check("transported-spinor-residual", worst, 1e-6)

    # first-order form of the transported solution
    mc = params["m"] * params["c"]
    worst = 0.0
    for i in range(min(6, pts.shape[0])):
        eq = (spinor_grad(psi_g, pts[i], bg) * I_SIGMA3) * params["hbar"] - (
            psi_g.at(pts[i]) * GAMMA[0]
        ) * mc
        worst = max(worst, eq.norm())
    run.check("transported-first-order-equation", worst, 1e-9)

    idbg = identity_background()
    worst = 0.0
    for _ in range(3):
        psir = random_even_field(rng)
        for i in range(2):
            rg = ele_residual_spinor(L, psir, pts[i], idbg)
            rf = ele_residual_flat(Lflat, psir, pts[i])
            worst = max(worst, (rg - rf).norm())
    run.check("flat-degeneration", worst, 1e-10)

    worst = 0.0
    for _ in range(4):
        psir = random_even_field(rng)
        eta = random_even_field(rng)
        for i in range(2):
            worst = max(worst, decomposition_check(L, psir, eta, pts[i], bg))
    run.check("decomposition", worst, 1e-7)


def _scenario_lattice_maxwell(cfg: ScenarioConfig, run: _Runner) -> None:
    rng = np.random.default_rng(cfg.seed)
    L = make_builtin("maxwell_flat")

    # gradient-residual duality, both boundary conditions
    worst = 0.0
    for bc in ("periodic", "dirichlet"):
        lat = Lattice(np.zeros(4), 2 * np.pi * np.ones(4), 6, bc)
        comps = rng.uniform(-1, 1, lat.shape + (16,)) * sta.grade_mask({1})
        F = LatticeField(lat, frozenset({1}), comps)
        grad = action_gradient(L, F)
        res = discrete_ele_residual(L, F)
        dev = np.abs(grad.comps - lat.cell_volume * res.comps)[lat.interior_mask()].max()
        worst = max(worst, float(dev))
    run.check("gradient-residual-duality", worst, 1e-10)

    # gradient pairing against a finite difference of the action
    lat = Lattice(np.zeros(4), 2 * np.pi * np.ones(4), 6, "periodic")
    comps = rng.uniform(-1, 1, lat.shape + (16,)) * sta.grade_mask({1})
    F = LatticeField(lat, frozenset({1}), comps)
    delta = rng.uniform(-1, 1, lat.shape + (16,)) * sta.grade_mask({1})
    dF = LatticeField(lat, frozenset({1}), delta)
    h = 1e-6
    fp = discrete_action(L, LatticeField(lat, frozenset({1}), comps + h * delta))
    fm = discrete_action(L, LatticeField(lat, frozenset({1}), comps - h * delta))
    fd = (fp - fm) / (2 * h)
    pairing = action_gradient(L, F).pair(dF)
    run.check("gradient-vs-fd", abs(fd - pairing) / max(1.0, abs(fd)), 1e-6)

    # discrete Gauss identity
    worst = 0.0
    for bc in ("periodic", "dirichlet"):
        lat = Lattice(np.zeros(4), 3.0 * np.ones(4), 7, bc)
        v = LatticeField(
            lat, frozenset({1}), rng.uniform(-1, 1, lat.shape + (16,)) * sta.grade_mask({1})
        )
        vol, flux = discrete_gauss(v)
        worst = max(worst, abs(vol - flux))
    run.check("discrete-gauss", worst, 1e-12)

    # sampled continuum solution: residual order between N = 6 and N = 12
    def sampled_residual_rms(n: int) -> float:
        lat = Lattice(np.zeros(4), 2 * np.pi * np.ones(4), n, "periodic")
        k1 = Multivector.vector([0.0, 1.0, 0.0, 0.0])
        j_expr = prod(Const(GAMMA[2]), ScalarMap(coordinate(k1), "cos"), "gp")
        a_expr = prod(Const(GAMMA[2]), ScalarMap(coordinate(k1), "cos"), "gp")
        Lm = make_builtin("maxwell_flat", sources={"J": j_expr})
        F = discretize(a_expr, lat, {1})
        resid = discrete_ele_residual(Lm, F).comps
        return float(np.linalg.norm(resid) / np.sqrt(lat.n_sites))

    r6 = sampled_residual_rms(6)
    r12 = sampled_residual_rms(12)
    order = float(np.log(r6 / r12) / np.log(2.0))
    run.check("residual-convergence-order", abs(order - 2.0), 0.2)

    # manufactured periodic solve at the configured size
    n = cfg.lattice_n
    lat = Lattice(np.zeros(4), 2 * np.pi * np.ones(4), n, "periodic")
    xs = lat.coords()
    astar = np.zeros(lat.shape + (16,))
    astar[..., 4] = np.cos(xs[..., 1])
    op = maxwell_operator(lat)
    jc = op(astar)
    A = solve_maxwell(lat, LatticeField(lat, frozenset({1}), jc), tol=1e-8)
    rel = float(np.linalg.norm(A.comps - astar) / np.linalg.norm(astar))
    run.check("manufactured-solution", rel, 1e-6)
    op_res = float(
        np.linalg.norm(op(A.comps) - jc) / np.linalg.norm(jc)
    )
    run.check("solver-relative-residual", op_res, 1e-8)

    # zero current with fixed zero boundary has the trivial solution
    lat0 = Lattice(np.zeros(4), np.ones(4), 6, "dirichlet")
    A0 = solve_maxwell(lat0, LatticeField.zeros(lat0, {1}))
    run.check("dirichlet-trivial-solution", float(np.abs(A0.comps).max()), 0.0)

    # residual at F = 0 under a uniform current is exactly -J
    latj = Lattice(np.zeros(4), 2 * np.pi * np.ones(4), 6, "periodic")
    Lj = make_builtin("maxwell_flat", sources={"J": Const(GAMMA[0])})
    res = discrete_ele_residual(Lj, LatticeField.zeros(latj, {1}))
    run.check(
        "uniform-current-residual",
        float(np.abs(res.comps + Const(GAMMA[0]).at(np.zeros(4)).comps).max()),
        0.0,
    )


SCENARIOS = {
    "algebra": ("Cl(1,3) kernel and extensor invariants", _scenario_algebra),
    "identities-flat": ("flat divergence-form identities", _scenario_identities_flat),
    "identities-gauge": ("gauge and spinor identities", _scenario_identities_gauge),
    "derivatives": ("multivector and structural derivatives", _scenario_derivatives),
    "maxwell-flat": ("flat Maxwell residuals and decomposition", _scenario_maxwell_flat),
    "dirac-flat": ("flat Dirac-Hestenes residuals", _scenario_dirac_flat),
    "maxwell-gauge": ("gauge Maxwell residuals", _scenario_maxwell_gauge),
    "dirac-gauge": ("gauge Dirac-Hestenes residuals", _scenario_dirac_gauge),
    "lattice-maxwell": ("lattice action, duality, and stationary solve", _scenario_lattice_maxwell),
}


def list_scenarios() -> list[tuple[str, str]]:
    return [(name, desc) for name, (desc, _) in SCENARIOS.items()]


def run_scenario(cfg: ScenarioConfig) -> Report:
    """Execute a named scenario, write its report if an output path is set."""
    cfg.validate()
    _, body = SCENARIOS[cfg.scenario]
    runner = _Runner(cfg)
    runner.start()
    body(cfg, runner)
    report = Report(config=cfg, checks=runner.records)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(report.to_json())
    return report
