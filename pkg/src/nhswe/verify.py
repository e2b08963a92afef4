"""Named verification checks, each runnable from the CLI and the test suite.

Every check returns a CheckResult and prints nothing; the callers decide
how to report.  Expensive artifacts (the solitary-wave convergence table)
are cached on the shared context so `verify all` computes them once.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import timeloop
from .core import FlowState, Mesh1D, PhysicalParams, total_mass
from .femops import P1ISOP2P1, P1P0, ElementPair, assemble
from .hyperbolic import cfl_dt, predict
from .projection import PressureBC, build_schur, solve_pressure
from .scenarios import (
    exact_sw_riemann,
    make_beach,
    make_dam_break,
    make_dingemans,
    make_solitary,
)
from .timeloop import BoundarySpec, project_state, run, step_heun

PAIRS = (P1P0, P1ISOP2P1)

CONVERGENCE_MESHES = (603, 1023, 2047, 4095, 6495)
SOLITARY_T_END = 5.9025


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.details}"


@dataclass
class VerifyContext:
    """Shared cache across checks (the convergence table is expensive)."""

    convergence: dict = field(default_factory=dict)

    def convergence_errors(self, pair_tag: str):
        if pair_tag not in self.convergence:
            self.convergence[pair_tag] = solitary_l2_errors(pair_tag)
        return self.convergence[pair_tag]


def relative_l2_depth_error(scenario, result) -> float:
    mesh = result.mesh
    state = result.final
    H_exact, _, _, _ = scenario.exact(mesh.nodes, state.t)
    num = np.sqrt(np.sum(mesh.dual_widths * (state.H - H_exact) ** 2))
    den = np.sqrt(np.sum(mesh.dual_widths * H_exact**2))
    return float(num / den)


def solitary_l2_errors(pair_tag: str, meshes=CONVERGENCE_MESHES, t_end=SOLITARY_T_END):
    """Relative L2 depth errors of the traveling solitary wave per mesh."""
    params = PhysicalParams()
    errors = []
    for n in meshes:
        sc = make_solitary(n)
        pair = ElementPair.from_tag(pair_tag, n)
        out = run(sc, params, t_end=t_end, pair=pair)
        errors.append(relative_l2_depth_error(sc, out))
    return np.asarray(errors)


def fitted_rate(meshes, errors) -> float:
    """Least-squares slope of log error against log N (sign-flipped)."""
    slope = np.polyfit(np.log(np.asarray(meshes, dtype=float)), np.log(errors), 1)[0]
    return float(-slope)


# -- criteria -----------------------------------------------------------------


def check_convergence_order(ctx: VerifyContext) -> CheckResult:
    details = []
    ok = True
    for tag in PAIRS:
        errs = ctx.convergence_errors(tag)
        rate = fitted_rate(CONVERGENCE_MESHES, errs)
        ok &= 0.8 <= rate <= 1.2
        details.append(f"{tag} rate {rate:.3f}")
    return CheckResult(
        "convergence_order",
        ok,
        "; ".join(details) + " (required in [0.8, 1.2] for both pairs)",
    )


def check_shape_preservation(ctx: VerifyContext) -> CheckResult:
    ok = True
    details = []
    n_coarse, n_fine = CONVERGENCE_MESHES[-2], CONVERGENCE_MESHES[-1]
    for tag in PAIRS:
        errs = ctx.convergence_errors(tag)
        predicted = errs[-2] * (n_coarse / n_fine)
        ok &= errs[-1] <= 2.0 * predicted
        ok &= bool(np.all(np.diff(errs) < 0.0))
        details.append(
            f"{tag} e({n_fine})={errs[-1]:.3e} vs 2x first-order "
            f"extrapolation {2.0 * predicted:.3e}"
        )
    return CheckResult("shape_preservation", ok, "; ".join(details))


def _divergence_runs():
    params = PhysicalParams()
    yield "solitary", make_solitary(501), params, 1.0, P1P0
    yield "dam_break", make_dam_break(1201), params, 5.0, P1P0
    beach = make_beach(n_nodes=801)
    yield "beach", beach, PhysicalParams(h_eps=beach.h_eps), 4.0, P1P0
    yield "dingemans", make_dingemans(n_nodes=981), PhysicalParams(tol=1e-5), 4.0, P1ISOP2P1


def check_discrete_divergence(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    total = 0
    for name, sc, params, t_end, tag in _divergence_runs():
        pair = ElementPair.from_tag(tag, sc.mesh.n_nodes)
        out = run(sc, params, t_end=t_end, pair=pair)
        total += len(out.reports)
        for r in out.reports:
            if r.div_bound > 0:
                worst = max(worst, r.div_residual / r.div_bound)
    return CheckResult(
        "discrete_divergence",
        worst <= 1.0,
        f"{total} steps over four scenarios, worst residual/bound = {worst:.3e}",
    )


def check_operator_duality(ctx: VerifyContext) -> CheckResult:
    rng = np.random.default_rng(1234)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 14))
        if n % 2 == 0:
            n += 1
        x = np.cumsum(0.2 + rng.random(n))
        mesh = Mesh1D(x)
        H = 0.2 + 2.0 * rng.random(n)
        zb = 0.3 * rng.standard_normal(n)
        for tag in PAIRS:
            ops = assemble(ElementPair.from_tag(tag, n), mesh, H, zb)
            B = ops.dense_divergence()
            Bt = ops.dense_gradient()
            interior = np.r_[np.arange(1, n - 1), n + np.arange(1, n - 1)]
            worst = max(worst, float(np.abs(Bt[interior] + B[:, interior].T).max()))
    return CheckResult(
        "operator_duality",
        worst <= 1e-12,
        f"max |Bt + B^T| on interior rows = {worst:.3e} (allowed 1e-12)",
    )


def check_fd_equivalence(ctx: VerifyContext) -> CheckResult:
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(4, 14))
        x = np.cumsum(0.2 + rng.random(n))
        mesh = Mesh1D(x)
        H = 0.2 + 2.0 * rng.random(n)
        zb = 0.3 * rng.standard_normal(n)
        ops = assemble(ElementPair.p1p0(n), mesh, H, zb)
        zeta = H + 2.0 * zb
        B = ops.dense_divergence()
        Bt = ops.dense_gradient()
        for j in range(n - 1):
            h = x[j + 1] - x[j]
            dz = zeta[j + 1] - zeta[j]
            worst = max(worst, abs(B[j, j] - (-H[j] - 0.5 * dz)))
            worst = max(worst, abs(B[j, j + 1] - (H[j + 1] - 0.5 * dz)))
            worst = max(worst, abs(B[j, n + j] - h), abs(B[j, n + j + 1] - h))
            worst = max(worst, abs(Bt[n + j, j] + h), abs(Bt[n + j + 1, j] + h))
        for i in range(1, n - 1):
            dzl = zeta[i] - zeta[i - 1]
            dzr = zeta[i + 1] - zeta[i]
            worst = max(worst, abs(Bt[i, i] - (H[i] + 0.5 * dzr)))
            worst = max(worst, abs(Bt[i, i - 1] - (-H[i] + 0.5 * dzl)))
    return CheckResult(
        "fd_equivalence",
        worst == 0.0,
        f"max coefficient deviation from the staggered stencil = {worst:.3e}",
    )


def check_schur_spd(ctx: VerifyContext) -> CheckResult:
    rng = np.random.default_rng(4321)
    min_eig = np.inf
    for _ in range(50):
        n = int(rng.integers(5, 22))
        if n % 2 == 0:
            n += 1
        n = min(n, 21)
        x = np.cumsum(0.2 + rng.random(n))
        mesh = Mesh1D(x)
        H = 0.2 + 2.0 * rng.random(n)
        zb = 0.3 * rng.standard_normal(n)
        tag = PAIRS[int(rng.integers(0, 2))]
        ops = assemble(ElementPair.from_tag(tag, n), mesh, H, zb)
        U = rng.standard_normal(2 * n)
        bcs = (PressureBC("in", "dirichlet"), PressureBC("out", "dirichlet"))
        sys = build_schur(ops, U, 0.01, bcs=bcs)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(sys.dense()).min()))
    return CheckResult(
        "schur_spd",
        min_eig > 0.0,
        f"smallest eigenvalue over 50 random wet Dirichlet systems = {min_eig:.3e}",
    )


def check_wellbalanced_positivity(ctx: VerifyContext) -> CheckResult:
    notes = []
    ok = True

    # lake at rest over the beach bathymetry: 1e-12 fixed point for 100 steps
    sc = make_beach(n_nodes=3000, amplitude=0.0)
    params = PhysicalParams(h_eps=sc.h_eps)
    state = sc.state0.copy()
    for _ in range(100):
        state = timeloop.step_euler(state, sc.mesh, sc.bathy, params, sc.bounds).state
    drift = max(
        float(np.abs(state.H - sc.state0.H).max()),
        float(np.abs(state.Hu).max()),
        float(np.abs(state.Hw).max()),
    )
    ok &= drift <= 1e-12
    notes.append(f"lake-at-rest drift over 100 steps {drift:.2e}")

    # positivity in 1000 random CFL steps
    rng = np.random.default_rng(2718)
    wall = BoundarySpec.walls()
    pparams = PhysicalParams()
    min_h = np.inf
    for _ in range(1000):
        n = int(rng.integers(8, 40))
        x = np.cumsum(0.05 + rng.random(n))
        mesh = Mesh1D(x)
        from .core import Bathymetry

        bathy = Bathymetry.from_nodal(mesh, 0.5 * rng.standard_normal(n))
        H = np.where(rng.random(n) < 0.2, 0.0, 2.0 * rng.random(n))
        if not np.any(H >= pparams.h_eps):
            H[0] = 1.0
        u = np.where(H > 0, 2.0 * rng.standard_normal(n), 0.0)
        w = np.where(H > 0, rng.standard_normal(n), 0.0)
        st = FlowState(H, H * u, H * w)
        dt = cfl_dt(st, mesh, pparams)
        bl, br = wall.hyperbolic_at(0.0)
        out = predict(st, mesh, bathy, pparams, bl, br, dt)
        min_h = min(min_h, float(out.H.min()))
    ok &= min_h >= 0.0
    notes.append(f"min depth over 1000 random steps {min_h:.2e}")

    # full wet/dry beach run (35 m, 3000 nodes, 0.2 m wave)
    sc = make_beach(n_nodes=3000, amplitude=0.2)
    run_min = np.inf

    def watch(step):
        nonlocal run_min
        run_min = min(run_min, float(step.state.H.min()))

    run(sc, PhysicalParams(h_eps=sc.h_eps), t_end=10.5, on_step=watch)
    ok &= run_min >= 0.0
    notes.append(f"min depth in the beach run {run_min:.2e}")
    return CheckResult("wellbalanced_positivity", ok, "; ".join(notes))


def check_dam_break_plateau(ctx: VerifyContext, n_nodes: int = 6000) -> CheckResult:
    sc = make_dam_break(n_nodes)
    params = PhysicalParams()
    t_end = 45.0
    out = run(sc, params, t_end=t_end)
    star = exact_sw_riemann(1.8, 0.0, 1.0, 0.0, params.g)
    # center the 20 m window between the rarefaction tail and the shock
    tail = star.u_star - np.sqrt(params.g * star.h_star)
    shock = star.right_shock_speed()
    center = 300.0 + 0.5 * (tail + shock) * t_end
    x = out.mesh.nodes
    window = (x >= center - 10.0) & (x <= center + 10.0)
    state = out.final
    H_mean = float(state.H[window].mean())
    u = state.Hu[window] / state.H[window]
    u_mean = float(u.mean())
    dh = abs(H_mean - star.h_star) / star.h_star
    du = abs(u_mean - star.u_star) / abs(star.u_star)
    ok = dh <= 0.03 and du <= 0.03
    return CheckResult(
        "dam_break_plateau",
        ok,
        f"windowed means H {H_mean:.4f} (star {star.h_star:.4f}, dev {dh:.2%}), "
        f"u {u_mean:.4f} (star {star.u_star:.4f}, dev {du:.2%}) at N={n_nodes}",
    )


def _method_spread(step_result) -> float:
    """Re-solve the step's Schur system with cg and uzawa, return the largest
    relative deviation from the direct pressure."""
    sys = step_result.schur
    base = step_result.pressure.values
    scale = max(float(np.linalg.norm(base)), 1e-300)
    spread = 0.0
    original = sys.method
    try:
        for method in ("cg", "uzawa"):
            sys.method = method
            p = solve_pressure(sys).values
            spread = max(spread, float(np.linalg.norm(p - base)) / scale)
    finally:
        sys.method = original
    return spread


def check_solver_agreement(ctx: VerifyContext) -> CheckResult:
    tol = 1e-5
    sc = make_dingemans(n_nodes=981)
    params = PhysicalParams(tol=tol, method="direct")
    pair = ElementPair.p1isop2p1(981)
    worst = 0.0
    samples = 0
    state = sc.state0.copy()
    t_end = 25.0
    nstep = 0
    while state.t < t_end - 1e-12 * t_end:
        res = timeloop.step_euler(
            state, sc.mesh, sc.bathy, params, sc.bounds, pair, dt=t_end - state.t
        )
        state = res.state
        nstep += 1
        if nstep % 100 == 0:
            worst = max(worst, _method_spread(res))
            samples += 1
    return CheckResult(
        "solver_agreement",
        worst <= 10.0 * tol,
        f"max relative pressure spread across direct/cg/uzawa over {samples} "
        f"sampled steps = {worst:.3e} (allowed {10.0 * tol:.0e})",
    )


def check_heun_order(ctx: VerifyContext) -> CheckResult:
    # scalar surrogate: one Heun step reproduces the quadratic Taylor sum
    lam, dt = -0.8, 0.05
    y = timeloop.heun_step(1.0, dt, lambda y, h: y + h * lam * y)
    exact = 1.0 + lam * dt + 0.5 * (lam * dt) ** 2
    surrogate_ok = abs(y - exact) <= 1e-15

    # temporal self-convergence on the solitary wave at a fixed fine mesh
    n = 601
    sc = make_solitary(n)
    params = PhysicalParams()
    state0 = project_state(sc.state0, sc.mesh, sc.bathy, params, sc.bounds)
    dt0 = 0.8 * cfl_dt(state0, sc.mesh, params)
    n_steps0 = 32

    def march(dt, steps):
        st = state0.copy()
        for _ in range(steps):
            res = step_heun(st, sc.mesh, sc.bathy, params, sc.bounds, dt=dt)
            assert res.report.dt == dt
            st = res.state
        return st

    # reference at one eighth of the finest ladder step
    ref = march(dt0 / 32.0, 32 * n_steps0)
    errors = []
    dts = []
    for k in range(3):
        dt = dt0 / 2**k
        st = march(dt, n_steps0 * 2**k)
        err = np.sqrt(
            np.sum(
                sc.mesh.dual_widths
                * ((st.H - ref.H) ** 2 + (st.Hu - ref.Hu) ** 2 + (st.Hw - ref.Hw) ** 2)
            )
        )
        errors.append(err)
        dts.append(dt)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    ok = surrogate_ok and 1.7 <= slope <= 2.2
    return CheckResult(
        "heun_order",
        ok,
        f"scalar surrogate exact: {surrogate_ok}; self-convergence order "
        f"{slope:.3f} (required in [1.7, 2.2])",
    )


def check_mass_conservation(ctx: VerifyContext) -> CheckResult:
    sc = make_solitary(501)
    params = PhysicalParams()
    state = sc.state0.copy()
    m_prev = total_mass(state, sc.mesh)
    worst = 0.0
    correction_exact = True
    for k in range(200):
        res = timeloop.step_euler(state, sc.mesh, sc.bathy, params, sc.bounds)
        worst = max(worst, abs(res.report.mass - m_prev) / m_prev)
        if k == 0:
            bc_l, bc_r = sc.bounds.hyperbolic_at(state.t)
            half = predict(state, sc.mesh, sc.bathy, params, bc_l, bc_r, res.report.dt)
            correction_exact = bool(np.array_equal(res.state.H, half.H))
        state = res.state
        m_prev = res.report.mass
    ok = worst <= 1e-12 and correction_exact
    return CheckResult(
        "mass_conservation",
        ok,
        f"max per-step relative mass drift over 200 walled steps = {worst:.3e}; "
        f"correction leaves the depth bit-identical: {correction_exact}",
    )


CRITERIA = {
    "convergence_order": check_convergence_order,
    "shape_preservation": check_shape_preservation,
    "discrete_divergence": check_discrete_divergence,
    "operator_duality": check_operator_duality,
    "fd_equivalence": check_fd_equivalence,
    "schur_spd": check_schur_spd,
    "wellbalanced_positivity": check_wellbalanced_positivity,
    "dam_break_plateau": check_dam_break_plateau,
    "solver_agreement": check_solver_agreement,
    "heun_order": check_heun_order,
    "mass_conservation": check_mass_conservation,
}


def run_criterion(name: str, ctx: VerifyContext | None = None) -> CheckResult:
    if name not in CRITERIA:
        raise KeyError(f"unknown criterion {name!r}; known: {sorted(CRITERIA)}")
    ctx = ctx or VerifyContext()
    return CRITERIA[name](ctx)


def run_all(ctx: VerifyContext | None = None) -> list[CheckResult]:
    ctx = ctx or VerifyContext()
    return [fn(ctx) for fn in CRITERIA.values()]
