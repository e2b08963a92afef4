"""Pressure correction step.

The prediction leaves a velocity field U* that violates the depth-averaged
incompressibility constraint B U = 0.  Correcting with the discrete
pressure gradient,

    A_H U = A_H U* - dt (Bt - C) P,      Bt - C = -B^T,

and eliminating U gives the symmetric positive definite Schur system

    (B A_H^-1 B^T) P = -(1/dt) B U*,

a banded Sturm-Liouville-type problem (tridiagonal for P1/P0,
pentadiagonal for P1-iso-P2/P1).  The lumped mass makes A_H diagonal so
the elimination is exact and the corrected velocity is

    U = U* + dt A_H^-1 B^T P.

Boundary handling:
  * dirichlet: the boundary pressure dof is pinned to p0 (row/column
    eliminated symmetrically, which keeps the matrix SPD); the boundary
    velocity is corrected like any interior dof.
  * neumann / mixed: the boundary horizontal velocity is held at an imposed
    value (the predicted trace by default), its column is masked out of the
    Schur operator and the (1/dt)(u* - u_imposed) mismatch moves to the
    right-hand side.  The mixed variant records the Robin coefficient
    beta = dH/dn; the depth-dependent boundary coefficients of B and C
    already carry that information, so the algebra coincides with the
    Neumann path.

Velocity dofs on dry nodes (H < h_eps) are excluded from the correction and
pressure dofs with an entirely dry support are pinned to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import SolverConvergenceError
from .femops import OperatorSet

# iterative solves stop below this fraction of the nominal tolerance so the
# three methods agree well inside 10*tol
_STOP_SAFETY = 0.05


@dataclass(frozen=True)
class PressureBC:
    """Pressure boundary condition induced by the hyperbolic closure.

    kind: "dirichlet" (carries p0), "neumann", or "mixed" (carries the Robin
    coefficient beta = dH/dn at the boundary).  For neumann/mixed the
    horizontal boundary velocity is imposed; u_imposed = None means "keep
    the predicted trace".
    """

    side: str
    kind: str
    p0: float = 0.0
    beta: float = 0.0
    u_imposed: float | None = None

    def __post_init__(self):
        if self.side not in ("in", "out"):
            raise ValueError(f"side must be 'in' or 'out', got {self.side!r}")
        if self.kind not in ("dirichlet", "neumann", "mixed"):
            raise ValueError(f"unknown pressure BC kind {self.kind!r}")
        if not np.isfinite(self.beta):
            raise ValueError("beta must be finite")


@dataclass
class PressureField:
    """Pressure coefficients on the pressure space plus solver statistics."""

    values: np.ndarray
    pair_tag: str
    iterations: int = 0
    residual: float = 0.0


@dataclass
class _BCPlan:
    free_u: np.ndarray
    free_w: np.ndarray
    u_base: np.ndarray
    w_base: np.ndarray
    pinned: np.ndarray          # bool mask over pressure dofs
    pinned_values: np.ndarray   # full-length, zero where not pinned


def resolve_projection_bcs(ops: OperatorSet, bcs, U_predicted: np.ndarray) -> _BCPlan:
    n = ops.n_nodes
    U_predicted = np.asarray(U_predicted, dtype=float)
    if U_predicted.size != 2 * n:
        raise ValueError("U must stack (u_1..u_N, w_1..w_N)")
    u_base = U_predicted[:n].copy()
    w_base = U_predicted[n:].copy()
    wet = ops.wet_nodes()
    free_u = wet.copy()
    free_w = wet.copy()
    m = ops.n_pressure
    pinned = ops.dry_pressure_dofs()
    values = np.zeros(m)
    for bc in bcs:
        node = 0 if bc.side == "in" else n - 1
        pdof = 0 if bc.side == "in" else m - 1
        if bc.kind == "dirichlet":
            pinned[pdof] = True
            values[pdof] = bc.p0
        else:
            free_u[node] = False
            if bc.u_imposed is not None:
                u_base[node] = bc.u_imposed
    return _BCPlan(free_u, free_w, u_base, w_base, pinned, values)


@dataclass
class SchurSystem:
    """Banded SPD pressure system with its saddle-point context.

    ab holds the upper symmetric band (scipy layout, bandwidth rows + diag),
    rhs the eliminated right-hand side.  The operator set, the base velocity
    and the masked inverse mass are kept so the Uzawa method can iterate on
    the saddle form and so the correction stays consistent with the system
    that produced the pressure.
    """

    ab: np.ndarray
    rhs: np.ndarray
    method: str
    tol: float
    ops: OperatorSet
    dt: float
    plan: _BCPlan
    invA_u: np.ndarray
    invA_w: np.ndarray

    @property
    def n_pressure(self) -> int:
        return self.rhs.size

    @property
    def bandwidth(self) -> int:
        return self.ab.shape[0] - 1

    def matvec(self, x: np.ndarray) -> np.ndarray:
        bw = self.bandwidth
        y = self.ab[bw] * x
        for d in range(1, bw + 1):
            band = self.ab[bw - d, d:]
            y[:-d] += band * x[d:]
            y[d:] += band * x[:-d]
        return y

    def dense(self) -> np.ndarray:
        m = self.n_pressure
        bw = self.bandwidth
        out = np.diag(self.ab[bw].copy())
        for d in range(1, bw + 1):
            band = self.ab[bw - d, d:]
            out += np.diag(band, k=d) + np.diag(band, k=-d)
        return out

    def dump(self, path):
        """Write S then rhs in triplet text form for offline inspection."""
        with open(path, "w") as fh:
            dense = self.dense()
            for (i, j), v in np.ndenumerate(dense):
                if v != 0.0:
                    fh.write(f"{i} {j} {v:.17g}\n")
            for i, v in enumerate(self.rhs):
                fh.write(f"rhs {i} {v:.17g}\n")


def build_schur(
    ops: OperatorSet,
    U_predicted: np.ndarray,
    dt: float,
    bcs=(),
    method: str = "direct",
    tol: float = 1e-10,
) -> SchurSystem:
    """Assemble the banded Schur complement and its right-hand side."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    plan = resolve_projection_bcs(ops, bcs, U_predicted)
    m = ops.n_pressure
    bw = ops.bandwidth
    K = ops.window
    stride = ops.stride

    invA_u = np.where(plan.free_u, 1.0 / ops.a_node, 0.0)
    invA_w = np.where(plan.free_w, 1.0 / ops.a_node, 0.0)
    iu_pad = ops._padded(invA_u)
    iw_pad = ops._padded(invA_w)

    ab = np.zeros((bw + 1, m))
    for d in range(bw + 1):
        delta = d * stride
        rows = m - d
        acc = np.zeros(rows)
        for k in range(delta, K):
            sl = ops._offset_slice(k, rows)
            acc += (
                ops.Du[:rows, k] * ops.Du[d:, k - delta] * iu_pad[sl]
                + ops.Dw[:rows, k] * ops.Dw[d:, k - delta] * iw_pad[sl]
            )
        if d == 0:
            ab[bw] = acc
        else:
            ab[bw - d, d:] = acc

    rhs = -(1.0 / dt) * ops.apply_divergence(plan.u_base, plan.w_base)

    # symmetric elimination of pinned dofs (Dirichlet data and dry supports)
    if np.any(plan.pinned):
        pvals = np.where(plan.pinned, plan.pinned_values, 0.0)
        for d in range(1, bw + 1):
            band = ab[bw - d, d:]
            hi = plan.pinned[d:]
            lo = plan.pinned[:m - d]
            rhs[: m - d] -= np.where(hi, band * pvals[d:], 0.0)
            rhs[d:] -= np.where(lo, band * pvals[: m - d], 0.0)
            band[hi | lo] = 0.0
        ab[bw, plan.pinned] = 1.0
        rhs[plan.pinned] = plan.pinned_values[plan.pinned]

    if np.any(ab[bw] <= 0.0):
        raise ValueError(
            "Schur diagonal is not positive: the pressure problem is fully "
            "determined, so a singular assembly indicates a bug"
        )

    return SchurSystem(
        ab=ab,
        rhs=rhs,
        method=method,
        tol=tol,
        ops=ops,
        dt=dt,
        plan=plan,
        invA_u=invA_u,
        invA_w=invA_w,
    )


def _corrected_velocity(sys: SchurSystem, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    du, dw = sys.ops.scatter_divergence_t(p)
    u = sys.plan.u_base + sys.dt * sys.invA_u * du
    w = sys.plan.w_base + sys.dt * sys.invA_w * dw
    return u, w


def _solve_direct(sys: SchurSystem) -> np.ndarray:
    try:
        return scipy.linalg.solveh_banded(sys.ab, sys.rhs, lower=False, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - assembly bug guard
        raise ValueError(f"indefinite pivot in the banded factorization: {exc}") from exc


def _solve_cg(sys: SchurSystem) -> tuple[np.ndarray, int]:
    rhs = sys.rhs
    rhs_norm = float(np.linalg.norm(rhs))
    target = max(_STOP_SAFETY * sys.tol, 1e-14) * rhs_norm
    x = np.zeros_like(rhs)
    r = rhs.copy()
    d = r.copy()
    rr = float(r @ r)
    cap = 4 * sys.n_pressure + 100
    for it in range(1, cap + 1):
        Sd = sys.matvec(d)
        alpha = rr / float(d @ Sd)
        x += alpha * d
        r -= alpha * Sd
        rr_new = float(r @ r)
        if np.sqrt(rr_new) <= target:
            return x, it
        d = r + (rr_new / rr) * d
        rr = rr_new
    achieved = float(np.linalg.norm(rhs - sys.matvec(x)))
    if achieved <= sys.tol * rhs_norm:
        return x, cap
    raise SolverConvergenceError(
        f"conjugate gradient hit the iteration cap ({cap}) at relative "
        f"residual {achieved / rhs_norm:.3e}",
        residual=achieved / rhs_norm,
        iterations=cap,
    )


def _solve_uzawa(sys: SchurSystem) -> tuple[np.ndarray, int]:
    """Fixed-relaxation Uzawa iteration on the saddle form.

    Each pass corrects the velocity with the current pressure and feeds the
    remaining constraint residual back, P <- P + alpha (-(1/dt) B U(P)),
    with alpha = 1 / max|diag(S)| and an iteration cap of 10 M.
    """
    m = sys.n_pressure
    rhs_norm = float(np.linalg.norm(sys.rhs))
    target = max(_STOP_SAFETY * sys.tol, 1e-14) * rhs_norm
    alpha = 1.0 / float(np.max(sys.ab[sys.bandwidth]))
    pinned = sys.plan.pinned
    p = np.where(pinned, sys.plan.pinned_values, 0.0)
    cap = 10 * m
    r0 = None
    for it in range(1, cap + 1):
        u, w = _corrected_velocity(sys, p)
        r = -(1.0 / sys.dt) * sys.ops.apply_divergence(u, w)
        # pinned rows carry no equation; with P fixed there this equals the
        # residual of the eliminated system on the free rows
        r[pinned] = 0.0
        res = float(np.linalg.norm(r))
        if r0 is None:
            r0 = res
        if res <= target:
            return p, it
        if not np.isfinite(res) or res > 1e6 * max(r0, rhs_norm):
            raise SolverConvergenceError(
                f"Uzawa iteration diverged (residual {res:.3e})",
                residual=res / max(rhs_norm, 1e-300),
                iterations=it,
            )
        p = p + alpha * r
    achieved = float(np.linalg.norm(sys.rhs - sys.matvec(p)))
    if achieved <= sys.tol * rhs_norm:
        return p, cap
    raise SolverConvergenceError(
        f"Uzawa hit the iteration cap ({cap}) at relative residual "
        f"{achieved / rhs_norm:.3e}",
        residual=achieved / rhs_norm,
        iterations=cap,
    )


def solve_pressure(sys: SchurSystem) -> PressureField:
    """Solve the Schur system with the configured method.

    The residual satisfies |S P - rhs| <= tol |rhs| (exactly factored for
    the direct path); direct, cg and uzawa agree within 10 tol.
    """
    tag = sys.ops.pair.tag
    rhs_norm = float(np.linalg.norm(sys.rhs))
    if rhs_norm == 0.0:
        return PressureField(np.zeros(sys.n_pressure), tag, 0, 0.0)
    if sys.method == "direct":
        p = _solve_direct(sys)
        iters = 0
    elif sys.method == "cg":
        p, iters = _solve_cg(sys)
    elif sys.method == "uzawa":
        p, iters = _solve_uzawa(sys)
    else:
        raise ValueError(f"unknown solver method {sys.method!r}")
    residual = float(np.linalg.norm(sys.rhs - sys.matvec(p))) / rhs_norm
    return PressureField(p, tag, iters, residual)


def correct_velocity(
    U_predicted: np.ndarray,
    P: np.ndarray,
    ops: OperatorSet,
    dt: float,
    bcs=(),
) -> np.ndarray:
    """Apply U = U* + dt A_H^-1 B^T P on the free dofs (U stacked (u, w)).

    Must be called with the same boundary conditions that built the Schur
    system so the masked dofs match.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    P = np.asarray(P, dtype=float)
    if P.size != ops.n_pressure:
        raise ValueError("pressure/operator size mismatch")
    plan = resolve_projection_bcs(ops, bcs, U_predicted)
    invA_u = np.where(plan.free_u, 1.0 / ops.a_node, 0.0)
    invA_w = np.where(plan.free_w, 1.0 / ops.a_node, 0.0)
    du, dw = ops.scatter_divergence_t(P)
    u = plan.u_base + dt * invA_u * du
    w = plan.w_base + dt * invA_w * dw
    return np.concatenate([u, w])


def divergence_residual(sys: SchurSystem, U: np.ndarray) -> float:
    """2-norm of B U over the enforced constraint rows (pinned rows carry no
    discrete equation and are excluded)."""
    n = sys.ops.n_nodes
    div = sys.ops.apply_divergence(U[:n], U[n:])
    return float(np.linalg.norm(np.where(sys.plan.pinned, 0.0, div)))
