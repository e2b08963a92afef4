"""Explicit hydrostatic prediction step.

Finite-volume update of the Saint-Venant subsystem

    dH/dt  + d(Hu)/dx                     = 0
    dHu/dt + d(Hu^2 + g H^2 / 2)/dx       = -g H dzb/dx
    dHw/dt + d(Hw u)/dx                   = 0

on node-centered dual cells.  Interface fluxes come from a kinetic solver
with a compactly supported equilibrium,

    M(xi) = H / (2 sqrt(3) c) for |xi - u| <= sqrt(3) c,  c = sqrt(g H / 2),

whose half-space moments are closed-form polynomials in (u, c).  Topography
enters through hydrostatic reconstruction of the interface depths, which
keeps the lake at rest exact and the depths non-negative under the CFL
condition.  The vertical discharge Hw rides along as a passive scalar
upwinded by the sign of the mass flux.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    Bathymetry,
    DryDomainError,
    FlowState,
    Mesh1D,
    PhysicalParams,
    TorrentialBoundaryError,
)

_SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True)
class InterfaceFlux:
    """Numerical flux components at one interface."""

    F_H: float
    F_Hu: float
    F_Hw: float


@dataclass(frozen=True)
class HyperbolicBC:
    """Boundary condition for the hydrostatic step.

    kind: "imposed_flux" (carries q0=(q01, q02)), "imposed_depth" (carries
    h_given), "free_outflow", or "wall".  side is "in" (left) or "out"
    (right).
    """

    kind: str
    side: str
    q0: tuple[float, float] | None = None
    h_given: float | None = None

    def __post_init__(self):
        if self.kind not in ("imposed_flux", "imposed_depth", "free_outflow", "wall"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.side not in ("in", "out"):
            raise ValueError(f"side must be 'in' or 'out', got {self.side!r}")
        if self.kind == "imposed_flux" and (self.q0 is None or len(self.q0) != 2):
            raise ValueError("imposed_flux requires both components of q0")
        if self.kind == "imposed_depth" and self.h_given is None:
            raise ValueError("imposed_depth requires h_given")


class GhostState(NamedTuple):
    H: float
    u: float
    w: float


def _half_fluxes(H, u, g):
    """Half-space moments (F+, F-) of the kinetic equilibrium.

    Returns (Fp_H, Fp_Hu, Fm_H, Fm_Hu); F+ integrates xi > 0, F- xi < 0,
    and F+ + F- equals the exact flux (Hu, Hu^2 + g H^2 / 2).
    """
    H = np.asarray(H, dtype=float)
    u = np.asarray(u, dtype=float)
    c = np.sqrt(0.5 * g * H)
    s = _SQRT3 * c
    a = u - s
    b = u + s
    k = np.zeros_like(H)
    np.divide(H, 2.0 * _SQRT3 * c, out=k, where=c > 0.0)

    # generic subsonic expressions; the one-sided-support cases are patched below
    fp_H = 0.5 * k * b * b
    fp_Hu = fp_H * b * (2.0 / 3.0)
    fm_H = -0.5 * k * a * a
    fm_Hu = fm_H * a * (2.0 / 3.0)

    sup_right = a >= 0.0   # whole support moves right
    sup_left = b <= 0.0    # whole support moves left
    if sup_right.any():
        full_H = H * u
        full_Hu = H * u * u + 0.5 * g * H * H
        fp_H = np.where(sup_right, full_H, fp_H)
        fp_Hu = np.where(sup_right, full_Hu, fp_Hu)
        fm_H = np.where(sup_right, 0.0, fm_H)
        fm_Hu = np.where(sup_right, 0.0, fm_Hu)
    if sup_left.any():
        full_H = H * u
        full_Hu = H * u * u + 0.5 * g * H * H
        fm_H = np.where(sup_left, full_H, fm_H)
        fm_Hu = np.where(sup_left, full_Hu, fm_Hu)
        fp_H = np.where(sup_left, 0.0, fp_H)
        fp_Hu = np.where(sup_left, 0.0, fp_Hu)
    return fp_H, fp_Hu, fm_H, fm_Hu


def kinetic_flux(xl, xr, g: float):
    """Kinetic interface flux F+(XL) + F-(XR) for states given as (H, Hu).

    Consistent (equal states reproduce the exact flux) and conservative.
    Accepts scalars or arrays.
    """
    HL, HuL = (np.asarray(v, dtype=float) for v in xl)
    HR, HuR = (np.asarray(v, dtype=float) for v in xr)
    if np.any(HL < 0.0) or np.any(HR < 0.0):
        raise ValueError("kinetic_flux requires non-negative depths")
    uL = np.zeros_like(HL)
    uR = np.zeros_like(HR)
    np.divide(HuL, HL, out=uL, where=HL > 0.0)
    np.divide(HuR, HR, out=uR, where=HR > 0.0)
    fp_H, fp_Hu, _, _ = _half_fluxes(HL, uL, g)
    _, _, fm_H, fm_Hu = _half_fluxes(HR, uR, g)
    F_H = fp_H + fm_H
    F_Hu = fp_Hu + fm_Hu
    if F_H.ndim == 0:
        return float(F_H), float(F_Hu)
    return F_H, F_Hu


def hydrostatic_reconstruct(Hi, Hj, zbi, zbj):
    """Interface depths seen from both sides after raising the bottom.

    H*_L = max(0, Hi + zbi - max(zbi, zbj)) and symmetrically for the right
    state; both are non-negative and the reconstruction is the identity on a
    flat bottom.
    """
    Hi = np.asarray(Hi, dtype=float)
    Hj = np.asarray(Hj, dtype=float)
    z_star = np.maximum(zbi, zbj)
    HL = np.maximum(0.0, Hi + zbi - z_star)
    HR = np.maximum(0.0, Hj + zbj - z_star)
    if HL.ndim == 0:
        return float(HL), float(HR)
    return HL, HR


def max_wave_speed(state: FlowState, params: PhysicalParams) -> float:
    """max(|u| + sqrt(g H)) over wet nodes; DryDomainError if all dry."""
    wet = state.H >= params.h_eps
    if not np.any(wet):
        raise DryDomainError("no wet cell: no admissible wave speed")
    u, _ = state.velocities(params.h_eps)
    return float(np.max(np.abs(u[wet]) + np.sqrt(params.g * state.H[wet])))


def cfl_dt(state: FlowState, mesh: Mesh1D, params: PhysicalParams) -> float:
    """Adaptive time step cfl * min(dx) / max(|u| + sqrt(g H))."""
    speed = max_wave_speed(state, params)
    return params.cfl * float(np.min(mesh.element_widths)) / speed


def _bisect(fun, lo: float, hi: float, rtol: float = 1e-12) -> float:
    flo = fun(lo)
    fhi = fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError("root not bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = fun(mid)
        if fmid == 0.0 or (hi - lo) <= rtol * (1.0 + abs(mid)):
            return mid
        if flo * fmid <= 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def apply_hyperbolic_bc(state: FlowState, bc: HyperbolicBC, g: float) -> GhostState:
    """Ghost state closing the boundary Riemann problem.

    Subcritical imposed conditions are closed with the outgoing invariant
    u -+ 2 sqrt(g H); walls mirror the interior state with negated u and
    free outflow copies it.
    """
    idx = 0 if bc.side == "in" else state.n_nodes - 1
    Hb = float(state.H[idx])
    ub = float(state.Hu[idx] / Hb) if Hb > 0.0 else 0.0
    wb = float(state.Hw[idx] / Hb) if Hb > 0.0 else 0.0

    if bc.kind == "wall":
        return GhostState(Hb, -ub, wb)
    if bc.kind == "free_outflow":
        return GhostState(Hb, ub, wb)

    if Hb <= 0.0:
        raise TorrentialBoundaryError(
            f"{bc.kind} boundary on a dry node is not supported"
        )
    froude = abs(ub) / np.sqrt(g * Hb)
    if froude >= 1.0:
        raise TorrentialBoundaryError(
            f"torrential regime at {bc.side} boundary (Fr = {froude:.3f}); "
            "only fluvial boundaries are supported"
        )

    # outgoing Riemann invariant seen from the interior
    sign = -1.0 if bc.side == "in" else 1.0
    invariant = ub + sign * 2.0 * np.sqrt(g * Hb)

    if bc.kind == "imposed_depth":
        h0 = float(bc.h_given)
        if h0 <= 0.0:
            raise ValueError("imposed depth must be positive")
        u0 = invariant - sign * 2.0 * np.sqrt(g * h0)
        return GhostState(h0, u0, wb)

    q01, q02 = float(bc.q0[0]), float(bc.q0[1])

    def residual(h):
        return q01 / h + sign * 2.0 * np.sqrt(g * h) - invariant

    # For inflow-directed q01 the residual is monotone in h and the root is
    # unique.  For outflow-directed q01 there are two roots; the subcritical
    # one lies on h >= h_sonic, where h_sonic is the depth with Fr = 1.
    if sign * q01 > 0.0:
        lo = (sign * q01 / np.sqrt(g)) ** (2.0 / 3.0)
    else:
        lo = 1e-12 * max(Hb, 1.0)
    hi = max(4.0 * Hb, 2.0 * lo, invariant**2 / g, 1.0)
    grow = 0
    while residual(lo) * residual(hi) > 0.0 and grow < 60:
        hi *= 2.0
        grow += 1
    if residual(lo) * residual(hi) > 0.0:
        raise TorrentialBoundaryError(
            "no subcritical boundary depth matches the imposed flux"
        )
    h0 = _bisect(residual, lo, hi)
    u0 = q01 / h0
    if abs(u0) / np.sqrt(g * h0) >= 1.0:
        raise TorrentialBoundaryError(
            "imposed flux leads to a torrential boundary state"
        )
    return GhostState(h0, u0, q02 / h0)


def predict(
    state: FlowState,
    mesh: Mesh1D,
    bathy: Bathymetry,
    params: PhysicalParams,
    bc_in: HyperbolicBC,
    bc_out: HyperbolicBC,
    dt: float,
) -> FlowState:
    """One explicit finite-volume step of the hydrostatic subsystem.

    Returns the predicted state at t + dt.  Depth stays non-negative under
    the CFL bound; a produced negative depth beyond round-off is an internal
    invariant violation and raises.
    """
    n = mesh.n_nodes
    if state.n_nodes != n or bathy.zb.size != n:
        raise ValueError("state/mesh/bathymetry size mismatch")
    admissible = float(np.min(mesh.element_widths)) / max_wave_speed(state, params)
    assert dt <= admissible * (1.0 + 1e-9), (
        f"CFL violation: dt = {dt:.3e} exceeds admissible {admissible:.3e}"
    )

    u, w = state.velocities(params.h_eps)
    ghost_l = apply_hyperbolic_bc(state, bc_in, params.g)
    ghost_r = apply_hyperbolic_bc(state, bc_out, params.g)

    # extended arrays with one ghost node per side; ghost bottom copies the
    # edge value so the boundary interface reconstruction is the identity
    He = np.concatenate(([ghost_l.H], state.H, [ghost_r.H]))
    ue = np.concatenate(([ghost_l.u], u, [ghost_r.u]))
    we = np.concatenate(([ghost_l.w], w, [ghost_r.w]))
    zbe = np.concatenate(([bathy.zb[0]], bathy.zb, [bathy.zb[-1]]))

    HLs, HRs = hydrostatic_reconstruct(He[:-1], He[1:], zbe[:-1], zbe[1:])
    F_H, F_Hu = kinetic_flux((HLs, HLs * ue[:-1]), (HRs, HRs * ue[1:]), params.g)
    F_Hw = F_H * np.where(F_H >= 0.0, we[:-1], we[1:])

    sigma = dt / mesh.dual_widths
    half_g = 0.5 * params.g
    H_new = state.H - sigma * (F_H[1:] - F_H[:-1])
    # hydrostatic-reconstruction corrections make the momentum balance exact
    # on the lake at rest
    Hu_new = state.Hu - sigma * (
        F_Hu[1:] - half_g * HLs[1:] ** 2 - F_Hu[:-1] + half_g * HRs[:-1] ** 2
    )
    Hw_new = state.Hw - sigma * (F_Hw[1:] - F_Hw[:-1])

    floor = -1e-12 * max(1.0, float(state.H.max()))
    if np.any(H_new < floor):
        raise RuntimeError(
            f"negative depth produced by the prediction step (min {H_new.min():.3e})"
        )
    np.maximum(H_new, 0.0, out=H_new)
    dry = H_new < params.h_eps
    Hu_new[dry] = 0.0
    Hw_new[dry] = 0.0
    return FlowState(H_new, Hu_new, Hw_new, state.t + dt)
