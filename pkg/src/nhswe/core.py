"""Meshes, flow state, bathymetry and conservation diagnostics.

State variables live at the mesh nodes: water depth H, horizontal
discharge Hu and vertical discharge Hw.  Finite-volume cells are node
centered (dual cells); the two boundary cells are half elements so the
dual widths sum to the domain length.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DryDomainError(ValueError):
    """Raised when an operation needs at least one wet cell and finds none."""


class TorrentialBoundaryError(ValueError):
    """Raised when a boundary closure is requested in a supercritical regime."""


class SolverConvergenceError(RuntimeError):
    """Iterative pressure solve hit its iteration cap.

    Attributes:
        residual: relative residual reached when the cap was hit.
        iterations: number of iterations performed.
    """

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass
class Mesh1D:
    """1D node mesh with element widths and node-centered dual cells.

    ``element_widths[i] = nodes[i+1] - nodes[i]`` and the dual width of an
    interior node is the mean of its two element widths; boundary nodes get
    half an element, so ``dual_widths.sum() == length``.
    """

    nodes: np.ndarray
    element_widths: np.ndarray = field(init=False)
    dual_widths: np.ndarray = field(init=False)

    def __post_init__(self):
        self.nodes = _as_float_array(self.nodes, "nodes")
        if self.nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        widths = np.diff(self.nodes)
        if np.any(widths <= 0.0):
            raise ValueError("node coordinates must be strictly increasing")
        self.element_widths = widths
        dual = np.empty(self.nodes.size)
        dual[0] = 0.5 * widths[0]
        dual[-1] = 0.5 * widths[-1]
        dual[1:-1] = 0.5 * (widths[:-1] + widths[1:])
        self.dual_widths = dual

    @classmethod
    def uniform(cls, x_min: float, x_max: float, n_nodes: int) -> "Mesh1D":
        return cls(np.linspace(x_min, x_max, n_nodes))

    @property
    def n_nodes(self) -> int:
        return self.nodes.size

    @property
    def n_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])

    def coarse_node_indices(self) -> np.ndarray:
        """Node indices of the coarse mesh obtained by merging element pairs.

        Requires an odd node count; the coarse nodes are every other fine
        node, boundaries included.
        """
        if self.n_nodes % 2 == 0:
            raise ValueError("coarse pairing requires an odd number of nodes")
        return np.arange(0, self.n_nodes, 2)


@dataclass
class FlowState:
    """Nodal conserved variables (H, Hu, Hw) at time t."""

    H: np.ndarray
    Hu: np.ndarray
    Hw: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.H = _as_float_array(self.H, "H")
        self.Hu = _as_float_array(self.Hu, "Hu")
        self.Hw = _as_float_array(self.Hw, "Hw")
        if not (self.H.size == self.Hu.size == self.Hw.size):
            raise ValueError("H, Hu, Hw must have equal lengths")

    @property
    def n_nodes(self) -> int:
        return self.H.size

    def copy(self) -> "FlowState":
        return FlowState(self.H.copy(), self.Hu.copy(), self.Hw.copy(), self.t)

    def velocities(self, h_eps: float) -> tuple[np.ndarray, np.ndarray]:
        """(u, w) with dry nodes (H < h_eps) forced to zero velocity."""
        wet = self.H >= h_eps
        u = np.zeros_like(self.H)
        w = np.zeros_like(self.H)
        np.divide(self.Hu, self.H, out=u, where=wet)
        np.divide(self.Hw, self.H, out=w, where=wet)
        return u, w


@dataclass
class Bathymetry:
    """Nodal bottom elevation with per-element slopes.

    Slopes are exactly the element finite differences of the nodal values;
    normal data at the surface/bottom are the slope pairs (-slope, 1).
    """

    zb: np.ndarray
    slopes: np.ndarray = field(init=False)

    def __post_init__(self):
        self.zb = _as_float_array(self.zb, "zb")

    def attach(self, mesh: Mesh1D) -> "Bathymetry":
        if self.zb.size != mesh.n_nodes:
            raise ValueError("bathymetry/mesh size mismatch")
        self.slopes = np.diff(self.zb) / mesh.element_widths
        return self

    @classmethod
    def flat(cls, mesh: Mesh1D, z0: float = 0.0) -> "Bathymetry":
        return cls(np.full(mesh.n_nodes, z0)).attach(mesh)

    @classmethod
    def from_nodal(cls, mesh: Mesh1D, zb) -> "Bathymetry":
        return cls(zb).attach(mesh)

    def bottom_normals(self) -> np.ndarray:
        """Per-element (non-unit) bottom normal as (-dzb/dx, 1) pairs."""
        return np.column_stack([-self.slopes, np.ones_like(self.slopes)])

    def surface_normals(self, H: np.ndarray, mesh: Mesh1D) -> np.ndarray:
        """Per-element (non-unit) free-surface normal (-d(H+zb)/dx, 1)."""
        eta = np.asarray(H, dtype=float) + self.zb
        deta = np.diff(eta) / mesh.element_widths
        return np.column_stack([-deta, np.ones_like(deta)])


@dataclass
class PhysicalParams:
    """Gravity, CFL number, dry threshold and pressure-solver settings."""

    g: float = 9.81
    cfl: float = 0.5
    h_eps: float = 1e-8
    tol: float = 1e-10
    method: str = "direct"

    def __post_init__(self):
        if self.g <= 0.0:
            raise ValueError("g must be positive")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if self.h_eps <= 0.0:
            raise ValueError("h_eps must be positive")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.method not in ("direct", "cg", "uzawa"):
            raise ValueError(f"unknown solver method {self.method!r}")


def _check_sizes(state: FlowState, mesh: Mesh1D):
    if state.n_nodes != mesh.n_nodes:
        raise ValueError(
            f"state has {state.n_nodes} nodes, mesh has {mesh.n_nodes}"
        )


def total_mass(state: FlowState, mesh: Mesh1D) -> float:
    """Water area sum(dx_i * H_i), the conserved quantity of the depth equation."""
    _check_sizes(state, mesh)
    return float(np.sum(mesh.dual_widths * state.H))


def total_energy(state: FlowState, mesh: Mesh1D, bathy: Bathymetry, g: float) -> float:
    """Discrete total energy sum(dx_i * E_i).

    E = H (u^2 + w^2) / 2 + g H (eta + zb) / 2 with eta = H + zb, so the
    potential part reads g H (H + 2 zb) / 2.  Dry nodes contribute no
    kinetic energy.
    """
    _check_sizes(state, mesh)
    if bathy.zb.size != state.n_nodes:
        raise ValueError("bathymetry/state size mismatch")
    wet = state.H > 0.0
    kinetic = np.zeros_like(state.H)
    np.divide(state.Hu**2 + state.Hw**2, state.H, out=kinetic, where=wet)
    density = 0.5 * kinetic + 0.5 * g * state.H * (state.H + 2.0 * bathy.zb)
    return float(np.sum(mesh.dual_widths * density))
