"""Independent reference implementations used only by the test suite.

Everything here is deliberately written on a different code path from the
package: quadrature assembly loops over basis functions evaluated
pointwise, the staggered stencil oracle codes the finite-difference
formulas literally, the Rusanov step and the bisection Riemann solver are
self-contained.
"""

import numpy as np

# 4-point Gauss-Legendre nodes/weights on [0, 1]
_GP = 0.5 * (1.0 + np.array([
    -0.8611363115940526, -0.3399810435848563,
    0.3399810435848563, 0.8611363115940526,
]))
_GW = 0.5 * np.array([
    0.3478548451374538, 0.6521451548625461,
    0.6521451548625461, 0.3478548451374538,
])


def _hat(nodes, k, x):
    """Fine P1 hat function at node k evaluated at x (scalar or array)."""
    x = np.asarray(x, dtype=float)
    val = np.zeros_like(x)
    if k > 0:
        left = (x >= nodes[k - 1]) & (x <= nodes[k])
        val[left] = (x[left] - nodes[k - 1]) / (nodes[k] - nodes[k - 1])
    if k < nodes.size - 1:
        right = (x >= nodes[k]) & (x <= nodes[k + 1])
        val[right] = (nodes[k + 1] - x[right]) / (nodes[k + 1] - nodes[k])
    return val


def _hat_deriv(nodes, k, el):
    """Slope of hat k on element el (constant per element)."""
    if el == k - 1:
        return 1.0 / (nodes[k] - nodes[k - 1])
    if el == k:
        return -1.0 / (nodes[k + 1] - nodes[k])
    return 0.0


def _pressure_basis(pair_tag, nodes, l):
    """Pressure basis l as a callable plus its per-fine-element derivative."""
    n_el = nodes.size - 1
    if pair_tag == "P1P0":
        def value(x):
            x = np.asarray(x, dtype=float)
            inside = (x >= nodes[l]) & (x <= nodes[l + 1])
            return np.where(inside, 1.0, 0.0)

        def deriv(el):
            return 0.0

        return value, deriv
    coarse = nodes[0::2]
    weights = np.zeros(coarse.size)
    weights[l] = 1.0

    def value(x):
        return np.interp(np.asarray(x, dtype=float), coarse, weights)

    def deriv(el):
        # coarse element containing fine element el
        j = el // 2
        return (weights[j + 1] - weights[j]) / (coarse[j + 1] - coarse[j])

    return value, deriv


def gauss_divergence(pair_tag, mesh, H, zb):
    """Dense (M, 2N) divergence matrix by per-element Gauss quadrature.

    Integrates d((H v1)_h)/dx * psi - v1 zeta_h' psi + 2 v2 psi with the
    nodal product interpolation (H v)_h = sum H_k v_k phi_k.
    """
    nodes = mesh.nodes
    n = nodes.size
    n_el = n - 1
    zeta = np.asarray(H) + 2.0 * np.asarray(zb)
    m = n_el if pair_tag == "P1P0" else (n - 1) // 2 + 1
    D = np.zeros((m, 2 * n))
    for l in range(m):
        psi, _ = _pressure_basis(pair_tag, nodes, l)
        for el in range(n_el):
            a, b = nodes[el], nodes[el + 1]
            h = b - a
            xq = a + h * _GP
            wq = h * _GW
            chi = (zeta[el + 1] - zeta[el]) / h
            for k in (el, el + 1):
                phi = _hat(nodes, k, xq)
                dphi = _hat_deriv(nodes, k, el)
                D[l, k] += np.sum(wq * (H[k] * dphi - chi * phi) * psi(xq))
                D[l, n + k] += np.sum(wq * 2.0 * phi * psi(xq))
    return D


def gauss_gradient(pair_tag, mesh, H, zb):
    """Dense (2N, M) gradient matrix by quadrature.

    First component: integral of H_i phi_i psi_l' + zeta' psi_l phi_i; for
    the element-constant pressure the psi' part is the sum of interior
    nodal jumps (boundary jumps belong to the boundary matrix C).  Second
    component: -2 integral of psi_l phi_i.
    """
    nodes = mesh.nodes
    n = nodes.size
    n_el = n - 1
    zeta = np.asarray(H) + 2.0 * np.asarray(zb)
    m = n_el if pair_tag == "P1P0" else (n - 1) // 2 + 1
    G = np.zeros((2 * n, m))
    for l in range(m):
        psi, dpsi = _pressure_basis(pair_tag, nodes, l)
        if pair_tag == "P1P0":
            # interior nodal jumps of the element indicator
            for i in range(1, n - 1):
                jump = 0.0
                if i == l:
                    jump += 1.0
                if i == l + 1:
                    jump -= 1.0
                G[i, l] += H[i] * jump
        for el in range(n_el):
            a, b = nodes[el], nodes[el + 1]
            h = b - a
            xq = a + h * _GP
            wq = h * _GW
            chi = (zeta[el + 1] - zeta[el]) / h
            for i in (el, el + 1):
                phi = _hat(nodes, i, xq)
                if pair_tag != "P1P0":
                    G[i, l] += np.sum(wq * H[i] * phi * dpsi(el))
                G[i, l] += np.sum(wq * chi * psi(xq) * phi)
                G[n + i, l] += np.sum(wq * (-2.0) * psi(xq) * phi)
    return G


def gauss_lumped_mass(mesh, H):
    """Row sums of the depth-weighted P1 mass matrix by quadrature."""
    nodes = mesh.nodes
    n = nodes.size
    a_vec = np.zeros(n)
    for el in range(n - 1):
        a, b = nodes[el], nodes[el + 1]
        h = b - a
        xq = a + h * _GP
        wq = h * _GW
        Hq = np.interp(xq, nodes, H)
        for i in (el, el + 1):
            a_vec[i] += np.sum(wq * Hq * _hat(nodes, i, xq))
    return a_vec


def staggered_stencil_divergence(mesh, H, zb):
    """Literal staggered finite-difference stencil (pressure at midpoints).

    Row j couples q = H u at the element's end nodes, the depth/bottom
    difference of zeta = H + 2 zb against the node mean of u, and the
    trapezoid of 2 w.
    """
    nodes = mesh.nodes
    n = nodes.size
    zeta = np.asarray(H) + 2.0 * np.asarray(zb)
    D = np.zeros((n - 1, 2 * n))
    for j in range(n - 1):
        h = nodes[j + 1] - nodes[j]
        dz = zeta[j + 1] - zeta[j]
        D[j, j] = -H[j] - 0.5 * dz
        D[j, j + 1] = H[j + 1] - 0.5 * dz
        D[j, n + j] = h
        D[j, n + j + 1] = h
    return D


def staggered_stencil_gradient(mesh, H, zb):
    """Literal staggered gradient stencil at the nodes (interior rows)."""
    nodes = mesh.nodes
    n = nodes.size
    zeta = np.asarray(H) + 2.0 * np.asarray(zb)
    G = np.zeros((2 * n, n - 1))
    for i in range(n):
        if i > 0:
            h = nodes[i] - nodes[i - 1]
            dz = zeta[i] - zeta[i - 1]
            if i < n - 1:
                G[i, i - 1] += -H[i] + 0.5 * dz
            else:
                G[i, i - 1] += 0.5 * dz  # boundary: jump term moves to C
            G[n + i, i - 1] += -h
        if i < n - 1:
            dz = zeta[i + 1] - zeta[i]
            h = nodes[i + 1] - nodes[i]
            if i > 0:
                G[i, i] += H[i] + 0.5 * dz
            else:
                G[i, i] += 0.5 * dz
            G[n + i, i] += -h
    return G


def rusanov_step(state_H, state_Hu, state_Hw, mesh, g, dt):
    """First-order Rusanov update on the dual cells, wall boundaries, flat bottom."""
    H = np.asarray(state_H, dtype=float)
    Hu = np.asarray(state_Hu, dtype=float)
    Hw = np.asarray(state_Hw, dtype=float)
    u = np.where(H > 1e-12, Hu / np.maximum(H, 1e-300), 0.0)
    w = np.where(H > 1e-12, Hw / np.maximum(H, 1e-300), 0.0)

    He = np.concatenate(([H[0]], H, [H[-1]]))
    ue = np.concatenate(([-u[0]], u, [-u[-1]]))
    we = np.concatenate(([w[0]], w, [w[-1]]))

    def flux(Hv, uv, wv):
        return np.array([Hv * uv, Hv * uv**2 + 0.5 * g * Hv**2, Hv * uv * wv])

    F = np.zeros((3, He.size - 1))
    for e in range(He.size - 1):
        FL = flux(He[e], ue[e], we[e])
        FR = flux(He[e + 1], ue[e + 1], we[e + 1])
        lam = max(
            abs(ue[e]) + np.sqrt(g * He[e]),
            abs(ue[e + 1]) + np.sqrt(g * He[e + 1]),
        )
        UL = np.array([He[e], He[e] * ue[e], He[e] * we[e]])
        UR = np.array([He[e + 1], He[e + 1] * ue[e + 1], He[e + 1] * we[e + 1]])
        F[:, e] = 0.5 * (FL + FR) - 0.5 * lam * (UR - UL)

    sigma = dt / mesh.dual_widths
    H_new = H - sigma * (F[0, 1:] - F[0, :-1])
    Hu_new = Hu - sigma * (F[1, 1:] - F[1, :-1])
    Hw_new = Hw - sigma * (F[2, 1:] - F[2, :-1])
    return H_new, Hu_new, Hw_new


def riemann_star_bisection(h_left, u_left, h_right, u_right, g, tol=1e-12):
    """Exact star state by pure bisection (independent of the package path)."""

    def branch(h, h_k):
        if h <= h_k:
            return 2.0 * (np.sqrt(g * h) - np.sqrt(g * h_k))
        return (h - h_k) * np.sqrt(0.5 * g * (h + h_k) / (h * h_k))

    def f(h):
        return branch(h, h_left) + branch(h, h_right) + u_right - u_left

    lo, hi = 1e-14, max(h_left, h_right)
    while f(hi) < 0.0:
        hi *= 2.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol * hi:
            break
    h_star = 0.5 * (lo + hi)
    u_star = 0.5 * (u_left + u_right) + 0.5 * (branch(h_star, h_right) - branch(h_star, h_left))
    return h_star, u_star


def random_wet_setup(rng, n_min=5, n_max=13, odd=False):
    """Random strictly increasing mesh with positive depth and bottom."""
    n = int(rng.integers(n_min, n_max + 1))
    if odd and n % 2 == 0:
        n += 1
    x = np.cumsum(0.2 + rng.random(n))
    from nhswe import Mesh1D

    mesh = Mesh1D(x)
    H = 0.2 + 2.0 * rng.random(n)
    zb = rng.standard_normal(n) * 0.3
    return mesh, H, zb
