"""Triangulated rectangle, nodal/elementwise fields, loads, and energies.

Discretization: continuous piecewise-linear displacements on a structured
triangulation of a rectangle (each grid cell split along its diagonal),
piecewise-constant plastic strains, one-point quadrature (exact here since
every integrand is elementwise constant). The clamped boundary is the left
edge x = 0; displacements vanish there identically.

Two incremental energies live side by side on the same mesh: the
finite-strain energy at a given eps > 0, written on the multiplicative
elastic strain (I + eps grad u)(I + eps z)^-1 and rescaled by eps^-2, and its
small-strain limit, quadratic in (grad u, z). Loads are a fixed assembled
nodal vector scaled by a piecewise-linear time profile that starts at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError, InvariantError
from .material import MaterialParams

_SL_TOL = 1e-9


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh with a clamped node set.

    nodes: (n, 2) coordinates; triangles: (m, 3) vertex indices with positive
    orientation; gamma_nodes: indices of clamped nodes (nonempty). Shape
    function gradients and areas are derived once at construction.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    gamma_nodes: np.ndarray
    areas: np.ndarray = field(init=False, repr=False)
    grads: np.ndarray = field(init=False, repr=False)
    free_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        tris = np.asarray(self.triangles, dtype=int)
        gamma = np.asarray(self.gamma_nodes, dtype=int)
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ArgumentError("nodes must be an (n, 2) array")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ArgumentError("triangles must be an (m, 3) array")
        if gamma.size == 0:
            raise ArgumentError("the clamped node set must be nonempty")
        p0 = nodes[tris[:, 0]]
        p1 = nodes[tris[:, 1]]
        p2 = nodes[tris[:, 2]]
        e1 = p1 - p0
        e2 = p2 - p0
        twice_area = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        if np.any(twice_area <= 0.0):
            raise ArgumentError("triangles must be positively oriented")
        areas = 0.5 * twice_area
        # grad of barycentric functions: rotated opposite edges over 2A
        x = np.stack([p0[:, 0], p1[:, 0], p2[:, 0]], axis=1)
        y = np.stack([p0[:, 1], p1[:, 1], p2[:, 1]], axis=1)
        b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
        c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
        grads = np.stack([b, c], axis=2) / (2.0 * areas)[:, None, None]
        free = np.ones(nodes.shape[0], dtype=bool)
        free[gamma] = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "gamma_nodes", gamma)
        object.__setattr__(self, "areas", areas)
        object.__setattr__(self, "grads", grads)
        object.__setattr__(self, "free_mask", free)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.triangles.shape[0]


def build_mesh(lx: float, ly: float, nx: int, ny: int) -> Mesh:
    """Structured triangulation of [0, lx] x [0, ly] with nx x ny cells.

    (nx+1)(ny+1) nodes, 2 nx ny triangles (each cell split along the
    diagonal), clamped nodes are those on x = 0.
    """
    if lx <= 0.0 or ly <= 0.0:
        raise ArgumentError("lx and ly must be positive")
    if nx < 1 or ny < 1:
        raise ArgumentError("nx and ny must be at least 1")
    xs = np.linspace(0.0, lx, nx + 1)
    ys = np.linspace(0.0, ly, ny + 1)
    nodes = np.array([[x, y] for y in ys for x in xs])

    def node(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = node(i, j), node(i + 1, j)
            c, d = node(i + 1, j + 1), node(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    gamma = np.array([node(0, j) for j in range(ny + 1)])
    return Mesh(nodes=nodes, triangles=np.array(tris), gamma_nodes=gamma)


@dataclass(frozen=True)
class StateField:
    """Nodal displacement (n, 2) and elementwise plastic strain (m, 2, 2)."""

    u: np.ndarray
    z: np.ndarray

    @classmethod
    def make(cls, mesh: Mesh, u, z) -> "StateField":
        """Build a state, zeroing clamped rows so the constraint is exact."""
        u = np.array(u, dtype=float)
        z = np.array(z, dtype=float)
        if u.shape != (mesh.n_nodes, 2):
            raise ArgumentError(f"u must have shape {(mesh.n_nodes, 2)}")
        if z.shape != (mesh.n_elements, 2, 2):
            raise ArgumentError(f"z must have shape {(mesh.n_elements, 2, 2)}")
        u[mesh.gamma_nodes] = 0.0
        return cls(u=u, z=z)

    @classmethod
    def zero(cls, mesh: Mesh) -> "StateField":
        return cls(
            u=np.zeros((mesh.n_nodes, 2)), z=np.zeros((mesh.n_elements, 2, 2))
        )


@dataclass(frozen=True)
class LoadProgram:
    """Fixed nodal load vector scaled by a piecewise-linear time profile.

    spatial is the assembled nodal vector of a body force density; the
    profile is given by breakpoints (t_k, value_k) with t_0 = 0 and
    profile(0) = 0, interpolated linearly in between and held constant
    outside the breakpoint range.
    """

    spatial: np.ndarray
    break_times: np.ndarray
    break_values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.break_times, dtype=float)
        values = np.asarray(self.break_values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 1:
            raise ArgumentError("profile breakpoints must be two equal 1-d lists")
        if times[0] != 0.0 or values[0] != 0.0:
            raise ArgumentError("the load profile must start at (0, 0)")
        if np.any(np.diff(times) <= 0.0):
            raise ArgumentError("profile breakpoint times must strictly increase")
        object.__setattr__(self, "spatial", np.asarray(self.spatial, dtype=float))
        object.__setattr__(self, "break_times", times)
        object.__setattr__(self, "break_values", values)

    @classmethod
    def from_body_force(cls, mesh: Mesh, f, breakpoints) -> "LoadProgram":
        """Assemble the nodal vector of a constant body force density f."""
        f = np.asarray(f, dtype=float)
        if f.shape != (2,):
            raise ArgumentError("body force must be a 2-vector")
        spatial = np.zeros((mesh.n_nodes, 2))
        contrib = (mesh.areas / 3.0)[:, None] * f[None, :]
        for a in range(3):
            np.add.at(spatial, mesh.triangles[:, a], contrib)
        times = np.array([bp[0] for bp in breakpoints], dtype=float)
        values = np.array([bp[1] for bp in breakpoints], dtype=float)
        return cls(spatial=spatial, break_times=times, break_values=values)

    def profile(self, t: float) -> float:
        return float(np.interp(t, self.break_times, self.break_values))

    def pairing(self, t: float, u: np.ndarray) -> float:
        """Value of the load functional on a displacement field at time t."""
        return self.profile(t) * float(np.sum(self.spatial * u))


def element_gradients(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Elementwise displacement gradient, shape (m, 2, 2)."""
    return np.einsum("eai,eaj->eij", u[mesh.triangles], mesh.grads)


def _plastic_admissible(eps: float, z: np.ndarray, p: MaterialParams):
    """Masks for the unimodular-ball constraint on I + eps z, elementwise."""
    eye = np.eye(2)
    pz = eye[None, :, :] + eps * z
    det = pz[:, 0, 0] * pz[:, 1, 1] - pz[:, 0, 1] * pz[:, 1, 0]
    dist = np.linalg.norm(eps * z, axis=(1, 2))
    ok = (np.abs(det - 1.0) <= _SL_TOL) & (dist <= p.rho_k)
    return pz, det, ok


def _inv22(a: np.ndarray) -> np.ndarray:
    det = a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    out = np.empty_like(a)
    out[..., 0, 0] = a[..., 1, 1]
    out[..., 0, 1] = -a[..., 0, 1]
    out[..., 1, 0] = -a[..., 1, 0]
    out[..., 1, 1] = a[..., 0, 0]
    return out / det[..., None, None]


def elastic_strain_tensors(
    state: StateField, eps: float, mesh: Mesh
) -> np.ndarray:
    """Elementwise multiplicative elastic strain (I + eps grad u)(I + eps z)^-1."""
    eye = np.eye(2)
    g = element_gradients(mesh, state.u)
    pz = eye[None, :, :] + eps * state.z
    return (eye[None, :, :] + eps * g) @ _inv22(pz)


def finite_energy_parts(
    state: StateField, eps: float, mesh: Mesh, p: MaterialParams
):
    """Rescaled elastic and hardening energy densities per element.

    Returns (elastic, hardening) arrays of shape (m,); entries are +inf where
    orientation or the plastic ball constraint fails.
    """
    eye = np.eye(2)
    g = element_gradients(mesh, state.u)
    pz, det_pz, ok = _plastic_admissible(eps, state.z, p)
    f_el = (eye[None, :, :] + eps * g) @ _inv22(pz)
    det = f_el[:, 0, 0] * f_el[:, 1, 1] - f_el[:, 0, 1] * f_el[:, 1, 0]
    frob_sq = np.sum(f_el * f_el, axis=(1, 2))
    elastic = np.full(mesh.n_elements, np.inf)
    pos = det > 0.0
    ld = np.log(det, where=pos, out=np.zeros_like(det))
    elastic[pos] = (
        0.5 * p.mu * (frob_sq[pos] - 2.0) - p.mu * ld[pos] + 0.5 * p.lam * ld[pos] ** 2
    ) / (eps * eps)
    z_norm_sq = np.sum(state.z * state.z, axis=(1, 2))
    hardening = np.where(ok, p.h * z_norm_sq, np.inf)
    return elastic, hardening


def finite_energy(
    state: StateField,
    t: float,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
) -> float:
    """Rescaled finite-strain energy at time t; +inf outside the domain."""
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    elastic, hardening = finite_energy_parts(state, eps, mesh, p)
    stored = float(np.dot(mesh.areas, elastic + hardening))
    return stored - load.pairing(t, state.u)


def linear_energy(
    state: StateField,
    t: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
) -> float:
    """Small-strain energy: quadratic in (grad u, z), minus the load term."""
    g = element_gradients(mesh, state.u)
    g_sym = 0.5 * (g + np.transpose(g, (0, 2, 1)))
    z_sym = 0.5 * (state.z + np.transpose(state.z, (0, 2, 1)))
    diff = g_sym - z_sym
    tr = np.trace(g, axis1=1, axis2=2) - np.trace(state.z, axis1=1, axis2=2)
    dens = (
        p.mu * np.sum(diff * diff, axis=(1, 2))
        + 0.5 * p.lam * tr * tr
        + p.h * np.sum(state.z * state.z, axis=(1, 2))
    )
    return float(np.dot(mesh.areas, dens)) - load.pairing(t, state.u)


def _elastic_stress_batch(f_el: np.ndarray, p: MaterialParams) -> np.ndarray:
    det = f_el[:, 0, 0] * f_el[:, 1, 1] - f_el[:, 0, 1] * f_el[:, 1, 0]
    if np.any(det <= 0.0):
        raise DomainError("stress undefined: det F <= 0 on some element")
    finv_t = np.transpose(_inv22(f_el), (0, 2, 1))
    ld = np.log(det)
    return p.mu * f_el + (p.lam * ld - p.mu)[:, None, None] * finv_t


def finite_residual_u(
    state: StateField,
    t: float,
    eps: float,
    mesh: Mesh,
    load: LoadProgram,
    p: MaterialParams,
) -> np.ndarray:
    """Nodal gradient of finite_energy in u; rows vanish at clamped nodes.

    DomainError if the state has infinite energy.
    """
    eye = np.eye(2)
    pz, det_pz, ok = _plastic_admissible(eps, state.z, p)
    if not np.all(ok):
        raise InvariantError("plastic strain outside the admissible ball")
    b_inv = _inv22(pz)
    g = element_gradients(mesh, state.u)
    f_el = (eye[None, :, :] + eps * g) @ b_inv
    stress = _elastic_stress_batch(f_el, p)
    # d/d(grad u) of area * eps^-2 W((I + eps G) B) = (area/eps) S B^T
    m = (mesh.areas / eps)[:, None, None] * (
        stress @ np.transpose(b_inv, (0, 2, 1))
    )
    res = np.zeros((mesh.n_nodes, 2))
    contrib = np.einsum("eij,eaj->eai", m, mesh.grads)
    for a in range(3):
        np.add.at(res, mesh.triangles[:, a], contrib[:, a])
    res -= load.profile(t) * load.spatial
    res[mesh.gamma_nodes] = 0.0
    return res


def finite_hessian_u(
    state: StateField,
    eps: float,
    mesh: Mesh,
    p: MaterialParams,
) -> np.ndarray:
    """Dense Hessian of the finite-strain energy in the nodal u unknowns.

    Full (2n, 2n) matrix; clamped rows/columns are left untouched by the
    assembly and handled by the caller through the free-dof mask.
    """
    eye = np.eye(2)
    pz, det_pz, ok = _plastic_admissible(eps, state.z, p)
    if not np.all(ok):
        raise InvariantError("plastic strain outside the admissible ball")
    b_inv = _inv22(pz)
    g = element_gradients(mesh, state.u)
    f_el = (eye[None, :, :] + eps * g) @ b_inv
    det = f_el[:, 0, 0] * f_el[:, 1, 1] - f_el[:, 0, 1] * f_el[:, 1, 0]
    if np.any(det <= 0.0):
        raise DomainError("hessian undefined: det F <= 0 on some element")
    finv_t = np.transpose(_inv22(f_el), (0, 2, 1))
    ld = np.log(det)
    # c_a = B^-T grad_a, q_a = F^-T c_a  (all shape (m, 3, 2))
    c = np.einsum("eji,eaj->eai", b_inv, mesh.grads)
    q = np.einsum("eij,eaj->eai", finv_t, c)
    cc = np.einsum("eai,ebi->eab", c, c)
    coeff = p.mu - p.lam * ld
    # K[(a,i),(b,j)] = area [ mu d_ij c_a.c_b + coeff q_{b,i} q_{a,j}
    #                         + lam q_{a,i} q_{b,j} ]
    k_elem = (
        p.mu * np.einsum("eab,ij->eaibj", cc, eye)
        + coeff[:, None, None, None, None]
        * np.einsum("ebi,eaj->eaibj", q, q)
        + p.lam * np.einsum("eai,ebj->eaibj", q, q)
    )
    k_elem *= mesh.areas[:, None, None, None, None]
    n = mesh.n_nodes
    k = np.zeros((2 * n, 2 * n))
    tris = mesh.triangles
    for a in range(3):
        for b in range(3):
            rows = 2 * tris[:, a]
            cols = 2 * tris[:, b]
            for i in range(2):
                for j in range(2):
                    np.add.at(k, (rows + i, cols + j), k_elem[:, a, i, b, j])
    return k
