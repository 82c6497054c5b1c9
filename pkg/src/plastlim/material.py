"""Stored-energy densities, dissipation, and their small-strain rescalings.

The elastic density is a compressible neo-Hookean law that is frame
indifferent, stress free at the identity, and infinite for non-orientation-
preserving states. Hardening is quadratic on a closed ball of unimodular
plastic strains. Dissipation is positively 1-homogeneous (von Mises type) on
symmetric trace-free flow directions, and the distance between plastic states
is evaluated along exponential paths, which makes it exact on every state the
solvers can actually reach.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError, SamplingError
from .tensors import frobenius, mat_exp, mat_log

_SL_TOL = 1e-9  # absolute tolerance on |det P - 1| for admissible plastic strains


@dataclass(frozen=True)
class MaterialParams:
    """Isotropic material constants.

    mu, h, sigma_y must be strictly positive, lam nonnegative, and rho_k in
    (0, 1): rho_k is the radius of the admissible plastic ball around the
    identity, measured in Frobenius norm.
    """

    mu: float
    lam: float
    h: float
    sigma_y: float
    rho_k: float = 0.5
    d: int = 2

    def __post_init__(self):
        if not (self.mu > 0.0 and self.h > 0.0 and self.sigma_y > 0.0):
            raise ArgumentError("mu, h and sigma_y must be strictly positive")
        if self.lam < 0.0:
            raise ArgumentError("lam must be nonnegative")
        if not (0.0 < self.rho_k < 1.0):
            raise ArgumentError("rho_k must lie in (0, 1)")
        if self.d not in (2, 3):
            raise ArgumentError("dimension d must be 2 or 3")


@dataclass(frozen=True)
class IsotropicTensor:
    """Fourth-order isotropic tensor acting on d x d matrices.

    kind 'elastic' maps A to 2 mu sym(A) + lam tr(A) I (the elastic Hessian at
    the identity); kind 'hardening' maps A to 2 h A. The induced seminorm is
    |A|^2 = (1/2) A : T[A].
    """

    kind: str
    mu: float = 0.0
    lam: float = 0.0
    h: float = 0.0

    @classmethod
    def elastic(cls, mu: float, lam: float) -> "IsotropicTensor":
        if mu <= 0.0 or lam < 0.0:
            raise ArgumentError("elastic tensor needs mu > 0 and lam >= 0")
        return cls(kind="elastic", mu=mu, lam=lam)

    @classmethod
    def hardening(cls, h: float) -> "IsotropicTensor":
        if h <= 0.0:
            raise ArgumentError("hardening tensor needs h > 0")
        return cls(kind="hardening", h=h)

    def apply(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if self.kind == "elastic":
            sym = 0.5 * (a + a.T)
            return 2.0 * self.mu * sym + self.lam * np.trace(a) * np.eye(a.shape[0])
        return 2.0 * self.h * a

    def seminorm_sq(self, a) -> float:
        a = np.asarray(a, dtype=float)
        return float(0.5 * np.tensordot(a, self.apply(a)))


def elastic_density(f, p: MaterialParams) -> float:
    """Neo-Hookean stored energy; +inf when orientation is not preserved."""
    f = np.asarray(f, dtype=float)
    det = float(np.linalg.det(f))
    if det <= 0.0:
        return float("inf")
    ld = np.log(det)
    return float(
        0.5 * p.mu * (np.sum(f * f) - p.d) - p.mu * ld + 0.5 * p.lam * ld * ld
    )


def elastic_density_grad(f, p: MaterialParams) -> np.ndarray:
    """First Piola stress of elastic_density; DomainError if det F <= 0."""
    f = np.asarray(f, dtype=float)
    det = float(np.linalg.det(f))
    if det <= 0.0:
        raise DomainError("stress undefined: det F <= 0")
    finv_t = np.linalg.inv(f).T
    ld = np.log(det)
    return p.mu * f - p.mu * finv_t + p.lam * ld * finv_t


def hardening_density(p_mat, p: MaterialParams) -> float:
    """Quadratic hardening on the admissible ball; +inf outside.

    Admissible means |det P - 1| <= 1e-9 and ||P - I||_F <= rho_k.
    """
    p_mat = np.asarray(p_mat, dtype=float)
    dev_from_id = p_mat - np.eye(p_mat.shape[0])
    if abs(float(np.linalg.det(p_mat)) - 1.0) > _SL_TOL:
        return float("inf")
    if frobenius(dev_from_id) > p.rho_k:
        return float("inf")
    return float(p.h * np.sum(dev_from_id * dev_from_id))


def _devsym_defect(z: np.ndarray) -> float:
    sym_defect = frobenius(z - z.T) * 0.5
    return max(sym_defect, abs(float(np.trace(z))))


def dissipation_potential(z, p: MaterialParams) -> float:
    """Flow resistance sigma_y ||z||_F on symmetric trace-free directions.

    +inf when z fails the symmetric trace-free check within
    1e-10 * (1 + ||z||).
    """
    z = np.asarray(z, dtype=float)
    tol = 1e-10 * (1.0 + frobenius(z))
    if _devsym_defect(z) > tol:
        return float("inf")
    return float(p.sigma_y * frobenius(z))


def dissipation_distance(p_mat, p_hat, p: MaterialParams) -> float:
    """Cost of moving the plastic strain from P to P_hat.

    Evaluated along the exponential path: the logarithm of P_hat P^-1 must
    exist and be symmetric trace-free within tolerance, in which case the
    cost is sigma_y times its norm; otherwise +inf. Exact whenever P_hat was
    produced from P by an exponential flow increment, which covers every pair
    of states a trajectory stores.
    """
    p_mat = np.asarray(p_mat, dtype=float)
    p_hat = np.asarray(p_hat, dtype=float)
    det = float(np.linalg.det(p_mat))
    if det == 0.0 or not np.isfinite(det):
        return float("inf")
    quotient = p_hat @ np.linalg.inv(p_mat)
    try:
        log_q = mat_log(quotient)
    except DomainError:
        return float("inf")
    return dissipation_potential(log_q, p)


def rescaled_density(eps: float, a, which: str, p: MaterialParams) -> float:
    """Energy of I + eps A, rescaled by eps^-2.

    which selects the elastic ('el') or hardening ('h') density. Near zero
    strain both approach the corresponding quadratic seminorm of A.
    """
    if eps <= 0.0:
        raise ArgumentError("eps must be positive")
    if which not in ("el", "h"):
        raise ArgumentError("which must be 'el' or 'h'")
    a = np.asarray(a, dtype=float)
    state = np.eye(a.shape[0]) + eps * a
    density = elastic_density if which == "el" else hardening_density
    return float(density(state, p) / (eps * eps))


def _unit_directions(which: str, d: int, count: int, rng) -> np.ndarray:
    # elastic directions are symmetric: the quadratic form vanishes on the
    # antisymmetric cone while the density stays positive off rotations, so
    # a relative expansion bound only exists along symmetric strains
    mats = rng.standard_normal((count, d, d))
    mats = 0.5 * (mats + np.transpose(mats, (0, 2, 1)))
    if which == "h":
        tr = np.trace(mats, axis1=1, axis2=2)
        mats -= tr[:, None, None] * np.eye(d) / d
    norms = np.linalg.norm(mats, axis=(1, 2))
    return mats / norms[:, None, None]


def expansion_radius(
    which: str,
    delta: float,
    p: MaterialParams,
    samples: int = 160,
    seed: int = 0,
) -> float:
    """Largest verified radius on which the density matches its quadratic.

    Bisects the radius r such that |W(I + A) - |A|_T^2| <= delta |A|_T^2
    (plus a fixed 1e-13-scale roundoff allowance, since both sides vanish
    quadratically at 0 while the density is evaluated with absolute machine
    noise) for all sampled A with ||A|| <= r. Elastic directions are
    uniform on the symmetric Frobenius sphere; hardening directions follow
    unimodular exponential paths so the determinant constraint is met by
    construction, with the path parameter scaled so the probes land exactly
    at the target magnitudes (in particular at r itself, which is what caps
    the hardening radius at the admissible ball). The returned radius
    carries a 5% safety margin so downstream samples strictly inside it
    stay within the verified region. SamplingError if nothing down to 1e-8
    passes.
    """
    if delta <= 0.0:
        raise ArgumentError("delta must be positive")
    if which not in ("el", "h"):
        raise ArgumentError("which must be 'el' or 'h'")
    rng = np.random.default_rng(seed)
    d = p.d
    dirs = _unit_directions(which, d, samples, rng)
    magnitudes = np.geomspace(1.0 / 64.0, 1.0, 8)
    tensor = (
        IsotropicTensor.elastic(p.mu, p.lam)
        if which == "el"
        else IsotropicTensor.hardening(p.h)
    )
    density = elastic_density if which == "el" else hardening_density
    noise = 1e-13 * (1.0 + p.mu + p.lam + p.h)

    def exp_scale(target: float) -> float:
        # ||exp(s u) - I|| is the same for every unit deviatoric-symmetric u
        # in 2x2, so one scalar inversion serves all directions.
        lo_s, hi_s = 0.0, 2.0 * target
        for _ in range(60):
            mid = 0.5 * (lo_s + hi_s)
            if frobenius(mat_exp(mid * dirs[0]) - np.eye(d)) < target:
                lo_s = mid
            else:
                hi_s = mid
        return 0.5 * (lo_s + hi_s)

    def passes(radius: float) -> bool:
        steps = magnitudes * radius
        if which == "h":
            scales = [exp_scale(m) for m in steps]
        for u in dirs:
            for k, s in enumerate(steps):
                if which == "el":
                    a = s * u
                else:
                    a = mat_exp(scales[k] * u) - np.eye(d)
                q = tensor.seminorm_sq(a)
                w = density(np.eye(d) + a, p)
                if not np.isfinite(w) or abs(w - q) > delta * q + noise:
                    return False
        return True

    lo = 1e-8
    if not passes(lo):
        raise SamplingError(
            f"no radius down to {lo:g} satisfies the delta={delta:g} expansion bound"
        )
    hi = 2.0
    while passes(hi):
        hi *= 2.0
        if hi > 64.0:
            return 0.95 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * max(lo, 1e-8):
            break
    return 0.95 * lo
