"""Dense kernels for the small (2x2 and 3x3) matrices used everywhere else.

Matrices are plain float numpy arrays. Kernels are written for accuracy near
the identity, where the solvers live: the exponential uses scaling and
squaring with a machine-precision Taylor tail, and the logarithm uses inverse
scaling (repeated principal square roots) followed by a Mercator series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError

_EXP_SCALE_LIMIT = 0.5  # squaring until the scaled argument norm is below this
_LOG_SERIES_LIMIT = 0.25  # square-rooting until ||P - I|| is below this
_SERIES_MAX_TERMS = 96


def _check_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 3):
        raise ArgumentError(f"expected a 2x2 or 3x3 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError("matrix entries must be finite")
    return a


@dataclass(frozen=True)
class Decomposition:
    """Additive parts of a square matrix.

    sym + anti reconstructs the input exactly; dev is the trace-free part of
    sym, so trace(dev) vanishes identically.
    """

    sym: np.ndarray
    anti: np.ndarray
    dev: np.ndarray
    trace: float


def decompose(a) -> Decomposition:
    """Split a matrix into symmetric, antisymmetric and deviatoric parts."""
    a = _check_matrix(a)
    sym = 0.5 * (a + a.T)
    anti = a - sym
    trace = float(np.trace(a))
    dev = sym - (trace / a.shape[0]) * np.eye(a.shape[0])
    return Decomposition(sym=sym, anti=anti, dev=dev, trace=trace)


def frobenius(a) -> float:
    """Frobenius norm, the metric used throughout the package."""
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    The argument is halved until its Frobenius norm is at most 0.5, the Taylor
    series is summed until the next term falls below 1e-16 of the running sum,
    and the result is squared back up.
    """
    a = _check_matrix(a)
    norm = frobenius(a)
    squarings = 0
    if norm > _EXP_SCALE_LIMIT:
        squarings = int(np.ceil(np.log2(norm / _EXP_SCALE_LIMIT)))
    s = a / (2.0**squarings)
    d = a.shape[0]
    total = np.eye(d)
    term = np.eye(d)
    for k in range(1, _SERIES_MAX_TERMS):
        term = term @ s / k
        total = total + term
        if frobenius(term) < 1e-16 * frobenius(total):
            break
    for _ in range(squarings):
        total = total @ total
    return total


def _sqrt_db(p: np.ndarray) -> np.ndarray:
    # Denman-Beavers iteration for the principal square root; quadratically
    # convergent for matrices with no nonpositive real eigenvalue.
    y = p.copy()
    z = np.eye(p.shape[0])
    for _ in range(60):
        y_next = 0.5 * (y + np.linalg.inv(z))
        z_next = 0.5 * (z + np.linalg.inv(y))
        delta = frobenius(y_next - y)
        y, z = y_next, z_next
        if delta <= 1e-15 * max(frobenius(y), 1e-300):
            break
    return y


def mat_log(p) -> np.ndarray:
    """Principal matrix logarithm near the identity.

    Only defined for ||P - I||_F < 1 (enforced conservatively); raises
    DomainError outside that ball or when P has a nonpositive real eigenvalue.
    Inverse scaling: principal square roots until ||P - I|| < 0.25, then the
    Mercator series, then multiply back by the number of roots taken.
    """
    p = _check_matrix(p)
    d = p.shape[0]
    eye = np.eye(d)
    if frobenius(p - eye) >= 1.0:
        raise DomainError(
            f"mat_log requires ||P - I||_F < 1, got {frobenius(p - eye):.6g}"
        )
    eigs = np.linalg.eigvals(p)
    for lam in eigs:
        if abs(lam.imag) <= 1e-12 * max(1.0, abs(lam.real)) and lam.real <= 0.0:
            raise DomainError(f"mat_log undefined: nonpositive real eigenvalue {lam}")
    roots = 0
    while frobenius(p - eye) >= _LOG_SERIES_LIMIT:
        p = _sqrt_db(p)
        roots += 1
        if roots > 48:  # unreachable for inputs inside the unit ball
            raise DomainError("mat_log square-root reduction failed to contract")
    x = p - eye
    total = x.copy()
    power = x.copy()
    for k in range(2, _SERIES_MAX_TERMS):
        power = power @ x
        term = ((-1.0) ** (k + 1) / k) * power
        total = total + term
        if frobenius(term) < 1e-16 * max(frobenius(total), 1e-300):
            break
    return (2.0**roots) * total


def rotation_distance(f) -> float:
    """Frobenius distance from F to the rotation group of its dimension.

    Via singular values: for det F > 0 the distance is sqrt(sum (s_i - 1)^2);
    for det F <= 0 the smallest singular value enters with a flipped sign.
    """
    f = _check_matrix(f)
    s = np.linalg.svd(f, compute_uv=False)  # descending order
    if np.linalg.det(f) < 0.0:
        s = s.copy()
        s[-1] = -s[-1]
    return float(np.sqrt(np.sum((s - 1.0) ** 2)))
