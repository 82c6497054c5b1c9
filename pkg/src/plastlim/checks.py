"""Sampling-based verification of the structural hypotheses behind the
material model.

Each check draws deterministic samples, verifies an inequality over them,
and reports the empirical constants it saw. Sampling falsifies but never
certifies: every report states the sampled region explicitly. Negative
controls are supported by passing a deliberately broken density or
distance in place of the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ViolationError
from .material import (
    MaterialParams,
    dissipation_distance,
    dissipation_potential,
    elastic_density,
    elastic_density_grad,
    expansion_radius,
)
from .sweep import fit_order
from .tensors import frobenius, mat_exp, rotation_distance

_SQRT2 = np.sqrt(2.0)


def _rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _sample_gl_plus(rng, sv_range=(0.2, 5.0)) -> np.ndarray:
    """One F with log-uniform singular values and random rotations."""
    log_lo, log_hi = np.log(sv_range[0]), np.log(sv_range[1])
    sv = np.exp(rng.uniform(log_lo, log_hi, size=2))
    return _rotation(rng.uniform(0.0, 2.0 * np.pi)) @ np.diag(sv) @ _rotation(
        rng.uniform(0.0, 2.0 * np.pi)
    )


def _sample_devsym(rng, radius: float) -> np.ndarray:
    e1 = np.array([[1.0, 0.0], [0.0, -1.0]]) / _SQRT2
    e2 = np.array([[0.0, 1.0], [1.0, 0.0]]) / _SQRT2
    angle = rng.uniform(0.0, 2.0 * np.pi)
    r = radius * rng.uniform(0.0, 1.0)
    return r * (np.cos(angle) * e1 + np.sin(angle) * e2)


def _sample_ball(rng, radius: float) -> np.ndarray:
    """Random matrix of Frobenius norm uniform in [0, radius]."""
    b = rng.standard_normal((2, 2))
    return (radius * rng.uniform(0.0, 1.0) / frobenius(b)) * b


def _numeric_grad(density, f: np.ndarray, p: MaterialParams, step=1e-6):
    grad = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            bump = np.zeros((2, 2))
            bump[i, j] = step
            grad[i, j] = (density(f + bump, p) - density(f - bump, p)) / (2.0 * step)
    return grad


@dataclass(frozen=True)
class AssumptionReport:
    """Empirical constants from the elastic-density assumption checks."""

    region: str
    samples: int
    seed: int
    frame_max: float
    stress_free_value: float
    stress_free_grad: float
    c1_est: float
    c2_est: float
    c3: float
    radius_map: tuple[tuple[float, float], ...]

    def text(self) -> str:
        lines = [
            "assumption report",
            f"region: {self.region}",
            f"samples: {self.samples}",
            f"seed: {self.seed}",
            f"frame_indifference_max_defect: {repr(self.frame_max)}",
            f"stress_free_value: {repr(self.stress_free_value)}",
            f"stress_free_grad_norm: {repr(self.stress_free_grad)}",
            f"c1_est (coercivity over rotations): {repr(self.c1_est)}",
            f"c2_est (stress growth, c3 = {repr(self.c3)}): {repr(self.c2_est)}",
        ]
        for delta, radius in self.radius_map:
            lines.append(f"expansion_radius(delta={repr(delta)}): {repr(radius)}")
        return "\n".join(lines)


def check_energy_assumptions(
    p: MaterialParams,
    samples: int = 2000,
    seed: int = 0,
    density=None,
    density_grad=None,
) -> AssumptionReport:
    """Verify the elastic density's structural hypotheses by sampling.

    Over F with log-uniform singular values in [0.2, 5] and random
    rotations on both sides: frame indifference to 1e-10, nonnegativity
    with positive coercivity against the squared rotation distance,
    bounded stress-to-energy ratio, and a stress-free identity. Records
    the verified quadratic-expansion radius for delta in {0.5, 0.1, 0.01}.
    ViolationError (with the offending sample attached) on any failure.
    """
    if samples < 100:
        raise ArgumentError("need at least 100 samples")
    w = density if density is not None else elastic_density
    if density_grad is not None:
        dw = density_grad
    elif density is None:
        dw = elastic_density_grad
    else:
        def dw(f, params):
            return _numeric_grad(w, f, params)
    rng = np.random.default_rng(seed)
    value_i = w(np.eye(2), p)
    if abs(value_i) > 1e-12:
        raise ViolationError(
            f"density at the identity is {value_i!r}, not 0", sample=np.eye(2)
        )
    grad_i = float(frobenius(np.asarray(dw(np.eye(2), p))))
    if grad_i > 1e-5:
        raise ViolationError(
            f"stress at the identity has norm {grad_i!r}, not 0", sample=np.eye(2)
        )
    frame_max = 0.0
    c1_min = np.inf
    c2_max = 0.0
    c3 = 1.0
    for _ in range(samples):
        f = _sample_gl_plus(rng)
        value = w(f, p)
        rotated = w(_rotation(rng.uniform(0.0, 2.0 * np.pi)) @ f, p)
        defect = abs(rotated - value) / (1.0 + abs(value))
        frame_max = max(frame_max, defect)
        if defect > 1e-10:
            raise ViolationError(
                f"frame indifference defect {defect!r}", sample=f
            )
        dist = rotation_distance(f)
        if value < -1e-12:
            raise ViolationError(f"negative energy {value!r}", sample=f)
        if dist > 1e-6:
            c1_min = min(c1_min, value / (dist * dist))
        mandel = f.T @ np.asarray(dw(f, p))
        c2_max = max(c2_max, frobenius(mandel) / (value + c3))
    if not c1_min > 0.0:
        raise ViolationError(
            f"coercivity ratio dropped to {c1_min!r}; the density does not"
            " dominate the squared distance to rotations"
        )
    if not np.isfinite(c2_max):
        raise ViolationError("stress-to-energy ratio is unbounded over samples")
    radius_map = tuple(
        (delta, expansion_radius("el", delta, p, seed=seed))
        for delta in (0.5, 0.1, 0.01)
    )
    region = (
        "F = R1 diag(s) R2, s log-uniform in [0.2, 5], rotations uniform"
    )
    return AssumptionReport(
        region=region,
        samples=samples,
        seed=seed,
        frame_max=frame_max,
        stress_free_value=value_i,
        stress_free_grad=grad_i,
        c1_est=float(c1_min),
        c2_est=float(c2_max),
        c3=c3,
        radius_map=radius_map,
    )


def check_mult_estimate(
    p: MaterialParams,
    samples: int = 500,
    seed: int = 0,
    gamma: float = 0.1,
    c8: float = 1.0,
    density=None,
    cap: float = 1e4,
):
    """Two-sided multiplicative perturbations control the energy change.

    Samples F as in the energy checks and G1, G2 within gamma of the
    identity, and estimates the smallest c7 with
    |W(G1 F G2) - W(F)| <= c7 (W(F) + c8) (|G1 - I| + |G2 - I|).
    Returns (c7_est, c8, gamma). ViolationError if the ratio exceeds cap
    or is non-finite, which marks the density as ineligible.
    """
    if samples < 100:
        raise ArgumentError("need at least 100 samples")
    w = density if density is not None else elastic_density
    rng = np.random.default_rng(seed)
    c7 = 0.0
    for _ in range(samples):
        f = _sample_gl_plus(rng)
        g1 = np.eye(2) + _sample_ball(rng, gamma)
        g2 = np.eye(2) + _sample_ball(rng, gamma)
        n1 = frobenius(g1 - np.eye(2))
        n2 = frobenius(g2 - np.eye(2))
        if n1 + n2 == 0.0:
            continue
        lhs = abs(w(g1 @ f @ g2, p) - w(f, p))
        ratio = lhs / ((w(f, p) + c8) * (n1 + n2))
        if not np.isfinite(ratio) or ratio > cap:
            raise ViolationError(
                f"multiplicative energy control failed with ratio {ratio!r}",
                sample=(f, g1, g2),
            )
        c7 = max(c7, ratio)
    return float(c7), float(c8), float(gamma)


@dataclass(frozen=True)
class DissipationLimitTable:
    """Recovery-sequence errors of the rescaled dissipation, per eps."""

    eps_ladder: tuple[float, ...]
    value_err: tuple[float, ...]
    state_err: tuple[float, ...]
    order: float
    c_est: float
    c6_est: float
    samples: int
    seed: int

    def text(self) -> str:
        lines = [
            "dissipation limit table",
            f"samples: {self.samples}",
            f"seed: {self.seed}",
            "eps value_err state_err",
        ]
        for eps, v, s in zip(self.eps_ladder, self.value_err, self.state_err):
            lines.append(f"{repr(eps)} {repr(v)} {repr(s)}")
        lines.append(f"state_err_order: {repr(self.order)}")
        lines.append(f"recovery constant C (state_err <= C eps): {repr(self.c_est)}")
        lines.append(f"c6_est (distance vs |P - I| near I): {repr(self.c6_est)}")
        return "\n".join(lines)


def check_dissipation_limit(
    p: MaterialParams,
    eps_ladder=(1e-1, 1e-2, 1e-3, 1e-4),
    samples: int = 120,
    seed: int = 0,
    distance=None,
    value_tol: float = 1e-7,
) -> DissipationLimitTable:
    """Small-strain limit of the rescaled dissipation along recovery pairs.

    For sampled symmetric trace-free pairs (z, zhat) and each eps, the
    recovery state zhat_eps = (exp(eps (zhat - z)) (I + eps z) - I) / eps
    is compared to zhat (state error, first order in eps) and the rescaled
    distance (1/eps) D(I + eps z, I + eps zhat_eps) is compared to the
    flow cost sigma_y |zhat - z| (value error, zero along the exponential
    path up to logarithm roundoff). ViolationError on any value error
    above value_tol; the fitted order of the state error is reported.
    """
    ladder = tuple(float(e) for e in eps_ladder)
    if any(b >= a for a, b in zip(ladder, ladder[1:])) or any(
        e <= 0.0 for e in ladder
    ):
        raise ArgumentError("eps ladder must be positive and strictly decreasing")
    if samples < 10:
        raise ArgumentError("need at least 10 sample pairs")
    dist = distance if distance is not None else dissipation_distance
    rng = np.random.default_rng(seed)
    pairs = [
        (_sample_devsym(rng, 1.0), _sample_devsym(rng, 1.0)) for _ in range(samples)
    ]
    eye = np.eye(2)
    value_err = []
    state_err = []
    for eps in ladder:
        worst_v = 0.0
        worst_s = 0.0
        for idx, (z, zhat) in enumerate(pairs):
            target = dissipation_potential(zhat - z, p)
            p_prev = eye + eps * z
            p_new = mat_exp(eps * (zhat - z)) @ p_prev
            zhat_eps = (p_new - eye) / eps
            v_err = abs(dist(p_prev, p_new, p) / eps - target)
            if not v_err <= value_tol:
                raise ViolationError(
                    f"rescaled distance misses the flow cost by {v_err!r}"
                    f" at eps = {eps!r}",
                    sample=(idx, z, zhat),
                )
            worst_v = max(worst_v, v_err)
            worst_s = max(worst_s, float(frobenius(zhat_eps - zhat)))
        value_err.append(worst_v)
        state_err.append(worst_s)
    order = fit_order(np.array(ladder), np.array(state_err))
    c_est = max(s / e for s, e in zip(state_err, ladder))
    c6 = 0.0
    for _ in range(samples):
        zeta = _sample_devsym(rng, 0.3)
        if frobenius(zeta) == 0.0:
            continue
        p_mat = mat_exp(zeta)
        c6 = max(c6, dist(eye, p_mat, p) / frobenius(p_mat - eye))
    if not np.isfinite(c6):
        raise ViolationError("distance-to-identity ratio is unbounded near I")
    return DissipationLimitTable(
        eps_ladder=ladder,
        value_err=tuple(value_err),
        state_err=tuple(state_err),
        order=order,
        c_est=float(c_est),
        c6_est=float(c6),
        samples=samples,
        seed=seed,
    )
