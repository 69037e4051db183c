"""Step-ratio bounds, step-size conditions and energy-stability certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .norms import l2_hh_norm
from .time_mesh import TimeMesh, mesh_stats

R0 = math.sqrt(2) + 1
R1 = (3 + math.sqrt(17)) / 2
THM31_FACTOR = 4 + 2 * math.sqrt(2)

REGIMES = {"R0": R0, "R1": R1}


class CertificateNotApplicable(ValueError):
    """The hypotheses of the stability estimate do not hold for this run."""


@dataclass(frozen=True)
class StabilityLimits:
    R: float
    c1: float = 0.5
    c2: float = 0.5
    gamma_max: float = 0.0
    R0: float = R0
    R1: float = R1


@dataclass(frozen=True)
class RatioCheck:
    passed: bool
    bound: float
    r_max: float
    offending: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Certificate:
    holds: bool
    lhs: float
    rhs: float
    n: int
    C1: float


def check_ratio_bound(mesh: TimeMesh, regime: str = "R0") -> RatioCheck:
    """Pass iff every step ratio is strictly below the regime constant."""
    try:
        bound = REGIMES[regime]
    except KeyError:
        raise ValueError(f"regime must be one of {sorted(REGIMES)}") from None
    bad = tuple(int(i) + 2 for i in np.flatnonzero(mesh.ratios >= bound))
    return RatioCheck(not bad, bound, float(mesh.ratios.max()), bad)


def _check_fraction(name, c):
    if not 0 < c < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {c!r}")


def kmax_bound_R0(gamma_max: float, c1: float) -> float:
    """Largest ``k_max`` with ``(4 + 2 sqrt 2) gamma^2 k_max <= c1``; ``inf`` for ``gamma = 0``."""
    _check_fraction("c1", c1)
    if gamma_max < 0:
        raise ValueError("gamma_max must be nonnegative")
    if gamma_max == 0:
        return math.inf
    return c1 / (THM31_FACTOR * gamma_max**2)


def cR_constant(R: float) -> float:
    """Infimum of the admissible ``c_R`` for ratio bound ``R`` in (1, R1)."""
    if not 1 < R < R1:
        raise ValueError(f"R must lie in (1, R1), got {R!r}")
    return max((2 + 2 * R) / (2 + R), (2 + 2 * R) / (2 + 3 * R - R**2))


def kmax_bound_R1(gamma_max: float, c_R: float, c1: float) -> float:
    """Largest ``k_max`` with ``c_R gamma^2 k_max <= c1``."""
    _check_fraction("c1", c1)
    if gamma_max == 0:
        return math.inf
    return c1 / (c_R * gamma_max**2)


def c3_constant(R: float) -> float:
    """``(1 + R)^2 / (1 + 2R - R^2)``; requires ``1 <= R < R0``."""
    if not 1 <= R < R0:
        raise ValueError(f"R must lie in [1, R0), got {R!r}")
    return (1 + R) ** 2 / (1 + 2 * R - R**2)


def kmax_bound_c3(gamma_max: float, R: float, c2: float) -> float:
    """Largest ``k_max`` with ``2 c3 gamma^2 k_max <= c2``."""
    _check_fraction("c2", c2)
    if gamma_max == 0:
        return math.inf
    return c2 / (2 * c3_constant(R) * gamma_max**2)


def thm31_constant(gamma_max: float, c1: float, t: float) -> float:
    q = THM31_FACTOR / (1 - c1)
    return q * math.exp(q * gamma_max**2 * t)


def gamma_max_on(problem, mesh: TimeMesh) -> float:
    return max(float(problem.gamma_bound(t)) for t in mesh.node_times)


def stability_certificate_thm31(trajectory, problem, c1: float = 0.5, check_preconditions: bool = True) -> Certificate:
    """Check the ``l^inf(V)`` / ``l^2(H,H)`` energy estimate at ``n = N``.

    Left side::

        k_N |D U^N|^2 + sum_{j=2}^{N-1} k_j s_j |D U^j|^2 + max_{2<=j<=N} ||U^j||^2

    right side::

        C1 (sum_{j=2}^N k_j |f^j|^2 + k_2 s_2 |D U^1|^2 + ||U^1||^2)

    with ``C1 = q exp(q gamma^2 t^N)``, ``q = (4 + 2 sqrt 2)/(1 - c1)``.

    Raises
    ------
    CertificateNotApplicable
        If the run is semilinear, a step ratio reaches ``R0`` or ``k_max``
        violates the step-size condition (unless ``check_preconditions`` is
        false, in which case the comparison is reported regardless).
    """
    _check_fraction("c1", c1)
    mesh = trajectory.mesh
    if trajectory.mode != "linear" or problem.semilinear:
        raise CertificateNotApplicable("the certificate covers linear runs only")
    gamma = gamma_max_on(problem, mesh)
    if check_preconditions:
        rc = check_ratio_bound(mesh, "R0")
        if not rc.passed:
            raise CertificateNotApplicable(f"step ratio {rc.r_max:.4g} not below R0 at n={rc.offending[0]}")
        k_max = mesh_stats(mesh).k_max
        bound = kmax_bound_R0(gamma, c1)
        if k_max > bound:
            raise CertificateNotApplicable(f"k_max = {k_max:.4g} exceeds {bound:.4g}")

    U = trajectory.states
    N = mesh.N
    hn, vn = problem.h_norm, problem.energy_norm
    lhs = (
        mesh.k(N) * hn((U[N] - U[N - 1]) / mesh.k(N)) ** 2
        + l2_hh_norm(U, mesh, hn, 2, N) ** 2
        + max(vn(U[j]) ** 2 for j in range(2, N + 1))
    )
    data = sum(mesh.k(j) * hn(problem.forcing(mesh.t(j))) ** 2 for j in range(2, N + 1))
    data += mesh.k(2) * mesh.s(2) * hn((U[1] - U[0]) / mesh.k(1)) ** 2 + vn(U[1]) ** 2
    C1 = thm31_constant(gamma, c1, mesh.T)
    rhs = C1 * data
    return Certificate(bool(lhs <= rhs), float(lhs), float(rhs), N, C1)
