"""Discrete error functionals, consistency errors and observed orders."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .stepper import bdf2_coefficients, bdf2_divided_difference
from .time_mesh import TimeMesh

ERROR_FIELDS = ("E_linf_V", "E_l2_HH", "E_linf_H", "E_l2_V")


@dataclass(frozen=True)
class ErrorReport:
    """The four time-discrete error functionals of one run.

    ``h_errors[n]`` and ``v_errors[n]`` hold ``|e^n|`` and the V-seminorm of
    ``e^n`` for ``n = 0..N``; ``diff_terms[n]`` holds
    ``k_n s_n |(e^n - e^{n-1})/k_n|^2`` for ``n >= 2`` (zero otherwise).
    """

    E_linf_V: float
    E_l2_HH: float
    E_linf_H: float
    E_l2_V: float
    h_errors: np.ndarray
    v_errors: np.ndarray
    diff_terms: np.ndarray
    N: int
    scheme: str = ""

    def values(self):
        return tuple(getattr(self, f) for f in ERROR_FIELDS)

    def csv_row(self):
        return [self.scheme, self.N] + [f"{v:.10e}" for v in self.values()]


def error_report(trajectory, exact: Optional[Callable] = None, problem=None, scheme: str = "") -> ErrorReport:
    """Compare a trajectory with grid samples of the exact solution.

    With ``e^n = U^n - u(t^n)``::

        E_linf_V = max_{1<=n<=N} ||e^n||_{H^1}
        E_l2_HH  = (sum_{n=2}^N k_n s_n |(e^n - e^{n-1})/k_n|^2)^{1/2}
        E_linf_H = max_{1<=n<=N} |e^n|
        E_l2_V   = (sum_{n=2}^N k_n ||e^n||_{H^1}^2)^{1/2}

    ``exact`` defaults to ``problem.exact_state``.
    """
    if problem is None:
        raise ValueError("a problem is needed for its norms")
    if exact is None:
        if not problem.has_exact:
            raise ValueError("no exact solution available for the error report")
        exact = problem.exact_state
    mesh = trajectory.mesh
    N = mesh.N
    errs = [trajectory.states[n] - exact(mesh.t(n)) for n in range(N + 1)]
    h = np.array([problem.h_norm(e) for e in errs])
    v = np.array([problem.v_seminorm(e) for e in errs])
    diff = np.zeros(N + 1)
    for n in range(2, N + 1):
        k = mesh.k(n)
        diff[n] = k * mesh.s(n) * problem.h_norm((errs[n] - errs[n - 1]) / k) ** 2
    k = np.concatenate([[0.0], mesh.steps])
    return ErrorReport(
        E_linf_V=float(v[1:].max()),
        E_l2_HH=float(np.sqrt(diff[2:].sum())),
        E_linf_H=float(h[1:].max()),
        E_l2_V=float(np.sqrt(np.sum(k[2:] * v[2:] ** 2))),
        h_errors=h,
        v_errors=v,
        diff_terms=diff,
        N=N,
        scheme=scheme,
    )


def l2_hh_norm(states, mesh: TimeMesh, h_norm: Callable, n1: int, n2: int) -> float:
    """``(sum_{j=n1}^{n2-1} k_j s_j |D U^j|^2)^{1/2}`` with ``D U^j = (U^j - U^{j-1})/k_j``.

    This is the abstract weighted norm used by the stability estimates; it
    needs ``n1 >= 2`` because ``s_j`` is only defined from ``j = 2`` on.
    """
    if n1 < 2:
        raise ValueError("s_j is only defined for j >= 2")
    total = 0.0
    for j in range(n1, n2):
        k = mesh.k(j)
        total += k * mesh.s(j) * h_norm((states[j] - states[j - 1]) / k) ** 2
    return math.sqrt(total)


def consistency_error_d2(u: Callable, du: Callable, mesh: TimeMesh, n: int):
    """``d_2^n``: BDF2 difference of exact samples minus ``u'(t^n)``, ``n >= 2``."""
    if n < 2:
        raise ValueError("d_2^n is defined for n >= 2")
    c = bdf2_coefficients(mesh.k(n), mesh.r(n))
    return bdf2_divided_difference(
        c, np.asarray(u(mesh.t(n))), np.asarray(u(mesh.t(n - 1))), np.asarray(u(mesh.t(n - 2)))
    ) - du(mesh.t(n))


def consistency_error_d1(u: Callable, du: Callable, mesh: TimeMesh, n: int):
    """``d_1^n``: first divided difference of exact samples minus ``u'(t^n)``, ``n >= 1``."""
    if n < 1:
        raise ValueError("d_1^n is defined for n >= 1")
    return (np.asarray(u(mesh.t(n))) - u(mesh.t(n - 1))) / mesh.k(n) - du(mesh.t(n))


def observed_order(error_coarse: float, error_fine: float) -> float:
    """``log2(error_coarse / error_fine)`` for a halved step size."""
    if not (error_coarse > 0 and error_fine > 0):
        raise ValueError("observed order needs two positive errors")
    return math.log2(error_coarse / error_fine)
