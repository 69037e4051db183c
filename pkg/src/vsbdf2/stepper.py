"""Variable step-size BDF2 time stepping.

For ``n >= 2`` the scheme reads

    (1/k_n) ((1 + s_n) U^n - (1 + r_n) U^{n-1} + r_n s_n U^{n-2}) + (A + B) U^n = f^n

with ``U^1`` supplied by a trapezoidal or backward Euler step.  In
semilinear mode the right-hand side is ``f(t^n, U^n)`` and the implicit
equation is solved by fixed-point iteration against ``a_n I + A``.
"""
from __future__ import annotations

import csv
import io
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .problems import ProblemDefinition
from .time_mesh import TimeMesh

log = logging.getLogger(__name__)

START_SCHEMES = {
    "trapezoidal": "trapezoidal",
    "tf": "trapezoidal",
    "backward_euler": "backward_euler",
    "be": "backward_euler",
}

DUMP_VERSION = 1


class StepError(RuntimeError):
    """A time step could not be completed."""

    def __init__(self, message, step=None, residual=None):
        super().__init__(message)
        self.step = step
        self.residual = residual


class ConvergenceError(StepError):
    """The fixed-point iteration of a semilinear step did not converge."""


@dataclass(frozen=True)
class SolverConfig:
    """Nonlinear solver settings.

    ``trapezoidal_forcing`` selects how the forcing enters the trapezoidal
    start: ``"average"`` uses ``(f^0 + f^1)/2``, ``"midpoint"`` evaluates
    ``f`` at ``t^1/2`` (and at the averaged state in semilinear mode).
    """

    tol: float = 1e-12
    maxit: int = 100
    linear_residual_tol: float = 1e-10
    trapezoidal_forcing: str = "average"

    def __post_init__(self):
        if not self.tol > 0 or self.maxit < 1:
            raise ValueError("tol must be positive and maxit at least 1")
        if self.trapezoidal_forcing not in ("average", "midpoint"):
            raise ValueError(f"unknown trapezoidal_forcing {self.trapezoidal_forcing!r}")


@dataclass(frozen=True)
class Bdf2Coefficients:
    """Weights of ``a U^n - b U^{n-1} + c U^{n-2}`` (units 1/time)."""

    lead: float
    mid: float
    tail: float


@dataclass(frozen=True)
class SolverDiagnostics:
    step: int
    iterations: int
    residual: float
    linear_solves: int


@dataclass
class Trajectory:
    """Computed states ``U^0 .. U^N`` on ``mesh``.

    ``states`` is an array of shape ``(N+1, *grid_shape)``.
    """

    mesh: TimeMesh
    states: np.ndarray
    diagnostics: List[SolverDiagnostics] = field(default_factory=list)
    start: str = "backward_euler"
    mode: str = "linear"

    def __post_init__(self):
        if self.states.shape[0] != self.mesh.N + 1:
            raise ValueError("need exactly N+1 states")

    def __len__(self):
        return self.states.shape[0]

    def __getitem__(self, n):
        return self.states[n]

    def to_csv(self, path=None) -> str:
        """Per-step diagnostics as CSV ``n, t, diag_iters, diag_residual``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "t", "diag_iters", "diag_residual"])
        for d in self.diagnostics:
            w.writerow([d.step, repr(self.mesh.t(d.step)), d.iterations, f"{d.residual:.6e}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def dump_states(self, path) -> None:
        """Binary dump: three little-endian int64 (N+1, state length, version),
        then the states as row-major little-endian float64."""
        flat = np.ascontiguousarray(self.states.reshape(self.states.shape[0], -1), dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<3q", flat.shape[0], flat.shape[1], DUMP_VERSION))
            fh.write(flat.tobytes(order="C"))


def load_states(path) -> np.ndarray:
    """Read a dump written by :meth:`Trajectory.dump_states`, shape (N+1, length)."""
    raw = Path(path).read_bytes()
    count, length, version = struct.unpack_from("<3q", raw)
    if version != DUMP_VERSION:
        raise ValueError(f"unsupported dump version {version}")
    data = np.frombuffer(raw, dtype="<f8", offset=struct.calcsize("<3q"))
    if data.size != count * length:
        raise ValueError("truncated state dump")
    return data.reshape(count, length).astype(float)


def bdf2_coefficients(k_n: float, r_n: float) -> Bdf2Coefficients:
    """BDF2 weights for step ``k_n`` and ratio ``r_n = k_n / k_{n-1}``.

    ``r_n = 0`` gives ``(1/k, 1/k, 0)``, the backward Euler difference.
    """
    if not k_n > 0:
        raise ValueError(f"step size must be positive, got {k_n!r}")
    if not r_n >= 0:
        raise ValueError(f"step ratio must be nonnegative, got {r_n!r}")
    s_n = r_n / (1 + r_n)
    return Bdf2Coefficients((1 + s_n) / k_n, (1 + r_n) / k_n, r_n * s_n / k_n)


def bdf2_divided_difference(coeffs: Bdf2Coefficients, u_n, u_nm1, u_nm2):
    u_n, u_nm1, u_nm2 = map(np.asarray, (u_n, u_nm1, u_nm2))
    if not u_n.shape == u_nm1.shape == u_nm2.shape:
        raise ValueError(f"state shapes differ: {u_n.shape}, {u_nm1.shape}, {u_nm2.shape}")
    return coeffs.lead * u_n - coeffs.mid * u_nm1 + coeffs.tail * u_nm2


def decomposition_check(k_n, k_prev, u_n, u_nm1, u_nm2, norm=None) -> float:
    """Residual of the splitting of the BDF2 difference into first and second
    divided differences, ``D_B U^n = k_n s_n D^2 U^n + D U^n``.

    Both sides are evaluated independently; the result is the norm
    (Euclidean unless ``norm`` is given) of their difference.
    """
    coeffs = bdf2_coefficients(k_n, k_n / k_prev)
    lhs = bdf2_divided_difference(coeffs, u_n, u_nm1, u_nm2)
    s_n = k_n / (k_n + k_prev)
    d_n = (np.asarray(u_n) - u_nm1) / k_n
    d_nm1 = (np.asarray(u_nm1) - u_nm2) / k_prev
    rhs = k_n * s_n * (d_n - d_nm1) / k_n + d_n
    diff = lhs - rhs
    return float(norm(diff)) if norm is not None else float(np.linalg.norm(diff))


def _check_finite(u, step):
    if not np.all(np.isfinite(u)):
        raise StepError(f"non-finite state at step {step}", step=step)


def _linear_implicit(problem: ProblemDefinition, t, coeffs, u_nm1, u_nm2, step, config):
    """Solve ``(a I + A + B) U = f(t) + b U^{n-1} - c U^{n-2}``."""
    rhs = problem.forcing(t) + (coeffs.mid * u_nm1 - coeffs.tail * u_nm2)
    try:
        u = problem.solve_shifted(coeffs.lead, 1.0, rhs)
    except (np.linalg.LinAlgError, ZeroDivisionError) as exc:
        raise StepError(f"linear solve failed at step {step}: {exc}", step=step) from exc
    _check_finite(u, step)
    res = coeffs.lead * u + problem.apply_operator(u) - rhs
    scale = problem.h_norm(rhs) or 1.0
    rel = problem.h_norm(res) / scale
    if rel > config.linear_residual_tol:
        raise StepError(f"linear residual {rel:.3e} too large at step {step}", step=step, residual=rel)
    return u, SolverDiagnostics(step, 0, rel, 1)


def _fixed_point(problem, update, guess, step, config):
    """Iterate ``U <- update(U)`` until successive iterates agree to ``tol``."""
    u = guess
    diff = np.inf
    for it in range(1, config.maxit + 1):
        try:
            u_new = update(u)
        except (np.linalg.LinAlgError, ZeroDivisionError) as exc:
            raise StepError(f"linear solve failed at step {step}: {exc}", step=step) from exc
        diff = problem.h_norm(u_new - u)
        u = u_new
        if not np.isfinite(diff):
            break
        if diff <= config.tol:
            return u, SolverDiagnostics(step, it, diff, it)
    raise ConvergenceError(
        f"fixed-point iteration did not converge at step {step} "
        f"(last update {diff:.3e}); the step is likely too large",
        step=step,
        residual=diff,
    )


def _semilinear_implicit(problem, t, coeffs, u_nm1, u_nm2, guess, step, config):
    hist = coeffs.mid * u_nm1 - coeffs.tail * u_nm2
    return _fixed_point(
        problem,
        lambda u: problem.solve_shifted(coeffs.lead, 1.0, problem.forcing(t, u) + hist),
        guess,
        step,
        config,
    )


def _start(problem, k1, u0, scheme, config):
    scheme = START_SCHEMES.get(scheme)
    if scheme is None:
        raise ValueError(f"unknown start scheme; choose from {sorted(START_SCHEMES)}")
    if not k1 > 0:
        raise ValueError(f"k1 must be positive, got {k1!r}")
    u0 = np.asarray(u0, dtype=float)
    if scheme == "backward_euler":
        coeffs = bdf2_coefficients(k1, 0.0)
        if problem.semilinear:
            return _semilinear_implicit(problem, k1, coeffs, u0, u0, u0, 1, config)
        return _linear_implicit(problem, k1, coeffs, u0, u0, 1, config)

    # trapezoidal: (U1 - U0)/k1 + (A + B)(U1 + U0)/2 = f^{1/2}
    base = u0 / k1 - 0.5 * problem.apply_operator(u0)
    average = config.trapezoidal_forcing == "average"
    if problem.semilinear:
        if average:
            f0 = problem.forcing(0.0, u0)
            update = lambda u: problem.solve_shifted(1 / k1, 0.5, base + 0.5 * (f0 + problem.forcing(k1, u)))
        else:
            update = lambda u: problem.solve_shifted(1 / k1, 0.5, base + problem.forcing(k1 / 2, 0.5 * (u0 + u)))
        return _fixed_point(problem, update, u0, 1, config)

    f_half = 0.5 * (problem.forcing(0.0) + problem.forcing(k1)) if average else problem.forcing(k1 / 2)
    rhs = base + f_half
    try:
        u1 = problem.solve_shifted(1 / k1, 0.5, rhs)
    except (np.linalg.LinAlgError, ZeroDivisionError) as exc:
        raise StepError(f"linear solve failed in the trapezoidal start: {exc}", step=1) from exc
    _check_finite(u1, 1)
    res = u1 / k1 + 0.5 * problem.apply_operator(u1) - rhs
    rel = problem.h_norm(res) / (problem.h_norm(rhs) or 1.0)
    return u1, SolverDiagnostics(1, 0, rel, 1)


def start_trapezoidal(problem, k1, u0, config: Optional[SolverConfig] = None):
    """``U^1`` from one trapezoidal step of size ``k1`` starting at ``t = 0``."""
    return _start(problem, k1, u0, "trapezoidal", config or SolverConfig())[0]


def start_backward_euler(problem, k1, u0, config: Optional[SolverConfig] = None):
    """``U^1`` from one backward Euler step of size ``k1``."""
    return _start(problem, k1, u0, "backward_euler", config or SolverConfig())[0]


def step_linear(problem, mesh: TimeMesh, n: int, u_nm1, u_nm2,
                config: Optional[SolverConfig] = None) -> Tuple[np.ndarray, SolverDiagnostics]:
    """Advance to ``t^n`` (``n >= 2``) in linear mode."""
    if n < 2:
        raise ValueError("BDF2 steps start at n = 2")
    coeffs = bdf2_coefficients(mesh.k(n), mesh.r(n))
    return _linear_implicit(problem, mesh.t(n), coeffs, u_nm1, u_nm2, n, config or SolverConfig())


def step_semilinear(problem, mesh: TimeMesh, n: int, u_nm1, u_nm2,
                    config: Optional[SolverConfig] = None) -> Tuple[np.ndarray, SolverDiagnostics]:
    """Advance to ``t^n`` (``n >= 2``) in semilinear mode.

    Fixed-point iteration ``U <- (a_n I + A)^{-1} (f(t^n, U) + b_n U^{n-1} -
    c_n U^{n-2})`` started from the linear extrapolation
    ``(1 + r_n) U^{n-1} - r_n U^{n-2}``.
    """
    if n < 2:
        raise ValueError("BDF2 steps start at n = 2")
    r = mesh.r(n)
    coeffs = bdf2_coefficients(mesh.k(n), r)
    guess = (1 + r) * u_nm1 - r * u_nm2
    return _semilinear_implicit(problem, mesh.t(n), coeffs, u_nm1, u_nm2, guess, n, config or SolverConfig())


def integrate(problem: ProblemDefinition, mesh: TimeMesh, start: str = "trapezoidal",
              mode: Optional[str] = None, config: Optional[SolverConfig] = None) -> Trajectory:
    """Run the variable step-size BDF2 scheme over ``mesh``.

    Parameters
    ----------
    problem : ProblemDefinition
    mesh : TimeMesh
    start : {"trapezoidal", "backward_euler"} or the aliases "tf", "be"
    mode : {"linear", "semilinear"}, optional
        Defaults to the problem's own mode; a mismatch is an error.
    config : SolverConfig, optional

    Returns
    -------
    Trajectory
    """
    config = config or SolverConfig()
    native = "semilinear" if problem.semilinear else "linear"
    mode = mode or native
    if mode != native:
        raise ValueError(f"{type(problem).__name__} runs in {native} mode, not {mode}")
    start_name = START_SCHEMES.get(start)
    if start_name is None:
        raise ValueError(f"unknown start scheme {start!r}")
    step = step_semilinear if problem.semilinear else step_linear

    states = np.empty((mesh.N + 1,) + tuple(problem.shape))
    states[0] = problem.initial_state()
    diags = []
    n = 1
    try:
        states[1], d = _start(problem, mesh.k1, states[0], start_name, config)
        diags.append(d)
        for n in range(2, mesh.N + 1):
            states[n], d = step(problem, mesh, n, states[n - 1], states[n - 2], config)
            diags.append(d)
    except StepError as exc:
        exc.partial = states[:n].copy()
        raise
    log.debug("integrated %d steps (%s start, %s mode)", mesh.N, start_name, mode)
    return Trajectory(mesh, states, diags, start_name, mode)
