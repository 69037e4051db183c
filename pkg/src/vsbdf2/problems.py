"""Parabolic model problems ``u' + A u + B u = f`` after spatial discretization.

Every problem exposes the same small set of capabilities the time stepper
needs: operator applications, a shifted solve ``(sigma I + theta (A + B)) x
= rhs``, the discrete ``H`` inner product and the ``V`` seminorm.  States are
plain numpy arrays shaped like the spatial grid.
"""
from __future__ import annotations

import abc
from typing import Callable, Optional

import numpy as np


def solve_tridiagonal(lower, diag, upper, rhs):
    """Solve a tridiagonal system with the Thomas algorithm.

    Parameters
    ----------
    lower : array_like, shape (n-1,)
        Subdiagonal, ``lower[i]`` multiplies ``x[i]`` in row ``i+1``.
    diag : array_like, shape (n,)
    upper : array_like, shape (n-1,)
        Superdiagonal, ``upper[i]`` multiplies ``x[i+1]`` in row ``i``.
    rhs : array_like, shape (n,)

    Returns
    -------
    ndarray, shape (n,)

    Notes
    -----
    No pivoting is done, so the matrix should be diagonally dominant or
    symmetric positive definite; a zero pivot raises ``ZeroDivisionError``.
    """
    a = np.asarray(lower, dtype=float)
    b = np.array(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.array(rhs, dtype=float)
    n = d.size
    if b.size != n or a.size != n - 1 or c.size != n - 1:
        raise ValueError("inconsistent tridiagonal band lengths")
    for i in range(1, n):
        if b[i - 1] == 0:
            raise ZeroDivisionError(f"zero pivot in row {i - 1}")
        m = a[i - 1] / b[i - 1]
        b[i] -= m * c[i - 1]
        d[i] -= m * d[i - 1]
    if b[-1] == 0:
        raise ZeroDivisionError(f"zero pivot in row {n - 1}")
    x = np.empty(n)
    x[-1] = d[-1] / b[-1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i]
    return x


class ProblemDefinition(abc.ABC):
    """Abstract parabolic problem on a fixed spatial grid.

    Subclasses set ``semilinear``.  In linear mode ``forcing(t)`` depends on
    time only; in semilinear mode ``forcing(t, u)`` is the nonlinearity
    ``f(t, u)`` and ``B`` is zero.
    """

    semilinear: bool = False

    @property
    @abc.abstractmethod
    def shape(self) -> tuple:
        ...

    @abc.abstractmethod
    def apply_elliptic(self, u: np.ndarray) -> np.ndarray:
        ...

    def apply_lower_order(self, u: np.ndarray) -> np.ndarray:
        return np.zeros_like(u)

    def apply_operator(self, u: np.ndarray) -> np.ndarray:
        """``(A + B) u``."""
        return self.apply_elliptic(u) + self.apply_lower_order(u)

    @abc.abstractmethod
    def forcing(self, t: float, u: Optional[np.ndarray] = None) -> np.ndarray:
        ...

    @abc.abstractmethod
    def solve_shifted(self, sigma: float, theta: float, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(sigma I + theta (A + B)) x = rhs``."""

    @abc.abstractmethod
    def h_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        ...

    def h_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.h_inner(u, u), 0.0)))

    @abc.abstractmethod
    def v_seminorm(self, u: np.ndarray) -> float:
        """Discrete H^1 seminorm used for error measurement."""

    def energy_norm(self, u: np.ndarray) -> float:
        """``(A u, u)^{1/2}``, the norm the stability estimates are stated in."""
        return float(np.sqrt(max(self.h_inner(self.apply_elliptic(u), u), 0.0)))

    @abc.abstractmethod
    def initial_state(self) -> np.ndarray:
        ...

    @property
    def has_exact(self) -> bool:
        return False

    def exact_state(self, t: float) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no exact solution")

    def gamma_bound(self, t: float) -> float:
        """Estimate of ``gamma(t)`` with ``|B u| <= gamma(t) ||u||``."""
        return 0.0


class Heat1D(ProblemDefinition):
    """``u_t = u_xx + b u + f`` on (0, 1) with homogeneous Dirichlet data.

    Central second differences on ``M`` cells; the state holds the ``M-1``
    interior values.  ``A`` is the negative discrete Laplacian and ``B = -b I``.
    The forcing is manufactured so that the grid samples of
    ``u(t, x) = x (1 - x) exp(-t)`` satisfy the semi-discrete system exactly,
    leaving the time discretization as the only error source.
    """

    semilinear = False

    def __init__(self, M: int = 100, b: float = 1.0):
        if int(M) != M or M < 2:
            raise ValueError(f"M must be an integer >= 2, got {M!r}")
        self.M = int(M)
        self.b = float(b)
        self.dx = 1.0 / self.M
        self.x = np.arange(1, self.M) * self.dx
        self._profile = self.x * (1 - self.x)
        self._diag = 2.0 / self.dx**2
        self._off = -1.0 / self.dx**2

    @property
    def shape(self):
        return (self.M - 1,)

    def apply_elliptic(self, u):
        p = np.pad(np.asarray(u, dtype=float), 1)
        return (2 * p[1:-1] - p[:-2] - p[2:]) / self.dx**2

    def apply_lower_order(self, u):
        return -self.b * np.asarray(u, dtype=float)

    def solve_shifted(self, sigma, theta, rhs):
        n = self.M - 1
        diag = np.full(n, sigma + theta * (self._diag - self.b))
        off = np.full(n - 1, theta * self._off)
        return solve_tridiagonal(off, diag, off, rhs)

    def dense_operator(self) -> np.ndarray:
        """``A + B`` as a dense matrix (small M only)."""
        n = self.M - 1
        return (
            np.diag(np.full(n, self._diag - self.b))
            + np.diag(np.full(n - 1, self._off), 1)
            + np.diag(np.full(n - 1, self._off), -1)
        )

    def h_inner(self, u, v):
        return float(self.dx * np.dot(u, v))

    def v_seminorm(self, u):
        d = np.diff(np.pad(np.asarray(u, dtype=float), 1)) / self.dx
        return float(np.sqrt(self.dx * np.dot(d, d)))

    energy_norm = v_seminorm

    def initial_state(self):
        return self.exact_state(0.0)

    @property
    def has_exact(self):
        return True

    def exact_state(self, t):
        return self._profile * np.exp(-t)

    def exact_derivative(self, t):
        return -self.exact_state(t)

    def forcing(self, t, u=None):
        ue = self.exact_state(t)
        return self.exact_derivative(t) + self.apply_operator(ue)

    def smallest_eigenvalue(self) -> float:
        return 4.0 / self.dx**2 * np.sin(np.pi * self.dx / 2) ** 2

    def gamma_bound(self, t):
        # |B u| = |b| |u| <= |b| lambda_min^{-1/2} ||u||
        return abs(self.b) / np.sqrt(self.smallest_eigenvalue())


class Semilinear2D(ProblemDefinition):
    """``u_t = eps (u_xx + u_yy) + u - u^3 + g`` on the periodic unit square.

    Fourier pseudo-spectral discretization on an ``M x M`` grid: ``A = -eps
    Laplacian`` is diagonal in the discrete Fourier basis with symbol
    ``eps 4 pi^2 (p^2 + q^2)``.  ``g`` is chosen so that
    ``u = sin(2 pi x) cos(2 pi y) exp(-pi^2 t)`` is the exact solution.

    Parameters
    ----------
    M : int
        Even grid size, at least 4.
    epsilon : float
        Diffusion coefficient.
    h1 : {"spectral", "difference"}
        How ``v_seminorm`` differentiates: spectral gradient (default) or
        periodic forward difference quotients.
    """

    semilinear = True

    def __init__(self, M: int = 32, epsilon: float = 0.01, h1: str = "spectral"):
        if int(M) != M or M < 4 or M % 2:
            raise ValueError(f"M must be an even integer >= 4, got {M!r}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon!r}")
        if h1 not in ("spectral", "difference"):
            raise ValueError(f"unknown h1 mode {h1!r}")
        self.M = int(M)
        self.epsilon = float(epsilon)
        self.h1 = h1
        self.dx = 1.0 / self.M
        x = np.arange(self.M) * self.dx
        self.X, self.Y = np.meshgrid(x, x, indexing="ij")
        self._mode = np.sin(2 * np.pi * self.X) * np.cos(2 * np.pi * self.Y)

        p = np.fft.fftfreq(self.M, 1.0 / self.M)
        q = np.fft.rfftfreq(self.M, 1.0 / self.M)
        P, Q = np.meshgrid(p, q, indexing="ij")
        self._symbol = self.epsilon * 4 * np.pi**2 * (P**2 + Q**2)
        # odd derivatives drop the Nyquist wavenumber to stay real
        nyq = self.M // 2
        self._ikx = 2j * np.pi * np.where(np.abs(P) == nyq, 0.0, P)
        self._iky = 2j * np.pi * np.where(np.abs(Q) == nyq, 0.0, Q)

    @property
    def shape(self):
        return (self.M, self.M)

    def _fft(self, u):
        return np.fft.rfft2(u)

    def _ifft(self, uh):
        return np.fft.irfft2(uh, s=self.shape)

    def apply_elliptic(self, u):
        return self._ifft(self._symbol * self._fft(u))

    def solve_shifted(self, sigma, theta, rhs):
        if not sigma > 0:
            raise ValueError("A has constants in its kernel; the shift must be positive")
        return self._ifft(self._fft(rhs) / (sigma + theta * self._symbol))

    def dense_elliptic(self) -> np.ndarray:
        """``A`` as a dense ``M^2 x M^2`` matrix (small M only)."""
        n = self.M * self.M
        eye = np.eye(n)
        return np.column_stack([self.apply_elliptic(eye[:, j].reshape(self.shape)).ravel() for j in range(n)])

    def h_inner(self, u, v):
        return float(self.dx**2 * np.sum(u * v))

    def gradient(self, u):
        if self.h1 == "difference":
            return (u - np.roll(u, 1, axis=0)) / self.dx, (u - np.roll(u, 1, axis=1)) / self.dx
        uh = self._fft(u)
        return self._ifft(self._ikx * uh), self._ifft(self._iky * uh)

    def v_seminorm(self, u):
        gx, gy = self.gradient(np.asarray(u, dtype=float))
        return float(np.sqrt(self.h_inner(gx, gx) + self.h_inner(gy, gy)))

    def initial_state(self):
        return self.exact_state(0.0)

    @property
    def has_exact(self):
        return True

    def exact_state(self, t):
        return self._mode * np.exp(-np.pi**2 * t)

    def exact_derivative(self, t):
        return -np.pi**2 * self.exact_state(t)

    def source(self, t):
        """``g = u_t - eps Lap u - u + u^3`` evaluated from the closed form."""
        u = self.exact_state(t)
        return (-np.pi**2 + 8 * np.pi**2 * self.epsilon - 1) * u + u**3

    def forcing(self, t, u=None):
        if u is None:
            raise TypeError("the semilinear forcing needs the state u")
        return u - u**3 + self.source(t)

    def forcing_jacobian_diag(self, t, u):
        return 1 - 3 * u**2

    def gamma_bound(self, t):
        # sup |1 - 3 v^2| over |v| <= 2: the exact solution is bounded by 1, the ball has radius 1
        return 11.0


class MatrixProblem(ProblemDefinition):
    """Small dense problem ``u' + A u + B u = f``; handy for ODE checks.

    Parameters
    ----------
    A : array_like, shape (d, d)
        Must be self-adjoint with respect to the weighted inner product.
    u0 : array_like, shape (d,)
    B : array_like, optional
    forcing : callable, optional
        ``f(t)`` in linear mode, ``f(t, u)`` when ``semilinear`` is true.
    exact : callable, optional
        ``t -> u(t)``.
    weights : array_like, optional
        Diagonal weights of the inner product; unit weights by default.
    gamma : float, optional
        Value returned by ``gamma_bound``.  Computed from ``A`` and ``B``
        when omitted.
    """

    def __init__(
        self,
        A,
        u0,
        B=None,
        forcing: Optional[Callable] = None,
        exact: Optional[Callable] = None,
        weights=None,
        semilinear: bool = False,
        gamma: Optional[float] = None,
    ):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        d = self.A.shape[0]
        self.B = np.zeros((d, d)) if B is None else np.atleast_2d(np.asarray(B, dtype=float))
        self.u0 = np.atleast_1d(np.asarray(u0, dtype=float))
        self.w = np.ones(d) if weights is None else np.asarray(weights, dtype=float)
        self._forcing = forcing
        self._exact = exact
        self.semilinear = semilinear
        self._gamma = gamma
        if self.u0.shape != (d,) or self.B.shape != (d, d) or self.w.shape != (d,):
            raise ValueError("inconsistent problem dimensions")

    @property
    def shape(self):
        return self.u0.shape

    def apply_elliptic(self, u):
        return self.A @ u

    def apply_lower_order(self, u):
        return self.B @ u

    def forcing(self, t, u=None):
        if self._forcing is None:
            return np.zeros(self.shape)
        if self.semilinear:
            return np.asarray(self._forcing(t, u), dtype=float).reshape(self.shape)
        return np.asarray(self._forcing(t), dtype=float).reshape(self.shape)

    def solve_shifted(self, sigma, theta, rhs):
        M = sigma * np.eye(self.A.shape[0]) + theta * (self.A + self.B)
        return np.linalg.solve(M, rhs)

    def h_inner(self, u, v):
        return float(np.sum(self.w * u * v))

    def v_seminorm(self, u):
        return self.energy_norm(u)

    def initial_state(self):
        return self.u0.copy()

    @property
    def has_exact(self):
        return self._exact is not None

    def exact_state(self, t):
        if self._exact is None:
            return super().exact_state(t)
        return np.asarray(self._exact(t), dtype=float).reshape(self.shape)

    def gamma_bound(self, t):
        if self._gamma is not None:
            return self._gamma
        if not np.any(self.B):
            return 0.0
        from scipy.linalg import eigh

        # max |B u|^2 / (A u, u) as a generalized eigenvalue problem
        W = np.diag(self.w)
        lam = eigh(self.B.T @ W @ self.B, W @ self.A, eigvals_only=True)
        return float(np.sqrt(max(lam.max(), 0.0)))


def heat1d_problem(M: int = 100, b: float = 1.0) -> Heat1D:
    return Heat1D(M, b)


def semilinear2d_problem(M: int = 32, epsilon: float = 0.01, h1: str = "spectral") -> Semilinear2D:
    return Semilinear2D(M, epsilon, h1)
