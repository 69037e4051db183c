"""Nonuniform time meshes and the step-size quantities derived from them.

Indexing follows the usual multistep convention: node ``t[n]`` for
``n = 0..N``, step ``k_n = t[n] - t[n-1]`` for ``n = 1..N`` and ratio
``r_n = k_n / k_{n-1}`` for ``n = 2..N``.  The stored arrays are zero-based,
so use the ``k``, ``r`` and ``s`` accessors when working with step indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised when a time mesh cannot be built from the given parameters."""


def positive_part(x):
    """``[x]_+ = (|x| + x) / 2``, elementwise."""
    return (np.abs(x) + x) / 2


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Partition ``0 = t^0 < t^1 < ... < t^N = T`` of the time interval.

    Attributes
    ----------
    node_times : ndarray, shape (N+1,)
    steps : ndarray, shape (N,)
        ``steps[n-1] = k_n``.
    ratios : ndarray, shape (N-1,)
        ``ratios[n-2] = r_n``.
    weights : ndarray, shape (N-1,)
        ``weights[n-2] = s_n = r_n / (1 + r_n)``.
    """

    node_times: np.ndarray
    steps: np.ndarray = field(init=False, repr=False)
    ratios: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.array(self.node_times, dtype=float)
        if t.ndim != 1 or t.size < 3:
            raise MeshError("a mesh needs at least three nodes (N >= 2)")
        if not np.all(np.isfinite(t)):
            raise MeshError("node times must be finite")
        if t[0] != 0.0:
            raise MeshError(f"first node must be 0, got {t[0]!r}")
        steps = np.diff(t)
        if np.any(steps <= 0):
            bad = int(np.argmin(steps)) + 1
            raise MeshError(f"node times must be strictly increasing (violated at n={bad})")
        ratios = steps[1:] / steps[:-1]
        weights = ratios / (1 + ratios)
        object.__setattr__(self, "node_times", _frozen(t))
        object.__setattr__(self, "steps", _frozen(steps))
        object.__setattr__(self, "ratios", _frozen(ratios))
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def N(self) -> int:
        return self.steps.size

    @property
    def T(self) -> float:
        return float(self.node_times[-1])

    @property
    def k1(self) -> float:
        return float(self.steps[0])

    def t(self, n: int) -> float:
        return float(self.node_times[n])

    def k(self, n: int) -> float:
        if not 1 <= n <= self.N:
            raise IndexError(f"step index {n} outside 1..{self.N}")
        return float(self.steps[n - 1])

    def r(self, n: int) -> float:
        if not 2 <= n <= self.N:
            raise IndexError(f"ratio index {n} outside 2..{self.N}")
        return float(self.ratios[n - 2])

    def s(self, n: int) -> float:
        if not 2 <= n <= self.N:
            raise IndexError(f"weight index {n} outside 2..{self.N}")
        return float(self.weights[n - 2])

    def __eq__(self, other):
        if not isinstance(other, TimeMesh):
            return NotImplemented
        return np.array_equal(self.node_times, other.node_times)

    def __hash__(self):
        return hash(self.node_times.tobytes())

    def to_text(self) -> str:
        """One node time per line, shortest round-trip decimal form."""
        return "".join(
            np.format_float_positional(t, unique=True, trim="-") + "\n" for t in self.node_times
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())


@dataclass(frozen=True)
class MeshStats:
    """Mesh statistics used by the stability theory.

    ``k_max`` and ``r_max`` run over ``n = 2..N`` only; the first step is
    reported separately as ``k1``.  ``phi[n-2]`` holds
    ``Phi_n = sum_{j=2}^{n-2} [r_j - r_{j+2}]_+``.
    """

    k1: float
    k_max: float
    r_max: float
    phi: np.ndarray

    @property
    def phi_N(self) -> float:
        return float(self.phi[-1])

    def phi_at(self, n: int) -> float:
        return float(self.phi[n - 2])


def from_nodes(node_times) -> TimeMesh:
    """Build a mesh from explicit node times (first node 0, strictly increasing)."""
    return TimeMesh(np.asarray(node_times, dtype=float))


def load_nodes(path) -> TimeMesh:
    """Read a one-column node list written by :meth:`TimeMesh.save`."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return from_nodes([float(ln) for ln in lines if ln and not ln.startswith("#")])


def _check_count(T, N):
    if not (np.isfinite(T) and T > 0):
        raise MeshError(f"horizon T must be positive, got {T!r}")
    if int(N) != N or N < 2:
        raise MeshError(f"N must be an integer >= 2, got {N!r}")


def uniform_mesh(T: float, N: int) -> TimeMesh:
    """Equidistant mesh with ``k_n = T/N``."""
    _check_count(T, N)
    t = T * (np.arange(N + 1) / N)
    t[-1] = T
    return TimeMesh(t)


def graded_mesh(T: float, N: int, grading: float) -> TimeMesh:
    """Graded mesh ``t^n = T (n/N)^grading``, refined towards ``t = 0``.

    ``grading = 1`` gives the uniform mesh.  For ``grading > 1`` the ratios
    are all larger than one and strictly decrease in ``n``.
    """
    _check_count(T, N)
    if not grading >= 1:
        raise MeshError(f"grading must be >= 1, got {grading!r}")
    t = T * (np.arange(N + 1) / N) ** grading
    t[-1] = T
    return TimeMesh(t)


def geometric_mesh(T: float, N: int, ratio: float) -> TimeMesh:
    """Mesh with constant step ratio, ``k_1 = T (r-1)/(r^N - 1)``, ``k_n = r k_{n-1}``.

    Node times are evaluated in closed form, ``t^n = T (r^n - 1)/(r^N - 1)``,
    so that the last node is exactly ``T``.  ``ratio == 1`` is rejected; use
    :func:`uniform_mesh` instead.
    """
    _check_count(T, N)
    if not (np.isfinite(ratio) and ratio > 0):
        raise MeshError(f"ratio must be positive, got {ratio!r}")
    if ratio == 1:
        raise MeshError("ratio 1 is the uniform mesh; call uniform_mesh instead")
    n = np.arange(N + 1)
    lr = np.log(ratio)
    t = T * (np.expm1(n * lr) / np.expm1(N * lr))
    t[0] = 0.0
    t[-1] = T
    return TimeMesh(t)


def mesh_stats(mesh: TimeMesh) -> MeshStats:
    r = mesh.ratios
    terms = positive_part(r[:-2] - r[2:])  # j = 2..N-2
    phi = np.zeros(mesh.N - 1)
    phi[2:] = np.cumsum(terms)
    return MeshStats(
        k1=mesh.k1,
        k_max=float(mesh.steps[1:].max()),
        r_max=float(r.max()),
        phi=_frozen(phi),
    )
