"""Experiment runner: convergence tables, stability sweeps and error time series."""
from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .norms import ERROR_FIELDS, ErrorReport, error_report, observed_order
from .problems import heat1d_problem, semilinear2d_problem
from .stability import CertificateNotApplicable, stability_certificate_thm31
from .stepper import SolverConfig, StepError, integrate
from .time_mesh import TimeMesh, geometric_mesh, graded_mesh, uniform_mesh

PROBLEM_DEFAULTS = {
    "heat1d": {"T": 4.0, "M": 100},
    "semilinear2d": {"T": 1.0, "M": 32},
}

ORDER_FIELDS = ("ord_linf_V", "ord_l2_HH", "ord_linf_H", "ord_l2_V")

TITLES = {
    "E_linf_V": "l^inf(J;V) error",
    "E_l2_HH": "l^2(J;H,H) error",
    "E_linf_H": "l^inf(J;H) error",
    "E_l2_V": "l^2(J;V) error",
}


@dataclass(frozen=True)
class StudyConfig:
    """Everything needed to reproduce one study.

    ``T`` and ``M`` default per problem (heat1d: 4 and 100, semilinear2d: 1
    and 32) when left as ``None``.  For ``vsbdf2`` a geometric mesh is used
    when ``ratio`` is set, otherwise the graded mesh with ``grading``.
    """

    problem: str = "heat1d"
    M: Optional[int] = None
    b: float = 1.0
    epsilon: float = 0.01
    T: Optional[float] = None
    scheme: str = "vsbdf2"
    grading: float = 3.0
    ratio: Optional[float] = None
    start: str = "be"
    N: tuple = (20, 40, 80, 160, 320)
    format: str = "md"
    out: Optional[str] = None
    fp_tol: float = 1e-12
    fp_maxit: int = 100
    tf_forcing: str = "average"
    h1: str = "spectral"
    c1: float = 0.5

    def __post_init__(self):
        if self.problem not in PROBLEM_DEFAULTS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.scheme not in ("csbdf2", "vsbdf2"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.start not in ("be", "tf"):
            raise ValueError(f"start must be 'be' or 'tf', got {self.start!r}")
        if self.format not in ("csv", "md"):
            raise ValueError(f"format must be 'csv' or 'md', got {self.format!r}")
        Ns = tuple(int(n) for n in self.N)
        if any(n < 2 for n in Ns) or any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("N list must be strictly increasing with entries >= 2")
        object.__setattr__(self, "N", Ns)
        defaults = PROBLEM_DEFAULTS[self.problem]
        if self.T is None:
            object.__setattr__(self, "T", defaults["T"])
        if self.M is None:
            object.__setattr__(self, "M", defaults["M"])

    @property
    def label(self) -> str:
        return f"{self.scheme}-{self.start}"

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.fp_tol, maxit=self.fp_maxit, trapezoidal_forcing=self.tf_forcing)

    def build_problem(self):
        if self.problem == "heat1d":
            return heat1d_problem(self.M, self.b)
        return semilinear2d_problem(self.M, self.epsilon, self.h1)

    def build_mesh(self, N: int) -> TimeMesh:
        if self.scheme == "csbdf2":
            return uniform_mesh(self.T, N)
        if self.ratio is not None:
            if self.ratio == 1:
                return uniform_mesh(self.T, N)
            return geometric_mesh(self.T, N, self.ratio)
        return graded_mesh(self.T, N, self.grading)


_KEYS = {f.name for f in fields(StudyConfig)}


def _parse_value(key, raw):
    raw = raw.strip()
    if key == "N":
        return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
    if key in ("M", "fp_maxit"):
        return int(raw)
    if key in ("b", "epsilon", "T", "grading", "ratio", "fp_tol", "c1"):
        return None if raw.lower() in ("", "none") else float(raw)
    return raw


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse flat ``key = value`` lines; keys match the CLI flag names."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[study]\n" + text)
    out = {}
    for key, raw in cp["study"].items():
        name = key.strip().lstrip("-").replace("-", "_")
        if name not in _KEYS:
            raise ValueError(f"unknown config key {key!r}")
        out[name] = _parse_value(name, raw)
    return out


@dataclass
class TableRow:
    N: int
    error: Optional[float]
    order: Optional[float] = None


@dataclass
class ConvergenceTable:
    functional: str
    caption: str
    rows: List[TableRow] = field(default_factory=list)


@dataclass
class RunRecord:
    N: int
    report: Optional[ErrorReport] = None
    failure: Optional[str] = None
    certificate: str = "n/a"
    cert_lhs: float = math.nan
    cert_rhs: float = math.nan


@dataclass
class StudyResult:
    config: StudyConfig
    runs: List[RunRecord]
    tables: Dict[str, ConvergenceTable]

    @property
    def failed(self) -> bool:
        return any(r.failure for r in self.runs)

    def orders(self, functional: str) -> List[Optional[float]]:
        return [row.order for row in self.tables[functional].rows]


def _order(N0, e0, N1, e1):
    if e0 is None or e1 is None or not (e0 > 0 and e1 > 0):
        return None
    if N1 == 2 * N0:
        return observed_order(e0, e1)
    return math.log(e0 / e1) / math.log(N1 / N0)


def run_convergence_study(config: StudyConfig) -> StudyResult:
    """Integrate once per ``N`` and tabulate the four error functionals."""
    problem = config.build_problem()
    solver = config.solver_config()
    start = "trapezoidal" if config.start == "tf" else "backward_euler"
    runs = []
    for N in config.N:
        mesh = config.build_mesh(N)
        rec = RunRecord(N)
        try:
            traj = integrate(problem, mesh, start, config=solver)
        except StepError as exc:
            rec.failure = str(exc)
            runs.append(rec)
            continue
        rec.report = error_report(traj, problem=problem, scheme=config.label)
        if not problem.semilinear:
            try:
                cert = stability_certificate_thm31(traj, problem, config.c1)
                rec.certificate = "holds" if cert.holds else "fails"
                rec.cert_lhs, rec.cert_rhs = cert.lhs, cert.rhs
            except CertificateNotApplicable:
                rec.certificate = "n/a"
        runs.append(rec)

    tables = {}
    for name in ERROR_FIELDS:
        caption = f"{TITLES[name]}, {config.label}, {config.problem}"
        table = ConvergenceTable(name, caption)
        prev = None
        for rec in runs:
            err = getattr(rec.report, name) if rec.report else None
            order = _order(prev.N, prev.error, rec.N, err) if prev else None
            row = TableRow(rec.N, err, order)
            table.rows.append(row)
            prev = row
        tables[name] = table
    return StudyResult(config, runs, tables)


def _sci(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4E}"


def _ord(x):
    return "" if x is None else f"{x:.4f}"


def emit_table(table: ConvergenceTable, fmt: str = "md") -> str:
    """Render one convergence table as CSV or a Markdown pipe table."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "error", "order"])
        for row in table.rows:
            w.writerow([row.N, _sci(row.error) if row.error is not None else "failed", _ord(row.order)])
        return buf.getvalue()
    if fmt != "md":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"**{table.caption}**", "", "| N | Error | Order |", "|---|---|---|"]
    for row in table.rows:
        err = _sci(row.error) if row.error is not None else "failed"
        lines.append(f"| {row.N} | {err} | {_ord(row.order)} |")
    return "\n".join(lines) + "\n"


def emit_study(result: StudyResult, fmt: Optional[str] = None) -> str:
    """All four tables (Markdown) or the combined convergence CSV."""
    fmt = fmt or result.config.format
    if fmt == "md":
        return "\n".join(emit_table(result.tables[name], "md") for name in ERROR_FIELDS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scheme", "N", *ERROR_FIELDS, *ORDER_FIELDS, "certificate", "lhs", "rhs"])
    for i, rec in enumerate(result.runs):
        errs = [_sci(getattr(rec.report, f)) if rec.report else "failed" for f in ERROR_FIELDS]
        ords = [_ord(result.tables[f].rows[i].order) for f in ERROR_FIELDS]
        w.writerow([result.config.label, rec.N, *errs, *ords, rec.certificate, _sci(rec.cert_lhs), _sci(rec.cert_rhs)])
    return buf.getvalue()


@dataclass
class Series:
    series_id: str
    n: np.ndarray
    t: np.ndarray
    values: Dict[str, np.ndarray]
    truncated: bool = False
    message: str = ""


@dataclass
class SweepVerdict:
    series_id: str
    max_ratio: float
    final_ratio: float
    bounded: bool
    truncated: bool


def _trajectory_or_partial(problem, mesh, start, solver):
    try:
        traj = integrate(problem, mesh, start, config=solver)
        return traj.states, False, ""
    except StepError as exc:
        return getattr(exc, "partial", np.empty((0,) + problem.shape)), True, str(exc)


def run_stability_sweep(config: StudyConfig, ratios: Optional[Sequence[float]] = None,
                        N: Optional[int] = None, bound: float = 1.5):
    """Discrete L2 norm ``|U^n|`` over time on geometric meshes, one series per ratio.

    ``ratio == 1`` uses the uniform mesh.  A series is *bounded* when
    ``max_n |U^n| / |U^0| <= bound``.
    """
    ratios = list(ratios) if ratios is not None else [config.ratio if config.ratio is not None else 2.4]
    N = N or config.N[-1]
    problem = config.build_problem()
    solver = config.solver_config()
    start = "trapezoidal" if config.start == "tf" else "backward_euler"
    series, verdicts = [], []
    for r in ratios:
        cfg = replace(config, scheme="vsbdf2", ratio=float(r))
        mesh = cfg.build_mesh(N)
        states, truncated, msg = _trajectory_or_partial(problem, mesh, start, solver)
        norms = np.array([problem.h_norm(u) for u in states])
        n = np.arange(norms.size)
        sid = f"vsbdf2-{config.start}-r{r:g}"
        series.append(Series(sid, n, mesh.node_times[: n.size], {"l2_norm": norms}, truncated, msg))
        max_ratio = float(norms.max() / norms[0]) if norms.size else math.nan
        final_ratio = float(norms[-1] / norms[0]) if norms.size else math.nan
        verdicts.append(SweepVerdict(sid, max_ratio, final_ratio, bool(max_ratio <= bound) and not truncated, truncated))
    return series, verdicts


def run_error_evolution(configs: Sequence[StudyConfig], N: int) -> List[Series]:
    """Per-step errors ``|e^n|`` and ``||e^n||_{H^1}`` for each configuration."""
    out = []
    for cfg in configs:
        problem = cfg.build_problem()
        mesh = cfg.build_mesh(N)
        start = "trapezoidal" if cfg.start == "tf" else "backward_euler"
        states, truncated, msg = _trajectory_or_partial(problem, mesh, start, cfg.solver_config())
        errs = [states[n] - problem.exact_state(mesh.t(n)) for n in range(len(states))]
        sid = cfg.label if cfg.ratio is None or cfg.scheme == "csbdf2" else f"{cfg.label}-r{cfg.ratio:g}"
        out.append(Series(
            sid,
            np.arange(len(errs)),
            mesh.node_times[: len(errs)],
            {
                "l2_error": np.array([problem.h_norm(e) for e in errs]),
                "h1_error": np.array([problem.v_seminorm(e) for e in errs]),
            },
            truncated,
            msg,
        ))
    return out


def emit_series(series: Sequence[Series]) -> str:
    """Long-format CSV ``series_id, n, t, <value columns>``."""
    cols = list(series[0].values) if series else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series_id", "n", "t", *cols])
    for s in series:
        for i in range(s.n.size):
            w.writerow([s.series_id, int(s.n[i]), repr(float(s.t[i])), *(f"{s.values[c][i]:.10e}" for c in cols)])
    return buf.getvalue()
