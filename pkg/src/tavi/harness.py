"""Run configuration, the optimisation loop, and trace persistence.

A config is a JSON document::

    {
      "problem": {"kind": "quartic", "dim": 3},
      "method": {"kind": "ltvi", "mode": "adaptive"},
      "params": {"p": 6, "p_ring": 2, "h": 0.001},
      "max_iters": 100000, "delta": 1e-9, "trace_stride": 1,
      "output_path": "trace.csv"
    }

Wahba problems take ``"seed"``, ``"matrix_file"`` or an inline ``"matrix"``.
Optional initial points: ``"q0"``/``"r0"`` (quartic), ``"R0"``/``"mu0"`` (wahba).
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bregman import BregmanParams
from .errors import ConfigInvalid, MismatchedProblem, TaviError
from .geometry import as_rotation, orthogonality_error
from .integrators_so3 import llgvi_adaptive_step, llgvi_init
from .integrators_vector import STEPPERS, initial_state
from .objectives import load_wahba_matrix, quartic_objective, random_wahba_matrix, wahba_objective

COLUMNS = ("iter", "tau", "t", "f_err", "grad_norm", "step_physical", "orth_err")

DEFAULT_DELTA = 1e-9
DEFAULT_MAX_ITERS = 100_000


@dataclass(frozen=True)
class ProblemConfig:
    kind: str
    dim: int = 3
    seed: Optional[int] = None
    matrix_file: Optional[str] = None
    matrix: Optional[tuple] = None
    q0: Optional[tuple] = None
    r0: Optional[tuple] = None
    R0: Optional[tuple] = None
    mu0: Optional[tuple] = None

    def instance_key(self):
        """Everything that pins down the objective and the starting point."""
        return (self.kind, self.dim, self.seed, self.matrix_file, self.matrix, self.q0, self.r0, self.R0, self.mu0)


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig
    method: str
    mode: str
    params: BregmanParams
    max_iters: int = DEFAULT_MAX_ITERS
    delta: float = DEFAULT_DELTA
    trace_stride: int = 1
    output_path: Optional[str] = None
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or f"{self.method}-{self.mode}"


@dataclass
class Trace:
    """Recorded rows ``(iter, tau, t, f_err, grad_norm, step_physical, orth_err)``.

    ``orth_err`` is ``None`` for runs on R^d. ``final_state`` holds the last
    integrator state of a run; it is not written to trace files.
    """

    rows: list = field(default_factory=list)
    name: str = ""
    terminated: bool = False
    iterations: int = 0
    final_state: object = field(default=None, repr=False, compare=False)

    @property
    def final_f_err(self) -> float:
        return self.rows[-1][3] if self.rows else math.nan


# -- config parsing -------------------------------------------------------------


def _get(d: dict, key: str, where: str, default=None, required=False):
    if key in d:
        return d[key]
    if required:
        raise ConfigInvalid(f"{where}.{key}: missing required field")
    return default


def _real(value, where: str, positive=True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigInvalid(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or (positive and value <= 0):
        raise ConfigInvalid(f"{where}: expected a finite positive number, got {value!r}")
    return value


def _int(value, where: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigInvalid(f"{where}: expected an integer >= {minimum}, got {value!r}")
    return value


def _vector(value, where: str, length: int) -> Optional[tuple]:
    if value is None:
        return None
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from exc
    if arr.shape != (length,) or not np.all(np.isfinite(arr)):
        raise ConfigInvalid(f"{where}: expected {length} finite numbers")
    return tuple(float(x) for x in arr)


def _matrix(value, where: str) -> Optional[tuple]:
    if value is None:
        return None
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{where}: {exc}") from exc
    if arr.shape != (3, 3) or not np.all(np.isfinite(arr)):
        raise ConfigInvalid(f"{where}: expected a finite 3x3 matrix")
    return tuple(tuple(float(x) for x in row) for row in arr)


def _parse_problem(d) -> ProblemConfig:
    if not isinstance(d, dict):
        raise ConfigInvalid("problem: expected an object")
    kind = _get(d, "kind", "problem", required=True)
    if kind == "quartic":
        dim = _int(_get(d, "dim", "problem", required=True), "problem.dim", 1)
        return ProblemConfig(
            kind=kind,
            dim=dim,
            q0=_vector(d.get("q0"), "problem.q0", dim),
            r0=_vector(d.get("r0"), "problem.r0", dim),
        )
    if kind == "wahba":
        sources = [k for k in ("seed", "matrix_file", "matrix") if d.get(k) is not None]
        if len(sources) != 1:
            raise ConfigInvalid("problem: wahba needs exactly one of seed, matrix_file, matrix")
        seed = d.get("seed")
        if seed is not None:
            seed = _int(seed, "problem.seed", 0)
        matrix_file = d.get("matrix_file")
        if matrix_file is not None and not isinstance(matrix_file, str):
            raise ConfigInvalid("problem.matrix_file: expected a path string")
        R0 = _matrix(d.get("R0"), "problem.R0")
        if R0 is not None:
            try:
                as_rotation(np.array(R0))
            except TaviError as exc:
                raise ConfigInvalid(f"problem.R0: {exc}") from exc
        return ProblemConfig(
            kind=kind,
            dim=3,
            seed=seed,
            matrix_file=matrix_file,
            matrix=_matrix(d.get("matrix"), "problem.matrix"),
            R0=R0,
            mu0=_vector(d.get("mu0"), "problem.mu0", 3),
        )
    raise ConfigInvalid(f"problem.kind: expected 'quartic' or 'wahba', got {kind!r}")


def config_from_dict(d) -> RunConfig:
    """Validate a decoded JSON object and fill in defaults."""
    if not isinstance(d, dict):
        raise ConfigInvalid("config: expected a JSON object")
    problem = _parse_problem(_get(d, "problem", "config", required=True))

    method = _get(d, "method", "config", required=True)
    if not isinstance(method, dict):
        raise ConfigInvalid("method: expected an object")
    kind = _get(method, "kind", "method", required=True)
    if kind not in ("ltvi", "htvi", "llgvi"):
        raise ConfigInvalid(f"method.kind: expected ltvi, htvi or llgvi, got {kind!r}")
    if (kind == "llgvi") != (problem.kind == "wahba"):
        raise ConfigInvalid(f"method.kind: {kind} cannot run on a {problem.kind} problem")

    pd = _get(d, "params", "config", required=True)
    if not isinstance(pd, dict):
        raise ConfigInvalid("params: expected an object")
    p = _real(_get(pd, "p", "params", required=True), "params.p")
    p_ring = _real(pd.get("p_ring", p), "params.p_ring")
    h = _real(_get(pd, "h", "params", required=True), "params.h")
    c = _real(pd.get("C", pd.get("c", 1.0)), "params.C")
    t0 = _real(pd.get("t0", 1.0), "params.t0")
    if p_ring > p:
        raise ConfigInvalid(f"params.p_ring: must not exceed p ({p_ring} > {p})")

    mode = method.get("mode", "direct" if p_ring == p else "adaptive")
    if mode not in ("direct", "adaptive"):
        raise ConfigInvalid(f"method.mode: expected direct or adaptive, got {mode!r}")
    if (mode == "direct") != (p_ring == p):
        raise ConfigInvalid("method.mode: direct requires p_ring == p and adaptive requires p_ring < p")
    if kind == "llgvi" and mode != "adaptive":
        raise ConfigInvalid("method.mode: llgvi is only available in adaptive mode")

    output_path = d.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigInvalid("output_path: expected a path string")
    name = d.get("name", "")
    if not isinstance(name, str):
        raise ConfigInvalid("name: expected a string")
    return RunConfig(
        problem=problem,
        method=kind,
        mode=mode,
        params=BregmanParams(p=p, p_ring=p_ring, c=c, h=h, t0=t0),
        max_iters=_int(d.get("max_iters", DEFAULT_MAX_ITERS), "max_iters", 1),
        delta=_real(d.get("delta", DEFAULT_DELTA), "delta"),
        trace_stride=_int(d.get("trace_stride", 1), "trace_stride", 1),
        output_path=output_path,
        name=name,
    )


def _decode(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    return config_from_dict(_decode(text))


def parse_config_list(text: str) -> list:
    """A JSON list of configs, or an object with a ``"runs"`` list."""
    doc = _decode(text)
    if isinstance(doc, dict) and "runs" in doc:
        doc = doc["runs"]
    if not isinstance(doc, list):
        raise ConfigInvalid("compare config: expected a list of run configs")
    out = []
    for i, item in enumerate(doc):
        try:
            out.append(config_from_dict(item))
        except ConfigInvalid as exc:
            raise ConfigInvalid(f"runs[{i}]: {exc}") from exc
    return out


# -- running --------------------------------------------------------------------


def check_termination(f_k: float, f_km1: float, f_star: float, delta: float) -> bool:
    """``|f_k - f*| < delta`` and ``|f_k - f_{k-1}| < delta``."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    return abs(f_k - f_star) < delta and abs(f_k - f_km1) < delta


class _LastGrad:
    """Remembers the last gradient so recording a row costs no extra evaluation."""

    def __init__(self, fn):
        self.fn = fn
        self.key = None
        self.value = None

    def __call__(self, x):
        if self.key is not None and self.key is x:
            return self.value
        self.key = x
        self.value = self.fn(x)
        return self.value


class _Cached:
    def __init__(self, obj, attr):
        self.__dict__.update(vars(obj))
        setattr(self, attr, _LastGrad(getattr(obj, attr)))


def build_problem(cfg: RunConfig):
    """Objective and initial state for ``cfg``."""
    pc = cfg.problem
    if pc.kind == "quartic":
        obj = quartic_objective(pc.dim)
        q0 = np.zeros(pc.dim) if pc.q0 is None else np.array(pc.q0)
        r0 = None if pc.r0 is None else np.array(pc.r0)
        return obj, initial_state(q0, cfg.params, r0)
    if pc.seed is not None:
        A = random_wahba_matrix(pc.seed)
    elif pc.matrix_file is not None:
        try:
            A = load_wahba_matrix(pc.matrix_file)
        except OSError as exc:
            raise ConfigInvalid(f"problem.matrix_file: {exc}") from exc
        except TaviError as exc:
            raise ConfigInvalid(f"problem.matrix_file: {exc}") from exc
    else:
        A = np.array(pc.matrix)
    obj = wahba_objective(A)
    R0 = np.eye(3) if pc.R0 is None else np.array(pc.R0)
    mu0 = None if pc.mu0 is None else np.array(pc.mu0)
    return obj, llgvi_init(R0, cfg.params, mu0)


def run_trajectory(cfg: RunConfig) -> Trace:
    """Iterate until the termination test passes or ``max_iters`` steps are taken.

    Rows are kept for every ``trace_stride``-th iterate and for the last one.
    Stepper errors propagate with their iteration index set.
    """
    obj, state = build_problem(cfg)
    so3 = cfg.method == "llgvi"
    if so3:
        obj = _Cached(obj, "grad_left")
        step = llgvi_adaptive_step
        point = lambda s: s.R  # noqa: E731
        grad = obj.grad_left
    else:
        obj = _Cached(obj, "grad")
        step = STEPPERS[(cfg.method, cfg.mode)]
        point = lambda s: s.q  # noqa: E731
        grad = obj.grad
    prm = cfg.params
    h, ratio, slope = prm.h, prm.ratio, prm.slope
    f_star = float(obj.f_star)
    direct = prm.p_ring == prm.p

    def row(s, f_k):
        x = point(s)
        dt = h if direct else h * ratio * s.qt ** (1.0 - slope)
        return (
            s.k,
            s.k * h,
            s.qt,
            abs(f_k - f_star),
            float(np.linalg.norm(grad(x))),
            dt,
            orthogonality_error(x) if so3 else None,
        )

    trace = Trace(name=cfg.label)
    f_prev = obj.f(point(state))
    trace.rows.append(row(state, f_prev))
    for _ in range(cfg.max_iters):
        state = step(state, obj, prm)
        f_k = obj.f(point(state))
        done = check_termination(f_k, f_prev, f_star, cfg.delta)
        if done or state.k % cfg.trace_stride == 0 or state.k == cfg.max_iters:
            trace.rows.append(row(state, f_k))
        f_prev = f_k
        if done:
            trace.terminated = True
            break
    trace.iterations = state.k
    trace.final_state = state
    return trace


@dataclass(frozen=True)
class RunSummary:
    name: str
    iterations: int
    terminated: bool
    final_f_err: float
    wall_time: float


@dataclass
class Comparison:
    traces: list
    summaries: list

    def table(self) -> str:
        lines = [f"{'run':<24} {'iterations':>10} {'reached':>8} {'final_f_err':>14} {'wall_s':>9}"]
        for s in self.summaries:
            lines.append(
                f"{s.name:<24} {s.iterations:>10d} {str(s.terminated):>8} {s.final_f_err:>14.6e} {s.wall_time:>9.3f}"
            )
        return "\n".join(lines)


def compare_runs(cfgs) -> Comparison:
    """Run every config on one shared problem instance and summarise them.

    Wall time is informational; it comes from a monotonic clock per run.
    """
    cfgs = list(cfgs)
    if len(cfgs) < 2:
        raise MismatchedProblem("comparison needs at least two runs")
    key = cfgs[0].problem.instance_key()
    for c in cfgs[1:]:
        if c.problem.instance_key() != key:
            raise MismatchedProblem(f"run {c.label!r} uses a different problem instance")
    traces, summaries = [], []
    for c in cfgs:
        start = time.monotonic()
        tr = run_trajectory(c)
        elapsed = time.monotonic() - start
        traces.append(tr)
        summaries.append(RunSummary(c.label, tr.iterations, tr.terminated, tr.final_f_err, elapsed))
    return Comparison(traces, summaries)


# -- trace files ----------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % x


def trace_to_csv(trace: Trace) -> str:
    lines = [",".join(COLUMNS)]
    lines.extend(",".join(_fmt(v) for v in r) for r in trace.rows)
    return "\n".join(lines) + "\n"


def trace_to_json(trace: Trace) -> str:
    doc = {
        "name": trace.name,
        "terminated": trace.terminated,
        "iterations": trace.iterations,
        "columns": list(COLUMNS),
        "rows": [list(r) for r in trace.rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def _format_for(path, fmt):
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown trace format {fmt!r}")
    return fmt


def write_trace(trace: Trace, path, fmt: Optional[str] = None) -> None:
    """Write ``trace`` as CSV (17 significant digits) or JSON (shortest repr).

    Both round-trip every float exactly. Raises ``OSError`` if ``path`` is
    not writable.
    """
    fmt = _format_for(path, fmt)
    text = trace_to_csv(trace) if fmt == "csv" else trace_to_json(trace)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_trace(path, fmt: Optional[str] = None) -> Trace:
    fmt = _format_for(path, fmt)
    text = Path(path).read_text()
    if fmt == "json":
        doc = json.loads(text)
        rows = [tuple(r) for r in doc["rows"]]
        return Trace(rows, doc.get("name", ""), doc.get("terminated", False), doc.get("iterations", 0))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"{path}: unexpected header {header!r}")
    rows = []
    for rec in reader:
        rows.append(
            (int(rec[0]),) + tuple(float(x) for x in rec[1:6]) + (float(rec[6]) if rec[6] else None,)
        )
    iterations = rows[-1][0] if rows else 0
    return Trace(rows, iterations=iterations)
