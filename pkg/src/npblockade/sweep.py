"""Run configurations, parallel parameter sweeps, blockade windows and CSV output.

Configuration files are flat ``key = value`` documents with ``#`` comments
and dotted keys::

    model.kind = jc            # jc | kerr | coupled_kerr
    model.g = 17.3205080757
    model.gamma = 0.1
    model.cavity_dim = 12
    drive.kind = parametric    # parametric | coherent
    drive.order = 3
    drive.amplitude = 0.3
    sweep.parameter = delta
    sweep.start = -15
    sweep.stop = 15
    sweep.count = 301
    output.orders = 3,4

All physical values are in units of the cavity decay rate.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import models as md
from .errors import BlockadeError, ConfigError, ContractError, UnsupportedModelError
from .liouvillian import POSITIVITY_TOL, RESIDUAL_TOL, build_liouvillian, steady_state
from .observables import CorrelationReport, classify_blockade, correlation_report

__all__ = [
    "SweepAxis",
    "SweepSpec",
    "PointResult",
    "SweepResult",
    "BlockadeWindow",
    "CSV_HEADER",
    "parse_config",
    "load_config",
    "bundled_configs",
    "solve_point",
    "run_sweep",
    "find_blockade_windows",
    "emit_csv",
    "read_csv",
    "conditions",
    "format_conditions",
    "spectrum",
]

CSV_HEADER = ("sweep_value", "mode", "mean_n", "g2", "g3", "g4", "g5",
              "fock_tail", "residual", "gap_ratio", "dim", "valid")
CSV_ORDERS = (2, 3, 4, 5)
ALLOWED_ORDERS = frozenset(range(2, 7))

_MODEL_KEYS = {
    "jc": {"delta", "g", "gamma", "kappa", "cavity_dim"},
    "kerr": {"delta", "U", "kappa", "cavity_dim"},
    "coupled_kerr": {"delta", "U", "J", "kappa", "dim_a", "dim_b"},
}
_REQUIRED = {
    "jc": {"g", "gamma"},
    "kerr": {"U"},
    "coupled_kerr": {"U", "J"},
}
_DIM_KEYS = {"jc": ("cavity_dim",), "kerr": ("cavity_dim",), "coupled_kerr": ("dim_a", "dim_b")}
_DEFAULT_MAX_DIM = {"jc": 32, "kerr": 40, "coupled_kerr": 12}
_PARAM_CLASS = {"jc": md.JCParams, "kerr": md.KerrParams, "coupled_kerr": md.CoupledKerrParams}
_AMPLITUDE_ALIASES = {"amplitude", "drive.amplitude", "lambda", "F"}
_TOP_KEYS = {
    "model.kind", "drive.kind", "drive.order", "drive.amplitude",
    "sweep.parameter", "sweep.start", "sweep.stop", "sweep.count", "sweep.scale",
    "output.orders", "output.path", "truncation.max_dim", "truncation.tail_tol",
}


@dataclass(frozen=True)
class SweepAxis:
    parameter: str  # a model field name, or "amplitude" for the drive strength
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def grid(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.count - 1)


@dataclass(frozen=True)
class SweepSpec:
    model: md.ModelSpec
    sweep: SweepAxis | None
    orders: tuple[int, ...]
    max_dim: int
    tail_tol: float = 1e-8
    output_path: str | None = None

    def params_at(self, value: float) -> md.ModelSpec:
        return _set_param(self.model, self.sweep.parameter, value)

    def with_dim(self, dim: int) -> SweepSpec:
        return replace(self, model=_with_dims(self.model, dim), max_dim=max(self.max_dim, dim))


def _set_param(p: md.ModelSpec, name: str, value: float) -> md.ModelSpec:
    if name == "amplitude":
        return replace(p, drive=p.drive.with_amplitude(value))
    return replace(p, **{name: float(value)})


def _dims(p: md.ModelSpec) -> dict[str, int]:
    return {k: getattr(p, k) for k in _DIM_KEYS[p.kind]}


def _with_dims(p: md.ModelSpec, dim: int) -> md.ModelSpec:
    return replace(p, **{k: int(dim) for k in _DIM_KEYS[p.kind]})


def _grow(p: md.ModelSpec, step: int = 2) -> md.ModelSpec:
    return replace(p, **{k: v + step for k, v in _dims(p).items()})


# -- configuration ----------------------------------------------------------


def _parse_lines(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in entries:
            raise ConfigError(key, "duplicate key")
        entries[key] = value
    return entries


def _num(entries, key, kind=float):
    raw = entries[key]
    try:
        value = kind(raw)
    except ValueError:
        raise ConfigError(key, f"expected {kind.__name__}, got {raw!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return value


def parse_config(text: str) -> SweepSpec:
    """Validate a configuration document and build a :class:`SweepSpec`."""
    entries = _parse_lines(text)
    if "model.kind" not in entries:
        raise ConfigError("model.kind", "missing required key")
    kind = entries["model.kind"]
    if kind not in _MODEL_KEYS:
        raise ConfigError("model.kind", f"unknown model {kind!r}; expected one of {sorted(_MODEL_KEYS)}")
    model_keys = _MODEL_KEYS[kind]
    for key in entries:
        if key in _TOP_KEYS:
            continue
        if key.startswith("model.") and key[6:] in model_keys:
            continue
        raise ConfigError(key, f"unknown key for model kind {kind!r}")

    # sweep axis
    axis = None
    if "sweep.parameter" in entries:
        param = entries["sweep.parameter"]
        if param in _AMPLITUDE_ALIASES:
            param = "amplitude"
        elif param not in model_keys - set(_DIM_KEYS[kind]):
            raise ConfigError("sweep.parameter", f"cannot sweep {param!r} for model {kind!r}")
        for key in ("sweep.start", "sweep.stop", "sweep.count"):
            if key not in entries:
                raise ConfigError(key, "missing required key")
        start, stop = _num(entries, "sweep.start"), _num(entries, "sweep.stop")
        count = _num(entries, "sweep.count", int)
        scale = entries.get("sweep.scale", "linear")
        if count < 2:
            raise ConfigError("sweep.count", f"must be >= 2, got {count}")
        if not start < stop:
            raise ConfigError("sweep.stop", f"must exceed sweep.start ({start} >= {stop})")
        if scale not in ("linear", "log"):
            raise ConfigError("sweep.scale", f"expected 'linear' or 'log', got {scale!r}")
        if scale == "log" and start <= 0:
            raise ConfigError("sweep.start", "log-spaced sweeps need a positive start")
        axis = SweepAxis(param, start, stop, count, scale)
    else:
        for key in ("sweep.start", "sweep.stop", "sweep.count", "sweep.scale"):
            if key in entries:
                raise ConfigError(key, "given without sweep.parameter")
    swept = axis.parameter if axis else None

    # drive
    drive_kind = entries.get("drive.kind")
    if drive_kind is None:
        raise ConfigError("drive.kind", "missing required key")
    if drive_kind not in ("parametric", "coherent"):
        raise ConfigError("drive.kind", f"expected 'parametric' or 'coherent', got {drive_kind!r}")
    if "drive.amplitude" in entries:
        amplitude = _num(entries, "drive.amplitude")
    elif swept == "amplitude":
        amplitude = axis.start
    else:
        raise ConfigError("drive.amplitude", "missing required key")
    if amplitude < 0 or (swept == "amplitude" and axis.start < 0):
        raise ConfigError("drive.amplitude", "must be >= 0")
    if drive_kind == "parametric":
        if "drive.order" not in entries:
            raise ConfigError("drive.order", "missing required key for a parametric drive")
        order = _num(entries, "drive.order", int)
        if order < 2:
            raise ConfigError("drive.order", f"must be >= 2 (order 1 is the coherent drive), got {order}")
        drive = md.parametric(order, amplitude)
    else:
        if "drive.order" in entries and _num(entries, "drive.order", int) != 1:
            raise ConfigError("drive.order", "a coherent drive has order 1")
        drive = md.coherent(amplitude)

    # model parameters
    values: dict = {}
    for name in model_keys:
        key = f"model.{name}"
        if key in entries:
            values[name] = _num(entries, key, int if name in _DIM_KEYS[kind] else float)
    for name in _REQUIRED[kind] | {"delta"}:
        if name not in values:
            if name == swept:
                values[name] = axis.start
            else:
                raise ConfigError(f"model.{name}", "missing required key")
    try:
        model = _PARAM_CLASS[kind](drive=drive, **values)
    except BlockadeError as exc:
        raise ConfigError("model", str(exc)) from None
    if swept is not None and swept != "amplitude":
        for v in (axis.start, axis.stop):
            try:
                _set_param(model, swept, v)
            except BlockadeError as exc:
                raise ConfigError(f"sweep.{'start' if v == axis.start else 'stop'}", str(exc)) from None

    # outputs and truncation policy
    if "output.orders" in entries:
        try:
            orders = tuple(sorted({int(s) for s in entries["output.orders"].split(",") if s.strip()}))
        except ValueError:
            raise ConfigError("output.orders", f"expected comma-separated integers, got {entries['output.orders']!r}") from None
    elif drive.is_parametric:
        orders = (drive.order, drive.order + 1)
    else:
        orders = CSV_ORDERS
    if not orders or not set(orders) <= ALLOWED_ORDERS:
        raise ConfigError("output.orders", f"orders must be a non-empty subset of 2..6, got {orders}")
    max_dim = _num(entries, "truncation.max_dim", int) if "truncation.max_dim" in entries else max(
        _DEFAULT_MAX_DIM[kind], *_dims(model).values())
    if max_dim < max(_dims(model).values()):
        raise ConfigError("truncation.max_dim", "must be at least the initial truncation")
    tail_tol = _num(entries, "truncation.tail_tol") if "truncation.tail_tol" in entries else 1e-8
    if not tail_tol > 0:
        raise ConfigError("truncation.tail_tol", "must be > 0")
    return SweepSpec(model, axis, orders, max_dim, tail_tol, entries.get("output.path"))


def bundled_configs() -> list[str]:
    root = resources.files("npblockade") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(path: str | os.PathLike) -> SweepSpec:
    """Read a config file; bare names of bundled configs (``fig1b.cfg``) also resolve."""
    p = Path(path)
    if not p.exists() and p.name in bundled_configs():
        text = (resources.files("npblockade") / "configs" / p.name).read_text(encoding="utf-8")
    else:
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(str(path), f"cannot read config: {exc.strerror or exc}") from None
    return parse_config(text)


# -- sweeps -----------------------------------------------------------------


@dataclass
class PointResult:
    value: float
    reports: dict[str, CorrelationReport] = field(default_factory=dict)
    residual: float = math.nan
    gap_ratio: float = math.nan
    min_eigenvalue: float = math.nan
    dims: dict[str, int] = field(default_factory=dict)
    valid: bool = False
    error: str | None = None


@dataclass
class SweepResult:
    parameter: str
    orders: tuple[int, ...]
    rows: list[PointResult]
    modes: tuple[str, ...] = ("a",)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])

    def column(self, mode: str, n: int) -> np.ndarray:
        return np.array([r.reports[mode].g.get(n, math.nan) if mode in r.reports else math.nan
                         for r in self.rows])

    def invalid_fraction(self) -> float:
        return sum(not r.valid for r in self.rows) / len(self.rows) if self.rows else 0.0


def _mode_dims(p: md.ModelSpec) -> dict[str, int]:
    if p.kind == "coupled_kerr":
        return {"a": p.dim_a, "b": p.dim_b}
    return {"a": p.cavity_dim}


def solve_point(params: md.ModelSpec, orders: Sequence[int], max_dim: int,
                tail_tol: float = 1e-8, value: float = math.nan, return_state: bool = False):
    """Steady state and correlations at one parameter point, escalating the truncation.

    Numerical failures are recorded on the returned row rather than raised.
    """
    row = PointResult(value)
    rho = None
    while True:
        row.dims = _mode_dims(params)
        try:
            model = md.build_model(params)
            L = build_liouvillian(model.hamiltonian, model.channels, model.symmetry)
            rho, info = steady_state(L, return_info=True)
        except BlockadeError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            row.valid = False
            return (row, rho) if return_state else row
        row.reports = {label: correlation_report(rho, slot, orders, label)
                       for label, slot in model.modes.items()}
        for rep in row.reports.values():
            rep.populations = None
        row.residual, row.gap_ratio = info.residual, info.gap_ratio
        tails_ok = all(rep.fock_tail <= tail_tol for rep in row.reports.values())
        if tails_ok or max(_dims(params).values()) + 2 > max_dim:
            break
        params = _grow(params)
    row.min_eigenvalue = rho.min_eigenvalue()
    row.valid = tails_ok and row.residual <= RESIDUAL_TOL and row.min_eigenvalue >= POSITIVITY_TOL
    if not tails_ok:
        row.error = f"Fock tail above {tail_tol:g} at max_dim={max_dim}"
    elif not row.valid:
        row.error = "steady state failed validity checks"
    return (row, rho) if return_state else row


def _solve_chunk(spec: SweepSpec, indexed_values: list[tuple[int, float]]):
    out = []
    for i, v in indexed_values:
        try:
            params = spec.params_at(v)
        except BlockadeError as exc:
            out.append((i, PointResult(v, error=f"{type(exc).__name__}: {exc}")))
            continue
        out.append((i, solve_point(params, spec.orders, spec.max_dim, spec.tail_tol, value=v)))
    return out


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Solve every grid point; rows come back in grid order regardless of ``workers``."""
    if spec.sweep is None:
        raise ConfigError("sweep.parameter", "the configuration has no sweep section")
    grid = [float(v) for v in spec.sweep.grid()]
    indexed = list(enumerate(grid))
    rows: list[PointResult | None] = [None] * len(grid)
    workers = max(1, int(workers))
    if workers == 1:
        results = [_solve_chunk(spec, indexed)]
    else:
        # static contiguous partition; aggregation by grid index
        chunks = [c.tolist() for c in np.array_split(np.arange(len(grid)), workers) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_chunk, spec, [indexed[i] for i in c]) for c in chunks]
            results = [f.result() for f in futures]
    for chunk in results:
        for i, row in chunk:
            rows[i] = row
    modes = ("a", "b") if spec.model.kind == "coupled_kerr" else ("a",)
    return SweepResult(spec.sweep.parameter, spec.orders, rows, modes)


@dataclass(frozen=True)
class BlockadeWindow:
    mode: str
    order: int
    start: float
    stop: float
    peak: float  # swept value where g(n) is largest inside the window
    start_index: int
    stop_index: int

    @property
    def center(self) -> float:
        return 0.5 * (self.start + self.stop)

    def contains(self, x: float) -> bool:
        return self.start <= x <= self.stop


def _classify_safe(gn: float, gn1: float) -> bool:
    if math.isnan(gn) or math.isnan(gn1):
        return False
    return classify_blockade(gn, gn1)


def find_blockade_windows(result: SweepResult, n: int, mode: str | None = None,
                          valid_only: bool = True) -> list[BlockadeWindow]:
    """Maximal contiguous runs of grid points where n-photon blockade holds."""
    if n not in result.orders or n + 1 not in result.orders:
        raise ContractError(f"orders {n} and {n + 1} are required, result has {result.orders}")
    windows = []
    for label in ([mode] if mode else result.modes):
        flags = []
        for r in result.rows:
            rep = r.reports.get(label)
            ok = rep is not None and (r.valid or not valid_only)
            flags.append(ok and _classify_safe(rep.g.get(n, math.nan), rep.g.get(n + 1, math.nan)))
        gvals = result.column(label, n)
        i = 0
        while i < len(flags):
            if not flags[i]:
                i += 1
                continue
            j = i
            while j + 1 < len(flags) and flags[j + 1]:
                j += 1
            k = i + int(np.nanargmax(gvals[i:j + 1]))
            rows = result.rows
            windows.append(BlockadeWindow(label, n, rows[i].value, rows[j].value, rows[k].value, i, j))
            i = j + 1
    return windows


# -- CSV --------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def emit_csv(result: SweepResult, path: str | os.PathLike) -> Path:
    """One line per (grid point, mode); unrecorded orders are left empty, undefined ones are ``nan``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in result.rows:
        for label in result.modes:
            rep = r.reports.get(label)
            gs = [rep.g.get(n) if rep else None for n in CSV_ORDERS]
            w.writerow([
                _fmt(r.value), label,
                _fmt(rep.mean_n if rep else math.nan),
                *(_fmt(g) for g in gs),
                _fmt(rep.fock_tail if rep else math.nan),
                _fmt(r.residual), _fmt(r.gap_ratio),
                _fmt(r.dims.get(label, 0)), _fmt(bool(r.valid)),
            ])
    path = Path(path)
    try:
        path.write_text(buf.getvalue(), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}", str(path)) from exc
    return path


def read_csv(path: str | os.PathLike) -> list[dict]:
    """Parse a file written by :func:`emit_csv`; empty fields become ``None``."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ContractError(f"unexpected CSV header in {path}")
        for rec in reader:
            row = {}
            for k, v in rec.items():
                if k == "mode":
                    row[k] = v
                elif k == "valid":
                    row[k] = v == "true"
                elif k == "dim":
                    row[k] = int(v)
                else:
                    row[k] = None if v == "" else float(v)
            out.append(row)
    return out


# -- analytic tables --------------------------------------------------------


def conditions(p: md.ModelSpec) -> list[tuple[str, float]]:
    """Predicted blockade detunings (and level spacings for the coupled model)."""
    if not p.drive.is_parametric:
        raise UnsupportedModelError("blockade conditions are tabulated for n-photon parametric drives only")
    n = p.drive.order
    if p.kind == "jc":
        lo, hi = md.jc_blockade_detunings(n, p.g)
        return [(f"delta (n={n}, lower dressed state)", lo), (f"delta (n={n}, upper dressed state)", hi)]
    if p.kind == "kerr":
        return [(f"delta (n={n})", md.kerr_blockade_detuning(n, p.U))]
    if n != 2:
        raise UnsupportedModelError(
            f"no closed form for n={n} in the coupled-cavity model: the n-excitation block "
            "grows with n and is only solved analytically for n=2"
        )
    dets, (left, right) = md.coupled_blockade_detunings(p.U, p.J)
    rows = [(f"delta (n=2, #{k + 1})", d) for k, d in enumerate(dets)]
    rows += [("spacing d left  = sqrt(4J^2+U^2)-U", left), ("spacing d right = sqrt(4J^2+U^2)+U", right)]
    return rows


def format_conditions(rows: Iterable[tuple[str, float]]) -> str:
    rows = list(rows)
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v: .6f}" for k, v in rows)


def _analytic_levels(p: md.ModelSpec, N: int) -> list[float] | None:
    if N == 0:
        return [0.0]
    if p.kind == "jc":
        return sorted(md.jc_eigenfrequencies(N, p.delta, p.g))
    if p.kind == "kerr":
        return [md.kerr_eigenfrequency(N, p.delta, p.U)]
    if N == 1:
        return sorted([p.delta - p.J, p.delta + p.J])
    if N == 2:
        levels, _ = md.coupled_two_photon_eigensystem(p.delta, p.U, p.J)
        return sorted(lv.frequency for lv in levels)
    return None


def spectrum(p: md.ModelSpec, max_excitation: int = 3) -> list[tuple[int, int, float, float | None]]:
    """Numerical vs closed-form levels of the undriven Hamiltonian, per excitation manifold.

    Rows are ``(excitation, branch, numerical, analytic-or-None)``. Only
    manifolds that the truncation represents completely are listed.
    """
    H = md.build_hamiltonian(md.undriven(p))
    charges = md.excitation_numbers(H.space)
    complete = min(d for m, d in zip(H.space.modes, H.space.dims) if m.kind == "boson") - 1
    rows = []
    for N in range(0, min(max_excitation, complete) + 1):
        idx = np.flatnonzero(charges == N)
        numeric = np.linalg.eigvalsh(H.matrix[np.ix_(idx, idx)])
        analytic = _analytic_levels(p, N)
        for j, w in enumerate(numeric):
            rows.append((N, j + 1, float(w), None if analytic is None else float(analytic[j])))
    return rows
