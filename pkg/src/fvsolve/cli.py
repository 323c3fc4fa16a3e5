"""Command-line front end.

``fvsolve <solve|resonance|converge|compare|preset> [--config PATH] ...``

Configuration files are line oriented: ``section.key = value`` with ``#``
comments.  Sections are ``system``, ``problem``, ``potential``, ``basis``,
``search``, ``numerics`` and ``output``.  Every run produces a list of
:class:`ResultRecord` objects, rendered as an aligned table, JSON or CSV.

Exit status: 0 on success, 1 when ``solve --require-roots`` finds nothing,
2 on numerical failure or an invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

from . import __version__
from .csbasis import BasisSpec, default_order
from .errors import ConfigError, FVError
from .fvcore import ChannelSpace, FVProblem, PhysicalSystem
from .linalg import DEFAULT_CF_MAX_DEPTH, DEFAULT_CF_TOL
from .potentials import PotentialModel, PotentialTerm, format_terms, parse_terms
from .solver import SearchWindow, SpectralResult, converge, find_bound_states, find_resonance

log = logging.getLogger(__name__)

__all__ = [
    "RunConfig",
    "ResultRecord",
    "parse_config",
    "run",
    "write_output",
    "preset_configs",
    "main",
    "EXIT_OK",
    "EXIT_NO_ROOTS",
    "EXIT_FAILURE",
]

EXIT_OK = 0
EXIT_NO_ROOTS = 1
EXIT_FAILURE = 2

KINDS = ("schrodinger", "fv0", "fv12")
FORMATS = ("table", "json", "csv")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """One fully specified computation.

    Exactly one of ``window`` (e_min, e_max) and ``guess`` is set.  ``l`` is
    used by the schrodinger and fv0 kinds, ``j`` by fv12.
    """

    kind: str = "schrodinger"
    l: int | None = 0
    j: float | None = None
    mass: float = 1.0
    c: float = 137.036
    vector: tuple[PotentialTerm, ...] = ()
    scalar: tuple[PotentialTerm, ...] = ()
    scalar_is_effective: bool = False
    n_max: int = 60
    b: float = 1.0
    theta: float = 0.0
    n_list: tuple[int, ...] = ()
    b_list: tuple[float, ...] = ()
    window: tuple[float, float] | None = None
    guess: complex | None = None
    grid_points: int = 200
    cf_tol: float = DEFAULT_CF_TOL
    cf_max_depth: int = DEFAULT_CF_MAX_DEPTH
    refine_tol: float = 1e-10
    quadrature_factor: float = 3.0
    format: str = "table"
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}", key="problem.kind")
        if self.kind == "fv12":
            if self.j is None or self.l is not None:
                raise ConfigError("fv12 needs problem.j and no problem.l", key="problem.j")
        elif self.l is None or self.j is not None:
            raise ConfigError(f"{self.kind} needs problem.l and no problem.j", key="problem.l")
        if (self.window is None) == (self.guess is None):
            raise ConfigError("give exactly one of search.window and search.guess", key="search")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ConfigError("window needs e_min < e_max", key="search.window")
        if self.guess is not None and self.guess.imag > 0:
            raise ConfigError("resonance guess must have Im <= 0", key="search.guess")
        for key, value in (("system.mass", self.mass), ("system.c", self.c), ("basis.b", self.b),
                           ("numerics.cf_tol", self.cf_tol), ("numerics.refine_tol", self.refine_tol),
                           ("numerics.quadrature_factor", self.quadrature_factor)):
            if not value > 0:
                raise ConfigError("must be positive", key=key)
        if self.n_max < 1:
            raise ConfigError("must be at least 1", key="basis.N")
        if self.grid_points < 8:
            raise ConfigError("must be at least 8", key="search.grid_points")
        if self.format not in FORMATS:
            raise ConfigError(f"unknown format {self.format!r}", key="output.format")

    # -- derived objects ---------------------------------------------------

    @property
    def channel(self) -> ChannelSpace:
        return ChannelSpace(self.kind, l=self.l, j=self.j)

    def problem(self, n_max: int | None = None, b: float | None = None) -> FVProblem:
        n = self.n_max if n_max is None else n_max
        ch = self.channel
        return FVProblem(
            PhysicalSystem(self.mass, self.c),
            ch,
            PotentialModel(self.vector, self.scalar, self.scalar_is_effective),
            BasisSpec(ch.ls[0], self.b if b is None else b, n, self.theta),
            cf_tol=self.cf_tol,
            cf_max_depth=self.cf_max_depth,
            quadrature_order=self.quadrature_order(n),
        )

    def quadrature_order(self, n_max: int) -> int:
        base = default_order(n_max)
        return max(n_max + 2, int(round(base * self.quadrature_factor / 3.0)))

    def search_window(self) -> SearchWindow:
        if self.window is None:
            raise ConfigError("this command needs search.window", key="search.window")
        return SearchWindow(self.window[0], self.window[1], self.grid_points, self.refine_tol)

    # -- echo ----------------------------------------------------------------

    def to_text(self) -> str:
        """Normalized configuration text; parses back to an equal RunConfig."""
        lines = [
            f"system.mass = {_num(self.mass)}",
            f"system.c = {_num(self.c)}",
            f"problem.kind = {self.kind}",
        ]
        if self.l is not None:
            lines.append(f"problem.l = {self.l}")
        if self.j is not None:
            lines.append(f"problem.j = {_num(self.j)}")
        lines += [
            f"potential.vector = {format_terms(self.vector)}",
            f"potential.scalar = {format_terms(self.scalar)}",
            f"potential.scalar_is_effective = {'true' if self.scalar_is_effective else 'false'}",
            f"basis.N = {self.n_max}",
            f"basis.b = {_num(self.b)}",
            f"basis.theta = {_num(self.theta)}",
        ]
        if self.n_list:
            lines.append("basis.n_list = " + " ".join(str(n) for n in self.n_list))
        if self.b_list:
            lines.append("basis.b_list = " + " ".join(_num(b) for b in self.b_list))
        if self.window is not None:
            lines.append(f"search.window = {_num(self.window[0])} {_num(self.window[1])}")
        if self.guess is not None:
            lines.append(f"search.guess = {_num(self.guess.real)} {_num(self.guess.imag)}")
        lines += [
            f"search.grid_points = {self.grid_points}",
            f"numerics.cf_tol = {_num(self.cf_tol)}",
            f"numerics.cf_max_depth = {self.cf_max_depth}",
            f"numerics.refine_tol = {_num(self.refine_tol)}",
            f"numerics.quadrature_factor = {_num(self.quadrature_factor)}",
            f"output.format = {self.format}",
        ]
        if self.path is not None:
            lines.append(f"output.path = {self.path}")
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return repr(float(x))


def _float(value: str, key: str) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", key=key) from None
    if not math.isfinite(x):
        raise ConfigError("must be finite", key=key)
    return x


def _int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", key=key) from None


def _bool(value: str, key: str) -> bool:
    v = value.lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected true or false, got {value!r}", key=key)


def _pair(value: str, key: str) -> tuple[float, float]:
    parts = value.replace(",", " ").split()
    if len(parts) != 2:
        raise ConfigError("expected two numbers", key=key)
    return _float(parts[0], key), _float(parts[1], key)


def _terms(value: str, key: str) -> tuple[PotentialTerm, ...]:
    try:
        return parse_terms(value)
    except ConfigError as exc:
        raise ConfigError(str(exc), key=key) from None


# key -> (RunConfig field, converter)
_KEYS = {
    "system.mass": ("mass", _float),
    "system.c": ("c", _float),
    "problem.kind": ("kind", lambda v, k: v.lower()),
    "problem.l": ("l", _int),
    "problem.j": ("j", _float),
    "potential.vector": ("vector", _terms),
    "potential.scalar": ("scalar", _terms),
    "potential.scalar_is_effective": ("scalar_is_effective", _bool),
    "basis.N": ("n_max", _int),
    "basis.b": ("b", _float),
    "basis.theta": ("theta", _float),
    "basis.n_list": ("n_list", lambda v, k: tuple(_int(x, k) for x in v.replace(",", " ").split())),
    "basis.b_list": ("b_list", lambda v, k: tuple(_float(x, k) for x in v.replace(",", " ").split())),
    "search.window": ("window", _pair),
    "search.guess": ("guess", lambda v, k: complex(*_pair(v, k))),
    "search.grid_points": ("grid_points", _int),
    "numerics.cf_tol": ("cf_tol", _float),
    "numerics.cf_max_depth": ("cf_max_depth", _int),
    "numerics.refine_tol": ("refine_tol", _float),
    "numerics.quadrature_factor": ("quadrature_factor", _float),
    "output.format": ("format", lambda v, k: v.lower()),
    "output.path": ("path", lambda v, k: v),
}


def parse_config(text: str) -> RunConfig:
    """Parse ``section.key = value`` lines into a :class:`RunConfig`.

    Unknown or repeated keys are rejected with their line number.  Keys that
    are absent keep the defaults (m = 1, c = 137.036, cf_tol = 1e-12,
    refine_tol = 1e-10).
    """
    values: dict[str, object] = {}
    seen: set[str] = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {line!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=number)
        if key in seen:
            raise ConfigError(f"key {key!r} given twice", line=number)
        seen.add(key)
        name, convert = _KEYS[key]
        try:
            values[name] = convert(value, key)
        except ConfigError as exc:
            raise ConfigError(str(exc), line=number) from None
    # the angular field follows the kind unless given explicitly
    if values.get("kind") == "fv12" and "l" not in values:
        values["l"] = None
    try:
        return RunConfig(**values)
    except TypeError as exc:  # pragma: no cover - guarded by _KEYS
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

_TABLE1_VECTOR = "coulomb 92, screened -240 1, screened 320 4"


def _preset_base(name: str) -> RunConfig:
    if name == "table1":
        return RunConfig(vector=parse_terms(_TABLE1_VECTOR), n_max=100, b=4.0,
                         window=(-10.0, -1.0), grid_points=60)
    if name == "table2":
        return RunConfig(vector=parse_terms("coulomb -1"), scalar=parse_terms("linear 1"),
                         scalar_is_effective=True, n_max=60, b=0.5, window=(0.0, 7.5), grid_points=120)
    if name == "table3":
        return RunConfig(vector=parse_terms("coulomb -1"), scalar=parse_terms("quadratic 0.5"),
                         scalar_is_effective=True, n_max=60, b=0.5, window=(0.0, 12.5), grid_points=120)
    raise ConfigError(f"unknown preset {name!r}; choose table1, table2 or table3")


def _variant(base: RunConfig, kind: str, l: int, **changes) -> RunConfig:
    """``base`` retargeted to the column (kind, orbital l)."""
    if kind == "fv12":
        j = 0.5 if l == 0 else l - 0.5
        return replace(base, kind=kind, l=None, j=j, **changes)
    return replace(base, kind=kind, l=l, j=None, **changes)


def preset_configs(name: str) -> list[tuple[str, RunConfig]]:
    """Column label and configuration for every run of a preset."""
    base = _preset_base(name)
    out = []
    if name == "table1":
        for kind in KINDS:
            out.append((f"{kind} bound", _variant(base, kind, 0)))
        for kind in KINDS:
            out.append((f"{kind} resonance",
                        _variant(base, kind, 0, window=None, guess=complex(15.6, -1e-5), theta=0.1)))
        return out
    for l in (0, 1):
        for kind in KINDS:
            out.append((f"{_column_name(kind)} (l={l})", _variant(base, kind, l)))
    return out


def _column_name(kind: str) -> str:
    return {"schrodinger": "Schr", "fv0": "FV0", "fv12": "FV1/2"}[kind]


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResultRecord:
    """A spectral result together with the configuration that produced it."""

    energy: complex
    kind: str
    determinant_residual: float
    n_max: int
    b: float
    cf_depth: int
    channel: str
    dominant_l: int | None
    multiplicity: int
    channel_weights: tuple[float, ...]
    column: str
    config: str
    wall_time: float | None
    version: str = __version__

    @classmethod
    def from_result(cls, res: SpectralResult, cfg: RunConfig, column: str, wall_time: float | None):
        return cls(
            res.energy, res.kind, res.determinant_residual, res.n_max, res.b, res.cf_depth,
            res.channel, res.dominant_l, res.multiplicity, tuple(res.channel_weights),
            column, cfg.to_text(), wall_time,
        )

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["energy"] = {"re": self.energy.real, "im": self.energy.imag}
        d["channel_weights"] = list(self.channel_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        d = dict(d)
        d["energy"] = complex(d["energy"]["re"], d["energy"]["im"])
        d["channel_weights"] = tuple(d["channel_weights"])
        return cls(**d)


@dataclass
class RunOutput:
    records: list[ResultRecord] = field(default_factory=list)
    status: int = EXIT_OK
    layout: str = "list"  # list | grid | table1 | converge
    notes: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _solve(cfg: RunConfig, column: str, threads: int | None, timed: bool) -> list[ResultRecord]:
    t0 = time.perf_counter()
    results = find_bound_states(cfg.problem(), cfg.search_window(), threads)
    dt = time.perf_counter() - t0 if timed else None
    return [ResultRecord.from_result(r, cfg, column, dt) for r in results]


def _resonance(cfg: RunConfig, column: str, timed: bool) -> list[ResultRecord]:
    if cfg.guess is None:
        raise ConfigError("this command needs search.guess", key="search.guess")
    t0 = time.perf_counter()
    res = find_resonance(cfg.problem(), cfg.guess, theta=cfg.theta or None)
    dt = time.perf_counter() - t0 if timed else None
    return [ResultRecord.from_result(res, cfg, column, dt)]


def _columns(base: RunConfig, l: int) -> list[tuple[str, RunConfig]]:
    return [(f"{_column_name(kind)} (l={l})", _variant(base, kind, l)) for kind in KINDS]


def _grid_records(runs, threads: int | None, timed: bool) -> list[ResultRecord]:
    """Bound states per column; fv12 columns keep the states dominated by the column's l."""
    records = []
    done: dict[RunConfig, list[ResultRecord]] = {}
    for column, cfg in runs:
        # both fv12 columns of a grid can come from the same j
        if cfg not in done:
            done[cfg] = _solve(cfg, column, threads, timed)
        recs = [replace(r, column=column) for r in done[cfg]]
        if cfg.kind == "fv12":
            l = int(column.split("l=")[1].rstrip(")"))
            recs = [r for r in recs if r.dominant_l == l]
        records += recs
    return records


def run(command: str, config: RunConfig | str | None, threads: int | None = None) -> RunOutput:
    """Execute ``command``; ``config`` is the preset name for ``preset``."""
    if command == "preset":
        if not isinstance(config, str):
            raise ConfigError("preset needs a name: table1, table2 or table3")
        runs = preset_configs(config)
        if config == "table1":
            records = []
            for column, cfg in runs:
                if cfg.guess is None:
                    recs = _solve(cfg, column, threads, timed=False)
                    records += [r for r in recs if r.dominant_l in (None, 0)][:1]
                else:
                    records += _resonance(cfg, column, timed=False)
            return RunOutput(records, layout="table1")
        return RunOutput(_grid_records(runs, threads, timed=False), layout="grid")
    if not isinstance(config, RunConfig):
        raise ConfigError(f"{command} needs a configuration file (--config)")
    if command == "solve":
        records = _solve(config, config.channel.label(), threads, timed=True)
        return RunOutput(records, EXIT_OK if records else EXIT_NO_ROOTS)
    if command == "resonance":
        return RunOutput(_resonance(config, config.channel.label(), timed=True))
    if command == "converge":
        window = config.search_window()
        n_list = config.n_list or tuple(sorted({max(1, config.n_max // 2), max(1, 3 * config.n_max // 4), config.n_max}))
        b_list = config.b_list or (config.b,)
        t0 = time.perf_counter()
        report = converge(config.problem(), n_list, b_list, window, threads)
        dt = time.perf_counter() - t0
        records = []
        for (N, b, _), res in zip(report.rows, report.results):
            if res is not None:
                cfg = replace(config, n_max=N, b=b)
                records.append(ResultRecord.from_result(res, cfg, f"N={N} b={_num(b)}", dt))
        notes = [f"b={_num(b)}: {'converged' if ok else 'not converged'}" for b, ok in report.converged.items()]
        if report.recommended:
            notes.append(f"recommended N={report.recommended[0]} b={_num(report.recommended[1])}")
        notes += report.errors
        return RunOutput(records, layout="converge", notes=notes)
    if command == "compare":
        l = config.l if config.l is not None else int(round(config.j - 0.5))
        return RunOutput(_grid_records(_columns(config, l), threads, timed=True), layout="grid")
    raise ConfigError(f"unknown command {command!r}")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _to_json(records: Sequence[ResultRecord]) -> str:
    # floats are written with 17 significant digits through placeholders,
    # since the json module offers no float formatting hook
    floats: list[str] = []

    def mark(x: float) -> str:
        floats.append(_g17(x))
        return f"\x00{len(floats) - 1}\x00"

    rows = []
    for rec in records:
        d = rec.to_dict()
        d["energy"] = {"re": mark(rec.energy.real), "im": mark(rec.energy.imag)}
        d["determinant_residual"] = mark(rec.determinant_residual)
        d["b"] = mark(rec.b)
        d["channel_weights"] = [mark(w) for w in rec.channel_weights]
        if rec.wall_time is not None:
            d["wall_time"] = mark(rec.wall_time)
        rows.append(d)
    text = json.dumps(rows, indent=2, ensure_ascii=False)
    for i, s in enumerate(floats):
        text = text.replace(f'"\\u0000{i}\\u0000"', s, 1)
    return text + "\n"


CSV_COLUMNS = ("energy_re", "energy_im", "kind", "N", "b", "cf_depth", "residual", "channel", "dominant_l", "column")


def _to_csv(records: Sequence[ResultRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([
            _g17(r.energy.real), _g17(r.energy.imag), r.kind, r.n_max, _g17(r.b), r.cf_depth,
            _g17(r.determinant_residual), r.channel, "" if r.dominant_l is None else r.dominant_l, r.column,
        ])
    return buf.getvalue()


def _g7(x: float) -> str:
    return format(x, ".7g")


def _table_list(records: Sequence[ResultRecord]) -> str:
    head = ("energy", "kind", "N", "b", "depth", "residual", "channel", "dom l")
    rows = []
    for r in records:
        e = _g7(r.energy.real) if r.energy.imag == 0 else f"{_g7(r.energy.real)} {r.energy.imag:+.3g}i"
        rows.append((e, r.kind, str(r.n_max), _g7(r.b), str(r.cf_depth), f"{r.determinant_residual:.1e}",
                     r.channel, "" if r.dominant_l is None else str(r.dominant_l)))
    return _align([head] + rows)


def _table_grid(records: Sequence[ResultRecord]) -> str:
    columns: list[str] = []
    values: dict[str, list[str]] = {}
    for r in records:
        if r.column not in values:
            columns.append(r.column)
            values[r.column] = []
        values[r.column].append(_g7(r.energy.real))
    depth = max((len(v) for v in values.values()), default=0)
    rows = [tuple(values[c][i] if i < len(values[c]) else "" for c in columns) for i in range(depth)]
    return _align([tuple(columns)] + rows)


def _table1(records: Sequence[ResultRecord]) -> str:
    by = {r.column: r for r in records}
    head = ("", "Schr", "FV0", "FV1/2")
    bound = ["bound"] + [_g7(by[f"{k} bound"].energy.real) if f"{k} bound" in by else "" for k in KINDS]
    re = ["resonance Re"] + [_g7(by[f"{k} resonance"].energy.real) if f"{k} resonance" in by else "" for k in KINDS]
    im = ["resonance Im"] + [f"{by[f'{k} resonance'].energy.imag:.2g}" if f"{k} resonance" in by else "" for k in KINDS]
    return _align([head, tuple(bound), tuple(re), tuple(im)])


def _align(rows: list[tuple[str, ...]]) -> str:
    if not rows or not rows[0]:
        return ""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def write_output(records: Sequence[ResultRecord], fmt: str, layout: str = "list", notes: Sequence[str] = ()) -> bytes:
    """Render records as ``table``, ``json`` or ``csv`` (UTF-8 bytes)."""
    if fmt == "json":
        return _to_json(records).encode()
    if fmt == "csv":
        return _to_csv(records).encode()
    if fmt != "table":
        raise ConfigError(f"unknown format {fmt!r}", key="output.format")
    if not records:
        text = "no states found\n"
    elif layout == "grid":
        text = _table_grid(records)
    elif layout == "table1":
        text = _table1(records)
    else:
        text = _table_list(records)
    if notes:
        text += "".join(f"# {n}\n" for n in notes)
    return text.encode()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fvsolve", description="Feshbach-Villars spectra in a Coulomb-Sturmian basis.")
    p.add_argument("command", choices=("solve", "resonance", "converge", "compare", "preset"))
    p.add_argument("preset", nargs="?", help="preset name for the preset command: table1, table2, table3")
    p.add_argument("--config", metavar="PATH", help="configuration file")
    p.add_argument("--format", choices=FORMATS, help="output format (default: output.format or table)")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--threads", type=int, metavar="K", help="energy-scan threads (default: all cores)")
    p.add_argument("--require-roots", action="store_true", help="solve: exit 1 when no state is found")
    p.add_argument("--verbose", action="store_true", help="progress and timing on stderr")
    p.add_argument("--version", action="version", version=f"fvsolve {__version__}")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        if args.command == "preset":
            if args.preset is None:
                raise ConfigError("preset needs a name: table1, table2 or table3")
            cfg = None
            target: RunConfig | str = args.preset
        else:
            if args.preset is not None:
                raise ConfigError(f"unexpected argument {args.preset!r}")
            if not args.config:
                raise ConfigError(f"{args.command} needs --config PATH")
            try:
                with open(args.config, encoding="utf-8") as fh:
                    cfg = parse_config(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
            target = cfg
        t0 = time.perf_counter()
        out = run(args.command, target, args.threads)
        log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"fvsolve: configuration error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FVError as exc:
        context = f" at E = {exc.energy}" if getattr(exc, "energy", None) is not None and _scalar(exc.energy) else ""
        print(f"fvsolve: numerical failure{context}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    fmt = args.format or (cfg.format if cfg else "table")
    path = args.out or (cfg.path if cfg else None)
    data = write_output(out.records, fmt, out.layout, out.notes)
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    if args.command == "solve" and args.require_roots and out.status == EXIT_NO_ROOTS:
        return EXIT_NO_ROOTS
    return EXIT_OK


def _scalar(x) -> bool:
    try:
        complex(x)
        return True
    except (TypeError, ValueError):
        return False


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
