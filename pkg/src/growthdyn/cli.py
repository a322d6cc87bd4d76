"""Command-line batch runner: CSV ingestion, run configuration and report files.

``growthdyn run`` reads emissions and GDP panels, fits growth-rate
distributions, binned volatility scaling and the convergence model per period
and over moving windows, and writes CSV tables plus a JSON manifest.
``growthdyn synth`` writes a synthetic panel in the input schema.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import platform
import re
import sys
import tempfile
import time
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .convergence import fit_lad
from .distributions import PARAM_NAMES as AEP_PARAMS, fit_mle
from .errors import (
    ConfigError,
    DuplicateRecord,
    GrowthDynError,
    JoinError,
    NonPositiveValue,
    ParseError,
    SchemaError,
)
from .panel import CANONICAL_PERIODS, PeriodDefinition, RegionYearObservation, build_panel, restrict
from .scaling import binned_volatility, fit_scaling
from .synth import GdpProcess, GeneratorSpec, ResidualLaw, generate_panel, write_csv
from .windows import PHASE_MARKERS, run_moving_windows

log = logging.getLogger("growthdyn")

EXIT_OK, EXIT_ESTIMATION, EXIT_INPUT, EXIT_LOCKED = 0, 1, 2, 3
LOCK_NAME = ".growthdyn.lock"
MANIFEST = "manifest.json"
TIMING = "timing.json"
VARIABLES = ("gdp", "emissions")
GROWTH = {"gdp": "g", "emissions": "r"}
COEFS = ("alpha", "phi", "beta")


# --- ingestion -----------------------------------------------------------------


def _parse_number(text, path, line, what):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{path}:{line}: cannot parse {what} {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"{path}:{line}: {what} is not finite ({text!r})")
    return v


def _parse_year(text, path, line):
    try:
        return int(text.strip())
    except ValueError:
        raise ParseError(f"{path}:{line}: cannot parse year {text!r}") from None


def read_table(path, variables=VARIABLES):
    """Read one long or wide CSV file.

    Long files have a ``region_id,year`` header followed by value columns named
    after the variables (a single ``value`` column is read as the only entry of
    ``variables``) and an optional ``dev_class`` column. Wide files have a
    ``region_id`` column followed by one column per year and hold the single
    variable in ``variables``. Returns ``({variable: {(region, year): value}},
    {region: dev_class})``.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if any(cell.strip() for cell in row):
                header = [c.strip() for c in row]
                break
        if header is None:
            raise SchemaError(f"{path}: file has no header")
        hline = reader.line_num
        if len(set(header)) != len(header):
            raise SchemaError(f"{path}:{hline}: duplicate column names in header {header}")
        if header[:2] == ["region_id", "year"]:
            layout = "long"
            extra = header[2:]
            if extra == ["value"] and len(variables) == 1:
                header[2] = variables[0]
                extra = [variables[0]]
            unknown = [c for c in extra if c not in variables and c != "dev_class"]
            value_cols = [c for c in extra if c in variables]
            if unknown or not value_cols:
                raise SchemaError(
                    f"{path}:{hline}: expected columns region_id,year,<{'|'.join(variables)}>[,dev_class], "
                    f"got {','.join(header)}"
                )
        elif header and header[0] == "region_id" and len(header) > 1:
            layout = "wide"
            if len(variables) != 1:
                raise SchemaError(f"{path}:{hline}: wide layout holds one variable; pass it separately")
            year_cols = {}
            for k, c in enumerate(header[1:], start=1):
                if c == "dev_class":
                    continue
                if not re.fullmatch(r"\d{4}", c):
                    raise SchemaError(f"{path}:{hline}: wide header column {c!r} is not a year")
                year_cols[k] = int(c)
            value_cols = list(variables)
        else:
            raise SchemaError(f"{path}:{hline}: unrecognised header {','.join(header)}")

        values = {v: {} for v in value_cols}
        lines = {}
        dev = {}
        for row in reader:
            line = reader.line_num
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            cells = dict(zip(header, (c.strip() for c in row)))
            rid = cells["region_id"]
            if not rid:
                raise ParseError(f"{path}:{line}: empty region_id")
            if cells.get("dev_class"):
                dev.setdefault(rid, cells["dev_class"])
            if layout == "long":
                items = [(_parse_year(cells["year"], path, line), c, cells[c]) for c in value_cols]
            else:
                items = [(year_cols[k], value_cols[0], row[k].strip()) for k in sorted(year_cols)]
            for year, var, text in items:
                v = _parse_number(text, path, line, var)
                if v <= 0:
                    raise NonPositiveValue(
                        f"{path}:{line}: {var} for {rid}/{year} must be positive, got {text!r}",
                        region_id=rid, year=year, source=str(path), line=line,
                    )
                key = (rid, year)
                if key in values[var]:
                    raise DuplicateRecord(f"{path}:{line}: duplicate {var} record for {rid}/{year} "
                                          f"(first on line {lines[(var, key)]})")
                values[var][key] = v
                lines[(var, key)] = line
    return values, dev


def ingest(emissions=None, gdp=None, combined=None):
    """Read and join emissions and GDP files into RegionYearObservation records.

    Either ``combined`` (one long file with both columns) or both ``emissions``
    and ``gdp`` must be given.
    """
    values, dev = {}, {}
    if combined is not None:
        vals, d = read_table(combined, VARIABLES)
        values.update(vals)
        dev.update(d)
    for var, path in (("emissions", emissions), ("gdp", gdp)):
        if path is None:
            continue
        vals, d = read_table(path, (var,))
        if var in values:
            raise SchemaError(f"{path}: {var} is supplied by more than one input file")
        values.update(vals)
        for k, v in d.items():
            dev.setdefault(k, v)
    absent = [v for v in VARIABLES if v not in values]
    if absent:
        raise SchemaError(f"no input provides {', '.join(absent)}")

    e, g = values["emissions"], values["gdp"]
    missing = sorted(("gdp", *k) for k in e.keys() - g.keys()) + sorted(("emissions", *k) for k in g.keys() - e.keys())
    if missing:
        head = ", ".join(f"{src} missing {rid}/{yr}" for src, rid, yr in missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise JoinError(f"region-years present in one file only: {head}{more}", missing)
    return [
        RegionYearObservation(rid, year, e[(rid, year)], g[(rid, year)], dev.get(rid))
        for rid, year in sorted(e)
    ]


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# --- configuration -------------------------------------------------------------

CONFIG_KEYS = {
    "input_emissions", "input_gdp", "input_combined", "year_range", "periods", "window_length", "bins",
    "bootstrap", "window_bootstrap", "seed", "out", "average_periods", "windows", "residuals",
}
_CANONICAL = {p.name.lower(): p for p in CANONICAL_PERIODS}


def parse_period(spec) -> PeriodDefinition:
    """``"pre-ETS"`` (canonical name), ``"1995-2004"``, ``"name=1995-2004"`` or a mapping."""
    if isinstance(spec, PeriodDefinition):
        return spec
    if isinstance(spec, dict):
        try:
            return PeriodDefinition(str(spec["name"]), int(spec["start"]), int(spec["end"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad period mapping {spec!r}: {exc}") from None
    text = str(spec).strip()
    if text.lower() in _CANONICAL:
        return _CANONICAL[text.lower()]
    m = re.fullmatch(r"(?:(?P<name>[^=]+)=)?(?P<start>\d{4})-(?P<end>\d{4})", text)
    if not m:
        raise ConfigError(f"cannot parse period {text!r}")
    start, end = int(m["start"]), int(m["end"])
    if start > end:
        raise ConfigError(f"period {text!r} ends before it starts")
    return PeriodDefinition(m["name"] or f"{start}-{end}", start, end)


def period_slug(period: PeriodDefinition) -> str:
    return re.sub(r"[^a-z0-9]+", "-", period.name.lower()).strip("-") or f"{period.start_year}-{period.end_year}"


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out: Path
    input_emissions: Optional[Path] = None
    input_gdp: Optional[Path] = None
    input_combined: Optional[Path] = None
    year_range: Optional[tuple] = None
    periods: tuple = CANONICAL_PERIODS
    window_length: int = 5
    bins: int = 20
    bootstrap: int = 500
    window_bootstrap: int = 200
    average_periods: tuple = (PeriodDefinition("pre-ETS", 1990, 2004), PeriodDefinition("ETS", 2005, 2020))
    windows: bool = True
    residuals: bool = True

    def __post_init__(self):
        if self.input_combined is None and (self.input_emissions is None or self.input_gdp is None):
            raise ConfigError("give input_combined, or both input_emissions and input_gdp")
        for p in (self.input_emissions, self.input_gdp, self.input_combined):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"input file not found: {p}")
        for name in ("bootstrap", "window_bootstrap"):
            b = getattr(self, name)
            if b != 0 and b < 100:
                raise ConfigError(f"{name} must be 0 (no standard errors) or at least 100, got {b}")
        if self.window_length < 2:
            raise ConfigError("window_length must be at least 2")
        if self.bins < 3:
            raise ConfigError("bins must be at least 3")
        if len(self.average_periods) != 2:
            raise ConfigError("average_periods must name exactly two periods")
        slugs = [period_slug(p) for p in self.periods]
        if len(set(slugs)) != len(slugs):
            raise ConfigError(f"period names collide in file names: {slugs}")

    def describe(self) -> dict:
        """Deterministic, output-location-free summary for the manifest."""
        d = asdict(self)
        d.pop("out")
        for k in ("input_emissions", "input_gdp", "input_combined"):
            d[k] = None if d[k] is None else str(d[k])
        d["periods"] = [asdict(p) for p in self.periods]
        d["average_periods"] = [asdict(p) for p in self.average_periods]
        d["year_range"] = None if self.year_range is None else list(self.year_range)
        return d


def load_config_file(path) -> dict:
    import yaml

    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    for k in ("input_emissions", "input_gdp", "input_combined", "out"):
        if data.get(k) is not None:
            data[k] = str((path.parent / str(data[k])).resolve()) if not Path(str(data[k])).is_absolute() else data[k]
    return data


def _year_range(v):
    if v is None:
        return None
    if isinstance(v, str):
        m = re.fullmatch(r"\s*(\d{4})\s*-\s*(\d{4})\s*", v)
        if not m:
            raise ConfigError(f"cannot parse year range {v!r}")
        v = (m[1], m[2])
    try:
        a, b = (int(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(f"year_range must be two years, got {v!r}") from None
    if a > b:
        raise ConfigError(f"year_range {a}-{b} is empty")
    return (a, b)


def _as_int(d, key):
    try:
        return int(d[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {d[key]!r}") from None


def make_config(values: dict) -> RunConfig:
    """Build a RunConfig from merged config-file and flag values."""
    v = {k: val for k, val in values.items() if val is not None}
    if "seed" not in v:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    if "out" not in v:
        raise ConfigError("an output directory is required (config key 'out' or --out)")
    kw = {"seed": _as_int(v, "seed"), "out": Path(v["out"])}
    for k in ("input_emissions", "input_gdp", "input_combined"):
        if k in v:
            kw[k] = Path(v[k])
    for k in ("window_length", "bins", "bootstrap", "window_bootstrap"):
        if k in v:
            kw[k] = _as_int(v, k)
    for k in ("windows", "residuals"):
        if k in v:
            kw[k] = bool(v[k])
    kw["year_range"] = _year_range(v.get("year_range"))
    for k in ("periods", "average_periods"):
        if k in v:
            items = v[k].split(",") if isinstance(v[k], str) else v[k]
            kw[k] = tuple(parse_period(p) for p in items)
    return RunConfig(**kw)


# --- output helpers ------------------------------------------------------------


def fmt(v) -> str:
    """Six significant digits; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.6g}"


def stars(p) -> str:
    if p is None or math.isnan(p):
        return ""
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def table_cell(est, se=None, p=None) -> str:
    """Three-decimal presentation: estimate, stars, standard error in parentheses."""
    text = f"{est:.3f}{stars(p)}"
    if se is not None and not math.isnan(se):
        text += f" ({se:.3f})"
    return text


class _Outputs:
    """Atomic writer that keeps the digest of every file it produced."""

    def __init__(self, out: Path):
        self.out = out
        self.files = {}

    def write_bytes(self, name: str, data: bytes):
        fd, tmp = tempfile.mkstemp(dir=self.out, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, self.out / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.files[name] = hashlib.sha256(data).hexdigest()

    def write_csv(self, name: str, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_csv_field(c) for c in row))
        self.write_bytes(name, ("\n".join(lines) + "\n").encode("utf-8"))


def _csv_field(c) -> str:
    s = c if isinstance(c, str) else fmt(c)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def derive_seed(seed: int, *keys) -> int:
    """Child seed for one estimation step, independent of the order steps run in."""
    words = [int(seed)] + [k if isinstance(k, int) else zlib.crc32(str(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1)[0])


def _phase_of(year: int) -> str:
    names = ("pre-ETS", "ETS-1", "ETS-2", "ETS-3", "post-ETS-3")
    return names[sum(year >= m for m in PHASE_MARKERS)]


# --- run -----------------------------------------------------------------------


@dataclass
class RunResult:
    exit_code: int
    outputs: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    results: dict = field(default_factory=dict)


class LockHeld(GrowthDynError):
    pass


class _Lock:
    def __init__(self, out: Path):
        self.path = out / LOCK_NAME
        self.fd = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockHeld(f"{self.path} exists: another run is using this output directory "
                              "(remove the lock file if that run has died)") from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        os.close(self.fd)
        os.unlink(self.path)


def _versions():
    import numba
    import scipy

    return {
        "growthdyn": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _record(errors, step, exc):
    log.error("%s: %s: %s", step, type(exc).__name__, exc)
    errors.append({"step": step, "error": type(exc).__name__, "message": str(exc)})


def _aep_rows(fit):
    return [
        (name, fit.params.as_dict()[name], fit.std_errors[name],
         table_cell(fit.params.as_dict()[name], fit.std_errors[name]))
        for name in AEP_PARAMS
    ]


def _run_steps(cfg: RunConfig, panel, outs: _Outputs, errors: list, results: dict):
    for period in cfg.periods:
        slug = period_slug(period)
        step = f"period {period.label}"
        try:
            view = restrict(panel, period)
        except GrowthDynError as exc:
            _record(errors, step, exc)
            continue

        for var in VARIABLES:
            try:
                sample = getattr(view, GROWTH[var]).ravel()
                fit = fit_mle(sample, seed=derive_seed(cfg.seed, "aep", var, period.start_year, period.end_year))
                outs.write_csv(f"aep_{var}_{slug}.csv", ("parameter", "estimate", "std_error", "table"), _aep_rows(fit))
                results[f"aep_{var}_{slug}"] = {
                    "n": fit.n, "log_likelihood": float(fmt(fit.log_likelihood)),
                    "converged": fit.converged, "se_method": fit.se_method,
                }
                if not fit.converged:
                    errors.append({"step": f"aep {var} {period.label}", "error": "NoConvergence",
                                   "message": "distribution fit did not converge"})
            except GrowthDynError as exc:
                _record(errors, f"aep {var} {period.label}", exc)

            try:
                bins = binned_volatility(panel, var, period, n_bins=cfg.bins)
                sc = fit_scaling(bins)
                outs.write_csv(
                    f"scaling_{var}_{slug}.csv",
                    ("bin", "bin_center", "sigma", "count", "fitted_sigma"),
                    [(k, b.bin_center, b.sigma, b.count, math.exp(sc.intercept + sc.beta * b.bin_center))
                     for k, b in enumerate(bins)],
                )
                results[f"scaling_{var}_{slug}"] = {
                    k: float(fmt(getattr(sc, k))) for k in ("beta", "intercept", "beta_se", "r_squared")
                }
            except (GrowthDynError, ValueError) as exc:
                _record(errors, f"scaling {var} {period.label}", exc)

        try:
            fit = fit_lad(panel, period, n_boot=cfg.bootstrap,
                          seed=derive_seed(cfg.seed, "lad", period.start_year, period.end_year),
                          raise_on_failure=False)
        except GrowthDynError as exc:
            _record(errors, f"convergence {period.label}", exc)
            continue
        se = fit.std_errors or {}
        pv = fit.p_values or {}
        outs.write_csv(
            f"convergence_{slug}.csv",
            ("parameter", "estimate", "std_error", "p_value", "stars", "table", "converged"),
            [(c, getattr(fit, c), se.get(c), pv.get(c), stars(pv.get(c, math.nan)),
              table_cell(getattr(fit, c), se.get(c, math.nan), pv.get(c, math.nan)), fit.converged)
             for c in COEFS],
        )
        results[f"convergence_{slug}"] = {
            "n_obs": fit.n_obs, "objective": float(fmt(fit.objective)), "converged": fit.converged,
            "alpha_sign": fit.diagnostics["alpha_sign"],
        }
        if not fit.converged:
            errors.append({"step": f"convergence {period.label}", "error": "NoConvergence",
                           "message": "iteration cap reached; estimates are the last iterate"})
        if cfg.residuals:
            outs.write_csv(
                f"residuals_{slug}.csv", ("region_id", "year", "residual"),
                zip(fit.residual_regions, fit.residual_years.tolist(), fit.residuals.tolist()),
            )

    if cfg.windows:
        _run_windows(cfg, panel, outs, errors, results)
    _period_averages(cfg, panel, outs, errors)


def _run_windows(cfg, panel, outs, errors, results):
    try:
        ws = run_moving_windows(panel, cfg.window_length, n_boot=cfg.window_bootstrap,
                                seed=derive_seed(cfg.seed, "windows"))
    except GrowthDynError as exc:
        _record(errors, "moving windows", exc)
        return
    header = ["start_year", "end_year", "phase"]
    for c in COEFS:
        header += [c, f"{c}_se", f"{c}_p"]
    header += [f"aep_{k}" for k in AEP_PARAMS] + ["ok", "error"]
    rows, resid_rows = [], []
    for e in ws.entries:
        row = [e.start_year, e.end_year, _phase_of(e.end_year)]
        se = (e.fit.std_errors or {}) if e.fit else {}
        pv = (e.fit.p_values or {}) if e.fit else {}
        for c in COEFS:
            row += [getattr(e.fit, c) if e.fit else None, se.get(c), pv.get(c)]
        row += [e.aep.params.as_dict()[k] if e.aep else None for k in AEP_PARAMS]
        row += [e.ok, e.error or ""]
        rows.append(row)
        if not e.ok:
            errors.append({"step": f"window {e.label}", "error": (e.error or "").split(":")[0],
                           "message": e.error})
        if e.fit is not None and cfg.residuals:
            resid_rows += [(e.label, r, y, v) for r, y, v in
                           zip(e.fit.residual_regions, e.fit.residual_years.tolist(), e.fit.residuals.tolist())]
    outs.write_csv("windows.csv", header, rows)
    if cfg.residuals:
        outs.write_csv("residuals_windows.csv", ("window", "region_id", "year", "residual"), resid_rows)
    results["windows"] = {"count": len(ws), "failed": len(ws.failures), "phase_markers": list(ws.phase_markers)}


def _period_averages(cfg, panel, outs, errors):
    cols, header = [], ["region_id", "dev_class"]
    try:
        for p in cfg.average_periods:
            view = restrict(panel, p)
            slug = period_slug(p)
            cols += [view.g.mean(axis=1), view.r.mean(axis=1)]
            header += [f"mean_g_{slug}", f"mean_r_{slug}"]
    except GrowthDynError as exc:
        _record(errors, "period averages", exc)
        return
    rows = [[rid, panel.dev_class.get(rid) or ""] + [c[i] for c in cols] for i, rid in enumerate(panel.regions)]
    outs.write_csv("period_averages.csv", header, rows)


def _manifest(outs, cfg, versions, inputs, panel_info, results, errors, exit_code):
    doc = {
        "status": "ok" if exit_code == EXIT_OK else "failed",
        "exit_code": exit_code,
        "seed": None if cfg is None else cfg.seed,
        "config": None if cfg is None else cfg.describe(),
        "versions": versions,
        "inputs": inputs,
        "panel": panel_info,
        "outputs": dict(sorted(outs.files.items())) if outs else {},
        "results": results,
        "errors": errors,
    }
    return (json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n").encode("utf-8")


def run(cfg: RunConfig) -> RunResult:
    """Execute a configured run; every failure is recorded in the manifest."""
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    errors, results = [], {}
    with _Lock(out):
        outs = _Outputs(out)
        versions = _versions()
        inputs = [
            {"role": role, "path": str(p), "sha256": file_sha256(p)}
            for role, p in (("emissions", cfg.input_emissions), ("gdp", cfg.input_gdp),
                            ("combined", cfg.input_combined)) if p is not None
        ]
        panel_info = None
        exit_code = EXIT_OK
        try:
            obs = ingest(cfg.input_emissions, cfg.input_gdp, cfg.input_combined)
            if cfg.year_range is not None:
                years = {o.year for o in obs}
                lo, hi = cfg.year_range
                if lo < min(years) or hi > max(years):
                    raise ConfigError(f"year_range {lo}-{hi} exceeds the data range {min(years)}-{max(years)}")
            panel = build_panel(obs, cfg.year_range)
            panel_info = {"regions": panel.n_regions, "first_year": panel.first_year, "last_year": panel.last_year}
        except GrowthDynError as exc:
            _record(errors, "ingest", exc)
            exit_code = EXIT_INPUT
        if exit_code == EXIT_OK:
            _run_steps(cfg, panel, outs, errors, results)
            exit_code = EXIT_ESTIMATION if errors else EXIT_OK
        outs.write_bytes(MANIFEST, _manifest(outs, cfg, versions, inputs, panel_info, results, errors, exit_code))
        timing = {"wall_seconds": round(time.perf_counter() - t0, 3),
                  "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
        outs.write_bytes(TIMING, (json.dumps(timing, indent=2) + "\n").encode())
    return RunResult(exit_code, dict(outs.files), errors, results)


# --- entry point ---------------------------------------------------------------


def _build_parser():
    ap = argparse.ArgumentParser(prog="growthdyn", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")

    r = sub.add_parser("run", help="fit distributions, scaling and convergence on CSV panels")
    r.add_argument("--config", type=Path, help="YAML run configuration")
    r.add_argument("--input-emissions")
    r.add_argument("--input-gdp")
    r.add_argument("--input-combined")
    r.add_argument("--year-range", help="e.g. 1990-2022")
    r.add_argument("--periods", help="comma list of period names or START-END / NAME=START-END")
    r.add_argument("--window-length", type=int)
    r.add_argument("--bins", type=int)
    r.add_argument("--bootstrap", type=int, help="replicates per period (0 disables standard errors)")
    r.add_argument("--window-bootstrap", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.add_argument("--no-windows", dest="windows", action="store_const", const=False)
    r.add_argument("--no-residuals", dest="residuals", action="store_const", const=False)

    s = sub.add_parser("synth", help="write a synthetic panel in the input CSV schema")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--regions", type=int, default=242)
    s.add_argument("--years", type=int, default=33)
    s.add_argument("--first-year", type=int, default=1990)
    s.add_argument("--alpha", type=float, default=-0.004)
    s.add_argument("--phi", type=float, default=0.266)
    s.add_argument("--beta", type=float, default=-0.085)
    s.add_argument("--residual", choices=("laplace", "normal"), default="laplace")
    s.add_argument("--scale", type=float, default=0.05)
    s.add_argument("--gdp", choices=("iid", "subunits"), default="iid")
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    return ap


def _cmd_run(args) -> int:
    values = {}
    try:
        if args.config is not None:
            values.update(load_config_file(args.config))
        flags = {k: getattr(args, k) for k in CONFIG_KEYS if hasattr(args, k)}
        values.update({k: v for k, v in flags.items() if v is not None})
        cfg = make_config(values)
    except GrowthDynError as exc:
        log.error("configuration: %s", exc)
        out = values.get("out")
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            outs = _Outputs(Path(out))
            err = [{"step": "configuration", "error": type(exc).__name__, "message": str(exc)}]
            outs.write_bytes(MANIFEST, _manifest(None, None, _versions(), [], None, {}, err, EXIT_INPUT))
        return EXIT_INPUT
    try:
        res = run(cfg)
    except LockHeld as exc:
        log.error("%s", exc)
        return EXIT_LOCKED
    log.info("wrote %d files to %s (exit %d)", len(res.outputs), cfg.out, res.exit_code)
    return res.exit_code


def _cmd_synth(args) -> int:
    try:
        spec = GeneratorSpec(
            n_regions=args.regions, n_years=args.years, first_year=args.first_year,
            true_alpha=args.alpha, true_phi=args.phi, true_beta=args.beta,
            residual_law=ResidualLaw(args.residual, args.scale),
            gdp_process=GdpProcess(args.gdp, rho=args.rho), seed=args.seed,
        )
    except GrowthDynError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(generate_panel(spec), args.out / "emissions.csv", args.out / "gdp.csv")
    log.info("wrote %s and %s", args.out / "emissions.csv", args.out / "gdp.csv")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help", "-v", "--verbose"):
        argv.insert(0, "run")
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "synth":
        return _cmd_synth(args)
    if args.command == "run":
        return _cmd_run(args)
    _build_parser().print_help()
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
