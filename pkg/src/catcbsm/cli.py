"""Command-line interface.

Commands:
    bsm-probs     exact physical-level BSM probabilities over alpha and eta0
    cbsm-sim      Monte Carlo estimates for one code
    sweep         Monte Carlo estimates over a code grid
    repeater      repeater metrics over a code and spacing grid
    oracle-check  brute-force validation of the closed forms

Parameters come from defaults, then an optional ``--config`` file (flat
key=value lines or a JSON object), then command-line flags. The effective
configuration, seed and version go into every output. Thread count and wall
time are left out unless ``--timing`` is given, so outputs stay byte-identical
across thread counts.

Exit codes: 0 success, 2 validation error, 3 numerical fault, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import functools
import io
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, version_string
from .core import CBSMError, CodeParams, LossParams, NumericalFault, ParameterError
from .montecarlo import estimate, run_trials
from .physbsm import exact_physical_statistics
from .povm import build_povm_table

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

# keys accepted in config files, with their parsers
_SCALAR_KEYS = {
    "trials": int,
    "seed": int,
    "threads": int,
    "out": str,
    "format": str,
    "L": float,
    "Latt": float,
    "eta1": float,
    "eta2": float,
    "geometry": str,
    "cost_max": float,
    "level": str,
    "n_max": int,
    "optimum_out": str,
    "timing": bool,
}
_LIST_KEYS = {"n": int, "m": int, "alpha": float, "j": int, "eta0": float, "L0": float}

DEFAULTS: dict[str, dict[str, Any]] = {
    "bsm-probs": {
        "alpha": "0.5:2.0:0.1",
        "eta0": "0.99",
        "geometry": "fig2",
        "L0": "1.0",
        "Latt": 22.0,
        "format": "csv",
    },
    "cbsm-sim": {
        "n": "3",
        "m": "3",
        "alpha": "1.6",
        "j": "1",
        "eta0": "0.99",
        "trials": 100_000,
        "seed": 1,
        "threads": 1,
        "format": "json",
    },
    "sweep": {
        "n": "1,3,5",
        "m": "1,3,5",
        "alpha": "1.6",
        "j": "1",
        "eta0": "0.99",
        "trials": 100_000,
        "seed": 1,
        "threads": 1,
        "format": "csv",
        "cost_max": math.inf,
    },
    "repeater": {
        "n": "3",
        "m": "31",
        "alpha": "1.9",
        "j": "1",
        "L0": "0.7",
        "eta0": "0.99",
        "L": 1000.0,
        "Latt": 22.0,
        "trials": 10_000_000,
        "seed": 1,
        "threads": 1,
        "format": "csv",
    },
    "oracle-check": {
        "level": "all",
        "alpha": "0.5,1.0,1.6,2.0",
        "eta0": "0.8,0.95,0.99,1.0",
        "format": "json",
        "seed": 1,
    },
}


class CLIError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def parse_values(text: str, kind: type) -> list:
    """Parse ``a,b,c`` or an inclusive range ``start:stop:step`` (or a mix)."""
    out: list = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            fields = part.split(":")
            if len(fields) != 3:
                raise ParameterError(f"range must be start:stop:step, got {part!r}")
            start, stop, step = (float(f) for f in fields)
            if step <= 0:
                raise ParameterError(f"range step must be positive, got {part!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(max(count, 0))]
            out.extend(kind(round(v, 12)) if kind is float else kind(round(v)) for v in vals)
        else:
            try:
                out.append(kind(part) if kind is not int else int(float(part)))
            except ValueError as exc:
                raise ParameterError(f"cannot parse {part!r} as {kind.__name__}") from exc
    if not out:
        raise ParameterError(f"empty value list {text!r}")
    return out


def load_config(path: str) -> dict[str, Any]:
    """Read a JSON object or flat key=value lines (``#`` starts a comment)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot read config {path}: {exc}") from exc
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"invalid JSON config: {exc}") from exc
        if not isinstance(data, dict):
            raise ParameterError("JSON config must be an object")
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            data[key.strip()] = value.strip()
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_")
        if key in ("config",) or (key not in _SCALAR_KEYS and key not in _LIST_KEYS):
            raise ParameterError(f"unknown config key {key!r}")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out[key] = value
    return out


def _coerce(cfg: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in cfg.items():
        if key in _LIST_KEYS:
            out[key] = parse_values(value, _LIST_KEYS[key])
        elif key in _SCALAR_KEYS and value is not None:
            kind = _SCALAR_KEYS[key]
            if kind is bool:
                out[key] = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
            elif kind is int:
                out[key] = int(float(value))
            else:
                out[key] = kind(value)
        else:
            out[key] = value
    return out


def effective_config(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, overridden by the config file, overridden by flags."""
    cfg = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        cfg.update(load_config(args.config))
    for key, value in vars(args).items():
        if key in ("command", "config", "func") or value is None:
            continue
        cfg[key] = value
    cfg = _coerce(cfg)
    if cfg.get("format") not in ("csv", "json"):
        raise ParameterError(f"format must be csv or json, got {cfg.get('format')!r}")
    return cfg


def _single(cfg: dict, key: str):
    vals = cfg[key]
    if len(vals) != 1:
        raise ParameterError(f"{key} takes a single value for this command, got {vals}")
    return vals[0]


def _echo(cfg: dict) -> dict:
    """Config as echoed into outputs: run-environment keys left out."""
    hidden = {"threads", "out", "optimum_out", "timing", "format"}
    return {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v)) for k, v in cfg.items() if k not in hidden}


@functools.lru_cache(maxsize=1)
def _version() -> str:
    return version_string()


def _metadata(command: str, cfg: dict) -> dict:
    meta = {"tool": "catcbsm", "version": _version(), "command": command, "seed": cfg.get("seed"), "config": _echo(cfg)}
    return meta


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return _clean(value.item())
    return value


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False, default=_json_default) + "\n"


def to_csv(rows: list[dict], columns: Sequence[str], meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_clean(meta), sort_keys=False, default=_json_default) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k, "")) for k in columns})
    return buf.getvalue()


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
        return repr(value)
    return str(value)


def _write(text: str, path: str | None, stream=None) -> None:
    if not path or path == "-":
        (stream or sys.stdout).write(text)
        return
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _emit(cfg: dict, rows: list[dict], columns: Sequence[str], meta: dict) -> None:
    if cfg["format"] == "csv":
        _write(to_csv(rows, columns, meta), cfg.get("out"))
    else:
        _write(to_json({"metadata": meta, "rows": rows}), cfg.get("out"))


def _optimum_path(cfg: dict) -> str | None:
    if cfg.get("optimum_out"):
        return cfg["optimum_out"]
    out = cfg.get("out")
    if out and out != "-":
        p = Path(out)
        return str(p.with_name(p.stem + ".optimum.json"))
    return None


# ---------------------------------------------------------------------------
# commands

BSM_COLUMNS = ("alpha", "eta0", "eta1", "eta2", "p_i", "p_fail", "p_x", "p_y", "p_z")


def cmd_bsm_probs(cfg: dict) -> int:
    """Exact physical-level probabilities over (alpha, eta0)."""
    rows = []
    geometry = cfg["geometry"]
    if geometry not in ("fig2", "symmetric"):
        raise ParameterError(f"geometry must be fig2 or symmetric, got {geometry!r}")
    L0 = _single(cfg, "L0")
    for eta0 in cfg["eta0"]:
        for alpha in cfg["alpha"]:
            if cfg.get("eta1") is not None or cfg.get("eta2") is not None:
                loss = LossParams(cfg.get("eta1", eta0), cfg.get("eta2", eta0))
            elif geometry == "fig2":
                loss = LossParams(eta0, eta0 * math.exp(-L0 / cfg["Latt"]))
            else:
                loss = LossParams.symmetric(eta0)
            stats = exact_physical_statistics(build_povm_table(alpha, loss))
            rows.append({"alpha": alpha, "eta0": eta0, "eta1": loss.eta1, "eta2": loss.eta2, **stats})
    _emit(cfg, rows, BSM_COLUMNS, _metadata("bsm-probs", cfg))
    return EXIT_OK


def _loss_from(cfg: dict, eta0: float) -> LossParams:
    return LossParams(
        cfg["eta1"] if cfg.get("eta1") is not None else eta0,
        cfg["eta2"] if cfg.get("eta2") is not None else eta0,
    )


def cmd_cbsm_sim(cfg: dict) -> int:
    """Monte Carlo report for a single code."""
    params = CodeParams(_single(cfg, "n"), _single(cfg, "m"), _single(cfg, "alpha"), _single(cfg, "j"))
    loss = _loss_from(cfg, _single(cfg, "eta0"))
    t0 = time.perf_counter()
    tally = run_trials(params, loss, cfg["trials"], cfg["seed"], threads=cfg["threads"])
    est = estimate(tally)
    meta = _metadata("cbsm-sim", cfg)
    meta["ci_method"] = "normal approximation, rule of three (3/n) for empty categories"
    if cfg.get("timing"):
        meta["wall_time_s"] = time.perf_counter() - t0
        meta["threads"] = cfg["threads"]
    row = {
        "n": params.n,
        "m": params.m,
        "alpha": params.alpha,
        "j": params.j,
        "eta1": loss.eta1,
        "eta2": loss.eta2,
        "trials": tally.n_trials,
        "seed": cfg["seed"],
        **est.as_dict(),
    }
    if cfg["format"] == "json":
        _write(to_json({"metadata": meta, "estimates": row, "tally": tally.as_dict()}), cfg.get("out"))
    else:
        _write(to_csv([row], SWEEP_COLUMNS, meta), cfg.get("out"))
    return EXIT_OK


SWEEP_COLUMNS = (
    "n", "m", "alpha", "j", "eta1", "eta2", "trials", "seed",
    "p_i", "p_i_ci", "p_x", "p_x_ci", "p_y", "p_y_ci", "p_z", "p_z_ci",
    "p_fail", "p_fail_ci", "c_exp", "c_exp_ci", "status",
)  # fmt: skip


def cmd_sweep(cfg: dict) -> int:
    """Monte Carlo estimates over a code grid; optimum = max p_i with c_exp <= cost_max."""
    from .repeater import point_seed

    import itertools

    points = list(itertools.product(cfg["n"], cfg["m"], cfg["alpha"], cfg["j"], cfg["eta0"]))
    rows = []
    for idx, (n, m, alpha, j, eta0) in enumerate(points):
        pseed = point_seed(cfg["seed"], idx)
        row = {"n": n, "m": m, "alpha": alpha, "j": j, "trials": cfg["trials"], "seed": pseed}
        try:
            params = CodeParams(n, m, alpha, j)
            loss = _loss_from(cfg, eta0)
            row["eta1"], row["eta2"] = loss.eta1, loss.eta2
            est = estimate(run_trials(params, loss, cfg["trials"], pseed, threads=cfg["threads"]))
            row.update(est.as_dict())
            row["status"] = "ok"
        except CBSMError as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    meta = _metadata("sweep", cfg)
    _emit(cfg, rows, SWEEP_COLUMNS, meta)
    ok = [r for r in rows if r["status"] == "ok" and r["c_exp"] <= cfg["cost_max"]]
    best = max(ok, key=lambda r: r["p_i"]) if ok else None
    overlaps = []
    if best is not None:
        lo = best["p_i"] - best["p_i_ci"]
        overlaps = [r for r in ok if r is not best and r["p_i"] + r["p_i_ci"] >= lo]
    record = {"metadata": meta, "max_p_i": best, "max_p_i_ci_overlaps": overlaps}
    _write(to_json(record), _optimum_path(cfg), stream=sys.stderr)
    return EXIT_OK


REPEATER_COLUMNS = (
    "n", "m", "alpha", "j", "L0", "L", "eta0", "Latt", "eta1", "eta2", "trials", "point_seed",
    "p_i", "p_i_ci", "p_x", "p_x_ci", "p_y", "p_y_ci", "p_z", "p_z_ci", "p_fail", "p_fail_ci",
    "c_exp", "c_exp_ci", "P_s", "P_s_ci", "Q_x", "Q_x_ci", "Q_z", "Q_z_ci", "Q", "Q_ci",
    "Rt0", "Rt0_ci", "Q_tot", "Q_tot_ci", "status",
)  # fmt: skip


def cmd_repeater(cfg: dict) -> int:
    """Repeater sweep: CSV table plus optimum record."""
    from .repeater import RepeaterGrid, sweep

    grid = RepeaterGrid(cfg["n"], cfg["m"], cfg["alpha"], cfg["j"], cfg["L0"])
    res = sweep(grid, cfg["L"], _single(cfg, "eta0"), cfg["trials"], cfg["seed"], L_att=cfg["Latt"], threads=cfg["threads"])
    meta = _metadata("repeater", cfg)
    _emit(cfg, res.rows, REPEATER_COLUMNS, meta)
    _write(to_json({"metadata": meta, **res.optimum_record()}), _optimum_path(cfg), stream=sys.stderr)
    return EXIT_OK


def cmd_oracle_check(cfg: dict) -> int:
    """Run the validation suite; exit 3 on any tolerance violation."""
    from .validation import run_validation

    report = run_validation(
        level=cfg["level"], alphas=cfg["alpha"], etas=cfg["eta0"], n_max=cfg.get("n_max"), seed=cfg["seed"]
    )
    meta = _metadata("oracle-check", cfg)
    out = {"metadata": meta, **report.as_dict()}
    if cfg["format"] == "json":
        _write(to_json(out), cfg.get("out"))
    else:
        rows = [{"check": c.name, "cases": c.cases, "max_error": c.max_error, "tolerance": c.tolerance, "passed": c.passed} for c in report.checks]
        _write(to_csv(rows, ("check", "cases", "max_error", "tolerance", "passed"), meta), cfg.get("out"))
    if not report.passed:
        for v in report.violations[:10]:
            sys.stderr.write(f"violation: {v}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


COMMANDS = {
    "bsm-probs": cmd_bsm_probs,
    "cbsm-sim": cmd_cbsm_sim,
    "sweep": cmd_sweep,
    "repeater": cmd_repeater,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catcbsm", description="Concatenated Bell-state measurement on cat-code qubits.")
    parser.add_argument("--version", action="version", version=f"catcbsm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, keys: Sequence[str]) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key=value or JSON file; flags override it")
        lists = {
            "n": "blocks per logical qubit (odd); list or start:stop:step",
            "m": "PLSs per block (odd); list or range",
            "alpha": "coherent amplitude; list or range",
            "j": "letter solidity; list or range",
            "eta0": "base survival rate; list or range",
            "L0": "station spacing in km; list or range",
        }
        scalars = {
            "eta1": (float, "survival rate of the first BSM input (overrides eta0)"),
            "eta2": (float, "survival rate of the second BSM input (overrides eta0)"),
            "L": (float, "total distance in km"),
            "Latt": (float, "attenuation length in km"),
            "trials": (int, "Monte Carlo trials (per grid point)"),
            "seed": (int, "master seed"),
            "threads": (int, "worker threads (results do not depend on it)"),
            "geometry": (str, "fig2 (eta2 = eta0 e^{-L0/Latt}) or symmetric"),
            "cost_max": (float, "only consider points with c_exp <= this for the optimum"),
            "level": (str, "povm, block, logical, sampler or all"),
            "n_max": (int, "Fock cutoff override"),
        }
        for key in keys:
            flag = "--" + key.replace("_", "-")
            if key in lists:
                p.add_argument(flag, dest=key, help=lists[key])
            else:
                kind, text = scalars[key]
                p.add_argument(flag, dest=key, type=kind, help=text)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        if name in ("sweep", "repeater"):
            p.add_argument("--optimum-out", dest="optimum_out", help="optimum record path (default <out>.optimum.json or stderr)")
        if name in ("cbsm-sim",):
            p.add_argument("--timing", action="store_true", default=None, help="add wall time and thread count to the report")
        p.set_defaults(func=COMMANDS[name])
        return p

    add("bsm-probs", "exact physical-level BSM probabilities", ("alpha", "eta0", "eta1", "eta2", "geometry", "L0", "Latt"))
    sim_keys = ("n", "m", "alpha", "j", "eta0", "eta1", "eta2", "trials", "seed", "threads")
    add("cbsm-sim", "Monte Carlo estimates for one code", sim_keys)
    add("sweep", "Monte Carlo estimates over a code grid", sim_keys + ("cost_max",))
    add("repeater", "repeater metrics over a grid", ("n", "m", "alpha", "j", "L0", "eta0", "L", "Latt", "trials", "seed", "threads"))
    add("oracle-check", "validate closed forms against brute force", ("level", "alpha", "eta0", "n_max", "seed"))
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args.command, args)
        return args.func(cfg)
    except CLIError as exc:
        return _fail(exc.code, "io" if exc.code == EXIT_IO else "validation", str(exc))
    except NumericalFault as exc:
        return _fail(EXIT_NUMERICAL, type(exc).__name__, str(exc))
    except ParameterError as exc:
        return _fail(EXIT_VALIDATION, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
