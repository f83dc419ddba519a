"""Command-line entry point.

    jamsim sim-ber   --config cfg.json --out ber.csv
    jamsim rank-hist --config cfg.json --out rank.json
    jamsim train     --config cfg.json --out learned.json
    jamsim gain      --config cfg.json --learned learned.json --out gain.json

``--seed`` overrides the config seed. The thread count comes from
``JAMSIM_THREADS``. Every run writes the resolved configuration next to its
result (embedded in JSON outputs, ``<out>.config.json`` for CSV).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import harness, learn
from .config import ConfigError, Scenario, load_json, scenario_from_dict, scenario_to_dict

log = logging.getLogger("jamsim")

MODES = ("sim-ber", "rank-hist", "train", "gain")
EXIT_CONFIG = 2


@dataclass(frozen=True)
class SweepConfig:
    snr_db: tuple = (0.0, 5.0, 10.0)
    min_errors: int = 100
    max_frames: int = 2000
    frames_per_chunk: int = 32


@dataclass(frozen=True)
class RankConfig:
    n_realizations: int = 20
    bins: int = 20


@dataclass(frozen=True)
class GainConfig:
    target_snr_db: float = 5.0
    search_range_db: tuple = (-30.0, 30.0)
    n_frames: int = 256
    tol_db: float = 0.25


SECTIONS = {"sweep": SweepConfig, "rank": RankConfig, "train": learn.TrainConfig, "gain": GainConfig}
_LISTS = {"sweep": ("snr_db",), "gain": ("search_range_db",)}


def _section(raw: dict, name: str, cls, seed: int):
    d = raw.get(name) or {}
    if not isinstance(d, dict):
        raise ConfigError(name, "must be an object")
    known = {f.name for f in fields(cls)}
    bad = sorted(set(d) - known)
    if bad:
        raise ConfigError(f"{name}.{bad[0]}", "unknown field")
    d = dict(d)
    for k in _LISTS.get(name, ()):
        if k in d:
            if not isinstance(d[k], list) or not all(isinstance(x, (int, float)) for x in d[k]):
                raise ConfigError(f"{name}.{k}", "must be a list of numbers")
            d[k] = tuple(float(x) for x in d[k])
    if cls is learn.TrainConfig:
        d = {**d, "seed": seed}
    try:
        return cls(**d)
    except (TypeError, ValueError) as e:
        raise ConfigError(name, str(e)) from None


def resolve(raw: dict, mode: str | None = None, seed: int | None = None):
    """Parse a config dict into (mode, scenario, section configs, resolved dict)."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    mode = mode or raw.get("mode")
    if mode is None:
        raise ConfigError("mode", "missing required field")
    if mode not in MODES:
        raise ConfigError("mode", f"unknown mode {mode!r}, expected one of {MODES}")
    scn_raw = {k: v for k, v in raw.items() if k not in SECTIONS and k != "mode"}
    if seed is not None:
        scn_raw["seed"] = seed
    scn = scenario_from_dict(scn_raw)
    secs = {name: _section(raw, name, cls, scn.seed) for name, cls in SECTIONS.items()}
    if mode in ("train", "gain") and not scn.jammed:
        raise ConfigError("jammer", "missing required field")
    if mode == "rank-hist" and scn.jammer is None:
        raise ConfigError("jammer", "missing required field")
    resolved = {"mode": mode, **scenario_to_dict(scn)}
    for name, sec in secs.items():
        d = asdict(sec)
        d.pop("seed", None)
        resolved[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
    return mode, scn, secs, resolved


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _run_sim_ber(scn: Scenario, secs, resolved, out: Path, **_):
    sw = secs["sweep"]
    res = harness.run_ber_sweep(scn, sw.snr_db, sw.min_errors, sw.max_frames, sw.frames_per_chunk)
    out.write_text(res.to_csv())
    Path(str(out) + ".config.json").write_text(_dump(resolved))


def _run_rank_hist(scn: Scenario, secs, resolved, out: Path, **_):
    rc = secs["rank"]
    stats = harness.run_rank_hist(scn, rc.n_realizations)
    out.write_text(_dump({"config": resolved, "result": harness.rank_summary(stats, rc.bins)}))


def _run_train(scn: Scenario, secs, resolved, out: Path, **_):
    res = learn.train(secs["train"], scn)
    body = {
        "config": resolved,
        "rho": res.allocation.rho.tolist(),
        "rho_max": scn.rho_max,
        "theta": res.theta.tolist(),
        "objective": list(map(float, res.history)),
    }
    out.write_text(_dump(body))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("step", "objective"))
    w.writerows((i, repr(float(v))) for i, v in enumerate(res.history))
    Path(str(out) + ".objective.csv").write_text(buf.getvalue())


def load_learned(path) -> np.ndarray:
    """Learned allocation from a train output (``{"rho": [...]}``) or a bare JSON array."""
    data = load_json(path)
    rho = data.get("rho") if isinstance(data, dict) else data
    if rho is None:
        raise ConfigError("learned.rho", "missing required field")
    return np.asarray(rho, dtype=float)


def _run_gain(scn: Scenario, secs, resolved, out: Path, learned=None, **_):
    if learned is None:
        raise ConfigError("learned", "gain mode needs --learned <json>")
    rho = load_learned(learned)
    if rho.shape != (scn.grid.n_symbols,):
        raise ConfigError("learned.rho", f"needs {scn.grid.n_symbols} entries, got {rho.size}")
    gc = secs["gain"]
    res = harness.effectiveness_gain(rho, scn, gc.target_snr_db, gc.search_range_db, gc.n_frames,
                                     tol_db=gc.tol_db)
    ratio = harness.ber_ratio(scn, rho, gc.target_snr_db, gc.n_frames)
    out.write_text(_dump({"config": resolved, "learned_rho": rho.tolist(), "result": res, "ber": ratio}))


RUNNERS = {"sim-ber": _run_sim_ber, "rank-hist": _run_rank_hist, "train": _run_train, "gain": _run_gain}


def run_experiment(config_path, out_path, mode: str | None = None, seed: int | None = None,
                   learned=None) -> int:
    """Run one experiment; returns the process exit status."""
    try:
        raw = load_json(config_path)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        mode, scn, secs, resolved = resolve(raw, mode, seed)
        RUNNERS[mode](scn, secs, resolved, Path(out_path), learned=learned)
    except ConfigError as e:
        print(f"config error: {e} (field: {e.field})", file=sys.stderr)
        return EXIT_CONFIG
    except harness.BracketError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jamsim", description="Jammed MIMO-OFDM link simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="mode", required=True)
    for m in MODES:
        s = sub.add_parser(m)
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--seed", type=int, default=None)
        if m == "gain":
            s.add_argument("--learned", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return run_experiment(args.config, args.out, args.mode, args.seed, getattr(args, "learned", None))


if __name__ == "__main__":
    sys.exit(main())
