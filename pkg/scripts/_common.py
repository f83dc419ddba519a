"""Shared helpers for the experiment scripts."""
import argparse
import json
from pathlib import Path


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc)
    p.add_argument("--out-dir", default="results", help="directory for CSV/JSON outputs")
    p.add_argument("--quick", action="store_true", help="fewer frames and steps, for smoke runs")
    p.add_argument("--seed", type=int, default=0)
    return p


def out_dir(args) -> Path:
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")
    print(f"wrote {path}")
