"""Shared helpers: dataclass config <- CLI overrides, JSON results."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path


def parse_config(cls, argv=None):
    ap = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        kind = f.type if isinstance(f.type, type) else eval(f.type, {"tuple": tuple})
        if kind in (int, float, str):
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=kind, default=f.default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=lambda s: tuple(float(x) for x in s.split(",")),
                            default=f.default)
    return cls(**vars(ap.parse_args(argv)))


def dump(cfg, rows, out: str | None):
    text = json.dumps({"config": dataclasses.asdict(cfg), "rows": rows}, indent=2, default=str) + "\n"
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)
