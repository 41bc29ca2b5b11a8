# -*- coding: utf-8; -*-
"""Reading and writing the files of the command-line harness.

Every output file starts with the run manifest: CSV files as `# key: value`
comment lines above the header row, JSON reports as the `"manifest"` entry.
Floats are written with `repr`, so a rerun with the same manifest produces
byte-identical files.
"""

__all__ = ["RunManifest", "digest_of", "write_csv", "write_report", "load_kernel_csv"]

import csv
from dataclasses import dataclass, field
import hashlib
import json
import math
import pathlib

import numpy as np

from .. import __version__
from ..markov import MarkovKernel


@dataclass(frozen=True)
class RunManifest:
    """What produced an output: command, config digest, seed, version, and the files written."""
    command: str
    digest: str
    seed: int
    version: str = __version__
    outputs: tuple = field(default=())

    def with_outputs(self, *paths):
        return RunManifest(self.command, self.digest, self.seed, self.version,
                           tuple(pathlib.Path(p).name for p in paths))

    def as_dict(self):
        return {"command": self.command, "digest": self.digest, "seed": self.seed,
                "version": self.version, "outputs": list(self.outputs)}

    def header_lines(self):
        return [f"# metafix {self.version}",
                f"# command: {self.command}",
                f"# digest: {self.digest}",
                f"# seed: {self.seed}",
                f"# outputs: {', '.join(self.outputs)}"]


def digest_of(mapping):
    """SHA-256 of `mapping` serialized as sorted-key JSON."""
    text = json.dumps(_jsonable(mapping), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(path, manifest, columns, rows):
    """Write a CSV table with the manifest header. `rows` are mappings keyed by the `columns`."""
    path = pathlib.Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for line in manifest.header_lines():
            f.write(line + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def _jsonable(x):
    """Convert to plain JSON types; `nan` and infinities become strings."""
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def write_report(path, manifest, body):
    """Write a JSON report whose first entry is the manifest."""
    path = pathlib.Path(path)
    record = {"manifest": manifest.as_dict()}
    record.update(body)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(record), f, indent=2)
        f.write("\n")
    return path


def load_kernel_csv(path):
    """Read a Markov kernel from a headerless CSV of rows. Blank lines and `#` comments are skipped.

    Raises `ValueError` (or a `metafix` error deriving from it) for malformed files.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for lineno, fields in enumerate(csv.reader(f), start=1):
            if not fields or not "".join(fields).strip() or fields[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in fields])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected comma-separated numbers, got {','.join(fields)!r}")
    if not rows:
        raise ValueError(f"{path}: no kernel rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing lengths {sorted(widths)}")
    return MarkovKernel(np.array(rows))
