"""Text snapshots of configurations and the CSV formats the CLI writes.

Snapshot layout::

    ukcm-snapshot 1
    family fig1e
    axes -1,0 0,-1
    bounds 0 0 15 15
    boundary all-healthy
    box 0 0 16 16
    3. 1# 12.
    ...

After the header comes one line per row of the region's integer bounding
box, bottom row first.  Each line is a run-length encoding: ``<count><sym>``
tokens where ``#`` is infected and ``.`` healthy.  Cells of the box that lie
outside the region are written as ``.``.  Reading a snapshot back gives a
Configuration equal to the one written, bit for bit.
"""
from __future__ import annotations

import csv
import io
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bootstrap.config import AllHealthy, Boundary, Configuration, FrozenSet, InfectedHalfPlane
from .geometry import Direction, HalfPlane, Parallelogram

MAGIC = "ukcm-snapshot 1"


class SnapshotError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# ---------------------------------------------------------------------------
# Boundary tags

def boundary_tag(b: Boundary) -> str:
    return str(b)


def parse_boundary(tag: str) -> Boundary:
    """Inverse of ``str()`` on the three boundary conventions."""
    parts = tag.split()
    if not parts:
        raise SnapshotError("empty boundary tag")
    if parts == ["all-healthy"]:
        return AllHealthy()
    if parts[0] == "half-plane" and len(parts) == 4 and parts[3] in ("closed", "open"):
        u = _pair(parts[1])
        return InfectedHalfPlane(HalfPlane(Direction(*u), Fraction(parts[2]), parts[3] == "closed"))
    if parts[0] == "frozen":
        return FrozenSet(_pair(p) for p in parts[1:])
    raise SnapshotError(f"unknown boundary tag {tag!r}")


def _pair(tok: str) -> tuple[int, int]:
    try:
        x, y = tok.split(",")
        return int(x), int(y)
    except ValueError:
        raise SnapshotError(f"expected an integer pair x,y, got {tok!r}") from None


# ---------------------------------------------------------------------------
# Run-length rows

def encode_row(bits: Sequence[int]) -> str:
    """``bits`` in the 0 = infected convention."""
    out = []
    i, n = 0, len(bits)
    while i < n:
        j = i
        while j < n and bits[j] == bits[i]:
            j += 1
        out.append(f"{j - i}{'#' if bits[i] == 0 else '.'}")
        i = j
    return " ".join(out)


def decode_row(line: str, width: int, lineno: int | None = None) -> np.ndarray:
    row = []
    for tok in line.split():
        sym, count = tok[-1], tok[:-1]
        if sym not in "#." or not count.isdigit() or int(count) == 0:
            raise SnapshotError(f"bad run {tok!r}", lineno)
        row.extend([0 if sym == "#" else 1] * int(count))
    if len(row) != width:
        raise SnapshotError(f"row has {len(row)} cells, expected {width}", lineno)
    return np.array(row, dtype=np.uint8)


# ---------------------------------------------------------------------------
# Snapshots

def dumps(config: Configuration, family_name: str = "-") -> str:
    R = config.region
    u1, u2 = R.axes
    ny, nx = config.bits.shape
    lines = [
        MAGIC,
        f"family {family_name or '-'}",
        f"axes {u1.x},{u1.y} {u2.x},{u2.y}",
        f"bounds {R.a} {R.b} {R.c} {R.d}",
        f"boundary {boundary_tag(config.boundary)}",
        f"box {config.x0} {config.y0} {nx} {ny}",
    ]
    lines.extend(encode_row(config.bits[i]) for i in range(ny))
    return "\n".join(lines) + "\n"


def loads(text: str) -> tuple[Configuration, str]:
    """Parse a snapshot; returns the configuration and the recorded family name."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise SnapshotError(f"missing '{MAGIC}' header", 1)
    head = {}
    keys = ("family", "axes", "bounds", "boundary", "box")
    for k, key in enumerate(keys, start=2):
        if k - 1 >= len(lines):
            raise SnapshotError(f"missing '{key}' line", k)
        name, _, rest = lines[k - 1].partition(" ")
        if name != key:
            raise SnapshotError(f"expected '{key}', found {name!r}", k)
        head[key] = rest.strip()
    try:
        u1, u2 = (Direction(*_pair(t)) for t in head["axes"].split())
        a, b, c, d = (Fraction(t) for t in head["bounds"].split())
        region = Parallelogram((u1, u2), a, b, c, d)
        x0, y0, nx, ny = (int(t) for t in head["box"].split())
    except SnapshotError:
        raise
    except Exception as e:  # malformed numbers, wrong arity, degenerate geometry
        raise SnapshotError(f"bad header: {e}") from None
    boundary = parse_boundary(head["boundary"])
    body = lines[len(keys) + 1:]
    if len(body) != ny:
        raise SnapshotError(f"expected {ny} rows, found {len(body)}")
    bits = np.stack([decode_row(l, nx, i + len(keys) + 2) for i, l in enumerate(body)]) if ny else \
        np.ones((0, nx), np.uint8)
    cfg = Configuration(region, bits, boundary)
    if (cfg.x0, cfg.y0) != (x0, y0):
        raise SnapshotError("box origin does not match the region bounds")
    return cfg, head["family"]


def save(path, config: Configuration, family_name: str = "-") -> None:
    Path(path).write_text(dumps(config, family_name), encoding="utf-8")


def load(path) -> tuple[Configuration, str]:
    return loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# CSV

TRAJECTORY_HEADER = ("trial", "time", "x", "y", "new_value")
ESTIMATE_HEADER = ("param", "estimate", "ci_low", "ci_high", "censor_fraction", "trials", "seed", "note")
TAU0_HEADER = ("q", "size", "estimate", "ci_low", "ci_high", "mean", "median", "censor_fraction",
               "zero_fraction", "n_uncensored", "trials", "seed", "flag")
PLOT_HEADER = ("q", "size", "ln_inv_q", "ln_ln_estimate", "ln_predicted")
PATH_HEADER = ("step", "x", "y", "new_value", "infected")


def fmt(v) -> str:
    """Six significant digits; integers verbatim; NaN as ``nan``."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.6g}"
    return str(v)


def _writer(out: io.TextIOBase):
    return csv.writer(out, lineterminator="\n")


def write_rows(out, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = _writer(out)
    w.writerow(header)
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"row {r!r} does not match header {header!r}")
        w.writerow([fmt(v) for v in r])


def trajectory_rows(trajectories: Iterable, first_trial: int = 0):
    """(trial, time, x, y, new_value) for every event of every trajectory."""
    for k, tr in enumerate(trajectories, start=first_trial):
        for t, (x, y), v in zip(tr.times, tr.sites, tr.new_values):
            yield (k, repr(float(t)), int(x), int(y), int(v))


def write_trajectories(out, trajectories: Iterable, first_trial: int = 0) -> None:
    # event times keep full precision so a trajectory can be replayed exactly
    write_rows(out, TRAJECTORY_HEADER, trajectory_rows(trajectories, first_trial))


def estimate_row(param: str, est) -> tuple:
    """Row for a spanning/crossing Estimate (censoring does not apply: 0)."""
    return (param, est.estimate, est.ci[0], est.ci[1], 0.0, est.trials, est.seed, est.label)


def path_rows(path: Sequence[Configuration]):
    """One row per step of a legal path: the flipped site and its new bit (0 = infected).

    Step 0 lists the infected sites of the starting configuration with
    ``new_value`` 0, so the whole path can be rebuilt from the file.
    """
    if not path:
        return
    for p in sorted(path[0].infected_points()):
        yield (0, p[0], p[1], 0, path[0].n_infected)
    for k in range(1, len(path)):
        diff = np.argwhere(path[k].bits != path[k - 1].bits)
        if len(diff) != 1:
            raise ValueError(f"step {k} changes {len(diff)} sites")
        i, j = diff[0]
        x, y = int(j) + path[k].x0, int(i) + path[k].y0
        yield (k, x, y, int(path[k].bits[i, j]), path[k].n_infected)


def read_path(text: str, region: Parallelogram, boundary: Boundary | None = None) -> list[Configuration]:
    """Rebuild a legal path from ``path_rows`` CSV output."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != PATH_HEADER:
        raise ValueError("not a legal-path CSV")
    start = [(int(r[1]), int(r[2])) for r in rows[1:] if r[0] == "0"]
    cur = Configuration.from_infected(region, start, boundary)
    out = [cur]
    for r in rows[1:]:
        if r[0] == "0":
            continue
        cur = cur.flipped((int(r[1]), int(r[2])))
        out.append(cur)
    return out
