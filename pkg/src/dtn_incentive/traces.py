"""Trace ingestion: contact detection from GPS fixes, inter-contact extraction and rate fitting.

Positions are planar meters and times are seconds; fitted rates are per hour. The two
fixed anchors (source and destination) are treated as nodes named ``"source"`` and
``"dest"`` unless other names are given.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import EmptyTrace, InsufficientData, UnsortedInput, ValidationError
from .model import RelayProfile, RelaySet

SECONDS_PER_HOUR = 3600.0
# interpolation is not trusted across gaps longer than this many fix periods
GAP_FACTOR = 10.0
EARTH_RADIUS_M = 6_371_008.8
SOURCE, DEST = "source", "dest"


@dataclass(frozen=True)
class PositionRecord:
    time: float
    node_id: str
    x: float
    y: float


@dataclass(frozen=True)
class ContactInterval:
    """Contact between two nodes; the pair is stored in sorted order so (a, b) == (b, a)."""

    node_a: str
    node_b: str
    t_start: float
    t_end: float

    def __post_init__(self):
        a, b = sorted((str(self.node_a), str(self.node_b)))
        object.__setattr__(self, "node_a", a)
        object.__setattr__(self, "node_b", b)
        if not self.t_start < self.t_end:
            raise ValidationError(f"contact needs t_start < t_end, got {self.t_start}, {self.t_end}")

    def involves(self, u: str, v: str) -> bool:
        return {self.node_a, self.node_b} == {str(u), str(v)}


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def project_equirectangular(lat, lon, lat0: float, lon0: float):
    """Project degrees to planar meters around ``(lat0, lon0)``.

    Distortion stays below 0.1% over the few kilometres of a city centre.
    """
    lat = np.radians(np.asarray(lat, dtype=float))
    lon = np.radians(np.asarray(lon, dtype=float))
    phi0 = math.radians(lat0)
    x = EARTH_RADIUS_M * (lon - math.radians(lon0)) * math.cos(phi0)
    y = EARTH_RADIUS_M * (lat - phi0)
    return x, y


def _segments_in_disk(t, x, y, ax, ay, r):
    """Sub-intervals of each fix-to-fix segment spent within ``r`` of ``(ax, ay)``."""
    dx, dy = x[:-1] - ax, y[:-1] - ay
    vx, vy = np.diff(x), np.diff(y)
    a = vx * vx + vy * vy
    b = dx * vx + dy * vy
    c = dx * dx + dy * dy - r * r
    lo = np.zeros_like(a)
    hi = np.zeros_like(a)
    moving = a > 0
    disc = b * b - a * c
    ok = moving & (disc >= 0)
    root = np.sqrt(np.where(ok, disc, 0.0))
    safe_a = np.where(moving, a, 1.0)
    lo = np.where(ok, (-b - root) / safe_a, lo)
    hi = np.where(ok, (-b + root) / safe_a, hi)
    still = ~moving & (c <= 0)
    lo = np.where(still, 0.0, lo)
    hi = np.where(still, 1.0, hi)
    lo, hi = np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)
    dt = np.diff(t)
    return t[:-1] + lo * dt, t[:-1] + hi * dt, hi > lo


def _merge(starts, ends, tol: float = 1e-9):
    out = []
    for s, e in zip(starts, ends):
        if out and s <= out[-1][1] + tol:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return out


def _group(positions: Iterable[PositionRecord]):
    by_node = defaultdict(list)
    for p in positions:
        by_node[str(p.node_id)].append((float(p.time), float(p.x), float(p.y)))
    if not by_node:
        raise EmptyTrace("no position records")
    return by_node


def detect_contacts(positions: Iterable[PositionRecord], anchors: Mapping[str, tuple],
                    range_m: float, gap_factor: float = GAP_FACTOR) -> list:
    """Maximal intervals during which a node is within ``range_m`` of each anchor.

    Positions are linearly interpolated between consecutive fixes of the same node; a gap
    longer than ``gap_factor`` times the node's median fix period breaks interpolation.
    """
    if not range_m > 0:
        raise ValidationError("range_m must be > 0")
    by_node = _group(positions)
    contacts = []
    for node in sorted(by_node):
        rows = np.asarray(by_node[node])
        t, x, y = rows[:, 0], rows[:, 1], rows[:, 2]
        dt = np.diff(t)
        if np.any(dt < 0):
            raise UnsortedInput(f"fixes of node {node!r} are not sorted by time")
        positive = dt[dt > 0]
        period = float(np.median(positive)) if len(positive) else 0.0
        usable = (dt > 0) & (dt <= gap_factor * period)
        for name, (ax, ay) in anchors.items():
            starts, ends, hit = _segments_in_disk(t, x, y, float(ax), float(ay), float(range_m))
            keep = hit & usable
            for s, e in _merge(starts[keep], ends[keep]):
                contacts.append(ContactInterval(node, name, s, e))
    contacts.sort(key=lambda c: (c.t_start, c.node_a, c.node_b))
    return contacts


def extract_intercontacts(contacts: Iterable[ContactInterval], node_id, anchor) -> np.ndarray:
    """Gaps between the end of one contact and the start of the next for one node pair."""
    mine = sorted((c for c in contacts if c.involves(node_id, anchor)), key=lambda c: c.t_start)
    if len(mine) < 2:
        raise InsufficientData(f"{len(mine)} contacts between {node_id!r} and {anchor!r}; need >= 2")
    start = np.array([c.t_start for c in mine])
    end = np.array([c.t_end for c in mine])
    gaps = start[1:] - end[:-1]
    if np.any(gaps <= 0):
        raise UnsortedInput(f"overlapping contacts between {node_id!r} and {anchor!r}")
    return gaps


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    density: np.ndarray
    exponential_density: np.ndarray  # fitted exponential pdf at bin centres

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "density": self.density.tolist(),
            "exponential_density": self.exponential_density.tolist(),
        }


def histogram_summary(samples: np.ndarray, bins: int = 30) -> Histogram:
    samples = np.asarray(samples, dtype=float)
    density, edges = np.histogram(samples, bins=bins, density=True)
    rate = 1.0 / samples.mean()
    centres = 0.5 * (edges[1:] + edges[:-1])
    return Histogram(edges, density, rate * np.exp(-rate * centres))


@dataclass(frozen=True)
class RelayFit:
    relay_id: str
    lambda_hat: float
    mu_hat: float
    source_samples: np.ndarray = field(repr=False)
    dest_samples: np.ndarray = field(repr=False)

    @property
    def counts(self) -> tuple:
        return len(self.source_samples), len(self.dest_samples)


@dataclass(frozen=True)
class FittedRates:
    fits: tuple
    skipped: tuple = ()

    def __iter__(self):
        return iter(self.fits)

    def __len__(self):
        return len(self.fits)

    def by_id(self, relay_id) -> RelayFit:
        for f in self.fits:
            if f.relay_id == str(relay_id):
                return f
        raise KeyError(relay_id)

    def to_relays(self) -> RelaySet:
        return RelaySet(RelayProfile(f.relay_id, f.lambda_hat, f.mu_hat) for f in self.fits)

    def to_dict(self, bins: int = 30) -> dict:
        """Relay-file schema plus fitting diagnostics (ignored when loaded as relays)."""
        relays = []
        for f in self.fits:
            relays.append({
                "id": f.relay_id,
                "lambda": f.lambda_hat,
                "mu": f.mu_hat,
                "samples": {"source": len(f.source_samples), "dest": len(f.dest_samples)},
                "histogram": {
                    "source": histogram_summary(f.source_samples, bins).to_dict(),
                    "dest": histogram_summary(f.dest_samples, bins).to_dict(),
                },
            })
        return {"unit": "1/hour", "relays": relays, "skipped": list(self.skipped)}


def fit_rate(samples) -> float:
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise InsufficientData(f"{len(samples)} samples; need >= 2 to fit a rate")
    if np.any(samples <= 0):
        raise ValidationError("inter-contact samples must be > 0")
    return 1.0 / float(samples.mean())


def fit_rates(samples: Mapping[str, tuple]) -> FittedRates:
    """Fit ``lambda = 1/mean`` and ``mu = 1/mean`` per relay.

    ``samples`` maps relay id to ``(source_gaps_hours, dest_gaps_hours)``.
    """
    fits = []
    for rid, (src, dst) in samples.items():
        src = np.asarray(src, dtype=float)
        dst = np.asarray(dst, dtype=float)
        fits.append(RelayFit(str(rid), fit_rate(src), fit_rate(dst), src, dst))
    return FittedRates(tuple(fits))


def fit_from_contacts(contacts, source=SOURCE, dest=DEST, relays: Optional[Iterable] = None,
                      time_unit_s: float = SECONDS_PER_HOUR) -> FittedRates:
    """Fit every relay (all non-anchor nodes by default) that has enough contacts.

    Relays lacking two contacts with either anchor are listed in ``skipped``.
    """
    contacts = list(contacts)
    if relays is None:
        nodes = {c.node_a for c in contacts} | {c.node_b for c in contacts}
        relays = sorted(nodes - {str(source), str(dest)}, key=_natural_key)
    fits, skipped = [], []
    for rid in relays:
        try:
            src = extract_intercontacts(contacts, rid, source) / time_unit_s
            dst = extract_intercontacts(contacts, rid, dest) / time_unit_s
            fits.append(RelayFit(str(rid), fit_rate(src), fit_rate(dst), src, dst))
        except InsufficientData:
            skipped.append(str(rid))
    if not fits:
        raise InsufficientData("no relay has two contacts with both anchors")
    return FittedRates(tuple(fits), tuple(skipped))


def _natural_key(s: str):
    head = s.rstrip("0123456789")
    tail = s[len(head):]
    return (head, int(tail) if tail else -1, s)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def read_positions(path) -> list:
    """Headerless ``time_s,node_id,x_m,y_m`` rows."""
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 4:
                raise ValidationError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                out.append(PositionRecord(float(row[0]), row[1].strip(), float(row[2]), float(row[3])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise EmptyTrace(f"{path} holds no position records")
    return out


def read_contacts(path) -> list:
    """Headerless ``t_start_s,t_end_s,node_a,node_b`` rows."""
    out = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 4:
                raise ValidationError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                out.append(ContactInterval(row[2].strip(), row[3].strip(), float(row[0]), float(row[1])))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise EmptyTrace(f"{path} holds no contacts")
    return out


def write_positions(path, positions: Iterable[PositionRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for p in positions:
            w.writerow([repr(p.time), p.node_id, repr(p.x), repr(p.y)])


# ---------------------------------------------------------------------------
# synthetic traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticTrace:
    positions: list
    anchors: dict
    # passage instants per (node, anchor), in seconds
    events: dict


def synthetic_trace(rates: Mapping[str, tuple], horizon_h: float, seed: int, *,
                    range_m: float = 50.0, fix_s: float = 7.0, speed_mps: float = 10.0,
                    passage_s: float = 30.0, idle_fix_s: float = 3600.0,
                    anchor_gap_m: float = 5_000.0) -> SyntheticTrace:
    """GPS-like fixes for nodes whose anchor passages form Poisson processes.

    ``rates`` maps node id to ``(rate_source, rate_dest)`` per hour. Each passage is a
    straight line through the anchor's disk at ``speed_mps``, sampled every ``fix_s``
    seconds for ``passage_s`` seconds either side of closest approach. Between passages
    the node parks far from both anchors and reports every ``idle_fix_s`` seconds.
    A passage starting less than ``2 * passage_s`` plus ``GAP_FACTOR + 4`` fix periods
    after the previous one is dropped, so that consecutive passages are never joined by
    interpolation; ``events`` records only the passages kept.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    anchors = {SOURCE: (0.0, 0.0), DEST: (anchor_gap_m, 0.0)}
    horizon = horizon_h * SECONDS_PER_HOUR
    park = np.array([anchor_gap_m / 2.0, 4.0 * anchor_gap_m])
    positions, events = [], {}
    for node in sorted(rates, key=_natural_key):
        lam_src, lam_dst = rates[node]
        raw = []
        for name, rate in ((SOURCE, lam_src), (DEST, lam_dst)):
            count = rng.poisson(rate * horizon_h)
            raw.extend((t, name) for t in np.sort(rng.uniform(0.0, horizon, count)))
        raw.sort()
        min_sep = 2.0 * passage_s + (GAP_FACTOR + 4.0) * fix_s
        kept, last = [], -math.inf
        for t, name in raw:
            if t - last > min_sep and passage_s + fix_s < t < horizon - passage_s - fix_s:
                kept.append((t, name))
                last = t
        fixes = []
        busy = []
        for t, name in kept:
            ax, ay = anchors[name]
            theta = rng.uniform(0.0, 2.0 * math.pi)
            offset = rng.uniform(-0.5, 0.5) * range_m
            u = np.array([math.cos(theta), math.sin(theta)])
            nrm = np.array([-u[1], u[0]])
            grid = np.arange(math.ceil((t - passage_s) / fix_s), math.floor((t + passage_s) / fix_s) + 1) * fix_s
            for g in grid:
                px, py = np.array([ax, ay]) + offset * nrm + speed_mps * (g - t) * u
                fixes.append((float(g), float(px), float(py)))
            busy.append((grid[0] - idle_fix_s, grid[-1] + idle_fix_s))
        idle = np.arange(0.0, horizon, idle_fix_s)
        if busy:
            b = np.array(busy)
            k = np.searchsorted(b[:, 0], idle, side="right") - 1
            clear = (k < 0) | (idle >= b[np.maximum(k, 0), 1])
            idle = idle[clear]
        fixes.extend((float(g), float(park[0]), float(park[1])) for g in idle)
        fixes.sort()
        positions.extend(PositionRecord(t, node, x, y) for t, x, y in fixes)
        events[node] = {
            SOURCE: np.array([t for t, n in kept if n == SOURCE]),
            DEST: np.array([t for t, n in kept if n == DEST]),
        }
    positions.sort(key=lambda p: (p.time, p.node_id))
    return SyntheticTrace(positions, anchors, events)
