"""Sampling of inter-contact and residual inter-contact times, and encounter-log synthesis."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EncounterLog, InterContactDistribution, mean_residual, validate_profiles

WARMUP_MEANS = 10_000
# inspection windows are this many mean gaps apart so successive draws are nearly independent
WINDOW_MEANS = 20
CHUNK = 20_000


@dataclass(frozen=True)
class ContactStream:
    relay_id: str
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("contact instants must be strictly increasing")
        object.__setattr__(self, "times", t)

    def gaps(self) -> np.ndarray:
        return np.diff(self.times)


def sample_intercontact(dist: InterContactDistribution, rng: np.random.Generator, size=None):
    return dist.sample(rng, size)


def _times_past(dist, rng, horizon: float) -> np.ndarray:
    """Renewal instants from 0 until the first one beyond ``horizon`` (inclusive)."""
    mean = dist.mean()
    chunks, total = [], 0.0
    while total <= horizon:
        need = max(int((horizon - total) / mean * 1.05) + 64, 64)
        gaps = np.maximum(dist.sample(rng, need), np.finfo(float).tiny)
        chunks.append(gaps)
        total += float(gaps.sum())
    times = np.cumsum(np.concatenate(chunks))
    return times[: np.searchsorted(times, horizon, side="right") + 1]


def renewal_stream(dist: InterContactDistribution, rng: np.random.Generator, horizon: float,
                   relay_id: str = "") -> ContactStream:
    """Contact instants in ``(0, horizon]`` of a renewal process started with a contact at 0."""
    times = _times_past(dist, rng, horizon)
    return ContactStream(relay_id, times[times <= horizon])


def sample_residual(dist: InterContactDistribution, rng: np.random.Generator, size=None,
                    warmup_means: float = WARMUP_MEANS):
    """Forward-recurrence draws: time from a random inspection instant to the next contact.

    A renewal stream is run for ``warmup_means`` mean gaps, then inspected once at a
    uniform point inside each of ``size`` consecutive windows of ``WINDOW_MEANS`` mean gaps.
    """
    mean_residual(dist)  # raises NonFiniteMoment when undefined
    count = 1 if size is None else int(np.prod(size))
    mean = dist.mean()
    warm = warmup_means * mean
    window = WINDOW_MEANS * mean
    out = np.empty(count)
    done = 0
    while done < count:
        k = min(CHUNK, count - done)
        stream = _times_past(dist, rng, warm + k * window)
        points = warm + window * (np.arange(k) + rng.random(k))
        nxt = np.searchsorted(stream, points, side="right")
        out[done:done + k] = stream[nxt] - points
        done += k
    out = np.maximum(out, np.finfo(float).tiny)
    return float(out[0]) if size is None else out.reshape(size)


def _streams(relays, seed):
    """One independent generator per (relay, endpoint), derived from ``seed``."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(2 * len(relays))
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def synthesize_batch(relays, seed, messages: int):
    """Source-meeting times and destination delays for ``messages`` independent messages.

    Returns two ``(messages, N)`` arrays: the residual time until each relay meets the
    source, and the residual time from that meeting until it meets the destination.
    """
    relays = validate_profiles(relays)
    gens = _streams(relays, seed)
    n = len(relays)
    src = np.empty((messages, n))
    dst = np.empty((messages, n))
    for j, p in enumerate(relays):
        src[:, j] = sample_residual(p.source_dist, gens[2 * j], messages)
        dst[:, j] = sample_residual(p.dest_dist, gens[2 * j + 1], messages)
    return src, dst


def synthesize_encounter_log(relays, rng):
    """One message: the encounter log (sorted by source meeting) and destination delays.

    ``rng`` may be a seed, a ``SeedSequence`` or a ``Generator``; a generator is used to
    draw a fresh seed so the per-relay streams stay independent.
    """
    relays = validate_profiles(relays)
    if isinstance(rng, np.random.Generator):
        rng = np.random.SeedSequence(int(rng.integers(2**63)))
    src, dst = synthesize_batch(relays, rng, 1)
    log = EncounterLog.from_times(dict(zip(relays.ids, src[0])))
    delays = {rid: float(d) for rid, d in zip(relays.ids, dst[0])}
    return log, tuple(delays[r] for r in log.ell)
