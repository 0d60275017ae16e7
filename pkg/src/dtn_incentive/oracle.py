"""Brute-force Monte Carlo estimators of success probabilities.

These sample the delivery race directly and share no code with the closed forms in
``success``. Every estimator draws ``samples`` races in batches; batch ``i`` uses the
PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(i,))`` (equivalently
``SeedSequence(seed).spawn(...)[i]``), so results depend only on ``(seed, samples)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import IncompleteLog, TooManyRelays, ValidationError
from .model import EncounterLog, InfoSetting, validate_profiles
from .success import Knowledge

BATCH = 1 << 17


@dataclass(frozen=True)
class OracleEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int

    def within(self, value: float, k: float = 3.0) -> bool:
        """True if ``value`` lies within ``k`` standard errors of the estimate.

        The standard error used is the larger of the estimate's own and the one implied by
        ``value`` itself, so degenerate estimates (mean exactly 0 or 1) remain testable.
        """
        se_null = math.sqrt(max(value * (1.0 - value), 0.0) / self.samples)
        return abs(value - self.mean) <= k * max(self.std_error, se_null) + 1e-15


def batch_rngs(seed: int, samples: int):
    """Yield ``(rng, batch_size)`` pairs following the documented splitting rule."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    nbatch = -(-samples // BATCH)
    for i in range(nbatch):
        size = min(BATCH, samples - i * BATCH)
        ss = np.random.SeedSequence(seed, spawn_key=(i,))
        yield np.random.Generator(np.random.PCG64(ss)), size


def _estimate(wins: int, samples: int, seed: int) -> OracleEstimate:
    mean = wins / samples
    return OracleEstimate(mean, math.sqrt(mean * (1.0 - mean) / samples), samples, seed)


def _truncated_exp(rng, lam: np.ndarray, upper: float, size) -> np.ndarray:
    """Exponential(lam) draws conditioned to be below ``upper`` (inverse CDF)."""
    u = rng.random(size)
    return -np.log1p(u * np.expm1(-lam * upper)) / lam


def oracle_actual(log: EncounterLog, relays, n: int, samples: int, seed: int) -> OracleEstimate:
    """Win frequency of the ``n``-th relay when every meeting time is fixed."""
    relays = validate_profiles(relays)
    if len(log) != len(relays):
        raise IncompleteLog(f"log has {len(log)} of {len(relays)} relays")
    idx = np.array([relays.index(r) for r in log.ell])
    s = np.asarray(log.s)
    mu = relays.mu[idx]
    wins = 0
    for rng, size in batch_rngs(seed, samples):
        deliver = s + rng.exponential(1.0 / mu, (size, len(mu)))
        wins += int(np.count_nonzero(np.argmin(deliver, axis=1) == n - 1))
    return _estimate(wins, samples, seed)


def _anon_subsets(lam_others: np.ndarray, k: int, s_n: float):
    m = len(lam_others)
    combos = list(itertools.combinations(range(m), k))
    member = np.zeros((len(combos), m), dtype=bool)
    for row, combo in enumerate(combos):
        member[row, list(combo)] = True
    with np.errstate(divide="ignore"):
        log_in = np.log(-np.expm1(-lam_others * s_n))
    log_out = -lam_others * s_n
    logw = np.where(member, log_in, log_out).sum(axis=1)
    w = np.exp(logw - logw.max())
    return member, w / w.sum()


def oracle_setting(setting, known: Knowledge, relays, samples: int, seed: int) -> OracleEstimate:
    """Win frequency of a relay given exactly the knowledge its setting grants.

    Unknown quantities are drawn from their conditional laws: earlier holders' meeting
    times from the exponential truncated to ``[0, s_n)``, unknown earlier-holder identities
    from their posterior given the count, and later meeting times from ``s_n`` onwards.
    """
    relays = validate_profiles(relays)
    setting = InfoSetting.parse(setting)
    N = len(relays)
    cand = relays.index(known.relay_id)
    s_n = float(known.s_n)
    lam, mu = relays.lam, relays.mu
    others = np.array([u for u in range(N) if u != cand], dtype=np.int64)

    if setting in (InfoSetting.FULL, InfoSetting.PARTIAL_ID):
        if known.prior_ids is None:
            raise ValidationError(f"{setting.value} oracle needs earlier identities")
        prior = np.array([relays.index(r) for r in known.prior_ids], dtype=np.int64)
        if setting is InfoSetting.FULL:
            if known.prior_times is None:
                raise ValidationError("full-information oracle needs earlier meeting times")
            prior_times = np.asarray(known.prior_times, dtype=float)
    elif setting is InfoSetting.PARTIAL_ANON:
        if known.n is None:
            raise ValidationError("P- oracle needs the arrival position")
        if N > 20:
            raise TooManyRelays("posterior enumeration is limited to 20 relays")
        member, weights = _anon_subsets(lam[others], known.n - 1, s_n)

    wins = 0
    for rng, size in batch_rngs(seed, samples):
        meet = np.empty((size, N))
        meet[:, cand] = s_n
        if setting is InfoSetting.NONE:
            meet[:, others] = rng.exponential(1.0 / lam[others], (size, len(others)))
        else:
            if setting is InfoSetting.PARTIAL_ANON:
                rows = member[rng.choice(len(weights), size=size, p=weights)]
                early = np.zeros((size, N), dtype=bool)
                early[:, others] = rows
            else:
                early = np.zeros((size, N), dtype=bool)
                early[:, prior] = True
            future = s_n + rng.exponential(1.0 / lam, (size, N))
            past = _truncated_exp(rng, np.broadcast_to(lam, (size, N)), s_n, (size, N))
            if setting is InfoSetting.FULL:
                past[:, prior] = prior_times
            meet[:] = np.where(early, past, future)
            meet[:, cand] = s_n
        deliver = meet + rng.exponential(1.0 / mu, (size, N))
        wins += int(np.count_nonzero(np.argmin(deliver, axis=1) == cand))
    return _estimate(wins, samples, seed)
