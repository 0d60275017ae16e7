"""Closed-form success probabilities for exponential inter-contact times.

A relay's *success probability* is its chance of being the first holder of the message to
meet the destination. Each information setting conditions on different knowledge:

* full (F): meeting times and identities of all earlier holders;
* partial with identities (P+): the identities of earlier holders, not their times;
* partial without identities (P-): only how many relays hold the message;
* none (N): only the relay's own meeting time.

All four share one building block, the *race table*: with a given set of holders that
have not delivered yet and every other relay still to meet the source, the probability
that a given holder delivers first. It sums over every order in which the remaining relays
may reach the source, and is tabulated once per candidate over all holder sets.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateTime,
    IncompleteLog,
    IndexOutOfRange,
    TooManyRelays,
    ValidationError,
)
from .model import EncounterLog, InfoSetting, validate_profiles

MAX_RELAYS = 20
# relative gap below which psi switches to its lambda == mu branch
PSI_BRANCH_RTOL = 1e-9


def psi(lam, mu, s):
    """Probability that a holder which met the source at an unknown time before ``s`` has
    not yet met the destination, divided by its source rate ``lam``.
    """
    lam = float(lam)
    mu = float(mu)
    s = float(s)
    denom = -math.expm1(-lam * s)
    if denom == 0.0:
        raise DegenerateTime("psi is undefined at s = 0")
    if abs(lam - mu) < PSI_BRANCH_RTOL * max(lam, mu):
        return s * math.exp(-lam * s) / denom
    return (math.exp(-mu * s) - math.exp(-lam * s)) / ((lam - mu) * denom)


def arrived_not_delivered(lam, mu, s):
    """``P(T_s < s and T_s + T_d > s)`` for ``T_s ~ Exp(lam)``, ``T_d ~ Exp(mu)`` (vectorised).

    Equals ``(1 - exp(-lam s)) * lam * psi``; written to stay accurate when ``lam ~ mu``.
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    d = np.abs(lam - mu)
    ds = d * s
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(d > 0, -np.expm1(-ds) / np.where(d > 0, d, 1.0), s)
    return lam * np.exp(-np.minimum(lam, mu) * s) * g


@dataclass(frozen=True)
class SuccessEstimate:
    setting: InfoSetting
    relay_id: str
    relay_index_n: Optional[int]
    s_n: float
    value: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValidationError(f"success probability {self.value} outside [0, 1]")


@dataclass(frozen=True)
class Knowledge:
    """What a relay learns from the source when it receives the message.

    ``n`` is the 1-based arrival position; ``prior_ids``/``prior_times`` describe earlier
    holders. Fields a setting does not grant are ``None``.
    """

    relay_id: str
    s_n: float
    n: Optional[int] = None
    prior_ids: Optional[tuple] = None
    prior_times: Optional[tuple] = None

    @classmethod
    def from_log(cls, setting: InfoSetting, log: EncounterLog, n: int) -> "Knowledge":
        if not 1 <= n <= len(log):
            raise IndexOutOfRange(f"position {n} outside log of length {len(log)}")
        rid, s_n = log.ell[n - 1], log.s[n - 1]
        setting = InfoSetting.parse(setting)
        if setting is InfoSetting.FULL:
            return cls(rid, s_n, n, tuple(log.ell[: n - 1]), tuple(log.s[: n - 1]))
        if setting is InfoSetting.PARTIAL_ID:
            return cls(rid, s_n, n, tuple(log.ell[: n - 1]))
        if setting is InfoSetting.PARTIAL_ANON:
            return cls(rid, s_n, n)
        return cls(rid, s_n)


class SuccessModel:
    """Success-probability evaluator bound to one relay population."""

    def __init__(self, relays, max_relays: int = MAX_RELAYS):
        self.relays = validate_profiles(relays)
        n = len(self.relays)
        if n > max_relays:
            raise TooManyRelays(f"{n} relays exceeds the closed-form limit of {max_relays}")
        self.n = n
        self.lam = np.ascontiguousarray(self.relays.lam)
        self.mu = np.ascontiguousarray(self.relays.mu)
        self._tables: dict = {}
        self._others: dict = {}
        # keep at most a couple of 2**N tables alive for large populations
        self._table_budget = n if n <= 14 else 2

    # -- race table ---------------------------------------------------------

    def race_table(self, cand: int) -> np.ndarray:
        table = self._tables.get(cand)
        if table is None:
            if len(self._tables) >= self._table_budget:
                self._tables.pop(next(iter(self._tables)))
                self._others.clear()
            table = kernels.race_table(self.lam, self.mu, int(cand))
            self._tables[cand] = table
        return table

    def race_win(self, cand: int, holders: Sequence[int]) -> float:
        mask = 1 << cand
        for h in holders:
            mask |= 1 << h
        return float(self.race_table(cand)[mask])

    def _others_setup(self, cand: int):
        """Indices of the other relays and the race table reindexed by their sub-masks."""
        entry = self._others.get(cand)
        if entry is None:
            others = np.array([u for u in range(self.n) if u != cand], dtype=np.int64)
            full = np.zeros(1, dtype=np.int64)
            for u in others:
                full = np.concatenate((full, full | (1 << int(u))))
            vals = np.ascontiguousarray(self.race_table(cand)[full | (1 << cand)])
            entry = (others, vals)
            self._others[cand] = entry
        return entry

    # -- settings -------------------------------------------------------------

    def full(self, log: EncounterLog, n: int) -> float:
        """Full information: the first ``n`` log entries are known."""
        if not 1 <= n <= len(log):
            raise IndexOutOfRange(f"position {n} outside log of length {len(log)}")
        idx = [self.relays.index(r) for r in log.ell[:n]]
        return self.full_idx(idx, np.asarray(log.s[:n]))

    def full_idx(self, idx: Sequence[int], s: np.ndarray) -> float:
        """``full`` on relay indices ``idx`` met at times ``s``; the last entry is the candidate."""
        cand = idx[-1]
        decay = math.exp(-float(np.dot(self.mu[list(idx[:-1])], s[-1] - s[:-1])))
        return decay * self.race_win(cand, idx[:-1])

    def partial_id(self, relay_id, s_n: float, prev_ids: Sequence) -> float:
        """Partial information with the identities of the earlier holders."""
        cand = self.relays.index(relay_id)
        prev = [self.relays.index(r) for r in prev_ids]
        if len(set(prev)) != len(prev) or cand in prev:
            raise ValidationError("earlier holders must be distinct and exclude the relay itself")
        return self.partial_id_idx(cand, prev, s_n)

    def partial_id_idx(self, cand: int, prev: Sequence[int], s_n: float) -> float:
        if prev and s_n <= 0:
            raise DegenerateTime("earlier holders cannot exist at s_n = 0")
        lead = 1.0
        for i in prev:
            lead *= self.lam[i] * psi(self.lam[i], self.mu[i], s_n)
        return lead * self.race_win(cand, prev)

    def partial_anon(self, relay_id, s_n: float, n_count: int, variant: str = "normalized") -> float:
        """Partial information with only the number of holders (``n_count - 1`` before this one).

        ``variant="normalized"`` conditions on exactly ``n_count - 1`` earlier arrivals.
        ``variant="as_written"`` is the unnormalised subset sum, kept for comparison.
        """
        return self.partial_anon_idx(self.relays.index(relay_id), s_n, n_count, variant)

    def partial_anon_idx(self, cand: int, s_n: float, n_count: int, variant: str = "normalized") -> float:
        if not 1 <= n_count <= self.n:
            raise IndexOutOfRange(f"holder count {n_count} outside 1..{self.n}")
        if n_count > 1 and s_n <= 0:
            raise DegenerateTime("earlier holders cannot exist at s_n = 0")
        if n_count == 1:
            return float(self.race_table(cand)[1 << cand])
        others, vals = self._others_setup(cand)
        lam, mu = self.lam[others], self.mu[others]
        stay = np.exp(-lam * s_n)
        joint = np.ascontiguousarray(arrived_not_delivered(lam, mu, s_n))
        k = n_count - 1
        if variant == "as_written":
            x = np.ascontiguousarray(joint / -np.expm1(-lam * s_n))
            return kernels.subset_sum(x, stay, vals, k)
        if variant != "normalized":
            raise ValidationError(f"unknown variant {variant!r}")
        arrived = np.ascontiguousarray(-np.expm1(-lam * s_n))
        num = kernels.subset_sum(joint, stay, vals, k)
        den = kernels.subset_sum(arrived, stay, np.ones_like(vals), k)
        if den <= 0.0:
            raise DegenerateTime(f"no configuration with {k} earlier holders is possible at s={s_n}")
        return min(1.0, num / den)

    def none(self, relay_id, s: float) -> float:
        """No information: only the relay's own meeting time ``s``."""
        return self.none_idx(self.relays.index(relay_id), s)

    def none_idx(self, cand: int, s: float) -> float:
        if s < 0:
            raise ValidationError("meeting time must be >= 0")
        others, vals = self._others_setup(cand)
        if len(others) == 0:
            return float(vals[0])
        lam, mu = self.lam[others], self.mu[others]
        joint = np.ascontiguousarray(arrived_not_delivered(lam, mu, s))
        stay = np.ascontiguousarray(np.exp(-lam * s))
        return min(1.0, kernels.subset_sum(joint, stay, vals, -1))

    def actual(self, log: EncounterLog, n: int) -> float:
        """Success probability of the ``n``-th relay given every meeting time."""
        if len(log) != self.n:
            raise IncompleteLog(f"log has {len(log)} of {self.n} relays")
        if not 1 <= n <= self.n:
            raise IndexOutOfRange(f"position {n} outside 1..{self.n}")
        idx = np.array([self.relays.index(r) for r in log.ell])
        s = np.append(np.asarray(log.s), np.inf)
        mu = self.mu[idx]
        mu_n = mu[n - 1]
        total = 0.0
        for i in range(n, self.n + 1):  # holders are positions 1..i during (s_i, s_{i+1}]
            held = mu[:i]
            alive = math.exp(-float(np.sum(held * (s[i - 1] - s[:i]))))
            rate = float(held.sum())
            frac = -math.expm1(-rate * (s[i] - s[i - 1])) if np.isfinite(s[i]) else 1.0
            total += alive * (mu_n / rate) * frac
        return min(1.0, total)

    def estimate(self, setting, knowledge: Knowledge, variant: str = "normalized") -> SuccessEstimate:
        setting = InfoSetting.parse(setting)
        k = knowledge
        if setting is InfoSetting.FULL:
            if k.prior_ids is None or k.prior_times is None:
                raise ValidationError("full information needs earlier identities and times")
            log = EncounterLog(tuple(k.prior_times) + (k.s_n,), tuple(k.prior_ids) + (k.relay_id,))
            value = self.full(log, len(log))
        elif setting is InfoSetting.PARTIAL_ID:
            if k.prior_ids is None:
                raise ValidationError("P+ needs the identities of earlier holders")
            value = self.partial_id(k.relay_id, k.s_n, k.prior_ids)
        elif setting is InfoSetting.PARTIAL_ANON:
            if k.n is None:
                raise ValidationError("P- needs the arrival position")
            value = self.partial_anon(k.relay_id, k.s_n, k.n, variant)
        else:
            value = self.none(k.relay_id, k.s_n)
        return SuccessEstimate(setting, k.relay_id, k.n, k.s_n, value)


_MODELS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def model_for(relays) -> SuccessModel:
    """Shared ``SuccessModel`` for a relay set (tables are reused across calls)."""
    relays = validate_profiles(relays)
    model = _MODELS.get(relays)
    if model is None:
        model = SuccessModel(relays)
        _MODELS[relays] = model
    return model


def p_full(log: EncounterLog, relays, n: int) -> float:
    return model_for(relays).full(log, n)


def p_partial_id(s_n: float, n: int, prev_ids: Sequence, relays, relay_id) -> float:
    if len(prev_ids) != n - 1:
        raise ValidationError(f"expected {n - 1} earlier holders, got {len(prev_ids)}")
    return model_for(relays).partial_id(relay_id, s_n, prev_ids)


def p_partial_anon(s_n: float, n_count: int, relays, relay_id, variant: str = "normalized") -> float:
    return model_for(relays).partial_anon(relay_id, s_n, n_count, variant)


def p_none(s: float, relay_id, relays) -> float:
    return model_for(relays).none(relay_id, s)


def p_actual(log: EncounterLog, relays, n: int) -> float:
    return model_for(relays).actual(log, n)
