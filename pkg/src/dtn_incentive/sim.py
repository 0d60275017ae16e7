"""Per-message Monte Carlo experiments: quote, race, settle, and accumulate statistics.

One message is generated per time-slot. For each message every relay's source-meeting
time and destination delay are drawn from its inter-contact laws; relays are quoted in
the order they meet the source, the first holder to reach the destination wins, and the
source pays the winner the quote it froze at hand-over.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import NormalDist
from typing import Optional

import numpy as np

from . import kernels
from .errors import ConfigError, ValidationError
from .mobility import synthesize_batch
from .model import (
    CostParams,
    InfoSetting,
    RelayBaseCost,
    RelaySet,
    load_relays,
    validate_profiles,
)
from .reward import theoretical_expected_payment
from .scenarios import DEFAULT_COSTS, SCENARIOS, SLOT_HOURS
from .success import SuccessModel
from .ttl import failure_prob

QUOTE_ASSUMPTION = "exponential rates from profile means"


@dataclass(frozen=True)
class ExperimentConfig:
    relays: RelaySet
    costs: CostParams = DEFAULT_COSTS
    setting: InfoSetting = InfoSetting.FULL
    messages: int = 10_000
    seed: int = 0
    ttl_epsilon: Optional[float] = None
    truncate_at_delivery: bool = False
    slot_hours: float = SLOT_HOURS
    variant: str = "normalized"
    quote_assumption: str = QUOTE_ASSUMPTION

    def __post_init__(self):
        object.__setattr__(self, "relays", validate_profiles(self.relays))
        object.__setattr__(self, "setting", InfoSetting.parse(self.setting))
        if int(self.messages) < 1:
            raise ConfigError("messages must be >= 1")
        object.__setattr__(self, "messages", int(self.messages))
        if self.ttl_epsilon is not None and not float(self.ttl_epsilon) > 0:
            raise ConfigError("ttl_epsilon must be > 0 when given")
        if self.variant not in ("normalized", "as_written"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.quote_assumption != QUOTE_ASSUMPTION:
            raise ConfigError(f"only {QUOTE_ASSUMPTION!r} quoting is supported")

    def replace(self, **changes) -> "ExperimentConfig":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        return {
            "relays": self.relays.to_json(),
            "costs": self.costs.to_dict(),
            "setting": self.setting.value,
            "messages": self.messages,
            "seed": self.seed,
            "ttl_epsilon": self.ttl_epsilon,
            "truncate_at_delivery": self.truncate_at_delivery,
            "slot_hours": self.slot_hours,
            "variant": self.variant,
            "quote_assumption": self.quote_assumption,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        """Build a config from parsed JSON.

        ``relays`` is an inline array, a path to a relay file (relative to ``base_dir``),
        or omitted in favour of ``scenario`` naming a built-in population.
        ``costs`` is an object or a ``"c_d,c_r,c_s"`` string.
        """
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__) | {"scenario"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "relays" in d:
                rel = d["relays"]
                if isinstance(rel, str):
                    path = Path(rel)
                    if base_dir is not None and not path.is_absolute():
                        path = base_dir / path
                    rel = json.loads(path.read_text())
                relays = load_relays(rel)
            elif "scenario" in d:
                try:
                    relays = SCENARIOS[d["scenario"]]()
                except KeyError:
                    raise ConfigError(f"unknown scenario {d['scenario']!r}; choose from {sorted(SCENARIOS)}") from None
            else:
                raise ConfigError("config needs 'relays' or 'scenario'")
            costs = d.get("costs", DEFAULT_COSTS)
            if isinstance(costs, str):
                costs = CostParams.from_cli(costs)
            elif isinstance(costs, dict):
                costs = CostParams(c_r=costs["c_r"], c_s=costs["c_s"], c_d=costs["c_d"])
            kw = {k: d[k] for k in (
                "setting", "messages", "seed", "ttl_epsilon", "truncate_at_delivery",
                "slot_hours", "variant", "quote_assumption") if k in d and d[k] is not None}
            return cls(relays=relays, costs=costs, **kw)
        except ConfigError:
            raise
        except (ValidationError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=path.parent)


@dataclass
class SimulationReport:
    config: ExperimentConfig
    winners: np.ndarray            # relay index per slot, -1 if undelivered
    slot_payments: np.ndarray      # payment per slot, 0 when undelivered
    rewards: np.ndarray            # (messages, N) reward received per relay and slot
    costs: np.ndarray              # (messages, N) cost incurred per relay and slot
    receptions: np.ndarray         # (messages, N) bool
    holding: np.ndarray            # (messages, N) holding time, nan where not received
    quotes: np.ndarray             # (messages, N) frozen quote, nan where not quoted
    success: np.ndarray            # (messages, N) quoted success probability, nan where not quoted
    positions: np.ndarray          # (messages, N) 1-based hand-over position, 0 if none
    theoretical: float
    post_delivery_receptions: int
    skipped: int
    flags: list = field(default_factory=list)

    @property
    def relay_ids(self) -> tuple:
        return self.config.relays.ids

    @property
    def delivered(self) -> np.ndarray:
        return self.winners >= 0

    @property
    def payments(self) -> np.ndarray:
        """Payments of delivered messages, in slot order."""
        return self.slot_payments[self.delivered]

    @property
    def failures(self) -> int:
        return int(np.count_nonzero(~self.delivered))

    @property
    def running_average(self) -> np.ndarray:
        t = np.arange(1, len(self.slot_payments) + 1)
        return np.cumsum(self.slot_payments) / t

    @property
    def mean_payment(self) -> float:
        return float(self.slot_payments.mean())

    def confidence_interval(self, level: float = 0.99) -> tuple:
        z = NormalDist().inv_cdf(0.5 + level / 2)
        x = self.slot_payments
        half = z * float(x.std(ddof=1)) / math.sqrt(len(x)) if len(x) > 1 else math.inf
        m = float(x.mean())
        return (m - half, m + half)

    @property
    def relative_error(self) -> float:
        return abs(self.mean_payment - self.theoretical) / self.theoretical

    def ledger(self) -> dict:
        M = len(self.winners)
        out = {}
        for j, rid in enumerate(self.relay_ids):
            out[rid] = {
                "receptions": int(self.receptions[:, j].sum()),
                "wins": int(np.count_nonzero(self.winners == j)),
                "reward_total": float(self.rewards[:, j].sum()),
                "cost_total": float(self.costs[:, j].sum()),
                "avg_reward": float(self.rewards[:, j].sum() / M),
                "avg_cost": float(self.costs[:, j].sum() / M),
            }
        return out

    def failure_fraction(self) -> float:
        return self.failures / len(self.winners)

    def mean_holding(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.nanmean(self.holding, axis=0)

    def to_dict(self, per_message: bool = True) -> dict:
        lo, hi = self.confidence_interval()
        cfg = self.config
        d = {
            "config": cfg.to_dict(),
            "backend": kernels.BACKEND,
            "messages": len(self.winners),
            "delivered": int(self.delivered.sum()),
            "failures": self.failures,
            "mean_payment": self.mean_payment,
            "ci99": [lo, hi],
            "theoretical": self.theoretical,
            "relative_error": self.relative_error,
            "post_delivery_receptions": self.post_delivery_receptions,
            "skipped_zero_probability": self.skipped,
            "ledger": self.ledger(),
            "flags": list(self.flags),
        }
        if cfg.ttl_epsilon is not None:
            eps = float(cfg.ttl_epsilon)
            d["ttl"] = {
                "epsilon": eps,
                "failure_fraction": self.failure_fraction(),
                "failure_prob_theory": failure_prob(eps, len(cfg.relays)) if len(cfg.relays) else 1.0,
                "mean_holding": dict(zip(self.relay_ids, map(_nan_to_none, self.mean_holding()))),
                "mean_holding_theory": {
                    p.id: 1.0 / (p.mu * (1.0 + eps)) for p in cfg.relays
                },
            }
        if per_message:
            ids = self.relay_ids
            d["per_message"] = {
                "winner": [ids[w] if w >= 0 else None for w in self.winners.tolist()],
                "payment": self.slot_payments.tolist(),
            }
        return d

    def series_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "payment", "running_avg", "theoretical"])
        for t, (p, r) in enumerate(zip(self.slot_payments.tolist(), self.running_average.tolist()), 1):
            w.writerow([t, repr(p), repr(r), repr(self.theoretical)])
        return buf.getvalue()


def _nan_to_none(x):
    return None if not math.isfinite(x) else float(x)


def _quote_probability(model: SuccessModel, setting: InfoSetting, cand: int, s: float,
                       held_idx: list, held_s: list, variant: str) -> float:
    if setting is InfoSetting.FULL:
        return model.full_idx(held_idx + [cand], np.array(held_s + [s]))
    if setting is InfoSetting.PARTIAL_ID:
        return model.partial_id_idx(cand, held_idx, s)
    if setting is InfoSetting.PARTIAL_ANON:
        return model.partial_anon_idx(cand, s, len(held_idx) + 1, variant)
    return model.none_idx(cand, s)


def run(config: ExperimentConfig) -> SimulationReport:
    """Simulate ``config.messages`` independent messages under one information setting."""
    cfg = config
    relays = cfg.relays
    N, M = len(relays), cfg.messages
    costs = cfg.costs
    base = np.array([RelayBaseCost.of(costs, p).value for p in relays])
    hold_cost_rate = costs.c_s

    root = np.random.SeedSequence(cfg.seed)
    mob_seed, ttl_seed = root.spawn(2)
    src, dst = synthesize_batch(relays, mob_seed, M)
    if cfg.ttl_epsilon is not None:
        ttl_rng = np.random.Generator(np.random.PCG64(ttl_seed))
        drop = ttl_rng.exponential(1.0, (M, N)) / (float(cfg.ttl_epsilon) * relays.mu)
    else:
        drop = np.full((M, N), np.inf)

    winners = np.full(M, -1, dtype=np.int64)
    pay = np.zeros(M)
    rewards = np.zeros((M, N))
    cost = np.zeros((M, N))
    received = np.zeros((M, N), dtype=bool)
    holding = np.full((M, N), np.nan)
    quotes = np.full((M, N), np.nan)
    success = np.full((M, N), np.nan)
    positions = np.zeros((M, N), dtype=np.int64)
    post_delivery = 0
    skipped = 0

    model = SuccessModel(relays) if N else None
    setting = cfg.setting
    for m in range(M):
        s_row, d_row = src[m], dst[m]
        order = np.argsort(s_row, kind="stable")
        held_idx: list = []
        held_s: list = []
        first_delivery = math.inf
        best, best_time = -1, math.inf
        for rank, j in enumerate(order.tolist()):
            s = float(s_row[j])
            if s >= first_delivery:
                if cfg.truncate_at_delivery:
                    post_delivery += N - rank
                    break
                post_delivery += 1
            p = _quote_probability(model, setting, j, s, held_idx, held_s, cfg.variant)
            if not p > 0.0:
                skipped += 1
                continue
            r = costs.c_d + base[j] / p
            quotes[m, j] = r
            success[m, j] = p
            positions[m, j] = len(held_idx) + 1
            held_idx.append(j)
            held_s.append(s)
            received[m, j] = True
            d = float(d_row[j])
            kept = min(d, float(drop[m, j]))
            holding[m, j] = kept
            cost[m, j] = costs.c_r + hold_cost_rate * kept
            if d < drop[m, j]:
                t = s + d
                first_delivery = min(first_delivery, t)
                if t < best_time:
                    best, best_time = j, t
        if best >= 0:
            winners[m] = best
            pay[m] = quotes[m, best]
            rewards[m, best] = pay[m]
            cost[m, best] += costs.c_d

    flags = []
    if cfg.ttl_epsilon is not None:
        flags.append("quotes ignore the TTL: relays are quoted as if copies never drop")
    if any(not p.is_exponential for p in relays):
        flags.append("mobility is non-exponential while quotes assume exponential rates from profile means")
    if cfg.truncate_at_delivery:
        flags.append("relays meeting the source after delivery do not receive the message")
    if post_delivery:
        verb = "were withheld" if cfg.truncate_at_delivery else "happened"
        flags.append(f"{post_delivery} source meetings {verb} after the message had been delivered")
    theory = theoretical_expected_payment(costs, relays) if N else costs.c_d
    return SimulationReport(cfg, winners, pay, rewards, cost, received, holding, quotes, success,
                            positions, theory, post_delivery, skipped, flags)


@dataclass(frozen=True)
class BreakevenSeries:
    relay_id: str
    avg_reward: np.ndarray   # cumulative average reward per slot
    avg_cost: np.ndarray     # cumulative average incurred cost per slot

    @property
    def gap(self) -> float:
        """Final relative gap ``|reward - cost| / cost`` (0 when both are zero)."""
        r, c = float(self.avg_reward[-1]), float(self.avg_cost[-1])
        if c == 0.0:
            return 0.0 if r == 0.0 else math.inf
        return abs(r - c) / c


def breakeven_from(report: SimulationReport, relay_id) -> BreakevenSeries:
    j = report.config.relays.index(relay_id)
    t = np.arange(1, len(report.winners) + 1)
    return BreakevenSeries(
        str(relay_id),
        np.cumsum(report.rewards[:, j]) / t,
        np.cumsum(report.costs[:, j]) / t,
    )


def run_relay_breakeven(config: ExperimentConfig, relay_id) -> BreakevenSeries:
    """Tagged relay's cumulative average reward and cost per time-slot."""
    config.relays.index(relay_id)
    return breakeven_from(run(config), relay_id)


def run_robustness(config: ExperimentConfig) -> SimulationReport:
    """``run`` on profiles whose true inter-contact laws are not all exponential."""
    if all(p.is_exponential for p in config.relays):
        raise ConfigError("robustness runs need at least one non-exponential profile")
    return run(config)


def run_ttl(config: ExperimentConfig) -> SimulationReport:
    """``run`` with per-copy exponential drop timers at rate ``epsilon * mu``."""
    if config.ttl_epsilon is None:
        raise ConfigError("TTL runs need ttl_epsilon")
    if not all(p.is_exponential for p in config.relays):
        raise ConfigError("TTL runs assume exponential profiles")
    return run(config)
