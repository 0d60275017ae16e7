"""Net cost, minimum reward and the source's expected payment."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError, ZeroSuccessProbability
from .model import CostParams, InfoSetting, RelayBaseCost, validate_profiles
from .success import Knowledge, SuccessEstimate, model_for


@dataclass(frozen=True)
class NetCost:
    value: float


@dataclass(frozen=True)
class RewardQuote:
    relay_id: str
    setting: InfoSetting
    s_n: float
    success_estimate: SuccessEstimate
    reward: float


def net_cost(costs: CostParams, mean_residual_dest: float, p: float, reward: float) -> NetCost:
    """Expected net cost of carrying a copy: ``c_r + c_s E[T_d] + (c_d - R) p``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"probability {p} outside [0, 1]")
    return NetCost(costs.c_r + costs.c_s * mean_residual_dest + (costs.c_d - reward) * p)


def min_reward(costs: CostParams, base_cost, p: float) -> float:
    """Smallest promise that makes the relay's expected net cost non-positive."""
    base = base_cost.value if isinstance(base_cost, RelayBaseCost) else float(base_cost)
    if not p > 0.0:
        raise ZeroSuccessProbability("relay cannot succeed; the source should skip it")
    if p > 1.0:
        raise ValidationError(f"probability {p} outside (0, 1]")
    return costs.c_d + base / p


def theoretical_expected_payment(costs: CostParams, relays, setting=None) -> float:
    """Long-run mean payment per message: ``c_d + sum_i (c_r + c_s E[T_d^i])``.

    ``setting`` is accepted and ignored: the value is the same under every setting.
    """
    relays = validate_profiles(relays)
    return costs.c_d + math.fsum(RelayBaseCost.of(costs, p).value for p in relays)


def quote(setting, knowledge: Knowledge, costs: CostParams, relays) -> RewardQuote:
    """Minimum reward the source must promise, given what the relay is told."""
    relays = validate_profiles(relays)
    setting = InfoSetting.parse(setting)
    estimate = model_for(relays).estimate(setting, knowledge)
    base = RelayBaseCost.of(costs, relays.by_id(knowledge.relay_id))
    reward = min_reward(costs, base, estimate.value)
    return RewardQuote(knowledge.relay_id, setting, float(knowledge.s_n), estimate, reward)
