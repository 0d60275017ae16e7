"""Time-to-live tradeoff: storage gain against delivery failure.

Each copy is dropped by an exponential timer running at ``epsilon`` times the relay's
destination-contact rate. None of the quantities below depend on the rates themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TTLReport:
    epsilon: float
    N: int
    failure_prob: float
    gain: float
    rho: tuple

    @classmethod
    def build(cls, epsilon: float, mean_residual_dest: Sequence[float]) -> "TTLReport":
        g = storage_gain(epsilon)
        return cls(
            float(epsilon),
            len(mean_residual_dest),
            failure_prob(epsilon, len(mean_residual_dest)),
            g,
            tuple(g * float(m) for m in mean_residual_dest),
        )


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")
    return epsilon


def storage_gain(epsilon: float) -> float:
    epsilon = _check_epsilon(epsilon)
    return epsilon / (1.0 + epsilon)


def failure_prob(epsilon: float, N: int) -> float:
    """Probability that no copy reaches the destination."""
    if N < 1:
        raise DomainError("N must be >= 1")
    return storage_gain(epsilon) ** N


def epsilon_for_target(D: float, N: int) -> float:
    """TTL rate multiplier giving failure probability ``D`` with ``N`` relays."""
    if not 0.0 < D < 1.0:
        raise DomainError(f"target failure probability must lie in (0, 1), got {D}")
    if N < 1:
        raise DomainError("N must be >= 1")
    root = D ** (1.0 / N)
    return root / (1.0 - root)


def tradeoff_curve(N: int, grid: Iterable[float]) -> list:
    """``(G, D)`` pairs with ``D = G**N``."""
    if N < 1:
        raise DomainError("N must be >= 1")
    out = []
    for g in grid:
        g = float(g)
        if not 0.0 <= g < 1.0:
            raise DomainError(f"gain must lie in [0, 1), got {g}")
        out.append((g, g**N))
    return out


def parse_grid(text: str) -> np.ndarray:
    """``"a:b:step"`` (inclusive of b within rounding) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise DomainError("grid must be start:stop:step with step > 0")
        start, stop, step = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(max(count, 0)), 12)
    return np.array([float(x) for x in text.split(",") if x.strip()])
