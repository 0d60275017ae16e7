"""Built-in relay populations and cost settings used by the experiments and tests.

Rates are per hour. ``SYNTHETIC_RATES`` is a ten-relay synthetic population; ``TAXI_RATES``
is a ten-relay population measured from taxi traces.
"""
from __future__ import annotations

from .model import (
    CostParams,
    Exponential,
    FoldedNormal,
    Hyperexponential,
    RelayProfile,
    RelaySet,
    Weibull,
)

DEFAULT_COSTS = CostParams(c_r=0.04, c_s=0.01, c_d=0.4)
SLOT_HOURS = 10.0

SYNTHETIC_RATES = (
    ("r1", 0.6530, 0.7945),
    ("r2", 0.5296, 0.2824),
    ("r3", 0.6714, 0.6704),
    ("r4", 0.6685, 0.6670),
    ("r5", 0.2483, 0.2492),
    ("r6", 0.1647, 0.1996),
    ("r7", 0.2500, 0.2000),
    ("r8", 0.1999, 0.1991),
    ("r9", 0.2002, 0.2015),
    ("r10", 0.1991, 0.2005),
)

TAXI_RATES = (
    ("t1", 0.0613, 0.0298),
    ("t2", 0.0423, 0.0345),
    ("t3", 0.0616, 0.0382),
    ("t4", 0.0340, 0.0370),
    ("t5", 0.0842, 0.0510),
    ("t6", 0.0731, 0.0445),
    ("t7", 0.0452, 0.0322),
    ("t8", 0.0691, 0.0513),
    ("t9", 0.0596, 0.0309),
    ("t10", 0.1095, 0.0252),
)

# family per synthetic relay for the mixed-mobility scenario; shape parameters are our choice
HYPEREXP_SCV = 2.0
WEIBULL_SHAPES = {"r5": 0.8, "r6": 1.2, "r7": 1.5}
FOLDED_LOC_OVER_SCALE = 1.0


def _exponential(rows) -> RelaySet:
    return RelaySet(RelayProfile(rid, lam, mu) for rid, lam, mu in rows)


def synthetic_exponential() -> RelaySet:
    return _exponential(SYNTHETIC_RATES)


def taxis() -> RelaySet:
    return _exponential(TAXI_RATES)


def _family(rid: str, mean: float):
    k = int(rid[1:])
    if k <= 2:
        return Exponential(1.0 / mean)
    if k <= 4:
        return Hyperexponential.balanced(mean, HYPEREXP_SCV)
    if k <= 7:
        return Weibull.with_mean(mean, WEIBULL_SHAPES[rid])
    return FoldedNormal.with_mean(mean, FOLDED_LOC_OVER_SCALE)


def synthetic_mixed() -> RelaySet:
    """Synthetic rates with r1-r2 exponential, r3-r4 hyperexponential, r5-r7 Weibull and
    r8-r10 folded normal inter-contact times, each scaled to the tabulated mean."""
    return RelaySet(
        RelayProfile.from_dists(rid, _family(rid, 1.0 / lam), _family(rid, 1.0 / mu))
        for rid, lam, mu in SYNTHETIC_RATES
    )


def symmetric(n: int = 2, lam: float = 1.0, mu: float = 1.0) -> RelaySet:
    return RelaySet(RelayProfile(f"r{i + 1}", lam, mu) for i in range(n))


SCENARIOS = {
    "synthetic": synthetic_exponential,
    "synthetic-mixed": synthetic_mixed,
    "taxis": taxis,
}
