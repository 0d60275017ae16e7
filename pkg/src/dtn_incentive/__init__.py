"""Incentive rewards for two-hop relaying in heterogeneous delay-tolerant networks."""

__version__ = "0.1.0"
