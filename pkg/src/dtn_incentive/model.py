"""Domain types: inter-contact distributions, relay profiles, costs and encounter logs.

Time is measured in hours everywhere in the package.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateId,
    NonFiniteMoment,
    NonPositiveRate,
    UnknownRelay,
    ValidationError,
)


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise NonPositiveRate(f"{name} must be finite and > 0, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# inter-contact distributions
# ---------------------------------------------------------------------------


class InterContactDistribution:
    """Base class for the four supported inter-contact time families."""

    kind: str = ""

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def scaled(self, a: float) -> "InterContactDistribution":
        """Distribution of ``a * X`` (change of time unit)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def assumed_rate(self) -> float:
        """Exponential-assumption rate, i.e. the reciprocal of the mean."""
        return 1.0 / self.mean()


@dataclass(frozen=True)
class Exponential(InterContactDistribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / self.rate**2

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def scaled(self, a):
        return Exponential(self.rate / _positive("a", a))

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Hyperexponential(InterContactDistribution):
    probs: tuple
    rates: tuple
    kind = "hyperexponential"

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        rates = tuple(_positive("phase rate", r) for r in self.rates)
        if len(probs) != len(rates) or not probs:
            raise ValidationError("hyperexponential needs matching, non-empty probs/rates")
        if any(p <= 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValidationError("phase probabilities must be > 0 and sum to 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def balanced(cls, mean: float, scv: float) -> "Hyperexponential":
        """Two-phase fit with balanced means for a target mean and squared CV (> 1)."""
        if scv <= 1:
            raise ValidationError("a hyperexponential needs scv > 1")
        p1 = 0.5 * (1.0 + math.sqrt((scv - 1.0) / (scv + 1.0)))
        p2 = 1.0 - p1
        return cls((p1, p2), (2.0 * p1 / mean, 2.0 * p2 / mean))

    def mean(self):
        return sum(p / r for p, r in zip(self.probs, self.rates))

    def second_moment(self):
        return sum(2.0 * p / r**2 for p, r in zip(self.probs, self.rates))

    def sample(self, rng, size=None):
        probs = np.asarray(self.probs)
        scales = 1.0 / np.asarray(self.rates)
        phase = rng.choice(len(probs), size=size, p=probs)
        return rng.exponential(scales[phase])

    def scaled(self, a):
        a = _positive("a", a)
        return Hyperexponential(self.probs, tuple(r / a for r in self.rates))

    def to_dict(self):
        return {"kind": self.kind, "probs": list(self.probs), "rates": list(self.rates)}


@dataclass(frozen=True)
class Weibull(InterContactDistribution):
    shape: float
    scale: float
    kind = "weibull"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @classmethod
    def with_mean(cls, mean: float, shape: float) -> "Weibull":
        return cls(shape, mean / math.gamma(1.0 + 1.0 / shape))

    def mean(self):
        try:
            return self.scale * math.gamma(1.0 + 1.0 / self.shape)
        except OverflowError:
            raise NonFiniteMoment(f"mean of {self} overflows") from None

    def second_moment(self):
        try:
            return self.scale**2 * math.gamma(1.0 + 2.0 / self.shape)
        except OverflowError:
            raise NonFiniteMoment(f"second moment of {self} overflows") from None

    def sample(self, rng, size=None):
        return self.scale * rng.weibull(self.shape, size)

    def scaled(self, a):
        return Weibull(self.shape, self.scale * _positive("a", a))

    def to_dict(self):
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class FoldedNormal(InterContactDistribution):
    """``|Y|`` with ``Y ~ Normal(loc, scale)``; parameters refer to the unfolded normal."""

    loc: float
    scale: float
    kind = "folded_normal"

    def __post_init__(self):
        object.__setattr__(self, "loc", _positive("loc", self.loc))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @classmethod
    def with_mean(cls, mean: float, loc_over_scale: float = 1.0) -> "FoldedNormal":
        unit = cls(loc_over_scale, 1.0).mean()
        scale = mean / unit
        return cls(loc_over_scale * scale, scale)

    def mean(self):
        m, s = self.loc, self.scale
        return s * math.sqrt(2.0 / math.pi) * math.exp(-(m * m) / (2 * s * s)) + m * math.erf(
            m / (s * math.sqrt(2.0))
        )

    def second_moment(self):
        return self.loc**2 + self.scale**2

    def sample(self, rng, size=None):
        return np.abs(rng.normal(self.loc, self.scale, size))

    def scaled(self, a):
        a = _positive("a", a)
        return FoldedNormal(self.loc * a, self.scale * a)

    def to_dict(self):
        return {"kind": self.kind, "loc": self.loc, "scale": self.scale}


def dist_from_dict(d: Mapping) -> InterContactDistribution:
    kind = str(d.get("kind", "")).lower().replace("-", "_")
    try:
        if kind == "exponential":
            return Exponential(d["rate"])
        if kind == "hyperexponential":
            return Hyperexponential(tuple(d["probs"]), tuple(d["rates"]))
        if kind == "weibull":
            return Weibull(d["shape"], d["scale"])
        if kind in ("folded_normal", "foldednormal"):
            return FoldedNormal(d["loc"], d["scale"])
    except KeyError as exc:
        raise ValidationError(f"distribution {kind!r} missing field {exc}") from None
    raise ValidationError(f"unknown distribution kind {d.get('kind')!r}")


def mean_residual(dist: InterContactDistribution) -> float:
    """Mean forward-recurrence time ``E[X^2] / (2 E[X])`` of a renewal process."""
    if isinstance(dist, Exponential):
        return 1.0 / dist.rate
    m1, m2 = dist.mean(), dist.second_moment()
    if not (math.isfinite(m2) and math.isfinite(m1) and m1 > 0):
        raise NonFiniteMoment(f"{dist} has no finite second moment")
    return m2 / (2.0 * m1)


# ---------------------------------------------------------------------------
# relays, costs, settings
# ---------------------------------------------------------------------------


class InfoSetting(enum.Enum):
    FULL = "F"
    PARTIAL_ID = "P+"
    PARTIAL_ANON = "P-"
    NONE = "N"

    @classmethod
    def parse(cls, text: "str | InfoSetting") -> "InfoSetting":
        if isinstance(text, cls):
            return text
        key = str(text).strip().upper().replace("_", "").replace(" ", "")
        aliases = {
            "F": cls.FULL, "FULL": cls.FULL,
            "P+": cls.PARTIAL_ID, "PPLUS": cls.PARTIAL_ID, "PARTIALID": cls.PARTIAL_ID,
            "PARTIALWITHIDENTITIES": cls.PARTIAL_ID,
            "P-": cls.PARTIAL_ANON, "PMINUS": cls.PARTIAL_ANON, "PARTIALANON": cls.PARTIAL_ANON,
            "PARTIALWITHOUTIDENTITIES": cls.PARTIAL_ANON,
            "N": cls.NONE, "NONE": cls.NONE, "NOINFORMATION": cls.NONE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValidationError(f"unknown information setting {text!r}") from None


ALL_SETTINGS = tuple(InfoSetting)


@dataclass(frozen=True)
class RelayProfile:
    id: str
    lam: float
    mu: float
    source_dist: InterContactDistribution = None
    dest_dist: InterContactDistribution = None

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "lam", _positive(f"lambda of relay {self.id}", self.lam))
        object.__setattr__(self, "mu", _positive(f"mu of relay {self.id}", self.mu))
        if self.source_dist is None:
            object.__setattr__(self, "source_dist", Exponential(self.lam))
        if self.dest_dist is None:
            object.__setattr__(self, "dest_dist", Exponential(self.mu))
        for name, rate, dist in (("lambda", self.lam, self.source_dist), ("mu", self.mu, self.dest_dist)):
            if not math.isclose(rate, dist.assumed_rate(), rel_tol=1e-6):
                raise ValidationError(
                    f"relay {self.id}: {name}={rate} must equal 1/mean of {dist} ({dist.assumed_rate()})"
                )

    @classmethod
    def from_dists(cls, id, source_dist, dest_dist) -> "RelayProfile":
        return cls(id, source_dist.assumed_rate(), dest_dist.assumed_rate(), source_dist, dest_dist)

    @property
    def is_exponential(self) -> bool:
        return isinstance(self.source_dist, Exponential) and isinstance(self.dest_dist, Exponential)

    def mean_residual_dest(self) -> float:
        return mean_residual(self.dest_dist)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "lambda": self.lam,
            "mu": self.mu,
            "source_dist": self.source_dist.to_dict(),
            "dest_dist": self.dest_dist.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RelayProfile":
        try:
            rid, lam, mu = d["id"], d["lambda"], d["mu"]
        except KeyError as exc:
            raise ValidationError(f"relay entry missing field {exc}") from None
        src = dist_from_dict(d["source_dist"]) if d.get("source_dist") else None
        dst = dist_from_dict(d["dest_dist"]) if d.get("dest_dist") else None
        return cls(rid, lam, mu, src, dst)


@dataclass(frozen=True)
class CostParams:
    c_r: float
    c_s: float
    c_d: float

    def __post_init__(self):
        for name in ("c_r", "c_s", "c_d"):
            v = float(getattr(self, name))
            if not (v >= 0 and math.isfinite(v)):
                raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_cli(cls, text: str) -> "CostParams":
        """Parse ``c_d,c_r,c_s`` (the command-line order)."""
        parts = [p for p in text.split(",") if p.strip()]
        if len(parts) != 3:
            raise ValidationError("costs must be given as c_d,c_r,c_s")
        c_d, c_r, c_s = (float(p) for p in parts)
        return cls(c_r=c_r, c_s=c_s, c_d=c_d)

    def to_dict(self):
        return {"c_r": self.c_r, "c_s": self.c_s, "c_d": self.c_d}


@dataclass(frozen=True)
class RelayBaseCost:
    """Expected reception plus storage cost ``c_r + c_s E[T_d]`` of carrying one copy."""

    value: float

    @classmethod
    def of(cls, costs: CostParams, profile: RelayProfile) -> "RelayBaseCost":
        return cls(costs.c_r + costs.c_s * profile.mean_residual_dest())


class RelaySet(Sequence):
    """Validated, ordered collection of relay profiles with id lookup."""

    def __init__(self, profiles: Iterable[RelayProfile]):
        self._profiles = tuple(profiles)
        index = {}
        for i, p in enumerate(self._profiles):
            if not isinstance(p, RelayProfile):
                raise ValidationError(f"expected RelayProfile, got {type(p).__name__}")
            if p.id in index:
                raise DuplicateId(f"duplicate relay id {p.id!r}")
            index[p.id] = i
        self._index = index
        self.lam = np.array([p.lam for p in self._profiles], dtype=float)
        self.mu = np.array([p.mu for p in self._profiles], dtype=float)

    def __getitem__(self, i):
        return self._profiles[i]

    def __len__(self):
        return len(self._profiles)

    def __repr__(self):
        return f"RelaySet({[p.id for p in self._profiles]})"

    def __eq__(self, other):
        if not isinstance(other, RelaySet):
            return NotImplemented
        return self._profiles == other._profiles

    def __hash__(self):
        return hash(self._profiles)

    @property
    def ids(self) -> tuple:
        return tuple(p.id for p in self._profiles)

    def index(self, relay_id) -> int:
        try:
            return self._index[str(relay_id)]
        except KeyError:
            raise UnknownRelay(f"unknown relay {relay_id!r}") from None

    def by_id(self, relay_id) -> RelayProfile:
        return self._profiles[self.index(relay_id)]

    def to_json(self) -> list:
        return [p.to_dict() for p in self._profiles]


def validate_profiles(profiles: Iterable[RelayProfile]) -> RelaySet:
    if isinstance(profiles, RelaySet):
        return profiles
    return RelaySet(profiles)


def load_relays(path_or_doc) -> RelaySet:
    """Load a relay set from a JSON file path, JSON text, or an already parsed document.

    The document is an array of relay objects, or an object with a ``relays`` array.
    Unknown keys on relay objects are ignored.
    """
    doc = path_or_doc
    if isinstance(doc, (str, Path)):
        text = str(doc).lstrip()
        try:
            if isinstance(doc, str) and text[:1] in ("[", "{"):
                doc = json.loads(text)
            else:
                doc = json.loads(Path(doc).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot load relays from {str(path_or_doc)[:80]!r}: {exc}") from None
    if isinstance(doc, Mapping):
        doc = doc.get("relays", [])
    return RelaySet(RelayProfile.from_dict(d) for d in doc)


# ---------------------------------------------------------------------------
# encounter log
# ---------------------------------------------------------------------------


def _separate_ties(times: np.ndarray) -> np.ndarray:
    out = np.array(times, dtype=float)
    for i in range(1, len(out)):
        if out[i] <= out[i - 1]:
            out[i] = np.nextafter(out[i - 1], np.inf)
    return out


@dataclass(frozen=True)
class EncounterLog:
    """Source-meeting times ``s`` (increasing) and the relay met at each one."""

    s: tuple
    ell: tuple
    _positions: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        ell = tuple(str(x) for x in self.ell)
        if s.ndim != 1 or len(s) != len(ell):
            raise ValidationError("s and ell must be 1-d and of equal length")
        if np.any(~np.isfinite(s)) or np.any(s < 0):
            raise ValidationError("meeting times must be finite and >= 0")
        if np.any(np.diff(s) < 0):
            raise ValidationError("meeting times must be non-decreasing; use EncounterLog.from_times")
        if len(set(ell)) != len(ell):
            raise DuplicateId("relays in an encounter log must be distinct")
        s = _separate_ties(s)
        object.__setattr__(self, "s", tuple(float(x) for x in s))
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "_positions", {r: i for i, r in enumerate(ell)})

    @classmethod
    def from_times(cls, times: Mapping) -> "EncounterLog":
        """Build a log from ``{relay_id: meeting_time}``, sorting by time (ties keep input order)."""
        items = sorted(times.items(), key=lambda kv: kv[1])
        return cls(tuple(t for _, t in items), tuple(k for k, _ in items))

    def __len__(self):
        return len(self.s)

    def prefix(self, n: int) -> "EncounterLog":
        return EncounterLog(self.s[:n], self.ell[:n])

    def position(self, relay_id) -> int:
        """0-based position of ``relay_id`` in the encounter order."""
        try:
            return self._positions[str(relay_id)]
        except KeyError:
            raise UnknownRelay(f"relay {relay_id!r} not in log") from None

    def check_against(self, relays: RelaySet) -> None:
        for r in self.ell:
            relays.index(r)
