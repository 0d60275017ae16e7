"""Randomized cross-check of the closed-form success probabilities against the oracle."""
from __future__ import annotations

import math

import numpy as np

from .model import ALL_SETTINGS, EncounterLog, InfoSetting, RelayProfile, RelaySet
from .oracle import oracle_setting
from .success import Knowledge, SuccessModel

RATE_RANGE = (0.05, 5.0)
TIME_RANGE = (0.1, 10.0)
IDENTITY_RTOL = 1e-10


def random_case(rng: np.random.Generator, n_relays: int):
    """Relay rates uniform on ``RATE_RANGE``, meeting times uniform on ``TIME_RANGE``."""
    lam = rng.uniform(*RATE_RANGE, n_relays)
    mu = rng.uniform(*RATE_RANGE, n_relays)
    relays = RelaySet(RelayProfile(f"r{i + 1}", lam[i], mu[i]) for i in range(n_relays))
    times = np.sort(rng.uniform(*TIME_RANGE, n_relays))
    order = rng.permutation(n_relays)
    log = EncounterLog(tuple(times), tuple(relays.ids[i] for i in order))
    n = int(rng.integers(1, n_relays + 1))
    return relays, log, n


def _rel_close(a: float, b: float, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b)) or a == b


def identity_checks(model: SuccessModel, log: EncounterLog) -> list:
    """Boundary identities: the first holder's three partial/full values coincide, and the
    last holder's full-information value equals its realized success probability."""
    N = len(log)
    first, s1 = log.ell[0], log.s[0]
    f1 = model.full(log, 1)
    out = [
        ("P+_1 == F_1", model.partial_id(first, s1, ()), f1),
        ("P-_1 == F_1", model.partial_anon(first, s1, 1), f1),
        ("F_N == actual_N", model.full(log, N), model.actual(log, N)),
    ]
    return [
        {"check": name, "lhs": a, "rhs": b, "pass": bool(_rel_close(a, b, IDENTITY_RTOL))}
        for name, a, b in out
    ]


def validate_probabilities(n_relays: int, draws: int, samples: int, seed: int,
                           variant: str = "normalized", k: float = 3.0) -> dict:
    """Compare every setting's closed form with its oracle over ``draws`` random cases.

    Draw ``i`` uses the ``i``-th child of ``SeedSequence(seed)``; its first word seeds the
    parameters and the next four seed the oracle runs for F, P+, P- and N.
    """
    rows, identities = [], []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(draws)):
        words = child.generate_state(5, np.uint64)
        rng = np.random.Generator(np.random.PCG64(int(words[0])))
        relays, log, n = random_case(rng, n_relays)
        model = SuccessModel(relays)
        for j, setting in enumerate(ALL_SETTINGS):
            know = Knowledge.from_log(setting, log, n)
            if setting is InfoSetting.PARTIAL_ANON:
                value = model.partial_anon(know.relay_id, know.s_n, n, variant)
            else:
                value = model.estimate(setting, know).value
            est = oracle_setting(setting, know, relays, samples, int(words[1 + j]))
            se = max(est.std_error, math.sqrt(max(value * (1 - value), 0.0) / samples))
            rows.append({
                "N": n_relays,
                "draw": i,
                "setting": setting.value,
                "n": n,
                "closed_form": value,
                "oracle": est.mean,
                "oracle_se": est.std_error,
                "z": (value - est.mean) / se if se > 0 else 0.0,
                "pass": bool(est.within(value, k)),
            })
        for row in identity_checks(model, log):
            identities.append({"N": n_relays, "draw": i, **row})
    return {
        "n_relays": n_relays,
        "draws": draws,
        "samples": samples,
        "seed": seed,
        "variant": variant,
        "k_se": k,
        "rows": rows,
        "identities": identities,
        "misses": int(sum(not r["pass"] for r in rows)),
        "identity_failures": int(sum(not r["pass"] for r in identities)),
        "ok": all(r["pass"] for r in rows) and all(r["pass"] for r in identities),
    }
