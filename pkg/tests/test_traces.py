import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dtn_incentive.errors import EmptyTrace, InsufficientData, UnsortedInput, ValidationError
from dtn_incentive.mobility import sample_intercontact
from dtn_incentive.model import (
    Exponential,
    FoldedNormal,
    Hyperexponential,
    Weibull,
    load_relays,
)
from dtn_incentive.traces import (
    ContactInterval,
    PositionRecord,
    detect_contacts,
    extract_intercontacts,
    fit_from_contacts,
    fit_rate,
    fit_rates,
    project_equirectangular,
    read_contacts,
    read_positions,
    synthetic_trace,
    write_positions,
)

ANCHORS = {"source": (0.0, 0.0), "dest": (1000.0, 0.0)}


def straight_line(node="n1", offset=20.0, speed=8.0, fix=7.0, t0=0.0, span=200.0, phase=0.0):
    t = np.arange(t0 + phase, t0 + span, fix)
    x = -speed * span / 2 + speed * (t - t0)
    return [PositionRecord(float(ti), node, float(xi), offset) for ti, xi in zip(t, x)]


def test_chord_crossing_within_one_fix_period():
    r, offset, speed, fix, span = 50.0, 20.0, 8.0, 7.0, 200.0
    pos = straight_line(offset=offset, speed=speed, fix=fix, span=span, phase=3.0)
    contacts = detect_contacts(pos, ANCHORS, r)
    assert len(contacts) == 1
    half = math.sqrt(r * r - offset * offset) / speed
    centre = span / 2
    c = contacts[0]
    assert abs(c.t_start - (centre - half)) <= fix
    assert abs(c.t_end - (centre + half)) <= fix
    # linear motion is interpolated exactly
    assert c.t_start == pytest.approx(centre - half)
    assert c.t_end == pytest.approx(centre + half)


def test_never_in_range():
    assert detect_contacts(straight_line(offset=80.0), ANCHORS, 50.0) == []


def test_stationary_inside():
    pos = [PositionRecord(float(t), "n1", 5.0, -3.0) for t in range(0, 700, 7)]
    (c,) = detect_contacts(pos, ANCHORS, 50.0)
    assert (c.t_start, c.t_end) == (0.0, 693.0)


def test_long_gap_breaks_interpolation():
    pos = straight_line(span=140.0)
    pos = [p for p in pos if not 60 <= p.time <= 80]
    # the remaining fixes straddle the disk across a gap of 3 fix periods: still bridged
    assert len(detect_contacts(pos, ANCHORS, 50.0)) == 1
    far = [PositionRecord(0.0, "n1", -500.0, 0.0)] + [
        PositionRecord(float(t), "n1", 500.0, 0.0) for t in range(1000, 1100, 7)]
    # one fix either side of the disk, 1000 s apart: no contact inferred
    assert detect_contacts(far, ANCHORS, 50.0) == []


def test_errors():
    with pytest.raises(EmptyTrace):
        detect_contacts([], ANCHORS, 50.0)
    with pytest.raises(UnsortedInput):
        detect_contacts([PositionRecord(5.0, "a", 0, 0), PositionRecord(1.0, "a", 0, 0)], ANCHORS, 50)
    with pytest.raises(ValidationError):
        detect_contacts(straight_line(), ANCHORS, 0.0)
    with pytest.raises(ValidationError):
        ContactInterval("a", "b", 2.0, 2.0)


def test_contact_symmetry():
    assert ContactInterval("b", "a", 0, 1) == ContactInterval("a", "b", 0, 1)


def test_intercontact_arithmetic():
    cs = [ContactInterval("n", "source", a, b) for a, b in ((0, 1), (5, 6), (11, 12))]
    np.testing.assert_allclose(extract_intercontacts(cs, "n", "source"), [4.0, 5.0])
    with pytest.raises(InsufficientData):
        extract_intercontacts(cs[:1], "n", "source")
    with pytest.raises(InsufficientData):
        extract_intercontacts(cs, "n", "dest")


def _poisson_contacts(rate_per_h, horizon_h, seed, node="n", anchor="source", dur_s=10.0):
    rng = np.random.default_rng(seed)
    t = np.cumsum(rng.exponential(3600.0 / rate_per_h, int(rate_per_h * horizon_h * 1.5)))
    t = t[t < horizon_h * 3600.0]
    return [ContactInterval(node, anchor, s, s + dur_s) for s in t]


def test_poisson_contact_stream_mean():
    gaps = extract_intercontacts(_poisson_contacts(0.1, 1e4, 4), "n", "source") / 3600.0
    assert gaps.mean() == pytest.approx(10.0, rel=0.05)


def test_fit_rate_examples(rng):
    assert fit_rate([2.0, 2.0, 2.0]) == 0.5
    x = sample_intercontact(Exponential(0.0613), rng, 10_000)
    assert fit_rate(x) == pytest.approx(0.0613, rel=0.05)
    with pytest.raises(InsufficientData):
        fit_rate([1.0])
    with pytest.raises(ValidationError):
        fit_rate([1.0, -1.0])


@pytest.mark.parametrize("dist", [Exponential(0.05), Hyperexponential.balanced(20.0, 2.0),
                                  Weibull.with_mean(20.0, 0.8), FoldedNormal.with_mean(20.0)],
                         ids=lambda d: type(d).__name__)
def test_fit_generate_fit_roundtrip(dist, rng):
    first = fit_rate(sample_intercontact(dist, rng, 10_000))
    assert first == pytest.approx(dist.assumed_rate(), rel=0.05)
    again = fit_rate(sample_intercontact(Exponential(first), rng, 10_000))
    assert again == pytest.approx(first, rel=0.05)


def test_fitted_rates_schema_matches_relay_input():
    samples = {"t1": ([10.0, 20.0], [30.0, 40.0]), "t2": ([5.0, 5.0], [1.0, 3.0])}
    fitted = fit_rates(samples)
    doc = json.loads(json.dumps(fitted.to_dict(bins=5)))
    relays = load_relays(doc)
    assert relays.ids == ("t1", "t2")
    assert relays.by_id("t1").lam == pytest.approx(1 / 15)
    assert relays.by_id("t2").mu == pytest.approx(0.5)
    assert set(doc["relays"][0]) >= {"id", "lambda", "mu"}
    assert fitted.to_relays().ids == relays.ids


@given(st.floats(-1e5, 1e5), st.floats(-1e5, 1e5), st.sampled_from(["x", "taxi-9", "n0"]))
def test_detection_invariant_to_translation_and_relabel(dx, dy, label):
    pos = straight_line(phase=2.0) + straight_line(node="n2", offset=-35.0, speed=5.0, t0=400.0)
    base = detect_contacts(pos, ANCHORS, 50.0)
    moved = [PositionRecord(p.time, label if p.node_id == "n1" else p.node_id, p.x + dx, p.y + dy)
             for p in pos]
    anchors = {k: (x + dx, y + dy) for k, (x, y) in ANCHORS.items()}
    got = detect_contacts(moved, anchors, 50.0)
    assert len(got) == len(base)
    for a, b in zip(sorted(base, key=lambda c: c.t_start), sorted(got, key=lambda c: c.t_start)):
        assert a.t_start == pytest.approx(b.t_start, abs=1e-6)
        assert a.t_end == pytest.approx(b.t_end, abs=1e-6)


def test_gaps_positive_and_within_span():
    contacts = _poisson_contacts(0.5, 500, 9)
    gaps = extract_intercontacts(contacts, "n", "source")
    assert np.all(gaps > 0)
    assert gaps.sum() <= contacts[-1].t_end - contacts[0].t_start


def test_synthetic_trace_recovers_generator_rates():
    tr = synthetic_trace({"n1": (0.1, 0.2), "n2": (0.3, 0.05)}, 2_000, seed=3)
    fitted = fit_from_contacts(detect_contacts(tr.positions, tr.anchors, 50.0))
    for node in ("n1", "n2"):
        ev = tr.events[node]
        f = fitted.by_id(node)
        assert f.lambda_hat == pytest.approx(3600.0 / np.diff(ev["source"]).mean(), rel=0.005)
        assert f.mu_hat == pytest.approx(3600.0 / np.diff(ev["dest"]).mean(), rel=0.005)
        assert f.counts == (len(ev["source"]) - 1, len(ev["dest"]) - 1)


def test_fit_skips_relays_without_data():
    cs = _poisson_contacts(1.0, 50, 1, node="a") + _poisson_contacts(1.0, 50, 2, node="a", anchor="dest")
    cs.append(ContactInterval("b", "source", 0.0, 1.0))
    fitted = fit_from_contacts(cs)
    assert [f.relay_id for f in fitted] == ["a"] and fitted.skipped == ("b",)
    with pytest.raises(InsufficientData):
        fit_from_contacts(cs[-1:])


def test_csv_roundtrip(tmp_path):
    pos = straight_line()
    path = tmp_path / "p.csv"
    write_positions(path, pos)
    assert read_positions(path) == pos
    cpath = tmp_path / "c.csv"
    cpath.write_text("0,10,a,source\n3600,3610,source,a\n\n")
    cs = read_contacts(cpath)
    assert cs[1] == ContactInterval("a", "source", 3600.0, 3610.0)
    (tmp_path / "bad.csv").write_text("1,2,3\n")
    with pytest.raises(ValidationError):
        read_positions(tmp_path / "bad.csv")
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(EmptyTrace):
        read_contacts(tmp_path / "empty.csv")


def test_equirectangular_accuracy():
    lat0, lon0 = 41.9, 12.5
    lat, lon = lat0 + 0.02, lon0 + 0.03
    x, y = project_equirectangular(lat, lon, lat0, lon0)
    p1, p2 = math.radians(lat0), math.radians(lat)
    dl = math.radians(lon - lon0)
    h = math.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    great_circle = 2 * 6_371_008.8 * math.asin(math.sqrt(h))
    assert math.hypot(float(x), float(y)) == pytest.approx(great_circle, rel=1e-3)
