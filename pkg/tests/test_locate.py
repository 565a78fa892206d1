"""Multilateration and outcome classification."""

import itertools

import numpy as np
import pytest

from core.locate import PositionEstimate, _residuals, classify_outcome, multilaterate
from core.receiver import RstdSet
from models.verdict import OutcomeKind
from utils.profiles import SPEED_OF_LIGHT

TRIANGLE = {0: (0.0, 0.0), 1: (500.0, 0.0), 2: (250.0, 433.0)}
SQUARE = {0: (0.0, 0.0), 1: (600.0, 0.0), 2: (600.0, 600.0), 3: (0.0, 600.0)}


def _rstds(p, bs, reference=0, noise_m=None, rng=None) -> RstdSet:
    p = np.asarray(p, dtype=float)
    ref = np.linalg.norm(np.asarray(bs[reference]) - p)
    values = {}
    for i, pos in bs.items():
        d = np.linalg.norm(np.asarray(pos) - p) - ref
        if noise_m and i != reference:
            d += noise_m * rng.standard_normal()
        values[i] = d / SPEED_OF_LIGHT
    return RstdSet(reference_bs=reference, values_s=values)


def _in_triangle(rng):
    while True:
        u, v = rng.random(2)
        if u + v <= 1.0:
            a, b, c = (np.asarray(TRIANGLE[i]) for i in range(3))
            return a + u * (b - a) + v * (c - a)


def test_noiseless_round_trip(rng):
    for _ in range(100):
        truth = _in_triangle(rng)
        est = multilaterate(_rstds(truth, TRIANGLE), TRIANGLE)
        assert est.converged
        assert est.n_bs_used == 3
        assert np.isfinite(est.residual_norm)
        assert np.linalg.norm(est.xy_m - truth) <= 0.01


def test_reference_choice_does_not_matter(rng):
    truth = _in_triangle(rng)
    for reference in TRIANGLE:
        est = multilaterate(_rstds(truth, TRIANGLE, reference), TRIANGLE)
        assert np.linalg.norm(est.xy_m - truth) <= 0.01


def test_residual_does_not_grow(rng):
    for _ in range(20):
        truth = rng.uniform(50.0, 550.0, 2)
        rstds = _rstds(truth, SQUARE, noise_m=5.0, rng=rng)
        est = multilaterate(rstds, SQUARE)
        ids = [i for i in rstds.values_s if i != 0]
        anchors = np.array([SQUARE[i] for i in ids])
        ranges = SPEED_OF_LIGHT * np.array([rstds.values_s[i] for i in ids])
        start = np.mean(list(SQUARE.values()), axis=0)
        initial = np.linalg.norm(_residuals(start, ranges, anchors, np.array(SQUARE[0])))
        assert est.residual_norm <= initial + 1e-9


def test_extra_base_station_helps(rng):
    errors = {"all": []}
    subsets = list(itertools.combinations(SQUARE, 3))
    for s in subsets:
        errors[s] = []
    for _ in range(200):
        truth = rng.uniform(200.0, 400.0, 2)
        noisy = _rstds(truth, SQUARE, noise_m=3.0, rng=rng)
        errors["all"].append(np.linalg.norm(multilaterate(noisy, SQUARE).xy_m - truth))
        for s in subsets:
            ref = s[0]
            sub = RstdSet(
                reference_bs=ref,
                values_s={i: noisy.values_s[i] - noisy.values_s[ref] for i in s},
            )
            bs = {i: SQUARE[i] for i in s}
            errors[s].append(np.linalg.norm(multilaterate(sub, bs).xy_m - truth))
    full = np.median(errors["all"])
    for s in subsets:
        assert full <= np.median(errors[s])


def test_two_base_stations_fail():
    rstds = RstdSet(reference_bs=0, values_s={0: 0.0, 1: 1e-7})
    est = multilaterate(rstds, TRIANGLE)
    assert not est.converged
    assert est.n_bs_used == 2
    assert classify_outcome(est, (0.0, 0.0)).kind == OutcomeKind.DOS


def test_classification_threshold():
    def at(err):
        return PositionEstimate(np.array([err, 0.0]), 0.0, True, 3)

    assert classify_outcome(at(15.0), (0.0, 0.0)).kind == OutcomeKind.SUCCESS
    large = classify_outcome(at(15.01), (0.0, 0.0))
    assert large.kind == OutcomeKind.LARGE_ERROR
    assert large.error_m == pytest.approx(15.01)
    assert classify_outcome(None, (0.0, 0.0)).error_m is None
    assert classify_outcome(at(30.0), (0.0, 0.0), threshold_m=50.0).kind == OutcomeKind.SUCCESS


@pytest.mark.parametrize(
    "angle_deg, shift", [(0.0, (1500.0, -700.0)), (37.0, (0.0, 0.0)), (-120.0, (-250.0, 90.0))]
)
def test_estimate_follows_rigid_motion(rng, angle_deg, shift):
    theta = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    moved = {i: tuple(rot @ np.asarray(p) + shift) for i, p in SQUARE.items()}
    for _ in range(10):
        truth = rng.uniform(100.0, 500.0, 2)
        noisy = _rstds(truth, SQUARE, noise_m=4.0, rng=rng)
        base = multilaterate(noisy, SQUARE)
        est = multilaterate(noisy, moved)
        assert est.converged == base.converged
        assert np.linalg.norm(est.xy_m - (rot @ base.xy_m + shift)) <= 0.01
        assert est.residual_norm == pytest.approx(base.residual_norm, abs=1e-6)
