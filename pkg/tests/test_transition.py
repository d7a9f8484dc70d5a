import json
import math

import numpy as np
import pytest

from valleyspec.dense import dense_oracle
from valleyspec.gamma import ResolutionError
from valleyspec.operators import CrossValley
from valleyspec.sectors import quadrant_problem
from valleyspec.transition import (ClassifyRule, Side, Verdict, angular_matrix, angular_threshold, band_onset,
                                   classify, effective_lambda, radial_dirichlet_threshold, scaling_exponent,
                                   scaling_slope, truncated_ground_state, verdict)

NS = (10, 20, 40, 80)


def test_radial_threshold_below_pi2_and_saturates():
    vals = [radial_dirichlet_threshold(n) for n in (2, 3, 5, 10, 50)]
    assert all(v <= math.pi**2 for v in vals)
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert math.pi**2 - vals[-1] < 1e-2


def test_radial_threshold_bessel_oracle():
    # on (1, 2) the Dirichlet problem -(1/r)(r u')' = k^2 u has J0(k)Y0(2k) = J0(2k)Y0(k)
    from scipy.optimize import brentq
    from scipy.special import j0, y0
    k = brentq(lambda k: j0(k) * y0(2 * k) - j0(2 * k) * y0(k), 2.5, 3.5)
    assert abs(radial_dirichlet_threshold(2, h=1e-3) - k * k) < 1e-4


def test_lower_le_upper():
    for lam in (0.0, 0.5, 1.5):
        for n in (5, 10, 20):
            lo = angular_threshold(n, 2.0, lam, side=Side.LOWER).mu
            up = angular_threshold(n, 2.0, lam, side=Side.UPPER).mu
            assert lo <= up + 1e-9 * abs(up)


def test_lower_chain_superquadratic():
    r = [angular_threshold(n, 2.0, 0.0, side=Side.LOWER).mu / n**2 for n in (5, 10, 20)]
    assert r[0] < r[1] < r[2]


@pytest.mark.parametrize("lam", [0.0, 1.5])
@pytest.mark.parametrize("side", [Side.LOWER, Side.UPPER])
def test_scaling_slope(lam, side):
    probes = [angular_threshold(n, 2.0, lam, side=side) for n in NS]
    assert abs(scaling_slope(probes) - scaling_exponent(2.0)) < 0.1


def test_upper_chain_band_supercritical():
    _, probes = band_onset(2.0, 1.5, NS, side=Side.UPPER)
    for pr in probes:
        assert pr.mu < 0
        assert pr.in_band


def test_n1_dense_oracle():
    A = angular_matrix(1, 2.0, 0.0, side=Side.UPPER, h=0.05)
    mu = angular_threshold(1, 2.0, 0.0, side=Side.UPPER, h=0.05).mu
    assert abs(mu - dense_oracle(A)[0]) < 1e-8 * max(1.0, abs(mu))


def test_effective_lambda():
    assert effective_lambda(1.0, 2.0, 0.1, Side.UPPER) == pytest.approx(0.9)
    assert effective_lambda(1.0, 2.0, 0.1, Side.LOWER) == pytest.approx(0.9 ** -3)


def test_coarse_spacing_rejected():
    with pytest.raises(ResolutionError):
        angular_threshold(10, 2.0, 0.0, h=0.5)


def test_ground_state_dense_oracle():
    A, _ = quadrant_problem("NN", 3.0, 0.2, CrossValley(2.0, 0.0))
    assert abs(truncated_ground_state(2.0, 0.0, 3.0, 0.2) - dense_oracle(A)[0]) < 1e-9


def test_subcritical_converged_in_R():
    a = truncated_ground_state(2.0, 0.0, 6.0, 0.05)
    b = truncated_ground_state(2.0, 0.0, 10.0, 0.05)
    assert abs(a - b) < 1e-3


def test_ground_state_R_insensitive_at_half():
    a = truncated_ground_state(2.0, 0.5, 8.0, 0.05)
    b = truncated_ground_state(2.0, 0.5, 12.0, 0.05)
    assert abs(a - b) < 1e-3


def test_verdicts_coarse():
    radii = (6, 8, 10, 12)
    assert classify(2.0, 0.0, radii, 0.1).verdict is Verdict.SUBCRITICAL
    assert classify(2.0, 1.5, radii, 0.1).verdict is Verdict.SUPERCRITICAL


def test_near_critical_flag():
    rep = classify(2.0, 0.99, (4, 5, 6), 0.1)
    assert rep.near_critical
    assert not classify(2.0, 0.5, (4, 5, 6), 0.1, ground_states=[1, 1, 1]).near_critical


def test_verdict_rules():
    h = 0.1
    assert verdict([1, 2, 3], [0.5, 0.5, 0.5], h) is Verdict.SUBCRITICAL
    assert verdict([1, 2, 3], [0.0, -1.0, -2.0], h) is Verdict.SUPERCRITICAL
    assert verdict([1, 2, 3], [0.0, -1.0, -1.5], h) is Verdict.INCONCLUSIVE
    # a looser scale turns the small step into a converged signature
    assert verdict([1, 2, 3], [0.0, -0.01, -0.011], h, ClassifyRule(scale=200)) is Verdict.SUBCRITICAL


def test_classify_validation():
    with pytest.raises(ValueError):
        classify(2.0, 0.5, (6, 8), 0.1)
    with pytest.raises(ValueError):
        classify(2.0, 0.5, (6, 10, 8), 0.1)


def test_report_outputs(tmp_path):
    rep = classify(2.0, 0.5, (4, 5, 6), 0.1, ground_states=[0.6, 0.55, 0.55])
    rep.write_json(tmp_path / "r.json")
    rep.write_csv(tmp_path / "r.csv")
    d = json.loads((tmp_path / "r.json").read_text())
    assert d["verdict"] == rep.verdict.value
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "radius,ground_state,delta"
    assert lines[1].endswith("nan") and len(lines) == 4
