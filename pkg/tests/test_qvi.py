import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from bandcontrol import (BandPolicy, GCurve, GridSpec, ProblemSpec, eval_g, evaluate,
                         make_linear_holding, solve_nonneg, verify)
from bandcontrol.qvi import pair_defects
from conftest import INSTANCES


def perturbations(band):
    for field in ("d", "D", "U", "u"):
        for delta in (-0.05, 0.05):
            vals = band.as_dict()
            vals[field] += delta
            yield field, delta, BandPolicy(vals["d"], vals["D"], vals["U"], vals["u"])


def report(spec, band, grid=None):
    return verify(spec, band, evaluate(spec, band, check=False), grid)


@pytest.mark.parametrize("name", list(INSTANCES))
def test_passes_at_optimum(solved, name):
    spec, sol = solved[name]
    rep = report(spec, sol.policy, GridSpec(5.0, 2000, 1e-6))
    assert rep.passed, rep.as_dict()


@pytest.mark.parametrize("name", list(INSTANCES))
def test_fails_on_perturbations(solved, name):
    spec, sol = solved[name]
    for field, delta, band in perturbations(sol.policy):
        assert not report(spec, band).passed, (field, delta)


def test_singular_optimum(r1_singular):
    spec, sol = r1_singular
    rep = report(spec, sol.policy)
    assert rep.passed
    # K = 0: slope stays within [-k, ell]
    assert rep.fprime_sup <= max(spec.k, spec.ell) + 1e-6


def test_singular_wrong_band_fails(r1_singular):
    spec, sol = r1_singular
    b = sol.policy
    wide = BandPolicy(b.d - 0.3, b.d - 0.3, b.u + 0.3, b.u + 0.3, "singular")
    assert not report(spec, wide).passed


@pytest.mark.parametrize("a", [0.0, 5.0])
def test_nonneg_optimum(a):
    spec = ProblemSpec(1.0, 2.0, 1.0, 0.5, 1.0, 0.5, make_linear_holding(1, 1, a), "nonneg")
    sol = solve_nonneg(spec)
    rep = report(spec, sol.policy)
    assert rep.passed, rep.as_dict()
    assert rep.grid["lo"] >= 0.0


def brute_pair_defects(xs, f, K, k, L, ell):
    n = len(xs)
    lbK = max(f[j] - f[i] - K - k * (xs[i] - xs[j]) for i in range(n) for j in range(i))
    lbL = max(f[j] - f[i] - L - ell * (xs[j] - xs[i]) for i in range(n) for j in range(i + 1, n))
    return lbK, lbL


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(2, 30), elements=st.floats(-5, 5)),
       st.floats(0, 2), st.floats(0, 2), st.floats(0, 2), st.floats(0, 2))
def test_pair_defects_match_brute_force(f, K, k, L, ell):
    xs = np.linspace(-1, 1, f.size)
    fast = pair_defects(xs, f, K, k, L, ell)
    slow = brute_pair_defects(xs, f, K, k, L, ell)
    assert fast == pytest.approx(slow, abs=1e-12)


def test_pair_defect_vs_integral_condition(solved):
    # at the optimum the worst lower pair is (d, D): defect = -(K + int_d^D (g + k)) = 0
    spec, sol = solved["r1"]
    b = sol.policy
    xs = np.linspace(b.d, b.u, 4001)
    f = evaluate(spec, b).V(xs)
    lbK, lbL = pair_defects(xs, f, spec.K, spec.k, spec.L, spec.ell)
    curve = GCurve(sol.A_star, sol.B_star, spec)
    low, _ = quad(lambda x: eval_g(curve, x) + spec.k, b.d, b.D, epsabs=1e-12)
    high, _ = quad(lambda x: eval_g(curve, x) - spec.ell, b.U, b.u, epsabs=1e-12)
    assert lbK == pytest.approx(-(spec.K + low), abs=1e-6)
    assert lbL == pytest.approx(high - spec.L, abs=1e-6)


def test_grid_avoids_kink(solved):
    spec, sol = solved["r1"]
    b = sol.policy
    # span chosen so a linspace point lands on a = 0
    rep = report(spec, BandPolicy(-2.0, -1.0, 0.5, 2.0), GridSpec(span=2.0, points=9))
    assert rep.grid["offset"] > 0
    assert any("kink" in n for n in rep.notes)


def test_report_json(solved):
    spec, sol = solved["quadratic"]
    doc = json.loads(report(spec, sol.policy).to_json())
    assert doc["pass"] is True
    for key in ("poisson_min", "lbK_max", "lbL_max", "fprime_bound", "fprime_sup"):
        assert key in doc


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(points=2)
