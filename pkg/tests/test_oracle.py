import numpy as np
import pytest

from src.errors import CoverageError, DivergenceError
from src.state import DipParams, OracleSettings
from src.tools.analytic import dip_depth, dip_width
from src.tools.oracle import (SampledCurve, coincidence_probability, compare_with_analytic, jitter_average,
                              jsa_from_params, oracle_dip, oracle_fit)

PS = 1e-12
FS = 1e-15


def test_pure_indistinguishable_photons_never_coincide(sigma_p):
    jsa = jsa_from_params(DipParams(sigma_p=sigma_p, sigma_S=1e-3 * sigma_p))
    assert coincidence_probability(jsa, jsa, 0.0) < 1e-5


def test_distant_delay_gives_one_half(sigma_p):
    params = DipParams(sigma_p=sigma_p, sigma_S=0.1 * sigma_p)
    jsa = jsa_from_params(params)
    far = 10.0 * dip_width(params)
    assert coincidence_probability(jsa, jsa, far) == pytest.approx(0.5, abs=1e-6)


def test_preset_unjittered_depth(preset_params):
    bare = preset_params.model_copy(update={"sigma_J": 0.0})
    jsa = jsa_from_params(preset_params)
    p0 = coincidence_probability(jsa, jsa, 0.0)
    d0 = 1.0 - 2.0 * p0
    assert d0 >= 0.913
    assert d0 == pytest.approx(dip_depth(bare), rel=1e-6)


def test_orthogonal_polarization_has_no_dip(preset_params):
    jsa = jsa_from_params(preset_params)
    settings = OracleSettings(polarization_overlap=0.0)
    p = coincidence_probability(jsa, jsa, np.array([0.0, 0.3 * PS]), settings)
    assert np.allclose(p, 0.5, atol=1e-12)
    model = oracle_dip(preset_params.model_copy(update={"sigma_J": 0.0}), settings)
    assert model.depth == pytest.approx(0.0, abs=1e-9)


def test_half_overlap_halves_depth(preset_params):
    bare = preset_params.model_copy(update={"sigma_J": 0.0})
    jsa = jsa_from_params(bare)
    full = 1.0 - 2.0 * coincidence_probability(jsa, jsa, 0.0)
    half = 1.0 - 2.0 * coincidence_probability(jsa, jsa, 0.0, OracleSettings(polarization_overlap=0.5))
    assert half == pytest.approx(0.5 * full, rel=1e-9)


def test_jitter_average_identity_at_zero():
    curve = SampledCurve([-1.0, 0.0, 1.0], [0.5, 0.2, 0.5])
    assert jitter_average(curve, 0.0) is curve


def test_jitter_average_keeps_constant_curve():
    grid = np.linspace(-10 * PS, 10 * PS, 201)
    curve = SampledCurve(grid, np.full(grid.size, 0.3))
    averaged = jitter_average(curve, 350 * FS)
    assert averaged(np.array([0.0, 1 * PS])) == pytest.approx([0.3, 0.3], rel=1e-12)


def test_jitter_average_requires_coverage():
    grid = np.linspace(-1 * PS, 1 * PS, 41)
    curve = SampledCurve(grid, np.full(grid.size, 0.5))
    with pytest.raises(CoverageError):
        jitter_average(curve, 350 * FS)(0.0)


def test_oracle_preset_matches_published_prediction(preset_params):
    fit = oracle_fit(preset_params)
    assert 0.81 <= fit.visibility <= 0.87
    assert 0.79 * PS <= fit.model.rms_width <= 0.93 * PS


def test_oracle_jitter_lowers_visibility(preset_params):
    bare = oracle_fit(preset_params.model_copy(update={"sigma_J": 0.0}))
    jittered = oracle_fit(preset_params)
    assert jittered.visibility < bare.visibility
    assert jittered.visibility == pytest.approx(0.84, rel=0.02)


def test_oracle_zukowski_point(sigma_p):
    model = oracle_dip(DipParams(sigma_p=sigma_p, sigma_S=sigma_p))
    assert model.visibility == pytest.approx(0.5469, abs=5e-3)


def test_strict_comparison_raises_with_report(sigma_p):
    with pytest.raises(DivergenceError) as info:
        compare_with_analytic(sigma_p, signal_ratios=(0.1,), jitter_products=(1.0,), trigger_factors=(None,),
                              tolerance=1e-15, strict=True)
    assert len(info.value.report.rows) == 1


@pytest.mark.slow
def test_oracle_agrees_with_closed_form_on_grid(sigma_p):
    report = compare_with_analytic(sigma_p)
    assert len(report.rows) == 27
    assert report.ok, "\n".join(report.lines())
    assert all(r.w_oracle == pytest.approx(r.w_analytic, rel=0.02) for r in report.rows)


@pytest.mark.parametrize("trigger", ["filtered", "unfiltered"])
def test_coincidence_probability_is_symmetric_in_delay(preset_params, trigger):
    params = preset_params if trigger == "filtered" else preset_params.model_copy(update={"sigma_T": None})
    jsa = jsa_from_params(params)
    delays = np.linspace(0.05, 4.0, 25) * PS
    forward = coincidence_probability(jsa, jsa, delays)
    backward = coincidence_probability(jsa, jsa, -delays)
    np.testing.assert_allclose(forward, backward, rtol=0.0, atol=1e-10)


@pytest.mark.parametrize("trigger", ["filtered", "unfiltered"])
def test_oracle_visibility_stable_under_node_refinement(preset_params, trigger):
    params = preset_params if trigger == "filtered" else preset_params.model_copy(update={"sigma_T": None})
    coarse = OracleSettings()
    fine = OracleSettings(quadrature_order=2 * coarse.quadrature_order, jitter_nodes=2 * coarse.jitter_nodes,
                          grid_points=2 * coarse.grid_points - 1)
    assert abs(oracle_fit(params, fine).visibility - oracle_fit(params, coarse).visibility) < 1e-4
