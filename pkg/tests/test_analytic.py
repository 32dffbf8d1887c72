import math

import numpy as np
import pytest

from src.errors import DomainError, NoSolutionError, UsageError
from src.state import DipParams
from src.tools.analytic import (depth_from_visibility, dip_depth, dip_width, reachable_visibility, scenario_table,
                                scenario_visibility, solve_filters, visibility, visibility_from_depth,
                                zukowski_limit)

PS = 1e-12
FS = 1e-15


def test_reduces_to_zukowski_limit_on_random_parameters():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        sigma_p = 10 ** rng.uniform(11.5, 13.5)
        sigma_S = sigma_p * 10 ** rng.uniform(-3, 2)
        p = DipParams(sigma_p=sigma_p, sigma_S=sigma_S)
        assert visibility(p) == pytest.approx(zukowski_limit(sigma_p, sigma_S), rel=1e-12)


def test_preset_values(preset_params):
    assert visibility(preset_params) == pytest.approx(0.84, rel=1e-9)
    assert dip_width(preset_params) == pytest.approx(0.86 * PS, rel=1e-9)
    assert dip_depth(preset_params) == pytest.approx(2 * 0.84 / 1.84, rel=1e-9)


def test_depth_limits(sigma_p):
    assert dip_depth(DipParams(sigma_p=sigma_p, sigma_S=1e-9 * sigma_p)) == pytest.approx(1.0)
    assert dip_depth(DipParams(sigma_p=sigma_p, sigma_S=sigma_p)) == pytest.approx(1 / math.sqrt(2))


def test_visibility_examples(sigma_p):
    assert visibility(DipParams(sigma_p=sigma_p, sigma_S=sigma_p)) == pytest.approx(1 / (2 * math.sqrt(2) - 1))
    large_jitter = DipParams(sigma_p=sigma_p, sigma_S=0.1 * sigma_p, sigma_T=sigma_p, sigma_J=1e-9)
    assert visibility(large_jitter) < 1e-3


def test_width_examples():
    sp = 9.70e12
    assert dip_width(DipParams(sigma_p=sp, sigma_S=sp)) == pytest.approx(1 / sp)
    assert dip_width(DipParams(sigma_p=sp, sigma_S=8.8e11, sigma_J=350 * FS)) == pytest.approx(0.88 * PS, abs=0.01 * PS)


def test_width_diverges_without_signal_filter(sigma_p):
    with pytest.raises(DomainError):
        dip_width(DipParams(sigma_p=sigma_p, sigma_S=0.0))


def test_trigger_filter_raises_visibility_at_fixed_width(sigma_p):
    base = DipParams(sigma_p=sigma_p, sigma_S=0.1 * sigma_p, sigma_J=200 * FS)
    filtered = base.model_copy(update={"sigma_T": 0.5 * sigma_p})
    assert visibility(filtered) > visibility(base)
    assert dip_width(filtered) == dip_width(base)


def test_zukowski_examples():
    assert zukowski_limit(1e13, 0.0) == 1.0
    assert zukowski_limit(1e13, 1e13) == pytest.approx(0.5469, abs=1e-4)
    assert zukowski_limit(1e13, 3e13) == pytest.approx(0.1879, abs=1e-4)


def test_depth_visibility_conversion():
    assert depth_from_visibility(0.84) == pytest.approx(0.913043, abs=1e-6)
    assert visibility_from_depth(depth_from_visibility(0.37)) == pytest.approx(0.37)
    with pytest.raises(DomainError):
        depth_from_visibility(1.5)


def test_solve_filters_closes_on_published_targets(sigma_p):
    s, t = solve_filters(0.84, 0.86 * PS, sigma_p, 350 * FS)
    assert 0.7e12 <= s <= 1.1e12
    p = DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=350 * FS)
    assert visibility(p) == pytest.approx(0.84, rel=1e-9)
    assert dip_width(p) == pytest.approx(0.86 * PS, rel=1e-9)


def test_newton_agrees_with_exact(sigma_p):
    exact = solve_filters(0.84, 0.86 * PS, sigma_p, 350 * FS, method="exact")
    newton = solve_filters(0.84, 0.86 * PS, sigma_p, 350 * FS, method="newton")
    assert newton[0] == pytest.approx(exact[0], rel=1e-6)
    assert newton[1] == pytest.approx(exact[1], rel=1e-6)


def test_solve_filters_recovers_unfiltered_limit(sigma_p):
    s0 = 0.2 * sigma_p
    v = zukowski_limit(sigma_p, s0)
    w = dip_width(DipParams(sigma_p=sigma_p, sigma_S=s0))
    s, t = solve_filters(v, w, sigma_p, 0.0)
    assert s == pytest.approx(s0, rel=1e-9)
    assert t is None


def test_infeasible_target_reports_frontier(sigma_p):
    with pytest.raises(NoSolutionError) as info:
        solve_filters(0.999999, 10 * PS, sigma_p, 350 * FS)
    frontier = info.value.frontier
    assert frontier["visibility_max"] < 0.999999


def test_width_below_minimum(sigma_p):
    with pytest.raises(NoSolutionError) as info:
        solve_filters(0.5, 0.01 * PS, sigma_p, 350 * FS)
    assert "min_width" in info.value.frontier


def test_unknown_solver_method(sigma_p):
    with pytest.raises(UsageError):
        solve_filters(0.84, 0.86 * PS, sigma_p, 350 * FS, method="bisect")


def test_reachable_visibility_brackets_target(sigma_p):
    lo, hi = reachable_visibility(0.86 * PS, sigma_p, 350 * FS)
    assert lo < 0.84 < hi


def test_scenario_ladder():
    d = 2 * 0.84 / 1.84
    assert scenario_visibility("unpolarized", 1.0) == pytest.approx(1 / 3)
    assert scenario_visibility("unpolarized", d) == pytest.approx(0.2958, abs=5e-4)
    assert scenario_visibility("thermal", 1.0, 1.0) == pytest.approx(0.2)
    assert scenario_visibility("thermal", 0.913, 1.0) == pytest.approx(0.1795, abs=1e-3)
    assert 0.13 <= scenario_visibility("thermal", 0.913, 2.0) <= 0.17
    assert scenario_visibility("orthogonal", 0.7) == 0.0
    assert scenario_visibility("indistinguishable", d) == pytest.approx(0.84)


def test_scenario_errors():
    with pytest.raises(UsageError):
        scenario_visibility("entangled", 0.5)
    with pytest.raises(DomainError):
        scenario_visibility("thermal", 0.5, 0.0)


def test_scenario_table_rows():
    rows = scenario_table(0.913, 2.0)
    assert [r["scenario"] for r in rows] == ["indistinguishable", "orthogonal", "unpolarized", "thermal"]
    for row in rows:
        assert row["depth"] == pytest.approx(depth_from_visibility(row["visibility"]))


def _random_params(rng, sigma_p, n):
    for _ in range(n):
        s = sigma_p * 10 ** rng.uniform(-2.0, 1.0)
        t = None if rng.random() < 0.3 else sigma_p * 10 ** rng.uniform(-2.0, 2.0)
        yield s, t, 10 ** rng.uniform(-15.0, -12.0)


def test_visibility_decreases_with_jitter_and_signal_filter(sigma_p):
    rng = np.random.default_rng(11)
    for s, t, j in _random_params(rng, sigma_p, 300):
        p = DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=j)
        more_jitter = DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=1.5 * j)
        wider_signal = DipParams(sigma_p=sigma_p, sigma_S=1.5 * s, sigma_T=t, sigma_J=j)
        assert visibility(more_jitter) < visibility(p)
        assert visibility(wider_signal) < visibility(p)


def test_width_grows_with_jitter(sigma_p):
    rng = np.random.default_rng(12)
    for s, t, j in _random_params(rng, sigma_p, 300):
        p = DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=j)
        assert dip_width(DipParams(sigma_p=sigma_p, sigma_S=s, sigma_T=t, sigma_J=1.5 * j)) > dip_width(p)


def test_thermal_visibility_stays_below_classical_limit():
    for d in np.linspace(0.0, 1.0, 51):
        for r in (1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e3):
            assert scenario_visibility("thermal", float(d), r) < 0.5


def test_scenarios_never_exceed_indistinguishable():
    for d in np.linspace(0.0, 1.0, 51):
        top = scenario_visibility("indistinguishable", float(d))
        for kind in ("orthogonal", "unpolarized", "thermal"):
            for r in (0.5, 1.0, 2.0):
                assert scenario_visibility(kind, float(d), r) <= top + 1e-15


def test_newton_unreachable_target_is_reported(sigma_p):
    with pytest.raises(NoSolutionError):
        solve_filters(0.99, 0.86 * PS, sigma_p, 350 * FS, method="newton")
