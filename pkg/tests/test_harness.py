import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qconsensus.consensus import quantized_converged, run_to_convergence
from qconsensus.graphs import line_graph, star_graph
from qconsensus.harness import (
    REFERENCE_CURVES,
    SWEEP_CSV_HEADER,
    SweepConfig,
    default_n_values,
    fit_scaling,
    init_majority_one,
    init_q_setting1,
    init_q_setting2,
    lollipop_clique_size,
    round_rng,
    run_sweep,
    write_curves_csv,
    write_rounds_csv,
    write_sweep_csv,
)


# ------------------------------------------------------------------- inits

def test_majority_one_counts():
    s = init_majority_one(21, np.random.default_rng(0))
    assert (s.s_plus, s.s_minus) == (11, 10)
    assert s.w_plus == s.w_minus == 0
    s = init_majority_one(3, np.random.default_rng(1))
    assert (s.s_plus, s.s_minus) == (2, 1)


def test_majority_one_rejects_even_n():
    with pytest.raises(ValueError, match="odd"):
        init_majority_one(22, np.random.default_rng(0))


def test_majority_one_positions_vary_but_counts_dont():
    placements = set()
    for seed in range(100):
        s = init_majority_one(9, np.random.default_rng(seed))
        assert (s.s_plus, s.s_minus) == (5, 4)
        placements.add(tuple(s.opinions))
    assert len(placements) > 50


def test_q_setting1_line3_is_permutation():
    s = init_q_setting1(line_graph(3), np.random.default_rng(2))
    assert sorted(s.values) == [0, 1, 2]
    assert s.q_sum == 3


def test_q_setting1_sum_is_n_and_target_all_ones():
    g = line_graph(11)
    s = init_q_setting1(g, np.random.default_rng(3))
    assert s.q_sum == g.n
    assert (s.q, s.r) == (1, 0)
    rng = np.random.default_rng(4)
    res = run_to_convergence("quantized", g, s, rng, 150 * g.n**3)
    assert res.converged
    assert s.values == [1] * g.n


def test_q_setting1_excludes_star_hub():
    g = star_graph(9)
    for seed in range(60):
        s = init_q_setting1(g, np.random.default_rng(seed), exclude=(0,))
        assert s.values[0] == 1


def test_q_setting1_requires_three_nodes():
    with pytest.raises(ValueError):
        init_q_setting1(line_graph(2), np.random.default_rng(0))


def test_q_setting2_degenerate_range_converges_immediately():
    s = init_q_setting2(8, np.random.default_rng(0), lo=5, hi=5)
    assert s.values == [5] * 8
    assert quantized_converged(s)


def test_q_setting2_bounds_and_mean():
    rng = np.random.default_rng(5)
    s = init_q_setting2(4000, rng, lo=1, hi=100)
    assert min(s.values) >= 1 and max(s.values) <= 100
    # uniform oracle: mean 50.5, sd sqrt((100^2-1)/12)
    se = math.sqrt((100**2 - 1) / 12 / 4000)
    assert abs(np.mean(s.values) - 50.5) <= 4 * se


def test_q_setting2_rejects_bad_range():
    with pytest.raises(ValueError):
        init_q_setting2(5, np.random.default_rng(0), lo=7, hi=3)


# ------------------------------------------------------------------ config

def test_sweep_config_validation():
    with pytest.raises(ValueError, match="odd"):
        SweepConfig("star", (10, 20), "binary", "majority_one", 2, 1)
    with pytest.raises(ValueError, match="increasing"):
        SweepConfig("star", (9, 9), "binary", "majority_one", 2, 1)
    with pytest.raises(ValueError, match="rounds"):
        SweepConfig("star", (9,), "binary", "majority_one", 0, 1)
    with pytest.raises(ValueError, match="init"):
        SweepConfig("star", (9,), "binary", "q_setting1", 2, 1)
    with pytest.raises(ValueError, match="init"):
        SweepConfig("star", (9,), "quantized", "majority_one", 2, 1)
    with pytest.raises(ValueError, match="protocol"):
        SweepConfig("star", (9,), "ternary", "majority_one", 2, 1)


def test_spec_for_lollipop_uses_extremal_clique():
    cfg = SweepConfig("lollipop", (9, 15), "binary", "majority_one", 1, 1)
    spec = cfg.spec_for(15)
    assert spec.m == lollipop_clique_size(15) == 10


def test_spec_for_er_derives_seed_from_master_and_n():
    cfg = SweepConfig("erdos_renyi", (21,), "binary", "majority_one", 1, master_seed=5)
    again = SweepConfig("erdos_renyi", (21,), "binary", "majority_one", 1, master_seed=5)
    assert cfg.spec_for(21) == again.spec_for(21)
    other = SweepConfig("erdos_renyi", (21,), "binary", "majority_one", 1, master_seed=6)
    assert other.spec_for(21).seed != cfg.spec_for(21).seed


def test_default_max_ticks_is_50x_hitting_bound():
    cfg = SweepConfig("star", (9,), "binary", "majority_one", 1, 1)
    assert cfg.max_ticks_for(9) == 50 * 3 * 9**3
    capped = SweepConfig("star", (9,), "binary", "majority_one", 1, 1, max_ticks=123)
    assert capped.max_ticks_for(9) == 123


def test_default_grids():
    assert default_n_values("star") == tuple(range(21, 202, 20))
    assert default_n_values("line") == tuple(range(9, 66, 8))
    assert default_n_values("lollipop") == tuple(range(9, 64, 6))
    assert default_n_values("star", full_grid=True)[-1] == 481
    assert all(n % 2 == 1 for kind in ("star", "line", "lollipop", "erdos_renyi")
               for n in default_n_values(kind))


# ------------------------------------------------------------------- sweeps

def test_run_sweep_single_point():
    cfg = SweepConfig("star", (3,), "quantized", "q_setting1", 1, master_seed=2)
    records = run_sweep(cfg)
    assert len(records) == 1
    rec = records[0]
    assert rec.n == 3
    assert rec.rounds_total == 1
    assert rec.rounds_converged == 1
    assert math.isfinite(rec.mean_ticks)
    assert rec.std_ticks == 0.0


def test_run_sweep_reproducible():
    cfg = SweepConfig("erdos_renyi", (9, 11), "quantized", "q_setting2", 3, master_seed=42)
    a = run_sweep(cfg)
    b = run_sweep(cfg)
    assert a == b  # bit-identical records, including float means


def test_sweep_rounds_are_order_independent():
    cfg = SweepConfig("line", (9,), "quantized", "q_setting2", 4, master_seed=3)
    rec = run_sweep(cfg)[0]
    # re-running any single round from its derived seed reproduces its ticks
    from qconsensus.graphs import build_graph
    from qconsensus.harness import _initial_state

    g = build_graph(cfg.spec_for(9))
    for ri, ticks, ok in rec.round_ticks[::-1]:
        rng = round_rng(cfg.master_seed, 9, ri)
        state = _initial_state(cfg, g, rng)
        res = run_to_convergence(cfg.protocol, g, state, rng, cfg.max_ticks_for(9))
        assert (res.ticks, res.converged) == (ticks, ok)


def test_sweep_records_timeouts_not_fatal():
    cfg = SweepConfig("line", (9,), "quantized", "q_setting2", 3, master_seed=1, max_ticks=1)
    rec = run_sweep(cfg)[0]
    assert rec.rounds_total == 3
    assert rec.rounds_converged == 0
    assert math.isnan(rec.mean_ticks)
    assert all(not ok for _, _, ok in rec.round_ticks)


def test_sweep_mean_over_converged_rounds_matches_dump():
    cfg = SweepConfig("star", (7,), "quantized", "q_setting2", 5, master_seed=8)
    rec = run_sweep(cfg)[0]
    ticks = [t for _, t, ok in rec.round_ticks if ok]
    assert rec.mean_ticks == pytest.approx(float(np.mean(ticks)))
    assert rec.std_ticks == pytest.approx(float(np.std(ticks, ddof=1)))


# ---------------------------------------------------------------- scaling fit

def test_fit_recovers_pure_cubic_exactly():
    points = [(n, 2.5 * n**3) for n in (10, 20, 40, 80)]
    fit = fit_scaling(points)
    assert abs(fit.exponent - 3.0) <= 1e-9
    assert fit.coefficient == pytest.approx(2.5, rel=1e-9)
    assert fit.residual <= 1e-18


def test_fit_constant_data_has_zero_exponent():
    fit = fit_scaling([(n, 7.0) for n in (5, 10, 20)])
    assert abs(fit.exponent) <= 1e-9


def test_fit_power_model_on_n2_logn_curve():
    # evaluating c*n^2*ln(n) on the sweep grid and fitting a pure power law
    # must land between 2 and 2.5 (the log factor inflates the slope)
    points = [(n, 0.63 * n * n * math.log(n)) for n in range(21, 482, 20)]
    fit = fit_scaling(points)
    assert 2.0 < fit.exponent < 2.5


def test_fit_power_log_model_recovers_exponent_exactly():
    points = [(n, 4.2 * n**2 * math.log(n)) for n in (21, 61, 101, 201)]
    fit = fit_scaling(points, model="power_log")
    assert abs(fit.exponent - 2.0) <= 1e-9
    assert fit.coefficient == pytest.approx(4.2, rel=1e-9)


def test_fit_requires_three_points():
    with pytest.raises(ValueError):
        fit_scaling([(3, 5.0), (5, 9.0)])
    with pytest.raises(ValueError):
        fit_scaling([(3, 5.0)], model="power_log")
    with pytest.raises(ValueError):
        fit_scaling([(3, 5.0), (5, 9.0), (7, 9.0)], model="cubic_spline")


@given(st.floats(0.1, 100), st.floats(0.1, 3.5))
@settings(max_examples=40)
def test_fit_recovers_random_power_laws(c, a):
    points = [(n, c * n**a) for n in (8, 16, 32, 64, 128)]
    fit = fit_scaling(points)
    assert fit.exponent == pytest.approx(a, abs=1e-7)
    assert fit.coefficient == pytest.approx(c, rel=1e-6)


# ------------------------------------------------------------------ CSV files

def test_sweep_csv_schema(tmp_path):
    cfg = SweepConfig("star", (5, 7), "quantized", "q_setting1", 2, master_seed=9)
    records = run_sweep(cfg)
    path = tmp_path / "sweep.csv"
    write_sweep_csv(cfg, records, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(SWEEP_CSV_HEADER)
    assert rows[1][:4] == ["star", "quantized", "q_setting1", "5"]
    assert rows[1][8] == "9"
    assert float(rows[2][6]) == pytest.approx(records[1].mean_ticks)


def test_rounds_csv(tmp_path):
    cfg = SweepConfig("star", (5,), "quantized", "q_setting2", 3, master_seed=9)
    records = run_sweep(cfg)
    path = tmp_path / "rounds.csv"
    write_rounds_csv(records, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "n,round,ticks,converged"
    assert len(rows) == 4


def test_curves_csv_has_reference_columns(tmp_path):
    cfg = SweepConfig("star", (21, 41), "binary", "majority_one", 1, master_seed=1)
    records = run_sweep(cfg)
    path = tmp_path / "curves.csv"
    write_curves_csv(cfg, records, path)
    rows = list(csv.reader(path.read_text().strip().splitlines()))
    assert rows[0] == ["n", "mean_ticks", "0.63*n^2*ln(n)"]
    assert float(rows[1][2]) == pytest.approx(0.63 * 21 * 21 * math.log(21))


def test_reference_curves_cover_all_figure_settings():
    kinds = ("star", "line", "lollipop", "erdos_renyi")
    for kind in kinds:
        assert (kind, "binary", "majority_one") in REFERENCE_CURVES
        assert (kind, "quantized", "q_setting1") in REFERENCE_CURVES
        assert (kind, "quantized", "q_setting2") in REFERENCE_CURVES
