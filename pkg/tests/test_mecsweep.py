import math

import pytest

from encorsim.mecsweep import (
    DEFAULT_C_INTER, DEFAULT_C_INTRA, GridNetwork, TilingError, block_size,
    classify_moves, default_densities, generate_moves, inter_fraction_exhaustive,
    simulate_density, sweep, to_csv_rows,
)


def grid(w=20, h=20, ues=200, handover_rate_per_min=5.0):
    return GridNetwork(width=w, height=h, ue_count=ues,
                       handover_rate_per_min=handover_rate_per_min)


def test_block_size_tilings():
    g = grid(20, 20)
    assert block_size(g, 1) == (20, 20)
    assert block_size(g, 4) == (10, 10)
    assert block_size(g, 400) == (1, 1)


def test_block_size_rejects_bad_k():
    g = grid(20, 20)
    with pytest.raises(TilingError):
        block_size(g, 2)  # not a perfect square
    with pytest.raises(TilingError):
        block_size(g, 9)  # 3 does not divide 20


def test_default_densities_cover_extremes():
    ks = default_densities(grid(20, 20))
    assert ks[0] == 1 and ks[-1] == 400
    assert all(math.isqrt(k) ** 2 == k for k in ks)


def test_moves_stay_on_grid_and_adjacent():
    g = grid(8, 8, ues=20)
    for (x0, y0), (x1, y1) in generate_moves(g, 5, seed=3):
        assert 0 <= x1 < 8 and 0 <= y1 < 8
        assert abs(x1 - x0) + abs(y1 - y0) == 1


def test_trace_deterministic_per_seed():
    g = grid(8, 8, ues=20)
    assert generate_moves(g, 5, seed=1) == generate_moves(g, 5, seed=1)
    assert generate_moves(g, 5, seed=1) != generate_moves(g, 5, seed=2)


def test_single_anchor_has_zero_crossings():
    g = grid(8, 8, ues=50)
    moves = generate_moves(g, 10, seed=0)
    assert classify_moves(moves, g, 1) == 0


def test_anchor_per_station_makes_every_move_cross():
    g = grid(8, 8, ues=50)
    moves = generate_moves(g, 10, seed=0)
    assert classify_moves(moves, g, 64) == len(moves)


def test_exhaustive_oracle_4x4_k4_by_hand():
    # 4x4 grid, 2x2 blocks: 48 directed (station, neighbor) pairs, of
    # which 2 vertical cut-lines x 4 rows x 2 directions = 16 cross
    g = grid(4, 4, ues=1)
    assert inter_fraction_exhaustive(g, 4) == pytest.approx(16 / 48)


def test_simulation_matches_stationary_oracle():
    # the reflecting random walk's stationary crossing rate equals the
    # exhaustive pair enumeration; a long trace should agree within a few %
    g = grid(10, 10, ues=400, handover_rate_per_min=5.0)
    moves = generate_moves(g, 60, seed=11)
    for k in (4, 25, 100):
        frac = classify_moves(moves, g, k) / len(moves)
        assert frac == pytest.approx(inter_fraction_exhaustive(g, k), rel=0.06)


def test_poisson_trace_length_within_3_sigma():
    g = grid(8, 8, ues=100, handover_rate_per_min=5.0)
    moves = generate_moves(g, 10, seed=4)
    mean = 100 * 5.0 * 10
    assert abs(len(moves) - mean) <= 3 * math.sqrt(mean)


def test_message_cost_arithmetic():
    g = grid(4, 4, ues=10)
    moves = [((0, 0), (0, 1)), ((1, 1), (2, 1))]  # intra, inter for k=4
    p = simulate_density(g, 4, moves=moves)
    assert p.total_handovers == 2 and p.inter_anchor == 1
    assert p.total_messages == DEFAULT_C_INTRA + DEFAULT_C_INTER
    assert p.inter_fraction == 0.5


def test_sweep_ratios_normalized_and_monotone():
    g = grid(20, 20, ues=500)
    points, ratios = sweep(g, duration_min=20, seed=7)
    assert ratios[0] == 1.0
    assert all(b >= a for a, b in zip(ratios, ratios[1:]))
    # densest deployment: every handover crosses, ratio = c_inter/c_intra
    assert ratios[-1] == pytest.approx(DEFAULT_C_INTER / DEFAULT_C_INTRA)
    assert ratios[-1] == pytest.approx(50 / 15)


def test_sweep_reuses_one_trace_across_densities():
    g = grid(20, 20, ues=100)
    points, _ = sweep(g, seed=5)
    counts = {p.total_handovers for p in points}
    assert len(counts) == 1  # same trace everywhere


def test_sweep_deterministic():
    g = grid(20, 20, ues=100)
    assert sweep(g, seed=9) == sweep(g, seed=9)


def test_csv_rows_shape():
    g = grid(4, 4, ues=10)
    points, ratios = sweep(g, seed=0)
    rows = to_csv_rows(points, ratios)
    assert len(rows) == len(points)
    assert all(len(r) == 6 for r in rows)
    assert rows[0][0] == 1 and rows[0][5] == 1.0
