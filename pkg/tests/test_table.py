import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tests.conftest import EXAMPLE_DELTA, EXAMPLE_SPEED, synthetic_table
from action_map.boundary import (
    BISECTION_TOL,
    GridSpec,
    max_safe_length,
    max_safe_length_array,
    rho_square,
    steady_state_array,
    steady_state_for,
)
from action_map.table import (
    CONSERVATIVE_MARGIN,
    FORMAT_VERSION,
    HEADER,
    MAGIC,
    BoundaryTable,
    boundary_slice,
    dump_table,
    load_table,
    lookup,
    map_action,
    parse_table,
    save_table,
    symmetry_residual,
    table_stats,
)
from utils.errors import TableFormatError, TableMismatchWarning, UsageError, ValidationError
from vehicle.dynamics import check_friction_array
from vehicle.params import VehicleParams


def capped_table(counts=(3, 3, 16)):
    params = VehicleParams()
    grid = GridSpec.for_vehicle(params, counts)
    rho = np.broadcast_to(rho_square(grid.theta_nodes), grid.counts)
    return BoundaryTable(grid=grid, rho=rho, mu_max=params.mu_max, params_hash=params.hash())


class TestLookup:
    def test_exact_at_nodes(self):
        table = synthetic_table()
        grid = table.grid
        v, d, t = np.meshgrid(grid.v_nodes, grid.delta_nodes, grid.theta_nodes, indexing="ij")
        np.testing.assert_allclose(lookup(table, v, d, t), table.rho, rtol=0, atol=1e-12)

    def test_cell_center_is_corner_average(self):
        table = synthetic_table()
        grid = table.grid
        i, j, k = 1, 2, 5
        v = grid.v_nodes[i:i + 2].mean()
        d = grid.delta_nodes[j:j + 2].mean()
        t = grid.theta_nodes[k:k + 2].mean()
        expected = table.rho[i:i + 2, j:j + 2, k:k + 2].mean()
        assert lookup(table, v, d, t) == pytest.approx(expected, abs=1e-12)

    def test_theta_wraps_through_pi(self):
        table = synthetic_table()
        grid = table.grid
        h = 2.0 * math.pi / grid.n_theta
        v, d = grid.v_nodes[2], grid.delta_nodes[1]
        expected = 0.5 * (table.rho[2, 1, -1] + table.rho[2, 1, 0])
        assert lookup(table, v, d, -math.pi + 0.5 * h) == pytest.approx(expected, abs=1e-12)
        assert lookup(table, v, d, math.pi + 0.5 * h) == pytest.approx(expected, abs=1e-12)
        assert lookup(table, v, d, -math.pi) == pytest.approx(table.rho[2, 1, -1], abs=1e-12)

    def test_out_of_range_states_are_clamped(self):
        table = synthetic_table()
        assert lookup(table, -5.0, 0.0, 0.3) == lookup(table, 0.0, 0.0, 0.3)
        assert lookup(table, 99.0, 2.0, 0.3) == lookup(table, 30.0, table.grid.delta_max, 0.3)

    def test_off_grid_points_blend_their_cell_trilinearly(self):
        table = synthetic_table()
        grid = table.grid
        rng = np.random.default_rng(5)
        for _ in range(25):
            point = [rng.uniform(grid.v_min, grid.v_max), rng.uniform(grid.delta_min, grid.delta_max),
                     rng.uniform(grid.theta_nodes[0], grid.theta_nodes[-1])]
            index, weight = [], []
            for nodes, value in zip((grid.v_nodes, grid.delta_nodes, grid.theta_nodes), point):
                i = min(int(np.searchsorted(nodes, value, side="right")) - 1, len(nodes) - 2)
                index.append(i)
                weight.append((value - nodes[i]) / (nodes[i + 1] - nodes[i]))
            (i, j, k), (wv, wd, wt) = index, weight
            expected = 0.0
            for di in (0, 1):
                for dj in (0, 1):
                    for dk in (0, 1):
                        w = (wv if di else 1 - wv) * (wd if dj else 1 - wd) * (wt if dk else 1 - wt)
                        expected += w * table.rho[i + di, j + dj, k + dk]
            assert lookup(table, *point) == pytest.approx(expected, abs=1e-12)

    def test_conservative_off_grid_stays_below_direct_search(self, params, small_table):
        rng = np.random.default_rng(17)
        n = 100
        v = rng.uniform(0.0, 30.0, n)
        delta = rng.uniform(-params.delta_max, params.delta_max, n)
        theta = rng.uniform(-math.pi, math.pi, n)
        states = steady_state_array(v, delta, params)
        # states that cannot even coast have no admissible control at all
        coasting_ok = check_friction_array(states, np.zeros(2), params)
        assert coasting_ok.sum() > 20
        v, delta, theta = v[coasting_ok], delta[coasting_ok], theta[coasting_ok]
        direct = max_safe_length_array(states[coasting_ok], theta, params)
        conservative = lookup(small_table, v, delta, theta, conservative=True)
        assert np.all(conservative <= direct + BISECTION_TOL)

    def test_conservative_is_shrunk_corner_minimum(self):
        table = synthetic_table()
        grid = table.grid
        v = grid.v_nodes[1:3].mean()
        d = grid.delta_nodes[0:2].mean()
        t = grid.theta_nodes[3:5].mean()
        expected = table.rho[1:3, 0:2, 3:5].min() * (1.0 - CONSERVATIVE_MARGIN)
        assert lookup(table, v, d, t, conservative=True) == pytest.approx(expected, abs=1e-12)
        assert lookup(table, v, d, t, conservative=True) <= lookup(table, v, d, t)

    def test_conservative_keeps_the_square_where_all_nodes_are_capped(self):
        table = capped_table()
        for theta in np.linspace(-3.0, 3.0, 11):
            assert lookup(table, 7.0, 0.1, theta, conservative=True) == pytest.approx(rho_square(theta))

    def test_never_exceeds_the_square(self, small_table):
        rng = np.random.default_rng(3)
        v = rng.uniform(0.0, 30.0, 500)
        d = rng.uniform(-0.6, 0.6, 500)
        t = rng.uniform(-math.pi, math.pi, 500)
        for conservative in (False, True):
            assert np.all(lookup(small_table, v, d, t, conservative=conservative) <= rho_square(t) + 1e-12)

    def test_table_nodes_agree_with_direct_search(self, params, small_table):
        grid = small_table.grid
        for i, j, k in [(2, 3, 5), (4, 5, 17), (6, 9, 0), (8, 1, 23)]:
            state = steady_state_for(grid.v_nodes[i], grid.delta_nodes[j], params)
            direct = max_safe_length(state, grid.theta_nodes[k], params)
            assert small_table.rho[i, j, k] == pytest.approx(direct, abs=2.0 * BISECTION_TOL)


class TestMapAction:
    def test_inside_passes_through(self):
        table = synthetic_table(low=0.5, high=0.9)
        a = np.array([0.2, -0.1])
        np.testing.assert_array_equal(map_action(table, 10.0, 0.0, a), a)

    def test_outside_is_scaled_along_its_ray(self):
        table = synthetic_table(low=0.3, high=0.5)
        a = np.array([0.9, 0.6])
        u = map_action(table, 10.0, 0.1, a)
        rho_hat = lookup(table, 10.0, 0.1, math.atan2(0.6, 0.9), conservative=True)
        assert np.hypot(*u) == pytest.approx(rho_hat)
        assert u[0] * a[1] - u[1] * a[0] == pytest.approx(0.0, abs=1e-12)

    def test_origin_maps_to_origin(self, small_table):
        np.testing.assert_array_equal(map_action(small_table, 20.0, 0.3, [0.0, 0.0]), [0.0, 0.0])

    def test_whole_square_is_reachable_when_unconstrained(self):
        table = capped_table()
        for a in ([1.0, 1.0], [-1.0, 0.3], [0.0, -1.0], [0.25, 0.75]):
            np.testing.assert_allclose(map_action(table, 12.0, 0.0, a), a, rtol=0, atol=1e-12)

    def test_batch_shape(self, small_table):
        a = np.zeros((4, 2))
        assert map_action(small_table, np.full(4, 10.0), np.zeros(4), a).shape == (4, 2)

    @pytest.mark.parametrize("a", [[1.0, 2.0, 3.0], [math.nan, 0.0], [0.0, math.inf]])
    def test_bad_actions(self, small_table, a):
        with pytest.raises(UsageError):
            map_action(small_table, 10.0, 0.0, a)

    @settings(max_examples=300, deadline=None)
    @given(
        v=st.floats(0.0, 30.0),
        delta=st.floats(-0.6, 0.6),
        a_x=st.floats(-1.0, 1.0),
        a_y=st.floats(-1.0, 1.0),
    )
    def test_mapping_properties(self, small_table, v, delta, a_x, a_y):
        a = np.array([a_x, a_y])
        u = map_action(small_table, v, delta, a)
        length = math.hypot(a_x, a_y)
        assert np.all(np.abs(u) <= 1.0)
        if length == 0.0:
            assert np.all(u == 0.0)
            return
        rho_hat = lookup(small_table, v, delta, math.atan2(a_y, a_x), conservative=True)
        assert np.hypot(*u) <= rho_hat + 1e-12
        if length <= rho_hat:
            np.testing.assert_array_equal(u, a)
        else:
            # same direction, no sign flip
            assert u[0] * a_y - u[1] * a_x == pytest.approx(0.0, abs=1e-12)
            assert u[0] * a_x + u[1] * a_y >= 0.0
        np.testing.assert_allclose(map_action(small_table, v, delta, u), u, atol=1e-9)


def _feasible_samples(params, table, n, seed):
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.0, 30.0, n)
    delta = rng.uniform(-params.delta_max, params.delta_max, n)
    states = steady_state_array(v, delta, params)
    coasting_ok = check_friction_array(states, np.zeros(2), params)
    a = rng.uniform(-1.0, 1.0, (n, 2))
    return states[coasting_ok], v[coasting_ok], delta[coasting_ok], a[coasting_ok]


def test_mapped_actions_respect_friction(params, small_table):
    states, v, delta, a = _feasible_samples(params, small_table, 2000, seed=11)
    assert len(v) > 500
    u = map_action(small_table, v, delta, a)
    assert np.all(check_friction_array(states, u, params))


@pytest.mark.slow
def test_mapped_actions_respect_friction_on_desk_grid(params, desk_table):
    states, v, delta, a = _feasible_samples(params, desk_table, 100_000, seed=12)
    u = map_action(desk_table, v, delta, a)
    assert np.all(check_friction_array(states, u, params))


def test_example_state_is_pulled_inside(params, small_table):
    a = np.array([-0.75, 0.25])
    u = map_action(small_table, EXAMPLE_SPEED, EXAMPLE_DELTA, a)
    state = steady_state_array(EXAMPLE_SPEED, EXAMPLE_DELTA, params)
    assert np.hypot(*u) < np.hypot(*a)
    assert check_friction_array(state, u, params)


class TestTableProperties:
    def test_stats_and_range(self, small_table):
        stats = table_stats(small_table)
        assert 0.0 <= stats["min"] <= stats["mean"] <= stats["max"] <= math.sqrt(2.0)

    def test_standstill_slice_is_capped(self, small_table):
        np.testing.assert_allclose(small_table.rho[0], np.broadcast_to(rho_square(small_table.grid.theta_nodes),
                                                                       small_table.rho[0].shape))

    def test_mirror_symmetry(self, small_table):
        assert symmetry_residual(small_table) <= 2.0 * BISECTION_TOL

    def test_shape_must_match_grid(self, params):
        grid = GridSpec.for_vehicle(params, (3, 3, 8))
        with pytest.raises(ValidationError):
            BoundaryTable(grid=grid, rho=np.zeros((3, 3, 9)), mu_max=1.15, params_hash=params.hash())

    def test_values_above_the_square_are_rejected(self, params):
        grid = GridSpec.for_vehicle(params, (3, 3, 8))
        with pytest.raises(ValidationError):
            BoundaryTable(grid=grid, rho=np.full((3, 3, 8), 1.5), mu_max=1.15, params_hash=params.hash())


class TestBoundarySlice:
    def test_rows_and_columns(self, small_table):
        df = boundary_slice(small_table, 15.4, np.radians([-10.0, 0.0, 10.0]))
        assert list(df.columns) == ["delta", "theta", "rho_hat", "u_x", "u_y"]
        assert len(df) == 3 * small_table.grid.n_theta
        np.testing.assert_allclose(np.hypot(df["u_x"], df["u_y"]), df["rho_hat"], atol=1e-12)

    def test_empty_steering_list(self, small_table):
        df = boundary_slice(small_table, 15.4, [])
        assert len(df) == 0
        assert list(df.columns) == ["delta", "theta", "rho_hat", "u_x", "u_y"]

    def test_speed_outside_table_warns(self, small_table):
        with pytest.warns(TableMismatchWarning):
            df = boundary_slice(small_table, 45.0, [0.0])
        assert len(df) == small_table.grid.n_theta


class TestTableFile:
    def test_round_trip(self, tmp_path, params, small_table):
        path = str(tmp_path / "table.ambt")
        save_table(small_table, path)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            loaded = load_table(path, params=params)
        assert loaded.grid == small_table.grid
        np.testing.assert_array_equal(loaded.rho, small_table.rho)
        assert loaded.mu_max == small_table.mu_max
        assert loaded.params_hash == small_table.params_hash
        assert (loaded.horizon_steps, loaded.dt) == (small_table.horizon_steps, small_table.dt)
        assert dump_table(loaded) == dump_table(small_table)

    def test_layout(self, small_table):
        payload = dump_table(small_table)
        assert payload[:4] == MAGIC
        assert len(payload) == HEADER.size + 8 * 9 * 11 * 24

    def test_parameter_mismatch_warns(self, params, small_table):
        other = params.with_mu_max(1.0)
        with pytest.warns(TableMismatchWarning):
            parse_table(dump_table(small_table), params=other)
        with pytest.raises(TableFormatError):
            parse_table(dump_table(small_table), params=other, strict=True)

    def test_truncated(self, small_table):
        payload = dump_table(small_table)
        with pytest.raises(TableFormatError):
            parse_table(payload[:20])
        with pytest.raises(TableFormatError):
            parse_table(payload[:-8])

    def test_bad_magic_and_version(self, small_table):
        payload = dump_table(small_table)
        with pytest.raises(TableFormatError):
            parse_table(b"XXXX" + payload[4:])
        with pytest.raises(TableFormatError):
            parse_table(payload[:4] + (99).to_bytes(4, "little") + payload[8:])

    def test_corrupted_grid(self, params):
        header = HEADER.pack(MAGIC, FORMAT_VERSION, params.hash(), 1, 3, 8, 0.0, 30.0, -0.6, 0.6, -math.pi, math.pi, 1.15,
                             10, 0.01)
        with pytest.raises(TableFormatError):
            parse_table(header + bytes(8 * 24))

    def test_corrupted_values(self, params):
        header = HEADER.pack(MAGIC, FORMAT_VERSION, params.hash(), 2, 2, 8, 0.0, 30.0, -0.6, 0.6, -math.pi, math.pi, 1.15,
                             10, 0.01)
        body = np.full(32, -0.5).astype("<f8").tobytes()
        with pytest.raises(TableFormatError):
            parse_table(header + body)

    def test_check_horizon_is_stored(self, params):
        table = synthetic_table()
        short = BoundaryTable(grid=table.grid, rho=table.rho, mu_max=table.mu_max, params_hash=table.params_hash,
                              horizon_steps=1, dt=0.02)
        loaded = parse_table(dump_table(short))
        assert (loaded.horizon_steps, loaded.dt) == (1, 0.02)

    def test_zero_horizon_in_file(self, params):
        header = HEADER.pack(MAGIC, FORMAT_VERSION, params.hash(), 2, 2, 8, 0.0, 30.0, -0.6, 0.6, -math.pi, math.pi,
                             1.15, 0, 0.01)
        with pytest.raises(TableFormatError):
            parse_table(header + np.full(32, 0.5).astype("<f8").tobytes())

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_table(str(tmp_path / "none.ambt"))
