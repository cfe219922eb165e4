import math

import numpy as np
import pytest

from portflow.errors import (
    BadExponentError,
    NonpositiveSpeedError,
    WindowExceededError,
)
from portflow.flow_solver import (
    NetworkState,
    Speed,
    evolve,
    lp_norm,
    propagate_small_time,
    state_from_functions,
    travel_time_map,
    weighted_c_norm,
)
from portflow.scenarios import compile_scenario, random_walk_chain, telegraph_dirichlet


class TestTravelTimeMap:
    def test_unit_speed(self):
        ttm = travel_time_map([Speed.constant(1.0)], 16)
        np.testing.assert_allclose(ttm.travel_nodes[0], ttm.xs, atol=1e-15)
        assert ttm.arc_times[0] == pytest.approx(1.0)

    def test_double_speed_halves_time(self):
        ttm = travel_time_map([Speed.constant(2.0)], 16)
        assert ttm.arc_times[0] == pytest.approx(0.5)
        assert ttm.window == pytest.approx(0.5)

    def test_linear_speed_log_travel_time(self):
        # c(x) = 1 + x integrates to ln 2
        grid = 64
        vals = 1.0 + np.linspace(0.0, 1.0, grid + 1)
        sp = Speed.sampled(vals)
        ttm = travel_time_map([sp], grid)
        assert abs(ttm.arc_times[0] - math.log(2.0)) <= 1e-8
        # monotone and invertible to grid tolerance
        xs = ttm.xs
        back = sp.inverse_travel(sp.travel(xs))
        assert np.max(np.abs(back - xs)) <= 1e-10

    def test_nonpositive_speed_rejected(self):
        with pytest.raises(NonpositiveSpeedError):
            Speed.constant(0.0)
        with pytest.raises(NonpositiveSpeedError):
            Speed.sampled([1.0, -0.5, 1.0])

    def test_window_is_min(self):
        ttm = travel_time_map([Speed.constant(1.0), Speed.constant(4.0)], 8)
        assert ttm.window == pytest.approx(0.25)


def bump(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-(((x - 0.5) / 0.07) ** 2))


class TestPropagate:
    def test_pure_advection_absorbing(self):
        grid = 256
        ttm = travel_time_map([Speed.constant(1.0)], grid)
        state = state_from_functions([bump], 1, grid)
        out = propagate_small_time(state, np.zeros((1, 1)), ttm, 0.25)
        xs = ttm.xs
        expected = np.where(xs > 0.25, bump(xs - 0.25), 0.0)
        assert np.max(np.abs(out.values[0] - expected)) <= 1e-12

    def test_dirichlet_endpoint_stays_clamped(self):
        # data with p1 == 0 keeps p1 == 0 at both ends for all window times
        grid = 128
        c = compile_scenario(telegraph_dirichlet(), grid=grid)
        xs = c.ttm.xs
        state = NetworkState(
            0.0, np.stack([np.sin(np.pi * xs), -np.sin(np.pi * xs)]), c.gfm.n_plus
        )
        for t in (0.25, 0.5, 1.0):
            out = propagate_small_time(state, c.gfm.b, c.ttm, t)
            p = c.gfm.edge_fields(out)[0]
            assert abs(p[0][0]) <= 1e-12 and abs(p[0][-1]) <= 1e-12

    def test_full_window_no_overrun(self):
        grid = 64
        ttm = travel_time_map([Speed.constant(1.0), Speed.constant(2.0)], grid)
        state = state_from_functions([bump, bump], 1, grid)
        b = np.array([[0.2, 0.3], [0.1, 0.4]])
        out = propagate_small_time(state, b, ttm, ttm.window)
        assert np.all(np.isfinite(out.values))

    def test_window_exceeded(self):
        ttm = travel_time_map([Speed.constant(2.0)], 16)
        state = state_from_functions([bump], 1, 16)
        with pytest.raises(WindowExceededError):
            propagate_small_time(state, np.zeros((1, 1)), ttm, 0.6)

    def test_grid_exact_tracing(self):
        # constant dyadic speed, grid-aligned time: reads are exact node copies;
        # the interface node x = L^-1(t) itself belongs to the boundary branch
        grid = 64
        c = 2.0
        ttm = travel_time_map([Speed.constant(c)], grid)
        xs = ttm.xs
        data = np.sin(3 * np.pi * xs) + 0.3 * np.cos(np.pi * xs)
        state = NetworkState(0.0, data[None, :], 1)
        t = 8 / (c * grid)
        out = propagate_small_time(state, np.zeros((1, 1)), ttm, t)
        shift = int(round(c * t * grid))
        expected = np.concatenate([np.zeros(shift + 1), data[1:-shift]])
        assert np.max(np.abs(out.values[0] - expected)) <= 1e-12


class TestEvolve:
    def test_zero_time_identity(self):
        grid = 32
        ttm = travel_time_map([Speed.constant(1.0)], grid)
        state = state_from_functions([bump], 1, grid)
        out = evolve(state, np.zeros((1, 1)), ttm, 0.0)[-1]
        np.testing.assert_array_equal(out.values, state.values)

    def test_two_windows_equal_composition(self):
        grid = 64
        c = compile_scenario(telegraph_dirichlet(), grid=grid)
        state = c.initial_state()
        t_two = 2 * c.ttm.window
        direct = evolve(state, c.gfm.b, c.ttm, t_two)[-1]
        step1 = propagate_small_time(state, c.gfm.b, c.ttm, c.ttm.window)
        step2 = propagate_small_time(step1, c.gfm.b, c.ttm, c.ttm.window)
        assert np.max(np.abs(direct.values - step2.values)) <= 1e-10

    def test_semigroup_property_random(self, rng):
        for _ in range(10):
            n_plus = int(rng.integers(1, 3))
            n_minus = int(rng.integers(1, 3))
            n = n_plus + n_minus
            b = 0.8 * rng.uniform(-1, 1, size=(n, n))
            grid = 64
            c = float(rng.choice([0.5, 1.0, 2.0]))
            ttm = travel_time_map([Speed.constant(c)] * n, grid)
            xs = ttm.xs
            vals = np.stack(
                [np.sin(int(rng.integers(1, 4)) * np.pi * xs + rng.uniform(0, 7)) for _ in range(n)]
            )
            state = NetworkState(0.0, vals, n_plus)
            s = int(rng.integers(1, 3 * grid)) / (c * grid)
            t = int(rng.integers(1, 3 * grid)) / (c * grid)
            direct = evolve(state, b, ttm, s + t)[-1]
            composed = evolve(evolve(state, b, ttm, t)[-1], b, ttm, t + s)[-1]
            assert np.max(np.abs(direct.values - composed.values)) <= 1e-9

    def test_positivity_preserved(self, rng):
        for _ in range(10):
            n = 3
            b = np.abs(rng.standard_normal((n, n))) * 0.5
            ttm = travel_time_map([Speed.constant(1.0)] * n, 64)
            vals = np.abs(rng.standard_normal((n, 65))) + 0.1
            state = NetworkState(0.0, vals, 2)
            out = evolve(state, b, ttm, 3.0)[-1]
            assert np.min(out.values) >= -1e-14

    def test_mass_conserved_with_coupling(self):
        c = compile_scenario(random_walk_chain(1.0, 1.0), grid=256)
        state = c.initial_state()
        m0 = c.mass(state)
        out = evolve(state, c.gfm.b, c.ttm, 4.0, nbar=c.coupling())[-1]
        assert abs(c.mass(out) - m0) <= 1e-6

    def test_random_walk_against_upwind_volumes(self):
        # independent oracle: first-order upwind finite volumes for the
        # directional densities (u right, w left) with reflection at the
        # outer ends and pass-through continuity at the junction
        gamma = rate = 1.0
        c = compile_scenario(random_walk_chain(gamma, rate), grid=256)
        t_end = 1.0
        ncell = 4096
        dx = 1.0 / ncell
        centers = (np.arange(ncell) + 0.5) * dx
        profiles = [c.scenario.initial[e][0] for e in range(2)]
        u = [0.5 * np.asarray(p(centers), dtype=float) for p in profiles]
        w = [0.5 * np.asarray(p(centers), dtype=float) for p in profiles]
        dt = 0.45 * dx / gamma
        steps = int(np.ceil(t_end / dt))
        dt = t_end / steps
        for _ in range(steps):
            new_u, new_w = [], []
            for e in range(2):
                u_in = w[0][0] if e == 0 else u[0][-1]
                w_in = w[1][0] if e == 0 else u[1][-1]
                ue = np.concatenate([[u_in], u[e]])
                we = np.concatenate([w[e], [w_in]])
                du = -gamma * np.diff(ue) / dx - rate * u[e] + rate * w[e]
                dw = gamma * np.diff(we) / dx + rate * u[e] - rate * w[e]
                new_u.append(u[e] + dt * du)
                new_w.append(w[e] + dt * dw)
            u, w = new_u, new_w
        final = evolve(
            c.initial_state(), c.gfm.b, c.ttm, t_end, nbar=c.coupling(), max_step=1.0 / 32
        )[-1]
        fields = c.gfm.edge_fields(final)
        xs = c.ttm.xs
        for e in range(2):
            p_fv = u[e] + w[e]
            q_fv = u[e] - w[e]
            p_engine = np.interp(centers, xs, fields[e][0])
            q_engine = np.interp(centers, xs, fields[e][1])
            assert np.max(np.abs(p_engine - p_fv)) <= 5e-3
            assert np.max(np.abs(q_engine - q_fv)) <= 5e-3

    def test_energy_conserved_telegraph(self):
        c = compile_scenario(telegraph_dirichlet(), grid=256)
        state = c.initial_state()
        e0 = c.energy(state)
        for st in evolve(state, c.gfm.b, c.ttm, 4.0, output_times=[1.0, 2.0, 3.0, 4.0]):
            assert abs(c.energy(st) - e0) <= 1e-6

    def test_interpolation_error_second_order(self):
        # non-aligned output time: error drops ~4x when the grid doubles
        errs = {}
        for grid in (128, 256):
            c = compile_scenario(telegraph_dirichlet(), grid=grid)
            state = c.initial_state()
            t = 0.3701171875  # not a multiple of 1/256
            out = evolve(state, c.gfm.b, c.ttm, t)[-1]
            p = c.gfm.edge_fields(out)[0]
            xs = c.ttm.xs
            exact = np.sin(np.pi * xs) * math.cos(math.pi * t)
            errs[grid] = np.max(np.abs(p[0] - exact))
        assert errs[256] < errs[128] / 2.5

    def test_heterogeneous_speeds_against_upwind(self):
        # independent oracle for the cross-arc boundary reads: first-order
        # upwind on a fine grid with the algebraic coupling applied nodewise
        speeds = [1.0, 3.0, 2.0]  # first two rightward, last leftward
        n_plus = 2
        b = np.array([
            [0.2, -0.4, 0.3],
            [0.5, 0.1, -0.2],
            [-0.3, 0.2, 0.4],
        ])
        nfine = 3000
        dx = 1.0 / nfine
        xs_f = np.linspace(0.0, 1.0, nfine + 1)
        profs = [
            lambda x: np.sin(np.pi * x),
            lambda x: np.cos(np.pi * x) * 0.5,
            lambda x: np.sin(2 * np.pi * x) * 0.8,
        ]
        u = [np.asarray(p(xs_f), dtype=float) for p in profs]
        t_end = 0.25  # below the window 1/3
        dt = 0.4 * dx / max(speeds)
        steps = int(np.ceil(t_end / dt))
        dt = t_end / steps
        for _ in range(steps):
            new = []
            for a, c in enumerate(speeds):
                if a < n_plus:
                    upd = u[a].copy()
                    upd[1:] -= c * dt / dx * (u[a][1:] - u[a][:-1])
                else:
                    upd = u[a].copy()
                    upd[:-1] += c * dt / dx * (u[a][1:] - u[a][:-1])
                new.append(upd)
            incoming = np.array([new[0][-1], new[1][-1], new[2][0]])
            outgoing = b @ incoming
            new[0][0], new[1][0], new[2][-1] = outgoing
            u = new
        grid = 512
        ttm = travel_time_map([Speed.constant(c) for c in speeds], grid)
        state = state_from_functions(profs, n_plus, grid)
        out = propagate_small_time(state, b, ttm, t_end)
        for a in range(3):
            engine = np.interp(xs_f, ttm.xs, out.values[a])
            assert np.max(np.abs(engine - u[a])) <= 2e-2

    def test_domination_by_absolute_matrix(self, rng):
        for _ in range(10):
            n = 4
            b = rng.uniform(-0.6, 0.6, size=(n, n))
            ttm = travel_time_map([Speed.constant(1.0)] * n, 64)
            xs = ttm.xs
            vals = np.stack([np.sin((k + 1) * np.pi * xs) for k in range(n)])
            st = NetworkState(0.0, vals, 2)
            st_abs = NetworkState(0.0, np.abs(vals), 2)
            out = evolve(st, b, ttm, 2.0)[-1]
            out_abs = evolve(st_abs, np.abs(b), ttm, 2.0)[-1]
            assert np.max(np.abs(out.values) - out_abs.values) <= 1e-9


class TestNorms:
    def test_constant_unit(self):
        state = NetworkState(0.0, np.ones((1, 65)), 1)
        ttm = travel_time_map([Speed.constant(1.0)], 64)
        assert lp_norm(state, 1.0) == pytest.approx(1.0)
        assert weighted_c_norm(state, ttm) == pytest.approx(1.0)

    def test_speed_weighting(self):
        state = NetworkState(0.0, np.ones((1, 65)), 1)
        ttm = travel_time_map([Speed.constant(2.0)], 64)
        assert weighted_c_norm(state, ttm) == pytest.approx(0.5)

    def test_l2_of_sine(self):
        xs = np.linspace(0, 1, 65)
        state = NetworkState(0.0, np.sin(np.pi * xs)[None, :], 1)
        assert abs(lp_norm(state, 2.0) - math.sqrt(0.5)) <= 1e-8

    def test_bad_exponent(self):
        state = NetworkState(0.0, np.ones((1, 17)), 1)
        with pytest.raises(BadExponentError):
            lp_norm(state, 0.5)
        with pytest.raises(BadExponentError):
            lp_norm(state, math.inf)


class TestContraction:
    def test_case1_c_norm_nonincreasing(self, rng):
        for _ in range(10):
            n_plus = int(rng.integers(1, 4))
            n_minus = int(rng.integers(1, 4))
            n = n_plus + n_minus
            b = np.abs(rng.standard_normal((n, n)))
            b /= b.sum(axis=0, keepdims=True)
            b *= rng.uniform(0.3, 1.0, size=(1, n))
            c = float(rng.uniform(0.5, 2.0))
            ttm = travel_time_map([Speed.constant(c)] * n, 128)
            xs = ttm.xs
            vals = np.stack(
                [
                    rng.uniform(0.5, 1.0)
                    + rng.uniform(0.0, 0.4)
                    * np.sin(int(rng.integers(1, 4)) * np.pi * xs + rng.uniform(0, 7))
                    for _ in range(n)
                ]
            )
            state = NetworkState(0.0, vals, n_plus)
            prev = weighted_c_norm(state, ttm)
            for _ in range(5):
                state = propagate_small_time(state, b, ttm, ttm.window)
                cur = weighted_c_norm(state, ttm)
                assert cur <= prev + 1e-8
                prev = cur
