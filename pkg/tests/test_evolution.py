"""Time discretization, implicit marching and mild-solution refinement."""

import math

import numpy as np
import pytest

import graphflow.nonlinearity as nlmod
from graphflow.errors import DiscretizationError, GraphError, SolverError
from graphflow.evolution import (
    EpsilonDiscretization,
    Trajectory,
    contraction_check,
    decay_check,
    discretization_for_eps,
    implicit_euler_march,
    make_uniform_discretization,
    mild_solve,
    semigroup_linear_oracle,
)
from graphflow.generators import cycle_graph, lattice, path_graph
from graphflow.graphs import GridFunction, dirichlet_subgraph

from oracles import eig_semigroup


def whole(graph):
    return dirichlet_subgraph(graph, graph.nodes)


class TestDiscretization:
    def test_uniform_fields(self):
        disc = make_uniform_discretization(2.0, 4)
        assert disc.n_steps == 4
        assert disc.horizon == 2.0
        assert disc.eps == 0.5
        assert disc.step(1) == pytest.approx(0.5)
        np.testing.assert_allclose(disc.times, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_declared_eps_can_exceed_step(self):
        disc = make_uniform_discretization(1.0, 10, eps=0.5)
        assert disc.eps == 0.5
        assert disc.n_steps == 10

    def test_for_eps_step_count(self):
        disc = discretization_for_eps(1.0, 0.3)
        assert disc.n_steps == 4
        assert np.diff(disc.times).max() <= 0.3 + 1e-15

    def test_for_eps_exact_division(self):
        assert discretization_for_eps(1.0, 0.25).n_steps == 4

    def test_rejects_short_partition(self):
        with pytest.raises(DiscretizationError, match="two time points"):
            EpsilonDiscretization(times=[0.0], eps=1.0)

    def test_rejects_offset_start(self):
        with pytest.raises(DiscretizationError, match="start at 0"):
            EpsilonDiscretization(times=[0.5, 1.0], eps=1.0)

    def test_rejects_nonincreasing(self):
        with pytest.raises(DiscretizationError, match="strictly"):
            EpsilonDiscretization(times=[0.0, 1.0, 1.0], eps=2.0)

    def test_rejects_step_above_eps(self):
        with pytest.raises(DiscretizationError, match="above eps"):
            EpsilonDiscretization(times=[0.0, 0.5, 2.0], eps=1.0)

    def test_rejects_bad_horizon(self):
        with pytest.raises(DiscretizationError, match="positive"):
            make_uniform_discretization(0.0, 4)
        with pytest.raises(DiscretizationError, match="one step"):
            make_uniform_discretization(1.0, 0)
        with pytest.raises(DiscretizationError, match="positive"):
            discretization_for_eps(1.0, 0.0)

    def test_forcing_sampled_at_right_endpoint(self):
        disc = make_uniform_discretization(1.0, 4, forcing=lambda t, x: t)
        np.testing.assert_allclose(disc.sample_forcing(1, [0, 1]), [0.25, 0.25])
        np.testing.assert_allclose(disc.sample_forcing(4, [0]), [1.0])

    def test_no_forcing_samples_zero(self):
        disc = make_uniform_discretization(1.0, 2)
        np.testing.assert_array_equal(disc.sample_forcing(1, [0, 1, 2]), np.zeros(3))

    def test_segment_index_right_continuous(self):
        disc = make_uniform_discretization(1.0, 4)
        assert disc.segment_index(0.0) == 0
        assert disc.segment_index(0.1) == 1
        assert disc.segment_index(0.25) == 1
        assert disc.segment_index(0.25 + 1e-9) == 2
        assert disc.segment_index(1.0) == 4
        with pytest.raises(DiscretizationError, match="outside"):
            disc.segment_index(1.5)


class TestMarch:
    def test_scalar_two_step_hand_value(self):
        # single node, no edges: each step solves (1 + lam) u_k = u_{k-1}
        sub = whole(path_graph(1))
        disc = make_uniform_discretization(1.0, 2)
        traj = implicit_euler_march(sub, nlmod.linear(), np.array([1.0]), disc)
        assert traj.states[2][0] == pytest.approx(4.0 / 9.0, abs=1e-12)
        assert traj.states[0][0] == 1.0
        assert len(traj.sweeps) == 2

    def test_forcing_enters_at_right_endpoint(self):
        # f = 0, no edges: u_k = u_{k-1} + lam * h(t_k)
        sub = whole(path_graph(1))
        disc = make_uniform_discretization(1.0, 2, forcing=lambda t, x: t)
        traj = implicit_euler_march(sub, nlmod.zero(), np.array([0.0]), disc)
        assert traj.states[1][0] == pytest.approx(0.25, abs=1e-12)
        assert traj.states[2][0] == pytest.approx(0.75, abs=1e-12)

    def test_value_at_uses_piecewise_constant_interpolant(self):
        sub = whole(path_graph(1))
        disc = make_uniform_discretization(1.0, 2)
        traj = implicit_euler_march(sub, nlmod.linear(), np.array([1.0]), disc)
        assert traj.value_at(0.3).values[0] == traj.states[1][0]
        assert traj.value_at(0.5).values[0] == traj.states[1][0]
        assert traj.value_at(0.75).values[0] == traj.states[2][0]

    def test_norm_traces(self):
        sub = whole(path_graph(3))
        disc = make_uniform_discretization(1.0, 4)
        traj = implicit_euler_march(sub, nlmod.power_absorption(2.0),
                                    np.array([1.0, -0.5, 0.25]), disc)
        assert len(traj.norms(2)) == 5
        assert traj.abs_sup_values()[0] == 1.0
        assert (np.diff(traj.abs_sup_values()) <= 1e-12).all()

    def test_f2_step_bound_enforced(self):
        sub = whole(path_graph(2))
        nl = nlmod.lipschitz("halfsin", lambda s: 0.5 * math.sin(2 * s), L=2.0)
        disc = make_uniform_discretization(1.0, 2)
        with pytest.raises(DiscretizationError, match="admissible"):
            implicit_euler_march(sub, nl, np.zeros(2), disc)
        # steps strictly below 1/L are fine
        fine = make_uniform_discretization(1.0, 3)
        implicit_euler_march(sub, nl, np.zeros(2), fine)


class TestSemigroupOracle:
    def test_march_converges_first_order_to_matrix_exponential(self):
        g = path_graph(6)
        sub = whole(g)
        rng = np.random.default_rng(1)
        u0 = rng.uniform(-1, 1, 6)
        ref = semigroup_linear_oracle(sub, u0, 0.5).values
        gaps = []
        for n in (16, 32):
            disc = make_uniform_discretization(0.5, n)
            traj = implicit_euler_march(sub, nlmod.linear(), u0, disc)
            gaps.append(float(np.max(np.abs(traj.states[-1] - ref))))
        assert gaps[1] < gaps[0]
        assert 1.6 <= gaps[0] / gaps[1] <= 2.6
        assert gaps[1] < 1e-2

    def test_oracle_against_independent_eigendecomposition(self):
        g = cycle_graph(7)
        sub = whole(g)
        rng = np.random.default_rng(3)
        u0 = rng.uniform(-1, 1, 7)
        a = semigroup_linear_oracle(sub, u0, 0.8).values
        b = eig_semigroup(sub, u0, 0.8)
        np.testing.assert_allclose(a, b, atol=1e-13)

    def test_oracle_window_limit(self):
        sub = whole(path_graph(65))
        with pytest.raises(GraphError, match="64"):
            semigroup_linear_oracle(sub, np.zeros(65), 1.0)

    def test_oracle_rejects_negative_time(self):
        sub = whole(path_graph(2))
        with pytest.raises(ValueError, match="nonnegative"):
            semigroup_linear_oracle(sub, np.zeros(2), -1.0)


class TestContraction:
    def _pair(self, forcing_u=None, forcing_v=None):
        sub = whole(path_graph(5))
        nl = nlmod.power_absorption(3.0)
        disc_u = make_uniform_discretization(1.0, 20, forcing=forcing_u)
        disc_v = make_uniform_discretization(1.0, 20, forcing=forcing_v)
        rng = np.random.default_rng(7)
        tu = implicit_euler_march(sub, nl, rng.uniform(-1, 1, 5), disc_u)
        tv = implicit_euler_march(sub, nl, rng.uniform(-1, 1, 5), disc_v)
        return tu, tv

    def test_unforced_distances_nonincreasing(self):
        tu, tv = self._pair()
        assert contraction_check(tu, tv, 2, slack=1e-10)
        assert contraction_check(tu, tv, 1, slack=1e-10)
        assert contraction_check(tu, tv, math.inf, slack=1e-10)

    def test_forced_bound_with_integral_term(self):
        tu, tv = self._pair(forcing_u=lambda t, x: math.sin(t),
                            forcing_v=None)
        assert contraction_check(tu, tv, 2, slack=5 * tu.disc.eps)

    def test_tampered_trajectory_fails(self):
        tu, tv = self._pair()
        tu.states[-1] = tu.states[-1] + 1.0
        assert not contraction_check(tu, tv, 2, slack=1e-10)

    def test_window_and_grid_must_match(self):
        tu, _ = self._pair()
        other_sub = whole(path_graph(4))
        disc = make_uniform_discretization(1.0, 20)
        tw = implicit_euler_march(other_sub, nlmod.linear(), np.zeros(4), disc)
        with pytest.raises(GraphError, match="window"):
            contraction_check(tu, tw, 2, slack=1e-10)
        sub = whole(path_graph(5))
        coarse = make_uniform_discretization(1.0, 10)
        tc = implicit_euler_march(sub, nlmod.linear(), np.zeros(5), coarse)
        with pytest.raises(DiscretizationError, match="partition"):
            contraction_check(tu, tc, 2, slack=1e-10)


class TestDecay:
    def test_linear_decay_bound_holds(self):
        sub = whole(path_graph(5))
        disc = make_uniform_discretization(2.0, 40)
        rng = np.random.default_rng(11)
        traj = implicit_euler_march(sub, nlmod.linear(), rng.uniform(0, 1, 5), disc)
        assert decay_check(traj, 2)
        assert decay_check(traj, math.inf)

    def test_forced_decay_bound_holds(self):
        sub = whole(path_graph(4))
        disc = make_uniform_discretization(1.0, 20, forcing=lambda t, x: 0.3)
        traj = implicit_euler_march(sub, nlmod.linear(), np.ones(4), disc)
        assert decay_check(traj, 2)

    def test_tampered_trajectory_fails(self):
        sub = whole(path_graph(4))
        disc = make_uniform_discretization(1.0, 20)
        traj = implicit_euler_march(sub, nlmod.linear(), np.ones(4), disc)
        traj.states[-1] = traj.states[-1] + 1.0
        assert not decay_check(traj, 2)

    def test_needs_linear_shape(self):
        sub = whole(path_graph(3))
        disc = make_uniform_discretization(1.0, 10)
        traj = implicit_euler_march(sub, nlmod.power_absorption(2.0),
                                    np.ones(3), disc)
        with pytest.raises(SolverError, match="linear"):
            decay_check(traj, 2)


class TestMildSolve:
    def test_finite_host_refines_eps_only(self):
        g = path_graph(4)
        traj, trace = mild_solve(g, nlmod.power_absorption(2.0), np.ones(4),
                                 None, 1.0, eps_target=1e-6, tol=1e-4)
        kinds = [e["kind"] for e in trace]
        assert kinds[0] == "initial"
        assert set(kinds[1:]) == {"eps"}
        assert trace[-1]["gap"] < 1e-4
        # limit agrees with a direct fine march
        sub = whole(g)
        fine = implicit_euler_march(sub, nlmod.power_absorption(2.0), np.ones(4),
                                    discretization_for_eps(1.0, 1e-5))
        gap = np.max(np.abs(traj.states[-1] - fine.states[-1]))
        assert gap < 5e-4

    def test_linear_limit_matches_matrix_exponential(self):
        g = path_graph(5)
        rng = np.random.default_rng(5)
        u0 = rng.uniform(0, 1, 5)
        traj, _ = mild_solve(g, nlmod.linear(), u0, None, 1.0,
                             eps_target=1e-6, tol=1e-4)
        ref = semigroup_linear_oracle(whole(g), u0, 1.0).values
        assert np.max(np.abs(traj.states[-1] - ref)) < 1e-3

    def test_infinite_host_alternates_and_needs_root(self):
        z = lattice(1)
        u0 = GridFunction.indicator(z, [0], 0)
        with pytest.raises(DiscretizationError, match="root"):
            mild_solve(z, nlmod.power_absorption(2.0), u0, None, 0.5,
                       eps_target=1e-5, tol=1e-3)
        traj, trace = mild_solve(z, nlmod.power_absorption(2.0), u0, None, 0.5,
                                 eps_target=1e-5, tol=1e-3, root=0)
        kinds = {e["kind"] for e in trace}
        assert "eps" in kinds and "depth" in kinds
        assert traj.value_at(0.5).values[0] > 0

    def test_eps_budget_exhaustion(self):
        g = path_graph(3)
        with pytest.raises(DiscretizationError, match="eps budget"):
            mild_solve(g, nlmod.linear(), np.ones(3), None, 1.0,
                       eps_target=0.25, tol=1e-15)

    def test_depth_budget_exhaustion(self):
        z = lattice(1)
        with pytest.raises(DiscretizationError, match="depth budget"):
            mild_solve(z, nlmod.linear(), lambda x: 1.0, None, 0.5,
                       eps_target=1e-5, tol=5e-3, root=0, depth_max=3)

    def test_f2_eps_target_must_clear_lipschitz_bar(self):
        g = path_graph(2)
        nl = nlmod.lipschitz("damp", lambda s: -2.0 * s, L=2.0)
        with pytest.raises(DiscretizationError, match="1/L"):
            mild_solve(g, nl, np.ones(2), None, 1.0, eps_target=0.5, tol=1e-4)
        # below the bar the initial eps is capped and the solve runs
        traj, _ = mild_solve(g, nl, np.ones(2), None, 1.0,
                             eps_target=1e-5, tol=1e-3)
        assert traj.disc.eps < 0.5

    def test_rejects_bad_horizon_and_target(self):
        g = path_graph(2)
        with pytest.raises(DiscretizationError, match="horizon"):
            mild_solve(g, nlmod.linear(), np.ones(2), None, 0.0, eps_target=1e-3)
        with pytest.raises(DiscretizationError, match="eps_target"):
            mild_solve(g, nlmod.linear(), np.ones(2), None, 1.0, eps_target=0.0)
