"""Barrier domination, extinction, positivity and order propagation."""

import numpy as np
import pytest

import graphflow.nonlinearity as nlmod
from graphflow.barriers import (
    barrier_value,
    discrete_barrier,
    extinction_time,
    parabolic_compare,
    positivity_check,
    verify_barrier,
    verify_signed_barrier,
)
from graphflow.errors import DiscretizationError, GraphError, SolverError
from graphflow.evolution import implicit_euler_march, make_uniform_discretization
from graphflow.generators import cycle_graph, path_graph
from graphflow.graphs import dirichlet_subgraph

from oracles import barrier_curve_oracle

GOLDEN = 0.3819660112501051


def whole(graph):
    return dirichlet_subgraph(graph, graph.nodes)


class TestBarrierValue:
    def test_sublinear_closed_form(self):
        # q = 1/2, M = 1: theta(t) = (1 - t/2)^2 until it hits zero at t = 2
        assert barrier_value(0.5, 1.0, 0.0) == 1.0
        assert barrier_value(0.5, 1.0, 1.0) == pytest.approx(0.25, abs=1e-15)
        assert barrier_value(0.5, 1.0, 2.0) == 0.0
        assert barrier_value(0.5, 1.0, 3.0) == 0.0

    def test_superlinear_closed_form(self):
        # q = 2, M = 1: theta(t) = 1/(1 + t), never zero
        assert barrier_value(2.0, 1.0, 1.0) == pytest.approx(0.5, abs=1e-15)
        assert barrier_value(2.0, 1.0, 9.0) == pytest.approx(0.1, abs=1e-15)
        assert barrier_value(2.0, 1.0, 1e6) > 0

    def test_zero_start_stays_zero(self):
        assert barrier_value(0.5, 0.0, 5.0) == 0.0
        assert barrier_value(3.0, 0.0, 5.0) == 0.0

    def test_extinction_time(self):
        assert extinction_time(0.5, 1.0) == pytest.approx(2.0, abs=1e-15)
        assert extinction_time(0.5, 4.0) == pytest.approx(4.0, abs=1e-15)
        with pytest.raises(SolverError, match="0 < q < 1"):
            extinction_time(2.0, 1.0)

    def test_rejects_unit_and_bad_exponents(self):
        for q in (1.0, 0.0, -0.5):
            with pytest.raises(SolverError, match="exponent"):
                barrier_value(q, 1.0, 0.5)

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError, match="nonnegative"):
            barrier_value(0.5, -1.0, 0.5)
        with pytest.raises(ValueError, match="nonnegative"):
            barrier_value(0.5, 1.0, -0.5)


class TestDiscreteBarrier:
    def test_recursion_solved_to_machine_accuracy(self):
        disc = make_uniform_discretization(2.0, 37)
        bar = discrete_barrier(0.5, 1.0, disc)
        assert bar.theta[0] == 1.0
        assert bar.consistency_residuals().max() < 1e-14
        assert (np.diff(bar.theta) <= 0).all()

    def test_single_unit_step_golden_ratio(self):
        # theta_1 + sqrt(theta_1) = 1
        bar = discrete_barrier(0.5, 1.0, np.array([0.0, 1.0]))
        assert bar.theta[1] == pytest.approx(GOLDEN, abs=1e-14)

    def test_matches_bisection_oracle(self):
        times = np.linspace(0.0, 1.5, 12)
        for q in (0.5, 0.75, 2.0, 3.0):
            bar = discrete_barrier(q, 1.3, times)
            ref = barrier_curve_oracle(q, 1.3, times)
            np.testing.assert_allclose(bar.theta, ref, atol=1e-11)

    def test_converges_to_closed_form(self):
        gaps = []
        for n in (50, 100):
            bar = discrete_barrier(2.0, 1.0, np.linspace(0.0, 1.0, n + 1))
            gaps.append(abs(bar.theta[-1] - barrier_value(2.0, 1.0, 1.0)))
        assert 1.7 <= gaps[0] / gaps[1] <= 2.3
        assert gaps[1] < 3e-3

    def test_collapses_past_extinction(self):
        disc = make_uniform_discretization(3.0, 300)
        bar = discrete_barrier(0.5, 1.0, disc)
        k = int(np.searchsorted(bar.times, 2.5))
        assert bar.theta[k] < 1e-9
        assert bar.theta[-1] == 0.0

    def test_zero_start(self):
        bar = discrete_barrier(0.5, 0.0, np.array([0.0, 0.5, 1.0]))
        assert (bar.theta == 0.0).all()

    def test_rejects_bad_partition(self):
        with pytest.raises(DiscretizationError, match="increasing"):
            discrete_barrier(0.5, 1.0, np.array([0.0, 1.0, 1.0]))
        with pytest.raises(DiscretizationError, match="increasing"):
            discrete_barrier(0.5, 1.0, np.array([0.5, 1.0]))
        with pytest.raises(ValueError, match="nonnegative"):
            discrete_barrier(0.5, -2.0, np.array([0.0, 1.0]))


class TestVerifyBarrier:
    def _traj(self, q=0.5, n_steps=50, T=1.0, u0=None, graph=None):
        g = graph if graph is not None else path_graph(8)
        sub = whole(g)
        if u0 is None:
            rng = np.random.default_rng(2)
            u0 = rng.uniform(0.0, 1.0, sub.n)
        disc = make_uniform_discretization(T, n_steps)
        return implicit_euler_march(sub, nlmod.power_absorption(q), u0, disc)

    def test_domination_holds(self):
        traj = self._traj()
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        assert verify_barrier(traj, bar)

    def test_flat_start_saturates_the_barrier(self):
        # flat data on a killing-free graph evolves exactly like the scalar ODE
        traj = self._traj(u0=np.ones(8))
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        assert verify_barrier(traj, bar, tol=1e-10)
        np.testing.assert_allclose(traj.sup_values(), bar.theta, atol=1e-10)

    def test_tampered_trajectory_fails(self):
        traj = self._traj()
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        traj.states[-1] = traj.states[-1] + 1.0
        assert not verify_barrier(traj, bar)

    def test_rejects_signed_data(self):
        traj = self._traj(u0=np.linspace(-0.5, 0.5, 8))
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        with pytest.raises(SolverError, match="signed"):
            verify_barrier(traj, bar)

    def test_rejects_start_above_barrier(self):
        traj = self._traj(u0=np.full(8, 2.0))
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        with pytest.raises(SolverError, match="exceeds"):
            verify_barrier(traj, bar)

    def test_rejects_mismatched_partition(self):
        traj = self._traj(n_steps=50)
        bar = discrete_barrier(0.5, 1.0, make_uniform_discretization(1.0, 40))
        with pytest.raises(DiscretizationError, match="partitions differ"):
            verify_barrier(traj, bar)

    def test_rejects_wrong_shape_and_forcing(self):
        sub = whole(path_graph(4))
        disc = make_uniform_discretization(1.0, 10)
        lin = implicit_euler_march(sub, nlmod.linear(), np.ones(4), disc)
        bar = discrete_barrier(0.5, 1.0, disc)
        with pytest.raises(SolverError, match="power"):
            verify_barrier(lin, bar)
        forced = make_uniform_discretization(1.0, 10, forcing=lambda t, x: 0.1)
        traj = implicit_euler_march(sub, nlmod.power_absorption(0.5),
                                    np.ones(4), forced)
        with pytest.raises(SolverError, match="forcing"):
            verify_barrier(traj, bar)

    def test_rejects_mismatched_exponent(self):
        traj = self._traj(q=2.0, u0=np.ones(8))
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        with pytest.raises(SolverError, match="exponent"):
            verify_barrier(traj, bar)

    def test_extinction_marching_through_the_zero_time(self):
        traj = self._traj(n_steps=250, T=2.5, u0=np.ones(8))
        bar = discrete_barrier(0.5, 1.0, traj.disc)
        assert verify_barrier(traj, bar, tol=1e-9)
        assert traj.abs_sup_values()[-1] <= bar.theta[-1] + 1e-9
        assert bar.theta[-1] < 1e-12


class TestSignedBarrier:
    def _signed_traj(self):
        g = cycle_graph(10)
        sub = whole(g)
        rng = np.random.default_rng(9)
        u0 = rng.uniform(-1.0, 1.0, 10)
        disc = make_uniform_discretization(1.5, 60)
        traj = implicit_euler_march(sub, nlmod.power_absorption(0.5), u0, disc)
        return traj, float(np.max(np.abs(u0)))

    def test_two_sided_domination(self):
        traj, M = self._signed_traj()
        bar = discrete_barrier(0.5, M, traj.disc)
        assert verify_signed_barrier(traj, bar)

    def test_tampered_trajectory_fails(self):
        traj, M = self._signed_traj()
        bar = discrete_barrier(0.5, M, traj.disc)
        traj.states[-1] = traj.states[-1] + 2 * M
        assert not verify_signed_barrier(traj, bar)

    def test_rejects_start_above_barrier(self):
        traj, M = self._signed_traj()
        bar = discrete_barrier(0.5, M / 2.0, traj.disc)
        with pytest.raises(SolverError, match="exceeds"):
            verify_signed_barrier(traj, bar)


class TestPositivity:
    def _traj(self, q=2.0, graph=None, u0=None, forcing=None):
        g = graph if graph is not None else path_graph(10)
        sub = whole(g)
        if u0 is None:
            vals = np.zeros(sub.n)
            vals[0] = 1.0
            u0 = vals
        disc = make_uniform_discretization(1.0, 20, forcing=forcing)
        return implicit_euler_march(sub, nlmod.power_absorption(q), u0, disc)

    def test_indicator_spreads_strictly_positive(self):
        traj = self._traj()
        assert positivity_check(traj, floor=1e-30)
        # after one step every node already sits above the floor
        assert float(np.min(traj.states[1])) > 1e-30

    def test_tampered_state_fails(self):
        traj = self._traj()
        traj.states[3] = traj.states[3].copy()
        traj.states[3][5] = 0.0
        assert not positivity_check(traj)

    def test_needs_superlinear_power(self):
        traj = self._traj(q=0.5, u0=np.ones(10))
        with pytest.raises(SolverError, match="q > 1"):
            positivity_check(traj)

    def test_needs_connected_window(self):
        g = path_graph(4)
        sub = dirichlet_subgraph(g, [0, 1, 3])
        disc = make_uniform_discretization(1.0, 10)
        traj = implicit_euler_march(sub, nlmod.power_absorption(2.0),
                                    np.array([1.0, 0.0, 0.0]), disc)
        with pytest.raises(GraphError, match="connected"):
            positivity_check(traj)

    def test_needs_nonnegative_nonzero_start(self):
        traj = self._traj(u0=np.full(10, -0.1))
        with pytest.raises(SolverError, match="u0 >= 0"):
            positivity_check(traj)
        traj = self._traj(u0=np.zeros(10))
        with pytest.raises(SolverError, match="nonzero"):
            positivity_check(traj)

    def test_needs_zero_forcing(self):
        traj = self._traj(forcing=lambda t, x: 0.1)
        with pytest.raises(SolverError, match="forcing"):
            positivity_check(traj)


class TestParabolicCompare:
    def _pair(self, nl, u0, v0, forcing_u=None, forcing_v=None):
        sub = whole(path_graph(6))
        disc_u = make_uniform_discretization(1.0, 30, forcing=forcing_u)
        disc_v = make_uniform_discretization(1.0, 30, forcing=forcing_v)
        tu = implicit_euler_march(sub, nl, u0, disc_u)
        tv = implicit_euler_march(sub, nl, v0, disc_v)
        return tu, tv

    def test_ordered_data_stays_ordered(self):
        rng = np.random.default_rng(4)
        v0 = rng.uniform(0.0, 1.0, 6)
        u0 = v0 - rng.uniform(0.0, 0.5, 6)
        tu, tv = self._pair(nlmod.power_absorption(2.0), u0, v0)
        assert parabolic_compare(tu, tv)
        assert not parabolic_compare(tv, tu)

    def test_ordered_forcing_dominates(self):
        u0 = np.zeros(6)
        tu, tv = self._pair(nlmod.power_absorption(0.5), u0, u0.copy(),
                            forcing_u=lambda t, x: 0.1,
                            forcing_v=lambda t, x: 0.2)
        assert parabolic_compare(tu, tv)

    def test_lipschitz_class_preserves_order(self):
        nl = nlmod.lipschitz("shift", lambda s: np.arctan(s), L=1.0)
        rng = np.random.default_rng(6)
        v0 = rng.uniform(-1.0, 1.0, 6)
        tu, tv = self._pair(nl, v0 - 0.3, v0)
        assert parabolic_compare(tu, tv)

    def test_window_and_partition_must_match(self):
        sub = whole(path_graph(6))
        other = whole(path_graph(5))
        disc = make_uniform_discretization(1.0, 30)
        tu = implicit_euler_march(sub, nlmod.linear(), np.zeros(6), disc)
        tw = implicit_euler_march(other, nlmod.linear(), np.zeros(5), disc)
        with pytest.raises(GraphError, match="window"):
            parabolic_compare(tu, tw)
        coarse = make_uniform_discretization(1.0, 15)
        tc = implicit_euler_march(sub, nlmod.linear(), np.zeros(6), coarse)
        with pytest.raises(DiscretizationError, match="partition"):
            parabolic_compare(tu, tc)
