import math
import pickle

import numpy as np
import pytest

from semiquantum.errors import ConfigurationError, NumericalFailureError
from semiquantum.integrator import (
    IntegrationStatus,
    IntegratorSettings,
    integrate,
    integrate_augmented,
    integrate_with_events,
)
from semiquantum.linear_oracle import (
    QuantumTriple,
    evolve_classical,
    evolve_critical,
    evolve_linear,
)
from semiquantum.model import ModelParams, SystemState, effective_energy, invariant_I

TIGHT = IntegratorSettings(abs_tol=1e-12, rel_tol=1e-12)


def oracle_error(traj, q0, eps, delta, x0, p0, omega, critical=False):
    worst = 0.0
    for t, y in zip(traj.times, traj.states):
        if critical:
            q = evolve_critical(q0, eps, t)
        else:
            q = evolve_linear(q0, eps, delta, t)
        xc, pc = evolve_classical(x0, p0, omega, t)
        ref = np.array([q.n1, q.om, q.op, xc, pc])
        worst = max(worst, float(np.max(np.abs(y - ref))))
    return worst


class TestSettings:
    @pytest.mark.parametrize("kwargs", [
        dict(abs_tol=0.0),
        dict(rel_tol=-1e-9),
        dict(h_max=0.0),
        dict(divergence_norm=-1.0),
        dict(max_steps=0),
    ])
    def test_invalid_settings_rejected(self, kwargs):
        with pytest.raises(ConfigurationError):
            integrate(
                SystemState(2, 0, 0, 1, 0),
                ModelParams(eps=1.0, gamma=0, delta=1.0, alpha=0.0, omega=1.0),
                1.0,
                IntegratorSettings(**kwargs),
            )

    def test_bad_t_end(self):
        with pytest.raises(ConfigurationError):
            integrate(
                SystemState(2, 0, 0, 1, 0),
                ModelParams(eps=1.0, gamma=0, delta=1.0, alpha=0.0, omega=1.0),
                -5.0,
            )


class TestOracleAgreement:
    def test_stable_linear_limit(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        s0 = SystemState(n1=2, om=0, op=0, x=1, p=-2.54950976)
        traj = integrate(s0, p, 100.0, TIGHT, sample_interval=0.5)
        assert traj.status is IntegrationStatus.COMPLETED
        err = oracle_error(traj, QuantumTriple(2, 0, 0), 1.05, 1.0, 1.0, -2.54950976, 1.0)
        assert err <= 1e-8

    def test_critical_linear_limit(self):
        p = ModelParams(eps=1.0, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        s0 = SystemState(n1=2, om=0.4, op=-0.2, x=0.5, p=0.1)
        traj = integrate(s0, p, 10.0, TIGHT, sample_interval=0.1)
        q0 = QuantumTriple(2, 0.4, -0.2)
        for t, y in zip(traj.times, traj.states):
            q = evolve_critical(q0, 1.0, t)
            ref = np.array([q.n1, q.om, q.op])
            rel = np.max(np.abs(y[:3] - ref) / np.maximum(1.0, np.abs(ref)))
            assert rel <= 1e-8

    def test_divergence_detected(self):
        # strong-coupling regime: unbounded growth
        p = ModelParams(eps=2.0, gamma=0.0, delta=1.0, alpha=1.1, omega=1.0)
        s0 = SystemState(n1=2, om=0, op=0, x=1, p=-2.54950976)
        traj = integrate(s0, p, 500.0, IntegratorSettings(abs_tol=1e-10, rel_tol=1e-10),
                         sample_interval=0.5)
        assert traj.status is IntegrationStatus.DIVERGED
        assert traj.t_div is not None and traj.t_div < 500.0
        # the last recorded sample is already past the divergence guard
        assert np.max(np.abs(traj.states[-1])) >= 1e8

    def test_order_scaling(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        s0 = SystemState(n1=2, om=0.3, op=0.1, x=1, p=0)
        q0 = QuantumTriple(2, 0.3, 0.1)
        errs = []
        for tol in (1e-6, 1e-10):
            traj = integrate(s0, p, 50.0, IntegratorSettings(abs_tol=tol, rel_tol=tol),
                             sample_interval=0.5)
            errs.append(oracle_error(traj, q0, 1.05, 1.0, 1.0, 0.0, 1.0))
        assert errs[0] / errs[1] >= 1e2

    def test_step_budget(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.015, omega=1.0)
        s0 = SystemState(2, 0, 0, 1, 0)
        traj = integrate(s0, p, 100.0, IntegratorSettings(max_steps=50), sample_interval=1.0)
        assert traj.status is IntegrationStatus.STEP_BUDGET_EXHAUSTED


class TestInvariantDrift:
    def test_long_run_conservation(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.015, omega=1.0)
        s0 = SystemState(n1=2, om=0, op=0, x=1, p=-2.54950976)
        traj = integrate(s0, p, 1000.0, sample_interval=2.0)
        e0 = effective_energy(s0, p)
        i0 = invariant_I(s0)
        for i in range(len(traj)):
            s = traj.state_at(i)
            assert abs(effective_energy(s, p) - e0) <= 1e-10 * (1 + abs(e0))
            assert abs(invariant_I(s) - i0) <= 1e-10 * (1 + abs(i0))


class TestDeterminism:
    def test_identical_runs(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.015, omega=1.0)
        s0 = SystemState(2, 0, 0, 1, -2.54950976)
        a = integrate(s0, p, 50.0, TIGHT, sample_interval=0.5)
        b = integrate(s0, p, 50.0, TIGHT, sample_interval=0.5)
        assert pickle.dumps((a.times, a.states)) == pickle.dumps((b.times, b.states))

    def test_sample_times_are_grid_multiples(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        traj = integrate(SystemState(2, 0, 0, 1, 0), p, 10.0, TIGHT, sample_interval=0.25)
        assert np.all(np.diff(traj.times) > 0)
        interior = traj.times[1:-1]
        assert np.allclose(interior / 0.25, np.round(interior / 0.25), atol=1e-9)


class TestEvents:
    def setup_method(self):
        # classical-only motion: quantum triple inert
        self.p = ModelParams(eps=1.0, gamma=0.0, delta=0.0, alpha=0.0, omega=1.0)

    def test_crossing_times_cosine_start(self):
        s0 = SystemState(n1=1, om=0, op=0, x=1, p=0)
        _, events = integrate_with_events(s0, self.p, 20.0, TIGHT)
        expected = [math.pi / 2 + k * math.pi for k in range(6)]
        assert len(events) == len(expected)
        for ev, t_ref in zip(events, expected):
            assert abs(ev.t_cross - t_ref) <= 1e-10
            assert abs(ev.state.x) <= 1e-12 * (1 + 1)
        assert [ev.direction for ev in events] == [-1, 1, -1, 1, -1, 1]

    def test_event_count_exact(self):
        s0 = SystemState(n1=1, om=0, op=0, x=0, p=1)
        t_end = 100.0
        _, events = integrate_with_events(s0, self.p, t_end, TIGHT)
        assert len(events) == math.floor(t_end * self.p.omega / math.pi)

    def test_start_on_plane_not_reported(self):
        s0 = SystemState(n1=1, om=0, op=0, x=0, p=1)
        _, events = integrate_with_events(s0, self.p, 2.0, TIGHT)
        assert all(ev.t_cross > 1e-6 for ev in events)

    def test_direction_filter_subset(self):
        s0 = SystemState(n1=1, om=0, op=0, x=1, p=0)
        _, both = integrate_with_events(s0, self.p, 30.0, TIGHT, direction_filter="both")
        _, pos = integrate_with_events(s0, self.p, 30.0, TIGHT, direction_filter=1)
        ref = [ev.t_cross for ev in both if ev.direction == 1]
        assert [ev.t_cross for ev in pos] == ref

    def test_bad_filter(self):
        with pytest.raises(ConfigurationError):
            integrate_with_events(SystemState(1, 0, 0, 1, 0), self.p, 1.0,
                                  direction_filter="up")


class TestAugmented:
    def test_stable_linear_rates_vanish(self):
        p = ModelParams(eps=1.3, gamma=0.0, delta=0.7, alpha=0.0, omega=1.0)
        s0 = SystemState(2, 0.2, 0.1, 1, 0)
        log = integrate_augmented(
            s0, [np.array([1.0, 0, 0, 0, 0])], p, 2500.0,
            IntegratorSettings(abs_tol=1e-10, rel_tol=1e-10), renorm_interval=5.0,
        )
        assert log.status is IntegrationStatus.COMPLETED
        late = log.times > 2000.0
        rate = log.log_norms[late, 0].sum() / (log.times[late][-1] - 2000.0)
        assert abs(rate) <= 1e-3

    def test_unstable_linear_growth_rate(self):
        p = ModelParams(eps=1.0, gamma=0.0, delta=2.0, alpha=0.0, omega=1.0)
        s0 = SystemState(2, 0, 0, 1, 0)
        log = integrate_augmented(
            s0, [np.ones(5)], p, 6.0,
            IntegratorSettings(abs_tol=1e-12, rel_tol=1e-12, divergence_norm=1e300),
            renorm_interval=0.05,
        )
        late = log.times > 2.0
        rate = log.log_norms[late, 0].sum() / (log.times[late][-1] - 2.0)
        assert rate == pytest.approx(2 * math.sqrt(3), rel=0.01)

    def test_flow_direction_has_zero_rate(self):
        from semiquantum.model import rhs

        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.015, omega=1.0)
        s0 = SystemState(2, 0, 0, 1, -2.54950976)
        v0 = rhs(s0.to_array(), p)
        log = integrate_augmented(
            s0, [v0], p, 2000.0,
            IntegratorSettings(abs_tol=1e-10, rel_tol=1e-10), renorm_interval=5.0,
        )
        rate = log.log_norms[:, 0].sum() / log.times[-1]
        assert abs(rate) <= 2e-3

    def test_orthonormal_after_renorm(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.015, omega=1.0)
        s0 = SystemState(2, 0, 0, 1, 0)
        vecs = [np.eye(5)[i] for i in range(3)]
        log = integrate_augmented(s0, vecs, p, 5.0, TIGHT, renorm_interval=1.0)
        g = log.final_tangents @ log.final_tangents.T
        assert np.allclose(g, np.eye(3), atol=1e-12)

    def test_observer_called(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        seen = []
        integrate_augmented(
            SystemState(2, 0, 0, 1, 0), [np.ones(5)], p, 3.0, TIGHT,
            renorm_interval=1.0, observer=lambda t, y, logs: seen.append(t),
        )
        assert seen == pytest.approx([1.0, 2.0, 3.0])

    def test_rejects_zero_tangent(self):
        p = ModelParams(eps=1.05, gamma=0.0, delta=1.0, alpha=0.0, omega=1.0)
        with pytest.raises(ConfigurationError):
            integrate_augmented(SystemState(2, 0, 0, 1, 0), [np.zeros(5)], p, 1.0)
