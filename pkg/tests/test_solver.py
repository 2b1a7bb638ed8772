import numpy as np
import pytest

from conftest import default_config
from reference_impls import korpelevich_reference
from stochvi.core import ProblemInstance, VarianceProfile
from stochvi.errors import CoordinationMismatch, MissingDiagnostics
from stochvi.problems import (
    AdditiveGaussianOracle,
    gen_constant_noise,
    gen_linear_svi,
    gen_negative_control,
    gen_strongly_monotone,
)
from stochvi.projection import Box, WholeSpace, project
from stochvi.sampling import AgentSchedule, SampleSchedule
from stochvi.solver import (
    ExtragradientState,
    fejer_audit,
    martingale_probe,
    run,
    step,
    step_cartesian,
)


def identity_problem(noise=0.0, n=1):
    T = lambda x: np.asarray(x, dtype=float)
    return ProblemInstance(
        dimension=n,
        oracle=AdditiveGaussianOracle(T, n, noise),
        mean_operator=T,
        lipschitz_L=1.0,
        feasible_set=WholeSpace(n),
        known_solutions=(np.zeros(n),),
        variance_profile=VarianceProfile("uniform", noise * np.sqrt(n)),
    )


class TestStep:
    def test_hand_recursion_identity_operator(self):
        # T(x) = x, x0 = 1, alpha = 0.2: z = 0.8, x1 = 1 - 0.2*0.8 = 0.84
        p = identity_problem()
        state = ExtragradientState(k=0, x=np.array([1.0]))
        state = step(state, p, default_config(stepsize=0.2))
        assert state.x[0] == pytest.approx(0.84, abs=1e-12)
        assert state.k == 1

    def test_fixed_point_stays(self, quiet_problem):
        state = ExtragradientState(k=0, x=quiet_problem.known_solutions[0].copy())
        state = step(state, quiet_problem, default_config())
        np.testing.assert_allclose(state.x, quiet_problem.known_solutions[0],
                                   atol=1e-14)

    def test_call_accounting_single_block(self):
        p = identity_problem()
        cfg = default_config(stepsize=0.2)
        state = ExtragradientState(k=0, x=np.array([1.0]))
        state = step(state, p, cfg)
        assert state.calls == 2 * cfg.schedule.size(0, 0)

    def test_distributed_call_accounting(self):
        # per-agent counts 4 and 8 at k = 0 give 2 * (4 + 8) = 24 calls
        p = gen_strongly_monotone(2, seed=0, noise_scale=0.5,
                                  center=np.zeros(2)).with_blocks([1, 1])
        agents = (AgentSchedule(theta=4 / 9, mu=3, a=1, b=-1),
                  AgentSchedule(theta=8 / 9, mu=3, a=1, b=-1))
        cfg = default_config(schedule=SampleSchedule(agents),
                             coordination="distributed", stepsize=0.2)
        assert cfg.schedule.size(0, 0) == 4 and cfg.schedule.size(1, 0) == 8
        state = ExtragradientState(k=0, x=np.ones(2))
        state = step_cartesian(state, p, cfg)
        assert state.calls == 24

    def test_step_rejects_distributed_multiblock(self, quiet_problem):
        p3 = quiet_problem.with_blocks([2, 2, 1])
        cfg = default_config(coordination="distributed")
        with pytest.raises(CoordinationMismatch):
            step(ExtragradientState(k=0, x=np.zeros(5)), p3, cfg)


class TestRun:
    def test_deterministic_repeat(self, monotone_problem):
        cfg = default_config(max_iterations=30)
        t1 = run(monotone_problem, cfg, replication=4, x0=np.ones(5))
        t2 = run(monotone_problem, cfg, replication=4, x0=np.ones(5))
        assert np.array_equal(t1.iterates, t2.iterates)
        assert np.array_equal(t1.r2, t2.r2)

    def test_replications_differ(self, monotone_problem):
        cfg = default_config(max_iterations=5)
        t1 = run(monotone_problem, cfg, replication=0, x0=np.ones(5))
        t2 = run(monotone_problem, cfg, replication=1, x0=np.ones(5))
        assert not np.array_equal(t1.iterates[1:], t2.iterates[1:])

    def test_zero_variance_residual_decreases_below_tolerance(self, quiet_problem):
        cfg = default_config(max_iterations=2000, diagnostics=False)
        trace = run(quiet_problem, cfg, x0=np.full(5, 2.0))
        assert np.all(np.diff(trace.r2) < 0)
        assert trace.r2[-1] < 1e-12

    def test_early_stop_at_residual_floor(self, quiet_problem):
        cfg = default_config(max_iterations=10_000, diagnostics=False)
        trace = run(quiet_problem, cfg, x0=np.full(5, 0.5))
        assert trace.stopped_early
        assert trace.n_steps < 10_000
        assert trace.r2[-1] <= cfg.residual_floor

    def test_iterates_stay_feasible(self):
        box = Box(np.zeros(3), np.ones(3))
        p = gen_strongly_monotone(3, seed=2, noise_scale=2.0, feasible=box,
                                  center=np.full(3, 0.5))
        cfg = default_config(max_iterations=60, stepsize=0.2 / p.lipschitz_L)
        trace = run(p, cfg, x0=np.full(3, 0.9))
        from stochvi.projection import set_distance

        dists = set_distance(p.feasible_set, trace.iterates)
        assert np.max(dists) <= 1e-10

    def test_oracle_accounting_identity(self, monotone_problem):
        cfg = default_config(max_iterations=25)
        trace = run(monotone_problem, cfg, x0=np.ones(5))
        expected = 2 * np.cumsum(trace.sizes.sum(axis=1))
        np.testing.assert_array_equal(trace.cum_calls[1:], expected)

    def test_linear_svi_stays_bounded(self):
        p = gen_linear_svi(4, seed=12, noise_scale=0.2)
        cfg = default_config(stepsize=0.25 / p.lipschitz_L, max_iterations=400,
                             diagnostics=False)
        trace = run(p, cfg, x0=np.full(4, 3.0))
        assert np.all(np.isfinite(trace.iterates))
        assert np.max(trace.dist2) <= 4.0 * trace.dist2[0] + 1.0

    def test_trace_csv_round_trip(self, tmp_path, monotone_problem):
        cfg = default_config(max_iterations=8)
        trace = run(monotone_problem, cfg, x0=np.ones(5))
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        data = np.genfromtxt(path, delimiter=",", names=True)
        assert len(data) == trace.n_steps + 1
        np.testing.assert_allclose(data["r2"], trace.r2)
        np.testing.assert_allclose(data["cum_calls"], trace.cum_calls)


class TestCartesianConsistency:
    def test_m1_step_equals_step_cartesian(self, monotone_problem):
        cfg = default_config()
        s1 = ExtragradientState(k=0, x=np.ones(5))
        s2 = ExtragradientState(k=0, x=np.ones(5))
        out1 = step(s1, monotone_problem, cfg)
        out2 = step_cartesian(s2, monotone_problem, cfg)
        assert np.array_equal(out1.x, out2.x)

    @pytest.mark.parametrize("feasible", ["whole", "box"])
    def test_centralized_blocks_match_monolithic_bitwise(self, feasible):
        if feasible == "box":
            fset = Box(-2 * np.ones(5), 2 * np.ones(5))
        else:
            fset = WholeSpace(5)
        p1 = gen_strongly_monotone(5, seed=7, noise_scale=1.0, feasible=fset,
                                   center=np.zeros(5))
        p3 = p1.with_blocks([2, 2, 1])
        cfg = default_config(max_iterations=40, master_seed=11)
        t1 = run(p1, cfg, x0=np.full(5, 1.5))
        t3 = run(p3, cfg, x0=np.full(5, 1.5))
        assert np.array_equal(t1.iterates, t3.iterates)
        assert np.array_equal(t1.cum_calls, t3.cum_calls)

    def test_distributed_differs_but_converges_similarly(self, monotone_problem):
        p3 = monotone_problem.with_blocks([2, 2, 1])
        cfg_c = default_config(max_iterations=50, master_seed=3)
        cfg_d = default_config(max_iterations=50, master_seed=3,
                               coordination="distributed")
        tc = run(p3, cfg_c, x0=np.ones(5))
        td = run(p3, cfg_d, x0=np.ones(5))
        assert not np.array_equal(tc.iterates, td.iterates)
        assert td.r2[-1] < td.r2[0]
        # distributed billing: three blocks each drawing the shared count
        assert td.cum_calls[-1] == 3 * tc.cum_calls[-1]


class TestDeterministicLimit:
    def test_matches_standalone_reference(self, quiet_problem):
        cfg = default_config(max_iterations=500, diagnostics=False,
                             residual_floor=0.0)
        x0 = np.full(5, 2.0)
        trace = run(quiet_problem, cfg, x0=x0)
        T = quiet_problem.mean_operator
        ref = korpelevich_reference(
            T, lambda v: project(quiet_problem.feasible_set, v), x0, 0.25, 500)
        gaps = np.linalg.norm(trace.iterates - ref, axis=1)
        assert np.max(gaps) <= 1e-12

    def test_matches_reference_with_projection(self):
        box = Box(np.full(3, 0.25), np.ones(3))
        p = gen_strongly_monotone(3, seed=9, noise_scale=0.0, feasible=box,
                                  center=np.full(3, 0.5))
        cfg = default_config(stepsize=0.2 / p.lipschitz_L, max_iterations=200,
                             diagnostics=False, residual_floor=0.0)
        x0 = np.array([0.3, 0.9, 1.0])
        trace = run(p, cfg, x0=x0)
        ref = korpelevich_reference(
            p.mean_operator, lambda v: project(box, v), x0,
            0.2 / p.lipschitz_L, 200)
        assert np.max(np.linalg.norm(trace.iterates - ref, axis=1)) <= 1e-12


class TestFejerAudit:
    def test_zero_variance_pure_decrease(self, quiet_problem):
        cfg = default_config(max_iterations=120)
        trace = run(quiet_problem, cfg, x0=np.full(5, 2.0))
        report = fejer_audit(trace, quiet_problem.known_solutions[0],
                             quiet_problem, cfg)
        assert report.passed
        assert report.max_violation <= 1e-10

    def test_stochastic_paths_respect_recursion(self, monotone_problem):
        cfg = default_config(max_iterations=100)
        for rep in range(5):
            trace = run(monotone_problem, cfg, replication=rep, x0=np.ones(5))
            report = fejer_audit(trace, monotone_problem.known_solutions[0],
                                 monotone_problem, cfg)
            assert report.passed, str(report)

    def test_untracked_solution_recomputed_from_errors(self, monotone_problem):
        cfg = default_config(max_iterations=40)
        trace = run(monotone_problem, cfg, x0=np.ones(5))
        # audit against a perturbed reference: inequality need not hold, but
        # the computation must run off the stored z and eps2 vectors
        other = monotone_problem.known_solutions[0] + 0.01
        report = fejer_audit(trace, other, monotone_problem, cfg)
        assert report.n_steps == 40

    def test_negative_control_violates(self):
        p = gen_negative_control(n=1)
        cfg = default_config(stepsize=0.2, max_iterations=30)
        trace = run(p, cfg, x0=np.array([1.0]))
        report = fejer_audit(trace, np.zeros(1), p, cfg)
        assert not report.passed

    def test_requires_diagnostics(self, quiet_problem):
        cfg = default_config(diagnostics=False, max_iterations=5)
        trace = run(quiet_problem, cfg, x0=np.ones(5))
        with pytest.raises(MissingDiagnostics):
            fejer_audit(trace, quiet_problem.known_solutions[0], quiet_problem, cfg)


class TestMartingaleProbe:
    def test_zero_variance_increments_vanish(self, quiet_problem):
        cfg = default_config(max_iterations=1)
        res = martingale_probe(quiet_problem, cfg, np.ones(5), replications=50)
        assert abs(res.mean) <= 1e-12

    def test_constant_noise_zero_mean(self):
        p = gen_constant_noise(sigma=1.0)
        cfg = default_config(stepsize=0.2, max_iterations=1)
        res = martingale_probe(p, cfg, np.array([0.7]), replications=10_000)
        assert res.passed, str(res)
