import numpy as np
import pytest

from conftest import default_config
from stochvi.core import (
    ProblemInstance,
    RngStreamKey,
    derive_stream,
    validate,
)
from stochvi.errors import (
    BlockMismatch,
    CoordinationMismatch,
    InvalidSchedule,
    InvalidStepsize,
)
from stochvi.problems import gen_strongly_monotone
from stochvi.projection import Box, WholeSpace
from stochvi.sampling import AgentSchedule, SampleSchedule


class TestStreams:
    def test_same_key_reproduces_draws(self):
        key = RngStreamKey(42, replication=3, iteration=17, stage=2, block=1)
        a = derive_stream(key).standard_normal(100)
        b = derive_stream(key).standard_normal(100)
        assert np.array_equal(a, b)

    def test_stage_changes_stream(self):
        k1 = RngStreamKey(42, replication=3, iteration=17, stage=1)
        k2 = RngStreamKey(42, replication=3, iteration=17, stage=2)
        assert derive_stream(k1).standard_normal() != derive_stream(k2).standard_normal()

    def test_each_field_changes_stream(self):
        base = RngStreamKey(42, 1, 2, 1, 3, 4)
        first = derive_stream(base).standard_normal()
        variants = [
            RngStreamKey(43, 1, 2, 1, 3, 4),
            RngStreamKey(42, 2, 2, 1, 3, 4),
            RngStreamKey(42, 1, 3, 1, 3, 4),
            RngStreamKey(42, 1, 2, 2, 3, 4),
            RngStreamKey(42, 1, 2, 1, 4, 4),
            RngStreamKey(42, 1, 2, 1, 3, 5),
        ]
        for key in variants:
            assert derive_stream(key).standard_normal() != first

    def test_replications_uncorrelated(self):
        n = 10_000
        a = np.array([derive_stream(RngStreamKey(7, replication=r)).standard_normal()
                      for r in range(n)])
        b = np.array([derive_stream(RngStreamKey(7, replication=r + n)).standard_normal()
                      for r in range(n)])
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) <= 0.05

    def test_invalid_stage(self):
        with pytest.raises(ValueError):
            RngStreamKey(0, stage=3)


class TestProblemInstance:
    def test_block_partition_enforced(self):
        with pytest.raises(BlockMismatch):
            gen_strongly_monotone(5, seed=0, noise_scale=0.0).with_blocks([2, 2])

    def test_known_solution_must_be_feasible(self):
        box = Box(np.zeros(3), np.ones(3))
        with pytest.raises(ValueError, match="outside the feasible set"):
            gen_strongly_monotone(3, seed=0, noise_scale=0.0, feasible=box,
                                  center=np.array([2.0, 0.5, 0.5]))

    def test_fixed_point_test_rejects_non_solution(self):
        good = gen_strongly_monotone(3, seed=0, noise_scale=0.0)
        with pytest.raises(ValueError, match="fixed-point"):
            ProblemInstance(
                dimension=3,
                oracle=good.oracle,
                mean_operator=good.mean_operator,
                lipschitz_L=good.lipschitz_L,
                feasible_set=WholeSpace(3),
                known_solutions=(good.center + 1.0,),
            )

    def test_with_blocks_splits_feasible_set(self):
        p = gen_strongly_monotone(6, seed=1, noise_scale=0.0,
                                  feasible=Box(-5 * np.ones(6), 5 * np.ones(6)),
                                  center=np.zeros(6))
        p3 = p.with_blocks([2, 2, 2])
        assert p3.n_blocks == 3
        x = np.arange(6.0) * 3 - 8
        np.testing.assert_array_equal(p3.feasible_set.project(x),
                                      p.feasible_set.project(x))


class TestValidate:
    def test_stepsize_below_cap_passes(self, quiet_problem):
        report = validate(quiet_problem, default_config(stepsize=0.40))
        assert report.passed  # 0.40 < 1/sqrt(6) = 0.40825 at L = 1

    def test_stepsize_at_cap_rejected(self, quiet_problem):
        with pytest.raises(InvalidStepsize):
            validate(quiet_problem, default_config(stepsize=0.41))

    def test_zero_stepsize_rejected(self, quiet_problem):
        with pytest.raises(InvalidStepsize):
            validate(quiet_problem, default_config(stepsize=np.array([0.0, 0.1])))

    def test_varying_stepsize_bounds(self, quiet_problem):
        cfg = default_config(stepsize=np.array([0.1, 0.2, 0.3]))
        assert cfg.stepsize_at(0) == 0.1
        assert cfg.stepsize_at(99) == 0.3  # extended by the last value
        assert validate(quiet_problem, cfg).passed
        with pytest.raises(InvalidStepsize):
            validate(quiet_problem, default_config(stepsize=np.array([0.1, 0.45])))

    def test_invalid_schedule_a0_b0(self):
        with pytest.raises(InvalidSchedule):
            AgentSchedule(theta=1.0, mu=3.0, a=0.0, b=0.0)

    def test_schedule_agent_count_must_match_blocks(self, quiet_problem):
        p3 = quiet_problem.with_blocks([2, 2, 1])
        cfg = default_config(schedule=SampleSchedule.uniform(1, 3, 0, 1, m=2))
        with pytest.raises(InvalidSchedule):
            validate(p3, cfg)

    def test_centralized_needs_identical_agents(self, quiet_problem):
        p3 = quiet_problem.with_blocks([2, 2, 1])
        agents = (AgentSchedule(1, 3, 0, 1), AgentSchedule(2, 3, 0, 1),
                  AgentSchedule(1, 3, 0, 1))
        cfg = default_config(schedule=SampleSchedule(agents))
        with pytest.raises(CoordinationMismatch):
            validate(p3, cfg)
        assert validate(p3, default_config(
            schedule=SampleSchedule(agents), coordination="distributed")).passed

    def test_validate_is_idempotent(self, quiet_problem):
        cfg = default_config()
        r1 = validate(quiet_problem, cfg)
        r2 = validate(quiet_problem, cfg)
        assert str(r1) == str(r2)
