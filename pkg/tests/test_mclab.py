"""Monte Carlo lab: stream discipline, occupancy runs, empirical entropy
concentration, collision curves, recharge sampling, and the two codec-side
experiments."""

import numpy as np
import pytest

import sys

from ehrelay import (
    ArrivalModel,
    BatterySpec,
    BinaryChannel,
    BudgetError,
    CodecConfig,
    JointPmf,
    Pmf,
    RunConfig,
    StatePolicy,
    ValidationError,
    analyze_chain,
    collision_curve,
    collision_experiment,
    empirical_aep,
    markov_entropy_rate,
    pair_chain,
    receiver_smoke_trial,
    relay_codec_trial,
    sample_path,
    simulate_states,
    substream,
    z_empirical,
    z_pmf,
    ZNoise,
)
from conftest import (
    WORKED_PAIR_ENTROPY,
    WORKED_TABLES,
    worked_spec,
)

# sparse-pulse chain whose level sequence reveals every emission: charging is
# sure, the source always fires, and the relay spends only when full
REVEALING_TABLES = [
    np.array([[0.0, 0.0], [1.0, 0.0]]),
    np.array([[0.0, 0.0], [1.0, 0.0]]),
    np.array([[0.0, 0.0], [0.7, 0.3]]),
]
REVEALING_RATE = 0.677916076331302


def worked_chain(ch2=None):
    spec = worked_spec()
    policy = StatePolicy.joint_policy(spec, WORKED_TABLES)
    arrival = ArrivalModel.deterministic()
    analysis = analyze_chain(spec, policy, arrival)
    return pair_chain(spec, policy, arrival, analysis.pi)


def revealing_chain():
    spec = worked_spec()
    policy = StatePolicy.joint_policy(spec, REVEALING_TABLES)
    arrival = ArrivalModel.deterministic()
    analysis = analyze_chain(spec, policy, arrival)
    return pair_chain(spec, policy, arrival, analysis.pi)


class TestSubstream:
    def test_reproducible(self):
        a = substream(7, "alpha", 0).integers(0, 2**32, size=8)
        b = substream(7, "alpha", 0).integers(0, 2**32, size=8)
        assert np.array_equal(a, b)

    def test_index_and_label_decorrelate(self):
        a = substream(7, "alpha", 0).integers(0, 2**32, size=8)
        c = substream(7, "alpha", 1).integers(0, 2**32, size=8)
        d = substream(7, "beta", 0).integers(0, 2**32, size=8)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)

    def test_wide_seeds_accepted(self):
        gen = substream(2**70 + 5, "alpha", 0)
        assert isinstance(gen, np.random.Generator)


class TestRunConfig:
    def test_step_floor(self):
        with pytest.raises(ValidationError):
            RunConfig(seed=0, n=0)

    def test_step_cap(self):
        with pytest.raises(BudgetError):
            RunConfig(seed=0, n=10**7 + 1)

    def test_trial_floor(self):
        with pytest.raises(ValidationError):
            RunConfig(seed=0, n=10, trials=0)


class TestSimulateStates:
    CHARGE = np.array([[0.0, 0.0], [1.0, 0.0]])

    def test_absorbing_ramp(self):
        spec = worked_spec()
        policy = StatePolicy.joint_policy(spec, [self.CHARGE] * 3)
        occ = simulate_states(spec, policy, ArrivalModel.deterministic(),
                              RunConfig(seed=1, n=50), initial_state=0)
        assert occ.frequencies[2] == pytest.approx(48 / 50, abs=0)
        assert np.allclose(occ.stationary, [0.0, 0.0, 1.0], atol=1e-12)

    def test_single_step_is_an_indicator(self):
        spec = worked_spec()
        policy = StatePolicy.joint_policy(spec, [self.CHARGE] * 3)
        occ = simulate_states(spec, policy, ArrivalModel.deterministic(),
                              RunConfig(seed=1, n=1), initial_state=1)
        assert np.array_equal(occ.frequencies, [0.0, 1.0, 0.0])

    def test_periodic_chain_reports_no_stationary_law(self):
        spec = worked_spec()
        full_spend = np.array([[0.0, 0.0], [0.0, 1.0]])
        policy = StatePolicy.joint_policy(
            spec, [self.CHARGE, self.CHARGE, full_spend])
        occ = simulate_states(spec, policy, ArrivalModel.deterministic(),
                              RunConfig(seed=1, n=100), initial_state=0)
        assert occ.stationary is None
        assert occ.max_deviation is None
        # the two-cycle still splits occupancy evenly across its states
        assert occ.frequencies[1] == pytest.approx(0.5, abs=0.05)

    def test_long_run_tracks_the_stationary_law(self):
        spec = worked_spec()
        policy = StatePolicy.joint_policy(spec, WORKED_TABLES)
        occ = simulate_states(spec, policy, ArrivalModel.deterministic(),
                              RunConfig(seed=3, n=100000))
        assert occ.max_deviation <= 1e-2

    def test_initial_state_bounds(self):
        spec = worked_spec()
        policy = StatePolicy.joint_policy(spec, [self.CHARGE] * 3)
        with pytest.raises(ValidationError):
            simulate_states(spec, policy, ArrivalModel.deterministic(),
                            RunConfig(seed=1, n=10), initial_state=7)


class TestSamplePath:
    def test_follows_a_deterministic_kernel(self):
        kernel = np.array([[0.0, 1.0], [1.0, 0.0]])
        path = sample_path(kernel, 0, 6, substream(0, "path", 0))
        assert np.array_equal(path, [0, 1, 0, 1, 0, 1])

    def test_rejects_bad_start(self):
        kernel = np.eye(2)
        with pytest.raises(ValidationError):
            sample_path(kernel, 5, 4, substream(0, "path", 0))


class TestEmpiricalAep:
    def test_joint_dominates_marginal(self):
        chain = worked_chain()
        res = empirical_aep(chain, BinaryChannel(0.9, 0.9),
                            RunConfig(seed=5, n=2000, trials=4))
        assert np.all(res.joint_bits >= res.marginal_bits - 1e-12)

    def test_noiseless_channel_adds_nothing(self):
        chain = worked_chain()
        cfg = RunConfig(seed=5, n=2000, trials=4)
        alone = empirical_aep(chain, None, cfg)
        piped = empirical_aep(chain, BinaryChannel(1.0, 1.0), cfg)
        assert np.array_equal(alone.marginal_bits, piped.joint_bits)

    def test_deterministic_chain_has_zero_description_length(self):
        spec = worked_spec()
        charge = np.array([[0.0, 0.0], [1.0, 0.0]])
        policy = StatePolicy.joint_policy(spec, [charge] * 3)
        arrival = ArrivalModel.deterministic()
        analysis = analyze_chain(spec, policy, arrival)
        chain = pair_chain(spec, policy, arrival, analysis.pi)
        res = empirical_aep(chain, BinaryChannel(1.0, 1.0),
                            RunConfig(seed=2, n=500, trials=3))
        assert np.all(res.marginal_bits == 0.0)
        assert np.all(res.joint_bits == 0.0)

    def test_revealing_chain_concentrates_on_the_formula(self):
        chain = revealing_chain()
        assert markov_entropy_rate(chain) == pytest.approx(
            REVEALING_RATE, abs=1e-12)
        res = empirical_aep(chain, None, RunConfig(seed=5, n=10000, trials=6))
        assert res.marginal_mean == pytest.approx(REVEALING_RATE, abs=2e-2)

    def test_formula_upper_bounds_the_worked_chain(self):
        chain = worked_chain()
        res = empirical_aep(chain, None, RunConfig(seed=5, n=5000, trials=6))
        assert res.marginal_mean <= WORKED_PAIR_ENTROPY + 0.05
        assert markov_entropy_rate(chain) == pytest.approx(
            WORKED_PAIR_ENTROPY, abs=1e-12)

    def test_spread_shrinks_with_length(self):
        chain = worked_chain()
        short = empirical_aep(chain, None, RunConfig(seed=8, n=500, trials=30))
        long = empirical_aep(chain, None, RunConfig(seed=8, n=5000, trials=30))
        assert long.marginal_std < short.marginal_std


class TestCollision:
    JOINT = JointPmf(np.array([[0.4, 0.1], [0.2, 0.3]]))

    def test_zero_rate_never_collides(self):
        res = collision_experiment(self.JOINT, 20, 0.0,
                                   RunConfig(seed=2, n=20, trials=200))
        assert res.fraction == 0.0

    def test_methods_agree(self):
        cfg = RunConfig(seed=4, n=12, trials=600)
        lo = collision_experiment(self.JOINT, 12, 0.3, cfg,
                                  method="materialize")
        hi = collision_experiment(self.JOINT, 12, 0.3, cfg,
                                  method="conditional")
        assert lo.method == "materialize" and hi.method == "conditional"
        assert lo.fraction == pytest.approx(hi.fraction, abs=0.08)

    def test_curve_is_monotone_by_construction(self):
        res = collision_curve(self.JOINT, 40, [0.0, 0.2, 0.4, 0.6, 0.8],
                              RunConfig(seed=2, n=40, trials=400))
        assert np.all(np.diff(res.fractions) >= 0.0)

    def test_materialize_respects_the_codebook_cap(self):
        cfg = RunConfig(seed=4, n=30, trials=50)
        with pytest.raises(BudgetError):
            collision_experiment(self.JOINT, 30, 1.0, cfg,
                                 method="materialize")
        fallback = collision_experiment(self.JOINT, 30, 1.0, cfg,
                                        method="auto")
        assert fallback.method == "conditional"

    def test_unknown_method(self):
        with pytest.raises(ValidationError):
            collision_experiment(self.JOINT, 10, 0.5,
                                 RunConfig(seed=1, n=10, trials=10),
                                 method="bogus")


class TestZEmpirical:
    def test_tracks_the_exact_law(self):
        res = z_empirical(2, 0.5, False, RunConfig(seed=9, n=100000))
        assert res.tv_distance <= 2e-2
        assert res.mean == pytest.approx(4.0, rel=0.03)
        assert res.samples == 100000

    def test_sure_arrivals_pin_the_recharge_time(self):
        res = z_empirical(3, 1.0, False, RunConfig(seed=9, n=2000))
        seen = res.values[res.counts > 0]
        assert np.array_equal(seen, [3])
        assert res.mean == 3.0

    def test_overlap_reaches_below_the_cost(self):
        res = z_empirical(2, 0.6, True, RunConfig(seed=9, n=50000))
        assert res.values[res.counts > 0].min() == 1

    def test_reference_is_the_exact_pmf(self):
        res = z_empirical(2, 0.5, False, RunConfig(seed=3, n=500))
        want = z_pmf(ZNoise(cost=2, p1=0.5))
        assert np.array_equal(
            res.reference.values[:3], want.values[:3])


class TestRelayCodec:
    def policy(self):
        return StatePolicy.joint_policy(worked_spec(), WORKED_TABLES)

    def test_plan_arithmetic(self):
        codec = CodecConfig(spec=worked_spec(), policy=self.policy(),
                            rate_bits=(0.5, 0.25, 1.0), slack=0.1)
        lengths, bits = codec.plan(400, np.array([0.2, 0.4, 0.4]))
        assert np.array_equal(lengths, [40, 120, 120])
        assert np.array_equal(bits, [20, 30, 120])

    def test_single_word_books_never_collide(self):
        codec = CodecConfig(spec=worked_spec(), policy=self.policy(),
                            rate_bits=(0.0, 0.0, 0.0), slack=0.1)
        res = relay_codec_trial(codec, 2, RunConfig(seed=3, n=300, trials=50))
        assert np.all(res.p_ambiguous == 0.0)
        assert res.total_bits == 0

    def test_error_events_nest(self):
        codec = CodecConfig(spec=worked_spec(), policy=self.policy(),
                            rate_bits=(0.4, 0.4, 0.4), slack=0.1)
        res = relay_codec_trial(codec, 2, RunConfig(seed=3, n=200, trials=80))
        for block in range(2):
            assert res.p_either[block] <= (res.p_incomplete[block]
                                           + res.p_ambiguous[block] + 1e-12)
            assert res.p_either[block] >= max(res.p_incomplete[block],
                                              res.p_ambiguous[block])

    def test_validation(self):
        spec = worked_spec()
        policy = self.policy()
        with pytest.raises(ValidationError):
            CodecConfig(spec=spec, policy=policy, rate_bits=(0.5, 0.5),
                        slack=0.1)
        with pytest.raises(ValidationError):
            CodecConfig(spec=spec, policy=policy,
                        rate_bits=(0.5, 0.5, -0.1), slack=0.1)
        with pytest.raises(ValidationError):
            CodecConfig(spec=spec, policy=policy,
                        rate_bits=(0.5, 0.5, 0.5), slack=1.5)
        with pytest.raises(ValidationError):
            CodecConfig(spec=spec, policy=policy,
                        rate_bits=(0.5, 0.5, 0.5), slack=0.1, pad=-1)
        parts = StatePolicy.product_policy(
            spec, [0.5, 0.5],
            [np.array([1.0, 0.0])] * 2 + [np.array([0.5, 0.5])])
        with pytest.raises(ValidationError):
            CodecConfig(spec=spec, policy=parts, rate_bits=(0.0, 0.0, 0.0),
                        slack=0.1)
        good = CodecConfig(spec=spec, policy=policy,
                           rate_bits=(0.0, 0.0, 0.0), slack=0.1)
        with pytest.raises(ValidationError):
            relay_codec_trial(good, 0, RunConfig(seed=1, n=100, trials=5))


class TestReceiverSmoke:
    def test_clean_setup_decodes(self):
        spec = worked_spec()
        policy = StatePolicy.joint_policy(spec, WORKED_TABLES)
        arrival = ArrivalModel.deterministic()
        analysis = analyze_chain(spec, policy, arrival)
        chain = pair_chain(spec, policy, arrival, analysis.pi)
        res = receiver_smoke_trial(chain, BinaryChannel(0.9, 0.9), 3,
                                   RunConfig(seed=6, n=400, trials=60))
        assert res.message_bits == 3
        assert res.p_error <= 0.1

    def test_message_budget(self):
        chain = worked_chain()
        with pytest.raises(BudgetError):
            receiver_smoke_trial(chain, BinaryChannel(0.9, 0.9), 13,
                                 RunConfig(seed=6, n=50, trials=5))
