"""
Gadget tests: victim function, verification rounds and calibrations.
"""

import pytest

from ..exceptions import CalibrationError, MisuseError
from ..models.cpu import Serializer
from .base_test import DRAIN_LEN, HYBRID_ROUND, TRAIN_K, make_sim

FEW_TRIALS = {"calibration.trials": 20}


class TestVictimFunction:
    def test_in_bounds_call_overlaps_element_load(self):
        sim = make_sim()
        sim.gadget.prime()
        call = sim.gadget.victim_function(3)
        assert call.in_bounds and call.predicted_taken
        assert call.cost == 41
        assert not call.transient_executed

    def test_in_bounds_call_writes_register(self):
        sim = make_sim()
        sim.gadget.victim_function(0)
        assert "rax" in sim.cpu.architectural_state()

    def test_mispredicted_out_of_bounds_call_waits_for_window(self):
        sim = make_sim()
        sim.gadget.prime()
        before = sim.cpu.pmc_read().mispredicted_taken_conditional
        call = sim.gadget.victim_function(0x1000)
        assert call.predicted_taken and not call.in_bounds
        assert call.cost == 281
        assert call.transient_executed
        assert sim.cpu.pmc_read().mispredicted_taken_conditional == before + 1
        assert sim.cpu.speculation.pending_resolution == 0

    def test_correctly_predicted_out_of_bounds_call_is_cheap(self):
        sim = make_sim()
        call = sim.gadget.victim_function(0x1000)
        assert not call.predicted_taken
        assert not call.transient_executed
        # array_size comes from DRAM on the first call.
        assert call.cost == 280 + 1

    def test_transient_access_never_writes_registers(self):
        sim = make_sim()
        sim.gadget.prime()
        state = sim.cpu.architectural_state()
        sim.gadget.victim_function(0x1000)
        assert sim.cpu.architectural_state() == state

    def test_prime_saturates_the_counter(self):
        sim = make_sim()
        sim.gadget.prime()
        assert sim.cpu.counter(sim.gadget.branch_id) == 7


class TestVerifyRound:
    def test_drain_makes_the_access_reach_dram(self):
        sim = make_sim()
        result = sim.gadget.verify_round(TRAIN_K, DRAIN_LEN)
        assert result.success and result.executed
        assert result.probe_latency == 40
        assert result.mispredict_count_delta == 1

    def test_without_drain_the_backlog_closes_the_window(self):
        sim = make_sim()
        for _ in range(5):
            result = sim.gadget.verify_round(TRAIN_K, 0)
            assert not result.success and not result.executed
            assert result.probe_latency >= 180

    def test_no_training_means_no_speculation(self):
        sim = make_sim()
        result = sim.gadget.verify_round(0, DRAIN_LEN)
        assert not result.success
        assert result.mispredict_count_delta == 0

    @pytest.mark.parametrize("serializer,success", [
        (Serializer.FENCE.value, False),
        (Serializer.SYSCALL.value, True),
        (Serializer.NONE.value, False),
    ])
    def test_serializers(self, serializer, success):
        sim = make_sim()
        assert sim.gadget.verify_round(TRAIN_K, 0, serializer=serializer).success is success

    def test_unflushed_target_gives_false_positive(self):
        sim = make_sim()
        assert sim.gadget.verify_round(TRAIN_K, DRAIN_LEN).success
        stale = sim.gadget.verify_round(TRAIN_K, 0, flush_vul=False)
        assert stale.success
        assert not stale.executed

    def test_target_inside_array_is_misuse(self):
        sim = make_sim()
        with pytest.raises(MisuseError):
            sim.gadget.verify_round(TRAIN_K, DRAIN_LEN, vul_addr=sim.gadget.victim.base + 3)

    def test_target_sharing_array_size_line_is_misuse(self):
        sim = make_sim()
        with pytest.raises(MisuseError):
            sim.gadget.verify_round(TRAIN_K, DRAIN_LEN, vul_addr=sim.gadget.victim.array_size_location + 8)


class TestCalibration:
    @pytest.mark.parametrize("bits,expected", [(1, 1), (2, 2), (3, 4), (4, 8)])
    def test_min_training_is_half_the_counter_range(self, bits, expected):
        sim = make_sim({**FEW_TRIALS, "predictor.counter_bits": bits})
        assert sim.gadget.calibrate_min_training() == expected

    def test_drain_equals_backlog(self):
        sim = make_sim(FEW_TRIALS)
        assert sim.gadget.calibrate_drain_loop(TRAIN_K) == 280

    def test_drain_follows_backlog_setting(self):
        sim = make_sim({**FEW_TRIALS, "speculation.backlog_accrual": 150})
        assert sim.gadget.calibrate_drain_loop(TRAIN_K) == 150

    def test_no_backlog_needs_no_drain(self):
        sim = make_sim({**FEW_TRIALS, "speculation.backlog_accrual": 0})
        assert sim.gadget.calibrate_drain_loop(TRAIN_K) == 0

    def test_drain_bound_below_backlog_fails(self):
        sim = make_sim({**FEW_TRIALS, "calibration.max_drain": 100})
        with pytest.raises(CalibrationError) as error:
            sim.gadget.calibrate_drain_loop(TRAIN_K)
        assert error.value.details["backlog_accrual"] == 280

    def test_calibrate_is_idempotent_and_recorded(self):
        sim = make_sim(FEW_TRIALS)
        first = sim.gadget.calibrate()
        assert (first.min_training, first.drain_len, first.round_cost) == (TRAIN_K, DRAIN_LEN, HYBRID_ROUND)
        assert sim.calibration == first
        assert sim.gadget.calibrate() == first


class TestRoundCost:
    def test_default_round(self):
        sim = make_sim()
        assert sim.gadget.measure_round_cost(TRAIN_K, DRAIN_LEN) == HYBRID_ROUND
        assert 1200 <= HYBRID_ROUND <= 1400

    def test_padding_is_additive(self):
        sim = make_sim()
        for padding in (1, 50, 300):
            assert sim.gadget.measure_round_cost(TRAIN_K, DRAIN_LEN, padding) == HYBRID_ROUND + padding

    def test_hybrid_adds_the_direct_access(self):
        sim = make_sim()
        plain = sim.gadget.measure_round_cost(TRAIN_K, DRAIN_LEN, hybrid=False)
        assert HYBRID_ROUND == plain + 280 - 40

    def test_zero_latencies(self):
        sim = make_sim({
            "timing.cache_hit": 0,
            "timing.rowbuf_hit": 0,
            "timing.rowbuf_miss": 0,
            "timing.clflush_cost": 0,
            "timing.alu_op": 0,
        })
        assert sim.gadget.measure_round_cost(TRAIN_K, DRAIN_LEN) == 0

    def test_jitter_stays_in_bounds(self):
        sim = make_sim()
        costs = {sim.gadget.measure_round_cost(TRAIN_K, DRAIN_LEN, jitter=True) for _ in range(500)}
        assert min(costs) >= HYBRID_ROUND - 108
        assert max(costs) <= HYBRID_ROUND + 108
        assert len(costs) > 1
