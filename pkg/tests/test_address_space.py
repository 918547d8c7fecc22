"""
Address-space tests: page mapping and the attacker-view guard.
"""

import pytest

from ..exceptions import AddressError, ThreatModelError
from ..models.dram import DramAddress
from .base_test import QUICK, make_sim

RANDOMIZED = {"attacker.mapping_mode": "randomized"}


class TestIdentityMapping:
    def test_translate_is_identity(self):
        sim = make_sim()
        assert sim.address_space.translate(0x1234) == 0x1234
        assert sim.address_space.physical_of(0x1234) == 0x1234
        assert sim.address_space.alias_physical(0x1234) == 0x1234

    def test_unbacked_address(self):
        sim = make_sim()
        with pytest.raises(AddressError):
            sim.address_space.translate(sim.config.geometry.capacity)

    def test_page_map_queries_are_counted(self):
        sim = make_sim()
        sim.address_space.translate(0)
        sim.address_space.physical_of(0)
        sim.address_space.physical_of(64)
        assert sim.address_space.page_map_queries == 2


class TestRandomizedMapping:
    def test_pages_keep_offsets_and_frames_are_distinct(self):
        sim = make_sim(RANDOMIZED)
        space = sim.address_space
        frames = set()
        for page in range(32):
            pa = space.translate(page * 4096 + 12)
            assert pa % 4096 == 12
            assert space.translate(page * 4096 + 12) == pa
            frames.add(pa // 4096)
        assert len(frames) == 32

    def test_runs_out_of_frames(self):
        sim = make_sim(RANDOMIZED)
        for page in range(32):
            sim.address_space.translate(page * 4096)
        with pytest.raises(AddressError):
            sim.address_space.translate(32 * 4096)

    def test_mapping_is_seeded(self):
        first = make_sim(RANDOMIZED, seed=3)
        second = make_sim(RANDOMIZED, seed=3)
        pages = [first.address_space.translate(p * 4096) for p in range(8)]
        assert pages == [second.address_space.translate(p * 4096) for p in range(8)]

    def test_page_map_is_guarded(self):
        sim = make_sim(RANDOMIZED)
        with pytest.raises(ThreatModelError):
            sim.address_space.physical_of(0)
        with sim.address_space.calibration_mode():
            assert sim.address_space.physical_of(0) == sim.address_space.translate(0)
        with pytest.raises(ThreatModelError):
            sim.address_space.alias_physical(0)

    def test_knowledge_can_be_granted(self):
        sim = make_sim({**RANDOMIZED, "attacker.knows_physical": "true"})
        assert sim.address_space.physical_of(0) == sim.address_space.translate(0)

    def test_alias_maps_onto_the_frame(self):
        sim = make_sim(RANDOMIZED)
        pa = 0x5040
        with sim.address_space.calibration_mode():
            va = sim.address_space.alias_physical(pa)
        assert va != pa
        assert sim.address_space.translate(va) == pa

    def test_hammering_with_recorded_pair_never_reads_page_map(self):
        sim = make_sim({**QUICK, **RANDOMIZED})
        with sim.address_space.calibration_mode():
            pair = sim.attack.pair_around(DramAddress(bank=0, row=11))
        queries = sim.address_space.page_map_queries
        report = sim.attack.speculative_hammer(pair, budget_cycles=20 * 1305)
        assert report.iterations == 20
        assert sim.address_space.page_map_queries == queries
