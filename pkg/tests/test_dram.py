"""
DRAM resource tests: mapping, row buffers, refresh and the flip rule.
"""

import numpy as np
import pytest

from ..exceptions import AddressError, InvalidConfigurationError
from ..models.dram import DramAddress, parse_template_cells
from .base_test import DESK_WINDOW, make_config, make_sim, row_address

VICTIM = DramAddress(bank=0, row=11, col=5)
ROW_10 = DramAddress(bank=0, row=10)
ROW_12 = DramAddress(bank=0, row=12)


def hammer(sim, rounds, now=0):
    for _ in range(rounds):
        sim.dram.access(ROW_10, now)
        sim.dram.access(ROW_12, now)


class TestMapping:
    def test_slices_column_bank_row(self):
        sim = make_sim()
        pa = ((11 * 2 + 0) * 128 + 5) * 8
        assert sim.dram.map_physical(pa) == VICTIM
        assert sim.dram.physical_of(VICTIM) == pa

    def test_inverse_over_the_whole_geometry(self):
        sim = make_sim()
        for pa in range(0, sim.config.geometry.capacity, 4104):
            addr = sim.dram.map_physical(pa)
            assert sim.dram.physical_of(addr) == pa - pa % 8

    def test_rejects_addresses_outside_memory(self):
        sim = make_sim()
        with pytest.raises(AddressError):
            sim.dram.map_physical(sim.config.geometry.capacity)
        with pytest.raises(AddressError):
            sim.dram.physical_of(DramAddress(bank=2))


class TestRowBuffer:
    def test_open_page_hits_and_conflicts(self):
        sim = make_sim()
        assert sim.dram.access(ROW_10, 0) == (280, True)
        assert sim.dram.access(ROW_10.model_copy(update={"col": 3}), 0) == (180, False)
        assert sim.dram.access(ROW_12, 0) == (280, True)
        assert sim.dram.open_row(ROW_12.bank_key) == 12
        assert sim.dram.activations(ROW_10) == 1

    def test_closed_page_activates_every_access(self):
        sim = make_sim({"dram.closed_page": "true"})
        for _ in range(3):
            assert sim.dram.access(ROW_10, 0) == (280, True)
        assert sim.dram.activations(ROW_10) == 3
        assert sim.dram.peek_latency(ROW_10) == 280

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_opened_count_matches_row_changes_per_bank(self, seed):
        rng = np.random.default_rng(seed)
        sim = make_sim()
        open_rows = {}
        changes = 0
        opened = 0
        for bank, row, col in zip(rng.integers(0, 2, 3000), rng.integers(0, 6, 3000), rng.integers(0, 128, 3000)):
            addr = DramAddress(bank=int(bank), row=int(row) * 10, col=int(col))
            latency, was_opened = sim.dram.access(addr, 0)
            if open_rows.get(addr.bank) != addr.row:
                changes += 1
                open_rows[addr.bank] = addr.row
            opened += was_opened
            assert latency == (280 if was_opened else 180)
        assert opened == changes
        assert sum(row.activations for row in sim.dram.disturbance_state().rows) == changes


class TestFlipRule:
    def test_flips_exactly_at_summed_threshold(self):
        sim = make_sim()
        hammer(sim, 999)
        sim.dram.access(ROW_10, 0)
        assert sim.dram.flip_events == []
        sim.dram.access(ROW_12, 0)
        [event] = sim.dram.flip_events
        assert event.victim == VICTIM
        assert event.bit == 3
        assert event.direction == "1to0"

    def test_flip_changes_only_the_cell_bit(self):
        sim = make_sim()
        pa = sim.dram.physical_of(VICTIM)
        assert sim.dram.read_word(pa) == 1 << 3
        hammer(sim, 1000)
        assert sim.dram.read_word(pa) == 0
        assert sim.dram.written_words() == {pa: 0}

    def test_cell_flips_once_until_rewritten(self):
        sim = make_sim()
        hammer(sim, 1000)
        cell = sim.config.template.cells[0]
        assert sim.dram.is_flipped(cell)
        hammer(sim, 1000)
        assert len(sim.dram.flip_events) == 1

        sim.dram.restore_flips(sim.dram.flip_events)
        assert not sim.dram.is_flipped(cell)
        assert sim.dram.read_word(sim.dram.physical_of(VICTIM)) == 1 << 3

    def test_refresh_resets_counters(self):
        sim = make_sim()
        hammer(sim, 999)
        sim.dram.access(ROW_10, DESK_WINDOW)
        assert sim.dram.activations(ROW_10) == 1
        assert sim.dram.activations(ROW_12) == 0
        assert sim.dram.last_bulk_refresh == DESK_WINDOW
        sim.dram.access(ROW_12, DESK_WINDOW)
        assert sim.dram.flip_events == []

    def test_next_refresh_boundary(self):
        sim = make_sim()
        assert sim.dram.next_refresh_boundary(0) == DESK_WINDOW
        assert sim.dram.next_refresh_boundary(DESK_WINDOW - 1) == DESK_WINDOW
        assert sim.dram.next_refresh_boundary(DESK_WINDOW) == 2 * DESK_WINDOW

    def test_one_sided_threshold_setting(self):
        sim = make_sim({"dram.threshold_sides": 1})
        hammer(sim, 500)
        assert len(sim.dram.flip_events) == 1

    def test_rounds_until_threshold(self):
        sim = make_sim()
        delta = {ROW_10.row_key: 1, ROW_12.row_key: 1}
        assert sim.dram.rounds_until_threshold(delta) == 999
        hammer(sim, 10)
        assert sim.dram.rounds_until_threshold(delta) == 989
        assert sim.dram.rounds_until_threshold({DramAddress(bank=1, row=50).row_key: 1}) is None

    def test_bulk_activations_match_stepping(self):
        stepped = make_sim()
        hammer(stepped, 400)
        bulk = make_sim()
        bulk.dram.apply_bulk_activations({ROW_10.row_key: 1, ROW_12.row_key: 1}, 400)
        assert bulk.dram.disturbance_state() == stepped.dram.disturbance_state()


class TestTemplate:
    def test_parses_short_and_full_forms(self):
        cells = parse_template_cells("0:11:5:3:1to0:1000; 0:0:1:1:2:3:4:0to1:77")
        assert cells[0].victim == VICTIM
        assert cells[1].victim == DramAddress(channel=0, dimm=0, rank=1, bank=1, row=2, col=3)
        assert cells[1].threshold == 77
        assert cells[1].source_bit == 0

    def test_rejects_malformed_cells(self):
        with pytest.raises(ValueError):
            parse_template_cells("0:11:5:3:1to0")

    def test_cells_outside_geometry_are_configuration_errors(self):
        with pytest.raises(InvalidConfigurationError):
            make_config({"template.cells": "0:64:0:0:1to0:10"})

    def test_duplicate_cells_are_configuration_errors(self):
        with pytest.raises(InvalidConfigurationError):
            make_config({"template.cells": "0:11:5:3:1to0:10;0:11:5:3:0to1:20"})

    def test_background_holds_source_bits(self):
        sim = make_sim()
        cell = sim.config.template.cells[1]
        assert sim.dram.read_word(sim.dram.physical_of(cell.victim)) == 0
        assert sim.dram.read_word(row_address(sim, 0, 40)) == 0


class TestRounds:
    def test_activations_commit_when_the_round_ends(self):
        sim = make_sim()
        sim.dram.begin_round(0)
        for i in range(1000):
            sim.dram.access(ROW_10, 2 * i)
            sim.dram.access(ROW_12, 2 * i + 1)
        assert sim.dram.activations(ROW_10) == 0
        assert sim.dram.flip_events == []
        delta = sim.dram.end_round(5000)
        assert delta == {ROW_10.row_key: 1000, ROW_12.row_key: 1000}
        [event] = sim.dram.flip_events
        assert event.cycle == 1999
        assert sim.dram.total_activations == 2000

    def test_round_ending_on_the_boundary_counts(self):
        sim = make_sim()
        hammer(sim, 999)
        sim.dram.begin_round(DESK_WINDOW - 10)
        sim.dram.access(ROW_10, DESK_WINDOW - 10)
        sim.dram.access(ROW_12, DESK_WINDOW - 5)
        sim.dram.end_round(DESK_WINDOW)
        [event] = sim.dram.flip_events
        assert event.cycle == DESK_WINDOW - 5

    def test_round_straddling_the_boundary_is_dropped(self):
        sim = make_sim()
        hammer(sim, 999)
        sim.dram.begin_round(DESK_WINDOW - 10)
        sim.dram.access(ROW_10, DESK_WINDOW - 10)
        sim.dram.access(ROW_12, DESK_WINDOW - 5)
        assert sim.dram.end_round(DESK_WINDOW + 1) == {}
        assert sim.dram.flip_events == []
        assert sim.dram.last_bulk_refresh == DESK_WINDOW
        assert sim.dram.activations(ROW_10) == 0
        assert sim.dram.activations(ROW_12) == 0
