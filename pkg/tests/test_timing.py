"""DRAM device timing tests.

The closed forms below are hand-derived from the timing parameters.  For
the default cache device (tCAS=tRCD=tRP=36, 128-bit bus at 1600 MHz under
a 3200 MHz CPU clock) a 64-byte burst takes 2 bus cycles = 4 CPU cycles,
so:

    row hit        36 + 4              = 40
    closed bank    36 + 36 + 4         = 76
    row conflict   36 + 36 + 36 + 4    = 112

and for the default memory device (64-bit bus at 800 MHz, ratio 4) the
64-byte burst takes 16 cycles, making a closed-bank read 36+36+16 = 88.
"""

import random

import pytest

from dcachesim.timing import (
    BATCH_READ,
    DATA_READ,
    DATA_WRITE,
    MEM_READ,
    DeviceTiming,
    DramDevice,
)

CACHE_TIMING = DeviceTiming()  # defaults model the stacked cache device
MEM_TIMING = DeviceTiming(channels=2, banks=8, bus_width_bits=64,
                          bus_clock_mhz=800)


def fresh(timing=CACHE_TIMING):
    return DramDevice(timing, cpu_clock_mhz=3200)


# ---------------------------------------------------------------------------
# parameter plumbing

def test_clock_ratio():
    assert CACHE_TIMING.clock_ratio(3200) == 2
    assert MEM_TIMING.clock_ratio(3200) == 4
    with pytest.raises(ValueError):
        CACHE_TIMING.clock_ratio(3000)  # not an integer multiple


def test_burst_cycles():
    # 128-bit DDR moves 32 B per bus cycle; 64 B = 2 bus cycles = 4 CPU cycles
    assert CACHE_TIMING.burst_cycles(64, 3200) == 4
    assert CACHE_TIMING.burst_cycles(128, 3200) == 8
    assert CACHE_TIMING.burst_cycles(96, 3200) == 6
    assert CACHE_TIMING.burst_cycles(1, 3200) == 2   # rounds up to one beat
    # 64-bit DDR at ratio 4 moves 16 B per bus cycle
    assert MEM_TIMING.burst_cycles(64, 3200) == 16


def test_total_banks():
    assert CACHE_TIMING.total_banks == 64
    assert MEM_TIMING.total_banks == 16


def test_invalid_timing_rejected():
    with pytest.raises(ValueError):
        DeviceTiming(tcas=0)
    with pytest.raises(ValueError):
        DeviceTiming(channels=0)
    with pytest.raises(ValueError):
        DeviceTiming(bus_width_bits=65)


# ---------------------------------------------------------------------------
# closed-form service latencies

def test_closed_bank_read_is_76():
    dev = fresh()
    done, queue = dev.service(0, 5, 64, 0, DATA_READ)
    assert done == 76
    assert queue == 0


def test_row_hit_read_is_40():
    dev = fresh()
    dev.service(0, 5, 64, 0, DATA_READ)
    done, queue = dev.service(0, 5, 64, 100, DATA_READ)
    assert done == 140
    assert queue == 0


def test_row_conflict_is_112():
    dev = fresh()
    dev.service(0, 5, 64, 0, DATA_READ)
    # issue late enough that tRAS (144) from the activation at 0 has passed
    done, queue = dev.service(0, 6, 64, 200, DATA_READ)
    assert done == 312
    assert queue == 0


def test_memory_closed_bank_read_is_88():
    dev = fresh(MEM_TIMING)
    done, queue = dev.service(3, 9, 64, 0, MEM_READ)
    assert done == 88
    assert queue == 0


def test_batch_read_same_as_data_read():
    # a tag batch moves as one 64-byte burst; the kind only labels traffic
    dev = fresh()
    done, _ = dev.service(2, 1, 64, 0, BATCH_READ)
    assert done == 76


def test_wider_burst():
    # 128 B occupies two extra bus beats: 36+36+8 = 80
    dev = fresh()
    done, _ = dev.service(0, 5, 128, 0, DATA_READ)
    assert done == 80


# ---------------------------------------------------------------------------
# bank and channel contention

def test_tras_stalls_early_precharge():
    dev = fresh()
    dev.service(0, 1, 64, 0, DATA_READ)       # activates row 1 at cycle 0
    # conflicting row right after: precharge must wait until tRAS = 144
    done, queue = dev.service(0, 2, 64, 40, DATA_READ)
    # pre at 144, activate until 180, CAS until 216, burst until 220; the
    # bus slot lands at 216+36=252..256
    assert done == 256
    # service_min is 112, so everything beyond that shows up as queuing
    assert queue == 256 - 40 - 112


def test_row_hits_pipeline_on_the_bus():
    # back-to-back hits to an open row stream at burst granularity
    dev = fresh()
    dev.service(0, 5, 64, 0, DATA_READ)                 # opens the row, done 76
    done2, _ = dev.service(0, 5, 64, 0, DATA_READ)
    done3, _ = dev.service(0, 5, 64, 0, DATA_READ)
    assert done2 == 80   # one burst slot behind the first
    assert done3 == 84


def test_bank_occupancy_is_column_slot_only():
    # a second bank on another channel is untouched by the first access
    dev = fresh()
    dev.service(0, 5, 64, 0, DATA_READ)
    done, queue = dev.service(1, 5, 64, 0, DATA_READ)   # chan 1 with 4 channels
    assert done == 76
    assert queue == 0


def test_channel_fcfs_serializes_bursts():
    # banks 0 and 4 share channel 0 (bank % channels); their bursts conflict
    dev = fresh()
    d1, q1 = dev.service(0, 5, 64, 0, DATA_READ)
    d2, q2 = dev.service(4, 5, 64, 0, DATA_READ)
    assert (d1, q1) == (76, 0)
    assert d2 == 80          # waited one burst for the channel
    assert q2 == 4


def test_write_uses_same_bank_path():
    dev = fresh()
    done, _ = dev.service(0, 5, 64, 0, DATA_WRITE)
    assert done == 76
    done, _ = dev.service(0, 5, 64, done, DATA_WRITE)
    assert done == 76 + 40


def test_queue_never_negative_random_storm():
    rng = random.Random(7)
    dev = fresh()
    t = 0
    for _ in range(5000):
        t += rng.randrange(0, 30)
        bank = rng.randrange(64)
        row = rng.randrange(64)
        _, queue = dev.service(bank, row, rng.choice((64, 128)), t, DATA_READ)
        assert queue >= 0


def test_completion_monotone_per_bank():
    rng = random.Random(11)
    dev = fresh()
    last_done = {}
    t = 0
    for _ in range(2000):
        t += rng.randrange(0, 10)
        bank = rng.randrange(8)
        row = rng.randrange(16)
        done, _ = dev.service(bank, row, 64, t, DATA_READ)
        assert done >= last_done.get(bank, 0)
        last_done[bank] = done


# ---------------------------------------------------------------------------
# grouped fetches and traffic accounting

def test_parallel_fetch_completion_is_slowest_member():
    dev = fresh()
    done = dev.parallel_fetch(
        [(0, 1, 64, BATCH_READ), (1, 1, 64, DATA_READ)], 10)
    assert done == 86  # both closed-bank 76 from issue 10
    assert dev.same_bank_parallel == 0


def test_parallel_fetch_same_bank_degrades():
    dev = fresh()
    done = dev.parallel_fetch(
        [(0, 1, 64, BATCH_READ), (0, 1, 64, DATA_READ)], 0)
    assert dev.same_bank_parallel == 1
    assert done == 80  # second access pipelines behind the first


def test_traffic_summary():
    dev = fresh()
    dev.service(0, 1, 64, 0, DATA_READ)
    dev.service(1, 1, 64, 0, DATA_READ)
    dev.service(2, 1, 128, 0, BATCH_READ)
    assert dev.total_bytes() == 256
    assert dev.transaction_count() == 3
    summary = dev.summary()
    assert summary["data_read"]["count"] == 2
    assert summary["data_read"]["bytes"] == 128
    assert summary["batch_read"]["bytes"] == 128
    assert dev.mean_queue_delay() == 0.0


def test_mean_queue_delay_counts_bus_waits():
    dev = fresh()
    dev.service(0, 5, 64, 0, DATA_READ)
    dev.service(4, 5, 64, 0, DATA_READ)   # 4 cycles of channel wait
    assert dev.mean_queue_delay() == 2.0  # (0 + 4) / 2
