"""Runner tests: profile/controller assembly, simulate(), run(), sweep()."""

import pytest

from dcachesim.config import ConfigError, build_config
from dcachesim.runner import build_controller, build_profile, run, simulate, sweep
from dcachesim.workload import write_trace_csv


def cfg_with(**raw):
    cfg, errors = build_config({k: str(v) for k, v in raw.items()})
    assert errors == []
    return cfg


SMALL = {"workload.records": 2_000, "workload.seed": 3}


class TestBuildProfile:
    def test_class_and_records_from_config(self):
        p = build_profile(cfg_with(**SMALL))
        assert p.kind == "ld"
        assert p.num_records == 2_000 and p.seed == 3
        assert p.block_size == 64 and p.section_blocks == 16

    def test_class_parameter_wins(self):
        p = build_profile(cfg_with(**SMALL), "cd")
        assert p.kind == "cd"
        assert p.conflict_fraction > 0

    def test_workload_keys_forwarded(self):
        p = build_profile(cfg_with(**{
            "workload.burst": 4, "workload.arrival_gap": 7.5,
            "workload.working_set": 1 << 20, "workload.write_fraction": 0.05,
            "workload.conflict_fraction": 0.25, "workload.conflict_stride": 64,
            "workload.conflict_groups": 8, "workload.conflict_burst": 3,
        }, **SMALL))
        assert p.section_burst_len == 4
        assert p.arrival_gap == 7.5
        assert p.working_set == 1 << 20
        assert p.write_fraction == 0.05
        assert (p.conflict_fraction, p.conflict_stride,
                p.conflict_groups, p.conflict_burst) == (0.25, 64, 8, 3)

    def test_preset_keeps_unlisted_knobs(self):
        # only the overridden knob moves; the cd preset still shapes the rest
        base = build_profile(cfg_with(**SMALL), "cd")
        tweaked = build_profile(cfg_with(**{"workload.burst": 2}, **SMALL), "cd")
        assert tweaked.section_burst_len == 2
        assert tweaked.conflict_stride == base.conflict_stride
        assert tweaked.working_set == base.working_set


class TestBuildController:
    def test_design_geometry(self):
        cfg = cfg_with(**SMALL)
        assert build_controller(cfg).geom.ways_per_set == 16
        assert build_controller(cfg, "lh").geom.ways_per_set == 14
        assert build_controller(cfg, "direct").geom.ways_per_set == 1

    def test_design_defaults_to_config(self):
        assert build_controller(cfg_with(design="lh", **SMALL)).design == "lh"

    def test_timing_and_tag_cache_knobs(self):
        c = build_controller(cfg_with(**{
            "cache_timing.tcas": 40, "tag_cache.entries": 128,
            "tag_cache.hit_latency": 5}, **SMALL))
        assert c.cache_dev.timing.tcas == 40
        assert c.tag_latency == 5
        assert c.tagcache.num_sets == 128 // 8

    def test_policy_knobs_forwarded(self):
        cfg = cfg_with(**{"policy.filter_enabled": "false",
                          "policy.reservation_enabled": "false"}, **SMALL)
        c = build_controller(cfg, "gemini")
        assert c.use_filter is False and c.reservation is False
        cfg = cfg_with(**{"policy.p_bypass": 0.4}, seed=11, **SMALL)
        d = build_controller(cfg, "direct")
        assert d.p_bypass == 0.4


class TestSimulate:
    RECORDS = [(0, "R", 0, 0), (400, "R", 64, 0), (800, "W", 0, 0),
               (1200, "R", 4096, 0)]

    def test_counts_and_drained_outbox(self):
        c = build_controller(cfg_with(**SMALL))
        acc, tracker = simulate(c, self.RECORDS)
        assert acc.records == 4 and acc.reads == 3 and acc.writes == 1
        assert not c.outbox and not c._events
        assert tracker is not None

    def test_tracker_sees_reads_only(self):
        c = build_controller(cfg_with(**SMALL))
        _acc, tracker = simulate(c, self.RECORDS)
        doc = tracker.finalize()
        assert doc["classified_accesses"] == 3

    def test_tracking_optional(self):
        c = build_controller(cfg_with(**SMALL))
        _acc, tracker = simulate(c, self.RECORDS, track_types=False)
        assert tracker is None

    def test_late_latencies_still_folded(self):
        # every read's latency must land in the accumulator despite chains
        # resolving after later records were already fed
        c = build_controller(cfg_with(**SMALL))
        acc, _ = simulate(c, self.RECORDS)
        doc = acc.finalize()
        lat = doc["latency"]
        assert (lat["leading"]["hits"] + lat["leading"]["misses"]
                + lat["following"]["hits"] + lat["following"]["misses"]) == 3
        assert doc["miss_latency_mean"] > 0


class TestRun:
    def test_document_shape(self):
        doc = run(cfg_with(**SMALL))
        assert doc["schema"] == 1
        assert doc["design"] == "gemini"
        assert doc["workload"] == "ld"
        assert doc["seed"] == 1
        assert doc["config"]["workload"]["records"] == 2_000
        s = doc["stats"]
        assert s["records"] == 2_000
        assert "queue" in s and "traffic" in s and "counters" in s
        assert s["workload_profile"]["kind"] == "ld"

    def test_design_parameter_wins(self):
        doc = run(cfg_with(**SMALL), design="direct")
        assert doc["design"] == "direct"
        assert doc["config"]["design"] == "direct"

    def test_invalid_combination_raises(self):
        cfg = cfg_with(**SMALL)
        cfg["workload"]["class"] = "xx"
        with pytest.raises(ConfigError):
            run(cfg)

    def test_repeat_runs_identical(self):
        cfg = cfg_with(**SMALL)
        assert run(cfg) == run(cfg)

    def test_seeds_matter(self):
        a = run(cfg_with(**SMALL))
        b = run(cfg_with(**{"workload.seed": 4, "workload.records": 2_000}))
        assert a["stats"]["dram_hit_rate"] != b["stats"]["dram_hit_rate"]

    def test_trace_file_input(self, tmp_path):
        path = tmp_path / "t.csv"
        records = [(i * 300, "R" if i % 3 else "W", (i % 50) * 64, 0)
                   for i in range(120)]
        write_trace_csv(records, str(path))
        doc = run(cfg_with(**{"workload.trace": str(path)}, **SMALL))
        assert doc["workload"] == str(path)
        assert doc["stats"]["records"] == 120
        assert "workload_profile" not in doc["stats"]

    def test_case_partition_and_hit_identity(self):
        for design in ("gemini", "lh", "direct"):
            s = run(cfg_with(**SMALL), design=design)["stats"]
            f = s["case_fractions"]
            assert abs(sum(f.values()) - 1.0) < 1e-9
            assert s["dram_hit_rate"] == f["A"] + f["B1"] + f["B2"]


class TestSweep:
    def test_grid_order_and_size(self):
        docs = sweep(cfg_with(**SMALL), ["lh", "gemini"], ["ld", "bf"])
        assert [(d["design"], d["workload"]) for d in docs] == [
            ("gemini", "bf"), ("gemini", "ld"),
            ("lh", "bf"), ("lh", "ld"),
        ]

    def test_rows_reflect_their_cell(self):
        docs = sweep(cfg_with(**SMALL), ["gemini", "direct"], ["ld"])
        by_design = {d["design"]: d for d in docs}
        assert by_design["gemini"]["config"]["workload"]["class"] == "ld"
        assert by_design["direct"]["stats"]["records"] == 2_000
        assert (by_design["gemini"]["stats"]["dram_hit_rate"]
                != by_design["direct"]["stats"]["dram_hit_rate"])
