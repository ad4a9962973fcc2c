"""Drive one simulation (or a design x workload sweep) from a config."""

from __future__ import annotations

import copy

from .config import ConfigError, effective_ways, validate
from .controllers import make_controller
from .geometry import CacheGeometry
from .metrics import StatsAccumulator
from .policy import LEADING
from .timing import DeviceTiming
from .workload import TypeTracker, WorkloadProfile, generate, parse_trace, profile_for_class

# workload.* keys forwarded to the profile when present
_PROFILE_KEYS = {
    "working_set": "working_set",
    "burst": "section_burst_len",
    "arrival_gap": "arrival_gap",
    "spread": "spread",
    "hot_fraction": "hot_fraction",
    "hot_weight": "hot_weight",
    "reuse_distance": "reuse_distance",
    "write_fraction": "write_fraction",
    "conflict_fraction": "conflict_fraction",
    "conflict_stride": "conflict_stride",
    "conflict_burst": "conflict_burst",
    "conflict_groups": "conflict_groups",
}


def build_profile(cfg: dict, workload_class: str | None = None) -> WorkloadProfile:
    wl = cfg["workload"]
    kind = workload_class or wl["class"]
    overrides = {dst: wl[src] for src, dst in _PROFILE_KEYS.items() if src in wl}
    overrides["block_size"] = cfg["geometry"]["block_size"]
    overrides["section_blocks"] = cfg["geometry"]["ways_per_set"]
    return profile_for_class(kind, cfg["geometry"]["cache_capacity"],
                             wl["records"], wl["seed"], **overrides)


def build_controller(cfg: dict, design: str | None = None):
    design = design or cfg["design"]
    ways = effective_ways(design, cfg)
    g = cfg["geometry"]
    geom = CacheGeometry(g["block_size"], ways, g["cache_capacity"],
                         g["row_size"], g["tag_size"])
    ct = DeviceTiming(**cfg["cache_timing"])
    mt = DeviceTiming(**cfg["mem_timing"])
    tc = cfg["tag_cache"]
    pol = cfg["policy"]
    return make_controller(
        design, geom, ct, mt,
        cpu_clock_mhz=cfg["cpu_clock_mhz"],
        tag_entries=tc["entries"], tag_assoc=tc["assoc"],
        tag_latency=tc["hit_latency"],
        reservation=pol["reservation_enabled"], use_filter=pol["filter_enabled"],
        p_bypass=pol["p_bypass"], seed=cfg["seed"],
    )


def simulate(controller, records, track_types: bool = True):
    """Feed a record stream through a controller; returns (stats, tracker).

    Accesses resolve out of band (an outcome's latency is only known once
    its transaction chain completes), so classification facts are taken
    from the returned outcome immediately while latency statistics drain
    from the controller's outbox as chains finish.
    """
    acc = StatsAccumulator()
    tracker = TypeTracker() if track_types else None
    access = controller.access
    add = acc.add
    outbox = controller.outbox
    if tracker is None:
        for cycle, op, addr, _core in records:
            access(cycle, op, addr)
            if outbox:
                for done in outbox:
                    add(done)
                outbox.clear()
    else:
        observe = tracker.observe
        for cycle, op, addr, _core in records:
            o = access(cycle, op, addr)
            if op == "R":
                observe(o.block_id, o.current_type, o.stored_type,
                        o.current_type == LEADING, o.flagged)
            if outbox:
                for done in outbox:
                    add(done)
                outbox.clear()
    controller.flush()
    for done in outbox:
        add(done)
    outbox.clear()
    return acc, tracker


def run(cfg: dict, design: str | None = None, workload_class: str | None = None) -> dict:
    """Run one simulation; returns the report document."""
    design = design or cfg["design"]
    effective = copy.deepcopy(cfg)
    effective["design"] = design
    if workload_class:
        effective["workload"]["class"] = workload_class
    errors = validate(effective)
    if errors:
        raise ConfigError(errors)

    controller = build_controller(effective, design)
    trace_path = effective["workload"]["trace"]
    if trace_path:
        records = parse_trace(trace_path)
        workload_name = trace_path
        profile = None
    else:
        profile = build_profile(effective, workload_class)
        records = generate(profile)
        workload_name = profile.kind

    acc, tracker = simulate(controller, records)
    doc = {
        "schema": 1,
        "design": design,
        "workload": workload_name,
        "seed": effective["seed"],
        "config": effective,
        "stats": acc.finalize(controller, tracker),
    }
    if profile is not None:
        doc["stats"]["workload_profile"] = {
            "kind": profile.kind,
            "working_set": profile.working_set,
            "section_burst_len": profile.section_burst_len,
            "num_records": profile.num_records,
            "seed": profile.seed,
            "arrival_gap": profile.arrival_gap,
        }
    return doc


def sweep(cfg: dict, designs, workload_classes) -> list:
    """Run every design x workload combination, ordered by (design, workload)."""
    docs = []
    for design in sorted(designs):
        for kind in sorted(workload_classes):
            docs.append(run(cfg, design, kind))
    return docs
