"""Trace input/output, synthetic workload generation, and type analysis.

Traces are sequences of (cycle, op, addr, core) records with nondecreasing
cycles.  Two on-disk formats are supported: a CSV with header
``cycle,op,addr,core`` and hex addresses, and a packed binary format with a
``DCTR`` magic, a little-endian u16 version, and 16-byte records (u64
cycle, u8 op, u8 core, 48-bit address).

Synthetic workloads come in four classes:

    cd  capacity-bound: working set a small multiple of the cache, long
        sequential bursts through sections, a hot subset revisited often
    ld  latency-bound: working set well inside the cache, single-block
        uniform random picks (high reuse, no spatial locality)
    bf  burst-friendly: working set inside the cache, long bursts
    nb  no-benefit: working set far beyond the cache, single random blocks

Everything is deterministic given the profile's seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .policy import FOLLOWING, LEADING

TRACE_MAGIC = b"DCTR"
TRACE_VERSION = 1
_RECORD = struct.Struct("<QBB6s")

WORKLOAD_CLASSES = ("cd", "ld", "bf", "nb")


class TraceRecord(NamedTuple):
    cycle: int
    op: str
    addr: int
    core: int


class TraceFormatError(ValueError):
    pass


# -- file formats ----------------------------------------------------------

def parse_trace_csv(lines: Iterable[str]) -> Iterator[TraceRecord]:
    it = iter(lines)
    header = next(it, None)
    if header is None or header.strip() != "cycle,op,addr,core":
        raise TraceFormatError("line 1: expected header 'cycle,op,addr,core'")
    last_cycle = -1
    for lineno, line in enumerate(it, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceFormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            cycle = int(parts[0])
            addr = int(parts[2], 16)
            core = int(parts[3])
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
        op = parts[1]
        if op not in ("R", "W"):
            raise TraceFormatError(f"line {lineno}: op must be R or W, got {op!r}")
        if addr < 0 or addr >= 1 << 48:
            raise TraceFormatError(f"line {lineno}: address out of 48-bit range")
        if cycle < last_cycle:
            raise TraceFormatError(f"line {lineno}: cycle {cycle} goes backwards")
        last_cycle = cycle
        yield TraceRecord(cycle, op, addr, core)


def write_trace_csv(records: Iterable[TraceRecord], fh):
    fh.write("cycle,op,addr,core\n")
    for cycle, op, addr, core in records:
        fh.write(f"{cycle},{op},{addr:#x},{core}\n")


def parse_trace_binary(fh) -> Iterator[TraceRecord]:
    head = fh.read(6)
    if len(head) != 6 or head[:4] != TRACE_MAGIC:
        raise TraceFormatError("not a binary trace: bad magic")
    (version,) = struct.unpack("<H", head[4:6])
    if version != TRACE_VERSION:
        raise TraceFormatError(f"unsupported trace version {version}")
    last_cycle = -1
    index = 0
    while True:
        raw = fh.read(_RECORD.size)
        if not raw:
            return
        if len(raw) != _RECORD.size:
            raise TraceFormatError(f"record {index}: truncated")
        cycle, op_code, core, addr_raw = _RECORD.unpack(raw)
        if op_code > 1:
            raise TraceFormatError(f"record {index}: bad op code {op_code}")
        if cycle < last_cycle:
            raise TraceFormatError(f"record {index}: cycle goes backwards")
        last_cycle = cycle
        addr = int.from_bytes(addr_raw, "little")
        yield TraceRecord(cycle, "W" if op_code else "R", addr, core)
        index += 1


def write_trace_binary(records: Iterable[TraceRecord], fh):
    fh.write(TRACE_MAGIC + struct.pack("<H", TRACE_VERSION))
    for cycle, op, addr, core in records:
        fh.write(_RECORD.pack(cycle, 1 if op == "W" else 0, core,
                              addr.to_bytes(6, "little")))


def parse_trace(path: str) -> Iterator[TraceRecord]:
    """Open a trace file, sniffing binary vs CSV from the magic bytes."""
    with open(path, "rb") as probe:
        head = probe.read(4)
    if head == TRACE_MAGIC:
        with open(path, "rb") as fh:
            yield from parse_trace_binary(fh)
    else:
        with open(path, "r") as fh:
            yield from parse_trace_csv(fh)


# -- synthetic generation --------------------------------------------------

@dataclass
class WorkloadProfile:
    kind: str = "ld"
    working_set: int = 1 << 20          # bytes
    section_burst_len: int = 1
    reuse_distance: int | None = None   # accesses; biases picks toward recents
    num_records: int = 100_000
    seed: int = 1
    arrival_gap: float = 12.0           # mean cycles between requests
    write_fraction: float = 0.2
    block_size: int = 64
    section_blocks: int = 16
    spread: int = 1                     # section-space dilution factor
    hot_fraction: float = 0.0           # share of sections that are hot
    hot_weight: float = 0.8             # share of picks landing on hot sections
    conflict_fraction: float = 0.0      # share of traffic on aliased pairs
    conflict_stride: int = 0            # sections between aliased partners
    conflict_burst: int = 8             # head-run length of a conflict visit
    conflict_groups: int = 0            # aliased groups in play (0 = every residue)
    cores: int = 8

    def __post_init__(self):
        if self.kind not in WORKLOAD_CLASSES:
            raise ValueError(f"kind must be one of {WORKLOAD_CLASSES}, got {self.kind!r}")
        if self.working_set < self.block_size * self.section_blocks:
            raise ValueError("working_set is smaller than one section")
        if not 1 <= self.section_burst_len <= self.section_blocks:
            raise ValueError("section_burst_len must be in [1, section_blocks]")
        if self.section_blocks % self.section_burst_len:
            raise ValueError("section_burst_len must divide section_blocks")
        if self.num_records < 1:
            raise ValueError("num_records must be positive")
        if self.arrival_gap < 0:
            raise ValueError("arrival_gap must be nonnegative")
        if not 0.0 <= self.write_fraction < 1.0:
            raise ValueError("write_fraction must be in [0, 1)")
        if self.spread < 1:
            raise ValueError("spread must be >= 1")
        if not 0.0 <= self.conflict_fraction < 1.0:
            raise ValueError("conflict_fraction must be in [0, 1)")
        if self.conflict_fraction > 0.0:
            if self.conflict_stride < 1:
                raise ValueError("conflict traffic needs a positive conflict_stride")
            if self.num_sections < 2 * self.conflict_stride:
                raise ValueError(
                    "working_set too small to hold an aliased partner "
                    f"(need >= {2 * self.conflict_stride} sections)"
                )
            if not 1 <= self.conflict_burst <= self.section_blocks:
                raise ValueError("conflict_burst must be in [1, section_blocks]")
            if not 0 <= self.conflict_groups <= self.conflict_stride:
                raise ValueError("conflict_groups must be in [0, conflict_stride]")

    @property
    def num_sections(self) -> int:
        return self.working_set // (self.block_size * self.section_blocks)


def profile_for_class(kind: str, cache_capacity: int, num_records: int,
                      seed: int = 1, **overrides) -> WorkloadProfile:
    """Build a profile whose footprint follows the class conventions,
    expressed relative to the given cache capacity."""
    presets = {
        # cd mixes background section scans with reuse over section pairs
        # sitting exactly one cache capacity apart, the classic aliasing
        # pattern that a direct-mapped array cannot hold on to.
        "cd": dict(working_set=2 * cache_capacity, section_burst_len=8,
                   arrival_gap=10.0, conflict_fraction=0.35,
                   conflict_stride=cache_capacity // (64 * 16),
                   conflict_burst=7, conflict_groups=384,
                   write_fraction=0.1),
        "ld": dict(working_set=cache_capacity // 2, section_burst_len=1,
                   arrival_gap=26.0),
        "bf": dict(working_set=(2 * cache_capacity) // 5, section_burst_len=16,
                   arrival_gap=8.0),
        "nb": dict(working_set=8 * cache_capacity, section_burst_len=1,
                   spread=4, arrival_gap=12.0),
    }
    if kind not in presets:
        raise ValueError(f"unknown workload class {kind!r}")
    args = presets[kind]
    args.update(overrides)
    return WorkloadProfile(kind=kind, num_records=num_records, seed=seed, **args)


def generate(profile: WorkloadProfile, chunk: int = 65536) -> Iterator[tuple]:
    """Yield a deterministic synthetic trace for the profile.

    Records come out as plain (cycle, op, addr, core) tuples: the stream is
    the simulator's hot input and tuple construction is measurably cheaper
    than TraceRecord at trace scale.  The fields line up with TraceRecord,
    so the writers accept either."""
    rng = np.random.default_rng(profile.seed)
    n_sections = profile.num_sections
    space = n_sections * profile.spread
    if profile.spread > 1:
        sections = np.sort(rng.choice(space, size=n_sections, replace=False))
    else:
        sections = np.arange(n_sections)

    weights = None
    if profile.hot_fraction > 0.0:
        hot_n = max(1, int(n_sections * profile.hot_fraction))
        weights = np.full(n_sections, (1.0 - profile.hot_weight) / (n_sections - hot_n)
                          if n_sections > hot_n else 0.0)
        weights[:hot_n] = profile.hot_weight / hot_n
        weights /= weights.sum()

    burst = profile.section_burst_len
    spb = profile.section_blocks
    conflict = profile.conflict_fraction > 0.0
    exclude = False
    if conflict:
        stride = profile.conflict_stride
        depth = n_sections // stride  # aliased partners per group
        groups = profile.conflict_groups or stride
        # With a dense id space and no hot weighting, keep the scans off
        # the aliased pairs so the two traffic components stay distinct.
        exclude = (groups < stride and profile.spread == 1 and weights is None)
        bg_period = stride - groups
    recent: list[int] = []
    recent_cap = None
    if profile.reuse_distance:
        recent_cap = max(1, profile.reuse_distance // burst)
        # the recency pool refreshes between chunks, so keep chunks close
        # to the reuse horizon or the bias would only act at bulk scale
        chunk = min(chunk, max(64, 4 * recent_cap) * burst)

    emitted = 0
    cycle_base = 0
    while emitted < profile.num_records:
        n_bursts = max(1, min((profile.num_records - emitted + burst - 1) // burst,
                              chunk // burst))
        if exclude:
            raw = rng.integers(0, depth * bg_period, n_bursts)
            picks = (raw // bg_period) * stride + groups + raw % bg_period
        else:
            idx = rng.choice(n_sections, size=n_bursts, p=weights)
            picks = sections[idx]
        if recent_cap:
            mask = rng.random(n_bursts) < 0.5
            if recent and mask.any():
                pool = np.array(recent)
                picks = picks.copy()
                picks[mask] = pool[rng.integers(0, len(pool), int(mask.sum()))]
            recent.extend(int(p) for p in picks[-recent_cap:])
            recent = recent[-recent_cap:]
        if burst == 1:
            starts = rng.integers(0, spb, n_bursts)
        else:
            starts = rng.integers(0, spb // burst, n_bursts) * burst
        lens = np.full(n_bursts, burst)
        if conflict:
            # Conflict visits walk the head of a section drawn from an
            # aliased group: partners sit conflict_stride sections apart,
            # so they contend for the same cache frames in every design.
            is_conf = rng.random(n_bursts) < profile.conflict_fraction
            n_conf = int(is_conf.sum())
            if n_conf:
                base = rng.integers(0, groups, n_conf)
                member = rng.integers(0, depth, n_conf)
                picks = picks.copy()
                picks[is_conf] = base + member * stride
                starts[is_conf] = 0
                lens[is_conf] = profile.conflict_burst
        if lens.max() == lens.min():
            blocks = ((picks * spb + starts)[:, None] + np.arange(int(lens[0]))).ravel()
        else:
            ends = np.cumsum(lens)
            flat = np.arange(ends[-1])
            bix = np.searchsorted(ends, flat, side="right")
            blocks = (picks * spb + starts)[bix] + (flat - (ends - lens)[bix])
        blocks = blocks[: profile.num_records - emitted]
        n = len(blocks)
        gaps = rng.poisson(profile.arrival_gap, n) if profile.arrival_gap > 0 else np.zeros(n, dtype=np.int64)
        cycles = cycle_base + np.cumsum(gaps)
        cycle_base = int(cycles[-1])
        writes = rng.random(n) < profile.write_fraction
        addr_list = (blocks * profile.block_size).tolist()
        cycle_list = cycles.tolist()
        op_list = ["W" if w else "R" for w in writes.tolist()]
        core_list = ((np.arange(emitted, emitted + n)) % profile.cores).tolist()
        yield from zip(cycle_list, op_list, addr_list, core_list)
        emitted += n


# -- type analysis ---------------------------------------------------------

class TypeTracker:
    """Streaming per-block view of the leading/following sequence.

    Feeds the transition ratio, the histogram of stable-run lengths, the
    share of tag fetches attributable to stored-leading blocks, and the
    filter's flag rate bucketed by the length of the leading run that each
    flagged transition ended.
    """

    def __init__(self):
        # block -> packed (runlen << 3 | seen_twice << 2 | switched << 1 | type)
        self._state: dict[int, int] = {}
        self.run_hist: dict[int, int] = {}
        self.lead_boundaries: dict[int, int] = {}
        self.lead_flags: dict[int, int] = {}
        self.accesses = 0
        self.switches = 0
        self.fetches = 0
        self.fetches_stored_leading = 0

    def observe(self, block: int, current: int, stored: int | None,
                fetched: bool, flagged: bool):
        self.accesses += 1
        if fetched:
            self.fetches += 1
            if stored == LEADING:
                self.fetches_stored_leading += 1
        st = self._state.get(block)
        if st is None:
            self._state[block] = 8 | current  # runlen 1
            return
        prev = st & 1
        if prev == current:
            self._state[block] = st + 8
            if st & 4 == 0:
                self._state[block] |= 4
            return
        runlen = st >> 3
        self.run_hist[runlen] = self.run_hist.get(runlen, 0) + 1
        self.switches += 1
        if prev == LEADING:  # an L-run just ended at this L->F boundary
            self.lead_boundaries[runlen] = self.lead_boundaries.get(runlen, 0) + 1
            if flagged:
                self.lead_flags[runlen] = self.lead_flags.get(runlen, 0) + 1
        self._state[block] = 8 | 4 | 2 | current

    def finalize(self) -> dict:
        run_hist = dict(self.run_hist)
        blocks_twice = 0
        blocks_switched = 0
        for st in self._state.values():
            run_hist[st >> 3] = run_hist.get(st >> 3, 0) + 1
            if st & 4:
                blocks_twice += 1
            if st & 2:
                blocks_switched += 1
        flag_rate = {}
        for n, total in sorted(self.lead_boundaries.items()):
            flag_rate[n] = self.lead_flags.get(n, 0) / total
        return {
            "classified_accesses": self.accesses,
            "transition_ratio": blocks_switched / blocks_twice if blocks_twice else 0.0,
            "l_stable_hist": {k: run_hist[k] for k in sorted(run_hist)},
            "tag_fetch_attribution": (self.fetches_stored_leading / self.fetches
                                      if self.fetches else 0.0),
            "filter_flag_rate": {k: flag_rate[k] for k in sorted(flag_rate)},
        }


def analyze_types(events: Iterable[tuple]) -> dict:
    """Offline wrapper over TypeTracker.

    Each event is (block_id, current_type, stored_type, caused_tag_fetch)
    with an optional fifth element marking a filter flag.
    """
    t = TypeTracker()
    for ev in events:
        block, current, stored, fetched = ev[:4]
        flagged = bool(ev[4]) if len(ev) > 4 else False
        t.observe(block, current, stored, fetched, flagged)
    return t.finalize()
