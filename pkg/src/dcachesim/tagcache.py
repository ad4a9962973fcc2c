"""On-chip SRAM cache for DRAM-resident tags.

Entries are tracked at tag-batch granularity and keyed by the batch's home
set index (the direct-mapped design reuses the structure with per-line
keys).  The structure models *residency and traffic only*: authoritative
tag contents live with the cache sets, so an entry here just means "the
controller can consult these tags without touching DRAM".

A batch being fetched from a tag row is *in flight*: a lookup during that
window neither hits nor misses outright, and the caller decides whether to
wait on it.  Evicting a batch that was modified while resident owes one
tag-row writeback, which the caller turns into a DRAM transaction.
"""

from __future__ import annotations

from collections import OrderedDict

MISS = 0
HIT = 1
INFLIGHT = 2


class TagCache:
    def __init__(self, num_entries: int = 256, assoc: int = 8, hit_latency: int = 9):
        if num_entries < 1 or assoc < 1:
            raise ValueError("tag cache needs at least one entry and one way")
        if num_entries % assoc:
            raise ValueError(
                f"num_entries {num_entries} is not divisible by assoc {assoc}"
            )
        num_sets = num_entries // assoc
        if num_sets & (num_sets - 1):
            raise ValueError(f"tag cache set count {num_sets} must be a power of two")
        self.num_entries = num_entries
        self.assoc = assoc
        self.hit_latency = hit_latency
        self.num_sets = num_sets
        self._set_mask = num_sets - 1
        # per tag-cache set: key -> dirty flag, in LRU order (oldest first)
        self._sets: list[OrderedDict] = [OrderedDict() for _ in range(num_sets)]
        self._inflight: dict[int, int] = {}  # key -> ready cycle
        self._inflight_dirty: set[int] = set()
        self.lookups = 0
        self.hits = 0

    def _set_of(self, key: int) -> OrderedDict:
        return self._sets[key & (self.num_sets - 1)]

    def lookup(self, key: int) -> int:
        """Probe for a batch; refreshes LRU on hit.

        The fixed hit_latency is charged by the caller (it applies to both
        hits and misses: the controller learns the outcome after the probe).
        """
        self.lookups += 1
        s = self._sets[key & self._set_mask]
        if key in s:
            s.move_to_end(key)
            self.hits += 1
            return HIT
        if key in self._inflight:
            return INFLIGHT
        return MISS

    def begin_fetch(self, key: int, ready_cycle: int | None = None):
        """Mark a batch as being fetched from its tag row.

        The ready cycle may be supplied later via set_ready once the fetch
        transaction has been scheduled against the device."""
        assert key not in self._inflight
        self._inflight[key] = ready_cycle

    def set_ready(self, key: int, ready_cycle: int):
        assert key in self._inflight
        self._inflight[key] = ready_cycle

    def inflight_ready(self, key: int) -> int | None:
        return self._inflight[key]

    def install(self, key: int):
        """Make a fetched batch resident; returns (victim_key, victim_dirty)
        or (None, False) if no eviction was needed."""
        self._inflight.pop(key, None)
        s = self._set_of(key)
        assert key not in s
        victim = (None, False)
        if len(s) >= self.assoc:
            victim = s.popitem(last=False)
        s[key] = key in self._inflight_dirty
        self._inflight_dirty.discard(key)
        return victim

    def mark_dirty(self, key: int):
        """Record that the batch's tags were modified (owes a writeback).

        Marks stick to in-flight batches too: a fill that lands while its
        batch is still being fetched must not lose its writeback."""
        s = self._set_of(key)
        if key in s:
            s[key] = True
        elif key in self._inflight:
            self._inflight_dirty.add(key)

    def is_resident(self, key: int) -> bool:
        return key in self._set_of(key)

    def is_inflight(self, key: int) -> bool:
        return key in self._inflight

    def update_hint(self, key: int):
        """Refresh knowledge of a key without counting a lookup (used when
        the direct-mapped design pushes a neighboring tag in)."""
        s = self._set_of(key)
        if key in s:
            s.move_to_end(key)
            return None, False
        victim = (None, False)
        if len(s) >= self.assoc:
            victim = s.popitem(last=False)
        s[key] = False
        return victim

    def hit_rate(self) -> float:
        if self.lookups == 0:
            return 0.0
        return self.hits / self.lookups
