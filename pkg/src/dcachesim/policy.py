"""Per-set tag state and the block placement policies.

A block is classified per access, not per address: it is a *leading* block
when its set's tag batch has to be fetched from DRAM (tag-cache miss with
nothing in flight) and a *following* block when the batch is already
resident or on its way.  Leading blocks are placed statically at
``block_id mod ways_per_set`` so the controller can read their data without
waiting for tags; following blocks may sit at any way.

Each tag entry carries a reference bit (ref), a priority bit that doubles
as the stored block type (1 = leading), a dirty bit, and a two-bit
stability counter driving the type-variation filter alongside a memo of
the last observed type.  The filter's job is to spot blocks that flip type
every few accesses and keep them at their static way through the flips, so
their next leading access is still served by the static read; blocks that
settle into a long run of either type decay back out of the reservation.

Victim selection for following-block insertion is a reference-bit sweep
that leaves leading ways alone as long as any following way is reclaimable
(their ref bits are neither tested nor cleared); only when every following
way was recently referenced does the sweep widen to the whole set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .tagcache import MISS

LEADING = 0
FOLLOWING = 1
TYPE_NAMES = ("leading", "following")


@dataclass(slots=True)
class TagEntry:
    block_id: int = -1
    dirty: bool = False
    ref: int = 0
    priority: int = 0
    filter_count: int = 0
    last_type: int = 0

    @property
    def valid(self) -> bool:
        return self.block_id >= 0

    def reset(self):
        self.block_id = -1
        self.dirty = False
        self.ref = 0
        self.priority = 0
        self.filter_count = 0
        self.last_type = 0


class CacheSet:
    """One set's tag batch plus the replacement hand."""

    __slots__ = ("entries", "hand")

    def __init__(self, ways: int):
        self.entries = [TagEntry() for _ in range(ways)]
        self.hand = 0

    def find(self, block_id: int):
        for way, e in enumerate(self.entries):
            if e.block_id == block_id:
                return way
        return None


class MappingResult(NamedTuple):
    transition: str | None   # None, "L->F", "F->L"
    final_way: int           # where the accessed block ended up
    flagged: bool            # filter kept the priority bit through L->F
    migrated: bool           # block moved to its static way
    demoted_ref: bool        # static occupant's ref bit was cleared instead
    evicted_block: int       # block displaced by a migration, -1 if none
    evicted_dirty: bool
    dirtied: bool            # tag content (priority/filter) changed


def classify(lookup_status: int) -> int:
    """Block type of the current access, from the tag-cache probe."""
    return LEADING if lookup_status == MISS else FOLLOWING


def filter_update(count: int, prev: int, current: int) -> int:
    """Advance a block's two-bit stability counter for one access.

    The counter follows the *observed* type sequence: a following->leading
    flip is strong evidence of instability and adds 2; every access that
    repeats the previous type decays the counter by 1, so a long stable run
    of either type cools the block back down; a leading->following flip
    leaves it untouched so the reservation decision reads the value the
    flips built up.  Saturates at [0, 3].
    """
    assert 0 <= count <= 3
    if prev == FOLLOWING and current == LEADING:
        return min(count + 2, 3)
    if prev == current:
        return max(count - 1, 0)
    return count


def priority_reservation(count: int) -> bool:
    """True when the filter vetoes the priority downgrade on L->F."""
    return count != 0


def rv_clock_victim(cset: CacheSet) -> int:
    """Pick the way a following block will overwrite.

    Invalid ways win outright (lowest index first).  Otherwise sweep from
    the persistent hand: while some following way is reclaimable, leading
    ways are skipped without touching their ref bits; if every following
    way has ref=1, the sweep widens to all ways and clears ref bits of
    leading ways it passes too.  The hand stops just past the victim.
    """
    entries = cset.entries
    for way, e in enumerate(entries):
        if not e.valid:
            return way

    restricted = any(e.priority == 0 and e.ref == 0 for e in entries)
    n = len(entries)
    w = cset.hand
    while True:
        e = entries[w]
        if restricted and e.priority:
            w = (w + 1) % n
            continue
        if e.ref:
            e.ref = 0
            w = (w + 1) % n
            continue
        cset.hand = (w + 1) % n
        return w


def clock_victim(cset: CacheSet) -> int:
    """Plain reference-bit sweep over the whole set (baseline designs)."""
    entries = cset.entries
    for way, e in enumerate(entries):
        if not e.valid:
            return way
    n = len(entries)
    w = cset.hand
    while True:
        e = entries[w]
        if e.ref:
            e.ref = 0
            w = (w + 1) % n
        else:
            cset.hand = (w + 1) % n
            return w


def leading_fill_victim(cset: CacheSet, static_way: int) -> int:
    """A leading block always lands on its static way; whoever sits there
    is the victim.  Returns the way (eviction handled by the caller)."""
    assert 0 <= static_way < len(cset.entries)
    return static_way


def apply_mapping_policy(
    cset: CacheSet,
    way: int,
    current: int,
    static_way: int,
    reservation: bool = True,
    use_filter: bool = True,
) -> MappingResult | None:
    """Reconcile a resident block's placement with its freshly observed type.

    Runs on every classified access that hits a resident entry.  Returns
    None when the stored type simply repeated (the filter counter still
    decays, but placement, priority, and dirtiness are untouched).  On a
    leading->following flip the priority bit drops unless the filter vetoes
    it.  On a following->leading flip the block must end up, in priority
    order: already static -> just raise priority; static way held by a
    recently used leading block -> clear that block's ref bit and leave the
    accessed block where it is; otherwise migrate the accessed block onto
    the static way, evicting (and writing back if dirty) the occupant.
    """
    entry = cset.entries[way]
    assert entry.valid
    stored = LEADING if entry.priority else FOLLOWING
    # Filter counters, ref bits, and the observed-type memo are working
    # state kept beside the tag cache; only durable tag content (priority,
    # placement) owes the tag row a writeback when its batch is evicted.
    # The filter watches the observed sequence, not the priority bit: a
    # reservation keeps priority at 1 through following accesses, and the
    # counter must still see those as following to decay and let go.
    dirtied = False
    if use_filter:
        entry.filter_count = filter_update(entry.filter_count,
                                           entry.last_type, current)
    entry.last_type = current

    if stored == current:
        return None

    if stored == LEADING:  # L->F
        flagged = False
        if reservation and use_filter and priority_reservation(entry.filter_count):
            flagged = True
        else:
            entry.priority = 0
            dirtied = True
        return MappingResult("L->F", way, flagged, False, False, -1, False, dirtied)

    # F->L
    if way == static_way:
        entry.priority = 1
        return MappingResult("F->L", way, False, False, False, -1, False, True)

    occupant = cset.entries[static_way]
    if occupant.valid and occupant.priority and occupant.ref:
        occupant.ref = 0
        return MappingResult("F->L", way, False, False, True, -1, False, dirtied)

    evicted_block, evicted_dirty = -1, False
    if occupant.valid:
        evicted_block, evicted_dirty = occupant.block_id, occupant.dirty
    occupant.block_id = entry.block_id
    occupant.dirty = entry.dirty
    occupant.ref = entry.ref
    occupant.filter_count = entry.filter_count
    occupant.last_type = entry.last_type
    occupant.priority = 1
    entry.reset()
    return MappingResult("F->L", static_way, False, True, False,
                         evicted_block, evicted_dirty, True)
