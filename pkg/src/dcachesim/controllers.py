"""Cache controllers for the three simulated designs.

Every read is classified against the tag cache and then labeled with one of
five path cases:

    A   tag cache hit, DRAM cache hit      (data read only)
    B1  tag fetch overlapped with the data read, block found there
    B2  tag fetch first, then the data read at the way the tags named
    C   tag cache hit, DRAM cache miss     (straight to memory)
    D   tag fetch, DRAM cache miss         (tag fetch, then memory)

The ``gemini`` design maps leading blocks statically so their tag fetch and
data read run in parallel on distinct banks (B1), falling back to a second
serialized read (B2) only when the block was stored dynamically.  The
``lh`` design is a plain set-associative cache with tags and data in the
same row, so every tag-cache miss serializes batch-then-data (B2).  The
``direct`` design probes a tag-and-data unit in one burst-extended read
(B1) and may bypass fills with a configurable probability.

Writes update in place on a hit and are forwarded to memory on a miss;
presence is assumed known to the controller (a perfect dirty-presence
predictor), so writes never generate tag traffic and are excluded from the
latency statistics.

Timing runs through a single event queue ordered by issue cycle: each
access applies its tag/placement state changes immediately (in trace
order, so replacement decisions are reproducible), then schedules its
device transactions, with dependent steps (tag fetch before the named
data read, tag fetch before the miss goes to memory, fills and
writebacks after the data lands) chained from the completion of their
parent.  Banks and channels therefore see every transaction in issue
order no matter how request paths overlap, and an access's outcome is
finalized only when the last link of its chain resolves.

Per-request byte accounting follows the structural cost of the access path
(tag batch plus one data read for a leading access, one data read for a
following hit, the memory transfer on a miss).  Maintenance traffic such as
fill writes, migrations, evicted-dirty writebacks, tag writebacks, and the
speculative static read of a B2 stays visible in the per-device transaction
summary, just not in the per-request attribution.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import NamedTuple

from .geometry import (
    CacheGeometry,
    inline_placement,
    memory_location,
    placement,
    tad_placement,
    BlockLocator,
)
from .policy import (
    CacheSet,
    FOLLOWING,
    LEADING,
    apply_mapping_policy,
    classify,
    clock_victim,
    rv_clock_victim,
)
from .tagcache import HIT, TagCache
from . import timing as tm


class Request(NamedTuple):
    cycle: int
    op: str          # "R" or "W"
    addr: int
    core: int = 0


# event dispatch codes (see _Controller.__init__)
_EV_TXN = 0
_EV_DEMAND = 1
_EV_CALL = 2
_EV_INSTALL = 3
_EV_BATCH = 4
_EV_BATCH_DEMAND = 5
_EV_B1 = 6
_EV_BATCH_THEN_DATA = 7


@dataclass(slots=True)
class AccessOutcome:
    op: str
    block_id: int
    case: str | None            # A/B1/B2/C/D for reads, None for writes
    tag_hit: bool
    dram_hit: bool
    current_type: int | None    # LEADING/FOLLOWING, None for writes
    stored_type: int | None     # type bits the block had stored, if resident
    latency: int                # -1 until the access's last transaction lands
    bytes_cache: int
    bytes_mem: int
    flagged: bool               # filter vetoed a priority downgrade


class _Controller:
    """State and helpers shared by the three designs."""

    design = "?"

    def __init__(
        self,
        geom: CacheGeometry,
        cache_timing: tm.DeviceTiming,
        mem_timing: tm.DeviceTiming,
        cpu_clock_mhz: int = 3200,
        tag_entries: int = 256,
        tag_assoc: int = 8,
        tag_latency: int = 9,
    ):
        self.geom = geom
        self.cache_dev = tm.DramDevice(cache_timing, cpu_clock_mhz, "cache")
        self.mem_dev = tm.DramDevice(mem_timing, cpu_clock_mhz, "memory")
        self.tagcache = TagCache(tag_entries, tag_assoc, tag_latency)
        self.tag_latency = tag_latency
        self.sets = [CacheSet(geom.ways_per_set) for _ in range(geom.num_sets)]
        self.where: dict[int, int] = {}
        self.block_size = geom.block_size
        self.ways = geom.ways_per_set
        self.num_sets = geom.num_sets
        self._mem_row_blocks = mem_timing.row_buffer_bytes // geom.block_size
        self._mem_banks = mem_timing.total_banks
        self.migrations = 0
        self.fills = 0
        self.bypasses = 0
        self.flag_events = 0
        self.writebacks = 0
        # The transaction event queue, ordered by (issue_cycle, seq).  The
        # common event shapes are flat tuples dispatched by a small code so
        # the hot paths allocate no closures; chained continuations (the
        # rarer B2/C/D tails) ride along as callables.  Either way a chain
        # (tag fetch -> data read -> fill) unwinds in issue order against
        # everything else in flight.
        #
        #   (when, seq, _EV_TXN,     dev, bank, row, nbytes, kind)
        #   (when, seq, _EV_DEMAND,  dev, bank, row, nbytes, kind, o, cycle)
        #   (when, seq, _EV_CALL,    fn)                    # fn(when)
        #   (when, seq, _EV_INSTALL, key)
        #   (when, seq, _EV_BATCH,   key, bank, row, nbytes, kind)
        #   (when, seq, _EV_BATCH_DEMAND, key, bank, row, nbytes, kind, o, cycle)
        #   (when, seq, _EV_B1,      key, tbank, trow, dbank, drow, nbytes, o, cycle)
        #   (when, seq, _EV_BATCH_THEN_DATA, key, bank, row, nbytes, o, cycle)
        self._events: list = []
        self._seq = 0
        # issue cycle of each in-flight batch fetch, until its read fires
        self._fetch_issue: dict[int, int] = {}
        # resolved outcomes awaiting collection by the driver
        self.outbox: list[AccessOutcome] = []

    # -- event engine ------------------------------------------------------

    def _at(self, when: int, fn):
        self._seq += 1
        heappush(self._events, (when, self._seq, _EV_CALL, fn))

    def _run_until(self, t: int):
        ev = self._events
        outbox = self.outbox
        while ev and ev[0][0] <= t:
            e = heappop(ev)
            code = e[2]
            if code == _EV_B1:
                # tag batch and static-way data read issued side by side;
                # the static read resolves the outcome (see the B1 path)
                at = e[0]
                service = self.cache_dev.service
                done, _ = service(e[4], e[5], e[8], at, tm.BATCH_READ)
                key = e[3]
                self.tagcache.set_ready(key, done)
                del self._fetch_issue[key]
                self._seq += 1
                heappush(ev, (done, self._seq, _EV_INSTALL, key))
                sdone, _ = service(e[6], e[7], e[8], at, tm.DATA_READ)
                o = e[9]
                o.latency = sdone - e[10]
                outbox.append(o)
            elif code == _EV_DEMAND:
                done, _ = e[3].service(e[4], e[5], e[6], e[0], e[7])
                o = e[8]
                o.latency = done - e[9]
                outbox.append(o)
            elif code == _EV_BATCH_THEN_DATA:
                # serialized set-associative path: batch lands, then the
                # named way is read from the same row
                done, _ = self.cache_dev.service(e[4], e[5], e[6], e[0], tm.BATCH_READ)
                key = e[3]
                self.tagcache.set_ready(key, done)
                del self._fetch_issue[key]
                seq = self._seq = self._seq + 2
                heappush(ev, (done, seq - 1, _EV_INSTALL, key))
                heappush(ev, (done, seq, _EV_DEMAND, self.cache_dev,
                              e[4], e[5], e[6], tm.DATA_READ, e[7], e[8]))
            elif code == _EV_INSTALL:
                self._install_batch(e[3], e[0])
            elif code == _EV_TXN:
                e[3].service(e[4], e[5], e[6], e[0], e[7])
            elif code == _EV_CALL:
                e[3](e[0])
            else:  # _EV_BATCH or _EV_BATCH_DEMAND
                done, _ = self.cache_dev.service(e[4], e[5], e[6], e[0], e[7])
                key = e[3]
                self.tagcache.set_ready(key, done)
                del self._fetch_issue[key]
                self._seq += 1
                heappush(ev, (done, self._seq, _EV_INSTALL, key))
                if code == _EV_BATCH_DEMAND:
                    o = e[8]
                    o.latency = done - e[9]
                    outbox.append(o)

    def flush(self):
        """Resolve every pending transaction chain."""
        self._run_until(1 << 62)

    def _txn(self, dev, bank: int, row: int, nbytes: int, kind: str, when: int):
        """Schedule a stand-alone transaction nothing waits for."""
        self._seq += 1
        heappush(self._events, (when, self._seq, _EV_TXN, dev, bank, row, nbytes, kind))

    def _demand(self, dev, bank, row, nbytes, kind, when, o: AccessOutcome, cycle):
        """Schedule the read whose completion resolves the outcome."""
        self._seq += 1
        heappush(self._events,
                 (when, self._seq, _EV_DEMAND, dev, bank, row, nbytes, kind, o, cycle))

    # -- shared pieces -----------------------------------------------------

    def _mem_place(self, block_id: int):
        return memory_location(
            block_id, self.mem_dev.timing.row_buffer_bytes, self.block_size, self._mem_banks
        )

    def _mem_write_now(self, block_id: int, issue: int) -> int:
        bank, row = self._mem_place(block_id)
        done, _ = self.mem_dev.service(bank, row, self.block_size, issue, tm.MEM_WRITE)
        return done

    def _writeback(self, block_id: int, issue: int):
        self.writebacks += 1
        bank, row = self._mem_place(block_id)
        self._txn(self.mem_dev, bank, row, self.block_size, tm.MEM_WRITE, issue)

    def _batch_fetch(self, key: int, bank: int, row: int, nbytes: int,
                     kind: str, when: int, then=None):
        """Schedule the in-DRAM tag read for `key`.

        When the read fires its completion becomes the batch's ready cycle,
        the install (with any dirty-victim writeback) is queued for that
        cycle, and `then(done)` chains whatever the access still owes.
        """
        self.tagcache.begin_fetch(key)
        self._fetch_issue[key] = when
        if then is None:
            self._seq += 1
            heappush(self._events, (when, self._seq, _EV_BATCH, key, bank, row, nbytes, kind))
            return

        def fire(at):
            done, _ = self.cache_dev.service(bank, row, nbytes, at, kind)
            self.tagcache.set_ready(key, done)
            del self._fetch_issue[key]
            self._seq += 1
            heappush(self._events, (done, self._seq, _EV_INSTALL, key))
            then(done)

        self._at(when, fire)

    def _install_batch(self, key: int, at: int):
        victim, dirty = self.tagcache.install(key)
        if victim is not None and dirty:
            self._batch_writeback(victim, at)

    def _await_batch(self, key: int, t_tags: int) -> int:
        """Wait for an in-flight batch; returns when the tags are usable."""
        ready = self.tagcache.inflight_ready(key)
        if ready is None:
            # The fetch was begun moments ago and its read has not issued
            # yet; advancing to its issue cycle (at most tag_latency ahead)
            # fixes the ready cycle without reordering anything.
            self._run_until(self._fetch_issue[key])
            ready = self.tagcache.inflight_ready(key)
        return ready if ready > t_tags else t_tags

    def _batch_writeback(self, key: int, issue: int):
        raise NotImplementedError

    def stats(self) -> dict:
        return {
            "migrations": self.migrations,
            "fills": self.fills,
            "bypasses": self.bypasses,
            "filter_flag_events": self.flag_events,
            "dirty_writebacks": self.writebacks,
            "tag_cache_lookups": self.tagcache.lookups,
            "tag_cache_hits": self.tagcache.hits,
        }


class GeminiController(_Controller):
    """Hybrid-mapped design: static leading blocks, dynamic following blocks."""

    design = "gemini"

    def __init__(self, *args, reservation: bool = True, use_filter: bool = True, **kw):
        super().__init__(*args, **kw)
        self.reservation = reservation
        self.use_filter = use_filter
        geom = self.geom
        nb = self.cache_dev.timing.total_banks
        self.data_bank = [0] * geom.num_sets
        self.data_row = [0] * geom.num_sets
        self.tag_bank = [0] * geom.num_sets
        self.tag_row = [0] * geom.num_sets
        for s in range(geom.num_sets):
            p = placement(BlockLocator(0, 0, s, 0), geom, nb)
            self.data_bank[s] = p.data_bank
            self.data_row[s] = p.data_row
            self.tag_bank[s] = p.tag_bank
            self.tag_row[s] = p.tag_row

    def _batch_writeback(self, key: int, issue: int):
        self._txn(self.cache_dev, self.tag_bank[key], self.tag_row[key],
                  self.block_size, tm.BATCH_WRITE, issue)

    def access(self, cycle: int, op: str, addr: int) -> AccessOutcome:
        bsz = self.block_size
        block = addr // bsz
        ways = self.ways
        set_index = (block // ways) % self.num_sets
        static_way = block % ways
        ev = self._events
        if ev and ev[0][0] <= cycle:
            self._run_until(cycle)

        way = self.where.get(block)

        if op == "W":
            if way is not None:
                e = self.sets[set_index].entries[way]
                if not e.dirty:
                    e.dirty = True
                    self.tagcache.mark_dirty(set_index)
                e.ref = 1
                done, _ = self.cache_dev.service(
                    self.data_bank[set_index], self.data_row[set_index],
                    bsz, cycle, tm.DATA_WRITE,
                )
                o = AccessOutcome("W", block, None, False, True, None, None,
                                  done - cycle, bsz, 0, False)
            else:
                done = self._mem_write_now(block, cycle)
                o = AccessOutcome("W", block, None, False, False, None, None,
                                  done - cycle, 0, bsz, False)
            self.outbox.append(o)
            return o

        status = self.tagcache.lookup(set_index)
        current = classify(status)
        t_tags = cycle + self.tag_latency
        cset = self.sets[set_index]
        stored = None
        if way is not None:
            stored = LEADING if cset.entries[way].priority else FOLLOWING
        dbank = self.data_bank[set_index]
        drow = self.data_row[set_index]

        if current == FOLLOWING:
            start = t_tags if status == HIT else self._await_batch(set_index, t_tags)
            if way is not None:
                res = apply_mapping_policy(cset, way, FOLLOWING, static_way,
                                           self.reservation, self.use_filter)
                flagged = False
                if res is None:
                    cset.entries[way].ref = 1
                else:
                    cset.entries[res.final_way].ref = 1
                    if res.dirtied:
                        self.tagcache.mark_dirty(set_index)
                    if res.flagged:
                        flagged = True
                        self.flag_events += 1
                o = AccessOutcome("R", block, "A", True, True, FOLLOWING, stored,
                                  -1, bsz, 0, flagged)
                self._demand(self.cache_dev, dbank, drow, bsz, tm.DATA_READ,
                             start, o, cycle)
                return o
            wb = self._fill_following(cset, set_index, block)
            o = AccessOutcome("R", block, "C", True, False, FOLLOWING, stored,
                              -1, 0, bsz, False)
            mbank, mrow = self._mem_place(block)

            def fire_mem(at):
                done, _ = self.mem_dev.service(mbank, mrow, bsz, at, tm.MEM_READ)
                if wb >= 0:
                    self._writeback(wb, done)
                self._txn(self.cache_dev, dbank, drow, bsz, tm.FILL_WRITE, done)
                o.latency = done - cycle
                self.outbox.append(o)

            self._at(start, fire_mem)
            return o

        # Leading: batch fetch and static-way data read go out in parallel.
        if way is not None and way == static_way:
            # The static read is the critical path: its data is consumed
            # as soon as it lands, with the batch confirming the match
            # asynchronously (a mismatch would have taken the B2 path).
            res = apply_mapping_policy(cset, way, LEADING, static_way,
                                       self.reservation, self.use_filter)
            if res is None:
                cset.entries[way].ref = 1
            else:
                cset.entries[res.final_way].ref = 1
                if res.dirtied:
                    self.tagcache.mark_dirty(set_index)
            o = AccessOutcome("R", block, "B1", False, True, LEADING, stored,
                              -1, 2 * bsz, 0, False)
            self.tagcache.begin_fetch(set_index)
            self._fetch_issue[set_index] = t_tags
            self._seq += 1
            heappush(self._events,
                     (t_tags, self._seq, _EV_B1, set_index,
                      self.tag_bank[set_index], self.tag_row[set_index],
                      dbank, drow, bsz, o, cycle))
            return o

        tbank = self.tag_bank[set_index]
        trow = self.tag_row[set_index]
        if way is not None:
            # Stored dynamically: the tags name the way, read it after they land.
            res = apply_mapping_policy(cset, way, LEADING, static_way,
                                       self.reservation, self.use_filter)
            migrated = False
            wb = -1
            if res is None:
                cset.entries[way].ref = 1
            else:
                if res.migrated:
                    migrated = True
                    self.migrations += 1
                    self.where[block] = res.final_way
                    if res.evicted_block >= 0:
                        del self.where[res.evicted_block]
                        if res.evicted_dirty:
                            wb = res.evicted_block
                cset.entries[res.final_way].ref = 1
                if res.dirtied:
                    self.tagcache.mark_dirty(set_index)
            o = AccessOutcome("R", block, "B2", False, True, LEADING, stored,
                              -1, 2 * bsz, 0, False)
            self.tagcache.begin_fetch(set_index)
            self._fetch_issue[set_index] = t_tags

            def fire_data(at):
                done, _ = self.cache_dev.service(dbank, drow, bsz, at, tm.DATA_READ)
                if migrated:
                    self._txn(self.cache_dev, dbank, drow, bsz, tm.MIGRATE_READ, done)
                    self._txn(self.cache_dev, dbank, drow, bsz, tm.MIGRATE_WRITE, done)
                    if wb >= 0:
                        self._writeback(wb, done)
                o.latency = done - cycle
                self.outbox.append(o)

            def fire_batch(at):
                service = self.cache_dev.service
                ready, _ = service(tbank, trow, bsz, at, tm.BATCH_READ)
                self.tagcache.set_ready(set_index, ready)
                del self._fetch_issue[set_index]
                self._seq += 1
                heappush(self._events, (ready, self._seq, _EV_INSTALL, set_index))
                service(dbank, drow, bsz, at, tm.DATA_READ)  # wasted static read
                self._at(ready, fire_data)

            self._at(t_tags, fire_batch)
            return o

        # Leading miss: memory fetch starts once the batch confirms absence.
        occ = cset.entries[static_way]
        wb = -1
        if occ.valid:
            del self.where[occ.block_id]
            if occ.dirty:
                wb = occ.block_id
        occ.reset()
        occ.block_id = block
        occ.priority = 1
        occ.ref = 1
        self.where[block] = static_way
        self.fills += 1
        self.tagcache.mark_dirty(set_index)
        o = AccessOutcome("R", block, "D", False, False, LEADING, stored,
                          -1, 2 * bsz, bsz, False)
        mbank, mrow = self._mem_place(block)
        self.tagcache.begin_fetch(set_index)
        self._fetch_issue[set_index] = t_tags

        def fire_mem(at):
            done, _ = self.mem_dev.service(mbank, mrow, bsz, at, tm.MEM_READ)
            if wb >= 0:
                self._writeback(wb, done)
            self._txn(self.cache_dev, dbank, drow, bsz, tm.FILL_WRITE, done)
            o.latency = done - cycle
            self.outbox.append(o)

        def fire_batch(at):
            service = self.cache_dev.service
            ready, _ = service(tbank, trow, bsz, at, tm.BATCH_READ)
            self.tagcache.set_ready(set_index, ready)
            del self._fetch_issue[set_index]
            self._seq += 1
            heappush(self._events, (ready, self._seq, _EV_INSTALL, set_index))
            service(dbank, drow, bsz, at, tm.DATA_READ)  # wasted static read
            self._at(ready, fire_mem)

        self._at(t_tags, fire_batch)
        return o

    def _fill_following(self, cset, set_index: int, block: int) -> int:
        """Install into an RV-CLOCK victim; returns the dirty evictee or -1."""
        way = rv_clock_victim(cset)
        e = cset.entries[way]
        wb = -1
        if e.valid:
            del self.where[e.block_id]
            if e.dirty:
                wb = e.block_id
        e.reset()
        e.block_id = block
        e.ref = 1
        e.last_type = FOLLOWING
        self.where[block] = way
        self.fills += 1
        self.tagcache.mark_dirty(set_index)
        return wb


class LHController(_Controller):
    """Set-associative baseline: tags and data share a row, plain CLOCK."""

    design = "lh"

    def __init__(self, *args, **kw):
        super().__init__(*args, **kw)
        nb = self.cache_dev.timing.total_banks
        self.row_bank = [0] * self.geom.num_sets
        self.row_id = [0] * self.geom.num_sets
        for s in range(self.geom.num_sets):
            bank, row = inline_placement(s, self.geom, nb)
            self.row_bank[s] = bank
            self.row_id[s] = row

    def _batch_writeback(self, key: int, issue: int):
        self._txn(self.cache_dev, self.row_bank[key], self.row_id[key],
                  self.block_size, tm.BATCH_WRITE, issue)

    def access(self, cycle: int, op: str, addr: int) -> AccessOutcome:
        bsz = self.block_size
        block = addr // bsz
        set_index = (block // self.ways) % self.num_sets
        ev = self._events
        if ev and ev[0][0] <= cycle:
            self._run_until(cycle)
        way = self.where.get(block)
        bank = self.row_bank[set_index]
        row = self.row_id[set_index]

        if op == "W":
            if way is not None:
                e = self.sets[set_index].entries[way]
                if not e.dirty:
                    e.dirty = True
                    self.tagcache.mark_dirty(set_index)
                e.ref = 1
                done, _ = self.cache_dev.service(bank, row, bsz, cycle, tm.DATA_WRITE)
                o = AccessOutcome("W", block, None, False, True, None, None,
                                  done - cycle, bsz, 0, False)
            else:
                done = self._mem_write_now(block, cycle)
                o = AccessOutcome("W", block, None, False, False, None, None,
                                  done - cycle, 0, bsz, False)
            self.outbox.append(o)
            return o

        status = self.tagcache.lookup(set_index)
        current = classify(status)
        t_tags = cycle + self.tag_latency
        cset = self.sets[set_index]

        if current == FOLLOWING:
            start = t_tags if status == HIT else self._await_batch(set_index, t_tags)
            if way is not None:
                cset.entries[way].ref = 1
                o = AccessOutcome("R", block, "A", True, True, FOLLOWING, None,
                                  -1, bsz, 0, False)
                self._demand(self.cache_dev, bank, row, bsz, tm.DATA_READ,
                             start, o, cycle)
                return o
            wb = self._fill(cset, set_index, block)
            o = AccessOutcome("R", block, "C", True, False, FOLLOWING, None,
                              -1, 0, bsz, False)
            self._chain_mem_fill(o, cycle, block, wb, bank, row, bsz, start)
            return o

        # Tag-cache miss: the batch read must complete before anything else.
        if way is not None:
            cset.entries[way].ref = 1
            o = AccessOutcome("R", block, "B2", False, True, LEADING, None,
                              -1, 2 * bsz, 0, False)
            self.tagcache.begin_fetch(set_index)
            self._fetch_issue[set_index] = t_tags
            self._seq += 1
            heappush(self._events, (t_tags, self._seq, _EV_BATCH_THEN_DATA,
                                    set_index, bank, row, bsz, o, cycle))
            return o

        wb = self._fill(cset, set_index, block)
        o = AccessOutcome("R", block, "D", False, False, LEADING, None,
                          -1, bsz, bsz, False)
        self._batch_fetch(
            set_index, bank, row, bsz, tm.BATCH_READ, t_tags,
            then=lambda ready: self._chain_mem_fill(o, cycle, block, wb,
                                                    bank, row, bsz, ready),
        )
        return o

    def _chain_mem_fill(self, o, cycle, block, wb, bank, row, fill_bytes, start):
        """Memory read at `start`, then the fill write and any writeback."""
        mbank, mrow = self._mem_place(block)

        def fire_mem(at):
            done, _ = self.mem_dev.service(mbank, mrow, self.block_size, at, tm.MEM_READ)
            if wb >= 0:
                self._writeback(wb, done)
            self._txn(self.cache_dev, bank, row, fill_bytes, tm.FILL_WRITE, done)
            o.latency = done - cycle
            self.outbox.append(o)

        self._at(start, fire_mem)

    def _fill(self, cset, set_index: int, block: int) -> int:
        way = clock_victim(cset)
        e = cset.entries[way]
        wb = -1
        if e.valid:
            del self.where[e.block_id]
            if e.dirty:
                wb = e.block_id
        e.reset()
        e.block_id = block
        e.ref = 1
        self.where[block] = way
        self.fills += 1
        self.tagcache.mark_dirty(set_index)
        return wb


class DirectController(_Controller):
    """Direct-mapped baseline with tag-and-data units and optional bypass."""

    design = "direct"

    # One extra bus beat carries the unit's tag pair alongside the block.
    TAG_BURST_BYTES = 32

    def __init__(self, *args, p_bypass: float = 0.0, seed: int = 0, **kw):
        super().__init__(*args, **kw)
        if self.geom.ways_per_set != 1:
            raise ValueError("direct-mapped design requires ways_per_set = 1")
        if not 0.0 <= p_bypass <= 1.0:
            raise ValueError(f"p_bypass must be in [0, 1], got {p_bypass}")
        self.p_bypass = p_bypass
        self.rng = random.Random(seed ^ 0x5EED)
        nb = self.cache_dev.timing.total_banks
        self.line_bank = [0] * self.geom.num_sets
        self.line_row = [0] * self.geom.num_sets
        for line in range(self.geom.num_sets):
            bank, row = tad_placement(line, self.geom, nb)
            self.line_bank[line] = bank
            self.line_row[line] = row

    def _batch_writeback(self, key: int, issue: int):
        pass  # cached tags are knowledge only; fills rewrite the unit's tag

    def access(self, cycle: int, op: str, addr: int) -> AccessOutcome:
        bsz = self.block_size
        block = addr // bsz
        line = block % self.num_sets
        ev = self._events
        if ev and ev[0][0] <= cycle:
            self._run_until(cycle)
        entry = self.sets[line].entries[0]
        present = entry.block_id == block
        bank = self.line_bank[line]
        row = self.line_row[line]

        if op == "W":
            if present:
                entry.dirty = True
                done, _ = self.cache_dev.service(bank, row, bsz, cycle, tm.DATA_WRITE)
                o = AccessOutcome("W", block, None, False, True, None, None,
                                  done - cycle, bsz, 0, False)
            else:
                done = self._mem_write_now(block, cycle)
                o = AccessOutcome("W", block, None, False, False, None, None,
                                  done - cycle, 0, bsz, False)
            self.outbox.append(o)
            return o

        status = self.tagcache.lookup(line)
        current = classify(status)
        t_tags = cycle + self.tag_latency

        if current == FOLLOWING:
            start = t_tags if status == HIT else self._await_batch(line, t_tags)
            if present:
                o = AccessOutcome("R", block, "A", True, True, FOLLOWING, None,
                                  -1, bsz, 0, False)
                self._demand(self.cache_dev, bank, row, bsz, tm.DATA_READ,
                             start, o, cycle)
                return o
            wb = self._fill(entry, line, block)
            o = AccessOutcome("R", block, "C", True, False, FOLLOWING, None,
                              -1, 0, bsz, False)
            self._chain_mem_fill(o, cycle, block, wb, line, start)
            return o

        # Probe the tag-and-data unit in one burst-extended read.
        probe_bytes = bsz + self.TAG_BURST_BYTES
        neighbor = (line + 1) % self.num_sets
        if not self.tagcache.is_resident(neighbor) and not self.tagcache.is_inflight(neighbor):
            self.tagcache.update_hint(neighbor)

        if present:
            o = AccessOutcome("R", block, "B1", False, True, LEADING, None,
                              -1, probe_bytes, 0, False)
            self.tagcache.begin_fetch(line)
            self._fetch_issue[line] = t_tags
            self._seq += 1
            heappush(self._events, (t_tags, self._seq, _EV_BATCH_DEMAND,
                                    line, bank, row, probe_bytes, tm.TAD_READ, o, cycle))
            return o

        wb = self._fill(entry, line, block)
        o = AccessOutcome("R", block, "D", False, False, LEADING, None,
                          -1, probe_bytes, bsz, False)
        self._batch_fetch(
            line, bank, row, probe_bytes, tm.TAD_READ, t_tags,
            then=lambda ready: self._chain_mem_fill(o, cycle, block, wb, line, ready),
        )
        return o

    def _chain_mem_fill(self, o, cycle, block, wb, line, start):
        """Memory read at `start`; the unit (tags included) rewrites after."""
        mbank, mrow = self._mem_place(block)
        filled = wb is not None

        def fire_mem(at):
            done, _ = self.mem_dev.service(mbank, mrow, self.block_size, at, tm.MEM_READ)
            if filled:
                if wb >= 0:
                    self._writeback(wb, done)
                self._txn(self.cache_dev, self.line_bank[line], self.line_row[line],
                          self.block_size + self.TAG_BURST_BYTES, tm.FILL_WRITE, done)
            o.latency = done - cycle
            self.outbox.append(o)

        self._at(start, fire_mem)

    def _fill(self, entry, line: int, block: int):
        """Install unless bypassed; returns the dirty evictee, -1, or None
        when the fill was bypassed entirely."""
        if self.p_bypass and self.rng.random() < self.p_bypass:
            self.bypasses += 1
            return None
        wb = -1
        if entry.valid and entry.dirty:
            wb = entry.block_id
        entry.reset()
        entry.block_id = block
        self.fills += 1
        return wb


DESIGNS = ("gemini", "lh", "direct")


def make_controller(design: str, geom: CacheGeometry, cache_timing, mem_timing,
                    cpu_clock_mhz=3200, tag_entries=256, tag_assoc=8, tag_latency=9,
                    reservation=True, use_filter=True, p_bypass=0.0, seed=0):
    if design == "gemini":
        return GeminiController(geom, cache_timing, mem_timing, cpu_clock_mhz,
                                tag_entries, tag_assoc, tag_latency,
                                reservation=reservation, use_filter=use_filter)
    if design == "lh":
        return LHController(geom, cache_timing, mem_timing, cpu_clock_mhz,
                            tag_entries, tag_assoc, tag_latency)
    if design == "direct":
        return DirectController(geom, cache_timing, mem_timing, cpu_clock_mhz,
                                tag_entries, tag_assoc, tag_latency,
                                p_bypass=p_bypass, seed=seed)
    raise ValueError(f"unknown design {design!r}; expected one of {DESIGNS}")
