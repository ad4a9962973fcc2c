"""SRAM tag-cache tests: LRU behavior, the in-flight window, dirty marks.

The default shape is 256 entries, 8-way, so 32 sets indexed by the low
five bits of the key.  Keys that are multiples of 32 therefore all fall
into set 0, which the LRU tests use to force evictions.
"""

import random

import pytest

from dcachesim.tagcache import HIT, INFLIGHT, MISS, TagCache


def test_shape_validation():
    with pytest.raises(ValueError):
        TagCache(num_entries=0)
    with pytest.raises(ValueError):
        TagCache(num_entries=100, assoc=8)   # not divisible
    with pytest.raises(ValueError):
        TagCache(num_entries=96, assoc=8)    # 12 sets, not a power of two
    tc = TagCache(num_entries=256, assoc=8)
    assert tc.num_sets == 32


def test_miss_then_install_then_hit():
    tc = TagCache()
    assert tc.lookup(5) == MISS
    tc.begin_fetch(5)
    assert tc.lookup(5) == INFLIGHT
    assert tc.install(5) == (None, False)
    assert tc.lookup(5) == HIT
    assert tc.lookups == 3
    assert tc.hits == 1
    assert tc.hit_rate() == pytest.approx(1 / 3)


def test_hit_rate_empty():
    assert TagCache().hit_rate() == 0.0


def test_inflight_ready_cycle():
    tc = TagCache()
    tc.begin_fetch(9)
    assert tc.inflight_ready(9) is None
    tc.set_ready(9, 480)
    assert tc.inflight_ready(9) == 480
    assert tc.is_inflight(9)
    tc.install(9)
    assert not tc.is_inflight(9)
    assert tc.is_resident(9)


def test_begin_fetch_with_ready():
    tc = TagCache()
    tc.begin_fetch(4, ready_cycle=100)
    assert tc.inflight_ready(4) == 100


def test_lru_eviction_order():
    tc = TagCache(num_entries=256, assoc=8)
    keys = [32 * i for i in range(8)]     # all in set 0
    for k in keys:
        tc.begin_fetch(k)
        tc.install(k)
    # touch key 0 so key 32 becomes the oldest
    assert tc.lookup(0) == HIT
    tc.begin_fetch(256 * 32)
    victim, dirty = tc.install(256 * 32)
    assert victim == 32
    assert dirty is False
    assert tc.lookup(32) == MISS
    assert tc.lookup(0) == HIT


def test_dirty_mark_travels_with_eviction():
    tc = TagCache(num_entries=256, assoc=8)
    for i in range(8):
        tc.begin_fetch(32 * i)
        tc.install(32 * i)
    tc.mark_dirty(0)
    tc.lookup(32)   # refresh 32; key 0 is now oldest despite being dirty
    for i in range(8, 15):
        tc.lookup(32 * i)
    tc.begin_fetch(32 * 20)
    victim, dirty = tc.install(32 * 20)
    assert victim == 0
    assert dirty is True


def test_dirty_mark_on_inflight_batch_sticks():
    # a fill that lands while its batch is still being fetched must not
    # lose the writeback obligation
    tc = TagCache()
    tc.begin_fetch(7)
    tc.mark_dirty(7)
    tc.install(7)
    for i in range(1, 8):
        tc.begin_fetch(7 + 32 * i)
        tc.install(7 + 32 * i)
    tc.begin_fetch(7 + 32 * 8)
    victim, dirty = tc.install(7 + 32 * 8)
    assert victim == 7
    assert dirty is True


def test_mark_dirty_unknown_key_is_ignored():
    tc = TagCache()
    tc.mark_dirty(99)    # neither resident nor in flight: nothing to record
    tc.begin_fetch(99)
    tc.install(99)
    for i in range(1, 9):
        tc.begin_fetch(99 + 32 * i)
        tc.install(99 + 32 * i)
    # 99 was evicted clean
    assert not tc.is_resident(99)


def test_update_hint_refreshes_without_counting():
    tc = TagCache()
    tc.begin_fetch(3)
    tc.install(3)
    before = tc.lookups
    assert tc.update_hint(3) == (None, False)
    assert tc.lookups == before
    # hint-installed keys enter clean and count no lookup either
    tc.update_hint(35)
    assert tc.is_resident(35)
    assert tc.lookups == before


def test_update_hint_can_evict():
    tc = TagCache(num_entries=256, assoc=8)
    for i in range(8):
        tc.begin_fetch(32 * i)
        tc.install(32 * i)
    tc.mark_dirty(0)
    victim, dirty = tc.update_hint(32 * 9)
    assert victim == 0
    assert dirty is True


def test_double_begin_fetch_asserts():
    tc = TagCache()
    tc.begin_fetch(1)
    with pytest.raises(AssertionError):
        tc.begin_fetch(1)


def test_set_ready_requires_inflight():
    tc = TagCache()
    with pytest.raises(AssertionError):
        tc.set_ready(1, 10)


class TestAgainstReferenceModel:
    """Randomized comparison with a dict-of-lists LRU model."""

    def run_trial(self, seed, ops=4000):
        rng = random.Random(seed)
        tc = TagCache(num_entries=64, assoc=4)      # 16 sets
        model = {s: [] for s in range(16)}          # MRU last
        model_dirty = {}
        inflight = set()
        inflight_dirty = set()
        keys = list(range(200))
        for _ in range(ops):
            key = rng.choice(keys)
            s = key & 15
            action = rng.random()
            if action < 0.55:
                got = tc.lookup(key)
                if key in model[s]:
                    want = HIT
                    model[s].remove(key)
                    model[s].append(key)
                elif key in inflight:
                    want = INFLIGHT
                else:
                    want = MISS
                assert got == want, key
                if want == MISS and rng.random() < 0.8:
                    tc.begin_fetch(key)
                    inflight.add(key)
            elif action < 0.75:
                if key in model[s]:
                    tc.mark_dirty(key)
                    model_dirty[key] = True
                elif key in inflight:
                    tc.mark_dirty(key)
                    inflight_dirty.add(key)
            else:
                if key in inflight:
                    victim, dirty = tc.install(key)
                    inflight.discard(key)
                    want_victim, want_dirty = None, False
                    if len(model[s]) >= 4:
                        want_victim = model[s].pop(0)
                        want_dirty = model_dirty.pop(want_victim, False)
                    model[s].append(key)
                    model_dirty[key] = key in inflight_dirty
                    inflight_dirty.discard(key)
                    assert victim == want_victim
                    assert dirty == (want_dirty or False)
        # final residency agreement
        for s in range(16):
            for key in model[s]:
                assert tc.is_resident(key)

    def test_seeded_trials(self):
        for seed in (1, 2, 3, 12, 77):
            self.run_trial(seed)
