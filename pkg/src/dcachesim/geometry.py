"""Address arithmetic for a die-stacked DRAM cache.

The cache is organized as sets of `ways_per_set` blocks.  A *section* is the
aligned group of `ways_per_set` consecutive blocks that shares one set, so a
physical address breaks down as

    block_id    = addr // block_size
    section_id  = block_id // ways_per_set
    set_index   = section_id mod num_sets
    static_way  = block_id mod ways_per_set

`static_way` is the way a block occupies under static (direct) placement
inside its set; dynamically placed blocks may sit at any way.  Reconstructing
``block_id = section_id * ways_per_set + static_way`` is exact, so
(section_id, static_way) <-> block_id is a bijection.

Row placement puts data rows and tag rows of the same set in *different*
banks so a tag read and a data read can proceed in parallel.  One tag row
holds the tag batches of `row_size // batch` consecutive sets; its bank is
chosen deterministically to avoid the data banks of every set it covers.
Two sibling layouts are provided for the baseline designs: an inline layout
that keeps a set's tags and data in the same row (set-associative baseline),
and a tag-and-data (TAD) layout that packs tag+block units back to back
(direct-mapped baseline).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

# Tag rows live in a separate row-id space so they never collide with a data
# row that the bank-assignment scheme happens to place in the same bank.
TAG_ROW_BASE = 1 << 30


@dataclass(frozen=True)
class CacheGeometry:
    """Static shape of the DRAM cache array.

    Capacity must divide evenly into sets, and a whole set (data) must fit
    in one DRAM row; slack at the end of a row is left unused.
    """

    block_size: int = 64
    ways_per_set: int = 16
    cache_capacity: int = 4 * 1024 * 1024
    row_size: int = 2048
    tag_size: int = 4

    def __post_init__(self):
        if self.block_size <= 0 or self.block_size & (self.block_size - 1):
            raise ValueError(f"block_size must be a power of two, got {self.block_size}")
        if self.ways_per_set < 1:
            raise ValueError(f"ways_per_set must be >= 1, got {self.ways_per_set}")
        set_bytes = self.block_size * self.ways_per_set
        if self.cache_capacity % set_bytes:
            raise ValueError(
                f"cache_capacity {self.cache_capacity} is not divisible by the "
                f"set size {set_bytes}"
            )
        if set_bytes > self.row_size:
            raise ValueError(
                f"a set ({set_bytes} B) must fit in one row ({self.row_size} B)"
            )
        if self.ways_per_set * self.tag_size > self.block_size:
            raise ValueError("tag batch must fit in a single block-sized burst")

    @property
    def num_sets(self) -> int:
        return self.cache_capacity // (self.block_size * self.ways_per_set)

    @property
    def num_blocks(self) -> int:
        return self.cache_capacity // self.block_size

    @property
    def section_bytes(self) -> int:
        return self.block_size * self.ways_per_set

    @property
    def batch_bytes(self) -> int:
        """Raw size of one set's tag batch."""
        return self.ways_per_set * self.tag_size

    @property
    def batch_transfer_bytes(self) -> int:
        """A tag batch is always moved as one block-sized burst."""
        return self.block_size

    @property
    def sets_per_row(self) -> int:
        return self.row_size // self.section_bytes

    @property
    def batches_per_tag_row(self) -> int:
        return self.row_size // self.batch_transfer_bytes


class BlockLocator(NamedTuple):
    block_id: int
    section_id: int
    set_index: int
    static_way: int


class Placement(NamedTuple):
    data_bank: int
    data_row: int
    tag_bank: int
    tag_row: int


def locate(addr: int, geom: CacheGeometry) -> BlockLocator:
    """Decompose a physical byte address into cache coordinates."""
    assert addr >= 0
    block_id = addr // geom.block_size
    section_id = block_id // geom.ways_per_set
    return BlockLocator(
        block_id=block_id,
        section_id=section_id,
        set_index=section_id % geom.num_sets,
        static_way=block_id % geom.ways_per_set,
    )


def locator_block_id(loc: BlockLocator, geom: CacheGeometry) -> int:
    """Inverse of locate() up to the block granularity."""
    return loc.section_id * geom.ways_per_set + loc.static_way


def data_bank_of(set_index: int, geom: CacheGeometry, num_banks: int) -> int:
    return (set_index // geom.sets_per_row) % num_banks


def tag_bank_count(num_banks: int) -> int:
    """Number of banks reserved for tag rows in the hybrid layout."""
    return max(1, num_banks // 4)


def placement(loc: BlockLocator, geom: CacheGeometry, num_banks: int = 64) -> Placement:
    """Map a set to its data row and tag row (hybrid layout).

    The top quarter of the banks is reserved for tag rows and the rest hold
    data rows, so a tag fetch never lands on the data bank of *any* set and
    the parallel tag+data reads of a leading access always use distinct
    banks.  Both row kinds spread round-robin over their bank group.
    """
    tag_banks = tag_bank_count(num_banks)
    data_banks = num_banks - tag_banks
    if data_banks < 1:
        raise ValueError(
            f"cannot split {num_banks} banks into data and tag groups"
        )
    row_group = loc.set_index // geom.sets_per_row
    data_bank = row_group % data_banks
    data_row = row_group // data_banks

    tag_group = loc.set_index // geom.batches_per_tag_row
    tag_bank = data_banks + tag_group % tag_banks
    return Placement(data_bank, data_row, tag_bank, TAG_ROW_BASE + tag_group)


def inline_placement(set_index: int, geom: CacheGeometry, num_banks: int = 64):
    """Row placement with a set's tags and data co-located in one row.

    Returns (bank, row).  Used by the set-associative baseline, where the
    tag batch read opens the row and the subsequent data read hits in it.
    """
    unit = geom.ways_per_set * (geom.block_size + geom.tag_size)
    per_row = max(1, geom.row_size // unit)
    row_group = set_index // per_row
    return row_group % num_banks, row_group // num_banks


def tad_placement(line_index: int, geom: CacheGeometry, num_banks: int = 64):
    """Row placement for tag-and-data (TAD) units of a direct-mapped cache.

    Returns (bank, row).  Each unit is one block plus its tag, so fewer
    units fit per row than plain blocks would.
    """
    per_row = geom.row_size // (geom.block_size + geom.tag_size)
    row_group = line_index // per_row
    return row_group % num_banks, row_group // num_banks


def memory_location(block_id: int, row_size: int, block_size: int, num_banks: int):
    """Map a block to its main-memory bank and row.

    Consecutive row-sized chunks interleave across all banks of all
    channels, which is what gives independent requests their bank-level
    parallelism on the memory side.
    """
    row_group = block_id // (row_size // block_size)
    return row_group % num_banks, row_group // num_banks
