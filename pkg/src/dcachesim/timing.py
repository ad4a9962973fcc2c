"""Cycle-level DRAM device model (open-page, FCFS per channel).

All durations are CPU cycles.  A transaction's service time depends on the
state the bank row buffer is in when it starts:

    row hit        tCAS + burst
    closed bank    tRCD + tCAS + burst
    row conflict   tRP + tRCD + tCAS + burst

plus a tRAS constraint: a row may not be precharged earlier than tRAS after
its activation, so back-to-back conflicts on one bank stall.  Column accesses
to an open row pipeline: the access latency overlaps the next command, so a
bank is occupied per access only for the data burst (plus any activate or
precharge work), and a stream of row hits is limited by the bus, not by the
CAS latency.  Bursts on one channel are serialized first-come first-served.
Queuing delay is everything a transaction waits beyond its own service
components (bank busy, tRAS stall, bus busy).
"""

from __future__ import annotations

from dataclasses import dataclass

# Transaction kinds, used for the per-device traffic summary.
DATA_READ = "data_read"
DATA_WRITE = "data_write"
BATCH_READ = "batch_read"
BATCH_WRITE = "batch_write"
TAD_READ = "tad_read"
MIGRATE_READ = "migrate_read"
MIGRATE_WRITE = "migrate_write"
FILL_WRITE = "fill_write"
MEM_READ = "mem_read"
MEM_WRITE = "mem_write"


@dataclass(frozen=True)
class DeviceTiming:
    """Timing and topology parameters of one DRAM device."""

    tcas: int = 36
    trcd: int = 36
    trp: int = 36
    tras: int = 144
    channels: int = 4
    banks: int = 16           # banks per rank (per channel)
    bus_width_bits: int = 128
    bus_clock_mhz: int = 1600
    row_buffer_bytes: int = 2048

    def __post_init__(self):
        for name in ("tcas", "trcd", "trp", "tras"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.channels < 1 or self.banks < 1:
            raise ValueError("device needs at least one channel and one bank")
        if self.bus_width_bits % 8:
            raise ValueError("bus_width_bits must be a multiple of 8")

    @property
    def total_banks(self) -> int:
        return self.channels * self.banks

    def clock_ratio(self, cpu_clock_mhz: int) -> int:
        if cpu_clock_mhz % self.bus_clock_mhz:
            raise ValueError(
                f"cpu clock {cpu_clock_mhz} MHz is not an integer multiple of "
                f"the bus clock {self.bus_clock_mhz} MHz"
            )
        return cpu_clock_mhz // self.bus_clock_mhz

    def burst_cycles(self, nbytes: int, cpu_clock_mhz: int) -> int:
        """CPU cycles the data burst occupies on the channel bus.

        The bus moves bus_width*2 bits per bus cycle (double data rate).
        """
        per_cycle = (self.bus_width_bits // 8) * 2
        bus_cycles = -(-nbytes // per_cycle)
        return bus_cycles * self.clock_ratio(cpu_clock_mhz)


class DramDevice:
    """Bank and channel state of one device plus its traffic counters."""

    def __init__(self, timing: DeviceTiming, cpu_clock_mhz: int = 3200, name: str = ""):
        self.timing = timing
        self.name = name
        self.ratio = timing.clock_ratio(cpu_clock_mhz)
        self._bytes_per_bus_cycle = (timing.bus_width_bits // 8) * 2
        # flattened copies for the service fast path
        self._tcas = timing.tcas
        self._trcd = timing.trcd
        self._trp = timing.trp
        self._tras = timing.tras
        self._nchan = timing.channels
        self._burst_memo: dict[int, int] = {}
        n = timing.total_banks
        self.bank_busy = [0] * n
        self.bank_row = [-1] * n        # -1 = closed
        self.bank_activated = [-(10 ** 9)] * n
        self.chan_free = [0] * timing.channels
        # traffic summary: kind -> [count, bytes, queue_cycles]
        self.traffic: dict[str, list[int]] = {}
        self.same_bank_parallel = 0

    def burst_cycles(self, nbytes: int) -> int:
        return -(-nbytes // self._bytes_per_bus_cycle) * self.ratio

    def service(self, bank: int, row: int, nbytes: int, issue: int, kind: str):
        """Run one transaction; returns (complete_cycle, queuing_delay).

        Mutates bank/channel state, so callers must present transactions in
        the order they are granted.
        """
        burst = self._burst_memo.get(nbytes)
        if burst is None:
            burst = self._burst_memo[nbytes] = self.burst_cycles(nbytes)
        bank_busy = self.bank_busy
        bank_row = self.bank_row
        tcas = self._tcas
        start = bank_busy[bank]
        if start < issue:
            start = issue

        open_row = bank_row[bank]
        if open_row == row:
            service_min = tcas
            cas = start
        elif open_row == -1:
            service_min = self._trcd + tcas
            self.bank_activated[bank] = start
            cas = start + self._trcd
        else:
            trp = self._trp
            service_min = trp + self._trcd + tcas
            pre = self.bank_activated[bank] + self._tras
            if pre < start:
                pre = start
            self.bank_activated[bank] = pre + trp
            cas = pre + trp + self._trcd
        bank_row[bank] = row
        # The CAS latency is pipelined; the bank blocks later commands only
        # for the column/burst slot itself.
        bank_busy[bank] = cas + burst

        service_min += burst
        chan_free = self.chan_free
        chan = bank % self._nchan
        bus_start = cas + tcas
        if bus_start < chan_free[chan]:
            bus_start = chan_free[chan]
        complete = bus_start + burst
        chan_free[chan] = complete

        queue = complete - issue - service_min
        assert queue >= 0
        rec = self.traffic.get(kind)
        if rec is None:
            rec = self.traffic[kind] = [0, 0, 0]
        rec[0] += 1
        rec[1] += nbytes
        rec[2] += queue
        return complete, queue

    def parallel_fetch(self, txns, issue: int):
        """Service a group issued together; completion is the slowest member.

        txns is an iterable of (bank, row, nbytes, kind).  Transactions that
        land on the same bank degrade to serialized service; that case is
        counted rather than forbidden.
        """
        seen = set()
        worst = issue
        for bank, row, nbytes, kind in txns:
            if bank in seen:
                self.same_bank_parallel += 1
            seen.add(bank)
            done, _ = self.service(bank, row, nbytes, issue, kind)
            if done > worst:
                worst = done
        return worst

    # -- summary helpers ---------------------------------------------------

    def total_bytes(self) -> int:
        return sum(rec[1] for rec in self.traffic.values())

    def transaction_count(self) -> int:
        return sum(rec[0] for rec in self.traffic.values())

    def mean_queue_delay(self) -> float:
        n = self.transaction_count()
        if n == 0:
            return 0.0
        return sum(rec[2] for rec in self.traffic.values()) / n

    def summary(self) -> dict:
        out = {}
        for kind in sorted(self.traffic):
            count, nbytes, queue = self.traffic[kind]
            out[kind] = {"count": count, "bytes": nbytes, "queue_cycles": queue}
        return out
