"""Result folding and report emission.

Outcomes are folded in one pass into counters, latency aggregates, and
fixed-size latency histograms (8-cycle buckets capped at 2048 cycles), so
memory stays constant no matter how long the trace is.  Percentiles are
read off the histogram and therefore quantized to bucket upper edges.

Reports carry ``"schema": 1`` and embed the configuration that produced
them; identical configuration and seed produce byte-identical documents.
"""

from __future__ import annotations

import json

from .policy import LEADING, TYPE_NAMES

HIST_BUCKET = 8
HIST_CAP = 2048
_NBUCKETS = HIST_CAP // HIST_BUCKET + 1  # last bucket holds >= cap

CASES = ("A", "B1", "B2", "C", "D")


class StatsAccumulator:
    def __init__(self):
        self.records = 0
        self.reads = 0
        self.writes = 0
        self.case_counts = dict.fromkeys(CASES, 0)
        # indexed [type][hit]
        self._lat_count = [[0, 0], [0, 0]]
        self._lat_sum = [[0, 0], [0, 0]]
        self._hit_hist = [[0] * _NBUCKETS, [0] * _NBUCKETS]
        self.bytes_cache_attr = 0
        self.bytes_mem_attr = 0
        self.flag_events = 0

    def add(self, o):
        self.records += 1
        self.bytes_cache_attr += o.bytes_cache
        self.bytes_mem_attr += o.bytes_mem
        if o.op != "R":
            self.writes += 1
            return
        self.reads += 1
        self.case_counts[o.case] += 1
        if o.flagged:
            self.flag_events += 1
        t = o.current_type
        hit = 1 if o.dram_hit else 0
        self._lat_count[t][hit] += 1
        self._lat_sum[t][hit] += o.latency
        if hit:
            b = o.latency // HIST_BUCKET
            if b >= _NBUCKETS:
                b = _NBUCKETS - 1
            self._hit_hist[t][b] += 1

    # -- derived -----------------------------------------------------------

    def _percentile(self, hist, total, frac):
        if total == 0:
            return 0
        need = frac * total
        seen = 0
        for i, c in enumerate(hist):
            seen += c
            if seen >= need:
                if i == _NBUCKETS - 1:
                    return HIST_CAP
                return (i + 1) * HIST_BUCKET
        return HIST_CAP

    def _type_latency(self, t):
        hits = self._lat_count[t][1]
        misses = self._lat_count[t][0]
        hit_mean = self._lat_sum[t][1] / hits if hits else 0.0
        miss_mean = self._lat_sum[t][0] / misses if misses else 0.0
        hist = self._hit_hist[t]
        return {
            "hits": hits,
            "misses": misses,
            "hit_mean": hit_mean,
            "hit_p50": self._percentile(hist, hits, 0.50),
            "hit_p90": self._percentile(hist, hits, 0.90),
            "hit_p99": self._percentile(hist, hits, 0.99),
            "miss_mean": miss_mean,
            "miss_penalty": (miss_mean - hit_mean) if hits and misses else 0.0,
        }

    def hit_rate(self) -> float:
        if self.reads == 0:
            return 0.0
        c = self.case_counts
        return (c["A"] + c["B1"] + c["B2"]) / self.reads

    def tag_cache_hit_rate(self) -> float:
        if self.reads == 0:
            return 0.0
        return (self.case_counts["A"] + self.case_counts["C"]) / self.reads

    def overall_hit_latency_mean(self) -> float:
        hits = self._lat_count[0][1] + self._lat_count[1][1]
        if hits == 0:
            return 0.0
        return (self._lat_sum[0][1] + self._lat_sum[1][1]) / hits

    def overall_miss_latency_mean(self) -> float:
        misses = self._lat_count[0][0] + self._lat_count[1][0]
        if misses == 0:
            return 0.0
        return (self._lat_sum[0][0] + self._lat_sum[1][0]) / misses

    def finalize(self, controller=None, tracker=None) -> dict:
        reads = self.reads
        fractions = {c: (self.case_counts[c] / reads if reads else 0.0) for c in CASES}
        doc = {
            "records": self.records,
            "reads": reads,
            "writes": self.writes,
            "case_counts": dict(self.case_counts),
            "case_fractions": fractions,
            "dram_hit_rate": self.hit_rate(),
            "tag_cache_hit_rate": self.tag_cache_hit_rate(),
            "hit_latency_mean": self.overall_hit_latency_mean(),
            "miss_latency_mean": self.overall_miss_latency_mean(),
            "latency": {
                TYPE_NAMES[t]: self._type_latency(t) for t in (0, 1)
            },
            "latency_histogram": {
                "bucket_cycles": HIST_BUCKET,
                "cap_cycles": HIST_CAP,
                "leading_hit": _sparse(self._hit_hist[LEADING]),
                "following_hit": _sparse(self._hit_hist[1 - LEADING]),
            },
            "bytes": {
                "cache_attributed": self.bytes_cache_attr,
                "mem_attributed": self.bytes_mem_attr,
            },
        }
        if controller is not None:
            doc["bytes"]["cache_total"] = controller.cache_dev.total_bytes()
            doc["bytes"]["mem_total"] = controller.mem_dev.total_bytes()
            doc["queue"] = {
                "cache_mean": controller.cache_dev.mean_queue_delay(),
                "mem_mean": controller.mem_dev.mean_queue_delay(),
            }
            doc["counters"] = controller.stats()
            doc["traffic"] = {
                "cache": controller.cache_dev.summary(),
                "memory": controller.mem_dev.summary(),
            }
            doc["same_bank_parallel"] = controller.cache_dev.same_bank_parallel
        if tracker is not None:
            doc["types"] = tracker.finalize()
        return doc


def _sparse(hist):
    # string keys so the document round-trips through JSON unchanged
    return {str(i): c for i, c in enumerate(hist) if c}


def fold(outcomes, controller=None, tracker=None) -> dict:
    """One-pass fold of an outcome stream into a stats document."""
    acc = StatsAccumulator()
    for o in outcomes:
        acc.add(o)
    return acc.finalize(controller, tracker)


# -- emission --------------------------------------------------------------

CSV_COLUMNS = (
    "design", "workload", "seed", "records", "reads", "writes",
    "dram_hit_rate", "tag_cache_hit_rate",
    "frac_a", "frac_b1", "frac_b2", "frac_c", "frac_d",
    "hit_latency_mean",
    "leading_hit_mean", "leading_hit_p50", "leading_hit_p90", "leading_hit_p99",
    "leading_miss_penalty",
    "following_hit_mean", "following_hit_p50", "following_hit_p90",
    "following_hit_p99", "following_miss_penalty",
    "bytes_cache_total", "bytes_mem_total",
    "cache_queue_mean", "mem_queue_mean",
    "migrations", "fills", "transition_ratio",
)


def emit_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_row(doc: dict) -> list:
    s = doc["stats"]
    lat = s["latency"]
    queue = s.get("queue", {})
    counters = s.get("counters", {})
    types = s.get("types", {})
    row = [
        doc.get("design", ""), doc.get("workload", ""), doc.get("seed", ""),
        s["records"], s["reads"], s["writes"],
        s["dram_hit_rate"], s["tag_cache_hit_rate"],
        s["case_fractions"]["A"], s["case_fractions"]["B1"],
        s["case_fractions"]["B2"], s["case_fractions"]["C"],
        s["case_fractions"]["D"],
        s["hit_latency_mean"],
        lat["leading"]["hit_mean"], lat["leading"]["hit_p50"],
        lat["leading"]["hit_p90"], lat["leading"]["hit_p99"],
        lat["leading"]["miss_penalty"],
        lat["following"]["hit_mean"], lat["following"]["hit_p50"],
        lat["following"]["hit_p90"], lat["following"]["hit_p99"],
        lat["following"]["miss_penalty"],
        s["bytes"].get("cache_total", s["bytes"]["cache_attributed"]),
        s["bytes"].get("mem_total", s["bytes"]["mem_attributed"]),
        queue.get("cache_mean", 0.0), queue.get("mem_mean", 0.0),
        counters.get("migrations", 0), counters.get("fills", 0),
        types.get("transition_ratio", 0.0),
    ]
    return row


def emit_csv(docs) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for doc in docs:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in _csv_row(doc)))
    return "\n".join(lines) + "\n"
