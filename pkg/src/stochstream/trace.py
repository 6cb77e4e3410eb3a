"""Video trace tables: (stream, quality mode) -> (PSNR, bitrate).

A trace table replaces real video payloads in the simulator. Each stream is
encoded at every quality mode; the controller picks one mode per placement
and the queue receives that variant's bits.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

CSV_HEADER = ("stream", "qp", "psnr_db", "bitrate_kbps")


class TraceError(Exception):
    """Base class for trace parsing and validation failures."""


class TraceParseError(TraceError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceCompletenessError(TraceError):
    pass


class TraceValidationError(TraceError):
    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


class TraceLookupError(TraceError, LookupError):
    pass


@dataclass(frozen=True, order=True)
class QualityMode:
    """One encoded variant. ``index`` 1 is the highest quality."""

    index: int
    qp: int

    def __str__(self) -> str:
        return f"QP{self.qp}"


@dataclass(frozen=True)
class TraceEntry:
    stream: int
    quality: QualityMode
    psnr_db: float
    bitrate_kbps: float


@dataclass(frozen=True)
class Violation:
    kind: str  # "completeness", "duplicate", "monotonicity", "modes", "value"
    stream: int | None
    quality: QualityMode | None
    message: str


@dataclass(frozen=True)
class TraceTable:
    entries: tuple[TraceEntry, ...]
    stream_count: int
    modes: tuple[QualityMode, ...]
    stream_duration_s: float = 1.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        # Canonical (stream, qp) order so equality ignores input row order.
        object.__setattr__(
            self, "entries", tuple(sorted(self.entries, key=lambda e: (e.stream, e.quality.qp)))
        )
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(
            self, "_index", {(e.stream, e.quality.qp): e for e in self.entries}
        )

    def mode_for_qp(self, qp: int) -> QualityMode:
        for mode in self.modes:
            if mode.qp == qp:
                return mode
        raise TraceLookupError(f"unknown quality QP{qp}")


def modes_from_qps(qps: Iterable[int]) -> tuple[QualityMode, ...]:
    return tuple(QualityMode(i, qp) for i, qp in enumerate(sorted(qps), start=1))


# Measured on ten sample streams of a 4K HEVC sequence; columns are
# QP 22, 27, 32, 37 as (PSNR dB, bitrate Kbps).
_TABLE1 = {
    1: ((41.64, 26496), (39.11, 10658), (36.61, 5073), (34.00, 2621)),
    2: ((41.64, 26811), (39.07, 10811), (36.56, 5128), (33.97, 2650)),
    3: ((41.60, 27888), (39.00, 11279), (36.48, 5320), (33.91, 2721)),
    4: ((41.61, 27145), (39.05, 10958), (36.53, 5193), (33.94, 2679)),
    5: ((41.63, 26535), (39.08, 10710), (36.57, 5095), (33.98, 2636)),
    6: ((41.60, 27630), (39.02, 11130), (36.51, 5263), (33.94, 2703)),
    7: ((41.61, 27766), (39.01, 11237), (36.49, 5303), (33.91, 2714)),
    8: ((41.63, 26689), (39.10, 10765), (36.59, 5118), (34.00, 2641)),
    9: ((41.62, 27083), (39.06, 10902), (36.56, 5181), (33.97, 2678)),
    10: ((41.60, 28006), (39.00, 11378), (36.47, 5364), (33.89, 2735)),
}
BUILTIN_QPS = (22, 27, 32, 37)


def builtin_table1() -> TraceTable:
    """The built-in 10-stream, 4-mode 4K trace set."""
    modes = modes_from_qps(BUILTIN_QPS)
    entries = [
        TraceEntry(stream, mode, float(psnr), float(kbps))
        for stream, row in _TABLE1.items()
        for mode, (psnr, kbps) in zip(modes, row)
    ]
    return TraceTable(tuple(entries), stream_count=len(_TABLE1), modes=modes)


def validate(table: TraceTable) -> list[Violation]:
    """Return every broken table invariant; an empty list means valid."""
    violations: list[Violation] = []

    for i, mode in enumerate(table.modes, start=1):
        if mode.index != i:
            violations.append(
                Violation("modes", None, mode, f"mode indices not consecutive at {mode}")
            )
        if i > 1 and mode.qp <= table.modes[i - 2].qp:
            violations.append(
                Violation("modes", None, mode, f"QP does not increase at {mode}")
            )

    seen: dict[tuple[int, int], int] = {}
    mode_qps = {m.qp for m in table.modes}
    for e in table.entries:
        key = (e.stream, e.quality.qp)
        seen[key] = seen.get(key, 0) + 1
        if not 1 <= e.stream <= table.stream_count or e.quality.qp not in mode_qps:
            violations.append(
                Violation("completeness", e.stream, e.quality,
                          f"unexpected entry (stream {e.stream}, {e.quality})")
            )
        if not e.bitrate_kbps > 0:
            violations.append(
                Violation("value", e.stream, e.quality,
                          f"stream {e.stream} {e.quality}: bitrate must be positive")
            )
    for key, count in seen.items():
        if count > 1:
            stream, qp = key
            violations.append(
                Violation("duplicate", stream, table.mode_for_qp(qp) if qp in mode_qps else None,
                          f"duplicate entry (stream {stream}, QP{qp})")
            )

    for stream in range(1, table.stream_count + 1):
        row = []
        for mode in table.modes:
            e = table._index.get((stream, mode.qp))
            if e is None:
                violations.append(
                    Violation("completeness", stream, mode,
                              f"missing entry (stream {stream}, {mode})")
                )
            else:
                row.append(e)
        for prev, cur in zip(row, row[1:]):
            if not cur.psnr_db < prev.psnr_db:
                violations.append(
                    Violation("monotonicity", stream, cur.quality,
                              f"stream {stream}: PSNR at {cur.quality} not below {prev.quality}")
                )
            if not cur.bitrate_kbps < prev.bitrate_kbps:
                violations.append(
                    Violation("monotonicity", stream, cur.quality,
                              f"stream {stream}: bitrate at {cur.quality} not below {prev.quality}")
                )
    return violations


def entry(table: TraceTable, stream_index: int, quality: QualityMode | int) -> TraceEntry:
    qp = quality.qp if isinstance(quality, QualityMode) else quality
    if not 1 <= stream_index <= table.stream_count:
        raise TraceLookupError(
            f"stream {stream_index} out of range 1..{table.stream_count}"
        )
    try:
        return table._index[(stream_index, qp)]
    except KeyError:
        raise TraceLookupError(f"no entry for stream {stream_index}, QP{qp}") from None


def bits_for(e: TraceEntry, stream_duration_s: float) -> float:
    """Bits one placed stream adds to the queue."""
    if not stream_duration_s > 0:
        raise ValueError(f"stream duration must be positive, got {stream_duration_s}")
    return e.bitrate_kbps * 1000.0 * stream_duration_s


def parse_trace_csv(text: str | io.TextIOBase, stream_duration_s: float = 1.0) -> TraceTable:
    """Parse and validate a trace CSV (``stream,qp,psnr_db,bitrate_kbps``).

    Raises TraceParseError on malformed rows, TraceCompletenessError when a
    (stream, qp) pair is missing or duplicated, and TraceValidationError on
    monotonicity violations.
    """
    if isinstance(text, str):
        text = io.StringIO(text)
    reader = csv.reader(text)
    rows: list[tuple[int, int, float, float]] = []
    header_seen = False
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if not header_seen:
            if tuple(cells) != CSV_HEADER:
                raise TraceParseError(line, f"expected header {','.join(CSV_HEADER)}")
            header_seen = True
            continue
        if len(cells) != len(CSV_HEADER):
            raise TraceParseError(line, f"expected {len(CSV_HEADER)} columns, got {len(cells)}")
        try:
            rows.append((int(cells[0]), int(cells[1]), float(cells[2]), float(cells[3])))
        except ValueError as exc:
            raise TraceParseError(line, f"non-numeric field ({exc})") from None
    if not header_seen:
        raise TraceParseError(1, "empty trace file")
    if not rows:
        raise TraceCompletenessError("trace file has no data rows")

    modes = modes_from_qps({r[1] for r in rows})
    by_qp = {m.qp: m for m in modes}
    entries = [TraceEntry(s, by_qp[qp], p, b) for s, qp, p, b in rows]
    streams = {r[0] for r in rows}
    if min(streams) < 1:
        raise TraceCompletenessError(f"stream numbers must start at 1, got {min(streams)}")
    table = TraceTable(tuple(entries), stream_count=max(streams), modes=modes,
                       stream_duration_s=stream_duration_s)

    problems = validate(table)
    structural = [v for v in problems if v.kind in ("completeness", "duplicate")]
    if structural:
        raise TraceCompletenessError("; ".join(v.message for v in structural))
    if problems:
        raise TraceValidationError(problems)
    return table


def serialize_trace_csv(table: TraceTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for e in sorted(table.entries, key=lambda e: (e.stream, e.quality.qp)):
        writer.writerow([e.stream, e.quality.qp, repr(e.psnr_db), repr(e.bitrate_kbps)])
    return out.getvalue()
