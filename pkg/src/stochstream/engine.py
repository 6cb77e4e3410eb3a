"""Dual-clock streaming loop: stream placements every K unit times, one
channel transmission and one queue update per unit time."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, LinkBudget, capacities, sample_gains
from .control import ConfigError, ControllerSpec, decide
from .trace import TraceTable, builtin_table1

STEP_LOG_HEADER = (
    "t", "t_s", "stream", "qp", "psnr_db", "arrival_bits", "departure_bits", "queue_bits",
)
DEFAULT_SLOPE_THRESHOLD = 1e5
DEFAULT_GROWTH_RATIO = 1.5


@dataclass(frozen=True)
class SimConfig:
    controller: ControllerSpec
    k: int = 10
    horizon: int = 3000
    budget: LinkBudget = field(default_factory=LinkBudget)
    channel: ChannelModel = field(default_factory=ChannelModel)
    table: TraceTable = field(default_factory=builtin_table1)

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}", "k")
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 1:
            raise ConfigError(f"horizon must be an integer >= 1, got {self.horizon!r}", "horizon")
        self.controller.check(self.table)


@dataclass(frozen=True)
class StepRecord:
    t: int
    is_placement: bool
    t_s: int | None
    stream_index: int | None
    chosen_qp: int | None
    psnr_db: float | None
    arrival_bits: float
    departure_bits: float
    queue_bits_after: float


@dataclass(frozen=True)
class RunResult:
    steps: tuple[StepRecord, ...]
    mean_psnr_db: float | None
    mean_queue_bits: float
    first_mean_queue_bits: float
    tail_mean_queue_bits: float
    tail_slope_bits_per_unit: float
    placements: int

    @property
    def final_queue_bits(self) -> float:
        return self.steps[-1].queue_bits_after

    def verdict(self, slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
                growth_ratio: float = DEFAULT_GROWTH_RATIO) -> str:
        return verdict(self.tail_slope_bits_per_unit, self.tail_mean_queue_bits,
                       self.first_mean_queue_bits, slope_threshold, growth_ratio)


def is_placement_time(t: int, k: int) -> bool:
    return t > 0 and t % k == 0


def stream_time(t: int, k: int) -> int:
    if not is_placement_time(t, k):
        raise ValueError(f"t={t} is not a placement time for k={k}")
    return t // k


def queue_update(q_bits: float, arrival_bits: float, departure_bits: float) -> float:
    return max(q_bits + arrival_bits - departure_bits, 0.0)


def stream_for(t_s: int, stream_count: int) -> int:
    # Round-robin over the table's streams.
    return t_s % stream_count + 1


def run(config: SimConfig) -> RunResult:
    table = config.table
    # Gains for t = 1 .. horizon-1; t = 0 only initializes the queue.
    gains = sample_gains(config.channel, 1, config.horizon - 1)
    mus = capacities(config.budget, gains)

    steps = [StepRecord(0, False, None, None, None, None, 0.0, 0.0, 0.0)]
    q = 0.0
    for t in range(1, config.horizon):
        mu = float(mus[t - 1])
        if is_placement_time(t, config.k):
            t_s = stream_time(t, config.k)
            stream = stream_for(t_s, table.stream_count)
            d = decide(config.controller, table, stream, q)
            arrival = d.arrival_bits
            q = queue_update(q, arrival, mu)
            steps.append(StepRecord(t, True, t_s, stream, d.quality.qp, d.psnr_db, arrival, mu, q))
        else:
            q = queue_update(q, 0.0, mu)
            steps.append(StepRecord(t, False, None, None, None, None, 0.0, mu, q))
    return summarize(steps)


def _ols_slope(t: np.ndarray, y: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    tc = t - t.mean()
    denom = float(np.dot(tc, tc))
    return float(np.dot(tc, y - y.mean()) / denom) if denom else 0.0


def summarize(steps) -> RunResult:
    """Aggregate a step log into PSNR, backlog and tail-trend statistics.

    Tail statistics use the final third of the steps (at least one step),
    the growth reference uses the first third.
    """
    steps = tuple(steps)
    if not steps:
        raise ValueError("summarize needs at least one step")
    n = len(steps)
    third = max(n // 3, 1)
    t = np.array([s.t for s in steps], dtype=float)
    q = np.array([s.queue_bits_after for s in steps], dtype=float)
    psnrs = [s.psnr_db for s in steps if s.is_placement]
    return RunResult(
        steps=steps,
        mean_psnr_db=math.fsum(psnrs) / len(psnrs) if psnrs else None,
        mean_queue_bits=float(q.mean()),
        first_mean_queue_bits=float(q[:third].mean()),
        tail_mean_queue_bits=float(q[-third:].mean()),
        tail_slope_bits_per_unit=_ols_slope(t[-third:], q[-third:]),
        placements=len(psnrs),
    )


def verdict(tail_slope: float, tail_mean: float, first_mean: float,
            slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
            growth_ratio: float = DEFAULT_GROWTH_RATIO) -> str:
    """Return "diverging" when the tail still climbs and sits well above the start."""
    if tail_slope > slope_threshold and tail_mean > growth_ratio * first_mean:
        return "diverging"
    return "stable"


def _fmt(x) -> str:
    return "" if x is None else repr(x)


def write_step_log(result: RunResult, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(STEP_LOG_HEADER)
    for s in result.steps:
        writer.writerow([
            s.t, _fmt(s.t_s), _fmt(s.stream_index), _fmt(s.chosen_qp), _fmt(s.psnr_db),
            repr(s.arrival_bits), repr(s.departure_bits), repr(s.queue_bits_after),
        ])


def step_log_csv(result: RunResult) -> str:
    out = io.StringIO()
    write_step_log(result, out)
    return out.getvalue()
