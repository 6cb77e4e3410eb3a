"""Quality controllers: drift-plus-penalty selection and fixed-QP baselines."""
from __future__ import annotations

from dataclasses import dataclass

from .trace import QualityMode, TraceLookupError, TraceTable, bits_for, entry

STOCHASTIC = "stochastic"
FIXED = "fixed"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending setting when known."""

    def __init__(self, message: str, key: str | None = None):
        if key and not message.startswith(key):
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ControllerSpec:
    kind: str
    v: float | None = None
    fixed_qp: int | None = None

    def __post_init__(self):
        if self.kind == STOCHASTIC:
            if self.v is None or not self.v > 0:
                raise ConfigError(f"stochastic controller needs v > 0, got {self.v}", "v")
        elif self.kind == FIXED:
            if self.fixed_qp is None:
                raise ConfigError("fixed controller needs a QP", "controller")
        else:
            raise ConfigError(f"unknown controller kind {self.kind!r}", "controller")

    @classmethod
    def stochastic(cls, v: float) -> "ControllerSpec":
        return cls(STOCHASTIC, v=v)

    @classmethod
    def fixed(cls, qp: int) -> "ControllerSpec":
        return cls(FIXED, fixed_qp=qp)

    @property
    def label(self) -> str:
        if self.kind == FIXED:
            return f"fixed:{self.fixed_qp}"
        return f"stochastic:{self.v!r}"

    def check(self, table: TraceTable) -> None:
        if self.kind == FIXED and self.fixed_qp not in {m.qp for m in table.modes}:
            raise ConfigError(
                f"QP{self.fixed_qp} is not a quality mode of the trace table", "controller"
            )


@dataclass(frozen=True)
class Decision:
    quality: QualityMode
    score: float | None
    arrival_bits: float
    psnr_db: float


def phi(psnr_db: float, stream_bits: float, queue_bits: float, v: float) -> float:
    """Drift-plus-penalty score of one mode: quality minus weighted backlog cost."""
    return psnr_db - v * stream_bits * queue_bits


def select_quality(table: TraceTable, stream_index: int, queue_bits: float, v: float) -> Decision:
    # Modes are scanned best quality first and only a strictly larger score
    # replaces the incumbent, so ties go to the lower QP.
    best = None
    best_score = float("-inf")
    for mode in table.modes:
        e = entry(table, stream_index, mode)
        bits = bits_for(e, table.stream_duration_s)
        score = phi(e.psnr_db, bits, queue_bits, v)
        if best_score < score:
            best_score = score
            best = Decision(mode, score, bits, e.psnr_db)
    return best


def decide(spec: ControllerSpec, table: TraceTable, stream_index: int, queue_bits: float) -> Decision:
    if spec.kind == STOCHASTIC:
        return select_quality(table, stream_index, queue_bits, spec.v)
    try:
        mode = table.mode_for_qp(spec.fixed_qp)
    except TraceLookupError:
        raise ConfigError(
            f"QP{spec.fixed_qp} is not a quality mode of the trace table", "controller"
        ) from None
    e = entry(table, stream_index, mode)
    return Decision(mode, None, bits_for(e, table.stream_duration_s), e.psnr_db)
