"""Command-line front end: config files, presets, sweeps and run summaries.

Config files are flat ``key = value`` lines with ``#`` comments. List-valued
keys (``controller``, ``sweep_v``, ``sweep_k``, ``sweep_seed``) take
comma-separated values.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import engine
from .channel import DETERMINISTIC, RAYLEIGH, ChannelModel, LinkBudget
from .control import FIXED, STOCHASTIC, ConfigError, ControllerSpec
from .trace import TraceError, builtin_table1, parse_trace_csv, validate

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_TRACE = 3

SUMMARY_HEADER = (
    "run_id", "controller", "k", "v", "seed", "mean_psnr_db", "mean_queue_bits",
    "tail_mean_queue_bits", "tail_slope", "verdict",
)

PRESETS = {
    "figure5a": """\
# K = 10: stochastic vs. fixed QP22 / QP37 baselines
k = 10
v = 1e-16
controller = stochastic, fixed:22, fixed:37
""",
    "figure5b": """\
# K = 1: stochastic vs. fixed QP22 / QP37 baselines
k = 1
v = 1e-16
controller = stochastic, fixed:22, fixed:37
""",
    "figure6": """\
# K = 1: two tradeoff weights vs. fixed QP22
k = 1
controller = stochastic:1e-16, stochastic:5e-16, fixed:22
""",
}


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = ""
    controller: tuple[str, ...] = ("stochastic",)
    k: int = 10
    v: float = 1e-16
    horizon: int = 3000
    seed: int = 1
    bandwidth_hz: float = 1e6
    tx_power_dbm: float = 5.0
    noise_mw: float = 1.0
    channel: str = RAYLEIGH
    mean_gain: float = 1.0
    fixed_gain: float = 1.0
    trace: str = ""
    stream_duration_s: float = 1.0
    output: str = "runs"
    sweep_v: tuple[float, ...] = ()
    sweep_k: tuple[int, ...] = ()
    sweep_seed: tuple[int, ...] = ()
    slope_threshold: float = engine.DEFAULT_SLOPE_THRESHOLD
    growth_ratio: float = engine.DEFAULT_GROWTH_RATIO
    jobs: int = 1


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_LIST_TYPES = {"controller": str, "sweep_v": float, "sweep_k": int, "sweep_seed": int}
_SCALAR_TYPES = {
    "preset": str, "k": int, "v": float, "horizon": int, "seed": int,
    "bandwidth_hz": float, "tx_power_dbm": float, "noise_mw": float, "channel": str,
    "mean_gain": float, "fixed_gain": float, "trace": str, "stream_duration_s": float,
    "output": str, "slope_threshold": float, "growth_ratio": float, "jobs": int,
}


def _convert(key: str, raw: str, typ):
    raw = raw.strip()
    if typ is str:
        return raw
    try:
        if typ is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}", key) from None


def parse_controller(token: str, default_v: float) -> ControllerSpec:
    kind, _, arg = token.strip().partition(":")
    if kind == STOCHASTIC:
        v = _convert("controller", arg, float) if arg else default_v
        return ControllerSpec.stochastic(v)
    if kind == FIXED and arg:
        return ControllerSpec.fixed(_convert("controller", arg, int))
    raise ConfigError(f"controller: expected stochastic[:<v>] or fixed:<QP>, got {token!r}",
                      "controller")


def _parse_pairs(text: str, source: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'", key or None)
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}", key)
        if key in _LIST_TYPES:
            items = [s for s in (p.strip() for p in raw.split(",")) if s]
            if not items:
                raise ConfigError(f"{key}: list must not be empty", key)
            values[key] = tuple(_convert(key, s, _LIST_TYPES[key]) for s in items)
        else:
            values[key] = _convert(key, raw, _SCALAR_TYPES[key])
    return values


def check_config(cfg: ExperimentConfig) -> ExperimentConfig:
    """Validate value ranges and combinations; raise ConfigError naming the key."""
    if cfg.preset and cfg.preset not in PRESETS:
        raise ConfigError(f"unknown preset {cfg.preset!r}", "preset")
    for key in ("k", "horizon"):
        if getattr(cfg, key) < 1:
            raise ConfigError(f"{key} must be >= 1", key)
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0", "seed")
    if not cfg.v > 0:
        raise ConfigError("v must be > 0", "v")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1", "jobs")
    if cfg.channel not in (RAYLEIGH, DETERMINISTIC):
        raise ConfigError(f"channel must be {RAYLEIGH} or {DETERMINISTIC}", "channel")
    for key, ok in (("bandwidth_hz", cfg.bandwidth_hz > 0), ("noise_mw", cfg.noise_mw > 0),
                    ("mean_gain", cfg.mean_gain > 0), ("fixed_gain", cfg.fixed_gain >= 0),
                    ("stream_duration_s", cfg.stream_duration_s > 0)):
        if not ok:
            raise ConfigError(f"{key} out of range", key)
    if any(not v > 0 for v in cfg.sweep_v):
        raise ConfigError("sweep_v values must be > 0", "sweep_v")
    if any(k < 1 for k in cfg.sweep_k):
        raise ConfigError("sweep_k values must be >= 1", "sweep_k")
    if any(s < 0 for s in cfg.sweep_seed):
        raise ConfigError("sweep_seed values must be >= 0", "sweep_seed")
    if not cfg.controller:
        raise ConfigError("controller list must not be empty", "controller")
    specs = [parse_controller(c, cfg.v) for c in cfg.controller]
    if not cfg.trace:
        table = builtin_table1()
        for spec in specs:
            spec.check(table)
    return cfg


def parse_config(text: str, source: str = "<config>", overrides: dict | None = None,
                 preset: str | None = None) -> ExperimentConfig:
    """Layer preset < file text < overrides into a validated ExperimentConfig."""
    values = _parse_pairs(text, source)
    name = preset or values.get("preset") or (overrides or {}).get("preset")
    merged: dict[str, object] = {}
    if name:
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}", "preset")
        merged.update(_parse_pairs(PRESETS[name], f"preset:{name}"))
        merged["preset"] = name
    merged.update(values)
    merged.update(overrides or {})
    if name:
        merged["preset"] = name
    return check_config(ExperimentConfig(**merged))


def load_config(path, overrides: dict | None = None, preset: str | None = None) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path), overrides, preset)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize every effective setting; ``parse_config`` of the result is ``cfg``."""
    lines = []
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if f.name in _LIST_TYPES:
            if not value:
                continue
            text = ", ".join(repr(x) if isinstance(x, float) else str(x) for x in value)
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        if text == "" and f.name in ("preset", "trace"):
            continue
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunPoint:
    run_id: str
    controller: ControllerSpec
    k: int
    seed: int
    sim: engine.SimConfig


def _run_id(spec: ControllerSpec, k: int, seed: int) -> str:
    if spec.kind == FIXED:
        label = f"fixed-qp{spec.fixed_qp}"
    else:
        label = f"stochastic-v{spec.v!r}"
    return f"{label}_k{k}_seed{seed}"


def load_table(cfg: ExperimentConfig):
    if not cfg.trace:
        table = builtin_table1()
        if cfg.stream_duration_s != table.stream_duration_s:
            table = replace(table, stream_duration_s=cfg.stream_duration_s)
        return table
    with open(cfg.trace, encoding="utf-8") as fh:
        return parse_trace_csv(fh, stream_duration_s=cfg.stream_duration_s)


def expand(cfg: ExperimentConfig, table=None) -> list[RunPoint]:
    """One RunPoint per (controller, v, k, seed) sweep combination, deduplicated."""
    table = table if table is not None else load_table(cfg)
    budget = LinkBudget(cfg.bandwidth_hz, cfg.tx_power_dbm, cfg.noise_mw)
    vs = cfg.sweep_v or (cfg.v,)
    ks = cfg.sweep_k or (cfg.k,)
    seeds = cfg.sweep_seed or (cfg.seed,)
    points: list[RunPoint] = []
    seen = set()
    for token, v, k, seed in itertools.product(cfg.controller, vs, ks, seeds):
        spec = parse_controller(token, v)
        run_id = _run_id(spec, k, seed)
        if run_id in seen:
            continue
        seen.add(run_id)
        channel = ChannelModel(cfg.channel, fixed_gain=cfg.fixed_gain,
                               mean_gain=cfg.mean_gain, seed=seed)
        sim = engine.SimConfig(spec, k=k, horizon=cfg.horizon, budget=budget,
                               channel=channel, table=table)
        points.append(RunPoint(run_id, spec, k, seed, sim))
    return points


def summary_row(point: RunPoint, result: engine.RunResult, cfg: ExperimentConfig) -> dict:
    spec = point.controller
    return {
        "run_id": point.run_id,
        "controller": f"fixed:{spec.fixed_qp}" if spec.kind == FIXED else STOCHASTIC,
        "k": str(point.k),
        "v": repr(spec.v) if spec.kind == STOCHASTIC else "",
        "seed": str(point.seed),
        "mean_psnr_db": "" if result.mean_psnr_db is None else repr(result.mean_psnr_db),
        "mean_queue_bits": repr(result.mean_queue_bits),
        "tail_mean_queue_bits": repr(result.tail_mean_queue_bits),
        "tail_slope": repr(result.tail_slope_bits_per_unit),
        "verdict": result.verdict(cfg.slope_threshold, cfg.growth_ratio),
    }


def write_summary(rows, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _format_line(row: dict) -> str:
    v = row["v"] or "-"
    psnr = f"{float(row['mean_psnr_db']):.3f}" if row["mean_psnr_db"] else "n/a"
    return (f"{row['controller']:<14} k={row['k']:<3} v={v:<8} seed={row['seed']:<4} "
            f"psnr={psnr:>7} tailQ={float(row['tail_mean_queue_bits']):.4g} "
            f"slope={float(row['tail_slope']):.4g} {row['verdict']}")


def run_experiment(cfg: ExperimentConfig, out=sys.stdout) -> list[dict]:
    """Run every sweep point, write per-run step logs and summaries.

    Files in ``cfg.output``: ``<run_id>.csv`` (step log),
    ``<run_id>.summary.csv`` (one row), ``summary.csv`` (all rows) and
    ``effective.cfg`` (the resolved configuration).
    """
    points = expand(cfg)
    out_dir = Path(cfg.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    sims = [p.sim for p in points]
    if cfg.jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(engine.run, sims))
    else:
        results = [engine.run(s) for s in sims]

    rows = []
    for point, result in zip(points, results):
        with open(out_dir / f"{point.run_id}.csv", "w", newline="", encoding="utf-8") as fh:
            engine.write_step_log(result, fh)
        row = summary_row(point, result, cfg)
        write_summary([row], out_dir / f"{point.run_id}.summary.csv")
        rows.append(row)
        print(_format_line(row), file=out)
    write_summary(rows, out_dir / "summary.csv")
    (out_dir / "effective.cfg").write_text(dump_config(cfg), encoding="utf-8")
    return rows


def read_summary(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != SUMMARY_HEADER:
            raise FormatError(f"{path}: not a summary file (header mismatch)")
        rows = []
        for line in reader:
            if len(line) != len(SUMMARY_HEADER):
                raise FormatError(f"{path}:{reader.line_num}: expected {len(SUMMARY_HEADER)} columns")
            row = dict(zip(SUMMARY_HEADER, line))
            try:
                float(row["tail_mean_queue_bits"])
            except ValueError:
                raise FormatError(f"{path}:{reader.line_num}: non-numeric tail_mean_queue_bits") from None
            rows.append(row)
    return rows


def compare(paths) -> tuple[list[dict], str, str]:
    """Merge summaries and sort by tail mean backlog (stable).

    Returns (rows, csv_text, human_text).
    """
    paths = list(paths)
    if len(paths) < 2:
        raise FormatError("compare needs at least two summary files")
    rows = [row for p in paths for row in read_summary(p)]
    rows.sort(key=lambda r: float(r["tail_mean_queue_bits"]))
    cols = ("run_id", "mean_psnr_db", "tail_mean_queue_bits", "verdict")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in rows:
        writer.writerow([r[c] for c in cols])

    shown = [[r["run_id"],
              f"{float(r['mean_psnr_db']):.3f}" if r["mean_psnr_db"] else "n/a",
              f"{float(r['tail_mean_queue_bits']):.4g}",
              r["verdict"]] for r in rows]
    widths = [max(len(c), *(len(s[i]) for s in shown)) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines += ["  ".join(v.ljust(w) for v, w in zip(s, widths)).rstrip() for s in shown]
    return rows, buf.getvalue(), "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stochstream",
                                     description="Queue-adaptive video streaming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment")
    p.add_argument("--config", help="key = value config file (defaults if omitted)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--controller", help="stochastic[:<v>] or fixed:<QP>; comma-separated for several")
    p.add_argument("--k", type=int)
    p.add_argument("--v", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--print-config", action="store_true",
                   help="print the effective config and exit")

    p = sub.add_parser("compare", help="compare summary files")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--out", help="write the comparison CSV here")

    p = sub.add_parser("validate-trace", help="validate a trace CSV")
    p.add_argument("csv")
    return parser


def _cmd_run(args, out) -> int:
    overrides: dict[str, object] = {}
    for key in ("seed", "k", "v", "horizon", "jobs"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if args.out is not None:
        overrides["output"] = args.out
    if args.controller is not None:
        overrides["controller"] = tuple(c.strip() for c in args.controller.split(",") if c.strip())
    if args.config:
        cfg = load_config(args.config, overrides, args.preset)
    else:
        cfg = parse_config("", "<defaults>", overrides, args.preset)
    if args.print_config:
        out.write(dump_config(cfg))
        return EXIT_OK
    run_experiment(cfg, out)
    return EXIT_OK


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args, out)
        if args.command == "compare":
            _, csv_text, text = compare(args.summaries)
            out.write(text)
            if args.out:
                Path(args.out).write_text(csv_text, encoding="utf-8")
            return EXIT_OK
        with open(args.csv, encoding="utf-8") as fh:
            table = parse_trace_csv(fh)
        problems = validate(table)
        out.write(f"{args.csv}: {table.stream_count} streams x {len(table.modes)} modes, "
                  f"{len(problems)} violations\n")
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TraceError as exc:
        print(f"trace validation failed: {exc}", file=sys.stderr)
        return EXIT_TRACE
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
