"""``solarpot`` command line.

Exit codes: 0 success, 1 too many sections failed, 2 bad input or config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .ingest import ConfigError, InputError, RunConfig, dumps_doc, load_config, parse_config
from .pipeline import STAGES, Context, aggregate, normalize, potential_kwh, run_pipeline, run_stage, summarize
from .pitch import fit_pitch_models, read_training_csv

log = logging.getLogger("solarpot")

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT = 0, 1, 2


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else parse_config({})
    if getattr(args, "workers", None) is not None:
        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None


def _write(path, text: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _finish(report: dict, cfg: RunConfig) -> int:
    summary = summarize(report, cfg, 0.0)
    if summary["n_errors"]:
        log.warning("%d of %d sections failed", summary["n_errors"], summary["n_sections"])
    return EXIT_PARTIAL if summary["failed"] else EXIT_OK


def cmd_run(args) -> int:
    cfg = _config(args)
    out = args.out or cfg.paths.get("report") or "report.geojson"
    summary_path = args.summary or cfg.paths.get("summary") or str(Path(out).with_suffix(".summary.json"))
    sections = _read_json(args.inp) if args.inp else None
    result = run_pipeline(cfg, sections)
    _write(out, dumps_doc(result.report))
    _write(summary_path, json.dumps(result.summary, indent=1) + "\n")
    if cfg.paths.get("aggregate"):
        _write(cfg.paths["aggregate"], dumps_doc(aggregate(result.report, cfg.aggregate_cell_size_m)))
    log.info("report written to %s (%d sections, %d errors)", out, result.n_sections, result.n_errors)
    if result.n_errors:
        log.warning("%d of %d sections failed", result.n_errors, result.n_sections)
    return EXIT_PARTIAL if result.failed else EXIT_OK


def _stage_command(stage: str):
    def cmd(args) -> int:
        cfg = _config(args)
        src = args.inp or cfg.paths.get("sections")
        if src is None:
            raise ConfigError("no input: pass --in or set paths.sections")
        if getattr(args, "model", None):
            cfg = replace(cfg, paths={**cfg.paths, "pitch_model": args.model})
        doc = normalize(run_stage(stage, Context(cfg), _read_json(src), cfg.workers))
        _write(args.out, dumps_doc(doc))
        return _finish(doc, cfg)
    return cmd


def cmd_pitch_train(args) -> int:
    cfg = _config(args)
    rows = read_training_csv(args.inp)
    pc = cfg.pitch
    model = fit_pitch_models(rows, args.n_trees or pc.n_trees, pc.max_depth, pc.min_leaf, cfg.seed,
                             n_jobs=max(cfg.workers, 1))
    _write(args.out, model.to_json() + "\n")
    lin = model.linear
    log.info("mean pitch = %.4f * latitude + %.4f (LOO R2 %s)", lin.slope, lin.intercept, lin.loo_r2)
    return EXIT_OK


def cmd_potential(args) -> int:
    if args.inp is None:
        if None in (args.n_modules, args.power_wp, args.pvout):
            raise ConfigError("pass --n-modules, --power-wp and --pvout, or --in/--out with a report")
        print(repr(potential_kwh(args.n_modules, args.power_wp, args.pvout)))
        return EXIT_OK
    return _stage_command("potential")(args)


def cmd_aggregate(args) -> int:
    cfg = _config(args)
    size = args.cell_size if args.cell_size is not None else cfg.aggregate_cell_size_m
    _write(args.out, dumps_doc(aggregate(_read_json(args.inp), size)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solarpot", description="Rooftop solar potential from vector roof data.")
    p.add_argument("--version", action="version", version=f"solarpot {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, io=True, out_required=True):
        sp.add_argument("--config", help="run configuration (JSON)")
        sp.add_argument("--workers", type=int, help="worker threads (0 = one per CPU)")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        if io:
            sp.add_argument("--in", dest="inp", help="input feature collection")
            sp.add_argument("--out", required=out_required, help="output file")

    r = sub.add_parser("run", help="full pipeline")
    common(r, io=False)
    r.add_argument("--in", dest="inp", help="sections collection (default: paths.sections)")
    r.add_argument("--out", help="report path (default: paths.report)")
    r.add_argument("--summary", help="summary JSON path (default: paths.summary)")
    r.set_defaults(func=cmd_run)

    for stage in STAGES:
        if stage in ("pitch", "potential"):
            continue
        sp = sub.add_parser(stage, help=f"{stage} stage only")
        common(sp)
        sp.set_defaults(func=_stage_command(stage))

    pitch = sub.add_parser("pitch", help="train or apply the pitch model")
    psub = pitch.add_subparsers(dest="pitch_command", required=True)
    tr = psub.add_parser("train")
    common(tr)
    tr.add_argument("--n-trees", type=int)
    tr.set_defaults(func=cmd_pitch_train)
    pr = psub.add_parser("predict")
    common(pr)
    pr.add_argument("--model", help="pitch model JSON (default: paths.pitch_model)")
    pr.set_defaults(func=_stage_command("pitch"))

    pot = sub.add_parser("potential", help="kWh/year from modules and yield")
    common(pot, out_required=False)
    pot.add_argument("--n-modules", type=float)
    pot.add_argument("--power-wp", type=float)
    pot.add_argument("--pvout", type=float)
    pot.set_defaults(func=cmd_potential)

    ag = sub.add_parser("aggregate", help="sum a report on a square grid")
    common(ag)
    ag.add_argument("--cell-size", type=float)
    ag.set_defaults(func=cmd_aggregate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValueError, FileNotFoundError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        if isinstance(exc, FileNotFoundError) and exc.filename:
            msg = f"{exc.filename}: no such file"
        print(f"solarpot: error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
