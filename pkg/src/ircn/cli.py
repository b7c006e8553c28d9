"""Command line surface: dataset generation, training, reconstruction,
evaluation, and the verification suites.

Exit codes are stable contracts: 0 success, 2 configuration error, 3 I/O
error, 4 numeric divergence or degenerate output, 5 verification failure.
"""

import os

# Honor IRCN_THREADS before numpy is imported anywhere in this process.
_threads = os.environ.get("IRCN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig
from .geometry import ScalarField, occupancy_grid
from .nn import NumericsError
from .pifu import SamplingError
from .recon import ReconError, reconstruct, reconstruct_from_field
from .synthdata import (DatasetError, SceneError, build_dataset, downsample2,
                        load_manifest, load_sample)
from .train import TrainError, alternate_schedule, load_state, save_state, train_normal_net
from .verify import gradcheck_suite, run_all_ablations

E_OK = 0
E_CONFIG = 2
E_IO = 3
E_NUMERIC = 4
E_VERIFY = 5


def _run_config(args) -> RunConfig:
    return RunConfig.from_sources(getattr(args, "config", None),
                                  getattr(args, "set", []) or [])


def cmd_gen_data(args) -> int:
    if args.res % 2:
        raise ValueError(f"--res must be even, got {args.res}")
    manifest = build_dataset(args.out, args.train, args.test,
                             resolution=args.res, seed=args.seed,
                             grid_resolution=args.grid_res)
    cfg = RunConfig()
    cfg.set_value("dataset.dir", str(args.out))
    cfg.set_value("dataset.train", args.train)
    cfg.set_value("dataset.test", args.test)
    cfg.set_value("dataset.resolution", args.res)
    cfg.set_value("dataset.grid_resolution", args.grid_res)
    cfg.set_value("seed", args.seed)
    cfg.write(Path(args.out) / "resolved.config")
    print(f"wrote {len(manifest.records)} samples to {args.out}")
    return E_OK


def cmd_train(args) -> int:
    cfg = _run_config(args)
    manifest = load_manifest(args.data)
    cfg.set_value("dataset.dir", str(args.data))
    cfg.set_value("dataset.resolution", manifest.resolution)
    cfg.set_value("dataset.grid_resolution", manifest.grid_resolution)
    cfg.set_value("dataset.train", len(manifest.split("train")))
    cfg.set_value("dataset.test", len(manifest.split("test")))
    train_cfg = cfg.train_config()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.write(out / "resolved.config")

    state, logger = alternate_schedule(manifest, train_cfg,
                                       log_path=out / "train.log",
                                       checkpoint_dir=out)
    if train_cfg.normal_epochs > 0:
        state, logger = train_normal_net(manifest, train_cfg, state=state,
                                         logger=logger)
    ckpt = out / "model.ckpt"
    save_state(ckpt, state)
    done = ", ".join(f"{k}={v}" for k, v in sorted(state.epochs.items()) if v)
    print(f"trained [{done or 'nothing'}], checkpoint at {ckpt}")
    return E_OK


def _load_indexed_sample(manifest, index: int):
    if not 0 <= index < len(manifest.records):
        raise ValueError(f"--index {index} out of range "
                         f"(dataset has {len(manifest.records)} samples)")
    return load_sample(manifest, index)


def cmd_reconstruct(args) -> int:
    cfg = _run_config(args)
    state = load_state(args.ckpt)
    manifest = load_manifest(args.data)
    sample = _load_indexed_sample(manifest, args.index)

    if args.predicted_back_normals:
        if state.normal is None:
            raise ValueError("checkpoint has no back-normal net "
                             "(train with train.normal_epochs > 0)")
        pred = np.asarray(state.normal(sample.img_hi), dtype=np.float32)
        sample = dataclasses.replace(sample, bnml_hi=pred,
                                     bnml_lo=downsample2(pred))

    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    mesh, report = reconstruct(state.coarse, state.fine, sample,
                               cfg.recon_config(), mesh_path=out)
    report_path = Path(args.report) if args.report else out.with_suffix(".report")
    report_path.write_text(report.to_text(), encoding="utf-8")
    cfg.write(out.parent / "resolved.config")
    sys.stdout.write(report.to_text())
    if report.status == "empty":
        print(f"error: extraction produced no surface (mesh at {out} is empty)",
              file=sys.stderr)
        return E_NUMERIC
    print(f"mesh: {out} ({mesh.num_triangles} triangles), report: {report_path}")
    return E_OK


_METRIC_COLS = ("chamfer", "point_to_surface", "normal_consistency", "iou")


def _metric_table(rows) -> str:
    header = f"{'sample':>8} {'status':>8}" + "".join(f"{c:>20}" for c in _METRIC_COLS)
    lines = [header]
    for label, report in rows:
        cells = "".join(
            f"{getattr(report, c):>20.6f}" if getattr(report, c) is not None
            else f"{'absent':>20}" for c in _METRIC_COLS)
        lines.append(f"{label:>8} {report.status:>8}" + cells)
    ok = [r for _, r in rows if r.status == "ok"]
    if ok:
        means = "".join(f"{float(np.mean([getattr(r, c) for r in ok])):>20.6f}"
                        for c in _METRIC_COLS)
        lines.append(f"{'mean':>8} {f'{len(ok)} ok':>8}" + means)
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    cfg = _run_config(args)
    manifest = load_manifest(args.data)
    indices = [i for i, rec in enumerate(manifest.records)
               if rec.split == args.split]
    if not indices:
        raise ValueError(f"dataset has no samples in split {args.split!r}")
    recon_cfg = cfg.recon_config()

    state = None
    if not args.stub:
        if not args.ckpt:
            raise ValueError("--ckpt is required unless --stub is given")
        state = load_state(args.ckpt)

    rows = []
    for index in indices:
        sample = load_sample(manifest, index)
        if args.stub:
            field = occupancy_grid(sample.mesh, recon_cfg.resolution)
            field = ScalarField(field.values.astype(np.float32))
            _, report = reconstruct_from_field(field, sample.mesh, recon_cfg)
        else:
            _, report = reconstruct(state.coarse, state.fine, sample, recon_cfg)
        rows.append((str(index), report))

    table = _metric_table(rows)
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(table, encoding="utf-8")
        cfg.write(out.parent / "resolved.config")
    if not any(report.status == "ok" for _, report in rows):
        print("error: no sample evaluated successfully", file=sys.stderr)
        return E_NUMERIC
    return E_OK


def cmd_gradcheck(args) -> int:
    rows = gradcheck_suite(n_seeds=args.seeds)
    width = max(len(r.name) for r in rows)
    for r in rows:
        print(f"{r.name:<{width}}  {r.max_rel_err:12.3e}  "
              f"{'pass' if r.ok else 'FAIL'}")
    failed = [r.name for r in rows if not r.ok]
    if failed:
        print(f"gradcheck FAILED: {', '.join(failed)}", file=sys.stderr)
        return E_VERIFY
    print(f"gradcheck passed: {len(rows)} checks x {args.seeds} seeds")
    return E_OK


def cmd_ablate(args) -> int:
    which = tuple(part.strip() for part in args.which.split(",") if part.strip())
    unknown = sorted(set(which) - {"a", "b", "c"})
    if unknown:
        raise ValueError(f"unknown ablations {unknown}; choose from a,b,c")
    print(f"running ablations {','.join(which)} "
          "(several minutes of training runs)...")
    results = run_all_ablations(which)
    text = "\n".join(result.table() for result in results) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if not all(result.passed for result in results):
        return E_VERIFY
    return E_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ircn",
        description="Pixel-aligned implicit reconstruction from synthetic "
                    "orthographic renders.")
    parser.add_argument("--workdir", help="chdir here before resolving paths")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a procedural dataset")
    p.add_argument("--out", default="data")
    p.add_argument("--train", type=int, default=8)
    p.add_argument("--test", type=int, default=2)
    p.add_argument("--res", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid-res", type=int, default=64)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="run a training schedule")
    p.add_argument("--data", default="data")
    p.add_argument("--out", default="run")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a single config key (repeatable)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="mesh one sample from a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", default="data")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", default="recon.obj")
    p.add_argument("--report", help="report path (default: next to --out)")
    p.add_argument("--predicted-back-normals", action="store_true",
                   help="replace rendered back normals with the normal net's")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="metric table over a dataset split")
    p.add_argument("--ckpt")
    p.add_argument("--data", default="data")
    p.add_argument("--split", default="test")
    p.add_argument("--stub", action="store_true",
                   help="oracle-field stub instead of a trained model")
    p.add_argument("--out", help="also write the table to this file")
    p.add_argument("--config")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("ablate", help="directional ablation comparisons")
    p.add_argument("--which", default="a,b,c",
                   help="comma subset of a (conditioning), b (normals), "
                        "c (schedule)")
    p.add_argument("--out", help="also write the tables to this file")
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return E_OK if exc.code in (0, None) else E_CONFIG
    try:
        if args.workdir:
            os.chdir(args.workdir)
        return args.func(args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return E_CONFIG
    except (DatasetError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return E_IO
    except (TrainError, NumericsError, SamplingError, ReconError,
            SceneError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return E_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
