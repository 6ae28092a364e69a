"""Command-line entry point.

Subcommands: gen-targets, split, eval, grad-check, synth, and loss.
Exit codes: 0 success, 1 validation error, 2 I/O or file-format error.
Diagnostics go to stderr; machine-readable output goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluator, gradcheck, losses, splitters, targets
from .synth import SynthConfig, synth as generate_scenes
from .formats import FormatError, read_mgf, read_pgm, write_mgf, write_pgm
from .grids import Connectivity, InstanceGrid, LabelGrid, connected_components

CONFIG_KEYS = {
    "alpha",
    "epsilon",
    "band_width",
    "se_shape",
    "connectivity",
    "neighbor_distance",
    "lambda_sep",
    "lambda_feature",
    "lambda_reg",
    "lambda_bd",
    "pos_weight",
    "seed_threshold",
    "min_seed_area",
    "min_instance_area",
    "boundary_suppression",
    "opening_radius",
}


class CliError(Exception):
    """Usage or validation failure surfaced with exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise CliError(message)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed JSON config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"config {path} must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise CliError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _pick(args_value, config: dict, key: str, default):
    if args_value is not None:
        return args_value
    if key in config:
        return config[key]
    return default


def _read_instance_grid(path: str) -> InstanceGrid:
    return InstanceGrid.from_ids(read_pgm(path))


def _require(args: argparse.Namespace, names: tuple[str, ...]) -> None:
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        flags = ", ".join(f"--{n}" for n in missing)
        raise CliError(f"missing required flags for --loss {args.loss}: {flags}")


def _cmd_gen_targets(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    inst = _read_instance_grid(args.infile)
    dcfg = targets.DistanceConfig(
        alpha=float(_pick(args.alpha, config, "alpha", 3.0)),
        epsilon=float(_pick(args.epsilon, config, "epsilon", 1e-6)),
    )
    bcfg = targets.BoundaryConfig(
        band_half_width=int(_pick(args.band_width, config, "band_width", 2)),
        se_shape=str(_pick(args.se, config, "se_shape", "square")),
    )
    dist, band = targets.gen_targets(inst, dcfg, bcfg)
    write_mgf(args.out_dist, dist)
    write_mgf(args.out_bnd, band)
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    mask = LabelGrid(read_pgm(args.infile))
    conn = Connectivity.from_name(_pick(args.connectivity, config, "connectivity", "eight"))
    cfg = splitters.SplitConfig(
        seed_threshold=float(_pick(args.seed_threshold, config, "seed_threshold", 0.5)),
        min_seed_area=int(_pick(args.min_seed_area, config, "min_seed_area", 4)),
        min_instance_area=int(
            _pick(args.min_instance_area, config, "min_instance_area", 16)
        ),
        boundary_suppression=float(
            _pick(args.boundary_suppression, config, "boundary_suppression", 1.0)
        ),
        opening_radius=int(_pick(args.opening_radius, config, "opening_radius", 3)),
    )
    if args.method == "geometry":
        if args.dist is None or args.bnd is None:
            raise CliError("--dist and --bnd are required for the geometry method")
        dist = np.asarray(read_mgf(args.dist), dtype=np.float64)
        band = np.asarray(read_mgf(args.bnd), dtype=np.float64)
        inst = splitters.geometry_split(mask, args.class_id, dist, band, cfg, conn)
    elif args.method == "watershed":
        inst = splitters.watershed_split(mask, args.class_id, cfg, conn)
    elif args.method == "skeleton":
        inst = splitters.skeleton_split(mask, args.class_id, cfg, conn)
    else:
        inst = splitters.morphology_split(mask, args.class_id, cfg, conn)
    write_pgm(args.out, inst.ids)
    return 0


def _scan_pairs(pred_dir: Path, gt_dir: Path, class_names: list[str]) -> list[tuple]:
    """Pair pred/gt PGMs by stem; multi-class datasets suffix stems with __<class>."""
    gt_files = sorted(gt_dir.glob("gt_*.pgm"))
    if not gt_files:
        raise CliError(f"no gt_*.pgm files in {gt_dir}")
    pairs = []
    for gt_path in gt_files:
        stem = gt_path.stem[len("gt_") :]
        if len(class_names) == 1:
            cls = class_names[0]
            base = stem
        else:
            if "__" not in stem:
                raise CliError(f"multi-class dataset needs __<class> suffix: {gt_path.name}")
            base, cls = stem.rsplit("__", 1)
            if cls not in class_names:
                raise CliError(f"unknown class {cls!r} in {gt_path.name}")
        pred_path = pred_dir / f"pred_{stem}.pgm"
        if not pred_path.exists():
            raise FormatError(f"missing prediction file {pred_path}")
        pairs.append((base, cls, pred_path, gt_path))
    return pairs


def _load_scores(pred_path: Path) -> dict[int, float]:
    sidecar = pred_path.parent / (pred_path.stem + ".scores.json")
    if not sidecar.exists():
        return {}
    try:
        raw = json.loads(sidecar.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"malformed scores sidecar {sidecar}: {exc}") from exc
    return {int(k): float(v) for k, v in raw.items()}


def _cmd_eval(args: argparse.Namespace) -> int:
    try:
        classes = json.loads(Path(args.classes).read_text())
    except OSError as exc:
        raise FormatError(f"cannot read classes file {args.classes}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed classes file {args.classes}: {exc}") from exc
    if isinstance(classes, list):
        classes = {name: i + 1 for i, name in enumerate(classes)}
    if not isinstance(classes, dict) or not classes:
        raise CliError("classes file must be a nonempty JSON object or list")
    name_to_id = {str(k): int(v) for k, v in classes.items()}
    id_to_name = {v: k for k, v in name_to_id.items()}
    if len(id_to_name) != len(name_to_id):
        raise CliError("class ids must be unique")

    pairs = _scan_pairs(Path(args.pred), Path(args.gt), sorted(name_to_id))
    by_image: dict[str, tuple[list, list]] = {}
    for base, cls, pred_path, gt_path in pairs:
        preds, gts = by_image.setdefault(base, ([], []))
        cid = name_to_id[cls]
        pred_grid = InstanceGrid.from_ids(read_pgm(pred_path))
        gt_grid = InstanceGrid.from_ids(read_pgm(gt_path))
        preds.extend(
            evaluator.grid_to_instances(pred_grid, cid, _load_scores(pred_path))
        )
        gts.extend(
            evaluator.Instance(mask=gt_grid.ids == m, class_id=cid)
            for m in range(1, gt_grid.num_instances + 1)
        )
    images = sorted(by_image)
    report = evaluator.map_report(
        [by_image[k][0] for k in images],
        [by_image[k][1] for k in images],
        class_ids=sorted(id_to_name),
        max_detections=args.max_detections,
    )

    def as_json(entry: evaluator.ClassAP | None):
        if entry is None:
            return None
        return {"ap": entry.ap, "ap50": entry.ap50, "ap75": entry.ap75}

    doc = {
        "per_class": {id_to_name[cid]: as_json(v) for cid, v in report.per_class.items()},
        "average": as_json(report.average),
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_grad_check(args: argparse.Namespace) -> int:
    worst = gradcheck.check_loss_gradients(
        args.loss, seeds=args.seeds, max_size=args.size, max_dim=args.dim
    )
    print(f"max relative error: {worst:.6e}")
    if worst >= gradcheck.DEFAULT_TOL:
        print(f"gradient check failed (tolerance {gradcheck.DEFAULT_TOL})", file=sys.stderr)
        return 1
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig(
        num_scenes=args.num_scenes,
        height=args.height,
        width=args.width,
        shapes=args.shapes,
        instances_per_scene=(args.min_instances, args.max_instances),
        touch_probability=args.touch_prob,
        rng_seed=args.seed,
    )
    scenes = generate_scenes(cfg, threads=args.threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, scene in enumerate(scenes):
        write_pgm(out_dir / f"sem_{i:04d}.pgm", scene.semantic.labels)
        write_pgm(out_dir / f"gt_{i:04d}.pgm", scene.instances.ids)
    print(f"wrote {len(scenes)} scenes to {out_dir}", file=sys.stderr)
    return 0


def _cmd_loss(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.loss == "dist":
        _require(args, ("inst", "pred", "target"))
        inst = _read_instance_grid(args.inst)
        pred = np.asarray(read_mgf(args.pred), dtype=np.float64)
        target = np.asarray(read_mgf(args.target), dtype=np.float64)
        result = losses.bal_wmse(pred, target, inst)
    elif args.loss == "boundary":
        _require(args, ("logits", "target"))
        logits = np.asarray(read_mgf(args.logits), dtype=np.float64)
        target = np.asarray(read_mgf(args.target), dtype=np.float64)
        pw = _pick(args.pos_weight, config, "pos_weight", None)
        result = losses.boundary_bce(logits, target, None if pw is None else float(pw))
    else:
        _require(args, ("inst", "embeddings"))
        inst = _read_instance_grid(args.inst)
        emb = np.asarray(read_mgf(args.embeddings), dtype=np.float64)
        if emb.ndim == 2:
            raise CliError("embeddings MGF must have channels >= 2")
        radius = float(_pick(args.neighbor_distance, config, "neighbor_distance", 10.0))
        lam = float(_pick(args.lambda_sep, config, "lambda_sep", 1.0))
        pairs = losses.neighbor_pairs(inst, radius)
        result = losses.disentangle_loss(emb, inst, pairs, lambda_sep=lam)
    if args.out_grad:
        write_mgf(args.out_grad, result.gradient)
    doc = {"loss": args.loss, "value": result.value}
    text = json.dumps(doc, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="morigeo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-targets", help="generate distance and boundary targets")
    p.add_argument("--in", dest="infile", required=True, help="instance grid PGM")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--band-width", type=int, default=None)
    p.add_argument("--se", choices=("square", "diamond"), default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out-dist", required=True, help="distance field MGF output")
    p.add_argument("--out-bnd", required=True, help="boundary band MGF output")
    p.set_defaults(func=_cmd_gen_targets)

    p = sub.add_parser("split", help="split a semantic mask into instances")
    p.add_argument(
        "--method",
        required=True,
        choices=("watershed", "skeleton", "morphology", "geometry"),
    )
    p.add_argument("--in", dest="infile", required=True, help="semantic mask PGM")
    p.add_argument("--class", dest="class_id", type=int, default=1)
    p.add_argument("--dist", default=None, help="distance field MGF (geometry)")
    p.add_argument("--bnd", default=None, help="boundary band MGF (geometry)")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--connectivity", choices=("four", "eight", "4", "8"), default=None)
    p.add_argument("--seed-threshold", type=float, default=None)
    p.add_argument("--min-seed-area", type=int, default=None)
    p.add_argument("--min-instance-area", type=int, default=None)
    p.add_argument("--boundary-suppression", type=float, default=None)
    p.add_argument("--opening-radius", type=int, default=None)
    p.add_argument("--out", required=True, help="instance grid PGM output")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("eval", help="COCO-style mAP over paired PGM directories")
    p.add_argument("--pred", required=True, help="directory of pred_*.pgm")
    p.add_argument("--gt", required=True, help="directory of gt_*.pgm")
    p.add_argument("--classes", required=True, help="JSON mapping class name -> id")
    p.add_argument("--max-detections", type=int, default=evaluator.DEFAULT_MAX_DETECTIONS)
    p.add_argument("--out", default=None, help="report JSON path (default stdout)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("grad-check", help="finite-difference check of a loss gradient")
    p.add_argument("--loss", required=True, choices=gradcheck.LOSS_NAMES)
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--dim", type=int, default=8)
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("synth", help="generate synthetic scene pairs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--num-scenes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=96)
    p.add_argument("--shapes", choices=("disc", "ellipse", "mixed"), default="ellipse")
    p.add_argument("--min-instances", type=int, default=2)
    p.add_argument("--max-instances", type=int, default=5)
    p.add_argument("--touch-prob", type=float, default=0.7)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("loss", help="evaluate one loss and its gradient from files")
    p.add_argument("--loss", required=True, choices=gradcheck.LOSS_NAMES)
    p.add_argument("--inst", default=None, help="instance grid PGM")
    p.add_argument("--pred", default=None, help="predicted distance MGF (dist)")
    p.add_argument("--target", default=None, help="target field MGF (dist, boundary)")
    p.add_argument("--logits", default=None, help="logit field MGF (boundary)")
    p.add_argument("--embeddings", default=None, help="embedding MGF (disentangle)")
    p.add_argument("--pos-weight", type=float, default=None)
    p.add_argument("--neighbor-distance", type=float, default=None)
    p.add_argument("--lambda-sep", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="value JSON path (default stdout)")
    p.add_argument("--out-grad", default=None, help="gradient MGF path")
    p.set_defaults(func=_cmd_loss)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
