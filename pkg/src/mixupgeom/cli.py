"""Command-line entry point.

Every command is deterministic given its flags and config values: seeds
are always explicit, output files are written atomically (temp file plus
rename), and repeated invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import calibration, projection, theory, trainer, ufm
from .etf import build_simplex_etf, etf_deviation_metrics, read_classifier_csv
from .kernels import KernelSolveError, same_class_equation
from .mixup import BetaSpec, make_mixup_batch, mix_pair, sample_lambda
from .theory import TheoryParams


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_via(path: str, writer) -> None:
    """Run a path-taking writer against a temp file, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- theory-solve


def cmd_theory_solve(args) -> int:
    if args.samples < 1:
        print("error: --samples must be positive", file=sys.stderr)
        return 2
    if args.classes < 2 or args.classes > args.C:
        print("error: --classes must be in [2, C]", file=sys.stderr)
        return 2
    try:
        params = TheoryParams(C=args.C, m=args.m, lambda_h=args.lambda_h, d=args.d)
        frame = build_simplex_etf(args.C, args.d, args.m, args.seed)
        rng = np.random.default_rng(args.seed)
        spec = BetaSpec(args.alpha)
        lams = [sample_lambda(spec, rng) for _ in range(args.samples)]
        records = theory.generate_configuration(
            params, frame, range(args.classes), lams, amplified=args.amplify
        )
        cfg = ufm.UfmConfig(lambda_h=args.lambda_h)
        report = ufm.total_objective(frame.rows, records, cfg)
    except (KernelSolveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        _atomic_write_via(args.out, lambda p: theory.features_to_csv(records, p))
        summary_path = args.summary_out or args.out + ".summary.json"
        _atomic_write_text(
            summary_path,
            json.dumps(
                {
                    "C": args.C,
                    "m": args.m,
                    "d": args.d,
                    "lambda_h": args.lambda_h,
                    "classes": args.classes,
                    "samples": args.samples,
                    "alpha": args.alpha,
                    "seed": args.seed,
                    "amplified": bool(args.amplify),
                    "mean_per_sample_loss": report.mean_per_sample,
                },
                indent=2,
            )
            + "\n",
        )
    print(f"{report.mean_per_sample:.6f}")
    return 0


# ---------------------------------------------------------------- oracle-check


def _parse_list(text: str, cast):
    values = [cast(v) for v in text.split(",") if v.strip()]
    return values


def cmd_oracle_check(args) -> int:
    cs = _parse_list(args.C_list, int)
    ms = _parse_list(args.m_list, float)
    lhs = _parse_list(args.lambda_h_list, float)
    lams = _parse_list(args.lambda_list, float)
    if not cs or not ms or not lhs or not lams:
        print("error: empty oracle grid", file=sys.stderr)
        return 2
    worst = 0.0
    failed = False
    print(f"{'C':>4} {'m':>6} {'lambda_h':>10} {'lambda':>8} {'grad_resid':>12} {'status':>8}")
    for C in cs:
        for m in ms:
            for lh in lhs:
                params = TheoryParams(C=C, m=m, lambda_h=lh, d=C)
                same = theory.solve_same_class(params)
                frame = build_simplex_etf(C, C, m, seed=0)
                cfg = ufm.UfmConfig(lambda_h=lh)
                for lam in lams:
                    try:
                        sol = theory.solve_different_class(params, lam)
                        rec = theory.assemble_feature(sol, frame, 0, 1)
                        h = rec.h
                        if args.perturb:
                            h = h + args.perturb
                        resid = float(
                            np.linalg.norm(
                                ufm.per_sample_grad(frame.rows, h, 0, 1, lam, cfg)
                            )
                        )
                    except KernelSolveError as exc:
                        print(f"error: {exc}", file=sys.stderr)
                        return 1
                    worst = max(worst, resid)
                    ok = resid <= args.tol_grad
                    failed = failed or not ok
                    print(
                        f"{C:>4} {m:>6.2f} {lh:>10.1e} {lam:>8.3f} "
                        f"{resid:>12.3e} {'ok' if ok else 'FAIL':>8}"
                    )
                same_resid = abs(same_class_equation(same.k, C, m * m, lh))
                ok = same_resid <= args.tol_same
                failed = failed or not ok
                print(
                    f"{C:>4} {m:>6.2f} {lh:>10.1e} {'same':>8} "
                    f"{same_resid:>12.3e} {'ok' if ok else 'FAIL':>8}"
                )
    if failed:
        print(f"worst residual {worst:.3e} exceeds tolerance", file=sys.stderr)
        return 1
    return 0


# ----------------------------------------------------------------------- train


_DATASET_KEYS = {
    "dataset.num_classes": int,
    "dataset.input_dim": int,
    "dataset.mean_scale": float,
    "dataset.noise_scale": float,
    "dataset.samples_per_class": int,
    "dataset.seed": int,
}
_TRAIN_KEYS = {
    "train.hidden_layers": int,
    "train.width": int,
    "train.activation": str,
    "train.epochs": int,
    "train.batch_size": int,
    "train.learning_rate": float,
    "train.momentum": float,
    "train.weight_decay": float,
    "train.mixup_alpha": float,
    "train.loss_kind": str,
    "train.classifier_mode": str,
    "train.etf_multiplier": float,
    "train.seed": int,
}


def parse_config(text: str) -> dict:
    """Flat dotted-key config: one `key = value` per line, # comments.

    Unknown keys are rejected with their line number.
    """
    known = {**_DATASET_KEYS, **_TRAIN_KEYS}
    out = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate config key {key!r}")
        try:
            out[key] = known[key](value)
        except ValueError:
            raise ValueError(f"line {lineno}: bad value for {key}: {value!r}")
    return out


def _dataset_from_config(cfg: dict) -> trainer.SyntheticDataset:
    num_classes = cfg.get("dataset.num_classes", 3)
    input_dim = cfg.get("dataset.input_dim", 2)
    scale = cfg.get("dataset.mean_scale", 4.0)
    angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
    means = np.zeros((num_classes, input_dim))
    means[:, 0] = scale * np.cos(angles)
    if input_dim > 1:
        means[:, 1] = scale * np.sin(angles)
    return trainer.SyntheticDataset(
        num_classes=num_classes,
        input_dim=input_dim,
        class_means=means,
        noise_scale=cfg.get("dataset.noise_scale", 0.5),
        samples_per_class=cfg.get("dataset.samples_per_class", 500),
        seed=cfg.get("dataset.seed", 0),
    )


def _train_config_from_config(cfg: dict) -> trainer.TrainConfig:
    kwargs = {
        key.split(".", 1)[1]: value
        for key, value in cfg.items()
        if key.startswith("train.")
    }
    return trainer.TrainConfig(**kwargs)


def cmd_train(args) -> int:
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        spec = _dataset_from_config(cfg)
        tcfg = _train_config_from_config(cfg)
        data = trainer.make_synthetic(spec)
        model = trainer.train(data, tcfg)
    except (ValueError, OSError, trainer.TrainingDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _atomic_write_text(args.out, trainer.model_to_json(model) + "\n")
    if args.dataset_out:
        _atomic_write_text(args.dataset_out, trainer.dataset_to_csv(*data))
    final = model.history[-1] if model.history else None
    if final is not None:
        print(f"final loss {final.loss:.6f} accuracy {final.accuracy:.4f}")
    return 0


# --------------------------------------------------------------------- extract


def cmd_extract(args) -> int:
    try:
        with open(args.model) as fh:
            model = trainer.model_from_json(fh.read())
        with open(args.dataset) as fh:
            inputs, labels = trainer.dataset_from_csv(fh.read())
        rng = np.random.default_rng(args.seed)
        samples = make_mixup_batch(
            inputs, labels, BetaSpec(args.alpha), args.count, rng, model.num_classes
        )
        records = trainer.extract_activations(model, samples)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _atomic_write_via(args.out, lambda p: theory.features_to_csv(records, p))
    print(f"wrote {len(records)} activation records")
    return 0


# --------------------------------------------------------------------- project


def cmd_project(args) -> int:
    try:
        records = theory.features_from_csv(args.features)
        w = read_classifier_csv(args.classifier)
        if w.shape[0] != 3:
            print(
                f"error: projection needs a 3-row classifier, got {w.shape[0]}",
                file=sys.stderr,
            )
            return 1
        center = None
        if args.center_mean:
            center = np.mean([r.h for r in records], axis=0)
        op = projection.build_projection(w, center)
        points = projection.project(op, records)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _atomic_write_text(args.out, projection.points_to_csv(points))
    print(f"wrote {len(points)} projected points")
    return 0


# ------------------------------------------------------------------------- ece


def cmd_ece(args) -> int:
    try:
        conf, pred, lab = [], [], []
        with open(args.predictions) as fh:
            header = fh.readline().strip()
            if header != "confidence,predicted,label":
                raise ValueError(
                    f"{args.predictions}:1: expected header "
                    "'confidence,predicted,label'"
                )
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                try:
                    conf.append(float(parts[0]))
                    pred.append(int(parts[1]))
                    lab.append(int(parts[2]))
                except (ValueError, IndexError) as exc:
                    raise ValueError(
                        f"{args.predictions}:{lineno}: bad prediction row: {exc}"
                    )
        report = calibration.ece(conf, pred, lab, args.bins)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        _atomic_write_text(args.out, calibration.report_to_json(report) + "\n")
    print(f"{report.ece:.6f}")
    return 0


# ----------------------------------------------------------------- etf-metrics


def cmd_etf_metrics(args) -> int:
    try:
        w = read_classifier_csv(args.classifier)
        metrics = etf_deviation_metrics(w)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{metrics.norm_cv:.12g} {metrics.cosine_std:.12g}")
    return 0


# ------------------------------------------------------------------ trajectory


def cmd_trajectory(args) -> int:
    try:
        with open(args.model) as fh:
            model = trainer.model_from_json(fh.read())
        with open(args.dataset) as fh:
            inputs, labels = trainer.dataset_from_csv(fh.read())
        classes = tuple(_parse_list(args.classes, int))
        if len(classes) != 3:
            raise ValueError(f"--classes needs exactly 3 ids, got {args.classes!r}")
        eye = np.eye(model.num_classes)
        sample = mix_pair(
            inputs[args.i],
            eye[labels[args.i]],
            inputs[args.j],
            eye[labels[args.j]],
            args.lam,
        )
        layers = trainer.layer_trajectory(model, sample)
        op = projection.build_projection(model.clf_w[list(classes)], None, classes)
        points = [projection.project_vector(op, h) for h in layers]
    except (ValueError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    lines = ["layer,px,py"]
    for depth, p in enumerate(points):
        lines.append(f"{depth},{float(p[0])!r},{float(p[1])!r}")
    _atomic_write_text(args.out, "\n".join(lines) + "\n")
    print(f"wrote trajectory of {len(points)} layers")
    return 0


# ----------------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixupgeom",
        description="Geometry of last-layer features under mixup training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "theory-solve",
        help="closed-form optimal feature configuration and its mean loss",
    )
    p.add_argument("--C", type=int, default=10, help="number of classes")
    p.add_argument("--m", type=float, default=3.0, help="classifier row norm")
    p.add_argument("--d", type=int, default=100, help="feature dimension")
    p.add_argument("--lambda-h", type=float, default=1e-6, help="feature decay")
    p.add_argument("--classes", type=int, default=3, help="size of the class subset")
    p.add_argument("--samples", type=int, default=5000, help="lambda draws")
    p.add_argument("--alpha", type=float, default=1.0, help="Beta(alpha, alpha)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplify", action="store_true", help="apply channel amplification")
    p.add_argument("--out", default=None, help="feature CSV output path")
    p.add_argument(
        "--summary-out", default=None, help="JSON summary path (default: OUT.summary.json)"
    )
    p.set_defaults(func=cmd_theory_solve)

    p = sub.add_parser(
        "oracle-check", help="verify closed-form features against the gradient oracle"
    )
    p.add_argument("--C-list", default="3,5,10", help="comma-separated class counts")
    p.add_argument("--m-list", default="1,3", help="comma-separated multipliers")
    p.add_argument(
        "--lambda-h-list", default="1e-6,1e-2", help="comma-separated decay values"
    )
    p.add_argument(
        "--lambda-list",
        default="0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
        help="comma-separated mixing coefficients",
    )
    p.add_argument("--tol-grad", type=float, default=1e-8)
    p.add_argument("--tol-same", type=float, default=1e-10)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("train", help="train the MLP from a config file")
    p.add_argument("--config", required=True, help="dotted key-value config path")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--dataset-out", default=None, help="also dump the dataset CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract mixed-sample activations from a model")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--dataset", required=True, help="dataset CSV path")
    p.add_argument("--count", type=int, default=1000, help="number of mixed samples")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="feature CSV output path")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("project", help="project features onto the 2-D simplex view")
    p.add_argument("--features", required=True, help="feature CSV path")
    p.add_argument("--classifier", required=True, help="3-row classifier CSV path")
    p.add_argument(
        "--center-mean",
        action="store_true",
        help="subtract the mean feature before projecting (default: origin)",
    )
    p.add_argument("--out", required=True, help="point CSV output path")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("ece", help="expected calibration error of a prediction CSV")
    p.add_argument(
        "--predictions", required=True, help="CSV with confidence,predicted,label"
    )
    p.add_argument("--bins", type=int, default=calibration.DEFAULT_BINS)
    p.add_argument("--out", default=None, help="JSON report output path")
    p.set_defaults(func=cmd_ece)

    p = sub.add_parser("etf-metrics", help="norm and cosine spread of a classifier CSV")
    p.add_argument("--classifier", required=True)
    p.set_defaults(func=cmd_etf_metrics)

    p = sub.add_parser(
        "trajectory", help="layer-wise projected trajectory of one mixed sample"
    )
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--dataset", required=True, help="dataset CSV path")
    p.add_argument("--i", type=int, required=True, help="first source index")
    p.add_argument("--j", type=int, required=True, help="second source index")
    p.add_argument("--lam", type=float, required=True, help="mixing coefficient")
    p.add_argument("--classes", default="0,1,2", help="3 class ids for the view")
    p.add_argument("--out", required=True, help="trajectory CSV output path")
    p.set_defaults(func=cmd_trajectory)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
