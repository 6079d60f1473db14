"""Command-line interface: every operation as a subcommand.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Every subcommand
that writes files also writes a ``*.manifest.json`` (or ``manifest.json``
in its output directory) recording the full configuration, the seed, and
the schema versions, so outputs can be reproduced exactly.  The
``CAUSALLAB_SEED`` environment variable supplies the seed when ``--seed``
is not given.  Subcommand parameters may also be supplied as a JSON
object via ``--config``; unknown keys are rejected and explicit flags
win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import rng as rngmod
from .dirichlet import (
    flat_hyperprior,
    sample_hyperprior,
    sample_mixture_params,
    sample_rows_from_mixture,
)
from .direction import estimate_baseline_error, lr_general
from .errors import CausalLabError, ValidationError
from .experiments import (
    HeatmapGridSpec,
    SweepConfig,
    render_lr_heatmaps,
    run_component_sweep,
    run_confounding_sweep,
    run_direction_sweep,
    run_six_class_experiment,
    train_structure_classifier,
)
from .generate import build_dataset, load_dataset, save_dataset
from .mlp import (
    TrainConfig,
    evaluate,
    forward,
    init_model,
    load_model,
    save_model,
    train,
)
from .reporting import emit_csv, emit_svg_plot, emit_trial_log, write_manifest
from .rng import stream
from .structures import ALL_STRUCTURES, CausalStructure
from .tables import JointTable

_STRUCTURE_NAMES = {s.name: s for s in ALL_STRUCTURES}


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("CAUSALLAB_SEED")
    return int(env) if env else 0


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in str(text).split(",") if tok != ""]


def _float_list(text: str) -> list[float]:
    text = str(text)
    if ":" in text:
        lo, hi = text.split(":", 1)
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(tok) for tok in text.split(",") if tok != ""]


def _classes_arg(text: str) -> list[CausalStructure]:
    if str(text).strip().lower() == "all":
        return list(ALL_STRUCTURES)
    out = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.upper() in _STRUCTURE_NAMES:
            out.append(_STRUCTURE_NAMES[tok.upper()])
        else:
            out.append(CausalStructure(int(tok)))
    if not out:
        raise ValueError("empty class list")
    return out


def _require_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CausalLabError(f"input file not found: {p}")
    return p


def _ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_table(path) -> JointTable:
    raw = json.loads(_require_file(path).read_text(encoding="utf-8"))
    try:
        k_x, k_y = int(raw["k_x"]), int(raw["k_y"])
        entries = np.array(raw["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise CausalLabError(f"{path}: malformed table file: {exc}") from exc
    if entries.shape != (k_x, k_y):
        raise CausalLabError(
            f"{path}: entries shape {entries.shape} does not match (k_x, k_y)=({k_x}, {k_y})"
        )
    return JointTable(entries)


def _manifest_config(args) -> dict:
    cfg = {}
    for key, value in vars(args).items():
        if key in ("func", "command", "config"):
            continue
        if isinstance(value, Path):
            value = str(value)
        if isinstance(value, (list, tuple)):
            value = [int(v) if isinstance(v, (bool, np.integer)) else v for v in value]
        cfg[key] = value
    return cfg


def _direction_name(structure: CausalStructure) -> str:
    return {CausalStructure.X_TO_Y: "X->Y", CausalStructure.Y_TO_X: "Y->X"}[structure]


# ---------------------------------------------------------------- commands


def _cmd_lr(args) -> int:
    table = _load_table(args.table)
    res = lr_general(table, clamp=args.clamp)
    print(f"log_lr = {res.log_lr:.12g}")
    print(f"log_det_xy = {res.log_det_xy:.12g}")
    print(f"log_det_yx = {res.log_det_yx:.12g}")
    print(f"log_prior_factor = {res.log_prior_factor:.12g}")
    print(f"decision = {_direction_name(res.decided)}")
    if args.out:
        payload = {
            "log_lr": res.log_lr,
            "log_det_xy": res.log_det_xy,
            "log_det_yx": res.log_det_yx,
            "log_prior_factor": res.log_prior_factor,
            "decision": res.decided.name,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(str(args.out) + ".manifest.json", "lr", _manifest_config(args), 0)
    return 0


def _cmd_classify(args) -> int:
    model = load_model(_require_file(args.model))
    table = _load_table(args.table)
    if table.k_x * table.k_y != model.layer_sizes[0]:
        raise CausalLabError(
            f"table size {table.k_x}x{table.k_y} does not match model input {model.layer_sizes[0]}"
        )
    probs = forward(model, table.entries.reshape(1, -1))[0]
    order = np.argsort(probs)[::-1]
    print("class posterior:")
    for idx in order:
        name = CausalStructure(model.classes[idx]).name
        print(f"  {name:<12} {probs[idx]:.6f}")
    predicted = CausalStructure(model.classes[int(np.argmax(probs))])
    print(f"predicted = {predicted.name}")
    try:
        res = lr_general(table)
        print(f"direction log_lr = {res.log_lr:.12g} ({_direction_name(res.decided)})")
    except CausalLabError as exc:
        print(f"direction log_lr unavailable: {exc}")
    if args.out:
        payload = {
            "posterior": {CausalStructure(c).name: float(p) for c, p in zip(model.classes, probs)},
            "predicted": predicted.name,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(str(args.out) + ".manifest.json", "classify", _manifest_config(args), 0)
    return 0


def _cmd_gen(args) -> int:
    seed = _resolve_seed(args.seed)
    k_x = args.kx if args.kx else args.k
    k_y = args.ky if args.ky else args.k
    if not k_x or not k_y:
        raise CausalLabError("specify --k or both --kx and --ky")
    if args.alpha_max > 0:
        spec = sample_hyperprior(
            k_x, k_y, args.alpha_max, args.components, stream(seed, rngmod.TAG_GEN_SPEC)
        )
    else:
        spec = flat_hyperprior(k_x, k_y)
    dataset = build_dataset(
        k_x, k_y, args.per_class, args.classes, spec, seed, args.confounding_variant
    )
    save_dataset(dataset, args.out)
    write_manifest(str(args.out) + ".manifest.json", "gen", _manifest_config(args), seed)
    print(f"wrote {len(dataset)} items to {args.out}")
    return 0


def _cmd_train(args) -> int:
    seed = _resolve_seed(args.seed)
    dataset = load_dataset(_require_file(args.dataset))
    cfg = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        validation_fraction=args.validation_fraction,
        patience=args.patience,
        momentum=args.momentum,
        seed=seed,
    )
    classes = tuple(sorted(int(c) for c in dataset.class_counts))
    layer_sizes = (dataset.k_x * dataset.k_y, *args.hidden, len(classes))
    model = init_model(
        layer_sizes, classes, seed=seed, input_scale=float(dataset.k_x * dataset.k_y)
    )
    trained, report = train(model, dataset, cfg)
    save_model(trained, args.out)
    report_path = str(args.out) + ".report.json"
    Path(report_path).write_text(
        json.dumps(
            {
                "train_losses": list(report.train_losses),
                "val_losses": list(report.val_losses),
                "initial_val_loss": report.initial_val_loss,
                "best_val_loss": report.best_val_loss,
                "best_epoch": report.best_epoch,
                "n_epochs_run": report.n_epochs_run,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    write_manifest(str(args.out) + ".manifest.json", "train", _manifest_config(args), seed)
    print(
        f"trained {layer_sizes} for {report.n_epochs_run} epochs; "
        f"best validation loss {report.best_val_loss:.6f} at epoch {report.best_epoch}"
    )
    return 0


def _cmd_eval(args) -> int:
    model = load_model(_require_file(args.model))
    dataset = load_dataset(_require_file(args.dataset))
    cm = evaluate(model, dataset)
    print("confusion matrix (rows = true, columns = predicted):")
    width = max(len(n) for n in cm.classes)
    print(" " * (width + 2) + "  ".join(f"{n[:10]:>10}" for n in cm.classes))
    for i, name in enumerate(cm.classes):
        row = "  ".join(f"{int(c):>10}" for c in cm.counts[i])
        print(f"{name:<{width}}  {row}")
    print(f"errors = {cm.n_errors}/{cm.total} ({cm.error_rate:.4%})")
    if args.out:
        emit_csv(cm, args.out)
        write_manifest(str(args.out) + ".manifest.json", "eval", _manifest_config(args), 0)
    return 0


def _sweep_common(args, kind: str) -> SweepConfig:
    cards = tuple((k, k) for k in args.k)
    return SweepConfig(
        cardinalities=cards,
        alpha_max_values=tuple(args.alpha_max),
        n_hyperpriors=args.hyperpriors,
        n_priors_per_hyperprior=args.priors,
        n_components=tuple(args.components) if kind == "components" else args.components,
        seed=_resolve_seed(args.seed),
    )


def _emit_sweep(result, outdir: Path, args, command: str) -> None:
    emit_csv(result, outdir / f"{result.kind}.csv")
    emit_svg_plot(result, outdir / f"{result.kind}.svg")
    if result.trial_log:
        emit_trial_log(result, outdir / "trials.csv")
    write_manifest(outdir / "manifest.json", command, _manifest_config(args), result.seed)
    for cell in result.cells:
        print(
            f"k={cell.k_x} alpha_max={cell.alpha_max:g} components={cell.n_components} "
            f"error={cell.error_rate:.4f} std={cell.std_dev:.4f}"
        )


def _cmd_sweep_direction(args) -> int:
    cfg = _sweep_common(args, "direction")
    outdir = _ensure_dir(args.out)
    result = run_direction_sweep(cfg, log_trials=args.log_trials)
    _emit_sweep(result, outdir, args, "sweep-direction")
    return 0


def _cmd_sweep_components(args) -> int:
    cfg = _sweep_common(args, "components")
    outdir = _ensure_dir(args.out)
    result = run_component_sweep(cfg, log_trials=args.log_trials)
    _emit_sweep(result, outdir, args, "sweep-components")
    return 0


def _cmd_sweep_confounding(args) -> int:
    cfg = _sweep_common(args, "confounding")
    outdir = _ensure_dir(args.out)
    models = {}
    for spec in args.model or []:
        k_text, _, path = str(spec).partition("=")
        if not path:
            raise CausalLabError(f"--model expects K=PATH, got {spec!r}")
        models[(int(k_text), int(k_text))] = load_model(_require_file(path))
    if args.train_inline:
        two = (CausalStructure.X_TO_Y, CausalStructure.CONFOUNDED)
        for k in args.k:
            if (k, k) in models:
                continue
            tc = TrainConfig(
                learning_rate=args.train_lr, max_epochs=args.train_epochs, seed=cfg.seed
            )
            model, _ = train_structure_classifier(
                k, k, two, args.train_per_class, tc, cfg.seed
            )
            models[(k, k)] = model
            save_model(model, outdir / f"confounding_model_k{k}.json")
    result = run_confounding_sweep(cfg, models, log_trials=args.log_trials)
    _emit_sweep(result, outdir, args, "sweep-confounding")
    return 0


def _cmd_six_class(args) -> int:
    seed = _resolve_seed(args.seed)
    outdir = _ensure_dir(args.out)
    model = load_model(_require_file(args.model))
    matrices = run_six_class_experiment(
        args.k,
        model,
        flat_test=args.flat,
        alpha_max=args.alpha_max,
        n_test=args.n_test,
        n_repeats=args.repeats,
        seed=seed,
        n_components=args.components,
    )
    rows = []
    for rep, cm in enumerate(matrices):
        emit_csv(cm, outdir / f"confusion_{rep:03d}.csv")
        rows.append((rep, cm.n_errors, cm.error_rate))
    emit_svg_plot(matrices[0], outdir / "confusion_000.svg")
    with open(outdir / "summary.csv", "w", encoding="utf-8") as fh:
        fh.write("repeat,errors,error_rate\n")
        for rep, errors, rate in rows:
            fh.write(f"{rep},{errors},{rate:.17g}\n")
    write_manifest(outdir / "manifest.json", "six-class", _manifest_config(args), seed)
    mean_err = float(np.mean([r[2] for r in rows]))
    print(f"mean error over {len(matrices)} repeats: {mean_err:.4%}")
    return 0


def _cmd_heatmap(args) -> int:
    seed = _resolve_seed(args.seed)
    outdir = _ensure_dir(args.out)
    spec = HeatmapGridSpec(tuple(args.d_slices), args.resolution)
    hyper = None
    if args.alpha_max is not None:
        rng = stream(seed, rngmod.TAG_HEATMAP)
        hyper = sample_hyperprior(2, 2, args.alpha_max, args.components, rng)
    grid = render_lr_heatmaps(spec, hyper)
    emit_csv(grid, outdir / "heatmap.csv")
    emit_svg_plot(grid, outdir / "heatmap.svg")
    write_manifest(outdir / "manifest.json", "heatmap", _manifest_config(args), seed)
    masked = int(grid.mask.sum())
    print(f"rendered {len(grid.d_slices)} slices at {grid.resolution}x{grid.resolution} "
          f"({masked} masked cells)")
    return 0


def _cmd_baseline_error(args) -> int:
    seed = _resolve_seed(args.seed)
    k_x = args.kx if args.kx else args.k
    k_y = args.ky if args.ky else args.k
    if not k_x or not k_y:
        raise CausalLabError("specify --k or both --kx and --ky")
    est = estimate_baseline_error(k_x, k_y, args.trials, seed)
    print(
        f"baseline error = {est.error_rate:.5f} +/- {est.std_error:.5f} "
        f"(k_x={est.k_x}, k_y={est.k_y}, trials={est.n_trials})"
    )
    if args.out:
        payload = {
            "error_rate": est.error_rate,
            "std_error": est.std_error,
            "n_trials": est.n_trials,
            "k_x": est.k_x,
            "k_y": est.k_y,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(str(args.out) + ".manifest.json", "baseline-error", _manifest_config(args), seed)
    return 0


def _cmd_sample_mixture(args) -> int:
    seed = _resolve_seed(args.seed)
    rng = stream(seed, rngmod.TAG_GEN_SPEC)
    mix = sample_mixture_params(args.alpha_max, args.dim, args.components, rng)
    print(f"mixture over dimension {mix.dim} with {mix.n_components} components:")
    for i, comp in enumerate(mix.components):
        print(f"  component {i}: alpha = {np.array2string(comp.alpha, precision=4)}")
    draws = sample_rows_from_mixture(mix, args.samples, rng)
    print("samples:")
    for row in draws:
        print("  " + np.array2string(row, precision=6))
    if args.out:
        payload = {
            "alpha_max": args.alpha_max,
            "components": [list(map(float, c.alpha)) for c in mix.components],
            "weights": [float(w) for w in mix.weights],
            "samples": [[float(v) for v in row] for row in draws],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        write_manifest(str(args.out) + ".manifest.json", "sample-mixture", _manifest_config(args), seed)
    return 0


# ---------------------------------------------------------------- parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed (default: $CAUSALLAB_SEED or 0)")
    sub.add_argument("--threads", type=int, default=None,
                     help="worker threads; 1 gives canonical bit-exact outputs (recorded only)")
    sub.add_argument("--config", type=str, default=None,
                     help="JSON file of parameters for this subcommand (flags override)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="causallab",
        description="Classify the causal structure linking two discrete variables "
                    "from their exact joint probability table.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def register(name: str, func, help_text: str) -> argparse.ArgumentParser:
        sub = subs.add_parser(name, help=help_text)
        sub.set_defaults(func=func, command=name)
        registry[name] = sub
        return sub

    sub = register("lr", _cmd_lr, "likelihood-ratio direction diagnostics for a table")
    sub.add_argument("--table", required=True, help="JSON table {k_x, k_y, entries}")
    sub.add_argument("--clamp", action="store_true", help="floor degenerate marginals at 1e-12")
    sub.add_argument("--out", default=None, help="also write the result as JSON")
    _add_common(sub)

    sub = register("classify", _cmd_classify, "class posterior for a table from a trained model")
    sub.add_argument("--table", required=True, help="JSON table {k_x, k_y, entries}")
    sub.add_argument("--model", required=True, help="trained model JSON")
    sub.add_argument("--out", default=None, help="also write the posterior as JSON")
    _add_common(sub)

    sub = register("gen", _cmd_gen, "generate a labeled dataset of joint tables")
    sub.add_argument("--k", type=int, default=None, help="shared cardinality of X and Y")
    sub.add_argument("--kx", type=int, default=None, help="cardinality of X")
    sub.add_argument("--ky", type=int, default=None, help="cardinality of Y")
    sub.add_argument("--per-class", type=int, required=True, dest="per_class",
                     help="items per class")
    sub.add_argument("--classes", type=_classes_arg, default="all",
                     help="'all' or comma list of names/codes")
    sub.add_argument("--alpha-max", type=float, default=0.0, dest="alpha_max",
                     help="mixture bound; 0 keeps hyperpriors flat")
    sub.add_argument("--components", type=int, default=10, help="mixture components")
    sub.add_argument("--confounding-variant", choices=["canonical", "factor-product"],
                     default="canonical", dest="confounding_variant",
                     help="parameterization of edge-plus-confounder structures")
    sub.add_argument("--out", required=True, help="output dataset path (JSON lines)")
    _add_common(sub)

    sub = register("train", _cmd_train, "train a classifier on a dataset file")
    sub.add_argument("--dataset", required=True, help="dataset file from 'gen'")
    sub.add_argument("--out", required=True, help="output model JSON path")
    sub.add_argument("--hidden", type=_int_list, default=[256, 256],
                     help="hidden layer sizes, comma separated")
    sub.add_argument("--learning-rate", type=float, default=1e-3, dest="learning_rate")
    sub.add_argument("--batch-size", type=int, default=128, dest="batch_size")
    sub.add_argument("--max-epochs", type=int, default=200, dest="max_epochs")
    sub.add_argument("--validation-fraction", type=float, default=0.1,
                     dest="validation_fraction")
    sub.add_argument("--patience", type=int, default=10)
    sub.add_argument("--momentum", type=float, default=0.9)
    _add_common(sub)

    sub = register("eval", _cmd_eval, "confusion matrix of a model on a dataset")
    sub.add_argument("--model", required=True)
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--out", default=None, help="also write the matrix as CSV")
    _add_common(sub)

    def sweep_args(sub: argparse.ArgumentParser, components_list: bool) -> None:
        sub.add_argument("--k", type=_int_list, default=[2, 10],
                         help="square cardinalities, comma separated")
        sub.add_argument("--hyperpriors", type=int, default=100,
                         help="hyperprior draws per cell")
        sub.add_argument("--priors", type=int, default=100,
                         help="prior draws per hyperprior")
        if components_list:
            sub.add_argument("--components", type=_int_list,
                             default=[1, 2, 4, 8, 16, 32, 64, 128],
                             help="mixture component counts to scan")
            sub.add_argument("--alpha-max", type=_float_list, default=[7.0],
                             dest="alpha_max", help="fixed mixture bound")
        else:
            sub.add_argument("--components", type=int, default=10,
                             help="mixture components per hyperprior")
            sub.add_argument("--alpha-max", type=_float_list, default=list(map(float, range(9))),
                             dest="alpha_max",
                             help="mixture bounds, comma list or lo:hi range")
        sub.add_argument("--log-trials", action="store_true", dest="log_trials",
                         help="persist per-trial outcomes next to the results")
        sub.add_argument("--out", required=True, help="output directory")

    sub = register("sweep-direction", _cmd_sweep_direction,
                   "direction-classifier error versus hyperprior complexity")
    sweep_args(sub, components_list=False)
    _add_common(sub)

    sub = register("sweep-components", _cmd_sweep_components,
                   "direction-classifier error versus mixture size")
    sweep_args(sub, components_list=True)
    _add_common(sub)

    sub = register("sweep-confounding", _cmd_sweep_confounding,
                   "confounding-detector error versus hyperprior complexity")
    sweep_args(sub, components_list=False)
    sub.add_argument("--model", action="append", default=None, metavar="K=PATH",
                     help="trained 2-class model per cardinality (repeatable)")
    sub.add_argument("--train-inline", action="store_true", dest="train_inline",
                     help="train missing flat 2-class models before sweeping")
    sub.add_argument("--train-per-class", type=int, default=10000, dest="train_per_class")
    sub.add_argument("--train-lr", type=float, default=0.05, dest="train_lr")
    sub.add_argument("--train-epochs", type=int, default=120, dest="train_epochs")
    _add_common(sub)

    sub = register("six-class", _cmd_six_class,
                   "confusion matrices for the all-structures classifier")
    sub.add_argument("--k", type=int, required=True, help="cardinality of X and Y")
    sub.add_argument("--model", required=True, help="trained 6-class model JSON")
    sub.add_argument("--flat", action="store_true", help="flat-hyperprior test sets")
    sub.add_argument("--alpha-max", type=float, default=7.0, dest="alpha_max",
                     help="mixture bound for non-flat test sets")
    sub.add_argument("--n-test", type=int, default=10000, dest="n_test",
                     help="items per test set")
    sub.add_argument("--repeats", type=int, default=1, help="independent test sets")
    sub.add_argument("--components", type=int, default=10, help="mixture components")
    sub.add_argument("--out", required=True, help="output directory")
    _add_common(sub)

    sub = register("heatmap", _cmd_heatmap, "decision-boundary heatmaps over 2x2 joints")
    sub.add_argument("--resolution", type=int, default=201)
    sub.add_argument("--d-slices", type=_float_list,
                     default=[round(0.1 * i, 1) for i in range(1, 10)], dest="d_slices")
    sub.add_argument("--alpha-max", type=float, default=None, dest="alpha_max",
                     help="render under a sampled mixture hyperprior instead of flat")
    sub.add_argument("--components", type=int, default=10)
    sub.add_argument("--out", required=True, help="output directory")
    _add_common(sub)

    sub = register("baseline-error", _cmd_baseline_error,
                   "Monte Carlo error of the flat direction classifier")
    sub.add_argument("--k", type=int, default=None, help="shared cardinality")
    sub.add_argument("--kx", type=int, default=None)
    sub.add_argument("--ky", type=int, default=None)
    sub.add_argument("--trials", type=int, default=100000)
    sub.add_argument("--out", default=None, help="also write the estimate as JSON")
    _add_common(sub)

    sub = register("sample-mixture", _cmd_sample_mixture,
                   "dump a sampled Dirichlet mixture and draws from it")
    sub.add_argument("--dim", type=int, default=2)
    sub.add_argument("--alpha-max", type=float, default=3.0, dest="alpha_max")
    sub.add_argument("--components", type=int, default=10)
    sub.add_argument("--samples", type=int, default=3)
    sub.add_argument("--out", default=None, help="also write params and samples as JSON")
    _add_common(sub)

    return parser, registry


def _apply_config(argv: list[str], parser, registry) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = registry[args.command]
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            sub.error("--config must hold a JSON object")
        allowed = {a.dest for a in sub._actions} - {"help", "config", "func", "command"}
        unknown = set(raw) - allowed
        if unknown:
            sub.error(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**raw)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        args = _apply_config(argv, parser, registry)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except CausalLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
