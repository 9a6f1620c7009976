"""Command-line interface: data generation, ratio fitting, training, reports.

Every subcommand writes deterministic artifacts (JSON with sorted keys, CSV
with shortest-round-trip floats, SVG with no timestamps), so rerunning a
command with the same configuration reproduces the outputs byte for byte.
Artifacts embed the resolved configuration and the tool version.

Exit codes: 0 on success, 1 for runtime failures (single ``error: ...`` line
on stderr), 2 for flag misuse.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, adversarial, cohorts, cycle, kliep, metrics
from .data import SampleSet, gen_gaussian, gen_uniform, read_samples, write_samples
from .kliep import ImportanceModel, KliepConfig
from .neural import TrainingError
from .rng import DATA_STREAM, KLIEP_STREAM, RngStream

TOY_SOURCE_SEED = 1
TOY_TARGET_SEED = 2


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(args: argparse.Namespace, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _config_of(args: argparse.Namespace, keys: list[str]) -> dict:
    return {k: getattr(args, k) for k in keys}


def _report_lines(label: str, rep: metrics.DistanceReport) -> list[str]:
    return [
        f"{label:<12} mu={rep.mu_a:8.4f}  sigma={rep.sigma_a:7.4f}  "
        f"W1={rep.wasserstein:7.4f}  energy={rep.energy:7.4f}"
    ]


def _write_weight_csv(path: str | Path, values: np.ndarray) -> None:
    Path(path).write_text("\n".join(repr(float(v)) for v in values) + "\n")


def _read_weight_csv(path: str | Path) -> np.ndarray:
    return np.array([float(line) for line in Path(path).read_text().split()], dtype=np.float64)


# ---------------------------------------------------------------- commands


def _cmd_gen_data(args: argparse.Namespace) -> int:
    rng = RngStream(args.seed, stream_id=DATA_STREAM)
    if args.dist == "uniform":
        samples = gen_uniform(args.n, args.dim, args.low, args.high, rng)
        params = {"low": args.low, "high": args.high}
    else:
        samples = gen_gaussian(args.n, args.dim, args.mean, args.std, rng)
        params = {"mean": args.mean, "std": args.std}
    write_samples(
        samples,
        args.out,
        extra_meta={
            "generator": args.dist,
            "params": params,
            "seed": args.seed,
            "version": __version__,
        },
    )
    payload = {
        "out": args.out,
        "n": samples.n,
        "d": samples.d,
        "config": _config_of(args, ["dist", "n", "dim", "seed"]) | params,
        "version": __version__,
    }
    _emit(args, payload, [f"wrote {samples.n} x {samples.d} samples to {args.out}"])
    return 0


def _cmd_fit_kliep(args: argparse.Namespace) -> int:
    numerator = read_samples(args.numerator)
    denominator = read_samples(args.denominator)
    cfg = KliepConfig(
        num_centers=args.num_centers,
        sigma_grid=args.sigma_grid,
        cv_folds=args.cv_folds,
        max_iters=args.max_iters,
        tol=args.tol,
    )
    model = kliep.fit(
        numerator,
        denominator,
        cfg,
        RngStream(args.seed, stream_id=KLIEP_STREAM),
        direction=args.direction,
    )
    doc = model.to_dict()
    doc["config"] = _config_of(
        args, ["numerator", "denominator", "num_centers", "cv_folds", "max_iters", "tol", "seed"]
    ) | {"sigma_grid": list(args.sigma_grid)}
    doc["version"] = __version__
    _write_json(args.out, doc)
    mean_w = float(model.weights(denominator).mean())
    payload = {
        "out": args.out,
        "sigma": model.basis.sigma,
        "objective": model.fit_log.objective,
        "iters": model.fit_log.iters,
        "mean_denominator_weight": mean_w,
        "version": __version__,
    }
    _emit(
        args,
        payload,
        [
            f"fitted {model.direction}: sigma={model.basis.sigma:.6g} "
            f"objective={model.fit_log.objective:.6f} iters={model.fit_log.iters}",
            f"mean denominator weight = {mean_w:.12f}",
            f"wrote {args.out}",
        ],
    )
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    model = ImportanceModel.load(args.model)
    xs = read_samples(args.data)
    values = model.weights(xs)
    _write_weight_csv(args.out, values)
    payload = {
        "out": args.out,
        "n": int(values.size),
        "mean": float(values.mean()),
        "min": float(values.min()),
        "max": float(values.max()),
        "version": __version__,
    }
    _emit(
        args,
        payload,
        [
            f"evaluated {values.size} weights: mean={values.mean():.6f} "
            f"min={values.min():.6f} max={values.max():.6f}",
            f"wrote {args.out}",
        ],
    )
    return 0


def _train_config(args: argparse.Namespace) -> dict:
    return _config_of(
        args,
        ["source", "target", "mode", "seed", "epochs", "batch_size",
         "gen_lr", "disc_lr", "shuffle", "saturating"],
    ) | {
        "gen_hidden": list(args.gen_hidden),
        "disc_hidden": list(args.disc_hidden),
        "weights": args.weights,
    }


def _cmd_train_gan(args: argparse.Namespace) -> int:
    if args.mode == "kliep" and args.weights is None:
        args._parser.error("--weights is required when --mode kliep")
    if args.mode == "vanilla" and args.weights is not None:
        args._parser.error("--weights is only valid with --mode kliep")
    source = read_samples(args.source)
    target = read_samples(args.target)
    importance = _read_weight_csv(args.weights) if args.weights else None
    run = adversarial.train(
        source,
        target,
        mode=args.mode,
        importance=importance,
        seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch_size,
        gen_lr=args.gen_lr,
        disc_lr=args.disc_lr,
        shuffle=args.shuffle,
        gen_hidden=args.gen_hidden,
        disc_hidden=args.disc_hidden,
        saturating=args.saturating,
    )
    generated = adversarial.generate(run.generator, source)
    rep = metrics.report(generated, target)

    prefix = args.out_prefix
    run.generator.save(f"{prefix}.generator.json")
    run.discriminator.save(f"{prefix}.discriminator.json")
    write_samples(generated, f"{prefix}.generated.csv",
                  extra_meta={"generator": "gan", "seed": args.seed, "version": __version__})
    doc = {
        "mode": run.mode,
        "seed": run.seed,
        "config": _train_config(args),
        "history": [h.to_dict() for h in run.history],
        "final_metrics": rep.to_dict(),
        "version": __version__,
    }
    _write_json(f"{prefix}.run.json", doc)
    payload = doc | {"out_prefix": prefix}
    _emit(
        args,
        payload,
        [
            f"trained {run.mode} GAN for {args.epochs} epochs "
            f"(disc loss {run.history[-1].disc_loss:.4f}, gen loss {run.history[-1].gen_loss:.4f})",
            *_report_lines("generated", rep),
            f"wrote {prefix}.run.json",
        ],
    )
    return 0


def _cmd_train_cycle(args: argparse.Namespace) -> int:
    if (args.model_w is None) != (args.model_psi is None):
        args._parser.error("--model-w and --model-psi must be given together")
    source = read_samples(args.source)
    target = read_samples(args.target)
    models = None
    if args.model_w:
        models = (ImportanceModel.load(args.model_w), ImportanceModel.load(args.model_psi))
    cfg = cycle.CycleConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        gen_lr=args.gen_lr,
        disc_lr=args.disc_lr,
        lambda_cyc=args.lambda_cyc,
        gen_hidden=args.gen_hidden,
        disc_hidden=args.disc_hidden,
        shuffle=args.shuffle,
        saturating=args.saturating,
    )
    system, history = cycle.train_cycle(source, target, models, cfg, seed=args.seed)
    translated = adversarial.generate(system.g_r, source)
    rep = metrics.report(translated, target)

    prefix = args.out_prefix
    system.g_r.save(f"{prefix}.gen_source_to_target.json")
    system.g_s.save(f"{prefix}.gen_target_to_source.json")
    system.d_r.save(f"{prefix}.disc_target.json")
    system.d_s.save(f"{prefix}.disc_source.json")
    doc = {
        "seed": args.seed,
        "config": _config_of(
            args,
            ["source", "target", "seed", "epochs", "batch_size", "gen_lr",
             "disc_lr", "lambda_cyc", "shuffle", "saturating"],
        )
        | {
            "gen_hidden": list(args.gen_hidden),
            "disc_hidden": list(args.disc_hidden),
            "model_w": args.model_w,
            "model_psi": args.model_psi,
        },
        "history": history,
        "final_metrics": rep.to_dict(),
        "version": __version__,
    }
    _write_json(f"{prefix}.run.json", doc)
    payload = doc | {"out_prefix": prefix}
    _emit(
        args,
        payload,
        [
            f"trained cycle system for {args.epochs} epochs "
            f"(gen total {history[-1]['gen_total']:.4f}, cycle {history[-1]['cycle']:.4f})",
            *_report_lines("translated", rep),
            f"wrote {prefix}.run.json",
        ],
    )
    return 0


def _cmd_eval_dist(args: argparse.Namespace) -> int:
    a = read_samples(args.a)
    b = read_samples(args.b)
    rep = metrics.report(a, b)
    doc = rep.to_dict() | {
        "config": _config_of(args, ["a", "b"]),
        "version": __version__,
    }
    if args.out:
        _write_json(args.out, doc)
    _emit(
        args,
        doc,
        [
            f"{'set':<8} {'mu':>8} {'sigma':>8}",
            f"{'a':<8} {rep.mu_a:8.4f} {rep.sigma_a:8.4f}",
            f"{'b':<8} {rep.mu_b:8.4f} {rep.sigma_b:8.4f}",
            f"wasserstein1 = {rep.wasserstein:.4f}",
            f"energy       = {rep.energy:.4f}",
        ]
        + ([f"wrote {args.out}"] if args.out else []),
    )
    return 0


def _cmd_cohorts(args: argparse.Namespace) -> int:
    values = _read_weight_csv(args.weights)
    result = cohorts.split(values, args.k)
    doc = {
        "thresholds": result.thresholds,
        "cohort_sizes": result.counts,
        "labels": result.labels,
        "config": _config_of(args, ["weights", "k"]),
        "version": __version__,
    }
    _write_json(args.out, doc)
    sizes = ", ".join(f"{k}={v}" for k, v in result.counts.items())
    _emit(args, doc, [f"split {values.size} weights into {sizes}", f"wrote {args.out}"])
    return 0


def _cmd_ablation(args: argparse.Namespace) -> int:
    source = read_samples(args.source)
    target = read_samples(args.target)
    importance = _read_weight_csv(args.weights) if args.weights else None
    result = cohorts.ablation(
        source,
        target,
        seeds=list(args.seeds),
        k=args.k,
        importance=importance,
        epochs=args.epochs,
        batch_size=args.batch_size,
        gen_lr=args.gen_lr,
        disc_lr=args.disc_lr,
        gen_hidden=args.gen_hidden,
        disc_hidden=args.disc_hidden,
    )
    doc = result | {
        "config": _config_of(
            args,
            ["source", "target", "k", "epochs", "batch_size", "gen_lr", "disc_lr", "weights"],
        )
        | {
            "seeds": list(args.seeds),
            "gen_hidden": list(args.gen_hidden),
            "disc_hidden": list(args.disc_hidden),
        },
        "version": __version__,
    }
    _write_json(args.out, doc)
    lines = []
    for entry in result["per_cohort"]:
        rep = entry["report"]
        lines.append(
            f"{entry['cohort']:<8} seed={entry['seed']:<3} "
            f"W1={rep['wasserstein']:7.4f}  energy={rep['energy']:7.4f}"
        )
    lines.append(f"wrote {args.out}")
    _emit(args, doc, lines)
    return 0


def _cmd_hist(args: argparse.Namespace) -> int:
    if args.labels is not None and len(args.labels) != len(args.inputs):
        args._parser.error("--labels must match --inputs in count")
    labels = args.labels or [Path(p).stem for p in args.inputs]
    series = [(label, metrics.pool(read_samples(path)))
              for label, path in zip(labels, args.inputs)]
    hist = metrics.histogram(series, bins=args.bins)
    Path(args.out).write_text(metrics.histogram_svg(hist, title=args.title))
    if args.json_out:
        _write_json(args.json_out, hist | {"version": __version__})
    payload = {"out": args.out, "bins": args.bins, "series": labels, "version": __version__}
    _emit(args, payload, [f"wrote histogram of {len(series)} series to {args.out}"])
    return 0


def _cmd_repro_toy(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    source = gen_uniform(args.n, args.dim, 0.0, 10.0, RngStream(TOY_SOURCE_SEED, DATA_STREAM))
    target = gen_gaussian(args.n, args.dim, 7.0, 0.5, RngStream(TOY_TARGET_SEED, DATA_STREAM))
    write_samples(source, out / "source.csv",
                  extra_meta={"generator": "uniform", "params": {"low": 0.0, "high": 10.0},
                              "seed": TOY_SOURCE_SEED, "version": __version__})
    write_samples(target, out / "target.csv",
                  extra_meta={"generator": "gaussian", "params": {"mean": 7.0, "std": 0.5},
                              "seed": TOY_TARGET_SEED, "version": __version__})

    model = kliep.fit(
        target, source, KliepConfig(), RngStream(args.seed, KLIEP_STREAM),
        direction="target_over_source",
    )
    model.save(out / "importance_model.json")
    importance = model.weights(source)
    _write_weight_csv(out / "importance_weights.csv", importance)

    runs = {}
    reports = {}
    generated = {}
    for mode in ("vanilla", "kliep"):
        run = adversarial.train(
            source,
            target,
            mode=mode,
            importance=importance if mode == "kliep" else None,
            seed=args.seed,
            epochs=args.epochs,
            batch_size=args.batch_size,
            gen_lr=args.gen_lr,
            disc_lr=args.disc_lr,
        )
        gen_set = adversarial.generate(run.generator, source)
        rep = metrics.report(gen_set, target)
        run.generator.save(out / f"{mode}.generator.json")
        run.discriminator.save(out / f"{mode}.discriminator.json")
        rep.save(out / f"{mode}.report.json")
        runs[mode] = run
        reports[mode] = rep
        generated[mode] = gen_set

    hist = metrics.histogram(
        [
            ("source", metrics.pool(source)),
            ("target", metrics.pool(target)),
            ("vanilla", metrics.pool(generated["vanilla"])),
            ("kliep", metrics.pool(generated["kliep"])),
        ]
    )
    (out / "histogram.svg").write_text(
        metrics.histogram_svg(hist, title="source / target / vanilla / kliep")
    )

    baseline = metrics.report(source, target)
    doc = {
        "config": _config_of(
            args, ["seed", "n", "dim", "epochs", "batch_size", "gen_lr", "disc_lr"]
        ),
        "baseline": baseline.to_dict(),
        "vanilla": reports["vanilla"].to_dict(),
        "kliep": reports["kliep"].to_dict(),
        "history": {m: [h.to_dict() for h in runs[m].history] for m in runs},
        "version": __version__,
    }
    _write_json(out / "summary.json", doc)
    lines = [
        f"{'distribution':<12} {'mu':>8} {'sigma':>8} {'W1':>8} {'energy':>8}",
        f"{'target':<12} {baseline.mu_b:8.4f} {baseline.sigma_b:8.4f} {'-':>8} {'-':>8}",
        f"{'source':<12} {baseline.mu_a:8.4f} {baseline.sigma_a:8.4f} "
        f"{baseline.wasserstein:8.4f} {baseline.energy:8.4f}",
    ]
    for mode in ("vanilla", "kliep"):
        rep = reports[mode]
        lines.append(
            f"{mode:<12} {rep.mu_a:8.4f} {rep.sigma_a:8.4f} "
            f"{rep.wasserstein:8.4f} {rep.energy:8.4f}"
        )
    lines.append(f"artifacts in {out}")
    _emit(args, doc, lines)
    return 0


# ---------------------------------------------------------------- parser


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", default=None, help="JSON config file; flags override its values")
    sp.add_argument("--json", action="store_true", help="machine-readable stdout")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="prematch",
        description="Density-ratio prematching experiments: data, KLIEP, GANs, distances.",
    )
    parser.add_argument("--version", action="version", version=f"prematch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def new(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text)
        sp.set_defaults(_handler=handler, _parser=sp)
        _add_common(sp)
        registry[name] = sp
        return sp

    sp = new("gen-data", _cmd_gen_data, "generate a synthetic sample file")
    sp.add_argument("--dist", choices=["uniform", "gaussian"], required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--low", type=float, default=0.0)
    sp.add_argument("--high", type=float, default=10.0)
    sp.add_argument("--mean", type=float, default=7.0)
    sp.add_argument("--std", type=float, default=0.5)
    sp.add_argument("--out", required=True)

    sp = new("fit-kliep", _cmd_fit_kliep, "fit an importance model (numerator/denominator ratio)")
    sp.add_argument("--numerator", required=True)
    sp.add_argument("--denominator", required=True)
    sp.add_argument("--num-centers", type=int, default=100)
    sp.add_argument("--cv-folds", type=int, default=5)
    sp.add_argument("--sigma-grid", type=_float_list, default=KliepConfig().sigma_grid,
                    help="comma list of median-distance multipliers")
    sp.add_argument("--max-iters", type=int, default=5000)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--direction", default="numerator_over_denominator")
    sp.add_argument("--out", required=True)

    sp = new("weights", _cmd_weights, "evaluate a fitted model on a sample file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", required=True)

    sp = new("train-gan", _cmd_train_gan, "train the toy GAN (vanilla or importance-weighted)")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--mode", choices=["vanilla", "kliep"], default="vanilla")
    sp.add_argument("--weights", default=None, help="weight CSV (required for --mode kliep)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=int, default=adversarial.EPOCHS)
    sp.add_argument("--batch-size", type=int, default=adversarial.BATCH_SIZE)
    sp.add_argument("--gen-lr", type=float, default=adversarial.GEN_LR)
    sp.add_argument("--disc-lr", type=float, default=adversarial.DISC_LR)
    sp.add_argument("--shuffle", action="store_true")
    sp.add_argument("--saturating", action="store_true")
    sp.add_argument("--gen-hidden", type=_int_list, default=(256, 256))
    sp.add_argument("--disc-hidden", type=_int_list, default=(256, 128))
    sp.add_argument("--out-prefix", required=True)

    sp = new("train-cycle", _cmd_train_cycle, "train the bidirectional cycle system")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--model-w", default=None, help="target/source importance model JSON")
    sp.add_argument("--model-psi", default=None, help="source/target importance model JSON")
    sp.add_argument("--lambda-cyc", type=float, default=10.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epochs", type=int, default=60)
    sp.add_argument("--batch-size", type=int, default=100)
    sp.add_argument("--gen-lr", type=float, default=8e-3)
    sp.add_argument("--disc-lr", type=float, default=4e-3)
    sp.add_argument("--shuffle", action="store_true")
    sp.add_argument("--saturating", action="store_true")
    sp.add_argument("--gen-hidden", type=_int_list, default=(64, 64))
    sp.add_argument("--disc-hidden", type=_int_list, default=(64, 64))
    sp.add_argument("--out-prefix", required=True)

    sp = new("eval-dist", _cmd_eval_dist, "pooled moments and distances between two sample files")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--out", default=None)

    sp = new("cohorts", _cmd_cohorts, "split a weight file into equal importance cohorts")
    sp.add_argument("--weights", required=True)
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--out", required=True)

    sp = new("ablation", _cmd_ablation, "train one GAN per importance cohort and compare")
    sp.add_argument("--source", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--seeds", type=_int_list, default=(0, 1, 2))
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--weights", default=None, help="precomputed weight CSV (else fit here)")
    sp.add_argument("--epochs", type=int, default=60)
    sp.add_argument("--batch-size", type=int, default=100)
    sp.add_argument("--gen-lr", type=float, default=8e-3)
    sp.add_argument("--disc-lr", type=float, default=4e-3)
    sp.add_argument("--gen-hidden", type=_int_list, default=(64, 64))
    sp.add_argument("--disc-hidden", type=_int_list, default=(64, 64))
    sp.add_argument("--out", required=True)

    sp = new("hist", _cmd_hist, "fixed-bin histogram overlay of sample files (SVG/JSON)")
    sp.add_argument("--inputs", nargs="+", required=True)
    sp.add_argument("--labels", nargs="+", default=None)
    sp.add_argument("--bins", type=int, default=50)
    sp.add_argument("--title", default="")
    sp.add_argument("--out", required=True)
    sp.add_argument("--json-out", default=None)

    sp = new("repro-toy", _cmd_repro_toy, "end-to-end toy experiment: data, KLIEP, both GANs")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n", type=int, default=10000)
    sp.add_argument("--dim", type=int, default=300)
    sp.add_argument("--epochs", type=int, default=adversarial.EPOCHS)
    sp.add_argument("--batch-size", type=int, default=adversarial.BATCH_SIZE)
    sp.add_argument("--gen-lr", type=float, default=adversarial.GEN_LR)
    sp.add_argument("--disc-lr", type=float, default=adversarial.DISC_LR)
    sp.add_argument("--out-dir", required=True)

    return parser, registry


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, registry = build_parser()

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config:
        try:
            config = json.loads(Path(known.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {known.config}: {exc}", file=sys.stderr)
            return 1
        if argv and argv[0] in registry:
            registry[argv[0]].set_defaults(
                **{k.replace("-", "_"): v for k, v in config.items()}
            )

    args = parser.parse_args(argv)
    try:
        return args._handler(args)
    except (ValueError, OSError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
