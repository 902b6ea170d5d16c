"""Command-line experiment orchestrator.

Verbs: gen-dataset (write a SigMF dataset), run (train + evaluate into a
results bundle), eval (print a bundle's accuracy table), report (aggregate
bundles into a markdown report). Exit codes: 0 success, 2 validation,
3 generation, 4 training, 5 reporting.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
from pathlib import Path

import numpy as np

from . import recipes, scenario, sigmf_io, training
from .errors import (
    MergeError,
    RfDriftError,
    TrainingDivergedError,
    ValidationError,
)
from .framing import FrameDataset, LabeledRecording, build_dataset
from .net import AdlIdModel, BaselineCnn, EncoderSpec, save_checkpoint
from .training import TrainConfig, evaluate, save_history_csv

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GENERATION = 3
EXIT_TRAINING = 4
EXIT_REPORTING = 5


def _apply_overrides(recipe: dict, args) -> dict:
    if args.device_count is not None:
        recipe["n_devices"] = args.device_count
    if args.seed:
        recipe["seeds"] = list(args.seed)
    return recipes.validate_recipe(recipe)


def _derive_seeds(seed: int) -> dict:
    """Independent integer seeds for each pipeline stage of one run."""
    children = np.random.SeedSequence(seed).spawn(4)
    names = ("fleet", "setup", "split", "train")
    return {n: int(c.generate_state(1)[0]) for n, c in zip(names, children)}


def _setup_params(recipe: dict) -> scenario.SetupParams:
    return scenario.SetupParams(
        n_devices=recipe["n_devices"],
        n_days=recipe["n_days"],
        captures_per_day=recipe["captures_per_day"],
        gap_minutes=float(recipe["gap_minutes"]),
        duration_s=float(recipe["duration_s"]),
        modem=recipe["modem"],
        spreading_factor=recipe["spreading_factor"],
        snr_db_at_5m=float(recipe["snr_db_at_5m"]),
        rebooted=recipe["rebooted"],
    )


def _drift_model(recipe: dict) -> scenario.DriftModel:
    d = recipe["drift"]
    return scenario.DriftModel(
        short_term_sigma=float(d["short_term_sigma"]),
        day_jump_sigma=float(d["day_jump_sigma"]),
        reboot_mix=float(d["reboot_mix"]),
        common_mode=float(d["common_mode"]),
    )


def _encoder_spec(recipe: dict) -> EncoderSpec:
    m = recipe["model"]
    return EncoderSpec(latent_dim=m["latent_dim"], widths=tuple(m["widths"]))


def _train_config(recipe: dict, seed: int, deterministic: bool) -> TrainConfig:
    t = recipe["train"]
    cl = t.get("constant_lambda")
    return TrainConfig(
        epochs=t["epochs"],
        batch_size=t["batch_size"],
        warmup_fraction=float(t["warmup_fraction"]),
        learning_rate=float(t["learning_rate"]),
        seed=seed,
        deterministic=deterministic,
        constant_lambda=None if cl is None else float(cl),
        device=os.environ.get("RFDRIFT_DEVICE", "cpu"),
    )


def _generate_recordings(recipe: dict, seed: int) -> list:
    stage = _derive_seeds(seed)
    fleet = scenario.draw_fleet(recipe["n_devices"], stage["fleet"])
    return scenario.generate_setup(
        recipe["setup"], fleet, _setup_params(recipe), _drift_model(recipe),
        stage["setup"],
    )


def _dataset_from_recordings(recipe: dict, recordings, seed: int) -> FrameDataset:
    key = recipe["domain_key"]
    labeled = [
        LabeledRecording(
            iq=rec.iq,
            device_id=rec.spec.device_id,
            domain_index=rec.spec.capture_index if key == "capture" else rec.spec.day_index,
        )
        for rec in recordings
    ]
    return build_dataset(
        labeled,
        frames_per_device=recipe["frames_per_device"],
        representation=recipe["representation"],
        split=tuple(recipe["split"]),
        seed=_derive_seeds(seed)["split"],
    )


def cmd_gen_dataset(args) -> int:
    recipe = _apply_overrides(recipes.load_recipe(args.recipe), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n_written = 0
    for seed in recipe["seeds"]:
        seed_dir = out / f"seed{seed}"
        seed_dir.mkdir(exist_ok=True)
        for rec in _generate_recordings(recipe, seed):
            sigmf_io.write_capture(rec, recipe["representation"], seed_dir)
            n_written += 1
    with open(out / "recipe.json", "w") as fh:
        json.dump(recipe, fh, indent=2, sort_keys=True)
    n_caps = n_written // (len(recipe["seeds"]) * recipe["n_devices"] * recipe["n_days"])
    print(
        f"{recipe['name']}: {recipe['n_devices']} devices x {recipe['n_days']} "
        f"day(s) x {n_caps} captures x {len(recipe['seeds'])} seed(s) -> "
        f"{n_written} recordings in {out}"
    )
    return EXIT_OK


def _run_one_seed(recipe: dict, seed: int, out: Path, deterministic: bool) -> dict:
    import torch

    recordings = _generate_recordings(recipe, seed)
    ds = _dataset_from_recordings(recipe, recordings, seed)
    source = ds.restrict(recipe["source_domain"])
    target = ds.restrict(recipe["target_domain"])
    spec = _encoder_spec(recipe)
    m = recipe["model"]
    train_seed = _derive_seeds(seed)["train"]
    cfg = _train_config(recipe, train_seed, deterministic)

    seed_dir = out / f"seed{seed}"
    seed_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(train_seed)
    baseline = BaselineCnn(ds.n_devices, spec, representation=ds.representation)
    baseline, base_hist = training.train_baseline(source, baseline, cfg)
    save_history_csv(base_hist, seed_dir / "history_baseline.csv")
    save_checkpoint(baseline, seed_dir / "baseline.pt", {"seed": seed})

    torch.manual_seed(train_seed + 1)
    adlid = AdlIdModel(
        ds.n_devices,
        spec,
        combine=m["combine"],
        representation=ds.representation,
        alpha=float(m["alpha"]),
        beta=float(m["beta"]),
        gamma=float(m["gamma"]),
    )
    adlid, adl_hist = training.train_adlid(source, target, adlid, cfg)
    save_history_csv(adl_hist, seed_dir / "history_adlid.csv")
    save_checkpoint(adlid, seed_dir / "adlid.pt", {"seed": seed})

    accuracies = {}
    for domain in ds.domains:
        test_ds = ds.restrict(int(domain))
        accuracies[int(domain)] = {
            "baseline": evaluate(baseline, test_ds, "test").accuracy,
            "adlid": evaluate(adlid, test_ds, "test").accuracy,
        }
    return accuracies


def _write_results_csv(results: dict, seeds: list, path) -> None:
    """rows = test domains; columns = model x seed."""
    columns = [f"{model}:seed{s}" for model in ("baseline", "adlid") for s in seeds]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain"] + columns)
        for domain in sorted(results):
            row = [domain]
            for model in ("baseline", "adlid"):
                for s in seeds:
                    row.append(f"{results[domain][s][model]:.6f}")
            writer.writerow(row)


def _plot_results(results: dict, seeds: list, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    domains = sorted(results)
    means = {
        model: [
            statistics.mean(results[d][s][model] for s in seeds) for d in domains
        ]
        for model in ("baseline", "adlid")
    }
    x = np.arange(len(domains))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, means["baseline"], width=0.4, label="baseline CNN")
    ax.bar(x + 0.2, means["adlid"], width=0.4, label="disentangling model")
    ax.set_xticks(x)
    ax.set_xticklabels([f"domain {d}" for d in domains])
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_run(args) -> int:
    recipe = _apply_overrides(recipes.load_recipe(args.recipe), args)
    deterministic = bool(getattr(args, "deterministic", False))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = recipe["seeds"]

    results: dict = {}
    for seed in seeds:
        per_domain = _run_one_seed(recipe, seed, out, deterministic)
        for domain, accs in per_domain.items():
            results.setdefault(domain, {})[seed] = accs

    with open(out / "recipe.json", "w") as fh:
        json.dump(recipe, fh, indent=2, sort_keys=True)
    _write_results_csv(results, seeds, out / "results.csv")
    _plot_results(results, seeds, out / "accuracy_bars.png")
    for domain in sorted(results):
        base = statistics.mean(results[domain][s]["baseline"] for s in seeds)
        adl = statistics.mean(results[domain][s]["adlid"] for s in seeds)
        print(f"domain {domain}: baseline {base:.3f}  adlid {adl:.3f}")
    print(f"results bundle: {out}")
    return EXIT_OK


def _read_bundle(path: Path) -> tuple[dict, dict, list]:
    recipe_path = path / "recipe.json"
    results_path = path / "results.csv"
    if not recipe_path.exists() or not results_path.exists():
        raise MergeError(f"{path} is not a results bundle (missing recipe/results)")
    with open(recipe_path) as fh:
        recipe = json.load(fh)
    table: dict = {}
    with open(results_path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            domain = int(row[0])
            table[domain] = {
                col: float(val) for col, val in zip(header[1:], row[1:])
            }
    return recipe, table, header[1:]


def cmd_eval(args) -> int:
    recipe, table, columns = _read_bundle(Path(args.results))
    print(f"recipe: {recipe['name']}  devices: {recipe['n_devices']}")
    print("domain  " + "  ".join(columns))
    for domain in sorted(table):
        cells = "  ".join(f"{table[domain][c]:.4f}" for c in columns)
        print(f"{domain:>6}  {cells}")
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.results:
        raise ValidationError("results", "need at least one results bundle")
    bundles = [_read_bundle(Path(p)) for p in args.results]
    device_counts = {b[0]["n_devices"] for b in bundles}
    if len(device_counts) > 1:
        raise MergeError(
            f"bundles disagree on device count: {sorted(device_counts)}"
        )

    lines = ["# Experiment report", ""]
    for (recipe, table, columns), path in zip(bundles, args.results):
        lines.append(f"## {recipe['name']} ({path})")
        lines.append("")
        lines.append("| domain | baseline mean±std | adlid mean±std |")
        lines.append("|---|---|---|")
        for domain in sorted(table):
            cells = []
            for model in ("baseline", "adlid"):
                vals = [v for c, v in table[domain].items() if c.startswith(model + ":")]
                mean = statistics.mean(vals)
                std = statistics.stdev(vals) if len(vals) > 1 else 0.0
                cells.append(f"{mean:.4f} ± {std:.4f}")
            lines.append(f"| {domain} | {cells[0]} | {cells[1]} |")
        lines.append("")
        plot = Path(path) / "accuracy_bars.png"
        if plot.exists():
            lines.append(f"![accuracy]({plot})")
            lines.append("")

    report = "\n".join(lines)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(report)
        print(f"report written to {out}")
    else:
        print(report)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rfdrift",
        description="Synthetic RF fingerprinting experiments with temporal drift.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--recipe", required=True, help="bundled name or JSON path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, action="append", default=None,
                       help="override recipe seeds (repeatable)")
        p.add_argument("--device-count", type=int, default=None)
        p.add_argument("--deterministic", action="store_true")

    p_gen = sub.add_parser("gen-dataset", help="generate a SigMF dataset")
    common(p_gen)
    p_gen.set_defaults(func=cmd_gen_dataset, phase="generation")

    p_run = sub.add_parser("run", help="train and evaluate a recipe")
    common(p_run)
    p_run.set_defaults(func=cmd_run, phase="training")

    p_eval = sub.add_parser("eval", help="print a results bundle's table")
    p_eval.add_argument("--results", required=True, help="results bundle directory")
    p_eval.set_defaults(func=cmd_eval, phase="reporting")

    p_rep = sub.add_parser("report", help="aggregate bundles into markdown")
    p_rep.add_argument("results", nargs="*", help="results bundle directories")
    p_rep.add_argument("--out", default=None, help="markdown output path")
    p_rep.set_defaults(func=cmd_report, phase="reporting")
    return parser


_PHASE_EXIT = {"generation": EXIT_GENERATION, "training": EXIT_TRAINING,
               "reporting": EXIT_REPORTING}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except MergeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REPORTING
    except RfDriftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _PHASE_EXIT.get(args.phase, EXIT_GENERATION)


if __name__ == "__main__":
    sys.exit(main())
