"""Command-line entry point: reproducible split / train / adapt / eval runs.

Commands (all deterministic given the config file and seed):

* ``gen-synth``  write the bundled synthetic paired-domain dataset
* ``split``      8:1:1 split of one or both domains' interaction files
* ``train``      single-domain CF training for the configured variant
* ``adapt``      adversarial cross-domain alignment from two CF checkpoints
* ``eval``       top-k evaluation of a checkpoint on a domain's test split
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .adapter import save_classifier, train_fdar
from .cf import load_cf_model, save_cf_model, train_cf
from .config import ExperimentConfig, load_config
from .data import (
    derive_user_visual_features,
    load_feature_matrix,
    load_interactions_with_ids,
    read_split,
    split_dataset,
    write_split,
)
from .fusion import save_pca
from .metrics import SELECTION_K, aggregate_runs, evaluate, format_report_text, save_report
from .pipeline import SideInputs, assemble_side_features
from .synth import SynthParams, write_synthetic_dataset
from .types import Domain, FeatureKind, Variant


class CommandError(Exception):
    """User-facing failure: bad config, missing file, corrupt input."""


def _fail(message: str) -> "CommandError":
    return CommandError(message)


def _require_path(config: ExperimentConfig, name: str) -> Path:
    value = getattr(config, name)
    if not value:
        raise _fail(f"missing config field: {name}")
    path = Path(value)
    if not path.exists():
        raise _fail(f"config field {name}: path {path} does not exist")
    return path


def _load_split(config: ExperimentConfig, domain: Domain):
    directory = _require_path(config, f"{domain.name.lower()}_split_dir")
    try:
        return read_split(directory)
    except FileNotFoundError as exc:
        raise _fail(f"split directory {directory} is incomplete: {exc}") from None


def _load_features(config, domain, name, expected_rows, kind):
    path = _require_path(config, f"{domain.name.lower()}_{name}")
    return load_feature_matrix(path, expected_rows=expected_rows, kind=kind)


def _fused_side_features(config: ExperimentConfig, splits: dict, pca_sink: dict | None):
    """FCF anchors for both domains: one PCA per entity kind, fit on the union."""
    inputs = {}
    for d in Domain:
        d_split = splits[d]
        tex_u = _load_features(config, d, "user_textual", d_split.train.num_users,
                               FeatureKind.TEXTUAL)
        tex_i = _load_features(config, d, "item_textual", d_split.train.num_items,
                               FeatureKind.TEXTUAL)
        vis_i = _load_features(config, d, "item_visual", d_split.train.num_items,
                               FeatureKind.VISUAL)
        for mat, label in ((tex_u, "user_textual"), (tex_i, "item_textual"),
                           (vis_i, "item_visual")):
            if mat.dim != config.feature_dim:
                raise _fail(
                    f"{d.name.lower()}_{label}: feature width {mat.dim} "
                    f"!= configured feature_dim {config.feature_dim}"
                )
        inputs[d] = SideInputs(tex_u, tex_i, vis_i, d_split.train)
    return assemble_side_features(Variant.FCF, inputs, pca_sink)


def build_side_features(config: ExperimentConfig, domain: Domain, splits: dict,
                        pca_sink: dict | None = None):
    """Side feature matrices for one domain under the configured variant.

    Splits for both domains must be present for FCF: its fusion space is fit
    on the union of the two domains' rows so the anchors stay shared. The
    derived user visual features always come from the domain's train split.
    Returns (user_side, item_side), both None for PLAIN_MF.
    """
    variant = config.variant_enum
    split = splits[domain]
    num_users = split.train.num_users
    num_items = split.train.num_items

    if variant is Variant.PLAIN_MF:
        named = [f"{d.name.lower()}_{n}" for d in Domain
                 for n in ("user_textual", "item_textual", "item_visual")]
        configured = [n for n in named if getattr(config, n)]
        if configured:
            print(f"warning: variant plainmf ignores feature paths: {', '.join(configured)}",
                  file=sys.stderr)
        return None, None

    if variant is Variant.TCF:
        user = _load_features(config, domain, "user_textual", num_users, FeatureKind.TEXTUAL)
        item = _load_features(config, domain, "item_textual", num_items, FeatureKind.TEXTUAL)
        return user, item

    if variant is Variant.VCF:
        item = _load_features(config, domain, "item_visual", num_items, FeatureKind.VISUAL)
        user = derive_user_visual_features(item, split.train)
        return user, item

    return _fused_side_features(config, splits, pca_sink)[domain]


def build_both_side_features(config: ExperimentConfig, splits: dict) -> dict:
    """(user_side, item_side) per domain, fitting the FCF fusion space once."""
    if config.variant_enum is Variant.FCF:
        return _fused_side_features(config, splits, None)
    return {d: build_side_features(config, d, splits) for d in Domain}


def _checkpoint_path(config: ExperimentConfig, domain: Domain, adapted=False) -> Path:
    out = Path(config.output_dir)
    name = (f"adapted_{domain.name.lower()}.ckpt" if adapted
            else f"{domain.name.lower()}_{config.variant}.ckpt")
    return out / name


def _domains_for(arg: str):
    if arg == "both":
        return [Domain.SOURCE, Domain.TARGET]
    return [Domain[arg.upper()]]


def cmd_gen_synth(args) -> int:
    params = SynthParams(
        num_users=args.num_users,
        num_items=args.num_items,
        feature_dim=args.feature_dim,
        text_block=args.text_block,
        visual_block=args.visual_block,
        source_items_per_user=args.source_items_per_user,
        target_items_per_user=args.target_items_per_user,
        feature_noise=args.feature_noise,
        score_noise=args.score_noise,
        domain_shift=args.domain_shift,
        seed=args.seed,
    )
    out = write_synthetic_dataset(params, args.out)
    print(f"wrote synthetic domains under {out}")
    return 0


def cmd_split(args, config: ExperimentConfig) -> int:
    for domain in _domains_for(args.domain):
        path = _require_path(config, f"{domain.name.lower()}_interactions")
        interactions, user_ids, item_ids = load_interactions_with_ids(path, domain)
        split = split_dataset(interactions, config.seed)
        directory = getattr(config, f"{domain.name.lower()}_split_dir")
        if not directory:
            raise _fail(f"missing config field: {domain.name.lower()}_split_dir")
        write_split(split, directory)
        with (Path(directory) / "user_ids.txt").open("w", encoding="utf-8") as fh:
            fh.writelines(f"{u}\n" for u in user_ids)
        with (Path(directory) / "item_ids.txt").open("w", encoding="utf-8") as fh:
            fh.writelines(f"{i}\n" for i in item_ids)
        print(
            f"{domain.name.lower()}: {interactions.num_positives} positives -> "
            f"{split.train.num_positives}/{split.validation.num_positives}/"
            f"{split.test.num_positives} (seed {config.seed})"
        )
    return 0


def cmd_train(args, config: ExperimentConfig) -> int:
    domain = Domain[args.domain.upper()]
    splits = {d: _load_split(config, d) for d in (
        Domain if config.variant_enum is Variant.FCF else [domain])}
    pca_sink: dict = {}
    user_side, item_side = build_side_features(config, domain, splits, pca_sink)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if pca_sink:
        save_pca(pca_sink["fused"], out / "fused_pca.txt")

    reg = config.source_reg if domain is Domain.SOURCE else config.target_reg
    model, losses = train_cf(
        splits[domain].train,
        variant=config.variant_enum,
        user_side=user_side,
        item_side=item_side,
        latent_dim=config.latent_dim,
        config=config.adaptation(),
        reg=reg,
        epochs=config.cf_epochs,
        seed=config.seed,
    )
    ckpt = _checkpoint_path(config, domain)
    save_cf_model(model, ckpt)
    log_path = out / f"{domain.name.lower()}_{config.variant}_loss.tsv"
    with log_path.open("w", encoding="utf-8") as fh:
        for epoch, loss in enumerate(losses):
            fh.write(f"{epoch}\t{loss:.10g}\n")
    final = f"{losses[-1]:.6f}" if losses else "n/a"
    print(f"trained {config.variant} on {domain.name.lower()}: "
          f"{len(losses)} epochs, final loss {final}, checkpoint {ckpt}")
    return 0


def cmd_adapt(args, config: ExperimentConfig) -> int:
    if SELECTION_K not in config.ks:
        raise _fail(f"config ks must include {SELECTION_K} (used for run selection)")
    splits = {d: _load_split(config, d) for d in Domain}
    sides = build_both_side_features(config, splits)

    models = {}
    for d in Domain:
        ckpt = _checkpoint_path(config, d)
        if not ckpt.exists():
            raise _fail(f"missing CF checkpoint {ckpt}; run `train --domain "
                        f"{d.name.lower()}` first")
        try:
            models[d] = load_cf_model(ckpt, user_side=sides[d][0], item_side=sides[d][1])
        except (ValueError, IndexError) as exc:
            raise _fail(f"corrupt checkpoint {ckpt}: {exc}") from None

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    test_reports, run_rows = [], []
    best_val, best_state = -1.0, None
    for run in range(config.runs):
        adapt_config = config.adaptation(seed=config.seed + run)
        state, _, history = train_fdar(
            models[Domain.SOURCE], models[Domain.TARGET],
            splits[Domain.SOURCE], splits[Domain.TARGET],
            adapt_config, ks=config.ks,
        )
        val_f1 = max(history)
        report = evaluate(state.target_model, splits[Domain.TARGET].test,
                          splits[Domain.TARGET].train, ks=config.ks, run_id=run)
        test_reports.append(report)
        save_report(report, json_path=out / f"adapt_report_run{run}.json")
        run_rows.append((run, val_f1, report.per_k[SELECTION_K].f1))
        if val_f1 > best_val:
            best_val, best_state = val_f1, state

    aggregated = aggregate_runs(test_reports, config.top_m)
    save_report(aggregated, out / "adapt_report.txt", out / "adapt_report.json")
    with (out / "adapt_runs.tsv").open("w", encoding="utf-8") as fh:
        fh.write("run\tval_f1@10\ttest_f1@10\n")
        for run, val_f1, test_f1 in run_rows:
            fh.write(f"{run}\t{val_f1:.6f}\t{test_f1:.6f}\n")
    save_cf_model(best_state.source_model, out / "adapted_source.ckpt")
    save_cf_model(best_state.target_model, out / "adapted_target.ckpt")
    save_classifier(best_state.user_classifier, out / "user_classifier.txt")
    save_classifier(best_state.item_classifier, out / "item_classifier.txt")
    sys.stdout.write(format_report_text(aggregated))
    return 0


def cmd_eval(args, config: ExperimentConfig) -> int:
    domain = Domain[args.domain.upper()]
    needs_both = config.variant_enum is Variant.FCF
    splits = {d: _load_split(config, d) for d in (Domain if needs_both else [domain])}
    user_side, item_side = build_side_features(config, domain, splits)

    if args.checkpoint:
        ckpt = Path(args.checkpoint)
    else:
        adapted = _checkpoint_path(config, domain, adapted=True)
        ckpt = adapted if adapted.exists() else _checkpoint_path(config, domain)
    if not ckpt.exists():
        raise _fail(f"checkpoint {ckpt} does not exist")
    try:
        model = load_cf_model(ckpt, user_side=user_side, item_side=item_side)
    except (ValueError, IndexError) as exc:
        raise _fail(f"corrupt checkpoint {ckpt}: {exc}") from None

    split = splits[domain]
    report = evaluate(model, split.test, split.train, ks=config.ks)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"eval_{domain.name.lower()}"
    save_report(report, out / f"{stem}_report.txt", out / f"{stem}_report.json")
    sys.stdout.write(format_report_text(report))
    return 0


_OVERRIDE_FIELDS = [
    ("--seed", "seed", int),
    ("--variant", "variant", str),
    ("--feature-dim", "feature_dim", int),
    ("--latent-dim", "latent_dim", int),
    ("--epochs", "epochs", int),
    ("--cf-epochs", "cf_epochs", int),
    ("--runs", "runs", int),
    ("--top-m", "top_m", int),
    ("--output-dir", "output_dir", str),
    ("--source-lr", "source_lr", float),
    ("--target-lr", "target_lr", float),
    ("--classifier-lr", "classifier_lr", float),
    ("--adversarial-lr", "adversarial_lr", float),
    ("--source-reg", "source_reg", float),
    ("--target-reg", "target_reg", float),
    ("--cf-learning-rate", "cf_learning_rate", float),
    ("--negatives-per-positive", "negatives_per_positive", int),
]


def _add_config_arguments(parser):
    parser.add_argument("--config", required=True, help="experiment config JSON")
    for flag, dest, typ in _OVERRIDE_FIELDS:
        parser.add_argument(flag, dest=dest, type=typ, default=None,
                            help="override the config field")


def _config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config)
    overrides = {dest: getattr(args, dest) for _, dest, _ in _OVERRIDE_FIELDS}
    return config.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xdomrec",
        description="Cross-domain recommender with multimodal anchored alignment",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="write the bundled synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num-users", type=int, default=SynthParams.num_users)
    p.add_argument("--num-items", type=int, default=SynthParams.num_items)
    p.add_argument("--feature-dim", type=int, default=SynthParams.feature_dim)
    p.add_argument("--text-block", type=int, default=SynthParams.text_block)
    p.add_argument("--visual-block", type=int, default=SynthParams.visual_block)
    p.add_argument("--source-items-per-user", type=int,
                   default=SynthParams.source_items_per_user)
    p.add_argument("--target-items-per-user", type=int,
                   default=SynthParams.target_items_per_user)
    p.add_argument("--feature-noise", type=float, default=SynthParams.feature_noise)
    p.add_argument("--score-noise", type=float, default=SynthParams.score_noise)
    p.add_argument("--domain-shift", type=float, default=SynthParams.domain_shift)
    p.add_argument("--seed", type=int, default=SynthParams.seed)
    p.set_defaults(func=cmd_gen_synth, needs_config=False)

    p = sub.add_parser("split", help="8:1:1 split of the interaction files")
    _add_config_arguments(p)
    p.add_argument("--domain", choices=["source", "target", "both"], default="both")
    p.set_defaults(func=cmd_split, needs_config=True)

    p = sub.add_parser("train", help="train one domain's CF model")
    _add_config_arguments(p)
    p.add_argument("--domain", choices=["source", "target"], required=True)
    p.set_defaults(func=cmd_train, needs_config=True)

    p = sub.add_parser("adapt", help="adversarial cross-domain alignment")
    _add_config_arguments(p)
    p.set_defaults(func=cmd_adapt, needs_config=True)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    _add_config_arguments(p)
    p.add_argument("--domain", choices=["source", "target"], default="target")
    p.add_argument("--checkpoint", default=None)
    p.set_defaults(func=cmd_eval, needs_config=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.needs_config:
            config = _config_from_args(args)
            return args.func(args, config)
        return args.func(args)
    except (CommandError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
