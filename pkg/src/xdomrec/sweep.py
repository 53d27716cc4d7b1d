"""Hyperparameter grid harness: learning rate x regularization sweeps.

Each grid cell trains the configured variant from scratch with that cell's
rate and coefficient, then scores the validation split. This mirrors the
usual tuning protocol where the winning cell is read off the validation F1
surface.
"""

from __future__ import annotations

from pathlib import Path

from .cf import train_cf
from .data import SplitDataset
from .metrics import DEFAULT_KS, MetricsReport, evaluate
from .types import AdaptationConfig, FeatureMatrix, Variant

__all__ = ["DEFAULT_RATE_GRID", "DEFAULT_REG_GRID", "run_f1_grid", "format_grid", "save_grid"]

DEFAULT_RATE_GRID = (0.05, 0.1, 0.2, 0.4)
DEFAULT_REG_GRID = (0.001, 0.005, 0.01)


def run_f1_grid(
    split: SplitDataset,
    variant: Variant = Variant.FCF,
    user_side: FeatureMatrix | None = None,
    item_side: FeatureMatrix | None = None,
    latent_dim: int = 8,
    rates=DEFAULT_RATE_GRID,
    regs=DEFAULT_REG_GRID,
    epochs: int = 20,
    seed: int = 0,
    ks=DEFAULT_KS,
) -> dict[tuple[float, float], MetricsReport]:
    """Validation reports for every (learning rate, regularization) cell.

    All cells share the seed, so differences come from the swept values only.
    """
    grid: dict[tuple[float, float], MetricsReport] = {}
    for rate in rates:
        for reg in regs:
            config = AdaptationConfig(cf_learning_rate=rate, seed=seed)
            model, _ = train_cf(
                split.train,
                variant=variant,
                user_side=user_side,
                item_side=item_side,
                latent_dim=latent_dim,
                config=config,
                reg=reg,
                epochs=epochs,
                seed=seed,
            )
            grid[(rate, reg)] = evaluate(model, split.validation, split.train, ks=ks)
    return grid


def format_grid(grid: dict, metric_k: int = 10) -> str:
    """TSV rendering: one row per cell with the full F1 profile."""
    cells = sorted(grid)
    ks = sorted(next(iter(grid.values())).per_k)
    header = "rate\treg\t" + "\t".join(f"f1@{k}" for k in ks)
    lines = [header]
    for rate, reg in cells:
        report = grid[(rate, reg)]
        row = [f"{rate:g}", f"{reg:g}"] + [f"{report.per_k[k].f1:.6f}" for k in ks]
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def save_grid(grid: dict, path):
    Path(path).write_text(format_grid(grid), encoding="utf-8")
