"""Hyperparameter surface: learning rate x regularization grid for fused CF.

Reproduces the usual tuning protocol: train one cell per (rate, reg)
combination, score the validation split, and print the F1@10 surface so the
winning cell can be read off.

Run:  python demos/04_rate_regularization_sweep.py
"""

from xdomrec import (
    Domain,
    SideInputs,
    SynthParams,
    Variant,
    assemble_side_features,
    generate_domain_pair,
    split_dataset,
)
from xdomrec.sweep import DEFAULT_RATE_GRID, DEFAULT_REG_GRID, format_grid, run_f1_grid

params = SynthParams(num_users=120, num_items=80, feature_dim=8, text_block=3,
                     visual_block=3, source_items_per_user=10,
                     target_items_per_user=4, feature_noise=0.1, seed=4)
domains = generate_domain_pair(params)
splits = {d: split_dataset(domains[d].interactions, seed=4) for d in Domain}
inputs = {d: SideInputs(domains[d].user_textual, domains[d].item_textual,
                        domains[d].item_visual, splits[d].train) for d in Domain}
sides = assemble_side_features(Variant.FCF, inputs)

print(f"sweeping rates {DEFAULT_RATE_GRID} x regularization {DEFAULT_REG_GRID} "
      f"({len(DEFAULT_RATE_GRID) * len(DEFAULT_REG_GRID)} cells)")
grid = run_f1_grid(splits[Domain.SOURCE], Variant.FCF,
                   sides[Domain.SOURCE][0], sides[Domain.SOURCE][1],
                   latent_dim=6, epochs=15, seed=0, ks=(2, 5, 10, 15, 20))

print("\nvalidation F1@10 surface:")
print(f"{'rate/reg':>9}", *(f"{reg:>8g}" for reg in DEFAULT_REG_GRID))
for rate in DEFAULT_RATE_GRID:
    cells = [f"{grid[(rate, reg)].per_k[10].f1:8.4f}" for reg in DEFAULT_REG_GRID]
    print(f"{rate:>9g}", *cells)

best = max(grid, key=lambda cell: grid[cell].per_k[10].f1)
print(f"\nbest cell: rate={best[0]:g}, reg={best[1]:g} "
      f"(F1@10 {grid[best].per_k[10].f1:.4f})")
print("\nfull per-k table:\n")
print(format_grid(grid))
