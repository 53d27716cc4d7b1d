"""Single-domain collaborative filtering across all four model variants.

Generates one synthetic domain pair, trains PlainMF / TCF / VCF / FCF on the
source domain, and prints validation metrics side by side. With informative
features the fused variant should come out on top, plain matrix
factorization at the bottom.

Run:  python demos/01_single_domain_cf.py
"""

import numpy as np

from xdomrec import (
    AdaptationConfig,
    Domain,
    SideInputs,
    SynthParams,
    Variant,
    assemble_side_features,
    evaluate,
    generate_domain_pair,
    split_dataset,
    train_cf,
)

params = SynthParams(num_users=200, num_items=150, feature_dim=12, text_block=3,
                     visual_block=3, source_items_per_user=16,
                     target_items_per_user=4, feature_noise=0.05, seed=0)
print(f"generating synthetic domains: {params.num_users} users x "
      f"{params.num_items} items, feature width {params.feature_dim}")
domains = generate_domain_pair(params)
splits = {d: split_dataset(domains[d].interactions, seed=1) for d in Domain}

config = AdaptationConfig(seed=0)
ks = (2, 5, 10)
print(f"\n{'variant':>8} | " + " | ".join(f"F1@{k:<2}" for k in ks)
      + " | " + " | ".join(f"NDCG@{k:<2}" for k in ks))
print("-" * 66)
for variant in (Variant.PLAIN_MF, Variant.TCF, Variant.VCF, Variant.FCF):
    inputs = {d: SideInputs(domains[d].user_textual, domains[d].item_textual,
                            domains[d].item_visual, splits[d].train) for d in Domain}
    sides = assemble_side_features(variant, inputs)
    user_side, item_side = sides[Domain.SOURCE]
    model, losses = train_cf(splits[Domain.SOURCE].train, variant, user_side,
                             item_side, latent_dim=6, config=config, epochs=30,
                             seed=0)
    report = evaluate(model, splits[Domain.SOURCE].validation,
                      splits[Domain.SOURCE].train, ks=ks)
    row = " | ".join(f"{report.per_k[k].f1:.3f}" for k in ks)
    row += " | " + " | ".join(f"{report.per_k[k].ndcg:.3f}" for k in ks)
    print(f"{variant.value:>8} | {row}   (final train loss {losses[-1]:.1f})")

print("\nside features act as fixed anchors: only the latent factors train.")
