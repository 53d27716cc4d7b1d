import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xdomrec import CfModel, FeatureMatrix, InteractionSet, Variant


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_interactions():
    """3 users x 4 items with a handful of positives."""
    return InteractionSet(3, 4, [(0, 0), (0, 2), (1, 1), (2, 0), (2, 3)])


def make_plain_model(num_users=3, num_items=4, latent_dim=2, seed=0, scale=0.5):
    r = np.random.default_rng(seed)
    return CfModel(
        user_latent=r.uniform(-scale, scale, size=(num_users, latent_dim)),
        item_latent=r.uniform(-scale, scale, size=(num_items, latent_dim)),
    )


def make_side_model(num_users=3, num_items=4, latent_dim=2, feature_dim=2, seed=0,
                    variant=Variant.TCF, scale=0.5):
    r = np.random.default_rng(seed)
    kind = variant.feature_kind
    return CfModel(
        user_latent=r.uniform(-scale, scale, size=(num_users, latent_dim)),
        item_latent=r.uniform(-scale, scale, size=(num_items, latent_dim)),
        user_side=FeatureMatrix(r.normal(size=(num_users, feature_dim)), kind),
        item_side=FeatureMatrix(r.normal(size=(num_items, feature_dim)), kind),
        variant=variant,
    )
