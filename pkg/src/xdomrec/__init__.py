"""Cross-domain recommendation with multimodal-feature-anchored alignment.

The package couples implicit-feedback matrix factorization (optionally fused
with fixed textual/visual side features) with an adversarial loop that makes
source- and target-domain embeddings indistinguishable to a domain
classifier while keeping preference predictions accurate.
"""

from .adapter import (
    AdapterState,
    adaptation_epoch,
    cf_sgd_run,
    classifier_forward,
    classifier_gradients,
    classifier_loss,
    item_representations,
    train_domain_probe,
    train_fdar,
    user_representations,
)
from .cf import cf_gradients, cf_loss, load_cf_model, predict, save_cf_model, train_cf
from .config import ExperimentConfig, load_config, save_config
from .data import (
    SplitDataset,
    derive_user_visual_features,
    load_feature_matrix,
    load_interactions,
    sample_negatives,
    save_feature_matrix,
    split_dataset,
)
from .fusion import PcaModel, fit_pca, fuse
from .metrics import (
    MetricsReport,
    aggregate_runs,
    evaluate,
    f1_at_k,
    ndcg_at_k,
    rank_top_k,
)
from .optim import AdamState, adam_step, sgd_combined_step, sgd_step
from .pipeline import SideInputs, assemble_side_features
from .synth import SynthParams, generate_domain_pair, write_synthetic_dataset
from .types import (
    AdaptationConfig,
    CfModel,
    ClassifierTarget,
    Domain,
    DomainClassifier,
    FeatureKind,
    FeatureMatrix,
    InteractionSet,
    Variant,
    concat_representation,
)

__version__ = "0.1.0"
