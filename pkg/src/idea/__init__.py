"""Find the movies one library lacks but an aligned partner library holds, and rank them.

Both libraries are embedded into one latent space by coupled autoencoders;
cross-library pairs closer than a threshold are taken as anchor links, the
unmatched movies are the missing ones, and a sigmoid model predicts where each
missing movie would rank in the library that lacks it.
"""

from .autoenc import AutoencoderParams, HyperParams, SideFeatures, encode, train
from .baselines import exact_match, jaccard_similarity, similarity_scores, translate_tokens
from .datamodel import AnchorLinkSet, LabeledPair, Library, MovieRecord, load_library, save_library
from .evaluation import ExperimentConfig, MetricsReport, auc, confusion_metrics, run_experiment
from .features import FeatureSpec, Vocabulary, build_vocabulary, extract_features, feature_matrix
from .fusion import MissingReport, ScoredPair, identify_missing, infer_anchor_links, pair_distance
from .ranking import RankCriterion, RankModel, compute_rank_targets, predict_rank, train_rank_model
from .synthgen import SynthConfig, TranslationDictionary, generate_pair

__version__ = "0.1.0"

__all__ = [
    "AnchorLinkSet", "AutoencoderParams", "ExperimentConfig", "FeatureSpec", "HyperParams", "LabeledPair",
    "Library", "MetricsReport", "MissingReport", "MovieRecord", "RankCriterion", "RankModel", "ScoredPair",
    "SideFeatures", "SynthConfig", "TranslationDictionary", "Vocabulary", "auc", "build_vocabulary",
    "compute_rank_targets", "confusion_metrics", "encode", "exact_match", "extract_features", "feature_matrix",
    "generate_pair", "identify_missing", "infer_anchor_links", "jaccard_similarity", "load_library",
    "pair_distance", "predict_rank", "run_experiment", "save_library", "similarity_scores", "train",
    "train_rank_model", "translate_tokens",
]
