"""L1-specific English lexical difficulty prediction.

Per-L1 boosted regression trees over 24 psycholinguistic features, exact tree
Shapley attributions aggregated into feature-group importance shares, and the
derived compositional / statistical analyses, plus a read-only HTTP service
for interactive exploration.
"""

from .corpus import KvlItem, KvlSplit, parse_kvl
from .explain import Attribution, explain_table, group_importance, tree_shap
from .features import FeatureRow, extract_features, fit_vectorizer, rows_to_table
from .model import GbdtConfig, TreeEnsemble, predict, train_gbdt, train_ridge
from .resources import ResourceBundle, load_resource_bundle
from .similarity import CharVectorizer, char_similarity, fit_char_vectorizer

__version__ = "0.1.0"

__all__ = [
    "Attribution",
    "CharVectorizer",
    "FeatureRow",
    "GbdtConfig",
    "KvlItem",
    "KvlSplit",
    "ResourceBundle",
    "TreeEnsemble",
    "char_similarity",
    "explain_table",
    "extract_features",
    "fit_char_vectorizer",
    "fit_vectorizer",
    "group_importance",
    "load_resource_bundle",
    "parse_kvl",
    "predict",
    "rows_to_table",
    "train_gbdt",
    "tree_shap",
    "__version__",
]
