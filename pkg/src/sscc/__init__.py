"""Semi-supervised cascaded clustering for classification under label noise."""
__version__ = "0.1.0"

from .cascade import FitReport, fit  # noqa: E402
from .classify import NOVEL, NoveltyPolicy, classify, classify_batch, evaluate_accuracy  # noqa: E402
from .dataset import Dataset, load_csv  # noqa: E402
from .tree import CascadeTree, Hyperparameters, load_model, save_model  # noqa: E402

__all__ = [
    "NOVEL",
    "CascadeTree",
    "Dataset",
    "FitReport",
    "Hyperparameters",
    "NoveltyPolicy",
    "classify",
    "classify_batch",
    "evaluate_accuracy",
    "fit",
    "load_csv",
    "load_model",
    "save_model",
]
