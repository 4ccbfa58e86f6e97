"""Group element algebras and the ``.group`` file loader."""

from .base import GroupModel, canonical_key, evaluate_word
from .extension import ModPExtensionModel, SplitExtensionModel, extension_multiply
from .loader import load_group_spec, model_from_dict
from .matrix import MatrixGroupModel
from .polycyclic import PolycyclicPresentation, polycyclic_multiply, syllables_from_word
from .verify import VerificationReport, verify_graded_series

__all__ = [
    "GroupModel", "canonical_key", "evaluate_word",
    "MatrixGroupModel", "PolycyclicPresentation", "polycyclic_multiply", "syllables_from_word",
    "SplitExtensionModel", "ModPExtensionModel", "extension_multiply",
    "VerificationReport", "verify_graded_series",
    "load_group_spec", "model_from_dict",
]
