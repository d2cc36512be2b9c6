"""Guardrailed case-report translation pipeline."""

__version__ = "0.1.0"

from .icsr import IcsrDocument, check_validity, parse_document, serialize_for_model  # noqa: E402,F401
from .lexicon import Lexicon, load_lexicon_tsv, normalize  # noqa: E402,F401
from .mismatch import check_generic_trade, missrate, run_mismatch  # noqa: E402,F401

__all__ = [
    "__version__",
    "IcsrDocument",
    "check_validity",
    "parse_document",
    "serialize_for_model",
    "Lexicon",
    "load_lexicon_tsv",
    "normalize",
    "run_mismatch",
    "check_generic_trade",
    "missrate",
]
