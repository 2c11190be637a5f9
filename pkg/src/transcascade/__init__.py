"""Cascaded finite-state annotation of speech transcriptions."""

__version__ = "0.1.0"

from .transcript import Document, parse_transcription, serialize  # noqa: E402
from .grammar import parse_grammar  # noqa: E402
from .compiler import Transducer, compile_grammar  # noqa: E402
from .engine import AnnotatedDocument, Annotation, Cascade, apply_pass, check_nesting, parse_annotated, run_cascade  # noqa: E402
from .packs import load_cascade  # noqa: E402

__all__ = [
    "__version__",
    "Document",
    "parse_transcription",
    "serialize",
    "parse_grammar",
    "Transducer",
    "compile_grammar",
    "AnnotatedDocument",
    "Annotation",
    "Cascade",
    "apply_pass",
    "check_nesting",
    "parse_annotated",
    "load_cascade",
    "run_cascade",
]
