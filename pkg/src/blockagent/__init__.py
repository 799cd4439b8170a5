"""Compact block-diagram model representation, checks, structural rewards and
reflection-augmented GRPO training mathematics."""
from .catalog import Catalog, default_catalog, load_catalog
from .compare import SimilarityReport, similarity
from .errors import BlockAgentError
from .ir import BlockInstance, Connection, PortRef, Quantity, SystemModel, canonicalize
from .textio import emit_model_text, parse_model_text, read_model, write_model
from .validator import Diagnostic, validate

__version__ = "0.1.0"

__all__ = [
    "Catalog", "default_catalog", "load_catalog",
    "SimilarityReport", "similarity",
    "BlockAgentError",
    "BlockInstance", "Connection", "PortRef", "Quantity", "SystemModel", "canonicalize",
    "emit_model_text", "parse_model_text", "read_model", "write_model",
    "Diagnostic", "validate",
]
