"""Digit-level packet language model for network intrusion detection."""

from ._core import (
    Checkpoint,
    FieldDescriptor,
    PacketLmError,
    Schema,
    TokenizedPacket,
    Vocabulary,
    build_vocabulary,
    confusion,
    detokenize,
    normalize_field,
    prf_report,
    synth_generate,
    synth_label_rule,
    synth_schema,
    tokenize,
    train_records,
)

__all__ = [
    "Checkpoint",
    "FieldDescriptor",
    "PacketLmError",
    "Schema",
    "TokenizedPacket",
    "Vocabulary",
    "build_vocabulary",
    "confusion",
    "detokenize",
    "normalize_field",
    "prf_report",
    "synth_generate",
    "synth_label_rule",
    "synth_schema",
    "tokenize",
    "train_records",
]

__version__ = "0.1.0"
