from .config import CcnConfig, FUSION_MODES, MEMORY_NAMES, TEXT_ENCODERS
from .memory import AttentionMemory, attend, memory_output
from .network import (
    AttentionRecord,
    ClipHead,
    ConsistencyModel,
    DropoutRates,
    ForwardResult,
    ZeroVectorError,
    clip_joint,
)
from .checkpoint import (
    checkpoint_fingerprint,
    config_fingerprint,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    "AttentionMemory",
    "AttentionRecord",
    "CcnConfig",
    "ClipHead",
    "ConsistencyModel",
    "DropoutRates",
    "ForwardResult",
    "FUSION_MODES",
    "MEMORY_NAMES",
    "TEXT_ENCODERS",
    "ZeroVectorError",
    "attend",
    "checkpoint_fingerprint",
    "clip_joint",
    "config_fingerprint",
    "load_checkpoint",
    "memory_output",
    "save_checkpoint",
]
