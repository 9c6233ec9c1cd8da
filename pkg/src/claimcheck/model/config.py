"""Model configuration: every ablation switch plus the feature widths.

The defaults encode the standard layout: 2048-wide image/scene features
projected into 1024-wide memories, text memories at the text encoder's
native width (768 for the sentence encoder, 512 = 2x256 for the
token-LSTM path), a 512-wide joint image-text vector, 20-wide domain
embeddings, and a 1024-wide classifier hidden layer. Widths are
configurable so gradient checks and fast ablations can run on narrow
models; the layout's proportions and wiring do not change.

``memory_layout="unified"`` folds every enabled evidence type into one
memory (items zero-padded to a shared base width, query = concatenation
of the projected image query and the caption embedding). That only
type-checks when the side features of all enabled types occupy the same
width, which ``validate`` enforces.

``query_mode="learned_constant"`` replaces each memory's query with a
trained constant vector: the evidence-only probe. It forbids the joint
image-text component, which would leak the pair back in.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

from ..errors import ConfigurationError

TEXT_ENCODERS = ("sentence_768", "token_lstm_512")
MEMORY_LAYOUTS = ("separate", "unified")
FUSION_MODES = ("concat", "avg_pool", "max_pool", "multiply")
QUERY_MODES = ("normal", "learned_constant")

MEMORY_NAMES = ("image", "scene", "entity", "sentence")


@dataclass
class CcnConfig:
    use_images: bool = True
    use_captions: bool = True
    use_entities: bool = True
    use_scenes: bool = True
    use_labels_feature: bool = True
    use_ner_feature: bool = True
    use_domains: bool = True
    use_clip: bool = True
    use_bn: bool = True
    text_encoder: str = "sentence_768"
    memory_layout: str = "separate"
    fusion: str = "concat"
    query_mode: str = "normal"

    image_feature_dim: int = 2048
    image_mem_dim: int = 1024
    sentence_dim: int = 768
    token_dim: int = 768
    lstm_hidden: int = 256
    clip_dim: int = 512
    domain_dim: int = 20
    classifier_hidden: int = 1024

    # -- derived layout ----------------------------------------------------

    @property
    def text_dim(self) -> int:
        """Native width of encoded text: d = 768 (sentence) or 2h (LSTM)."""
        if self.text_encoder == "sentence_768":
            return self.sentence_dim
        return 2 * self.lstm_hidden

    def side_width(self, memory: str) -> int:
        dom = self.domain_dim if self.use_domains else 0
        if memory == "image":
            return (1 if self.use_labels_feature else 0) + dom
        if memory == "scene":
            return dom
        if memory == "entity":
            return 1 if self.use_ner_feature else 0
        if memory == "sentence":
            return (1 if self.use_ner_feature else 0) + dom
        raise ConfigurationError(f"unknown memory {memory!r}")

    def base_width(self, memory: str) -> int:
        return self.image_feature_dim if memory in ("image", "scene") else self.text_dim

    def item_dim(self, memory: str) -> int:
        """Full width of one evidence item as the memory bank sees it."""
        return self.base_width(memory) + self.side_width(memory)

    def mem_dim(self, memory: str) -> int:
        return self.image_mem_dim if memory in ("image", "scene") else self.text_dim

    def enabled_memories(self) -> list[str]:
        flags = {
            "image": self.use_images,
            "scene": self.use_scenes,
            "entity": self.use_entities,
            "sentence": self.use_captions,
        }
        return [m for m in MEMORY_NAMES if flags[m]]

    def memory_has_domain(self, memory: str) -> bool:
        return self.use_domains and memory in ("image", "scene", "sentence")

    # unified-layout geometry

    def unified_base_width(self) -> int:
        return max(self.base_width(m) for m in self.enabled_memories())

    def unified_item_dim(self) -> int:
        names = self.enabled_memories()
        return self.unified_base_width() + self.side_width(names[0])

    def unified_query_dim(self) -> int:
        dim = 0
        if self.use_images or self.use_scenes:
            dim += self.image_mem_dim
        if self.use_captions or self.use_entities:
            dim += self.text_dim
        return dim

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        if self.text_encoder not in TEXT_ENCODERS:
            raise ConfigurationError(f"text_encoder must be one of {TEXT_ENCODERS}")
        if self.memory_layout not in MEMORY_LAYOUTS:
            raise ConfigurationError(f"memory_layout must be one of {MEMORY_LAYOUTS}")
        if self.fusion not in FUSION_MODES:
            raise ConfigurationError(f"fusion must be one of {FUSION_MODES}")
        if self.query_mode not in QUERY_MODES:
            raise ConfigurationError(f"query_mode must be one of {QUERY_MODES}")
        if not self.enabled_memories() and not self.use_clip:
            raise ConfigurationError("every component is disabled")
        for f in fields(self):
            if f.type == "int" and getattr(self, f.name) < 1:
                raise ConfigurationError(f"{f.name} must be positive")
        if self.memory_layout == "unified":
            widths = {m: self.side_width(m) for m in self.enabled_memories()}
            if len(set(widths.values())) > 1:
                raise ConfigurationError(
                    "unified memory needs equal side-feature widths per evidence "
                    f"type, got {widths}"
                )
            if not self.enabled_memories():
                raise ConfigurationError("unified layout with no evidence enabled")
        if self.query_mode == "learned_constant" and self.use_clip:
            raise ConfigurationError(
                "evidence-only probe (learned_constant queries) must disable the "
                "joint image-text component"
            )

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "CcnConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown config field(s): {sorted(unknown)}")
        cfg = cls(**obj)
        cfg.validate()
        return cfg
