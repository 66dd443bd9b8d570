"""Experiment configuration and its flat ``key = value`` text format."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .decoders import StyleDecoderConfig
from .encoder import EncoderConfig
from .features import FeatureConfig
from .graph import LabelSchema
from .latent import LatentConfig

TOGGLES = ("style", "svd", "ned", "vq", "poly", "labels", "z_dim")


@dataclass(frozen=True)
class ModelConfig:
    # experiment toggles
    style: bool = True
    svd: bool = False
    ned: bool = False
    vq: bool = False
    poly: bool = False
    labels: int = 6
    z_dim: int = 512
    # features
    n_max: int = 128
    hop_clip: int = 8
    svd_rank: int = 8
    poly_vertices: int = 8
    # encoder
    layers: int = 4
    d_model: int = 128
    heads: int = 8
    edge_channels: int = 32
    clip: float = 5.0
    ffn_mult: int = 2
    # latent module
    codebook_size: int = 512
    # decoders
    node_width: int = 128
    edge_width: int = 64
    start_resolution: int = 8
    style_noise: bool = False
    # objective
    beta: float = 1.0
    vq_weight: float = 1.0
    commitment_weight: float = 1.0
    orderings: str = "all"          # all | random
    elbo_reduction: str = "logsumexp"  # logsumexp | logmeanexp | min
    # optimisation
    lr: float = 1e-4
    batch_size: int = 16
    epochs: int = 10
    grad_clip: float = 1.0
    seed: int = 0
    holdout_mod: int = 10

    def __post_init__(self):
        if self.labels not in (6, 25):
            raise ValueError("labels must be 6 or 25")
        if self.orderings not in ("all", "random"):
            raise ValueError("orderings must be 'all' or 'random'")
        if self.elbo_reduction not in ("logsumexp", "logmeanexp", "min"):
            raise ValueError("elbo_reduction must be 'logsumexp', 'logmeanexp' or 'min'")
        # surface inconsistent sub-configs early
        self.encoder_config()
        self.latent_config()
        if self.style:
            self.style_config(1)

    @property
    def mode(self) -> str:
        if self.ned:
            return "ned_vq" if self.vq else "ned"
        return "vq" if self.vq else "vae"

    @property
    def schema(self) -> LabelSchema:
        return LabelSchema.get("six" if self.labels == 6 else "twentyfive")

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(self.schema, self.poly, self.poly_vertices, self.svd,
                             self.svd_rank, self.n_max, self.hop_clip)

    def encoder_config(self) -> EncoderConfig:
        fc = self.feature_config()
        return EncoderConfig(fc.node_dim, fc.edge_dim, self.layers, self.d_model, self.heads,
                             self.edge_channels, self.clip, self.hop_clip, self.ffn_mult)

    def latent_config(self) -> LatentConfig:
        return LatentConfig(self.d_model, self.edge_channels, self.n_max, self.z_dim,
                            self.mode, self.codebook_size)

    def style_config(self, out_channels: int) -> StyleDecoderConfig:
        return StyleDecoderConfig(self.z_dim, out_channels, self.n_max, self.start_resolution,
                                  width=self.node_width, noise=self.style_noise)

    def toggles(self) -> dict:
        return {k: getattr(self, k) for k in TOGGLES}

    def run_id(self, extra_keys=()) -> str:
        parts = []
        for k in list(TOGGLES) + [k for k in extra_keys if k not in TOGGLES]:
            v = getattr(self, k)
            parts.append(f"{k}{int(v) if isinstance(v, bool) else v}")
        return "-".join(parts)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_text(self) -> str:
        return "".join(f"{k} = {json.dumps(v)}\n" for k, v in asdict(self).items())

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(value, types[key], lineno)
        return cls(**values)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ModelConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _parse_value(value: str, typ: str, lineno: int):
    lowered = value.lower()
    if typ == "bool":
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"config line {lineno}: bad boolean {value!r}")
    if typ == "int":
        return int(value)
    if typ == "float":
        return float(value)
    if value.startswith('"'):
        return json.loads(value)
    return value


def experiment_matrix(base: ModelConfig, toggles: dict) -> list:
    """Cartesian expansion of ``{field: [values]}`` over ``base``, in the given key order."""
    keys = list(toggles)
    configs = []
    for combo in itertools.product(*(toggles[k] for k in keys)):
        configs.append(replace(base, **dict(zip(keys, combo))))
    return configs
