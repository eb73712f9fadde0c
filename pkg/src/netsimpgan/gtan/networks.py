"""GTA U-Net, mask generator and discriminator assemblies plus ablation variants."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn
import torch.nn.functional as F

from .layers import (
    MultiHeadSelfAttention,
    TemporalContract,
    TemporalExpand,
    channel_schedule,
    check_temporal_length,
    make_graph_layer,
)

# variant -> (graph layer kind, self-attention on, temporal convolution on)
VARIANTS = {
    "full": ("gat", True, True),
    "no-graph": ("none", True, True),
    "no-temporal": ("gat", False, False),
    "no-attention": ("gcn", False, True),
}
_VARIANT_ALIASES = {
    "w/o-g": "no-graph", "wo-g": "no-graph", "gtan-w/o-g": "no-graph",
    "w/o-t": "no-temporal", "wo-t": "no-temporal", "gtan-w/o-t": "no-temporal",
    "w/o-a": "no-attention", "wo-a": "no-attention", "gtan-w/o-a": "no-attention",
}


def canonical_variant(name: str) -> str:
    key = str(name).strip().lower()
    key = _VARIANT_ALIASES.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")
    return key


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters shared by all four networks."""

    n_nodes: int
    n_timesteps: int = 16
    variant: str = "full"
    depth: int = 3
    base_channels: int = 16
    n_heads: int = 3
    d_k: int | None = None
    d_v: int | None = None
    kernel_size: int = 3
    noise_dim: int = 128
    negative_slope: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "variant", canonical_variant(self.variant))
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.uses_tconv:
            check_temporal_length(self.n_timesteps, self.depth)

    @property
    def graph_kind(self) -> str:
        return VARIANTS[self.variant][0]

    @property
    def uses_mhsa(self) -> bool:
        return VARIANTS[self.variant][1]

    @property
    def uses_tconv(self) -> bool:
        return VARIANTS[self.variant][2]

    def manifest(self) -> dict:
        data = asdict(self)
        data["channels"] = channel_schedule(1, self.base_channels, self.depth)
        return data


class GtaUNet(nn.Module):
    """Graph-temporal attention U-Net mapping ``(B, V, T)`` to ``(B, V, T)`` in (-1, 1).

    Encoder: graph layer, activation, self-attention, contracting T-Conv.
    Decoder: expansive T-Conv with skips, self-attention, then a graph layer
    over ``[decoded, graph-layer output]`` and ``tanh``.
    """

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        slope = cfg.negative_slope
        self.graph_in = make_graph_layer(cfg.graph_kind, 1, 1, slope)
        self.graph_out = make_graph_layer(cfg.graph_kind, 2, 1, slope)
        if cfg.uses_mhsa:
            self.attn_in = MultiHeadSelfAttention(cfg.n_nodes, cfg.n_heads, cfg.d_k, cfg.d_v)
            self.attn_out = MultiHeadSelfAttention(cfg.n_nodes, cfg.n_heads, cfg.d_k, cfg.d_v)
        if cfg.uses_tconv:
            self.contract = TemporalContract(1, cfg.base_channels, cfg.depth, cfg.kernel_size, slope)
            self.expand = TemporalExpand(1, cfg.base_channels, cfg.depth, cfg.kernel_size, True, slope)

    def forward(self, y: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        y_prime = self.graph_in(y.unsqueeze(-1), adj)
        h = F.leaky_relu(y_prime, self.cfg.negative_slope).squeeze(-1)
        if self.cfg.uses_mhsa:
            h = self.attn_in(h)
        if self.cfg.uses_tconv:
            B, V, T = h.shape
            cons = self.contract.forward_flat(h.reshape(B * V, T, 1))
            h = self.expand.forward_flat(cons[-1], cons).reshape(B, V, T)
        if self.cfg.uses_mhsa:
            h = self.attn_out(h)
        y2 = torch.cat([h.unsqueeze(-1), y_prime], dim=-1)
        return torch.tanh(self.graph_out(y2, adj).squeeze(-1))


class MaskGeneratorNet(nn.Module):
    """Noise ``(B, noise_dim)`` to a soft mask ``(B, V, T)`` with entries in [0, 1]."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        V, T = cfg.n_nodes, cfg.n_timesteps
        if cfg.uses_tconv:
            self.seed_shape = (V, T // 2 ** cfg.depth, channel_schedule(1, cfg.base_channels, cfg.depth)[-1])
            self.expand = TemporalExpand(1, cfg.base_channels, cfg.depth, cfg.kernel_size, False,
                                         cfg.negative_slope)
        else:
            self.seed_shape = (V, T, 1)
        n_out = self.seed_shape[0] * self.seed_shape[1] * self.seed_shape[2]
        self.fc = nn.Linear(cfg.noise_dim, n_out)
        self.graph_out = make_graph_layer(cfg.graph_kind, 1, 1, cfg.negative_slope)

    def forward(self, omega: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        h = F.leaky_relu(self.fc(omega), self.cfg.negative_slope)
        h = h.reshape(omega.shape[0], *self.seed_shape)
        if self.cfg.uses_tconv:
            B, V, T0, C = h.shape
            h = self.expand.forward_flat(h.reshape(B * V, T0, C)).reshape(B, V, -1, 1)
        return torch.sigmoid(self.graph_out(h, adj).squeeze(-1))


def harden(soft_mask):
    """Threshold a soft mask at 0.5 (ties go to observed)."""
    if isinstance(soft_mask, torch.Tensor):
        return (soft_mask >= 0.5).to(soft_mask.dtype)
    import numpy as np

    return (np.asarray(soft_mask) >= 0.5).astype(np.uint8)


class DiscriminatorNet(nn.Module):
    """Critic mapping ``(B, V, T)`` to one real score per sample."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        V, T = cfg.n_nodes, cfg.n_timesteps
        self.graph_in = make_graph_layer(cfg.graph_kind, 1, 1, cfg.negative_slope)
        if cfg.uses_mhsa:
            self.attn = MultiHeadSelfAttention(V, cfg.n_heads, cfg.d_k, cfg.d_v)
        if cfg.uses_tconv:
            self.contract = TemporalContract(1, cfg.base_channels, cfg.depth, cfg.kernel_size, cfg.negative_slope)
            n_flat = V * (T // 2 ** cfg.depth) * self.contract.channels[-1]
        else:
            n_flat = V * T
        self.fc = nn.Linear(n_flat, 1)

    def forward(self, x: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        h = F.leaky_relu(self.graph_in(x.unsqueeze(-1), adj), self.cfg.negative_slope).squeeze(-1)
        if self.cfg.uses_mhsa:
            h = self.attn(h)
        if self.cfg.uses_tconv:
            B, V, T = h.shape
            h = self.contract.forward_flat(h.reshape(B * V, T, 1))[-1]
        return self.fc(h.reshape(x.shape[0], -1)).squeeze(-1)


@dataclass
class Networks:
    imputer: GtaUNet
    mask_generator: MaskGeneratorNet
    imputation_critic: DiscriminatorNet
    mask_critic: DiscriminatorNet


def build_variant(cfg: NetworkConfig | None = None, **kwargs) -> Networks:
    """Instantiate the four networks for ``cfg.variant``."""
    if cfg is None:
        cfg = NetworkConfig(**kwargs)
    elif kwargs:
        raise TypeError("pass either a NetworkConfig or keyword arguments, not both")
    return Networks(GtaUNet(cfg), MaskGeneratorNet(cfg), DiscriminatorNet(cfg), DiscriminatorNet(cfg))
