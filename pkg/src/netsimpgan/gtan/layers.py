"""Graph, temporal-attention and temporal-convolution layers.

Feature tensors are ``(B, V, T, F)``; single-feature signals are
``(B, V, T)``. Graph layers take a dense ``(V, V)`` adjacency without
self-loops whose nonzero entries are edges (and edge weights for
:class:`GraphConv`).
"""
from __future__ import annotations

import math

import torch
from torch import nn
import torch.nn.functional as F


def _uniform_fan_in(tensor: torch.Tensor, fan_in: int) -> None:
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    nn.init.uniform_(tensor, -bound, bound)


def neighbourhood_bias(adj: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    """Additive score mask: 0 on edges and the diagonal, ``-inf`` elsewhere."""
    eye = torch.eye(adj.shape[0], dtype=torch.bool, device=adj.device)
    allowed = (adj != 0) | eye
    return torch.zeros(adj.shape, dtype=dtype, device=adj.device).masked_fill(~allowed, float("-inf"))


class GATLayer(nn.Module):
    """Graph attention applied independently at every timestamp.

    ``out[i, t] = sum_j alpha[i, j, t] * theta(y[j, t])`` over ``j`` in the
    one-hop neighbourhood of ``i`` plus ``i`` itself, with ``alpha`` a
    softmax of ``LeakyReLU(a . [theta y_i || theta y_j])``.
    """

    def __init__(self, in_features: int = 1, out_features: int = 1, negative_slope: float = 0.2):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.negative_slope = negative_slope
        self.theta = nn.Linear(in_features, out_features, bias=False)
        self.attn_vec = nn.Parameter(torch.empty(2 * out_features))
        _uniform_fan_in(self.theta.weight, in_features)
        nn.init.uniform_(self.attn_vec, -0.01, 0.01)

    def attention(self, h: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        """Coefficients ``(B, T, V, V)`` for projected features ``h``."""
        fo = self.out_features
        src = h @ self.attn_vec[:fo]  # (B, V, T)
        dst = h @ self.attn_vec[fo:]
        scores = src.transpose(1, 2).unsqueeze(-1) + dst.transpose(1, 2).unsqueeze(-2)
        scores = F.leaky_relu(scores, self.negative_slope)
        return torch.softmax(scores + neighbourhood_bias(adj, scores.dtype), dim=-1)

    def forward(self, y: torch.Tensor, adj: torch.Tensor, return_attention: bool = False):
        if y.shape[-1] != self.in_features:
            raise ValueError(f"GAT expects {self.in_features} input features, got {y.shape[-1]}")
        if not torch.isfinite(y).all():
            raise ValueError("GAT input contains non-finite node features")
        h = self.theta(y)  # (B, V, T, F')
        alpha = self.attention(h, adj)
        out = torch.einsum("btij,bjtf->bitf", alpha, h)
        if return_attention:
            return out, alpha
        return out


class GraphConv(nn.Module):
    """Static-weight graph convolution: ``W_self y_i + W_nbr sum_j w_ij y_j``."""

    def __init__(self, in_features: int = 1, out_features: int = 1):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.lin_self = nn.Linear(in_features, out_features)
        self.lin_nbr = nn.Linear(in_features, out_features, bias=False)
        _uniform_fan_in(self.lin_self.weight, in_features)
        _uniform_fan_in(self.lin_nbr.weight, in_features)
        nn.init.zeros_(self.lin_self.bias)

    def forward(self, y: torch.Tensor, adj: torch.Tensor) -> torch.Tensor:
        agg = torch.einsum("ij,bjtf->bitf", adj.to(y.dtype), y)
        return self.lin_self(y) + self.lin_nbr(agg)


class NodeLinear(nn.Module):
    """Per-node feature map that ignores the graph (GAT on an edgeless graph)."""

    def __init__(self, in_features: int = 1, out_features: int = 1):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.theta = nn.Linear(in_features, out_features, bias=False)
        _uniform_fan_in(self.theta.weight, in_features)

    def forward(self, y: torch.Tensor, adj: torch.Tensor | None = None) -> torch.Tensor:
        return self.theta(y)


def make_graph_layer(kind: str, in_features: int, out_features: int, negative_slope: float = 0.2) -> nn.Module:
    if kind == "gat":
        return GATLayer(in_features, out_features, negative_slope)
    if kind == "gcn":
        return GraphConv(in_features, out_features)
    if kind == "none":
        return NodeLinear(in_features, out_features)
    raise ValueError(f"unknown graph layer kind {kind!r}")


class MultiHeadSelfAttention(nn.Module):
    """Self-attention across timestamps with the node vector as token features.

    For input ``H`` of shape ``(B, V, T)`` every head forms
    ``softmax(Q K^T / sqrt(d_k)) V_i`` with ``Q = H^T W^Q`` etc., and the
    heads are recombined by ``W^O Concat(heads)^T`` into ``(B, V, T)``.
    """

    def __init__(self, n_nodes: int, n_heads: int = 3, d_k: int | None = None, d_v: int | None = None):
        super().__init__()
        if n_heads < 1:
            raise ValueError("n_heads must be >= 1")
        d_default = math.ceil(n_nodes / n_heads)
        d_k = d_default if d_k is None else d_k
        d_v = d_default if d_v is None else d_v
        if d_k <= 0 or d_v <= 0:
            raise ValueError(f"head dimensions must be positive, got d_k={d_k}, d_v={d_v}")
        self.n_nodes, self.n_heads, self.d_k, self.d_v = n_nodes, n_heads, d_k, d_v
        self.w_q = nn.Parameter(torch.empty(n_heads, n_nodes, d_k))
        self.w_k = nn.Parameter(torch.empty(n_heads, n_nodes, d_k))
        self.w_v = nn.Parameter(torch.empty(n_heads, n_nodes, d_v))
        self.w_o = nn.Parameter(torch.empty(n_nodes, n_heads * d_v))
        for w in (self.w_q, self.w_k, self.w_v):
            _uniform_fan_in(w, n_nodes)
        _uniform_fan_in(self.w_o, n_heads * d_v)

    def forward(self, H: torch.Tensor, return_attention: bool = False):
        if H.shape[1] != self.n_nodes:
            raise ValueError(f"attention built for {self.n_nodes} nodes, got {H.shape[1]}")
        tokens = H.transpose(1, 2)  # (B, T, V)
        q = torch.einsum("btv,hvd->bhtd", tokens, self.w_q)
        k = torch.einsum("btv,hvd->bhtd", tokens, self.w_k)
        v = torch.einsum("btv,hvd->bhtd", tokens, self.w_v)
        attn = torch.softmax(q @ k.transpose(-1, -2) / math.sqrt(self.d_k), dim=-1)
        heads = attn @ v  # (B, h, T, d_v)
        concat = heads.permute(0, 2, 1, 3).reshape(H.shape[0], H.shape[2], -1)  # (B, T, h*d_v)
        out = torch.einsum("vk,btk->bvt", self.w_o, concat)
        if return_attention:
            return out, attn
        return out


def channel_schedule(in_channels: int, base_channels: int, depth: int) -> list[int]:
    """Channels ``c_0..c_L`` along the contracting path; doubling after ``c_1``."""
    return [in_channels] + [base_channels * 2 ** l for l in range(depth)]


def check_temporal_length(T: int, depth: int) -> None:
    length = T
    for layer in range(1, depth + 1):
        if length % 2:
            raise ValueError(
                f"temporal length {T} cannot be halved {depth} times (length {length} at layer {layer})"
            )
        length //= 2


def strided_conv1d(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None) -> torch.Tensor:
    """Stride-2 convolution with ``padding = k // 2`` on channels-last ``(N, T, C_in)`` input.

    ``weight`` has the ``nn.Conv1d`` layout ``(C_out, C_in, k)``. Equivalent to
    ``F.conv1d(x.transpose(1, 2), weight, bias, stride=2, padding=k // 2)``
    transposed back, but built from one matrix product, which is much faster
    for the short sequences used here.
    """
    c_out, c_in, k = weight.shape
    n, t, _ = x.shape
    t_out = (t + 2 * (k // 2) - k) // 2 + 1
    xp = F.pad(x, (0, 0, k // 2, k // 2))
    cols = torch.cat([xp[:, j : j + 2 * t_out - 1 : 2] for j in range(k)], dim=-1)  # (N, T_out, k*C_in)
    w = weight.permute(2, 1, 0).reshape(k * c_in, c_out)
    flat = cols.reshape(n * t_out, k * c_in)
    out = flat @ w if bias is None else torch.addmm(bias, flat, w)
    return out.reshape(n, t_out, c_out)


def _shift(y: torch.Tensor, s: int) -> torch.Tensor:
    """``out[:, m] = y[:, m - s]`` with zeros shifted in."""
    if s == 0:
        return y
    t = y.shape[1]
    if s > 0:
        return F.pad(y[:, : t - s], (0, 0, s, 0))
    return F.pad(y[:, -s:], (0, 0, 0, -s))


def strided_conv_transpose1d(x: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor | None) -> torch.Tensor:
    """Stride-2 transposed convolution doubling the length of channels-last ``(N, T, C_in)`` input.

    ``weight`` has the ``nn.ConvTranspose1d`` layout ``(C_in, C_out, k)``; the
    result equals ``F.conv_transpose1d(..., stride=2, padding=k // 2,
    output_padding=1)`` for odd ``k``. Input ``i`` reaches output
    ``2 i - k // 2 + j`` through tap ``j``, so each output parity is a sum of
    shifted per-tap products.
    """
    c_in, c_out, k = weight.shape
    n, t, _ = x.shape
    p = k // 2
    y = (x.reshape(n * t, c_in) @ weight.permute(0, 2, 1).reshape(c_in, k * c_out)).reshape(n, t, k, c_out)
    even = odd = None
    for j in range(k):
        off = j - p
        part = _shift(y[:, :, j], (off - (off % 2)) // 2)
        if off % 2 == 0:
            even = part if even is None else even + part
        else:
            odd = part if odd is None else odd + part
    if odd is None:
        odd = torch.zeros_like(even)
    out = torch.stack([even, odd], dim=2).reshape(n, 2 * t, c_out)
    return out if bias is None else out + bias


class TemporalContract(nn.Module):
    """Stride-2 1-D convolutions shared across nodes; returns every layer output."""

    def __init__(self, in_channels: int = 1, base_channels: int = 16, depth: int = 3, kernel_size: int = 3,
                 negative_slope: float = 0.2):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd so that stride 2 halves the length exactly")
        self.channels = channel_schedule(in_channels, base_channels, depth)
        self.depth = depth
        self.negative_slope = negative_slope
        self.convs = nn.ModuleList(
            nn.Conv1d(self.channels[l], self.channels[l + 1], kernel_size, stride=2, padding=kernel_size // 2)
            for l in range(depth)
        )

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        B, V, T, C = x.shape
        outs = self.forward_flat(x.reshape(B * V, T, C))
        return [h.reshape(B, V, h.shape[1], h.shape[2]) for h in outs]

    def forward_flat(self, h: torch.Tensor) -> list[torch.Tensor]:
        """Same as :meth:`forward` on ``(B*V, T, C)`` tensors."""
        check_temporal_length(h.shape[1], self.depth)
        outs = []
        for conv in self.convs:
            h = F.leaky_relu(strided_conv1d(h, conv.weight, conv.bias), self.negative_slope)
            outs.append(h)
        return outs


class TemporalExpand(nn.Module):
    """Stride-2 transposed convolutions, optionally fed U-Net skip connections.

    Layer ``l`` consumes ``[H_exp^(l-1), H_con^(L-l+1)]`` concatenated on the
    feature axis and halves the channel count; the last layer emits
    ``out_channels`` without an activation.
    """

    def __init__(self, out_channels: int = 1, base_channels: int = 16, depth: int = 3, kernel_size: int = 3,
                 skips: bool = True, negative_slope: float = 0.2):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        chans = channel_schedule(out_channels, base_channels, depth)
        self.channels = chans
        self.depth = depth
        self.skips = skips
        self.negative_slope = negative_slope
        layers = []
        for l in range(1, depth + 1):
            c_in = chans[depth - l + 1] * (2 if skips else 1)
            layers.append(nn.ConvTranspose1d(c_in, chans[depth - l], kernel_size, stride=2,
                                             padding=kernel_size // 2, output_padding=1))
        self.deconvs = nn.ModuleList(layers)

    @property
    def in_channels(self) -> int:
        return self.channels[-1]

    def forward(self, h: torch.Tensor, skips: list[torch.Tensor] | None = None) -> torch.Tensor:
        B, V, T, C = h.shape
        flat_skips = None if skips is None else [s.reshape(B * V, s.shape[2], s.shape[3]) for s in skips]
        out = self.forward_flat(h.reshape(B * V, T, C), flat_skips)
        return out.reshape(B, V, out.shape[1], out.shape[2])

    def forward_flat(self, h: torch.Tensor, skips: list[torch.Tensor] | None = None) -> torch.Tensor:
        """Same as :meth:`forward` on ``(B*V, T, C)`` tensors."""
        if self.skips and (skips is None or len(skips) != self.depth):
            raise ValueError(f"expansive path needs {self.depth} skip tensors")
        for l, deconv in enumerate(self.deconvs, start=1):
            if self.skips:
                h = torch.cat([h, skips[self.depth - l]], dim=-1)
            h = strided_conv_transpose1d(h, deconv.weight, deconv.bias)
            if l < self.depth:
                h = F.leaky_relu(h, self.negative_slope)
        return h
