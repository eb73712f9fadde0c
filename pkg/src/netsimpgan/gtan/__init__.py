from .layers import (
    GATLayer,
    GraphConv,
    MultiHeadSelfAttention,
    NodeLinear,
    TemporalContract,
    TemporalExpand,
    check_temporal_length,
)
from .networks import (
    VARIANTS,
    DiscriminatorNet,
    GtaUNet,
    MaskGeneratorNet,
    NetworkConfig,
    Networks,
    build_variant,
    canonical_variant,
    harden,
)

__all__ = [
    "GATLayer",
    "GraphConv",
    "MultiHeadSelfAttention",
    "NodeLinear",
    "TemporalContract",
    "TemporalExpand",
    "check_temporal_length",
    "VARIANTS",
    "DiscriminatorNet",
    "GtaUNet",
    "MaskGeneratorNet",
    "NetworkConfig",
    "Networks",
    "build_variant",
    "canonical_variant",
    "harden",
]
