from .model import MaskEstimator, NetConfig, build_weights, mask_forward
from .weights import WeightStore, read_manifest

__all__ = [
    "MaskEstimator",
    "NetConfig",
    "WeightStore",
    "build_weights",
    "mask_forward",
    "read_manifest",
]
