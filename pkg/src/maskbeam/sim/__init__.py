from .mix import MixResult, mix_scene, synthetic_speech
from .noise import diffuse_coherence, diffuse_noise
from .rir import RIRSet, compute_rir_set, image_method_rir
from .scene import (
    NoisePlan,
    NoiseSource,
    RoomScene,
    circular_array,
    rectangular_array,
    sample_scene,
)

__all__ = [
    "MixResult",
    "NoisePlan",
    "NoiseSource",
    "RIRSet",
    "RoomScene",
    "circular_array",
    "compute_rir_set",
    "diffuse_coherence",
    "diffuse_noise",
    "image_method_rir",
    "mix_scene",
    "rectangular_array",
    "sample_scene",
    "synthetic_speech",
]
