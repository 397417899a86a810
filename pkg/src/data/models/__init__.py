from .target import TargetNetConfig, TargetNetParams, CoordinateGrid
from .encoder import EncoderConfig, WaveEncoder
from .hypernet import HeadConfig, HyperNetModel, WeightHead

__all__ = [
    "TargetNetConfig",
    "TargetNetParams",
    "CoordinateGrid",
    "EncoderConfig",
    "WaveEncoder",
    "HeadConfig",
    "HyperNetModel",
    "WeightHead",
]
