from .attention import CrossAttention
from .config import DEFAULT_LAMBDAS, VqvaeConfig
from .model import DualPathVqvae, ForwardOutput, LossBreakdown
from .quantize import MultiScaleQuantizer, QuantizeResult, TokenSequence, nearest_code
from .spectral import FrequencyEmbedder, amplitude_phase, fourier_loss

__all__ = [
    "CrossAttention",
    "DEFAULT_LAMBDAS",
    "VqvaeConfig",
    "DualPathVqvae",
    "ForwardOutput",
    "LossBreakdown",
    "MultiScaleQuantizer",
    "QuantizeResult",
    "TokenSequence",
    "nearest_code",
    "FrequencyEmbedder",
    "amplitude_phase",
    "fourier_loss",
]
