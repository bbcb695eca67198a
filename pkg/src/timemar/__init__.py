"""Two-stage generative pipeline for multivariate time series.

Stage 1 tokenizes windows with a trend/seasonal-decomposed dual-path
multi-scale VQ autoencoder; stage 2 fits a GPT-style prior over the frozen
token sequences. Generation samples tokens and decodes them back to
continuous windows; a metric suite scores the result.
"""

from .armodel import ArConfig, ArModel, ar_loss, ar_sample
from .data import (
    RawSeries,
    ScalerState,
    TimeSeriesDataset,
    gen_sines,
    inverse_scale,
    load_csv,
    make_windows,
    minmax_scale,
)
from .decompose import Decomposer, coarse_seasonal, moving_average
from .metrics import (
    MetricReport,
    context_fid,
    discriminative_score,
    frechet_distance,
    predictive_score,
    train_embedder,
)
from .pipeline import (
    SamplingOptions,
    TrainSchedule,
    extract_tokens,
    generate,
    train_stage1,
    train_stage2,
)
from .vqvae import DualPathVqvae, MultiScaleQuantizer, TokenSequence, VqvaeConfig

__version__ = "0.1.0"
