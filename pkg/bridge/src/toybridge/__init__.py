"""Toy conditional denoising bridge for the pseudoview completion protocol.

Trains a small pixel-space denoiser on (sparse view, recorded image) pairs
exported by the engine and serves sampled completions back through the
engine's subprocess backend interface.
"""

from .model import ConditionEncoder, TinyDenoiser
from .sampling import cfg_predict, sample
from .schedule import NoiseSchedule
from .training import TrainConfig, denoise_loss, forward_noise, train_overfit

__version__ = "0.1.0"
