"""Bit-interleaved coded multiple beamforming with partial constellation precoding."""

from .analysis import bicmb_bound, diversity_order, enumerate_alpha, estimate_slope, theorem1_check
from .coding import CodeSpec, encode, viterbi_decode
from .config import SimConfig, load_configs
from .modem import FrameLayout, SpatialInterleaver, block_pattern, make_qam, rotating
from .precoding import PrecoderConfig, apply_precoder, verify_condition
from .sim import BerPoint, run_curve, run_experiment, run_point

__version__ = "0.1.0"
