"""Anti-eavesdropping study: random bit-flipping, null-space precoding,
RIS phase optimization at the eavesdropper, exact LLR detection, and the
Monte Carlo experiments tying them together."""

__version__ = "0.1.0"

from .channel import (
    ChannelRealization,
    PhaseVector,
    SystemDims,
    add_awgn,
    draw_channels,
    eve_effective_channel,
)
from .flipcode import FlipOutcome, FlipPolicy, encode, marginals, split
from .precoder import PrecoderSet, bob_observe, build, eve_observe, transmit
from .riseve import (
    PhaseSolution,
    QuadraticForm,
    bcd_optimize,
    brute_force_phases,
    gaussian_randomize,
    qf_known_x,
    qf_unknown_x,
    random_phases,
    sdr_solve,
)
from .detector import LlrResult, PriorTable, bob_llr, bob_llr_reduced, decide, eve_llr
from .infotheory import MiEstimate, dmc_mi, estimate_ami

__all__ = [
    "ChannelRealization",
    "PhaseVector",
    "SystemDims",
    "add_awgn",
    "draw_channels",
    "eve_effective_channel",
    "FlipOutcome",
    "FlipPolicy",
    "encode",
    "marginals",
    "split",
    "PrecoderSet",
    "bob_observe",
    "build",
    "eve_observe",
    "transmit",
    "PhaseSolution",
    "QuadraticForm",
    "bcd_optimize",
    "brute_force_phases",
    "gaussian_randomize",
    "qf_known_x",
    "qf_unknown_x",
    "random_phases",
    "sdr_solve",
    "LlrResult",
    "PriorTable",
    "bob_llr",
    "bob_llr_reduced",
    "decide",
    "eve_llr",
    "MiEstimate",
    "dmc_mi",
    "estimate_ami",
]
