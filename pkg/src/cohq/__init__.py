"""Coherence-detection measures for quantum channels."""

from .classify import (FreeClassReport, Povm, channel_from_stochastic, classical_action,
                       classify, is_free_povm)
from .diamond import DiamondResult, diamond_dual, diamond_measure
from .discrim import DiscriminationInstance, brute_force_guess_prob, guess_prob_states
from .entropy import McEstimate, mc_lower_bound, relative_entropy
from .nsid import (NsidResult, StateSet, augment, guess_prob_channels, inner_max,
                   nsid_measure, outer_lp)
from .qcore import (Channel, ChoiMatrix, apply, apply_from_choi, choi, coefficients, compose,
                    dephase, mix, standard_channels, tensor, trace_norm)

__version__ = "0.1.0"

__all__ = [
    "Channel", "ChoiMatrix", "apply", "apply_from_choi", "choi", "coefficients", "compose",
    "dephase", "mix", "standard_channels", "tensor", "trace_norm",
    "FreeClassReport", "Povm", "channel_from_stochastic", "classical_action", "classify",
    "is_free_povm", "DiamondResult", "diamond_dual", "diamond_measure",
    "DiscriminationInstance", "brute_force_guess_prob", "guess_prob_states",
    "McEstimate", "mc_lower_bound", "relative_entropy",
    "NsidResult", "StateSet", "augment", "guess_prob_channels", "inner_max", "nsid_measure",
    "outer_lp",
]
