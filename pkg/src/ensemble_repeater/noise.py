"""Imperfection models: efficiency, phase diffusion, misalignment, dark counts.

The combined retrieval and detection efficiency eta is consumed directly
by the connection circuits; this module holds the remaining channels.
Interferometric phase noise is applied at generation time as a
Bell-weight mixture (the Gaussian average over the accumulated phase),
misalignment as a depolarizing Bell channel per connection step, and
dark counts as a small logical-error injection per detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseParams:
    """Imperfection parameters.

    Attributes
    ----------
    eta : float
        Combined retrieval and detection efficiency per photon.
    D : float
        Phase diffusion coefficient of the fiber links, rad^2 per km.
    p_misalign : float
        Depolarizing probability per connection/purification step.
    p_dark : float
        Dark-count probability per detection window.
    eta_s : float
        Signal detection efficiency entering the dark-count error term.
    """

    eta: float = 0.95
    D: float = 0.0
    p_misalign: float = 0.0
    p_dark: float = 0.0
    eta_s: float = 0.9

    def __post_init__(self) -> None:
        for name in ("eta", "p_misalign", "p_dark", "eta_s"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.D < 0.0:
            raise ValueError("D must be non-negative")


def phase_error_prob(D: float, L0: float) -> float:
    """Phase-error probability of one interferometric link.

    The accumulated phase is Gaussian with variance 2*D*L0, and the
    average sin^2(delta/2) over that distribution is (1 - exp(-D*L0))/2.
    Monotone in both arguments, bounded by 1/2.
    """
    if D < 0.0:
        raise ValueError("D must be non-negative")
    if L0 <= 0.0:
        raise ValueError("L0 must be positive")
    return 0.5 * (1.0 - math.exp(-D * L0))


def gaussian_phase_average(variance: float) -> float:
    """<sin^2(delta/2)> for a zero-mean Gaussian phase of given variance."""
    return 0.5 * (1.0 - math.exp(-variance / 2.0))


def misalignment_channel(p_misalign: float) -> np.ndarray:
    """Depolarizing Bell channel: keep with 1-p, randomize with p."""
    if not 0.0 <= p_misalign <= 1.0:
        raise ValueError("p_misalign must lie in [0, 1]")
    return (1.0 - p_misalign) * np.eye(4) + p_misalign * np.full((4, 4), 0.25)


def dark_count_error(p_dark: float, eta_s: float) -> float:
    """Logical-error probability injected per detection, p_dark*(1-eta_s)."""
    if not 0.0 <= p_dark <= 1.0 or not 0.0 <= eta_s <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    return p_dark * (1.0 - eta_s)
