"""Protocol steps acting on pattern states.

The three repeater operations (entanglement generation, connection,
purification) and the final post-selected mapping are exposed here as
maps between :class:`~.patterns.PatternState` objects.  Generation is an
analytic model of the heralded source including its leading
multi-excitation admixture; connection, purification and the final
mapping apply the exact Fock-level tables of :mod:`.tables` bilinearly
to the input decompositions.

Connection-type steps return an unnormalized output whose total mass is
the acceptance probability of the step; overflow components of the
inputs (beyond two excitations per node) are treated as never yielding
an accepted outcome.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .noise import NoiseParams, gaussian_phase_average, phase_error_prob
from .patterns import (
    BellState,
    ExcitationPattern,
    LogicalBlock,
    PatternState,
    SchemeKind,
    logical_pattern,
)
from .tables import ConnectionTable, Key, enc_table, enp_table, pme_table

# Weight of the unheralded double-excitation admixture of the sources,
# relative to p_c.  Generation-side detection catches most double
# emissions (the second Stokes photon usually clicks), so only a small
# fraction survives into the heralded state.  The two-cell value is
# calibrated so that connection levels inject an accumulated logical
# error of (2^m - 1)(1 - eta) p_c.
ENG_MULTI_WEIGHT_NEW = 0.2
ENG_MULTI_WEIGHT_DLCZ = 5.5


class EnpKind(str, enum.Enum):
    """Which Bell-state error a purification round removes."""

    BIT = "bit"
    PHASE = "phase"


@dataclass(frozen=True)
class StepOutcome:
    """Result of one heralded step.

    Attributes
    ----------
    out : PatternState
        Unnormalized post-step state; its total mass equals the
        acceptance probability of the step.
    success_prob : float
        Acceptance probability (equal to ``out.total``).
    """

    out: PatternState
    success_prob: float

    @property
    def normalized(self) -> PatternState:
        from .patterns import normalize

        return normalize(self.out)


def eng(
    scheme: SchemeKind,
    p_c: float,
    noise: NoiseParams,
    L0: float,
) -> PatternState:
    """Heralded elementary pair between stations 2*L0 apart.

    Single-rail generation conditions on one Stokes click and yields the
    odd-parity superposition with excitation probability p_c per
    ensemble; the click heralds at least one excitation, so the
    admixture at O(p_c) consists of one extra excitation on either side.
    Two-cell generation runs one single-rail link per cell pair and
    keeps both, so half the heralded mass is the cross-cell component
    with both excitations at one node; its O(p_c) admixture adds a third
    excitation.  Interferometric phase noise over the generation fibers
    mixes the odd-parity sign; the two-cell pattern sees the difference
    of two independent link phases and thus twice the variance.

    Returns a normalized pattern state.
    """
    if not 0.0 < p_c < 1.0:
        raise ValueError("p_c must lie in (0, 1)")
    if L0 <= 0.0:
        raise ValueError("L0 must be positive")
    if scheme is SchemeKind.DLCZ:
        q = phase_error_prob(noise.D, L0)
        extra = ENG_MULTI_WEIGHT_DLCZ * p_c
        norm = 1.0 + extra
        probs = {
            ExcitationPattern.P10: 1.0 / norm,
            ExcitationPattern.P11: 0.5 * extra / norm,
            ExcitationPattern.P20: 0.5 * extra / norm,
        }
        block = LogicalBlock(0.0, 0.0, 1.0 - q, q)
        return PatternState(scheme=scheme, probs=probs, logical=block)

    q = gaussian_phase_average(4.0 * noise.D * L0)
    extra = ENG_MULTI_WEIGHT_NEW * p_c
    norm = 1.0 + extra
    probs = {
        ExcitationPattern.P11: 0.5 / norm,
        ExcitationPattern.P20_PERP: 0.5 / norm,
        ExcitationPattern.P21_PAR: 0.5 * extra / norm,
        ExcitationPattern.P21_PERP: 0.5 * extra / norm,
    }
    block = LogicalBlock(0.0, 0.0, 1.0 - q, q)
    return PatternState(scheme=scheme, probs=probs, logical=block)


def _component_masses(state: PatternState) -> Dict[Key, float]:
    """Decompose a pattern state into canonical component masses."""
    logical = logical_pattern(state.scheme)
    masses: Dict[Key, float] = {}
    for pattern, prob in state.probs.items():
        if pattern is ExcitationPattern.OVERFLOW:
            continue
        if pattern is logical:
            for bell in BellState:
                weight = state.logical.weight(bell)
                if weight <= 0.0:
                    continue
                if state.scheme is SchemeKind.DLCZ and bell in (
                    BellState.PHI_PLUS,
                    BellState.PHI_MINUS,
                ):
                    raise ValueError(
                        "single-rail pairs carry only odd-parity Bell weight"
                    )
                masses[(pattern, bell)] = prob * weight
        elif prob > 0.0:
            masses[(pattern, None)] = prob
    return masses


def _apply_table(
    table: ConnectionTable,
    left: PatternState,
    right: PatternState,
) -> StepOutcome:
    if left.scheme is not table.scheme or right.scheme is not table.scheme:
        raise ValueError("input scheme does not match table scheme")
    out_scheme = table.output_scheme
    logical_out = logical_pattern(out_scheme)
    masses_l = _component_masses(left)
    masses_r = _component_masses(right)
    out_masses: Dict[ExcitationPattern, float] = {}
    bell = np.zeros(4)
    for key_l, mass_l in masses_l.items():
        for key_r, mass_r in masses_r.items():
            entry = table.entry(key_l, key_r)
            if entry.total <= 0.0:
                continue
            weight = mass_l * mass_r
            for pattern, mass in entry.masses:
                if pattern is logical_out:
                    continue
                out_masses[pattern] = out_masses.get(pattern, 0.0) + weight * mass
            bell += weight * np.asarray(entry.bell)
    p_logical = float(bell.sum())
    if p_logical > 0.0:
        out_masses[logical_out] = p_logical
        block = LogicalBlock.from_array(bell / p_logical)
    else:
        block = LogicalBlock.pure(
            BellState.PSI_PLUS if out_scheme is SchemeKind.DLCZ else BellState.PHI_PLUS
        )
    out = PatternState(scheme=out_scheme, probs=out_masses, logical=block)
    return StepOutcome(out=out, success_prob=out.total)


def enc(
    scheme: SchemeKind,
    left: PatternState,
    right: PatternState,
    eta: float,
    level: int = 2,
) -> StepOutcome:
    """Entanglement connection of two adjacent pairs.

    The two-cell circuit at the first connection level rotates the
    retrieved central qubits by 45 degrees before the polarizing
    beam splitter; all higher levels (and every single-rail connection)
    interfere them directly.  Acceptance requires exactly one photon at
    each output arm (one click total for the single-rail circuit).
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    table = enc_table(scheme, eta, first_level=(level == 1))
    return _apply_table(table, left, right)


def enp(
    kind: EnpKind,
    pair1: PatternState,
    pair2: PatternState,
    eta: float,
) -> StepOutcome:
    """One entanglement-purification round consuming two parallel pairs.

    The bit variant compares the qubits in the H/V basis and keeps the
    upper pair when each node's lower output carries exactly one photon,
    which rejects components whose bit parities disagree; the phase
    variant runs the same comparison in the rotated basis and rejects
    sign mismatches instead.
    """
    table = enp_table(EnpKind(kind).value, eta)
    return _apply_table(table, pair1, pair2)


def postselect_pme(
    pair1: PatternState,
    pair2: PatternState,
    eta: float,
) -> StepOutcome:
    """Post-selected mapping of two single-rail pairs to one qubit pair.

    The two rails become the H and V cells of a polarization pair; the
    mapping keeps the component with exactly one excitation at each
    node, which is read out only by the final measurement and therefore
    enters the delivered fidelity as a post-selection.
    """
    table = pme_table(eta)
    return _apply_table(table, pair1, pair2)


def predicted_logical_error(m: int, eta: float, p_c: float) -> float:
    """Accumulated double-excitation logical error after m connection levels."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return (2.0**m - 1.0) * (1.0 - eta) * p_c
