"""Oracle circuits for the repeater primitives.

Each protocol step (entanglement connection, purification, final
post-selection) is expressed here as an explicit Fock-space circuit:
retrieval loss, interference optics, photon counting over all detection
outcomes, and the measurement-conditioned corrections. Feeding canonical
pattern states through these circuits produces the exact superoperator
coefficients used by the scalable recursion; the same circuits back the
truth-table and coefficient verification suite.

Canonical pattern states
------------------------
The superoperator algebra is bilinear over excitation patterns, so each
pattern label is represented by a canonical Fock state: the uniform
mixture over all cell arrangements consistent with the label, with both
side orientations weighted equally. The logical pattern is represented
by each Bell state in turn, which spans every Bell-diagonal block by
linearity.

Detection conventions
---------------------
Counting in the +/-45 degree basis is realized by a 45 degree rotation
on the output (H, V) pair followed by photon counting, so the H counter
registers "+" photons and the V counter registers "-" photons. The
parity of "-" clicks across the accepted detectors fixes the
feed-forward correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .fock import (
    FockDensityOperator,
    ModeLabel,
    PAULI_X,
    PAULI_Z,
    ROTATE_45,
    BS_5050,
    apply_loss,
    apply_mode_unitary,
    apply_pbs,
    measure_modes,
    project_total_photons,
    relabel_modes,
    tensor,
)
from .patterns import (
    BellState,
    ExcitationPattern,
    LogicalBlock,
    PatternState,
    SchemeKind,
    logical_coherence_residue,
    logical_pattern,
    project_from_fock,
    scheme_patterns,
)

SQRT_HALF = 1.0 / math.sqrt(2.0)

#: Sign flip on a single mode (pi phase on every photon in it).
PHASE_FLIP = np.array([[-1.0]])


# ----------------------------------------------------------------------
# canonical pattern states


def canonical_dlcz(
    pattern: ExcitationPattern,
    left: ModeLabel = "x",
    right: ModeLabel = "y",
    bell: BellState | None = None,
    cutoff: int = 4,
) -> FockDensityOperator:
    """Canonical single-rail Fock state for a DLCZ pattern label.

    The logical pattern P10 requires a Bell label (PSI_PLUS or
    PSI_MINUS) selecting (|10> +- |01>)/sqrt2; other patterns are the
    uniform mixture over node arrangements.
    """
    modes = (left, right)

    def basis(n_l: int, n_r: int) -> FockDensityOperator:
        return FockDensityOperator.from_occupations(
            modes, {left: n_l, right: n_r}, cutoff
        )

    if pattern is ExcitationPattern.P00:
        return FockDensityOperator.vacuum(modes, cutoff)
    if pattern is ExcitationPattern.P10:
        if bell is BellState.PSI_PLUS:
            sign = 1.0
        elif bell is BellState.PSI_MINUS:
            sign = -1.0
        else:
            raise ValueError("DLCZ logical pattern needs a Psi+ or Psi- label")
        return FockDensityOperator.from_ket(
            modes, {(1, 0): SQRT_HALF, (0, 1): sign * SQRT_HALF}, cutoff
        )
    if pattern is ExcitationPattern.P11:
        return basis(1, 1)
    if pattern is ExcitationPattern.P20:
        return FockDensityOperator.mixture([(0.5, basis(2, 0)), (0.5, basis(0, 2))])
    if pattern is ExcitationPattern.P21:
        return FockDensityOperator.mixture([(0.5, basis(2, 1)), (0.5, basis(1, 2))])
    if pattern is ExcitationPattern.P22:
        return basis(2, 2)
    raise ValueError(f"no canonical state for {pattern} in the DLCZ scheme")


def _bell_ket_new(
    modes: tuple[ModeLabel, ModeLabel, ModeLabel, ModeLabel], bell: BellState
) -> dict[tuple[int, ...], complex]:
    # modes ordered (lH, lV, rH, rV); basis kets H/V per node
    hh = (1, 0, 1, 0)
    hv = (1, 0, 0, 1)
    vh = (0, 1, 1, 0)
    vv = (0, 1, 0, 1)
    if bell is BellState.PHI_PLUS:
        return {hh: SQRT_HALF, vv: SQRT_HALF}
    if bell is BellState.PHI_MINUS:
        return {hh: SQRT_HALF, vv: -SQRT_HALF}
    if bell is BellState.PSI_PLUS:
        return {hv: SQRT_HALF, vh: SQRT_HALF}
    return {hv: SQRT_HALF, vh: -SQRT_HALF}


def canonical_new(
    pattern: ExcitationPattern,
    left: tuple[ModeLabel, ModeLabel] = ("xH", "xV"),
    right: tuple[ModeLabel, ModeLabel] = ("yH", "yV"),
    bell: BellState | None = None,
    cutoff: int = 4,
) -> FockDensityOperator:
    """Canonical two-cell Fock state for a pattern label.

    The logical pattern P11 requires a Bell label; the remaining labels
    are uniform mixtures over the cell arrangements consistent with the
    pattern, symmetrized over the two node orientations.
    """
    modes = left + right
    l_h, l_v = left
    r_h, r_v = right

    def basis(**occ: int) -> FockDensityOperator:
        return FockDensityOperator.from_occupations(modes, occ, cutoff)

    def uniform(parts: Sequence[FockDensityOperator]) -> FockDensityOperator:
        w = 1.0 / len(parts)
        return FockDensityOperator.mixture([(w, p) for p in parts])

    singles_l = [basis(**{l_h: 1}), basis(**{l_v: 1})]
    singles_r = [basis(**{r_h: 1}), basis(**{r_v: 1})]
    par_l = [basis(**{l_h: 2}), basis(**{l_v: 2})]
    par_r = [basis(**{r_h: 2}), basis(**{r_v: 2})]
    perp_l = basis(**{l_h: 1, l_v: 1})
    perp_r = basis(**{r_h: 1, r_v: 1})

    def pair(a: Sequence[FockDensityOperator], b: Sequence[FockDensityOperator]):
        return [tensor_occ(x, y) for x in a for y in b]

    def tensor_occ(
        a: FockDensityOperator, b: FockDensityOperator
    ) -> FockDensityOperator:
        # both states live on the full register already; combine by
        # adding occupations (each is a basis state)
        occ_a = next(iter(a.occupation_probabilities()))
        occ_b = next(iter(b.occupation_probabilities()))
        combined = tuple(na + nb for na, nb in zip(occ_a, occ_b))
        return FockDensityOperator.from_ket(modes, {combined: 1.0}, cutoff)

    if pattern is ExcitationPattern.P00:
        return FockDensityOperator.vacuum(modes, cutoff)
    if pattern is ExcitationPattern.P10:
        return uniform(singles_l + singles_r)
    if pattern is ExcitationPattern.P11:
        if bell is None:
            raise ValueError("logical pattern needs a Bell label")
        return FockDensityOperator.from_ket(
            modes, _bell_ket_new(modes, bell), cutoff
        )
    if pattern is ExcitationPattern.P20_PAR:
        return uniform(par_l + par_r)
    if pattern is ExcitationPattern.P20_PERP:
        return uniform([perp_l, perp_r])
    if pattern is ExcitationPattern.P21_PAR:
        return uniform(pair(par_l, singles_r) + pair(singles_l, par_r))
    if pattern is ExcitationPattern.P21_PERP:
        return uniform(pair([perp_l], singles_r) + pair(singles_l, [perp_r]))
    if pattern is ExcitationPattern.P22_PAR_PAR:
        return uniform(pair(par_l, par_r))
    if pattern is ExcitationPattern.P22_PAR_PERP:
        return uniform(pair(par_l, [perp_r]) + pair([perp_l], par_r))
    if pattern is ExcitationPattern.P22_PERP_PERP:
        return tensor_occ(perp_l, perp_r)
    raise ValueError(f"no canonical state for {pattern} in the two-cell scheme")


def canonical_pattern_fock(
    scheme: SchemeKind,
    pattern: ExcitationPattern,
    bell: BellState | None = None,
    side: str = "left",
) -> FockDensityOperator:
    """Canonical state on the standard connection-circuit mode names.

    ``side`` selects the mode register: "left" is the pair between the
    outer node aL and the central node c1, "right" between c2 and aR.
    """
    if scheme is SchemeKind.DLCZ:
        if side == "left":
            return canonical_dlcz(pattern, "aL", "c1", bell)
        return canonical_dlcz(pattern, "c2", "aR", bell)
    if side == "left":
        return canonical_new(pattern, ("aLH", "aLV"), ("c1H", "c1V"), bell)
    return canonical_new(pattern, ("c2H", "c2V"), ("aRH", "aRV"), bell)


# ----------------------------------------------------------------------
# circuits

AcceptedBranch = tuple[FockDensityOperator, float]


def run_enc_dlcz(
    left: FockDensityOperator, right: FockDensityOperator, eta: float
) -> list[AcceptedBranch]:
    """Single-rail connection: retrieve the central memories, interfere
    on a balanced beamsplitter, accept exactly one click.

    ``left`` lives on modes (aL, c1), ``right`` on (c2, aR). A click at
    the second port heralds a sign flip, undone by a pi phase on aL.
    Returns the corrected conditional states on (aL, aR) with their
    probabilities.
    """
    st = tensor(left, right)
    st = apply_loss(st, "c1", eta)
    st = apply_loss(st, "c2", eta)
    st = apply_mode_unitary(st, ("c1", "c2"), BS_5050)
    accepted = []
    for pattern, (cond, prob) in measure_modes(st, ("c1", "c2")).items():
        if pattern.total != 1:
            continue
        if pattern.count("c2") == 1:
            cond = apply_mode_unitary(cond, ("aL",), PHASE_FLIP)
        accepted.append((cond, prob))
    return accepted


def run_enc_new(
    left: FockDensityOperator,
    right: FockDensityOperator,
    eta: float,
    first_level: bool,
) -> list[AcceptedBranch]:
    """Two-cell connection: retrieve both central qubits, overlap them on
    a PBS, count both outputs in the +/- basis, accept one photon per
    output.

    ``left`` lives on (aLH, aLV, c1H, c1V), ``right`` on
    (c2H, c2V, aRH, aRV). At the first nesting level an additional 45
    degree rotation acts on each retrieved central qubit before the PBS
    and the heralded correction is a bit flip; at higher levels no input
    rotation is applied and the correction is a phase flip. Returns the
    corrected conditional states on (aLH, aLV, aRH, aRV).
    """
    st = tensor(left, right)
    for mode in ("c1H", "c1V", "c2H", "c2V"):
        st = apply_loss(st, mode, eta)
    if first_level:
        st = apply_mode_unitary(st, ("c1H", "c1V"), ROTATE_45)
        st = apply_mode_unitary(st, ("c2H", "c2V"), ROTATE_45)
    st = apply_pbs(
        st, ("c1H", "c1V"), ("c2H", "c2V"), ("o1H", "o1V"), ("o2H", "o2V")
    )
    st = apply_mode_unitary(st, ("o1H", "o1V"), ROTATE_45)
    st = apply_mode_unitary(st, ("o2H", "o2V"), ROTATE_45)
    accepted = []
    detectors = ("o1H", "o1V", "o2H", "o2V")
    for pattern, (cond, prob) in measure_modes(st, detectors).items():
        n1 = pattern.count("o1H") + pattern.count("o1V")
        n2 = pattern.count("o2H") + pattern.count("o2V")
        if (n1, n2) != (1, 1):
            continue
        minus_clicks = pattern.count("o1V") + pattern.count("o2V")
        if minus_clicks % 2 == 1:
            flip = PAULI_X if first_level else PAULI_Z
            cond = apply_mode_unitary(cond, ("aLH", "aLV"), flip)
        accepted.append((cond, prob))
    return accepted


def run_enp(
    pair1: FockDensityOperator,
    pair2: FockDensityOperator,
    eta: float,
    phase_variant: bool,
) -> list[AcceptedBranch]:
    """Entanglement purification between two pairs spanning nodes a, b.

    ``pair1`` lives on (a1H, a1V, b1H, b1V), ``pair2`` on
    (a2H, a2V, b2H, b2V). All eight memories are retrieved (efficiency
    eta each); at each node the two retrieved qubits overlap on a PBS;
    the lower outputs are counted in the +/- basis and exactly one
    photon at each lower output is accepted; the upper outputs are
    stored back as the surviving pair.

    The bit variant filters bit errors directly. The phase variant
    conjugates the same interferometer by 45 degree rotations on all
    four retrieved qubits (undone on the surviving pair), which swaps
    the roles of bit and phase errors; the heralded correction is then a
    bit flip instead of a phase flip.

    Returns the corrected conditional states on (auH, auV, buH, buV).
    """
    st = tensor(pair1, pair2)
    for mode in st.modes:
        st = apply_loss(st, mode, eta)
    if phase_variant:
        for pair in (("a1H", "a1V"), ("a2H", "a2V"), ("b1H", "b1V"), ("b2H", "b2V")):
            st = apply_mode_unitary(st, pair, ROTATE_45)
    st = apply_pbs(st, ("a1H", "a1V"), ("a2H", "a2V"), ("auH", "auV"), ("adH", "adV"))
    st = apply_pbs(st, ("b1H", "b1V"), ("b2H", "b2V"), ("buH", "buV"), ("bdH", "bdV"))
    st = apply_mode_unitary(st, ("adH", "adV"), ROTATE_45)
    st = apply_mode_unitary(st, ("bdH", "bdV"), ROTATE_45)
    accepted = []
    detectors = ("adH", "adV", "bdH", "bdV")
    for pattern, (cond, prob) in measure_modes(st, detectors).items():
        n_a = pattern.count("adH") + pattern.count("adV")
        n_b = pattern.count("bdH") + pattern.count("bdV")
        if (n_a, n_b) != (1, 1):
            continue
        if phase_variant:
            cond = apply_mode_unitary(cond, ("auH", "auV"), ROTATE_45)
            cond = apply_mode_unitary(cond, ("buH", "buV"), ROTATE_45)
        minus_clicks = pattern.count("adV") + pattern.count("bdV")
        if minus_clicks % 2 == 1:
            flip = PAULI_X if phase_variant else PAULI_Z
            cond = apply_mode_unitary(cond, ("auH", "auV"), flip)
        accepted.append((cond, prob))
    return accepted


def run_pme(
    pair1: FockDensityOperator, pair2: FockDensityOperator, eta: float
) -> list[AcceptedBranch]:
    """Final DLCZ post-selection onto a polarization-entangled pair.

    ``pair1`` lives on single-rail modes (x1, y1), ``pair2`` on
    (x2, y2); the two memories at each node are retrieved into
    orthogonal polarizations of one output channel (pair 1 to H, pair 2
    to V) and the coincidence "one photon at each node" is
    post-selected coherently, since the surviving photons carry the
    polarization qubits. Returns the projected state on
    (xH, xV, yH, yV).
    """
    st = tensor(pair1, pair2)
    for mode in st.modes:
        st = apply_loss(st, mode, eta)
    st = relabel_modes(st, {"x1": "xH", "x2": "xV", "y1": "yH", "y2": "yV"})
    st = project_total_photons(st, ("xH", "xV"), 1)
    st = project_total_photons(st, ("yH", "yV"), 1)
    return [(st, st.trace)]


# ----------------------------------------------------------------------
# superoperator table entries


@dataclass(frozen=True)
class TableEntry:
    """Unnormalized output of one pattern-pair connection.

    ``masses`` lists every output pattern weight (the logical pattern's
    total equals the sum of ``bell``); ``bell`` holds the absolute Bell
    masses of the logical output; ``residue`` is the largest discarded
    off-Bell-diagonal magnitude across accepted outcomes.
    """

    masses: tuple[tuple[ExcitationPattern, float], ...]
    bell: tuple[float, float, float, float]
    residue: float

    @property
    def total(self) -> float:
        return float(sum(w for _, w in self.masses))

    def mass(self, pattern: ExcitationPattern) -> float:
        for pat, w in self.masses:
            if pat is pattern:
                return w
        return 0.0

    def as_pattern_state(self, scheme: SchemeKind) -> PatternState:
        """Unnormalized PatternState view (block from ``bell``)."""
        probs = {pat: w for pat, w in self.masses if w > 0.0}
        bell = np.asarray(self.bell)
        if bell.sum() > 0.0:
            block = LogicalBlock.from_array(bell / bell.sum())
        else:
            block = LogicalBlock()
        return PatternState(scheme, probs, block)


def accumulate_entry(
    branches: Iterable[AcceptedBranch],
    scheme: SchemeKind,
    mode_map: dict[str, object],
) -> TableEntry:
    """Classify accepted circuit branches into a summed TableEntry."""
    masses: dict[ExcitationPattern, float] = {}
    bell = np.zeros(4)
    residue = 0.0
    for cond, prob in branches:
        if prob <= 0.0:
            continue
        ps = project_from_fock(cond, scheme, mode_map)
        for pat, p in ps.probs.items():
            masses[pat] = masses.get(pat, 0.0) + p
        bell += ps.bell_masses()
        residue = max(residue, logical_coherence_residue(cond, scheme, mode_map))
    ordered = tuple(
        (pat, masses[pat]) for pat in scheme_patterns(scheme) if pat in masses
    )
    return TableEntry(ordered, tuple(float(b) for b in bell), residue)


ENC_OUT_MAP_DLCZ = {"left": "aL", "right": "aR"}
ENC_OUT_MAP_NEW = {"left": ("aLH", "aLV"), "right": ("aRH", "aRV")}
ENP_OUT_MAP = {"left": ("auH", "auV"), "right": ("buH", "buV")}
PME_OUT_MAP = {"left": ("xH", "xV"), "right": ("yH", "yV")}


def enc_entry(
    scheme: SchemeKind,
    alpha: tuple[ExcitationPattern, BellState | None],
    beta: tuple[ExcitationPattern, BellState | None],
    eta: float,
    first_level: bool = False,
) -> TableEntry:
    """Connection superoperator entry for one canonical pattern pair."""
    pat_a, bell_a = alpha
    pat_b, bell_b = beta
    left = canonical_pattern_fock(scheme, pat_a, bell_a, side="left")
    right = canonical_pattern_fock(scheme, pat_b, bell_b, side="right")
    if scheme is SchemeKind.DLCZ:
        branches = run_enc_dlcz(left, right, eta)
        return accumulate_entry(branches, scheme, ENC_OUT_MAP_DLCZ)
    branches = run_enc_new(left, right, eta, first_level)
    return accumulate_entry(branches, scheme, ENC_OUT_MAP_NEW)


def enp_entry(
    alpha: tuple[ExcitationPattern, BellState | None],
    beta: tuple[ExcitationPattern, BellState | None],
    eta: float,
    phase_variant: bool,
) -> TableEntry:
    """Purification superoperator entry for one canonical pattern pair."""
    pat_a, bell_a = alpha
    pat_b, bell_b = beta
    pair1 = canonical_new(pat_a, ("a1H", "a1V"), ("b1H", "b1V"), bell_a)
    pair2 = canonical_new(pat_b, ("a2H", "a2V"), ("b2H", "b2V"), bell_b)
    branches = run_enp(pair1, pair2, eta, phase_variant)
    return accumulate_entry(branches, SchemeKind.NEW, ENP_OUT_MAP)


def pme_entry(
    alpha: tuple[ExcitationPattern, BellState | None],
    beta: tuple[ExcitationPattern, BellState | None],
    eta: float,
) -> TableEntry:
    """Post-selection entry; inputs are DLCZ patterns, output is a
    polarization pair classified in the two-cell representation."""
    pat_a, bell_a = alpha
    pat_b, bell_b = beta
    pair1 = canonical_dlcz(pat_a, "x1", "y1", bell_a)
    pair2 = canonical_dlcz(pat_b, "x2", "y2", bell_b)
    branches = run_pme(pair1, pair2, eta)
    return accumulate_entry(branches, SchemeKind.NEW, PME_OUT_MAP)
