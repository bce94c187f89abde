"""Pattern-decomposed repeater-pair states.

The scalable recursion does not track full density matrices. A repeater
pair is summarized by probabilities over excitation patterns (how many
spin waves sit at each node, and how they are arranged over the node's
cells) plus a Bell-diagonal logical block for the pattern that carries
the qubit. Inter-pattern coherence is dropped by construction; within
the logical pattern only the Bell-basis diagonal is kept, and the
discarded off-diagonal magnitude is available as a diagnostic.

Pattern labels
--------------
For the single-rail DLCZ scheme a node holds 0, 1 or 2 excitations, so
a pair is one of P00, P10, P11, P20, P21, P22 (unordered node counts).
The logical qubit lives in P10.

For the two-cell scheme a node with two excitations is either "par"
(both in the same cell) or "perp" (one per cell), giving P00, P10, P11,
P20_par, P20_perp, P21_par, P21_perp and the doubly excited P22
combinations. The logical qubit lives in P11 (one excitation at each
node, in the H or V cell).

States with more than two excitations at a node appear only at second
order in the excitation probability; they are kept as an explicit
OVERFLOW bucket so that classification preserves trace exactly, and are
treated as absorbing failure mass by the connection tables.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .fock import FockDensityOperator, ModeLabel

WEIGHT_TOL = 1e-12


class SchemeKind(enum.Enum):
    """Repeater flavor: single-rail DLCZ or the two-cell logical-qubit scheme."""

    DLCZ = "dlcz"
    NEW = "new"


class BellState(enum.Enum):
    PHI_PLUS = "phi_plus"
    PHI_MINUS = "phi_minus"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"

    @property
    def index(self) -> int:
        return _BELL_ORDER.index(self)


_BELL_ORDER = (
    BellState.PHI_PLUS,
    BellState.PHI_MINUS,
    BellState.PSI_PLUS,
    BellState.PSI_MINUS,
)


class ExcitationPattern(enum.Enum):
    P00 = "P00"
    P10 = "P10"
    P11 = "P11"
    P20 = "P20"
    P21 = "P21"
    P22 = "P22"
    P20_PAR = "P20_par"
    P20_PERP = "P20_perp"
    P21_PAR = "P21_par"
    P21_PERP = "P21_perp"
    P22_PAR_PAR = "P22_par_par"
    P22_PAR_PERP = "P22_par_perp"
    P22_PERP_PERP = "P22_perp_perp"
    OVERFLOW = "overflow"


_DLCZ_PATTERNS = (
    ExcitationPattern.P00,
    ExcitationPattern.P10,
    ExcitationPattern.P11,
    ExcitationPattern.P20,
    ExcitationPattern.P21,
    ExcitationPattern.P22,
    ExcitationPattern.OVERFLOW,
)

_NEW_PATTERNS = (
    ExcitationPattern.P00,
    ExcitationPattern.P10,
    ExcitationPattern.P11,
    ExcitationPattern.P20_PAR,
    ExcitationPattern.P20_PERP,
    ExcitationPattern.P21_PAR,
    ExcitationPattern.P21_PERP,
    ExcitationPattern.P22_PAR_PAR,
    ExcitationPattern.P22_PAR_PERP,
    ExcitationPattern.P22_PERP_PERP,
    ExcitationPattern.OVERFLOW,
)


def scheme_patterns(scheme: SchemeKind) -> tuple[ExcitationPattern, ...]:
    """Pattern labels valid for the scheme, in canonical order."""
    return _DLCZ_PATTERNS if scheme is SchemeKind.DLCZ else _NEW_PATTERNS


def logical_pattern(scheme: SchemeKind) -> ExcitationPattern:
    """The pattern carrying the logical qubit: P10 (DLCZ) or P11 (two-cell)."""
    return (
        ExcitationPattern.P10 if scheme is SchemeKind.DLCZ else ExcitationPattern.P11
    )


_VACUUM_PATTERNS = {
    SchemeKind.DLCZ: (ExcitationPattern.P00,),
    SchemeKind.NEW: (ExcitationPattern.P00, ExcitationPattern.P10),
}


@dataclass(frozen=True)
class LogicalBlock:
    """Bell-diagonal weights (Phi+, Phi-, Psi+, Psi-), normalized to 1.

    For the single-rail DLCZ scheme the two entangled states
    (|10> +- |01>)/sqrt2 occupy the Psi+ and Psi- slots and the Phi
    slots stay zero.
    """

    w_phi_plus: float = 1.0
    w_phi_minus: float = 0.0
    w_psi_plus: float = 0.0
    w_psi_minus: float = 0.0

    def __post_init__(self) -> None:
        if min(self.as_array()) < -WEIGHT_TOL:
            raise ValueError("Bell weights must be non-negative")

    @classmethod
    def from_array(cls, w: Sequence[float]) -> "LogicalBlock":
        w = np.asarray(w, dtype=float)
        if w.shape != (4,):
            raise ValueError("expected four Bell weights")
        return cls(*map(float, w))

    @classmethod
    def pure(cls, bell: BellState) -> "LogicalBlock":
        w = [0.0, 0.0, 0.0, 0.0]
        w[bell.index] = 1.0
        return cls(*w)

    @classmethod
    def mixed(cls) -> "LogicalBlock":
        return cls(0.25, 0.25, 0.25, 0.25)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.w_phi_plus, self.w_phi_minus, self.w_psi_plus, self.w_psi_minus]
        )

    def weight(self, bell: BellState) -> float:
        return float(self.as_array()[bell.index])

    @property
    def total(self) -> float:
        return float(self.as_array().sum())

    def normalized(self) -> "LogicalBlock":
        t = self.total
        if t <= 0.0:
            raise ValueError("cannot normalize a zero block")
        return LogicalBlock.from_array(self.as_array() / t)


@dataclass(frozen=True)
class PatternState:
    """Probabilities over excitation patterns plus the logical Bell block.

    ``probs`` carries the full pattern mass including the logical
    pattern; ``logical`` holds the Bell-diagonal weights conditioned on
    being in the logical pattern (they sum to 1). Sub-normalized states
    are allowed; ``normalized`` reports whether the mass sums to 1.
    """

    scheme: SchemeKind
    probs: Mapping[ExcitationPattern, float]
    logical: LogicalBlock = LogicalBlock()

    def __post_init__(self) -> None:
        allowed = set(scheme_patterns(self.scheme))
        clean = {}
        for pat, p in self.probs.items():
            if pat not in allowed:
                raise ValueError(f"pattern {pat} not valid for scheme {self.scheme}")
            if p < -WEIGHT_TOL:
                raise ValueError(f"negative pattern probability: {pat} = {p}")
            if p != 0.0:
                clean[pat] = float(p)
        object.__setattr__(self, "probs", clean)
        block = self.logical.total
        if abs(block - 1.0) > 1e-9:
            raise ValueError(f"logical block weights sum to {block}, expected 1")

    @classmethod
    def from_pattern(
        cls,
        scheme: SchemeKind,
        pattern: ExcitationPattern,
        logical: LogicalBlock | None = None,
    ) -> "PatternState":
        return cls(scheme, {pattern: 1.0}, logical or LogicalBlock())

    def prob(self, pattern: ExcitationPattern) -> float:
        return self.probs.get(pattern, 0.0)

    @property
    def total(self) -> float:
        return float(sum(self.probs.values()))

    @property
    def normalized(self) -> bool:
        return abs(self.total - 1.0) <= WEIGHT_TOL

    def bell_masses(self) -> np.ndarray:
        """Absolute Bell masses: logical-pattern probability times weights."""
        return self.prob(logical_pattern(self.scheme)) * self.logical.as_array()


class PatternAggregate(NamedTuple):
    p_logic: float
    p_vac: float
    p_multi: float


def aggregate(state: PatternState) -> PatternAggregate:
    """Group pattern mass into (p_logic, p_vac, p_multi).

    DLCZ: logical is P10, vacuum is P00, everything else is multi.
    Two-cell scheme: logical is P11, vacuum is P00 + P10 (states with at
    most one excitation between both pairs of cells), rest is multi.
    """
    logical = logical_pattern(state.scheme)
    vacuum = _VACUUM_PATTERNS[state.scheme]
    p_logic = state.prob(logical)
    p_vac = sum(state.prob(p) for p in vacuum)
    p_multi = state.total - p_logic - p_vac
    return PatternAggregate(p_logic, p_vac, float(p_multi))


def fidelity(state: PatternState, target: BellState) -> float:
    """Full-state fidelity with a Bell target: p_logic times its weight.

    Vacuum and multi-excitation mass count as errors; see
    ``logical_fidelity`` for the post-selected figure.
    """
    if not state.normalized:
        raise ValueError("fidelity requires a normalized state")
    return aggregate(state).p_logic * state.logical.weight(target)


def logical_fidelity(state: PatternState, target: BellState) -> float:
    """Fidelity conditioned on the logical pattern (post-selected)."""
    return state.logical.weight(target)


def normalize(state: PatternState) -> PatternState:
    total = state.total
    if total <= 0.0:
        raise ValueError("cannot normalize a zero-trace pattern state")
    return PatternState(
        state.scheme,
        {p: v / total for p, v in state.probs.items()},
        state.logical,
    )


def apply_bell_channel(state: PatternState, channel: np.ndarray) -> PatternState:
    """Apply a stochastic 4x4 matrix to the Bell weights.

    ``channel[i, j]`` is the probability that Bell state j becomes Bell
    state i; columns must sum to 1.
    """
    channel = np.asarray(channel, dtype=float)
    if channel.shape != (4, 4):
        raise ValueError("Bell channel must be 4x4")
    if np.any(channel < -WEIGHT_TOL):
        raise ValueError("Bell channel entries must be non-negative")
    if not np.allclose(channel.sum(axis=0), 1.0, atol=1e-9):
        raise ValueError("Bell channel columns must sum to 1")
    w = channel @ state.logical.as_array()
    return PatternState(state.scheme, dict(state.probs), LogicalBlock.from_array(w))


# ----------------------------------------------------------------------
# classification of oracle states


def _node_signature_dlcz(n: int) -> int | None:
    return n if n <= 2 else None


_DLCZ_CLASS = {
    (0, 0): ExcitationPattern.P00,
    (0, 1): ExcitationPattern.P10,
    (1, 1): ExcitationPattern.P11,
    (0, 2): ExcitationPattern.P20,
    (1, 2): ExcitationPattern.P21,
    (2, 2): ExcitationPattern.P22,
}


def classify_dlcz(n_left: int, n_right: int) -> ExcitationPattern:
    """Pattern label from per-node excitation counts (single-rail)."""
    if n_left > 2 or n_right > 2:
        return ExcitationPattern.OVERFLOW
    return _DLCZ_CLASS[tuple(sorted((n_left, n_right)))]


def _cell_signature(n_h: int, n_v: int) -> str | None:
    total = n_h + n_v
    if total == 0:
        return "0"
    if total == 1:
        return "1"
    if total == 2:
        return "2perp" if n_h == 1 else "2par"
    return None


_NEW_CLASS = {
    ("0", "0"): ExcitationPattern.P00,
    ("0", "1"): ExcitationPattern.P10,
    ("1", "1"): ExcitationPattern.P11,
    ("0", "2par"): ExcitationPattern.P20_PAR,
    ("0", "2perp"): ExcitationPattern.P20_PERP,
    ("1", "2par"): ExcitationPattern.P21_PAR,
    ("1", "2perp"): ExcitationPattern.P21_PERP,
    ("2par", "2par"): ExcitationPattern.P22_PAR_PAR,
    ("2par", "2perp"): ExcitationPattern.P22_PAR_PERP,
    ("2perp", "2perp"): ExcitationPattern.P22_PERP_PERP,
}


def classify_new(left: tuple[int, int], right: tuple[int, int]) -> ExcitationPattern:
    """Pattern label from per-node (H, V) cell counts (two-cell scheme)."""
    sig_l = _cell_signature(*left)
    sig_r = _cell_signature(*right)
    if sig_l is None or sig_r is None:
        return ExcitationPattern.OVERFLOW
    return _NEW_CLASS[tuple(sorted((sig_l, sig_r)))]


def _bell_vectors_new() -> np.ndarray:
    # Rows: Phi+, Phi-, Psi+, Psi- over the basis (HH, HV, VH, VV).
    s = 1.0 / math.sqrt(2.0)
    return np.array(
        [
            [s, 0.0, 0.0, s],
            [s, 0.0, 0.0, -s],
            [0.0, s, s, 0.0],
            [0.0, s, -s, 0.0],
        ]
    )


def _logical_occupations_new(
    rho: FockDensityOperator,
    left: tuple[ModeLabel, ModeLabel],
    right: tuple[ModeLabel, ModeLabel],
) -> list[tuple[int, ...]]:
    # Order matches the (HH, HV, VH, VV) basis of _bell_vectors_new.
    occs = []
    for lcell in (left[0], left[1]):
        for rcell in (right[0], right[1]):
            occ = [0] * len(rho.modes)
            occ[rho.mode_index(lcell)] = 1
            occ[rho.mode_index(rcell)] = 1
            occs.append(tuple(occ))
    return occs


def _logical_occupations_dlcz(
    rho: FockDensityOperator, left: ModeLabel, right: ModeLabel
) -> list[tuple[int, ...]]:
    occs = []
    for mode in (left, right):
        occ = [0] * len(rho.modes)
        occ[rho.mode_index(mode)] = 1
        occs.append(tuple(occ))
    return occs


def _normalize_mode_map(
    scheme: SchemeKind, mode_map: Mapping[str, object]
) -> tuple:
    try:
        left = mode_map["left"]
        right = mode_map["right"]
    except KeyError as exc:
        raise ValueError("mode map must define 'left' and 'right'") from exc
    if scheme is SchemeKind.DLCZ:
        if not isinstance(left, str) or not isinstance(right, str):
            raise ValueError("DLCZ mode map entries must be single mode labels")
        return left, right
    if (
        not isinstance(left, (tuple, list))
        or not isinstance(right, (tuple, list))
        or len(left) != 2
        or len(right) != 2
    ):
        raise ValueError("two-cell mode map entries must be (H, V) mode pairs")
    return tuple(left), tuple(right)


def project_from_fock(
    rho: FockDensityOperator,
    scheme: SchemeKind,
    mode_map: Mapping[str, object],
) -> PatternState:
    """Classify an oracle state into a PatternState.

    Pattern probabilities are the traces of the pattern-subspace
    projections; the logical block is the Bell-basis diagonal of the
    logical subspace. Inter-pattern coherence is discarded by
    construction and the total trace is preserved exactly.

    ``mode_map`` assigns the memory modes: ``{"left": m, "right": m}``
    with single labels for DLCZ, or (H, V) label pairs per node for the
    two-cell scheme. The state register must contain exactly these
    modes.
    """
    left, right = _normalize_mode_map(scheme, mode_map)
    needed = (
        {left, right}
        if scheme is SchemeKind.DLCZ
        else {*left, *right}
    )
    if set(rho.modes) != needed:
        raise ValueError(
            f"state register {rho.modes} does not match mode map {sorted(needed)}"
        )

    probs: dict[ExcitationPattern, float] = {}
    if scheme is SchemeKind.DLCZ:
        i_l, i_r = rho.mode_index(left), rho.mode_index(right)
        for occ, p in rho.occupation_probabilities().items():
            pat = classify_dlcz(occ[i_l], occ[i_r])
            probs[pat] = probs.get(pat, 0.0) + p
        occs = _logical_occupations_dlcz(rho, left, right)
        block2 = rho.block(occs)
        s = 1.0 / math.sqrt(2.0)
        xi = np.array([[s, s], [s, -s]])  # rows: xi+, xi- over (|10>, |01>)
        bell = np.zeros(4)
        bell[BellState.PSI_PLUS.index] = float(np.real(xi[0] @ block2 @ xi[0]))
        bell[BellState.PSI_MINUS.index] = float(np.real(xi[1] @ block2 @ xi[1]))
    else:
        il_h, il_v = rho.mode_index(left[0]), rho.mode_index(left[1])
        ir_h, ir_v = rho.mode_index(right[0]), rho.mode_index(right[1])
        for occ, p in rho.occupation_probabilities().items():
            pat = classify_new(
                (occ[il_h], occ[il_v]), (occ[ir_h], occ[ir_v])
            )
            probs[pat] = probs.get(pat, 0.0) + p
        occs = _logical_occupations_new(rho, left, right)
        block4 = rho.block(occs)
        vecs = _bell_vectors_new()
        bell = np.real(np.einsum("ij,jk,ik->i", vecs.conj(), block4, vecs))

    logical = logical_pattern(scheme)
    mass = float(bell.sum())
    if mass > 0.0:
        block = LogicalBlock.from_array(np.maximum(bell, 0.0) / mass)
        # keep the exact subspace trace as the pattern probability
        probs[logical] = probs.get(logical, 0.0)
    else:
        block = LogicalBlock()
    return PatternState(scheme, probs, block)


def logical_coherence_residue(
    rho: FockDensityOperator,
    scheme: SchemeKind,
    mode_map: Mapping[str, object],
) -> float:
    """Frobenius norm of the non-Bell-diagonal part of the logical block.

    The pattern decomposition keeps only the Bell-basis diagonal; this
    reports the magnitude of what was discarded.
    """
    left, right = _normalize_mode_map(scheme, mode_map)
    if scheme is SchemeKind.DLCZ:
        occs = _logical_occupations_dlcz(rho, left, right)
        block = rho.block(occs)
        s = 1.0 / math.sqrt(2.0)
        vecs = np.array([[s, s], [s, -s]], dtype=complex)
    else:
        occs = _logical_occupations_new(rho, left, right)
        block = rho.block(occs)
        vecs = _bell_vectors_new().astype(complex)
    in_bell = vecs.conj() @ block @ vecs.T
    off = in_bell - np.diag(np.diag(in_bell))
    return float(np.linalg.norm(off))


# ----------------------------------------------------------------------
# serialization


def to_text(state: PatternState) -> str:
    """Human-readable structured-text record of a PatternState."""
    lines = [f"scheme: {state.scheme.value}"]
    for pat in scheme_patterns(state.scheme):
        p = state.prob(pat)
        if p != 0.0 or pat is logical_pattern(state.scheme):
            lines.append(f"{pat.value}: {p!r}")
    w = state.logical.as_array()
    lines.append(
        "logical: " + " ".join(repr(float(x)) for x in w)
    )
    return "\n".join(lines) + "\n"


def from_text(text: str) -> PatternState:
    """Parse the record produced by ``to_text``."""
    scheme: SchemeKind | None = None
    probs: dict[ExcitationPattern, float] = {}
    logical = LogicalBlock()
    by_value = {p.value: p for p in ExcitationPattern}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "scheme":
            scheme = SchemeKind(value)
        elif key == "logical":
            logical = LogicalBlock.from_array([float(x) for x in value.split()])
        elif key in by_value:
            probs[by_value[key]] = float(value)
        else:
            raise ValueError(f"unrecognized field: {key}")
    if scheme is None:
        raise ValueError("missing scheme field")
    return PatternState(scheme, probs, logical)
