"""Exact few-mode bosonic states under linear optics, loss, and counting.

This module is the numerical ground truth for the protocol maps: every
truth table and every superoperator coefficient used by the scalable
pattern recursion is checked against brute-force circuits built from the
primitives here.

States live in a truncated Fock space over a register of named modes.
Internally a state is an ensemble of unnormalized pure kets,
``rho = sum_i |k_i><k_i|``. Linear optics maps kets to kets, loss maps a
ket to one ket per number of photons lost, and photon counting splits a
ket by detection outcome, so every operation is exact up to floating
point. A dense Hermitian matrix over the occupied basis is available for
invariant checks and diagnostics.

Conventions
-----------
* Mode unitaries act on creation operators as ``S_k -> sum_j u[j, k] S_j``.
* The polarizing beamsplitter transmits H and reflects V.
* Sub-normalized states are first class: the trace after a projective
  step is the probability of that outcome. Normalization is an explicit
  caller action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

ModeLabel = str

HERMITICITY_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-12
UNITARITY_TOL = 1e-12

# Amplitudes below this absolute size are interference residue and are
# dropped; they contribute < 1e-28 to any probability.
_AMP_PRUNE = 1e-14

#: 45 degree rotation between the two cells of a node, taken verbatim as
#: S_H -> (S_H + S_V)/sqrt2, S_V -> (S_H - S_V)/sqrt2. Self-inverse.
ROTATE_45 = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)

#: Balanced beamsplitter used for single-rail interference, same
#: convention as the 45 degree rotation.
BS_5050 = ROTATE_45

#: Dual-rail bit flip (swap the H and V modes).
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])

#: Dual-rail phase flip (sign on the V mode).
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def rotation(theta: float) -> np.ndarray:
    """Real two-mode rotation [[cos, -sin], [sin, cos]] on creation ops."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class FockBasisVector:
    """Occupation-number basis vector over a mode register.

    Attributes
    ----------
    occupations : tuple of (mode, count) pairs
        Photon number per mode, in register order.
    cutoff : int
        Maximum total excitation number of the register.
    """

    occupations: tuple[tuple[ModeLabel, int], ...]
    cutoff: int

    def __post_init__(self) -> None:
        if any(n < 0 for _, n in self.occupations):
            raise ValueError("occupations must be non-negative")
        if self.total > self.cutoff:
            raise ValueError(
                f"total occupation {self.total} exceeds cutoff {self.cutoff}"
            )

    @property
    def total(self) -> int:
        return sum(n for _, n in self.occupations)

    def count(self, mode: ModeLabel) -> int:
        for m, n in self.occupations:
            if m == mode:
                return n
        raise KeyError(mode)


@dataclass(frozen=True)
class DetectionPattern:
    """Observed photon counts on a set of measured modes."""

    counts: tuple[tuple[ModeLabel, int], ...]

    @classmethod
    def from_counts(cls, counts: Mapping[ModeLabel, int]) -> "DetectionPattern":
        return cls(tuple(sorted(counts.items())))

    @property
    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.counts)

    @property
    def total(self) -> int:
        return sum(n for _, n in self.counts)

    def count(self, mode: ModeLabel) -> int:
        for m, n in self.counts:
            if m == mode:
                return n
        raise KeyError(mode)

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self.counts)


_Ket = dict[tuple[int, ...], complex]


class FockDensityOperator:
    """Truncated-Fock-space mixed state over labeled bosonic modes.

    The state is stored as an ensemble of unnormalized pure kets whose
    outer products sum to the density operator. Each ket is a sparse map
    from occupation tuples (aligned with ``modes``) to complex
    amplitudes; ensemble weights are absorbed into the amplitudes.
    Operations never form the dense matrix; ``basis`` and ``matrix``
    build it on demand for checks and inspection.
    """

    __slots__ = ("_modes", "_index", "_kets", "_cutoff")

    def __init__(
        self,
        modes: Sequence[ModeLabel],
        kets: Iterable[_Ket],
        cutoff: int = 4,
    ) -> None:
        self._modes = tuple(modes)
        if len(set(self._modes)) != len(self._modes):
            raise ValueError("duplicate mode labels")
        self._index = {m: i for i, m in enumerate(self._modes)}
        self._cutoff = int(cutoff)
        clean: list[_Ket] = []
        nmodes = len(self._modes)
        for ket in kets:
            pruned: _Ket = {}
            for occ, amp in ket.items():
                if len(occ) != nmodes:
                    raise ValueError("occupation tuple does not match register")
                if any(n < 0 for n in occ):
                    raise ValueError("occupations must be non-negative")
                if sum(occ) > self._cutoff:
                    raise ValueError("occupation exceeds cutoff")
                if abs(amp) > _AMP_PRUNE:
                    pruned[occ] = complex(amp)
            if pruned:
                clean.append(pruned)
        self._kets = clean

    # ------------------------------------------------------------------
    # constructors

    @classmethod
    def vacuum(cls, modes: Sequence[ModeLabel], cutoff: int = 4) -> "FockDensityOperator":
        return cls(modes, [{(0,) * len(tuple(modes)): 1.0 + 0.0j}], cutoff)

    @classmethod
    def from_ket(
        cls,
        modes: Sequence[ModeLabel],
        amplitudes: Mapping[tuple[int, ...], complex],
        cutoff: int = 4,
    ) -> "FockDensityOperator":
        """Pure state from a sparse amplitude map over occupation tuples."""
        return cls(modes, [dict(amplitudes)], cutoff)

    @classmethod
    def from_occupations(
        cls,
        modes: Sequence[ModeLabel],
        occupations: Mapping[ModeLabel, int],
        cutoff: int = 4,
    ) -> "FockDensityOperator":
        """Basis state with the given photon numbers (zero elsewhere)."""
        modes = tuple(modes)
        unknown = set(occupations) - set(modes)
        if unknown:
            raise ValueError(f"unknown mode labels: {sorted(unknown)}")
        occ = tuple(int(occupations.get(m, 0)) for m in modes)
        return cls(modes, [{occ: 1.0 + 0.0j}], cutoff)

    @classmethod
    def mixture(
        cls, parts: Iterable[tuple[float, "FockDensityOperator"]]
    ) -> "FockDensityOperator":
        """Weighted mixture sum_i w_i rho_i over a common register."""
        parts = list(parts)
        if not parts:
            raise ValueError("empty mixture")
        modes = parts[0][1]._modes
        cutoff = max(s._cutoff for _, s in parts)
        kets: list[_Ket] = []
        for w, state in parts:
            if w < 0:
                raise ValueError("mixture weights must be non-negative")
            if state._modes != modes:
                raise ValueError("mixture components use different registers")
            root = math.sqrt(w)
            for ket in state._kets:
                kets.append({occ: root * amp for occ, amp in ket.items()})
        return cls(modes, kets, cutoff)

    # ------------------------------------------------------------------
    # basic properties

    @property
    def modes(self) -> tuple[ModeLabel, ...]:
        return self._modes

    @property
    def cutoff(self) -> int:
        return self._cutoff

    @property
    def trace(self) -> float:
        return float(
            sum(abs(amp) ** 2 for ket in self._kets for amp in ket.values())
        )

    @property
    def num_kets(self) -> int:
        return len(self._kets)

    def terms(self) -> Iterator[tuple[int, tuple[int, ...], complex]]:
        """Yield (ket index, occupation tuple, amplitude) over the ensemble."""
        for i, ket in enumerate(self._kets):
            for occ, amp in ket.items():
                yield i, occ, amp

    def mode_index(self, mode: ModeLabel) -> int:
        try:
            return self._index[mode]
        except KeyError:
            raise ValueError(f"unknown mode label: {mode!r}") from None

    # ------------------------------------------------------------------
    # dense facade

    def occupied(self) -> list[tuple[int, ...]]:
        """Sorted occupation tuples with nonzero amplitude somewhere."""
        occs = {occ for ket in self._kets for occ in ket}
        return sorted(occs)

    @property
    def basis(self) -> tuple[FockBasisVector, ...]:
        return tuple(
            FockBasisVector(tuple(zip(self._modes, occ)), self._cutoff)
            for occ in self.occupied()
        )

    @property
    def matrix(self) -> np.ndarray:
        """Dense Hermitian matrix over ``basis`` (order matches)."""
        return self.block(self.occupied())

    def block(self, occupations: Sequence[tuple[int, ...]]) -> np.ndarray:
        """Dense matrix block over the given occupation tuples."""
        occs = list(occupations)
        pos = {occ: i for i, occ in enumerate(occs)}
        out = np.zeros((len(occs), len(occs)), dtype=complex)
        for ket in self._kets:
            vec = np.zeros(len(occs), dtype=complex)
            hit = False
            for occ, amp in ket.items():
                i = pos.get(occ)
                if i is not None:
                    vec[i] = amp
                    hit = True
            if hit:
                out += np.outer(vec, vec.conj())
        return out

    def occupation_probabilities(self) -> dict[tuple[int, ...], float]:
        """Born-rule probabilities of each occupation tuple (diagonal)."""
        probs: dict[tuple[int, ...], float] = {}
        for ket in self._kets:
            for occ, amp in ket.items():
                probs[occ] = probs.get(occ, 0.0) + abs(amp) ** 2
        return probs

    def expected_total_photons(self) -> float:
        """Expectation of the total photon number operator."""
        return float(
            sum(abs(amp) ** 2 * sum(occ) for ket in self._kets for occ, amp in ket.items())
        )

    # ------------------------------------------------------------------
    # scaling

    def scaled(self, factor: float) -> "FockDensityOperator":
        """Return ``factor * rho`` (factor must be non-negative)."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        root = math.sqrt(factor)
        return FockDensityOperator(
            self._modes,
            [{occ: root * amp for occ, amp in ket.items()} for ket in self._kets],
            self._cutoff,
        )

    def normalized(self) -> "FockDensityOperator":
        tr = self.trace
        if tr <= 0.0:
            raise ValueError("cannot normalize a zero-trace state")
        return self.scaled(1.0 / tr)


def tensor(a: FockDensityOperator, b: FockDensityOperator) -> "FockDensityOperator":
    """Tensor product of two states on disjoint registers."""
    if set(a.modes) & set(b.modes):
        raise ValueError("registers overlap")
    kets: list[_Ket] = []
    for ka in a._kets:
        for kb in b._kets:
            kets.append(
                {
                    occa + occb: ampa * ampb
                    for occa, ampa in ka.items()
                    for occb, ampb in kb.items()
                }
            )
    return FockDensityOperator(a.modes + b.modes, kets, a.cutoff + b.cutoff)


# ----------------------------------------------------------------------
# linear optics


def _expand_monomial(
    sub: tuple[int, ...], u: np.ndarray
) -> list[tuple[tuple[int, ...], complex]]:
    """Image of a creation-operator monomial under a mode unitary.

    For input occupations ``sub`` on the transformed modes, returns the
    output occupations and amplitude factors of
    prod_k (sum_j u[j,k] S_j)^{n_k} |0>, including the sqrt(n!) basis
    normalization on both sides.
    """
    k = len(sub)
    poly: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0.0j}
    for slot, n in enumerate(sub):
        col = u[:, slot]
        for _ in range(n):
            nxt: dict[tuple[int, ...], complex] = {}
            for mono, c in poly.items():
                for j in range(k):
                    cj = col[j]
                    if cj == 0:
                        continue
                    lifted = list(mono)
                    lifted[j] += 1
                    key = tuple(lifted)
                    nxt[key] = nxt.get(key, 0.0) + c * cj
            poly = nxt
    norm_in = math.sqrt(math.prod(math.factorial(n) for n in sub))
    out = []
    for mono, c in poly.items():
        if abs(c) <= _AMP_PRUNE:
            continue
        norm_out = math.sqrt(math.prod(math.factorial(m) for m in mono))
        out.append((mono, c * norm_out / norm_in))
    return out


def apply_mode_unitary(
    state: FockDensityOperator,
    modes: Sequence[ModeLabel],
    u: np.ndarray,
) -> FockDensityOperator:
    """Apply a linear-optics unitary to a subset of modes.

    Creation operators transform as ``S_k -> sum_j u[j, k] S_j`` where j
    and k index ``modes``. Photon number and trace are preserved.

    Parameters
    ----------
    state : FockDensityOperator
    modes : sequence of mode labels, distinct and present in the state
    u : complex unitary matrix of shape (len(modes), len(modes))
    """
    modes = tuple(modes)
    if len(set(modes)) != len(modes):
        raise ValueError("transformed modes must be distinct")
    u = np.asarray(u, dtype=complex)
    k = len(modes)
    if u.shape != (k, k):
        raise ValueError(f"unitary shape {u.shape} does not match {k} modes")
    if not np.allclose(u.conj().T @ u, np.eye(k), atol=UNITARITY_TOL):
        raise ValueError("matrix is not unitary")
    idx = [state.mode_index(m) for m in modes]
    memo: dict[tuple[int, ...], list[tuple[tuple[int, ...], complex]]] = {}
    new_kets: list[_Ket] = []
    for ket in state._kets:
        out: _Ket = {}
        for occ, amp in ket.items():
            sub = tuple(occ[i] for i in idx)
            images = memo.get(sub)
            if images is None:
                images = _expand_monomial(sub, u)
                memo[sub] = images
            for mono, coeff in images:
                new_occ = list(occ)
                for pos, i in enumerate(idx):
                    new_occ[i] = mono[pos]
                key = tuple(new_occ)
                out[key] = out.get(key, 0.0) + amp * coeff
        new_kets.append(out)
    return FockDensityOperator(state.modes, new_kets, state.cutoff)


def relabel_modes(
    state: FockDensityOperator, mapping: Mapping[ModeLabel, ModeLabel]
) -> FockDensityOperator:
    """Rename modes without touching amplitudes."""
    new_modes = tuple(mapping.get(m, m) for m in state.modes)
    return FockDensityOperator(new_modes, state._kets, state.cutoff)


def apply_pbs(
    state: FockDensityOperator,
    in_a: tuple[ModeLabel, ModeLabel],
    in_b: tuple[ModeLabel, ModeLabel],
    out_1: tuple[ModeLabel, ModeLabel],
    out_2: tuple[ModeLabel, ModeLabel],
) -> FockDensityOperator:
    """Polarizing beamsplitter: H transmits, V reflects.

    Each argument is an (H, V) mode pair. Input ``in_a`` transmits to
    ``out_1`` and reflects to ``out_2``; input ``in_b`` transmits to
    ``out_2`` and reflects to ``out_1``. In the H/V basis this is pure
    routing (no amplitude mixing), so it is implemented as a relabeling:

        in_a H -> out_1 H,  in_a V -> out_2 V,
        in_b H -> out_2 H,  in_b V -> out_1 V.
    """
    a_h, a_v = in_a
    b_h, b_v = in_b
    o1_h, o1_v = out_1
    o2_h, o2_v = out_2
    ins = (a_h, a_v, b_h, b_v)
    outs = (o1_h, o1_v, o2_h, o2_v)
    if len(set(ins)) != 4 or len(set(outs)) != 4:
        raise ValueError("mode pairs overlap")
    for m in ins:
        state.mode_index(m)
    stay = set(state.modes) - set(ins)
    clash = stay & set(outs)
    if clash:
        raise ValueError(f"output labels collide with existing modes: {sorted(clash)}")
    return relabel_modes(
        state, {a_h: o1_h, a_v: o2_v, b_h: o2_h, b_v: o1_v}
    )


# ----------------------------------------------------------------------
# loss and measurement


def apply_loss(
    state: FockDensityOperator, mode: ModeLabel, eta: float
) -> FockDensityOperator:
    """Bosonic loss channel of transmissivity eta on one mode.

    Equivalent to a beamsplitter of transmissivity eta to a fresh
    environment mode followed by tracing the environment out. Each pure
    ket branches into one ket per number of photons lost, which keeps
    the ensemble exactly pure per branch.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    i = state.mode_index(mode)
    new_kets: list[_Ket] = []
    for ket in state._kets:
        nmax = max(occ[i] for occ in ket)
        for lost in range(nmax + 1):
            branch: _Ket = {}
            for occ, amp in ket.items():
                n = occ[i]
                if n < lost:
                    continue
                w = math.comb(n, lost) * eta ** (n - lost) * (1.0 - eta) ** lost
                if w == 0.0:
                    continue
                kept = occ[:i] + (n - lost,) + occ[i + 1 :]
                branch[kept] = branch.get(kept, 0.0) + amp * math.sqrt(w)
            if branch:
                new_kets.append(branch)
    return FockDensityOperator(state.modes, new_kets, state.cutoff)


def _strip_modes(
    state: FockDensityOperator, idx: Sequence[int], filtered: Iterable[_Ket]
) -> tuple[tuple[ModeLabel, ...], list[_Ket]]:
    drop = set(idx)
    keep = [i for i in range(len(state.modes)) if i not in drop]
    new_modes = tuple(state.modes[i] for i in keep)
    new_kets = []
    for ket in filtered:
        if ket:
            new_kets.append(
                {tuple(occ[i] for i in keep): amp for occ, amp in ket.items()}
            )
    return new_modes, new_kets


def measure_and_postselect(
    state: FockDensityOperator,
    measured_modes: Sequence[ModeLabel],
    pattern: DetectionPattern,
) -> tuple[FockDensityOperator, float]:
    """Project onto a photon-count pattern and trace the counters out.

    Returns the unnormalized conditional state on the remaining modes
    together with its trace, which is the probability of the pattern.
    Probabilities over all patterns sum to the input trace.
    """
    measured = tuple(measured_modes)
    if set(pattern.modes) != set(measured):
        raise ValueError("pattern must be defined exactly on the measured modes")
    idx = [state.mode_index(m) for m in measured]
    want = tuple(pattern.count(m) for m in measured)
    filtered = []
    for ket in state._kets:
        sub = {
            occ: amp
            for occ, amp in ket.items()
            if tuple(occ[i] for i in idx) == want
        }
        filtered.append(sub)
    new_modes, new_kets = _strip_modes(state, idx, filtered)
    conditional = FockDensityOperator(new_modes, new_kets, state.cutoff)
    return conditional, conditional.trace


def measure_modes(
    state: FockDensityOperator, measured_modes: Sequence[ModeLabel]
) -> dict[DetectionPattern, tuple[FockDensityOperator, float]]:
    """Exhaustive photon counting on the given modes.

    Returns a map from every detection pattern with nonzero probability
    to its unnormalized conditional state (counters removed) and
    probability. Probabilities sum to the input trace.
    """
    measured = tuple(measured_modes)
    idx = [state.mode_index(m) for m in measured]
    grouped: dict[tuple[int, ...], list[_Ket]] = {}
    for ket in state._kets:
        per_outcome: dict[tuple[int, ...], _Ket] = {}
        for occ, amp in ket.items():
            key = tuple(occ[i] for i in idx)
            per_outcome.setdefault(key, {})[occ] = amp
        for key, sub in per_outcome.items():
            grouped.setdefault(key, []).append(sub)
    out: dict[DetectionPattern, tuple[FockDensityOperator, float]] = {}
    for key, kets in grouped.items():
        new_modes, new_kets = _strip_modes(state, idx, kets)
        cond = FockDensityOperator(new_modes, new_kets, state.cutoff)
        tr = cond.trace
        if tr <= 0.0:
            continue
        pattern = DetectionPattern.from_counts(dict(zip(measured, key)))
        out[pattern] = (cond, tr)
    return out


def project_total_photons(
    state: FockDensityOperator, modes: Sequence[ModeLabel], total: int
) -> FockDensityOperator:
    """Coherent projection onto a total photon number over ``modes``.

    Unlike measurement this keeps the projected modes and all coherence
    among terms with the required total, as in post-selection where the
    surviving photons carry the output qubit.
    """
    idx = [state.mode_index(m) for m in modes]
    new_kets = []
    for ket in state._kets:
        sub = {
            occ: amp
            for occ, amp in ket.items()
            if sum(occ[i] for i in idx) == total
        }
        if sub:
            new_kets.append(sub)
    return FockDensityOperator(state.modes, new_kets, state.cutoff)


# ----------------------------------------------------------------------
# circuit driver


@dataclass(frozen=True)
class UnitaryStep:
    modes: tuple[ModeLabel, ...]
    u: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class LossStep:
    mode: ModeLabel
    eta: float


@dataclass(frozen=True)
class PBSStep:
    in_a: tuple[ModeLabel, ModeLabel]
    in_b: tuple[ModeLabel, ModeLabel]
    out_1: tuple[ModeLabel, ModeLabel]
    out_2: tuple[ModeLabel, ModeLabel]


@dataclass(frozen=True)
class MeasureStep:
    modes: tuple[ModeLabel, ...]


CircuitStep = UnitaryStep | LossStep | PBSStep | MeasureStep


def run_circuit(
    initial: FockDensityOperator, steps: Sequence[CircuitStep]
) -> dict[DetectionPattern, tuple[FockDensityOperator, float]]:
    """Run a circuit and enumerate all detection outcomes.

    Steps apply in order; at most one MeasureStep is allowed and it must
    come last. Without a measurement the result maps the empty pattern
    to the evolved state and its trace.
    """
    state = initial
    for pos, step in enumerate(steps):
        if isinstance(step, MeasureStep):
            if pos != len(steps) - 1:
                raise ValueError("measurement must be the final step")
            return measure_modes(state, step.modes)
        if isinstance(step, UnitaryStep):
            state = apply_mode_unitary(state, step.modes, step.u)
        elif isinstance(step, LossStep):
            state = apply_loss(state, step.mode, step.eta)
        elif isinstance(step, PBSStep):
            state = apply_pbs(state, step.in_a, step.in_b, step.out_1, step.out_2)
        else:
            raise ValueError(f"unknown circuit step: {step!r}")
    return {DetectionPattern(()): (state, state.trace)}


# ----------------------------------------------------------------------
# invariant checks


def verify_invariants(state: FockDensityOperator) -> None:
    """Raise AssertionError if density-operator invariants fail.

    Checks Hermiticity (1e-12), positive semidefiniteness (smallest
    eigenvalue >= -1e-10) and trace <= 1 + 1e-12 on the dense matrix.
    """
    m = state.matrix
    if m.size:
        herm = np.max(np.abs(m - m.conj().T))
        assert herm <= HERMITICITY_TOL, f"hermiticity violated by {herm:.3e}"
        lo = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2.0)))
        assert lo >= -PSD_TOL, f"negative eigenvalue {lo:.3e}"
    assert state.trace <= 1.0 + TRACE_TOL, f"trace {state.trace} exceeds 1"
