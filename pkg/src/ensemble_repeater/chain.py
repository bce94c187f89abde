"""Repeater-chain performance: nesting recursion, times, and optimization.

A chain over final distance L with station half-spacing L0 consists of
L/(2*L0) elementary segments, so there are n = log2(L/L0) - 1 connection
levels.  Entanglement generation and every connection/purification step
are heralded; average waiting times follow the standard recursion
t_{m+1} = 1.5 * t_m / P_m, where P_m is the step's success probability
on the simulated pattern state and the factor 1.5 is the waiting-time
overhead for two pairs to be ready simultaneously.  A Monte-Carlo
waiting mode replaces the 1.5 recursion by direct sampling of geometric
attempt counts and maxima of independent sub-times, which matters for
deep chains where the constant-factor approximation drifts.

The single-rail protocol ends with the post-selected mapping of two
parallel full-length chains onto one polarization pair; the two-cell
protocol carries polarization pairs throughout.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .noise import NoiseParams, dark_count_error, misalignment_channel
from .patterns import (
    BellState,
    PatternAggregate,
    PatternState,
    SchemeKind,
    aggregate,
    apply_bell_channel,
    fidelity,
    logical_fidelity,
    normalize,
)
from .protocols import EnpKind, enc, eng, enp, postselect_pme

TWO_PAIR_OVERHEAD = 1.5

# Number of detection windows whose dark counts can fake a herald in one
# connection or purification step (two accepted detectors per step).
_DETECTIONS_PER_STEP = 2


@dataclass(frozen=True)
class RepeaterConfig:
    """Chain geometry, source strength, and imperfection parameters.

    ``L`` must be a power-of-two multiple of ``L0``; elementary pairs
    span ``2*L0`` so the chain has ``log2(L/L0) - 1`` connection levels.
    ``enp_schedule`` lists (after-level, kind) purification insertions.
    """

    scheme: SchemeKind
    L: float
    L0: float
    p_c: float
    noise: NoiseParams = field(default_factory=NoiseParams)
    L_att: float = 20.0
    c_fiber: float = 2.0e5
    enp_schedule: Tuple[Tuple[int, EnpKind], ...] = ()

    def __post_init__(self) -> None:
        if self.L0 <= 0.0 or self.L <= 0.0:
            raise ValueError("L and L0 must be positive")
        if not 0.0 < self.p_c < 1.0:
            raise ValueError("p_c must lie in (0, 1)")
        if self.L_att <= 0.0 or self.c_fiber <= 0.0:
            raise ValueError("L_att and c_fiber must be positive")
        ratio = self.L / self.L0
        k = round(math.log2(ratio))
        if abs(ratio - 2.0**k) > 1e-9 * ratio or k < 1:
            raise ValueError("L/L0 must be a power of 2 (at least 2)")
        if self.scheme is SchemeKind.NEW and k < 2:
            raise ValueError("two-cell chains need at least one connection level")
        levels = self.num_levels
        schedule = tuple((int(m), EnpKind(kind)) for m, kind in self.enp_schedule)
        for m, _ in schedule:
            if not 1 <= m <= levels:
                raise ValueError(f"purification level {m} outside 1..{levels}")
        object.__setattr__(self, "enp_schedule", schedule)

    @property
    def num_levels(self) -> int:
        """Number of connection levels, log2(L/L0) - 1."""
        return round(math.log2(self.L / self.L0)) - 1


@dataclass(frozen=True)
class LevelRecord:
    """State and timing snapshot after one stage of the chain."""

    level: int
    stage: str  # "eng", "enc", "enp", "pme"
    p_logic: float
    p_vac: float
    p_multi: float
    bell: Tuple[float, float, float, float]
    fidelity: float
    logical_fidelity: float
    success_prob: float
    t_avg: float


@dataclass(frozen=True)
class RunResult:
    """Full chain simulation output: per-stage records plus the final pair."""

    config: RepeaterConfig
    per_level: Tuple[LevelRecord, ...]
    final: Tuple[float, float]  # (t_avg seconds, fidelity)

    @property
    def t_avg(self) -> float:
        return self.final[0]

    @property
    def fidelity(self) -> float:
        return self.final[1]

    @property
    def final_logical_fidelity(self) -> float:
        return self.per_level[-1].logical_fidelity


def elementary_time(
    p_c: float, eta: float, L0: float, L_att: float, c_fiber: float
) -> float:
    """Average time to herald one elementary pair, (L0/c) e^{L0/L_att} / (p_c eta)."""
    if min(p_c, eta, L0, L_att, c_fiber) <= 0.0:
        raise ValueError("all arguments must be positive")
    return (L0 / c_fiber) * math.exp(L0 / L_att) / (p_c * eta)


def enc_success_estimate(eta: float) -> float:
    """Stable-regime connection success probability eta^2(3-2eta)/(2(2-eta)^4)."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return eta**2 * (3.0 - 2.0 * eta) / (2.0 * (2.0 - eta) ** 4)


def scaling_exponent(eta: float) -> float:
    """Polynomial time exponent 1 + log2(1.5) + log2(1/p_enc-stable)."""
    return 1.0 + math.log2(TWO_PAIR_OVERHEAD) + math.log2(
        2.0 * (2.0 - eta) ** 4 / (eta**2 * (3.0 - 2.0 * eta))
    )


def empirical_time(config: RepeaterConfig) -> float:
    """Closed-form time estimate t0 * (L/L0)^(alpha - 1).

    The exponent collapses the per-level overhead 1.5/P at the stable
    connection success probability; deviations from the simulated chain
    come from the first connection level and the constant 1.5.
    """
    eta = config.noise.eta
    t0 = elementary_time(config.p_c, eta, config.L0, config.L_att, config.c_fiber)
    exponent = math.log2(
        TWO_PAIR_OVERHEAD * 2.0 * (2.0 - eta) ** 4 / (eta**2 * (3.0 - 2.0 * eta))
    )
    return t0 * (config.L / config.L0) ** exponent


def _step_channel(noise: NoiseParams) -> Optional[np.ndarray]:
    """Bell channel applied after each heralded step, or None if trivial."""
    p_extra = _DETECTIONS_PER_STEP * dark_count_error(noise.p_dark, noise.eta_s)
    p = noise.p_misalign + min(p_extra, 1.0)
    if p <= 0.0:
        return None
    return misalignment_channel(min(p, 1.0))


def _target_bell(scheme: SchemeKind, connected: bool) -> BellState:
    """Target Bell state of a chain stage.

    Single-rail connections preserve the odd-parity target and the
    final mapping delivers the odd-parity polarization pair; two-cell
    connections map a pair of odd-parity inputs to the even-parity Phi+.
    The argument is the chain's scheme, not the state's.
    """
    if scheme is SchemeKind.DLCZ:
        return BellState.PSI_PLUS
    return BellState.PHI_PLUS if connected else BellState.PSI_PLUS


def _record(
    level: int,
    stage: str,
    state: PatternState,
    target: BellState,
    success: float,
    t: float,
) -> LevelRecord:
    agg = aggregate(state)
    return LevelRecord(
        level=level,
        stage=stage,
        p_logic=agg.p_logic,
        p_vac=agg.p_vac,
        p_multi=agg.p_multi,
        bell=tuple(float(w) for w in state.logical.as_array()),
        fidelity=fidelity(state, target),
        logical_fidelity=logical_fidelity(state, target),
        success_prob=success,
        t_avg=t,
    )


class _McTimes:
    """Empirical waiting-time samples propagated through the chain."""

    def __init__(self, rng: np.random.Generator, n_samples: int) -> None:
        self.rng = rng
        self.n = n_samples

    def elementary(self, config: RepeaterConfig) -> np.ndarray:
        eta = config.noise.eta
        p_att = config.p_c * eta * math.exp(-config.L0 / config.L_att)
        cycle = config.L0 / config.c_fiber
        draws = 2 if config.scheme is SchemeKind.NEW else 1
        t = self.rng.geometric(min(p_att, 1.0), size=(draws, self.n)) * cycle
        return t.max(axis=0)

    def combine(self, times: np.ndarray, success: float) -> np.ndarray:
        """Times for one heralded step consuming two sub-pairs per attempt."""
        attempts = self.rng.geometric(min(success, 1.0), size=self.n)
        total = int(attempts.sum())
        a = self.rng.choice(times, size=total)
        b = self.rng.choice(times, size=total)
        pair = np.maximum(a, b)
        starts = np.concatenate(([0], np.cumsum(attempts)[:-1]))
        return np.add.reduceat(pair, starts)


def simulate_chain(
    config: RepeaterConfig,
    waiting: str = "deterministic",
    n_samples: int = 16384,
    seed: int = 0,
) -> RunResult:
    """Simulate the full chain and return per-stage records.

    ``waiting`` selects the time model: "deterministic" applies the
    1.5/P recursion, "mc" samples geometric attempt counts and maxima of
    independent sub-pair times (seeded, vectorized).  The quantum state
    evolution is identical in both modes.
    """
    if waiting not in ("deterministic", "mc"):
        raise ValueError("waiting must be 'deterministic' or 'mc'")
    mc = _McTimes(np.random.default_rng(seed), n_samples) if waiting == "mc" else None

    scheme = config.scheme
    noise = config.noise
    eta = noise.eta
    channel = _step_channel(noise)
    schedule: dict[int, list[EnpKind]] = {}
    for m, kind in config.enp_schedule:
        schedule.setdefault(m, []).append(kind)

    state = eng(scheme, config.p_c, noise, config.L0)
    t0 = elementary_time(config.p_c, eta, config.L0, config.L_att, config.c_fiber)
    if scheme is SchemeKind.NEW:
        t = TWO_PAIR_OVERHEAD * t0
    else:
        t = t0
    times = mc.elementary(config) if mc else None
    if mc:
        t = float(times.mean())

    records = [_record(0, "eng", state, _target_bell(scheme, False), 1.0, t)]

    def heralded(step_fn, current, current_t, current_times, stage, level):
        outcome = step_fn(current)
        if outcome.success_prob <= 0.0:
            raise ZeroDivisionError(
                f"{stage} at level {level} has zero success probability"
            )
        out = normalize(outcome.out)
        if channel is not None:
            out = apply_bell_channel(out, channel)
        if current_times is not None:
            new_times = mc.combine(current_times, outcome.success_prob)
            new_t = float(new_times.mean())
        else:
            new_times = None
            new_t = TWO_PAIR_OVERHEAD * current_t / outcome.success_prob
        records.append(
            _record(
                level,
                stage,
                out,
                _target_bell(scheme, level >= 1),
                outcome.success_prob,
                new_t,
            )
        )
        return out, new_t, new_times

    for level in range(1, config.num_levels + 1):
        state, t, times = heralded(
            lambda s: enc(scheme, s, s, eta, level=level),
            state,
            t,
            times,
            "enc",
            level,
        )
        for kind in schedule.get(level, []):
            state, t, times = heralded(
                lambda s, k=kind: enp(k, s, s, eta),
                state,
                t,
                times,
                "enp",
                level,
            )

    if scheme is SchemeKind.DLCZ:
        state, t, times = heralded(
            lambda s: postselect_pme(s, s, eta),
            state,
            t,
            times,
            "pme",
            config.num_levels + 1,
        )

    final_target = _target_bell(scheme, config.num_levels >= 1)
    return RunResult(
        config=config,
        per_level=tuple(records),
        final=(t, fidelity(state, final_target)),
    )


# ---------------------------------------------------------------------------
# Optimization and sweeps

L0_GRID = (5.0, 10.0, 20.0, 40.0, 80.0, 160.0)
_PC_DECADES = (1e-5, 0.5)
_PC_POINTS_PER_DECADE = 64


def pc_grid() -> np.ndarray:
    """Logarithmic excitation-probability grid, 64 points per decade."""
    lo, hi = (math.log10(x) for x in _PC_DECADES)
    n = int(round((hi - lo) * _PC_POINTS_PER_DECADE)) + 1
    return np.logspace(lo, hi, n)


def feasible_l0(scheme: SchemeKind, L: float) -> Tuple[float, ...]:
    """Grid spacings giving an integer number of doublings for this L."""
    out = []
    for L0 in L0_GRID:
        ratio = L / L0
        k = round(math.log2(ratio))
        if abs(ratio - 2.0**k) > 1e-9 * ratio:
            continue
        if k < (2 if scheme is SchemeKind.NEW else 1):
            continue
        out.append(L0)
    return tuple(out)


def _evaluate_l0(
    scheme: SchemeKind,
    L: float,
    L0: float,
    noise: NoiseParams,
    enp_schedule: Tuple[Tuple[int, EnpKind], ...],
) -> list:
    """(t_avg, F, logical F, p_c) for every grid p_c at one spacing."""
    rows = []
    for p_c in pc_grid():
        config = RepeaterConfig(
            scheme=scheme, L=L, L0=L0, p_c=float(p_c), noise=noise,
            enp_schedule=enp_schedule,
        )
        try:
            result = simulate_chain(config)
        except ZeroDivisionError:
            continue
        rows.append(
            (result.t_avg, result.fidelity, result.final_logical_fidelity, float(p_c))
        )
    return rows


def optimize(
    scheme: SchemeKind,
    L: float,
    F_target: float,
    noise: NoiseParams = NoiseParams(),
    enp_schedule: Tuple[Tuple[int, EnpKind], ...] = (),
    workers: int = 1,
) -> Optional[Tuple[RepeaterConfig, RunResult]]:
    """Fastest configuration reaching the target fidelity.

    Grid search over station spacings and the logarithmic p_c grid;
    deterministic tie-break toward smaller L0, then smaller p_c.
    Returns None when no grid point reaches the target.
    """
    if not 0.0 < F_target < 1.0:
        raise ValueError("F_target must lie in (0, 1)")
    spacings = feasible_l0(scheme, L)
    if workers > 1 and len(spacings) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            all_rows = list(
                pool.map(
                    _evaluate_l0,
                    [scheme] * len(spacings),
                    [L] * len(spacings),
                    spacings,
                    [noise] * len(spacings),
                    [enp_schedule] * len(spacings),
                )
            )
    else:
        all_rows = [
            _evaluate_l0(scheme, L, L0, noise, enp_schedule) for L0 in spacings
        ]

    best = None  # (t, L0, p_c)
    for L0, rows in zip(spacings, all_rows):
        for t, F, _, p_c in rows:
            if F < F_target:
                continue
            key = (t, L0, p_c)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    _, L0, p_c = best
    config = RepeaterConfig(
        scheme=scheme, L=L, L0=L0, p_c=p_c, noise=noise, enp_schedule=enp_schedule
    )
    return config, simulate_chain(config)


def tf_curve(
    scheme: SchemeKind,
    L: float,
    noise: NoiseParams = NoiseParams(),
    enp_schedule: Tuple[Tuple[int, EnpKind], ...] = (),
    p_c_sweep: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> list:
    """Time/fidelity trade-off swept over p_c with per-point L0 choice.

    For each p_c every feasible station spacing is simulated and the
    spacing placing the point on the overall time/fidelity Pareto
    frontier is kept (the cheapest such spacing; if none is
    non-dominated, the fastest).  The reported fidelity is that of the
    delivered pair after the final post-selection, which is the
    convention of time-fidelity trade-off plots.  Returns a list of
    (t_avg, F, p_c, L0) tuples sorted by p_c.
    """
    sweep = pc_grid() if p_c_sweep is None else np.asarray(p_c_sweep, dtype=float)
    spacings = feasible_l0(scheme, L)
    if workers > 1 and len(spacings) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_l0 = list(
                pool.map(
                    _tf_rows,
                    [scheme] * len(spacings),
                    [L] * len(spacings),
                    spacings,
                    [noise] * len(spacings),
                    [enp_schedule] * len(spacings),
                    [tuple(float(p) for p in sweep)] * len(spacings),
                )
            )
    else:
        per_l0 = [
            _tf_rows(scheme, L, L0, noise, enp_schedule, tuple(map(float, sweep)))
            for L0 in spacings
        ]

    candidates = []  # (t, F, p_c index, L0)
    for i, p_c in enumerate(sweep):
        for L0, rows in zip(spacings, per_l0):
            if rows[i] is not None:
                t, F_log = rows[i]
                candidates.append((t, F_log, i, L0))
    frontier = _pareto_indices(candidates)

    points = []
    for i, p_c in enumerate(sweep):
        mine = [
            (j, c) for j, c in enumerate(candidates) if c[2] == i
        ]
        if not mine:
            continue
        on_front = [c for j, c in mine if j in frontier]
        pick = min(on_front or [c for _, c in mine], key=lambda c: (c[0], c[3]))
        points.append((pick[0], pick[1], float(p_c), pick[3]))
    return points


def _pareto_indices(candidates: Sequence[Tuple]) -> set:
    """Indices of points not dominated in (time lower, fidelity higher)."""
    order = sorted(range(len(candidates)), key=lambda j: (candidates[j][0], -candidates[j][1]))
    best_f = -math.inf
    front = set()
    for j in order:
        f = candidates[j][1]
        if f > best_f:
            front.add(j)
            best_f = f
    return front


def fit_tf_slope(
    points: Sequence[Tuple], infidelity_window: Tuple[float, float] = (0.01, 0.1)
) -> float:
    """Slope of log t vs log(1-F) over the given infidelity window."""
    lo, hi = infidelity_window
    xs, ys = [], []
    for t, F, *_ in points:
        if lo <= 1.0 - F <= hi:
            xs.append(math.log(1.0 - F))
            ys.append(math.log(t))
    if len(xs) < 3:
        raise ValueError("not enough points in the infidelity window")
    return float(np.polyfit(xs, ys, 1)[0])


def _tf_rows(scheme, L, L0, noise, enp_schedule, sweep):
    rows = []
    for p_c in sweep:
        config = RepeaterConfig(
            scheme=scheme, L=L, L0=L0, p_c=p_c, noise=noise,
            enp_schedule=enp_schedule,
        )
        try:
            result = simulate_chain(config)
        except ZeroDivisionError:
            rows.append(None)
            continue
        rows.append((result.t_avg, result.final_logical_fidelity))
    return rows


def scaling_fit(
    scheme: SchemeKind,
    noise: NoiseParams,
    L_values: Sequence[float],
    L0: float = 40.0,
    p_c_scale: float = 0.26,
    waiting: str = "deterministic",
    seed: int = 0,
) -> Tuple[float, list]:
    """Fitted slope of log t_avg vs log L with p_c scaled as L0/L.

    Returns (slope, [(L, t_avg), ...]).
    """
    points = []
    for L in L_values:
        p_c = p_c_scale * L0 / L
        config = RepeaterConfig(scheme=scheme, L=float(L), L0=L0, p_c=p_c, noise=noise)
        result = simulate_chain(config, waiting=waiting, seed=seed)
        points.append((float(L), result.t_avg))
    logs = np.log([p[0] for p in points])
    logt = np.log([p[1] for p in points])
    slope = float(np.polyfit(logs, logt, 1)[0])
    return slope, points


# ---------------------------------------------------------------------------
# Tabular output

CSV_COLUMNS = (
    "scheme", "L_km", "L0_km", "p_c", "eta", "D", "level",
    "p_logic", "p_vac", "p_multi", "F", "P_success", "t_avg_s",
)


def run_result_rows(result: RunResult) -> list:
    """One CSV row per chain stage, in the documented column order."""
    config = result.config
    rows = []
    for rec in result.per_level:
        rows.append(
            [
                config.scheme.value,
                config.L,
                config.L0,
                config.p_c,
                config.noise.eta,
                config.noise.D,
                rec.level,
                rec.p_logic,
                rec.p_vac,
                rec.p_multi,
                rec.fidelity,
                rec.success_prob,
                rec.t_avg,
            ]
        )
    return rows


def format_csv(rows: Iterable[Sequence], header: Sequence[str] = CSV_COLUMNS) -> str:
    lines = [", ".join(header)]
    for row in rows:
        lines.append(", ".join(_csv_cell(x) for x in row))
    return "\n".join(lines) + "\n"


def _csv_cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_result_json(result: RunResult) -> str:
    config = result.config
    payload = {
        "scheme": config.scheme.value,
        "L_km": config.L,
        "L0_km": config.L0,
        "p_c": config.p_c,
        "eta": config.noise.eta,
        "D": config.noise.D,
        "enp_schedule": [[m, kind.value] for m, kind in config.enp_schedule],
        "levels": [
            {
                "level": rec.level,
                "stage": rec.stage,
                "p_logic": rec.p_logic,
                "p_vac": rec.p_vac,
                "p_multi": rec.p_multi,
                "bell": list(rec.bell),
                "F": rec.fidelity,
                "F_logical": rec.logical_fidelity,
                "P_success": rec.success_prob,
                "t_avg_s": rec.t_avg,
            }
            for rec in result.per_level
        ],
        "final": {"t_avg_s": result.t_avg, "F": result.fidelity},
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
