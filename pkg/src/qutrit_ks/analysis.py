"""From count tables to inequality values with error bars.

Detection-error correction inverts the 2x2 readout confusion matrix. For
single probabilities this is the constrained binomial ML solution
p = (q - eps_B) / (1 - eps_D - eps_B), clipped to [0, 1].

For a sequential pair the trials that continue to the second detection are a
mixture: first outcome truly dark, or truly bright but misread dark. The
misread component carries P(second dark | first bright), which is not small,
so inverting the second-step marginal alone leaves a bias of order eps_B per
edge - far too large for the inequality, whose edge terms enter with weights
up to 16. `correct_pair_ml` therefore solves the two-step moment equations
jointly, using the independently measured (and corrected) single probability
of the second observable to pin down the misread component.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

from .model import KSModel

# Bounds used in the assembled expressions.
QUANTUM_CHI13 = 83.0 / 3.0
QUANTUM_CHI4 = 4.0 / 3.0


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    corrected: bool = False
    sample_size: int = 0


@dataclass(frozen=True)
class ConfusionModel:
    eps_dark_to_bright: float = 0.010
    eps_bright_to_dark: float = 0.021

    def __post_init__(self):
        if self.eps_dark_to_bright + self.eps_bright_to_dark >= 1.0:
            raise ValueError("confusion matrix is not invertible")

    @property
    def visibility(self) -> float:
        return 1.0 - self.eps_dark_to_bright - self.eps_bright_to_dark


def _binomial_stderr(p: float, n: int) -> float:
    if p <= 0.0 or p >= 1.0:
        return 3.0 / n  # rule-of-three bound at the boundary
    return math.sqrt(p * (1.0 - p) / n)


def estimate_probability(dark_count: int, shots: int) -> Estimate:
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= dark_count <= shots:
        raise ValueError("dark count outside [0, shots]")
    p = dark_count / shots
    return Estimate(p, _binomial_stderr(p, shots), corrected=False,
                    sample_size=shots)


def correct_ml(raw: Estimate, confusion: ConfusionModel) -> Estimate:
    """ML inversion of a single observed dark fraction; clipped to [0, 1].

    The stderr is scaled by the inverse visibility and retained even when
    the value clips at a boundary.
    """
    v = confusion.visibility
    p = (raw.value - confusion.eps_bright_to_dark) / v
    p = min(max(p, 0.0), 1.0)
    return Estimate(p, raw.stderr / v, corrected=True,
                    sample_size=raw.sample_size)


def correct_pair_ml(counts: dict[str, int], confusion: ConfusionModel,
                    single_second: Estimate) -> Estimate:
    """Corrected joint probability P(V_i = 1 and V_j = 1) from B/DB/DD counts.

    Moment equations, with p1 the true first-step dark probability, x the
    true joint probability and c = P(second dark | first bright):

        q1 = p1 (1 - eps_D) + (1 - p1) eps_B
        qc = eps_B + visibility * (w * x / p1 + (1 - w) * c)
        s_j = x + (1 - p1) c          (total probability; compatibility)

    where qc is the observed second-step dark fraction among continued
    trials and w = p1 (1 - eps_D) / q1 is the fraction of those that were
    truly dark. Eliminating c gives a linear equation for x.
    """
    n = counts["B"] + counts["DB"] + counts["DD"]
    n_cont = counts["DB"] + counts["DD"]
    eps_b = confusion.eps_bright_to_dark
    eps_d = confusion.eps_dark_to_bright
    vis = confusion.visibility

    q1 = n_cont / n
    p1 = min(max((q1 - eps_b) / vis, 0.0), 1.0)
    if n_cont == 0 or p1 == 0.0:
        return Estimate(0.0, 3.0 / n, corrected=True, sample_size=n)

    qc = counts["DD"] / n_cont
    m = (qc - eps_b) / vis  # = w * x / p1 + (1 - w) * c
    w = p1 * (1.0 - eps_d) / q1 if q1 > 0 else 1.0

    s_j = single_second.value
    if p1 >= 1.0:
        x = m * p1
        dx_dm = p1
        dx_ds = 0.0
    else:
        denom = w / p1 - (1.0 - w) / (1.0 - p1)
        if abs(denom) < 1e-9:
            x = m * p1
            dx_dm = p1
            dx_ds = 0.0
        else:
            x = (m - (1.0 - w) * s_j / (1.0 - p1)) / denom
            dx_dm = 1.0 / denom
            dx_ds = -((1.0 - w) / (1.0 - p1)) / denom

    x = min(max(x, 0.0), min(p1, s_j) if s_j > 0 else p1)
    sigma_m = _binomial_stderr(qc, n_cont) / vis
    stderr = math.hypot(dx_dm * sigma_m, dx_ds * single_second.stderr)
    return Estimate(x, stderr, corrected=True, sample_size=n)


@dataclass
class StateEstimates:
    """Per-state singles and pair estimates, raw and corrected."""

    singles_raw: dict[int, Estimate]
    singles: dict[int, Estimate]
    pairs_raw: dict[tuple[int, int], Estimate]
    pairs: dict[tuple[int, int], Estimate]


def estimates_from_counts(tables, confusion: ConfusionModel | None) -> StateEstimates:
    """Reduce one state's count tables to (corrected) probability estimates.

    `tables` is the list of CountTable records for one state. When
    `confusion` is None the corrected estimates equal the raw ones.

    The first detection of a sequential pair is a full-statistics
    measurement of the first observable, so those marginals are pooled into
    the single estimates; no measured data is discarded.
    """
    pooled: dict[int, list[int]] = {}  # ray -> [dark, total]
    pair_counts: dict[tuple[int, int], dict[str, int]] = {}
    for t in tables:
        chain = t.subexperiment.chain
        if len(chain) == 1:
            dark, total = t.counts["D"], t.shots
            ray = chain[0]
        else:
            pair_counts[chain] = t.counts
            dark = t.counts["DB"] + t.counts["DD"]
            total = t.shots
            ray = chain[0]
        acc = pooled.setdefault(ray, [0, 0])
        acc[0] += dark
        acc[1] += total
    singles_raw = {
        i: estimate_probability(dark, total) for i, (dark, total) in pooled.items()
    }

    if confusion is None:
        singles = dict(singles_raw)
    else:
        singles = {i: correct_ml(e, confusion) for i, e in singles_raw.items()}

    pairs_raw: dict[tuple[int, int], Estimate] = {}
    pairs: dict[tuple[int, int], Estimate] = {}
    for (i, j), counts in pair_counts.items():
        n = sum(counts.values())
        pairs_raw[(i, j)] = estimate_probability(counts["DD"], n)
        if confusion is None:
            pairs[(i, j)] = pairs_raw[(i, j)]
        else:
            if j not in singles:
                raise ValueError(f"missing single estimate for ray v{j}")
            pairs[(i, j)] = correct_pair_ml(counts, confusion, singles[j])
    return StateEstimates(singles_raw, singles, pairs_raw, pairs)


def _chi13_coefficients(model: KSModel):
    """Linear coefficients of the assembled expression in the single and
    pair probabilities, with the three-projector term dropped."""
    const = sum(model.mu_i.values()) - sum(model.mu_ij.values()) \
        - sum(model.mu_ijk.values())
    c_single = {i: -2.0 * model.mu_i[i] for i in model.mu_i}
    c_pair = {}
    for (i, j), mu in model.mu_ij.items():
        c_single[i] += 2.0 * mu
        c_single[j] += 2.0 * mu
        c_pair[(i, j)] = -4.0 * mu
    for (i, j, k), mu in model.mu_ijk.items():
        for r in (i, j, k):
            c_single[r] += 2.0 * mu
        for e in ((i, j), (i, k), (j, k)):
            c_pair[tuple(sorted(e))] += -4.0 * mu
    return const, c_single, c_pair


def assemble_chi13(singles: dict[int, Estimate],
                   pairs: dict[tuple[int, int], Estimate],
                   model: KSModel) -> Estimate:
    """Weighted inequality value from 13 single and 24 pair estimates.

    The triple correlation is expanded in projector averages and the
    three-projector term is dropped (it is non-negative, so dropping it can
    only lower the value). The stderr treats sub-experiments as independent.
    """
    const, c_single, c_pair = _chi13_coefficients(model)
    value = const
    var = 0.0
    n = 0
    for i, coef in c_single.items():
        if i not in singles:
            raise ValueError(f"missing single estimate for ray v{i}")
        value += coef * singles[i].value
        var += (coef * singles[i].stderr) ** 2
        n += singles[i].sample_size
    for edge, coef in c_pair.items():
        if edge not in pairs:
            raise ValueError(f"missing pair estimate for edge {edge}")
        value += coef * pairs[edge].value
        var += (coef * pairs[edge].stderr) ** 2
        n += pairs[edge].sample_size
    corrected = any(e.corrected for e in singles.values())
    return Estimate(value, math.sqrt(var), corrected=corrected, sample_size=n)


def assemble_chi4(singles: dict[int, Estimate]) -> Estimate:
    value = 0.0
    var = 0.0
    n = 0
    for i in (10, 11, 12, 13):
        if i not in singles:
            raise ValueError(f"missing single estimate for ray v{i}")
        value += singles[i].value
        var += singles[i].stderr ** 2
        n += singles[i].sample_size
    corrected = any(singles[i].corrected for i in (10, 11, 12, 13))
    return Estimate(value, math.sqrt(var), corrected=corrected, sample_size=n)


def significance(est: Estimate, classical_bound: float) -> float:
    if est.stderr <= 0.0:
        raise ValueError("stderr must be positive for a significance")
    return (est.value - classical_bound) / est.stderr
