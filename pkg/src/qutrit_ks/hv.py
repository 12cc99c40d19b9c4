"""Brute-force classical bounds by exhaustive hidden-variable enumeration.

The point of this module is obvious correctness: all 2^13 assignments are
evaluated in exact integer arithmetic, once with the +-1 alphabet for the
13-term inequality and once with the 0/1 alphabet under the product and sum
rules for the 4-term inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

from .model import KSModel

PM1 = "pm1"
ZO = "01"


@dataclass(frozen=True)
class Assignment:
    values: tuple[int, ...]
    alphabet: str  # PM1 or ZO

    def __post_init__(self):
        if len(self.values) != 13:
            raise ValueError("assignment needs 13 values")
        allowed = {-1, 1} if self.alphabet == PM1 else {0, 1}
        if not set(self.values) <= allowed:
            raise ValueError(f"values do not match alphabet {self.alphabet}")


@dataclass
class BoundReport:
    maximum: int | None
    argmax_count: int
    admissible_count: int
    histogram: dict[int, int] = field(default_factory=dict)
    colorable: bool = True


def evaluate_assignment(f: Assignment, model: KSModel) -> int:
    """Classical functional value of an assignment.

    +-1 alphabet: the weighted 13-observable expression.
    0/1 alphabet: the sum of the four projector values 10..13.
    """
    v = f.values
    if f.alphabet == PM1:
        total = sum(model.mu_i[i] * v[i - 1] for i in range(1, 14))
        total -= sum(mu * v[i - 1] * v[j - 1] for (i, j), mu in model.mu_ij.items())
        total -= sum(
            mu * v[i - 1] * v[j - 1] * v[k - 1]
            for (i, j, k), mu in model.mu_ijk.items()
        )
        return total
    if f.alphabet == ZO:
        return v[9] + v[10] + v[11] + v[12]
    raise ValueError(f"unknown alphabet {f.alphabet!r}")


def _admissible(g: tuple[int, ...], model: KSModel) -> bool:
    for i, j in model.edges:
        if g[i - 1] * g[j - 1] != 0:
            return False
    for i, j, k in model.triangles:
        if g[i - 1] + g[j - 1] + g[k - 1] != 1:
            return False
    return True


def max_chi13_noncontextual(model: KSModel) -> BoundReport:
    """Enumerate all 8192 +-1 assignments; exact integer maximum."""
    hist: dict[int, int] = {}
    best = None
    for v in product((-1, 1), repeat=13):
        val = evaluate_assignment(Assignment(v, PM1), model)
        hist[val] = hist.get(val, 0) + 1
        if best is None or val > best:
            best = val
    return BoundReport(
        maximum=best,
        argmax_count=hist[best],
        admissible_count=sum(hist.values()),
        histogram=dict(sorted(hist.items())),
    )


def max_chi4_constrained(model: KSModel) -> BoundReport:
    """Enumerate 0/1 assignments obeying the product rule on all 24 edges and
    the sum rule on all 4 triangles; maximum of values on rays 10..13."""
    hist: dict[int, int] = {}
    best = None
    admissible = 0
    for g in product((0, 1), repeat=13):
        if not _admissible(g, model):
            continue
        admissible += 1
        val = evaluate_assignment(Assignment(g, ZO), model)
        hist[val] = hist.get(val, 0) + 1
        if best is None or val > best:
            best = val
    if admissible == 0:
        return BoundReport(maximum=None, argmax_count=0, admissible_count=0,
                           histogram={}, colorable=False)
    return BoundReport(
        maximum=best,
        argmax_count=hist[best],
        admissible_count=admissible,
        histogram=dict(sorted(hist.items())),
    )


def report_to_text(name: str, report: BoundReport) -> str:
    lines = [f"# enumeration report: {name}"]
    if not report.colorable:
        lines.append("KS-uncolorable: no assignment satisfies the rules")
        return "\n".join(lines) + "\n"
    lines.append(f"maximum          = {report.maximum}")
    lines.append(f"argmax count     = {report.argmax_count}")
    lines.append(f"admissible count = {report.admissible_count}")
    lines.append("[histogram]")
    for val, count in report.histogram.items():
        lines.append(f"{val:6d} : {count}")
    return "\n".join(lines) + "\n"
