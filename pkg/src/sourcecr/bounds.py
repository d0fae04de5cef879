"""Budget bounds for querying-based source detection on d-regular trees.

All logarithms are natural.  These are calculators: they evaluate the
closed forms and make no claim about any particular simulator run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable


def _check_degree(d: int) -> None:
    if d < 3:
        raise ValueError(f"degree must be >= 3 (c2 is undefined at d=2), got {d}")


def _check_budget(budget: int, rounds: int) -> int:
    if budget < 1 or rounds < 1:
        raise ValueError(f"budget and rounds must be positive, got K={budget}, r={rounds}")
    if budget % rounds:
        raise ValueError(f"rounds r={rounds} must divide budget K={budget}")
    return budget // rounds


def c1(d: int) -> float:
    _check_degree(d)
    return 7.0 * (d + 1) / d


def c2(d: int) -> float:
    _check_degree(d)
    return 4.0 * d / (3.0 * (d - 2))


def depth_l(d: int, budget: int, rounds: int) -> float:
    _check_degree(d)
    _check_budget(budget, rounds)
    return math.log(2.0 * budget * (d - 2) / (rounds * d) + 2.0) / math.log(d - 1)


def _clamp01(x: float) -> tuple[float, bool]:
    if x < 0.0:
        return 0.0, True
    if x > 1.0:
        return 1.0, True
    return x, False


def coverage_bounds(d: int, budget: int, rounds: int) -> tuple[float, float]:
    """Lower and upper bound on the chance the true source is in the candidate set.

    Values outside [0, 1] are clamped; use :func:`coverage_report` to see
    whether clamping made a bound vacuous.
    """
    lo, hi, _, _ = _coverage(d, budget, rounds)
    return lo, hi


def _coverage(d: int, budget: int, rounds: int):
    l = depth_l(d, budget, rounds)
    lower, lo_clamped = _clamp01(1.0 - c1(d) * math.exp(-(l / 2.0) * math.log(l)))
    upper, hi_clamped = _clamp01(1.0 - c2(d) * math.exp(-l * math.log(l)))
    return lower, upper, lo_clamped, hi_clamped


def f_factor(eta_max: float, eta_min: float, n: int) -> float:
    if not 0.0 <= eta_min <= eta_max <= 1.0:
        raise ValueError(f"need 0 <= eta_min <= eta_max <= 1, got {eta_min}, {eta_max}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if eta_max + eta_min > 1.0:
        return eta_max**n
    return (1.0 - eta_min) ** n


def _xlogy(x: float, y: float) -> float:
    # 0 * log 0 := 0
    return 0.0 if x == 0.0 else x * math.log(y)


def h_tilde_1(eta_max: float, eta_min: float) -> float:
    return _xlogy(eta_min, eta_min) + _xlogy(1.0 - eta_max, 1.0 - eta_max)


def h_tilde_2(eta_max: float, eta_min: float, d: int) -> float:
    return _xlogy(eta_min, eta_min) + _xlogy(1.0 - eta_max, (1.0 - eta_max) / (d - 1))


@dataclass(frozen=True)
class BoundInputs:
    degree: int
    budget: int
    rounds: int
    delta: float = 0.1
    eta_max: float = 0.9
    eta_min: float = 0.6
    entropy: float = 1.0

    def __post_init__(self):
        _check_degree(self.degree)
        q = _check_budget(self.budget, self.rounds)
        if q < 2:
            raise ValueError(f"need K/r >= 2, got {q}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 <= self.eta_min <= self.eta_max <= 1.0:
            raise ValueError(
                f"need 0 <= eta_min <= eta_max <= 1, got {self.eta_min}, {self.eta_max}"
            )
        if not self.entropy > 0:
            raise ValueError(f"infection-time entropy must be positive, got {self.entropy}")


def h_g(inputs: BoundInputs) -> float:
    d, k, r = inputs.degree, inputs.budget, inputs.rounds
    if k <= 2 * r:
        raise ValueError(f"H_G needs K > 2r (log(K/2r) > 0), got K={k}, r={r}")
    n = k // r
    f = f_factor(inputs.eta_max, inputs.eta_min, n)
    h1 = h_tilde_1(inputs.eta_max, inputs.eta_min)
    h2 = h_tilde_2(inputs.eta_max, inputs.eta_min, d)
    ff = f * (1.0 - f)
    # f(1-f) * 2^(n-1) in log space: 2^(n-1) alone overflows past n ~ 1024
    spread = 0.0 if ff == 0.0 else math.exp(min(math.log(ff) + (n - 1) * math.log(2.0), 709.0))
    num = (1.0 - h1) + spread * (math.log(d) - h2)
    den = inputs.entropy * (n - 1) * math.log(k / (2.0 * r))
    return num / den


def _rhs(inputs: BoundInputs) -> float:
    l = depth_l(inputs.degree, inputs.budget, inputs.rounds)
    return ((1.0 - inputs.delta) + c2(inputs.degree) * math.exp(-l * math.log(l))) * h_g(inputs)


def budget_infeasible(inputs: BoundInputs) -> bool:
    """True when ``K`` satisfies the impossibility inequality ``K <= [...] * H_G``."""
    return inputs.budget <= _rhs(inputs)


def admissible_budget(
    degree: int,
    rounds: int,
    delta: float,
    eta_max: float,
    eta_min: float,
    entropy: float = 1.0,
    budgets: Iterable[int] | None = None,
) -> int | None:
    """Largest ``K`` in ``budgets`` satisfying the impossibility inequality.

    Both sides depend on ``K``, so the range is scanned.  Returns ``None``
    when no budget qualifies.
    """
    ks = sorted(set(budgets)) if budgets is not None else []
    if not ks:
        raise ValueError("budget range is empty")
    for k in ks:
        if k % rounds or k <= 2 * rounds:
            raise ValueError(f"budgets must be multiples of r={rounds} above 2r, got {k}")
    best = None
    for k in ks:
        inp = BoundInputs(degree, k, rounds, delta, eta_max, eta_min, entropy)
        if budget_infeasible(inp):
            best = k
    return best


def default_budget_range(rounds: int, k_max: int) -> range:
    return range(3 * rounds, k_max + 1, rounds)


@dataclass(frozen=True)
class BoundReport:
    c1: float
    c2: float
    l: float
    coverage_lower: float
    coverage_upper: float
    lower_vacuous: bool
    upper_vacuous: bool
    h_tilde_1: float
    h_tilde_2: float
    f: float
    h_g: float
    admissible_k: int | None

    def as_dict(self) -> dict:
        return asdict(self)

    def format(self) -> str:
        rows = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("l", self.l),
            ("coverage lower", self.coverage_lower),
            ("coverage upper", self.coverage_upper),
            ("H~1", self.h_tilde_1),
            ("H~2", self.h_tilde_2),
            ("f", self.f),
            ("H_G", self.h_g),
            ("admissible K", self.admissible_k),
        ]
        width = max(len(k) for k, _ in rows)
        out = []
        for k, v in rows:
            if isinstance(v, float):
                text = f"{v:.6g}"
            else:
                text = "none" if v is None else str(v)
            if k == "coverage lower" and self.lower_vacuous:
                text += "  (clamped, vacuous)"
            if k == "coverage upper" and self.upper_vacuous:
                text += "  (clamped, vacuous)"
            out.append(f"{k.ljust(width)}  {text}")
        return "\n".join(out)


def bound_report(inputs: BoundInputs, k_max: int | None = None) -> BoundReport:
    """Every bound quantity at ``inputs``; the admissible scan runs up to ``k_max``."""
    d, k, r = inputs.degree, inputs.budget, inputs.rounds
    lo, hi, lo_c, hi_c = _coverage(d, k, r)
    top = k if k_max is None else k_max
    adm = admissible_budget(
        d, r, inputs.delta, inputs.eta_max, inputs.eta_min, inputs.entropy,
        default_budget_range(r, top),
    ) if top >= 3 * r else None
    return BoundReport(
        c1=c1(d),
        c2=c2(d),
        l=depth_l(d, k, r),
        coverage_lower=lo,
        coverage_upper=hi,
        lower_vacuous=lo_c,
        upper_vacuous=hi_c,
        h_tilde_1=h_tilde_1(inputs.eta_max, inputs.eta_min),
        h_tilde_2=h_tilde_2(inputs.eta_max, inputs.eta_min, d),
        f=f_factor(inputs.eta_max, inputs.eta_min, k // r),
        h_g=h_g(inputs),
        admissible_k=adm,
    )
