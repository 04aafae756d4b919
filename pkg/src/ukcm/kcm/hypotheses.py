"""Per-class scale choices and the four hypotheses of the lower-bound proposition, in log domain.

T, L and H are astronomically large for small q, so every quantity is
carried as a natural logarithm and the inequalities are compared as
differences of logs.  A positive margin means the inequality holds with room
to spare; the margin is in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..geometry import ConstantPack

LOG_TOL = 1e-9

AUTOMATIC = {"d": "(1,2,0)", "g": "(1,0,0)"}


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True)
class AutomaticBound:
    """Classes whose lower bound follows from bootstrap percolation alone; no parameters needed."""

    label: str
    exponents: str
    note: str = "lower bound follows from the bootstrap percolation bound"


@dataclass(frozen=True)
class PropMainParams:
    """Log-domain parameters.  ``n`` is the integer used in the inequalities; ``n_raw`` the formula value."""

    ln_T: float
    ln_L: float
    ln_H: float
    ln_K: float
    ln_ell: float
    ln_h: float
    n: int
    ln_rho: float
    ln_p_left: float
    ln_p_down: float
    ln_p_loc: float = math.log(1 / 8)
    n_raw: float | None = None
    label: str = ""
    sources: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("ln_T", "ln_L", "ln_H", "ln_K", "ln_ell", "ln_h", "ln_rho", "ln_p_left", "ln_p_down",
                     "ln_p_loc"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise HypothesisError(f"{name} is not finite ({v})")
        if int(self.n) != self.n or self.n < 0:
            raise HypothesisError(f"n must be a nonnegative integer (got {self.n})")
        for name in ("ln_rho", "ln_p_left", "ln_p_down", "ln_p_loc"):
            if getattr(self, name) > 0:
                raise HypothesisError(f"{name} is the log of a probability and must be <= 0")

    @property
    def K(self) -> float:
        return math.exp(self.ln_K)

    @property
    def ell(self) -> float:
        return math.exp(self.ln_ell)

    @property
    def h(self) -> float:
        return math.exp(self.ln_h)

    def with_probabilities(self, rho=None, p_left=None, p_down=None, p_loc=None, source="measured") -> "PropMainParams":
        """Replace bound values by supplied probabilities (given as plain probabilities, > 0)."""
        kw, src = {}, dict(self.sources)
        for name, v in (("rho", rho), ("p_left", p_left), ("p_down", p_down), ("p_loc", p_loc)):
            if v is None:
                continue
            if not 0 < v <= 1:
                raise HypothesisError(f"{name} must lie in (0, 1]; substitute an upper confidence bound for 0")
            kw["ln_" + name] = math.log(v)
            src[name] = source
        return replace(self, sources=src, **kw)


def _logaddexp(a: float, b: float) -> float:
    m = max(a, b)
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def theorem_parameters(label: str, q: float, alpha: int, pack: ConstantPack) -> PropMainParams | AutomaticBound:
    """The scale choices for refined class ``label`` at infection density q.

    ρ, p_left and p_down are filled with the class's proven upper bounds
    (marked ``bound`` in ``sources``) and μ(0 locally infectable) with 1/8;
    use ``with_probabilities`` to plug in measured values.
    """
    label = label.strip().lower().strip("()")
    if label in AUTOMATIC:
        return AutomaticBound(label, AUTOMATIC[label])
    if label not in ("a", "b", "c", "e", "f"):
        raise HypothesisError(f"unknown class label {label!r}")
    if not 0 < q < 1:
        raise HypothesisError("q must lie in (0, 1)")
    a = float(alpha)
    lq = math.log(1 / q)           # log(1/q)
    qa = q ** a
    C1, C5, C6 = pack.C1, pack.C5, pack.C6
    if label == "a":
        ln_K = (a + 0.25) * lq
        ln_ell = ln_h = 4 * a * lq
        ln_L = ln_H = lq ** 2 / (C6 * qa)
        ln_T = lq ** 4 / (C6 ** 2 * q ** (2 * a))
        n_raw = lq ** 2 / (2 * C6 * qa)
    elif label == "b":
        ln_K = a * lq
        ln_ell = ln_h = 4 * a * lq
        ln_L = ln_H = 1 / (C6 * qa)
        ln_T = 1 / (C6 ** 2 * q ** (2 * a))
        n_raw = 1 / (2 * C6 * qa)
    elif label == "c":
        ln_K = (a + 0.25) * lq
        ln_ell = ln_h = (a + 0.625) * lq
        ln_L = ln_H = (a + 0.75) * lq
        ln_T = lq ** 3 / (C6 * qa)
        n_raw = lq / C1
    elif label == "e":
        ln_K = a * lq - math.log(C5)
        ln_ell = ln_h = (a + 0.5) * lq
        ln_L = ln_H = (a + 0.75) * lq
        ln_T = lq / (C6 * qa)
        n_raw = lq / C1
    else:  # f
        llq = math.log(lq)
        if llq <= 0:
            raise HypothesisError("class f needs log log(1/q) > 0, i.e. q < 1/e")
        ln_K = a * lq - math.log(C5)
        ln_ell = (a + 0.5) * lq
        ln_L = (a + 0.75) * lq
        ln_T = llq / (C6 ** 3 * qa)
        ln_h = math.log(llq) + a * lq
        ln_H = 0.25 * math.log(lq) + a * lq
        n_raw = llq / C1
    if label in ("a", "c"):      # unbalanced
        ln_rho = -lq ** 2 / (C5 * qa)
    else:
        ln_rho = -1 / (C5 * qa)
    if label in ("a", "b"):      # infinitely many stable directions
        ln_cross = -(q ** (-3 * a))
    else:
        ln_cross = -(q ** (-a - 0.25))
    src = {"rho": "bound", "p_left": "bound", "p_down": "bound", "p_loc": "bound"}
    return PropMainParams(ln_T, ln_L, ln_H, ln_K, ln_ell, ln_h, int(math.floor(n_raw)), ln_rho, ln_cross,
                          ln_cross, math.log(1 / 8), n_raw, label, src)


@dataclass(frozen=True)
class Inequality:
    name: str
    text: str
    margin: float       # log(rhs) - log(lhs) in the orientation "lhs <= rhs"; >= 0 means it holds
    scale: float = 1.0  # magnitude of the logs involved, for the rounding tolerance

    @property
    def passed(self) -> bool:
        return self.margin >= -LOG_TOL * max(1.0, self.scale)


@dataclass(frozen=True)
class HypothesisReport:
    params: PropMainParams
    inequalities: tuple[Inequality, ...]

    @property
    def all_pass(self) -> bool:
        return all(i.passed for i in self.inequalities)

    def lines(self) -> list[str]:
        out = []
        for i in self.inequalities:
            out.append(f"{i.name:<10} {'pass' if i.passed else 'FAIL'}  ln_margin={i.margin:.6g}  ({i.text})")
        return out


def check_prop_main_hypotheses(p: PropMainParams) -> HypothesisReport:
    """Evaluate geometry (for L and H), local infectability, crossing and spanning in log domain."""
    ln3 = math.log(3)
    geo_L = p.ln_L - (p.n * ln3 + _logaddexp(math.log(11) + p.ln_K, p.ln_ell))
    geo_H = p.ln_H - (p.n * ln3 + _logaddexp(math.log(11) + p.ln_K, p.ln_h))
    loc = math.log(1 / 8) - p.ln_p_loc
    cross = -(p.ln_T + 2 * (p.ln_L + p.ln_H) + max(p.ln_p_down, p.ln_p_left))
    spanx = -(p.ln_T + p.ln_L + p.ln_H + (p.n + 1) * (p.ln_L + p.ln_H + 3 * p.ln_K + p.ln_rho))
    sc = max(abs(v) for v in (p.ln_T, p.ln_L, p.ln_H, p.ln_K, p.ln_ell, p.ln_h, p.ln_rho, p.ln_p_left,
                              p.ln_p_down, p.ln_p_loc)) * (p.n + 2)
    ineqs = (
        Inequality("geometry_L", "L >= 3^n (11K + l)", geo_L, sc),
        Inequality("geometry_H", "H >= 3^n (11K + h)", geo_H, sc),
        Inequality("local", "1/8 >= mu(0 locally infectable)", loc, sc),
        Inequality("crossing", "1 >= T (LH)^2 max(p_down, p_left)", cross, sc),
        Inequality("spanning", "1 >= T L H (L H K^3 rho)^(n+1)", spanx, sc),
    )
    for i in ineqs:
        if not math.isfinite(i.margin):
            raise HypothesisError(f"{i.name} margin is not finite")
    return HypothesisReport(p, ineqs)
