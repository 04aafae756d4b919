"""Update families: parsing, stable directions, difficulties and classification.

A direction ``u`` is stable when no rule fits in the open half-plane
``H_u = {y : <u,y> < 0}``.  Isolated stable directions get a finite
difficulty, found by a certified search (see :func:`difficulty`);
directions lying on a positive-length stable arc are infinitely hard.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .geometry import (
    Direction,
    Point,
    ccw_between,
    direction_between,
    family_range,
    normalize_direction,
)


class FamilyParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class BudgetError(RuntimeError):
    """A search ran out of budget; the result is genuinely unknown."""


# ---------------------------------------------------------------------------
# Families

@dataclass(frozen=True)
class UpdateFamily:
    rules: tuple[tuple[Point, ...], ...]
    name: str | None = None

    def __post_init__(self):
        if not self.rules:
            raise FamilyParseError("a family needs at least one rule")
        canon = []
        for U in self.rules:
            pts = tuple(sorted({(int(x), int(y)) for x, y in U}))
            if not pts:
                raise FamilyParseError("empty rule")
            if (0, 0) in pts:
                raise FamilyParseError("rules may not contain the origin")
            canon.append(pts)
        object.__setattr__(self, "rules", tuple(sorted(set(canon))))

    @property
    def range(self) -> float:
        return family_range(self.rules)

    @property
    def sites(self) -> tuple[Point, ...]:
        return tuple(sorted({s for U in self.rules for s in U}))

    @property
    def reach(self) -> int:
        """Largest coordinate magnitude of any rule site (used for padding)."""
        return max(max(abs(x), abs(y)) for x, y in self.sites)

    def to_text(self) -> str:
        lines = []
        if self.name:
            lines.append(f"name {self.name}")
        for U in self.rules:
            lines.append("rule " + " ".join(f"{x},{y}" for x, y in U))
        return "\n".join(lines) + "\n"


def parse_family(text: str) -> UpdateFamily:
    """Parse the ``rule x1,y1 x2,y2 ...`` / ``name <label>`` text format."""
    rules = []
    name = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        if head == "name":
            if not rest.strip():
                raise FamilyParseError("empty name", lineno)
            name = rest.strip()
        elif head == "rule":
            pts = []
            for tok in rest.split():
                try:
                    xs, ys = tok.split(",")
                    pts.append((int(xs), int(ys)))
                except ValueError:
                    raise FamilyParseError(f"bad site {tok!r}", lineno) from None
            if not pts:
                raise FamilyParseError("empty rule", lineno)
            if (0, 0) in pts:
                raise FamilyParseError("rule contains the origin", lineno)
            rules.append(tuple(pts))
        else:
            raise FamilyParseError(f"unrecognized line {line!r}", lineno)
    if not rules:
        raise FamilyParseError("no rules found")
    return UpdateFamily(tuple(rules), name)


def load_family(path: Union[str, Path]) -> UpdateFamily:
    return parse_family(Path(path).read_text(encoding="utf-8"))


CORPUS = ("fig1a", "fig1b", "fig1c", "fig1d", "fig1e", "fig1f", "fig1g")


def corpus_family(name: str) -> UpdateFamily:
    """One of the bundled example families (``fig1a`` ... ``fig1g``)."""
    key = name.removesuffix(".fam")
    if key not in CORPUS:
        raise KeyError(f"unknown corpus family {name!r}; choose from {CORPUS}")
    text = resources.files("ukcm.corpus").joinpath(f"{key}.fam").read_text(encoding="utf-8")
    return parse_family(text)


def resolve_family(spec: str) -> UpdateFamily:
    """A corpus key or a path to a family file."""
    key = spec.removesuffix(".fam")
    if key in CORPUS and not Path(spec).exists():
        return corpus_family(key)
    return load_family(spec)


# ---------------------------------------------------------------------------
# Stable directions

def is_stable(family: UpdateFamily, u: Direction) -> bool:
    return not any(all(u.x * x + u.y * y < 0 for x, y in U) for U in family.rules)


@dataclass(frozen=True)
class Arc:
    """Closed counter-clockwise arc from ``start`` to ``end``."""

    start: Direction
    end: Direction

    @property
    def degenerate(self) -> bool:
        return self.start == self.end

    @property
    def fat(self) -> bool:
        return not self.degenerate

    def contains(self, u: Direction) -> bool:
        return ccw_between(self.start, u, self.end)

    def interior_contains(self, u: Direction) -> bool:
        return self.fat and u != self.start and u != self.end and self.contains(u)

    def intersects(self, other: "Arc") -> bool:
        return self.contains(other.start) or other.contains(self.start)

    def negated(self) -> "Arc":
        return Arc(-self.start, -self.end)

    def __str__(self) -> str:
        if self.degenerate:
            return f"{{{self.start}}}"
        return f"[{self.start} -> {self.end}]"


@dataclass(frozen=True)
class StableSet:
    arcs: tuple[Arc, ...]
    full: bool = False

    def contains(self, u: Direction) -> bool:
        return self.full or any(a.contains(u) for a in self.arcs)

    @property
    def finite(self) -> bool:
        return not self.full and all(a.degenerate for a in self.arcs)

    @property
    def isolated(self) -> tuple[Direction, ...]:
        return tuple(a.start for a in self.arcs if a.degenerate)

    @property
    def fat_arcs(self) -> tuple[Arc, ...]:
        return tuple(a for a in self.arcs if a.fat)

    def kind(self, u: Direction) -> str:
        """'unstable', 'isolated', 'semi-isolated' or 'interior'."""
        if self.full:
            return "interior"
        for a in self.arcs:
            if a.contains(u):
                if a.degenerate:
                    return "isolated"
                return "semi-isolated" if u in (a.start, a.end) else "interior"
        return "unstable"

    def __str__(self) -> str:
        if self.full:
            return "S^1"
        return " ".join(str(a) for a in self.arcs) or "{}"


def critical_directions(family: UpdateFamily) -> list[Direction]:
    """Directions perpendicular to some rule site; stability is constant between them."""
    out = set()
    for s in family.sites:
        p = normalize_direction((-s[1], s[0]))
        out.add(p)
        out.add(-p)
    return sorted(out)


def stable_set(family: UpdateFamily) -> StableSet:
    crit = critical_directions(family)
    m = len(crit)
    pt = [is_stable(family, d) for d in crit]
    gap = [is_stable(family, direction_between(crit[i], crit[(i + 1) % m])) for i in range(m)]
    if all(pt) and all(gap):
        return StableSet((), full=True)
    if not any(pt):
        return StableSet(())
    # elements in cyclic order: pt0 gap0 pt1 gap1 ...; start the walk just after an unstable one
    elems = []
    for i in range(m):
        elems.append(("p", i, pt[i]))
        elems.append(("g", i, gap[i]))
    k0 = next(k for k, e in enumerate(elems) if not e[2])
    order = elems[k0 + 1:] + elems[:k0 + 1]
    arcs = []
    run: list = []
    for e in order:
        if e[2]:
            run.append(e)
            continue
        if run:
            pts = [crit[i] for kind, i, _ in run if kind == "p"]
            arcs.append(Arc(pts[0], pts[-1]))
            run = []
    if run:
        pts = [crit[i] for kind, i, _ in run if kind == "p"]
        arcs.append(Arc(pts[0], pts[-1]))
    return StableSet(tuple(sorted(arcs, key=lambda a: a.start)))


# ---------------------------------------------------------------------------
# Difficulty values

@dataclass(frozen=True)
class Zero:
    def __str__(self):
        return "0"


@dataclass(frozen=True)
class GrowthCertificate:
    """``I`` is infected by ``H_u ∪ Z`` and ``I + w ⊂ [H_u ∪ I]``, with w parallel to l_u."""

    u: Direction
    Z: tuple[Point, ...]
    I: tuple[Point, ...]
    w: Point
    finite_checked: int = 0  # number of smaller candidate sets certified finite


@dataclass(frozen=True)
class Finite:
    n: int
    certificate: GrowthCertificate | None = None

    def __str__(self):
        return str(self.n)


@dataclass(frozen=True)
class Infinite:
    reason: str = "non-isolated stable direction"

    def __str__(self):
        return "inf"


@dataclass(frozen=True)
class Unknown:
    budget: "DifficultyBudget"
    detail: str = ""

    def __str__(self):
        return "unknown"


DifficultyValue = Union[Zero, Finite, Infinite, Unknown]


def difficulty_rank(d: DifficultyValue) -> float:
    if isinstance(d, Zero):
        return 0.0
    if isinstance(d, Finite):
        return float(d.n)
    if isinstance(d, Infinite):
        return math.inf
    raise BudgetError("unknown difficulty has no rank")


@dataclass(frozen=True)
class DifficultyBudget:
    n_max: int = 3          # largest candidate set size tried
    window: int = 16        # closure window: half-width along l_u and depth
    placement: int = 4      # candidate points within this box next to the line
    shift_max: int = 4      # largest period multiple tried for a growth certificate
    max_candidates: int = 20000

    def validate(self, r: float) -> None:
        if self.n_max < 1:
            raise ValueError("difficulty budget needs n_max >= 1")
        if self.window < r or self.window < 1:
            raise ValueError(f"window {self.window} smaller than the family range {r:.3f}")
        if self.placement < 1 or self.shift_max < 1 or self.max_candidates < 1:
            raise ValueError("placement, shift_max and max_candidates must be positive")


class _LineFrame:
    """Integer coordinates (k, t) with ``y = k*w0 + t*p``, ``k = <u,y>``, ``p`` the period of l_u."""

    def __init__(self, u: Direction):
        self.u = u
        self.p = (-u.y, u.x)
        g, a, b = _ext_gcd(u.x, u.y)
        assert g == 1
        self.w0 = (a, b)
        self.pp = self.p[0] ** 2 + self.p[1] ** 2

    def to_kt(self, y) -> tuple[int, int]:
        k = self.u.x * y[0] + self.u.y * y[1]
        rx, ry = y[0] - k * self.w0[0], y[1] - k * self.w0[1]
        t, rem = divmod(rx * self.p[0] + ry * self.p[1], self.pp)
        assert rem == 0
        return (k, t)

    def from_kt(self, kt) -> Point:
        k, t = kt
        return (k * self.w0[0] + t * self.p[0], k * self.w0[1] + t * self.p[1])


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (abs(a), (1 if a >= 0 else -1), 0)
    g, x, y = _ext_gcd(b, a % b)
    return (g, y, x - (a // b) * y)


def _half_plane_closure(rules_kt, seeds, tmin, tmax, kmax) -> set:
    """Closure of ``{k<0} ∪ seeds`` restricted to the window 0<=k<=kmax, tmin<=t<=tmax."""
    inf = {s for s in seeds if 0 <= s[0] <= kmax and tmin <= s[1] <= tmax}
    sites = {s for U in rules_kt for s in U}
    stack = [(y[0] - s[0], y[1] - s[1]) for y in inf for s in sites]
    while stack:
        x = stack.pop()
        k, t = x
        if x in inf or k < 0 or k > kmax or t < tmin or t > tmax:
            continue
        for U in rules_kt:
            if all((k + a < 0) or ((k + a, t + b) in inf) for a, b in U):
                inf.add(x)
                stack.extend((k - a, t - b) for a, b in sites)
                break
    return inf


def _candidates(n: int, placement: int):
    """Candidate sets of n points in (k,t)-frame, first point pinned at t=0.

    Ordered by spread then lexicographically, so nearby configurations come first.
    """
    box = [(t, k) for t in range(0, placement + 1) for k in range(0, placement)]
    out = []
    for k0 in range(placement):
        first = (0, k0)
        rest = [b for b in box if b > first]
        for combo in itertools.combinations(rest, n - 1):
            Z = (first,) + combo
            spread = max(b[0] for b in Z) + max(b[1] for b in Z)
            out.append((spread, tuple((k, t) for t, k in Z)))
    out.sort()
    return [Z for _, Z in out]


def difficulty(family: UpdateFamily, u: Direction, budget: DifficultyBudget | None = None,
               stable: StableSet | None = None) -> DifficultyValue:
    """Difficulty of ``u``: certified search for the least n with infinite growth.

    For each n, every candidate set must be certified finite (its window
    closure stays at least one rule-reach away from the window edge) before
    moving on; the first candidate admitting a growth certificate gives
    ``Finite(n)``.  Anything undecided yields :class:`Unknown`.
    Candidates are searched near the line (within ``budget.placement``);
    minimality is relative to that search region.
    """
    budget = budget or DifficultyBudget()
    budget.validate(family.range)
    if not is_stable(family, u):
        return Zero()
    stable = stable or stable_set(family)
    kind = stable.kind(u)
    if kind != "isolated":
        return Infinite(f"{kind} stable direction")
    fr = _LineFrame(u)
    rules_kt = [tuple(fr.to_kt(s) for s in U) for U in family.rules]
    sites = {s for U in rules_kt for s in U}
    W, P = budget.window, budget.placement
    tmin, tmax, kmax = -W, P + W, P + W
    finite_seen = 0
    tried = 0
    for n in range(1, budget.n_max + 1):
        undecided = []
        for Z in _candidates(n, P):
            tried += 1
            if tried > budget.max_candidates:
                return Unknown(budget, f"candidate budget exhausted at n={n}")
            I = _half_plane_closure(rules_kt, Z, tmin, tmax, kmax)
            reach = {(y[0] - s[0], y[1] - s[1]) for y in I for s in sites}
            if all(x[0] < 0 or (x[0] <= kmax and tmin <= x[1] <= tmax) for x in reach):
                finite_seen += 1
                continue
            cert = _growth_certificate(rules_kt, I, tmin, tmax, kmax, budget.shift_max, family.reach)
            if cert is not None:
                if undecided:
                    return Unknown(budget, f"{len(undecided)} size-{n} candidates undecided")
                w = cert
                to = fr.from_kt
                pw = (w * fr.p[0], w * fr.p[1])
                return Finite(n, GrowthCertificate(u, tuple(to(z) for z in Z),
                                                   tuple(sorted(to(y) for y in I)), pw, finite_seen))
            undecided.append(Z)
        if undecided:
            return Unknown(budget, f"{len(undecided)} size-{n} candidates undecided")
    return Unknown(budget, f"every candidate up to n={budget.n_max} has finite closure")


def _growth_certificate(rules_kt, I, tmin, tmax, kmax, shift_max, reach):
    pad = shift_max + 2 * reach + 2
    J = _half_plane_closure(rules_kt, I, tmin - pad, tmax + pad, kmax + pad)
    for m in range(1, shift_max + 1):
        for w in (m, -m):
            if all((k, t + w) in J for k, t in I):
                return w
    return None


def verify_growth_certificate(family: UpdateFamily, cert: GrowthCertificate) -> bool:
    """Independent re-check of a certificate: I ⊂ [H ∪ Z] and I + w ⊂ [H ∪ I]."""
    u = cert.u
    if cert.w == (0, 0) or u.x * cert.w[0] + u.y * cert.w[1] != 0 or not cert.I:
        return False
    if any(u.x * y[0] + u.y * y[1] < 0 for y in cert.I):
        return False
    I = set(cert.I)
    lo = min(min(p[0], p[1]) for p in I | set(cert.Z)) - 4 * family.reach - abs(cert.w[0]) - abs(cert.w[1]) - 2
    hi = max(max(p[0], p[1]) for p in I | set(cert.Z)) + 4 * family.reach + abs(cert.w[0]) + abs(cert.w[1]) + 2

    def closure_xy(seeds):
        inf = {s for s in seeds if u.x * s[0] + u.y * s[1] >= 0}
        changed = True
        while changed:
            changed = False
            for x in range(lo, hi + 1):
                for y in range(lo, hi + 1):
                    if (x, y) in inf or u.x * x + u.y * y < 0:
                        continue
                    for U in family.rules:
                        if all(u.x * (x + a) + u.y * (y + b) < 0 or (x + a, y + b) in inf for a, b in U):
                            inf.add((x, y))
                            changed = True
                            break
        return inf

    if not I <= closure_xy(cert.Z):
        return False
    shifted = {(p[0] + cert.w[0], p[1] + cert.w[1]) for p in I}
    return shifted <= closure_xy(I)


# ---------------------------------------------------------------------------
# Semicircles and classification

@dataclass(frozen=True)
class Semicircle:
    """Open semicircle ``{u : <u, center> > 0}``."""

    center: Direction

    def contains(self, u: Direction) -> bool:
        return u.x * self.center.x + u.y * self.center.y > 0

    def meets_arc(self, arc: Arc) -> bool:
        return self.contains(arc.start) or self.contains(arc.end) or arc.contains(self.center)

    def __str__(self):
        return f"open semicircle centred at {self.center}"


def candidate_semicircles(stable: StableSet) -> list[Semicircle]:
    """Semicircles covering every combinatorial type relative to the stable set."""
    pts = set()
    for a in stable.arcs:
        pts |= {a.start, a.end, -a.start, -a.end}
    P = sorted(pts)
    if not P:
        return [Semicircle(Direction(1, 0))]
    bounds = list(P) + [direction_between(P[i], P[(i + 1) % len(P)]) for i in range(len(P))]
    # boundary b runs ccw to -b; the centre is b rotated by a right angle
    return sorted({Semicircle(b.rot90()) for b in bounds}, key=lambda s: s.center)


def family_difficulty(stable: StableSet, difficulties: Mapping[Direction, DifficultyValue]):
    """``min`` over open semicircles of the max difficulty inside.

    Returns ``(alpha, witness)``; ``alpha`` is a DifficultyValue (Infinite if
    every semicircle meets a fat arc), ties broken by the centre of smallest
    angle from (1,0).
    """
    if stable.full:
        return Infinite("every semicircle meets a stable arc"), None
    unresolved = [u for u, d in difficulties.items() if isinstance(d, Unknown)]
    best = None
    for S in candidate_semicircles(stable):
        if any(S.meets_arc(a) for a in stable.fat_arcs):
            continue
        inside = [u for u in stable.isolated if S.contains(u)]
        bad = [u for u in inside if u in unresolved or u not in difficulties]
        if bad:
            raise BudgetError("insufficient budget: unresolved difficulties for "
                              + ", ".join(str(u) for u in bad))
        score = max((difficulty_rank(difficulties[u]) for u in inside), default=0.0)
        if best is None or score < best[0]:
            best = (score, S)
    if best is None:
        return Infinite("every semicircle meets a stable arc"), None
    score, S = best
    val = Zero() if score == 0 else Finite(int(score))
    return val, S


EXPONENTS = {"a": (2, 4, 0), "b": (2, 0, 0), "c": (1, 3, 0), "d": (1, 2, 0),
             "e": (1, 1, 0), "f": (1, 0, 1), "g": (1, 0, 0)}

CLASS_NAMES = {"a": "unbalanced unrooted", "b": "unbalanced rooted", "c": "balanced unrooted (>=3 hard)",
               "d": "balanced unrooted (two opposite hard)", "e": "balanced rooted",
               "f": "semi-directed", "g": "isotropic"}


@dataclass
class ClassificationReport:
    coarse: str
    stable: StableSet
    difficulties: dict = field(default_factory=dict)
    alpha: DifficultyValue | None = None
    witness: Semicircle | None = None
    hard_directions: tuple[Direction, ...] = ()
    hard_arcs: tuple[Arc, ...] = ()
    opposite_pairs: tuple[tuple[str, str], ...] = ()
    refined: str | None = None

    @property
    def exponents(self):
        return EXPONENTS.get(self.refined) if self.refined else None

    @property
    def has_opposite(self) -> bool:
        return bool(self.opposite_pairs)

    def summary(self) -> str:
        if self.coarse != "critical":
            return self.coarse
        b, g, d = self.exponents
        return f"critical, alpha={self.alpha}, class {self.refined}, exponents ({b},{g},{d})"

    def as_record(self) -> dict:
        return {
            "coarse": self.coarse,
            "stable": str(self.stable),
            "alpha": str(self.alpha) if self.alpha is not None else None,
            "refined": self.refined,
            "exponents": list(self.exponents) if self.exponents else None,
            "witness_center": list(self.witness.center.v) if self.witness else None,
            "difficulties": {str(u): str(d) for u, d in self.difficulties.items()},
            "hard_directions": [str(u) for u in self.hard_directions],
            "hard_arcs": [str(a) for a in self.hard_arcs],
            "opposite_pairs": [list(p) for p in self.opposite_pairs],
        }


def coarse_class(stable: StableSet) -> str:
    sems = candidate_semicircles(stable)
    if stable.full:
        return "subcritical"
    if any(not any(S.contains(u) for u in stable.isolated)
           and not any(S.meets_arc(a) for a in stable.fat_arcs) for S in sems):
        return "supercritical"
    if any(not any(S.meets_arc(a) for a in stable.fat_arcs) for S in sems):
        return "critical"
    return "subcritical"


def classify(family: UpdateFamily, budget: DifficultyBudget | None = None) -> ClassificationReport:
    budget = budget or DifficultyBudget()
    stable = stable_set(family)
    report = ClassificationReport(coarse_class(stable), stable)
    if report.coarse != "critical":
        return report
    diffs = {u: difficulty(family, u, budget, stable) for u in stable.isolated}
    report.difficulties = diffs
    unresolved = [u for u, d in diffs.items() if isinstance(d, Unknown)]
    if unresolved:
        raise BudgetError("insufficient budget: unresolved difficulties for "
                          + ", ".join(str(u) for u in unresolved))
    alpha, witness = family_difficulty(stable, diffs)
    report.alpha, report.witness = alpha, witness
    a = difficulty_rank(alpha)
    hard = tuple(u for u, d in sorted(diffs.items()) if difficulty_rank(d) > a)
    arcs = stable.fat_arcs
    report.hard_directions, report.hard_arcs = hard, arcs

    pairs = []
    for u in hard:
        if -u in hard and u < -u:
            pairs.append((str(u), str(-u)))
        for arc in arcs:
            if arc.contains(-u):
                pairs.append((str(u), str(arc)))
    for A, B in itertools.combinations_with_replacement(arcs, 2):
        if A.intersects(B.negated()):
            pairs.append((str(A), str(B)))
    report.opposite_pairs = tuple(pairs)

    if not stable.finite:
        report.refined = "a" if pairs else "b"
    else:
        n = len(hard)
        if n == 0:
            report.refined = "g"
        elif n == 1:
            report.refined = "f"
        elif not pairs:
            report.refined = "e"
        elif n == 2:
            report.refined = "d"
        else:
            report.refined = "c"
    return report


def directions_sample(n: int = 360, scale: int = 1000) -> list[Direction]:
    """Rational directions approximating n equally spaced angles (for tests and plots)."""
    out = set()
    for i in range(n):
        th = 2 * math.pi * i / n
        out.add(normalize_direction((round(scale * math.cos(th)), round(scale * math.sin(th)))))
    return sorted(out)


def hard_directions_text(report: ClassificationReport) -> str:
    parts = [str(u) for u in report.hard_directions] + [str(a) for a in report.hard_arcs]
    return ", ".join(parts) if parts else "none"


__all__ = [
    "Arc", "BudgetError", "ClassificationReport", "CORPUS", "DifficultyBudget", "DifficultyValue",
    "EXPONENTS", "FamilyParseError", "Finite", "GrowthCertificate", "Infinite", "Semicircle",
    "StableSet", "Unknown", "UpdateFamily", "Zero", "candidate_semicircles", "classify",
    "coarse_class", "corpus_family", "critical_directions", "difficulty", "difficulty_rank",
    "family_difficulty", "is_stable", "load_family", "parse_family", "resolve_family",
    "stable_set", "verify_growth_certificate",
]
