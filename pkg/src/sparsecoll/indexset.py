"""Multi-indices, summability weights and thresholded index sets.

A plan is a finite set of pairs (k, s): spatial level k and parametric
multi-index s.  Plans are built by thresholding weight sequences sigma_{r;s}
(lognormal inputs) or beta_{r;s} (affine inputs) against a parameter xi.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping

import numpy as np

from .nodes import ZERO_KEY
from .orthopoly import jacobi_norm_constant

__all__ = [
    "MultiIndex",
    "WeightSpec",
    "IndexPlan",
    "BudgetError",
    "ClosureError",
    "sigma",
    "sigma_literal",
    "beta_affine",
    "p_weight",
    "theta_for",
    "eta_for",
    "SummabilityCertificate",
    "summability_check",
    "level_condition",
    "build_G",
    "build_Lambda",
    "restrict_even",
    "is_downward_closed",
    "calibrate_xi",
    "plan_cost",
    "grid_of",
    "Grid",
    "point_id",
    "tensor_points",
    "gamma_levels",
    "DEFAULT_CAP",
    "EPSILON",
]

DEFAULT_CAP = 10_000_000
J_MAX = 512
# epsilon in the tau + epsilon exponents; any positive value is admissible
EPSILON = 0.05


class BudgetError(RuntimeError):
    """An index set or tensor rule would exceed its configured size cap."""


class ClosureError(ValueError):
    """An index set required to be downward closed is not."""


# --- multi-indices ----------------------------------------------------------


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Finitely supported index s = (s_1, s_2, ...), dimensions counted from 1.

    Stored as sorted (j, s_j) pairs with no zero entries.
    """

    items: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for j, v in self.items:
            if j < 1 or v <= 0:
                raise ValueError(f"invalid entry ({j}, {v}) in multi-index")

    @classmethod
    def from_dense(cls, values: Iterable[int]) -> "MultiIndex":
        return cls(tuple((j + 1, int(v)) for j, v in enumerate(values) if v))

    @classmethod
    def from_dict(cls, mapping: Mapping) -> "MultiIndex":
        return cls(tuple(sorted((int(j), int(v)) for j, v in mapping.items() if int(v))))

    @classmethod
    def unit(cls, j: int, n: int = 1) -> "MultiIndex":
        return cls(((j, n),)) if n else cls()

    def __getitem__(self, j: int) -> int:
        for d, v in self.items:
            if d == j:
                return v
        return 0

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)

    def __repr__(self) -> str:
        return "s{" + ", ".join(f"{j}:{v}" for j, v in self.items) + "}"

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.items)

    @property
    def max_dim(self) -> int:
        return self.items[-1][0] if self.items else 0

    @property
    def order(self) -> int:
        return sum(v for _, v in self.items)

    def shift(self, j: int, inc: int = 1) -> "MultiIndex":
        d = dict(self.items)
        v = d.get(j, 0) + inc
        if v < 0:
            raise ValueError("negative component")
        if v:
            d[j] = v
        else:
            d.pop(j, None)
        return MultiIndex(tuple(sorted(d.items())))

    def dense(self, J: int) -> tuple[int, ...]:
        out = [0] * J
        for j, v in self.items:
            if j > J:
                raise ValueError(f"dimension {j} beyond J={J}")
            out[j - 1] = v
        return tuple(out)

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def leq(self, other: "MultiIndex") -> bool:
        """Componentwise s <= s'."""
        return all(v <= other[j] for j, v in self.items)

    def is_even(self) -> bool:
        return all(v % 2 == 0 for _, v in self.items)

    def in_F_nu(self, nu: int) -> bool:
        """Every component is 0 or >= nu."""
        return all(v >= nu for _, v in self.items)


ZERO = MultiIndex()


# --- weights ----------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Growth sequence rho_j > 1 with cap eta, exponent q and input mode.

    rho_j = scale * j**kappa, or the explicit ``values`` when given.  Dimensions
    beyond ``dims`` carry rho = inf, i.e. they never enter an index set.
    """

    scale: float = 2.0
    kappa: float = 1.0
    eta: int = 1
    q: float = 1.0
    mode: str = "lognormal"
    a: float = 0.0
    dims: int | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("lognormal", "affine"):
            raise ValueError(f"mode must be lognormal or affine, got {self.mode!r}")
        if self.eta < 1:
            raise ValueError("eta must be a positive integer")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.mode == "affine" and not self.a > -1:
            raise ValueError(f"Jacobi parameter must exceed -1, got {self.a}")
        if self.values is not None:
            vals = np.asarray(self.values, dtype=float)
            if np.any(vals <= 1) or np.any(np.diff(vals) < 0):
                raise ValueError("rho values must exceed 1 and be nondecreasing")
        elif not (self.scale > 1 and self.kappa >= 0):
            raise ValueError("rho_j = scale * j**kappa needs scale > 1, kappa >= 0")

    @property
    def max_dim(self) -> int:
        n = J_MAX if self.dims is None else self.dims
        if self.values is not None:
            n = min(n, len(self.values))
        return n

    def rho(self, j: int) -> float:
        if j < 1:
            raise ValueError("dimensions start at 1")
        if j > self.max_dim:
            return math.inf
        if self.values is not None:
            return float(self.values[j - 1])
        return self.scale * j**self.kappa

    def weight(self, s: MultiIndex) -> float:
        """sigma_s (lognormal) or beta_s (affine)."""
        return sigma(s, self) if self.mode == "lognormal" else beta_affine(s, self)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("scale", "kappa", "eta", "q", "mode", "a", "dims")}
        d["values"] = list(self.values) if self.values is not None else None
        return d


@lru_cache(maxsize=None)
def _sigma_factor(spec: WeightSpec, j: int, n: int) -> float:
    """sum_{k <= min(eta, n)} C(n, k) rho_j^{2k}."""
    rho2 = spec.rho(j) ** 2
    if math.isinf(rho2):
        return math.inf
    total = 0.0
    for k in range(min(spec.eta, n) + 1):
        total += math.comb(n, k) * rho2**k
    return total


def sigma(s: MultiIndex, spec: WeightSpec) -> float:
    """sigma_s = sqrt(prod_j sum_{k <= min(eta, s_j)} C(s_j, k) rho_j^{2k})."""
    sq = 1.0
    for j, v in s:
        sq *= _sigma_factor(spec, j, v)
    if math.isinf(sq) and all(j <= spec.max_dim for j in s.support):
        raise OverflowError(f"sigma^2 overflows for {s}")
    return math.sqrt(sq)


def sigma_literal(s: MultiIndex, spec: WeightSpec) -> float:
    """sigma_s from the unfactored sum over all s' <= s with max_j s'_j <= eta."""
    dims = s.support
    ranges = [range(min(spec.eta, s[j]) + 1) for j in dims]
    total = 0.0
    for sp in _product(ranges):
        term = 1.0
        for j, k in zip(dims, sp):
            term *= math.comb(s[j], k) * spec.rho(j) ** (2 * k)
        total += term
    return math.sqrt(total)


def _product(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


def beta_affine(s: MultiIndex, spec: WeightSpec) -> float:
    """beta_s = rho^s prod_j c_{s_j}^{a,a}."""
    if spec.mode != "affine":
        raise ValueError("beta weights need an affine WeightSpec")
    out = 1.0
    for j, v in s:
        out *= spec.rho(j) ** v * jacobi_norm_constant(v, spec.a, spec.a)
    return out


def p_weight(s: MultiIndex, theta: float, lam: float) -> float:
    """p_s(theta, lambda) = prod_j (1 + lambda s_j)^theta."""
    if theta < 0 or lam < 0:
        raise ValueError("theta and lambda must be nonnegative")
    out = 1.0
    for _, v in s:
        out *= (1.0 + lam * v) ** theta
    return out


def theta_for(tau: float, eps: float = EPSILON) -> float:
    """theta = tau + eps + 5/4, the exponent attached to a node family."""
    return tau + eps + 1.25


def eta_for(nu: int, theta: float, q: float) -> int:
    """Smallest integer eta with eta > 2 nu (theta + 1) / q."""
    return math.floor(2 * nu * (theta + 1) / q) + 1


# --- summability ------------------------------------------------------------


@dataclass
class SummabilityCertificate:
    value: float
    factors: list[float]
    tail_bound: float
    converged: bool
    warning: str | None = None

    @property
    def upper_bound(self) -> float:
        return self.value * self.tail_bound


def _B_factor(rho: float, eta: int, nu: int, theta: float, lam: float, q: float) -> float:
    # sum over n in {0, nu, nu+1, ...} of (1 + lam n)^theta * (sigma_n^2)^(-q / (2 nu))
    total = 1.0
    n = nu
    small = 0
    while n < 100_000:
        s2 = sum(math.comb(n, k) * rho ** (2 * k) for k in range(min(eta, n) + 1))
        term = (1.0 + lam * n) ** theta * s2 ** (-q / (2 * nu))
        total += term
        small = small + 1 if term < 1e-16 * total else 0
        if small >= 3:
            break
        n += 1
    return total


def summability_check(
    spec: WeightSpec, nu: int, theta: float, lam: float, q: float | None = None, J_tail: int = 64
) -> SummabilityCertificate:
    """Evaluate sum_{s in F_nu} p_s(theta, lam) sigma_s^{-q/nu} as prod_j B_j.

    The product is truncated at J_tail; the remaining factors are bounded by
    prod_{j > J_tail} (1 + C rho_j^{-q}) with C fitted on the computed factors
    and rho_j^{-q} extrapolated from a power-law fit of the last computed rho.
    """
    q = spec.q if q is None else q
    warning = None
    if not spec.eta > 2 * nu * (theta + 1) / q:
        warning = f"eta={spec.eta} <= 2 nu (theta+1)/q = {2 * nu * (theta + 1) / q:.4g}: sum may diverge"
    J = min(J_tail, spec.max_dim)
    factors = [_B_factor(spec.rho(j), spec.eta, nu, theta, lam, q) for j in range(1, J + 1)]
    value = float(np.prod(factors))
    tail = 1.0
    if spec.max_dim > J and J >= 4:
        rho = np.array([spec.rho(j) for j in range(1, J + 1)])
        consts = (np.array(factors) - 1.0) * rho**q
        C = float(consts[J // 2 :].max())
        jj = np.arange(J // 2, J + 1)
        slope, icpt = np.polyfit(np.log(jj), np.log(rho[J // 2 - 1 :]), 1)
        decay = q * slope
        if decay > 1:
            # sum_{j > J} exp(icpt q) j^{-decay} <= integral from J
            tail_sum = math.exp(-q * icpt) * J ** (1 - decay) / (decay - 1)
            tail = math.exp(min(C * tail_sum, 700.0))
            if C * tail_sum > 700.0:
                tail = math.inf
        else:
            tail = math.inf
            warning = warning or "rho^{-q} tail not summable under the fitted growth"
    elif spec.max_dim > J:
        tail = math.inf
    converged = warning is None and math.isfinite(value) and math.isfinite(tail)
    return SummabilityCertificate(value, factors, tail, converged, warning)


# --- plans ------------------------------------------------------------------


@dataclass(frozen=True)
class IndexPlan:
    """Finite set of (level, multi-index) pairs with its construction metadata.

    Parametric-only plans (Lambda sets) store every entry at level 0 and use
    regime ``"parametric"``.
    """

    entries: tuple[tuple[int, MultiIndex], ...]
    xi: float
    regime: str = "parametric"
    parity: str = "all"
    visited: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(sorted(set(self.entries))))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __contains__(self, item) -> bool:
        return item in self._entry_set

    @property
    def _entry_set(self) -> frozenset:
        return frozenset(self.entries)

    @property
    def levels(self) -> list[int]:
        return sorted({k for k, _ in self.entries})

    def slice(self, k: int) -> list[MultiIndex]:
        return [s for kk, s in self.entries if kk == k]

    def slices(self) -> dict[int, list[MultiIndex]]:
        out: dict[int, list[MultiIndex]] = {}
        for k, s in self.entries:
            out.setdefault(k, []).append(s)
        return out

    @property
    def multi_indices(self) -> list[MultiIndex]:
        """Union of all slices (Lambda_0 for nested plans)."""
        return sorted({s for _, s in self.entries})

    @property
    def max_level(self) -> int:
        return max((k for k, _ in self.entries), default=-1)

    @property
    def max_dim(self) -> int:
        return max((s.max_dim for _, s in self.entries), default=0)

    @property
    def cardinality(self) -> int:
        return len(self.entries)

    @property
    def dyadic_dim(self) -> int:
        return sum(2**k for k, _ in self.entries)

    def to_json_dict(self) -> dict:
        return {
            "regime": self.regime,
            "parity": self.parity,
            "xi": self.xi,
            "entries": [
                {"k": k, "s": {str(j): v for j, v in s}} for k, s in self.entries
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_json_dict(), **kw)

    @classmethod
    def from_json(cls, text: str | dict) -> "IndexPlan":
        d = json.loads(text) if isinstance(text, str) else text
        entries = tuple((int(e["k"]), MultiIndex.from_dict(e["s"])) for e in d["entries"])
        return cls(entries, float(d["xi"]), d.get("regime", "parametric"), d.get("parity", "all"))


def is_downward_closed(indices: Iterable[MultiIndex], step: int = 1) -> bool:
    """Closure under s -> s - step*e_j (step 2 for sets inside F_ev)."""
    pool = set(indices)
    for s in pool:
        for j, v in s:
            if v >= step and s.shift(j, -step) not in pool:
                return False
            if 0 < v < step:
                return False
    return True


def level_condition(regime: str, alpha: float, spec1: WeightSpec, spec2: WeightSpec, xi: float):
    """Return cond(k, s) for membership (k, s) in G(xi).

    expansion:      2^k s2^q2 <= xi                       if alpha <= 1/q2
                    s1^q1 <= xi and 2^(alpha q1 k) s2^q1 <= xi   otherwise
    interpolation:  2^k s2^q2 <= xi                       if alpha <= 1/q2 - 1/2
                    s1^q1 <= xi and 2^((alpha+1/2) k) s2 <= xi^vartheta  otherwise
    with vartheta = 1/q1 + (1/q1 - 1/q2) / (2 alpha).
    """
    q1, q2 = spec1.q, spec2.q
    if q1 > q2:
        raise ValueError(f"need q1 <= q2, got {q1} > {q2}")
    w1, w2 = spec1.weight, spec2.weight

    if regime == "expansion":
        if alpha <= 1 / q2:
            return lambda k, s: 2.0**k * w2(s) ** q2 <= xi
        return lambda k, s: w1(s) ** q1 <= xi and 2.0 ** (alpha * q1 * k) * w2(s) ** q1 <= xi
    if regime == "interpolation":
        if alpha <= 1 / q2 - 0.5:
            return lambda k, s: 2.0**k * w2(s) ** q2 <= xi
        vartheta = 1 / q1 + (1 / q1 - 1 / q2) / (2 * alpha)
        bound = xi**vartheta
        return lambda k, s: w1(s) ** q1 <= xi and 2.0 ** ((alpha + 0.5) * k) * w2(s) <= bound
    raise ValueError(f"unknown regime {regime!r}")


def _walk(pred: Callable[[MultiIndex], bool], step: int, max_dim: int, cap: int):
    """All s (components multiples of step) with pred(s), for a downward
    closed pred that is also monotone in the dimension index.

    Each s is reached once, from s - step*e_{max_dim(s)}; children of s are
    s + step*e_d with d >= max_dim(s).  For d beyond the support the
    candidates only get heavier as d grows, so the first failure ends the scan.
    """
    out: list[MultiIndex] = []
    visited = 0
    if not pred(ZERO):
        return out, 1
    stack = [ZERO]
    while stack:
        s = stack.pop()
        out.append(s)
        if len(out) > cap:
            raise BudgetError(f"index set exceeds cap of {cap} entries")
        top = s.max_dim
        if top:
            visited += 1
            t = s.shift(top, step)
            if pred(t):
                stack.append(t)
        d = top + 1
        while True:
            if d > max_dim:
                if d > J_MAX:
                    raise BudgetError(f"index set reaches dimension {d} > J_max={J_MAX}")
                break
            visited += 1
            t = s.shift(d, step)
            if not pred(t):
                break
            stack.append(t)
            d += 1
    return out, visited


def build_G(
    xi: float,
    alpha: float,
    spec1: WeightSpec,
    spec2: WeightSpec,
    regime: str = "expansion",
    parity: str = "all",
    cap: int = DEFAULT_CAP,
) -> IndexPlan:
    """G(xi) for the given regime; with parity="even", G_ev(xi) = G(xi) cap (N_0 x F_ev)."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    cond = level_condition(regime, alpha, spec1, spec2, xi)
    step = 2 if parity == "even" else 1
    max_dim = min(spec1.max_dim, spec2.max_dim)
    lam0, visited = _walk(lambda s: cond(0, s), step, max_dim, cap)
    entries = []
    for s in lam0:
        k = 0
        while cond(k, s):
            entries.append((k, s))
            k += 1
            visited += 1
            if len(entries) > cap:
                raise BudgetError(f"plan exceeds cap of {cap} entries")
    return IndexPlan(tuple(entries), xi, regime, parity, visited)


def build_Lambda(xi: float, spec: WeightSpec, parity: str = "all", cap: int = DEFAULT_CAP) -> IndexPlan:
    """Lambda(xi) = {s : weight_s^q <= xi}, or its even part."""
    if not xi > 0:
        raise ValueError("xi must be positive")
    step = 2 if parity == "even" else 1
    w, q = spec.weight, spec.q
    lam, visited = _walk(lambda s: w(s) ** q <= xi, step, spec.max_dim, cap)
    return IndexPlan(tuple((0, s) for s in lam), xi, "parametric", parity, visited)


def restrict_even(plan: IndexPlan) -> IndexPlan:
    entries = tuple((k, s) for k, s in plan.entries if s.is_even())
    return IndexPlan(entries, plan.xi, plan.regime, "even", plan.visited)


# --- grids ------------------------------------------------------------------


@dataclass
class Grid:
    """Deduplicated parametric points; ids are tuples of (dimension, node key)."""

    ids: list[tuple]
    coords: np.ndarray  # shape (len(ids), J)

    def __len__(self) -> int:
        return len(self.ids)

    def index(self) -> dict[tuple, int]:
        return {pid: i for i, pid in enumerate(self.ids)}


def point_id(t: MultiIndex, m: tuple[int, ...], family) -> tuple:
    """Identity of y_{t;m}; m runs over the support of t in order."""
    out = []
    for (j, lev), mj in zip(t.items, m):
        key = family.key(lev, mj)
        if key != ZERO_KEY:
            out.append((j, key))
    return tuple(out)


def tensor_points(t: MultiIndex, family):
    """Yield (m, id, {j: coordinate}) for every point of the tensor grid of level t."""
    seqs = [family.sequence(lev) for _, lev in t.items]
    for m in _product([range(len(sq)) for sq in seqs]):
        coords = {j: float(sq.points[mj]) for (j, _), sq, mj in zip(t.items, seqs, m)}
        yield m, point_id(t, m, family), coords


def gamma_levels(s: MultiIndex, step: int = 1) -> list[MultiIndex]:
    """Levels s - step*e, e in E_s (e_j in {0,1} on the support of s), negatives dropped."""
    out = []
    for e in _product([(0, 1)] * len(s)):
        lev = [(j, v - step * ej) for (j, v), ej in zip(s.items, e)]
        if all(v >= 0 for _, v in lev):
            out.append(MultiIndex(tuple((j, v) for j, v in lev if v)))
    return out


def grid_of(indices, family, J: int | None = None, step: int | None = None) -> Grid:
    """Gamma(Lambda): union over s of the tensor grids of the levels s - step*e.

    ``step`` defaults to 2 for even-parity plans (the levels their quadrature
    actually touches) and 1 otherwise.
    """
    if isinstance(indices, IndexPlan):
        if step is None:
            step = 2 if indices.parity == "even" else 1
        indices = indices.multi_indices
    step = step or 1
    indices = list(indices)
    found: dict[tuple, dict[int, float]] = {}
    seen_levels: set[MultiIndex] = set()
    for s in indices:
        for t in gamma_levels(s, step):
            if t in seen_levels:
                continue
            seen_levels.add(t)
            for _, pid, coords in tensor_points(t, family):
                found.setdefault(pid, coords)
    if J is None:
        J = max((s.max_dim for s in indices), default=0)
    ids = sorted(found, key=repr)
    coords = np.zeros((len(ids), J))
    for i, pid in enumerate(ids):
        for j, c in found[pid].items():
            coords[i, j - 1] = c
    return Grid(ids, coords)


# --- calibration ------------------------------------------------------------


def plan_cost(plan: IndexPlan, cost: str, family=None) -> int:
    if cost == "cardinality":
        return plan.cardinality
    if cost == "dyadic_dim":
        return plan.dyadic_dim
    if cost == "grid_points":
        if family is None:
            raise ValueError("grid_points cost needs a node family")
        return len(grid_of(plan, family))
    raise ValueError(f"unknown cost functional {cost!r}")


def calibrate_xi(n: int, cost: str, builder: Callable[[float], IndexPlan], family=None,
                 steps: int = 60) -> tuple[float, IndexPlan]:
    """Largest tested xi whose plan cost is <= n.

    Brackets by doubling/halving from xi = 1, then bisects (geometrically) the
    bracket ``steps`` times.
    """
    if n < 1:
        raise ValueError("budget must be >= 1")
    memo: dict[float, tuple[int, IndexPlan | None]] = {}

    def evaluate(xi):
        if xi not in memo:
            try:
                plan = builder(xi)
                memo[xi] = (plan_cost(plan, cost, family), plan)
            except BudgetError:
                memo[xi] = (math.inf, None)
        return memo[xi]

    lo, hi = 1.0, None
    while evaluate(lo)[0] > n:
        hi = lo
        lo /= 2.0
        if lo < 1e-12:
            break
    if hi is None:
        hi = lo * 2.0
        while evaluate(hi)[0] <= n:
            lo, hi = hi, hi * 2.0
            if hi > 1e300:
                raise BudgetError("budget never exceeded; plan cost does not grow with xi")
    for _ in range(steps):
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if evaluate(mid)[0] <= n:
            lo = mid
        else:
            hi = mid
    c, plan = evaluate(lo)
    if plan is None or c > n:
        plan = IndexPlan((), lo, "parametric")
    return lo, plan
