# Index sets, truncation schedules and tilde-sums over spectral weights.
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import DomainError

logger = logging.getLogger(__name__)

# Vectorised weight law: (K, d) integer indices → (K,) nonnegative weights.
WeightLaw = Callable[[np.ndarray], np.ndarray]

# Series source: truncation level → (levels, numerators, denominators, exhausted).
TermSource = Callable[[int], tuple[np.ndarray, np.ndarray, np.ndarray, bool]]


# Enums

class Membership(str, Enum):
    positive_integers = "positive-integers"   # N^d, level = max n_i
    nonzero_lattice   = "nonzero-lattice"     # Z^d_*, level = max |n_i|
    explicit          = "explicit"            # finite list, level = position


class SumStatus(str, Enum):
    exact         = "exact"            # every index of a finite set summed
    converged     = "converged"        # tail policy fired
    not_converged = "not-converged"    # maximum truncation level reached first
    infinite      = "infinite"         # nonzero numerator over a zero denominator
    divergent     = "divergent"        # tail majorant of a divergent series


# ── Index sets ────────────────────────────────────────────────────────────────

def _lattice_shell(level: int, dim: int, signed: bool) -> np.ndarray:
    """Indices whose max-norm equals `level`, ordered by the first axis reaching it."""
    full = np.arange(1, level + 1)
    inner = np.arange(1, level)
    top = np.array([level])
    if signed:
        full = np.concatenate([-full[::-1], full])
        inner = np.concatenate([-inner[::-1], inner])
        top = np.array([-level, level])
    parts = []
    for axis in range(dim):
        axes = [inner] * axis + [top] + [full] * (dim - axis - 1)
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        parts.append(grid.reshape(-1, dim))
    return np.concatenate(parts).astype(np.int64)


@dataclass(frozen=True)
class IndexSet:
    """Countable index set with the nested truncation M_1 ⊆ M_2 ⊆ …"""
    dimension: int = 1
    membership: Membership = Membership.positive_integers
    entries: Optional[tuple[tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError(f"index dimension must be positive, got {self.dimension}")
        object.__setattr__(self, "membership", Membership(self.membership))
        if self.membership == Membership.explicit:
            if not self.entries:
                raise DomainError("an explicit index set needs at least one entry")
            entries = tuple(tuple(int(v) for v in np.atleast_1d(e)) for e in self.entries)
            if any(len(e) != self.dimension for e in entries):
                raise DomainError(f"explicit entries must have {self.dimension} components")
            if len(set(entries)) != len(entries):
                raise DomainError("explicit index set lists an index twice")
            object.__setattr__(self, "entries", entries)
        elif self.entries is not None:
            raise DomainError("entries are only accepted by explicit index sets")

    @property
    def is_finite(self) -> bool:
        return self.membership == Membership.explicit

    @property
    def size(self) -> Optional[int]:
        return len(self.entries) if self.is_finite else None

    def contains(self, n) -> bool:
        idx = tuple(int(v) for v in np.atleast_1d(n))
        if len(idx) != self.dimension:
            return False
        if self.membership == Membership.positive_integers:
            return all(v >= 1 for v in idx)
        if self.membership == Membership.nonzero_lattice:
            return all(v != 0 for v in idx)
        return idx in self.entries

    def level_of(self, n) -> int:
        if not self.contains(n):
            raise DomainError(f"index {n} is outside the {self.membership.value} index set")
        idx = tuple(int(v) for v in np.atleast_1d(n))
        if self.is_finite:
            return self.entries.index(idx) + 1
        return max(abs(v) for v in idx)

    def shell(self, level: int) -> np.ndarray:
        """M_level \\ M_{level-1} as a (K, d) integer array."""
        return self.block(level - 1, level)[0]

    def block(self, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices entering at levels lo+1..hi, with their levels."""
        if self.is_finite:
            hi = min(hi, len(self.entries))
            if hi <= lo:
                return np.empty((0, self.dimension), np.int64), np.empty(0, np.int64)
            idx = np.array(self.entries[lo:hi], dtype=np.int64).reshape(-1, self.dimension)
            return idx, np.arange(lo + 1, hi + 1, dtype=np.int64)

        signed = self.membership == Membership.nonzero_lattice
        if self.dimension == 1:
            values = np.arange(lo + 1, hi + 1, dtype=np.int64)
            if signed:
                idx = np.stack([-values, values], axis=1).reshape(-1, 1)
                return idx, np.repeat(values, 2)
            return values.reshape(-1, 1), values

        shells = [_lattice_shell(level, self.dimension, signed) for level in range(lo + 1, hi + 1)]
        if not shells:
            return np.empty((0, self.dimension), np.int64), np.empty(0, np.int64)
        levels = np.concatenate([np.full(len(s), lvl, np.int64) for lvl, s in zip(range(lo + 1, hi + 1), shells)])
        return np.concatenate(shells), levels

    def truncation(self, level: int) -> np.ndarray:
        return self.block(0, level)[0]

    def default_max_level(self) -> int:
        if self.is_finite:
            return len(self.entries)
        if settings.MAX_LEVEL > 0:
            return settings.MAX_LEVEL
        per_axis = settings.MAX_INDEX_POINTS ** (1.0 / self.dimension)
        if self.membership == Membership.nonzero_lattice:
            per_axis /= 2
        return max(int(per_axis), 8)


# ── Weights and tolerances ────────────────────────────────────────────────────

@dataclass(frozen=True)
class WeightVector:
    """Strictly positive weights h_0..h_m of the constraint operators."""
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if not vals:
            raise DomainError("weight vector is empty")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise DomainError(f"weight vector must be finite and strictly positive, got {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, h) -> "WeightVector":
        return h if isinstance(h, WeightVector) else cls(tuple(np.atleast_1d(np.asarray(h, dtype=float))))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def scaled(self, t: float) -> "WeightVector":
        return WeightVector(tuple(t * v for v in self.values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TailPolicy:
    """Stopping rule for leveled summation; `decay` is the per-level decay exponent of the terms."""
    rel_tol: float = field(default_factory=lambda: settings.TAIL_REL_TOL)
    max_level: Optional[int] = None
    min_level: int = field(default_factory=lambda: settings.MIN_LEVEL)
    decay: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise DomainError(f"relative tolerance must lie in (0, 1), got {self.rel_tol}")
        if self.min_level < 8:
            raise DomainError("the first checkpoint must be at level 8 or later")

    def with_decay(self, decay: Optional[float]) -> "TailPolicy":
        return self if self.decay is not None or decay is None else replace(self, decay=decay)

    def level_cap(self, index_set: IndexSet) -> int:
        cap = self.max_level or index_set.default_max_level()
        if index_set.is_finite:
            cap = min(cap, index_set.size)
        return cap


@dataclass(frozen=True)
class Growth:
    """Per-level power growth of a model: c ~ N^c, b_j ~ N^{b_j}, shell size ~ N^shell."""
    c: float
    b: tuple[float, ...]
    shell: float = 0.0

    def decay(self, numerator: float, denominator: float) -> float:
        return denominator - numerator - self.shell


@dataclass(frozen=True)
class ExtendedSum:
    """A finite nonnegative value or +∞, with how it was obtained."""
    value: float
    status: SumStatus = SumStatus.exact
    level: int = 0
    tail_bound: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "status", SumStatus(self.status))
        if math.isnan(self.value) or self.value < 0:
            raise DomainError(f"extended sums are nonnegative, got {self.value}")
        if math.isinf(self.value) != (self.status in (SumStatus.infinite, SumStatus.divergent)):
            raise DomainError(f"value {self.value} does not match status {self.status.value}")

    @classmethod
    def infinite(cls, level: int = 0, status: SumStatus = SumStatus.infinite) -> "ExtendedSum":
        return cls(math.inf, status, level)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def converged(self) -> bool:
        return self.status in (SumStatus.exact, SumStatus.converged)

    def sqrt(self) -> "ExtendedSum":
        if self.is_infinite:
            return self
        root = math.sqrt(self.value)
        bound = self.tail_bound / (2 * root) if root > 0 else math.sqrt(self.tail_bound)
        return replace(self, value=root, tail_bound=bound)

    def scaled(self, factor: float) -> "ExtendedSum":
        if self.is_infinite:
            return self
        return replace(self, value=self.value * factor, tail_bound=self.tail_bound * factor)

    def __float__(self) -> float:
        return self.value


# ── Spectral models ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class WeightTable:
    """Materialised weights of a model for the indices of M_level."""
    indices: np.ndarray
    levels: np.ndarray
    c: np.ndarray
    b: np.ndarray
    level: int
    exhausted: bool

    def upto(self, level: int) -> "WeightTable":
        if level >= self.level:
            return self
        stop = int(np.searchsorted(self.levels, level, side="right"))
        return WeightTable(self.indices[:stop], self.levels[:stop], self.c[:stop], self.b[:stop], level, False)

    def combined(self, h: WeightVector) -> np.ndarray:
        return self.b @ h.array


def _check_weights(values: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise DomainError(f"weights {name} must be finite and nonnegative")


class SpectralModel:
    """Nonnegative weights {c(n); b_0(n), …, b_m(n)} over an index set.

    c(n) stands for |⟨f, Ae_n⟩|² (or ‖Ae_n‖² for norm functionals) and b_j(n)
    for ‖B_j e_n‖². Weights are evaluated lazily and memoised per level.
    """

    def __init__(
        self,
        index_set: IndexSet,
        c: WeightLaw,
        b: Sequence[WeightLaw],
        *,
        growth: Optional[Growth] = None,
        orthogonal_images: bool = True,
        name: str = "model",
    ):
        if not b:
            raise DomainError("a spectral model needs at least one constraint operator")
        if growth is not None and len(growth.b) != len(b):
            raise DomainError("growth exponents must match the number of constraint operators")
        self.index_set = index_set
        self.growth = growth
        self.orthogonal_images = orthogonal_images
        self.name = name
        self._c = c
        self._b = tuple(b)
        self._lock = threading.Lock()
        self._table: Optional[WeightTable] = None

    def __repr__(self) -> str:
        return f"SpectralModel({self.name!r}, m={self.m}, index_set={self.index_set})"

    @property
    def m(self) -> int:
        return len(self._b) - 1

    @classmethod
    def from_entries(
        cls,
        indices: Sequence,
        c: Sequence[float],
        b: Sequence[Sequence[float]],
        *,
        orthogonal_images: bool = True,
        name: str = "explicit",
    ) -> "SpectralModel":
        """Finite model from explicit per-index values; b[i] lists b_0..b_m at indices[i]."""
        index_set = IndexSet(
            dimension=len(np.atleast_1d(indices[0])),
            membership=Membership.explicit,
            entries=tuple(tuple(np.atleast_1d(n)) for n in indices),
        )
        c_arr = np.asarray(c, dtype=float).reshape(-1)
        b_arr = np.asarray(b, dtype=float).reshape(len(c_arr), -1)
        if len(c_arr) != index_set.size:
            raise DomainError("explicit model needs one c value per index")
        _check_weights(c_arr, "c")
        _check_weights(b_arr, "b")
        lookup = {n: i for i, n in enumerate(index_set.entries)}

        def _rows(idx: np.ndarray) -> np.ndarray:
            return np.fromiter((lookup[tuple(int(v) for v in row)] for row in idx), dtype=np.int64, count=len(idx))

        laws = [lambda idx, j=j: b_arr[_rows(idx), j] for j in range(b_arr.shape[1])]
        return cls(index_set, lambda idx: c_arr[_rows(idx)], laws, orthogonal_images=orthogonal_images, name=name)

    def weights(self, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """c at the given (K, d) indices and the (K, m+1) matrix of b_j."""
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, self.index_set.dimension)
        c = np.asarray(self._c(indices), dtype=float).reshape(-1)
        b = np.column_stack([np.asarray(law(indices), dtype=float).reshape(-1) for law in self._b])
        b = b.reshape(len(indices), self.m + 1)
        _check_weights(c, "c")
        _check_weights(b, "b")
        return c, b

    def table(self, level: int) -> WeightTable:
        """Weights over M_level, grown from the memoised table when needed."""
        with self._lock:
            cached = self._table
            if cached is not None and (cached.level >= level or cached.exhausted):
                return cached.upto(level)
            start = 0 if cached is None else cached.level
            target = max(level, 2 * start)
            if self.index_set.is_finite:
                target = min(target, self.index_set.size)
            idx, lvl = self.index_set.block(start, target)
            c, b = self.weights(idx)
            if cached is not None:
                idx = np.concatenate([cached.indices, idx])
                lvl = np.concatenate([cached.levels, lvl])
                c = np.concatenate([cached.c, c])
                b = np.concatenate([cached.b, b])
            exhausted = self.index_set.is_finite and target >= self.index_set.size
            self._table = WeightTable(idx, lvl, c, b, target, exhausted)
            logger.debug("%s: weight table grown to level %d (%d indices)", self.name, target, len(lvl))
            return self._table.upto(level)


def combined_weight(model: SpectralModel, h, n) -> float:
    """b_{n,h} = Σ_j h_j b_j(n)."""
    h = WeightVector.of(h)
    if len(h) != model.m + 1:
        raise DomainError(f"weight vector has {len(h)} components, model needs {model.m + 1}")
    if not model.index_set.contains(n):
        raise DomainError(f"index {n} is outside the {model.index_set.membership.value} index set")
    _, b = model.weights(np.atleast_2d(np.asarray(n, dtype=np.int64)))
    return float(b[0] @ h.array)


# ── Leveled summation ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _TailVerdict:
    estimate: float
    bound: float
    divergent: bool


def _power_tail(block: float, lo: float, hi: float, q: float) -> float:
    """Tail beyond `hi` of a per-level power law N^{-q} that sums to `block` on (lo, hi]."""
    a, b = lo + 0.5, hi + 0.5
    return block * b ** (1 - q) / (a ** (1 - q) - b ** (1 - q))


def _block_ratio(lo: int, mid: int, hi: int, q: float) -> float:
    """Sum on (mid, hi] over sum on (lo, mid] for a per-level law N^{-q}."""
    a, b, c = lo + 0.5, mid + 0.5, hi + 0.5
    return (b ** (1 - q) - c ** (1 - q)) / (a ** (1 - q) - b ** (1 - q))


def _tail_verdict(totals: np.ndarray, top: int, decay: Optional[float]) -> _TailVerdict:
    """Estimate the tail beyond `top` from the last three doubling blocks of per-level totals."""
    q8, q4, q2 = top // 8, top // 4, top // 2
    recent = float(totals[q2 + 1: top + 1].sum())
    before = float(totals[q4 + 1: q2 + 1].sum())
    oldest = float(totals[q8 + 1: q4 + 1].sum())

    if decay is not None and math.isinf(decay):
        # finitely supported terms: done once two blocks come up empty
        return _TailVerdict(0.0, 0.0 if recent == 0.0 and before == 0.0 else math.inf, False)
    # Zero blocks certify nothing unless the model declares a convergent decay.
    if recent == 0.0 and before == 0.0:
        certified = decay is not None and decay > 1.0
        return _TailVerdict(0.0, 0.0 if certified else math.inf, False)
    if recent == 0.0 or before == 0.0:
        return _TailVerdict(0.0, math.inf, False)

    local = 1.0 - math.log2(recent / before)
    previous = 1.0 - math.log2(before / oldest) if oldest > 0 else None
    if decay is not None and decay <= 1.0:
        return _TailVerdict(math.inf, math.inf, True)
    if decay is None and local <= 1.001 and previous is not None and previous <= 1.001:
        return _TailVerdict(math.inf, math.inf, True)
    if decay is None and local <= 1.0:
        return _TailVerdict(0.0, math.inf, False)

    q = decay if decay is not None else local
    estimate = _power_tail(recent, q2, top, q)
    if decay is not None:
        fit_error = abs(recent / (before * _block_ratio(q4, q2, top, q)) - 1.0)
    elif previous is not None and previous > 1.0:
        fit_error = abs(_power_tail(recent, q2, top, previous) / estimate - 1.0)
    else:
        fit_error = math.inf
    return _TailVerdict(estimate, estimate * fit_error, False)


def _first_infinite(levels: np.ndarray, a: np.ndarray, b: np.ndarray) -> Optional[int]:
    bad = (b == 0.0) & (a != 0.0)
    return int(levels[bad].min()) if np.any(bad) else None


def _ratios(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.divide(a, b, out=np.zeros_like(a, dtype=float), where=b != 0.0)


def sum_terms(source: TermSource, policy: TailPolicy, cap: int) -> ExtendedSum:
    """Tilde-sum of a leveled series, doubling the truncation level until the tail policy fires."""
    level = min(policy.min_level, cap)
    while True:
        levels, a, b, exhausted = source(level)
        top = int(levels.max()) if exhausted and len(levels) else level
        first = _first_infinite(levels, a, b)
        if first is not None:
            return ExtendedSum.infinite(first)

        totals = np.bincount(levels, weights=_ratios(a, b), minlength=top + 1)
        partial = float(totals.sum())
        if exhausted:
            return ExtendedSum(partial, SumStatus.exact, top)

        verdict = _tail_verdict(totals, top, policy.decay)
        if verdict.divergent:
            logger.debug("series diverges (decay %s) at level %d", policy.decay, top)
            return ExtendedSum.infinite(top, SumStatus.divergent)
        value = partial + verdict.estimate
        logger.debug("level %d: partial %.17g, tail %.3g ± %.3g", top, partial, verdict.estimate, verdict.bound)
        if verdict.bound <= policy.rel_tol * value:
            return ExtendedSum(value, SumStatus.converged, top, verdict.bound)
        if level >= cap:
            logger.warning("tail policy not met by level %d (tail bound %.3g, value %.17g)", top, verdict.bound, value)
            return ExtendedSum(value, SumStatus.not_converged, top, verdict.bound)
        level = min(2 * level, cap)


def sup_terms(source: TermSource, policy: TailPolicy, cap: int) -> ExtendedSum:
    """Tilde-sup of a leveled family of ratios.

    With a declared positive decay the sup is certified once the last block stays
    below the running maximum; without one, once the maximum was reached within
    the first quarter of the levels scanned.
    """
    level = min(policy.min_level, cap)
    while True:
        levels, a, b, exhausted = source(level)
        top = int(levels.max()) if exhausted and len(levels) else level
        first = _first_infinite(levels, a, b)
        if first is not None:
            return ExtendedSum.infinite(first)

        peaks = np.zeros(top + 1)
        np.maximum.at(peaks, levels, _ratios(a, b))
        best = float(peaks.max())
        if exhausted:
            return ExtendedSum(best, SumStatus.exact, top)
        if policy.decay is not None and policy.decay < 0:
            return ExtendedSum.infinite(top, SumStatus.divergent)

        recent = float(peaks[top // 2 + 1:].max())
        settled = float(peaks[: top // 4 + 1].max())
        if policy.decay is not None and policy.decay > 0 and recent < best:
            return ExtendedSum(best, SumStatus.converged, top)
        if settled == best and recent < best:
            return ExtendedSum(best, SumStatus.converged, top)
        if level >= cap:
            logger.warning("supremum not certified by level %d (best %.17g)", top, best)
            return ExtendedSum(best, SumStatus.not_converged, top)
        level = min(2 * level, cap)


def _law_source(numerators: WeightLaw, denominators: WeightLaw, index_set: IndexSet) -> TermSource:
    def source(level: int):
        idx, levels = index_set.block(0, level)
        a = np.asarray(numerators(idx), dtype=float).reshape(-1)
        b = np.asarray(denominators(idx), dtype=float).reshape(-1)
        _check_weights(a, "numerators")
        _check_weights(b, "denominators")
        exhausted = index_set.is_finite and level >= index_set.size
        return levels, a, b, exhausted
    return source


def tilde_sum(
    numerators: WeightLaw,
    denominators: WeightLaw,
    index_set: IndexSet,
    policy: Optional[TailPolicy] = None,
) -> ExtendedSum:
    """~Σ a_n/b_n: +∞ if some a_n ≠ 0 meets b_n = 0, else the sum over b_n ≠ 0."""
    policy = policy or TailPolicy()
    return sum_terms(_law_source(numerators, denominators, index_set), policy, policy.level_cap(index_set))


def tilde_sup(
    numerators: WeightLaw,
    denominators: WeightLaw,
    index_set: IndexSet,
    policy: Optional[TailPolicy] = None,
) -> ExtendedSum:
    """~sup a_n/b_n with the same +∞ convention as tilde_sum."""
    policy = policy or TailPolicy()
    return sup_terms(_law_source(numerators, denominators, index_set), policy, policy.level_cap(index_set))


# ── Model-level helpers ───────────────────────────────────────────────────────

def model_source(models: Sequence[SpectralModel], terms: Callable[..., tuple[np.ndarray, np.ndarray]]) -> TermSource:
    """Series source over models sharing one index set; `terms` maps their tables to (a, b)."""
    def source(level: int):
        tables = [model.table(level) for model in models]
        a, b = terms(*tables)
        return tables[0].levels, a, b, tables[0].exhausted
    return source


def model_sum(
    models: Sequence[SpectralModel],
    terms: Callable[..., tuple[np.ndarray, np.ndarray]],
    policy: Optional[TailPolicy] = None,
    decay: Optional[float] = None,
) -> ExtendedSum:
    policy = (policy or TailPolicy()).with_decay(decay)
    return sum_terms(model_source(models, terms), policy, policy.level_cap(models[0].index_set))


def model_sup(
    models: Sequence[SpectralModel],
    terms: Callable[..., tuple[np.ndarray, np.ndarray]],
    policy: Optional[TailPolicy] = None,
    decay: Optional[float] = None,
) -> ExtendedSum:
    policy = (policy or TailPolicy()).with_decay(decay)
    return sup_terms(model_source(models, terms), policy, policy.level_cap(models[0].index_set))


def check_weight_vector(model: SpectralModel, h) -> WeightVector:
    h = WeightVector.of(h)
    if len(h) != model.m + 1:
        raise DomainError(f"weight vector has {len(h)} components, model needs {model.m + 1}")
    return h


def convergence_curve(model: SpectralModel, h, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial sums of ~Σ c/b_{·,h} over M_1..M_level; +∞ from the first level meeting a zero denominator."""
    h = check_weight_vector(model, h)
    table = model.table(level)
    bh = table.combined(h)
    top = min(level, table.level)
    totals = np.bincount(table.levels, weights=_ratios(table.c, bh), minlength=top + 1)[1: top + 1]
    curve = np.cumsum(totals)
    first = _first_infinite(table.levels, table.c, bh)
    if first is not None:
        curve[first - 1:] = math.inf
    return np.arange(1, top + 1), curve
