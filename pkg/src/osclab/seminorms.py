"""Variation, oscillation and jump-counting seminorms of finite families.

A :class:`ParamFamily` is a finite family ``(a_t : t in I)`` with ``I`` a
finite subset of ``Q^k``.  Index coordinates are stored as exact
:class:`fractions.Fraction` values so that ordering and box membership are
decided without rounding; family values are double precision (real or
complex).

Every seminorm comes with an exhaustive ``*_bruteforce`` counterpart that is
used as a test oracle.  Those enumerate subsequences and refuse inputs with
more than 20 indices.
"""

from __future__ import annotations

import contextlib
import contextvars
import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

__all__ = [
    "DomainError",
    "ParamFamily",
    "IncreasingSequence",
    "SeminormValue",
    "CertificateReport",
    "MUTATIONS",
    "mutation",
    "to_fraction",
    "variation",
    "variation_bruteforce",
    "oscillation",
    "oscillation_terms",
    "sup_oscillation",
    "sup_oscillation_bruteforce",
    "sup_oscillation_multiparam",
    "sup_oscillation_multiparam_bruteforce",
    "jump_count",
    "jump_count_bruteforce",
    "overlap_jump_count",
    "overlap_jump_count_bruteforce",
    "diagonal_embed",
    "convergence_certificate",
    "read_family_csv",
    "read_family_json",
]

BRUTEFORCE_LIMIT = 20

# Seeded defects used as negative controls by the verification harness.
MUTATIONS = ("block_off_by_one", "non_strict_sequence", "empty_sup")
_MUTATION: contextvars.ContextVar[str | None] = contextvars.ContextVar("osclab_mutation", default=None)


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


@contextlib.contextmanager
def mutation(name: str | None):
    """Activate one of :data:`MUTATIONS` inside the ``with`` block."""
    if name is not None and name not in MUTATIONS:
        raise ValueError(f"unknown mutation {name!r}; expected one of {MUTATIONS}")
    token = _MUTATION.set(name)
    try:
        yield
    finally:
        _MUTATION.reset(token)


def to_fraction(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float.

    Floats go through ``repr`` so that ``0.1`` means one tenth.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise DomainError(f"index coordinate must be finite, got {x!r}")
        return Fraction(repr(float(x)))
    raise TypeError(f"cannot interpret {x!r} as an exact index coordinate")


def _as_point(t) -> tuple[Fraction, ...]:
    if isinstance(t, (tuple, list, np.ndarray)):
        return tuple(to_fraction(c) for c in t)
    return (to_fraction(t),)


def _fmt_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class ParamFamily:
    """Finite family of scalars indexed by a finite set of points in ``Q^k``.

    Points are kept in lexicographic order, which for ``k = 1`` is the total
    order of the index set.  ``ranks[i, c]`` is the position of coordinate
    ``c`` of point ``i`` among the distinct values of that coordinate, so
    coordinatewise comparisons reduce to integer comparisons.
    """

    def __init__(self, index: Iterable, values: Sequence | np.ndarray):
        points = [_as_point(t) for t in index]
        vals = np.asarray(values)
        if vals.ndim != 1 or len(points) != vals.shape[0]:
            raise DomainError("index and values must have the same length")
        if len(points) < 2:
            raise DomainError("a family needs at least two indices")
        k = len(points[0])
        if k < 1 or any(len(p) != k for p in points):
            raise DomainError("all index points must have the same dimension")
        if len(set(points)) != len(points):
            raise DomainError("index set contains duplicates")
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        order = sorted(range(len(points)), key=lambda i: points[i])
        self.points: tuple[tuple[Fraction, ...], ...] = tuple(points[i] for i in order)
        self.values: np.ndarray = vals[order]
        self.values.setflags(write=False)
        self.k = k
        ranks = np.empty((len(points), k), dtype=np.int64)
        for c in range(k):
            levels = sorted({p[c] for p in self.points})
            pos = {q: i for i, q in enumerate(levels)}
            ranks[:, c] = [pos[p[c]] for p in self.points]
        self.ranks = ranks
        self._position = {p: i for i, p in enumerate(self.points)}

    @classmethod
    def from_sequence(cls, values, start: int = 0) -> "ParamFamily":
        """Family indexed by consecutive integers ``start, start + 1, ...``."""
        return cls(range(start, start + len(values)), values)

    @classmethod
    def from_grid(cls, axes: Sequence[Sequence], values) -> "ParamFamily":
        """Family on the product grid ``axes[0] x ... x axes[k-1]``.

        ``values`` has shape ``(len(axes[0]), ..., len(axes[k-1]))``.
        """
        arr = np.asarray(values)
        shape = tuple(len(a) for a in axes)
        if arr.shape != shape:
            raise DomainError(f"values of shape {arr.shape} do not match grid {shape}")
        pts = list(itertools.product(*axes))
        return cls(pts, arr.reshape(-1))

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"ParamFamily(k={self.k}, n={len(self)})"

    @property
    def coords(self) -> tuple[Fraction, ...]:
        """Index values of a one-parameter family."""
        self._require_k1()
        return tuple(p[0] for p in self.points)

    def position(self, t) -> int:
        try:
            return self._position[_as_point(t)]
        except KeyError:
            raise DomainError(f"{t!r} is not in the index set") from None

    def value_at(self, t):
        return self.values[self.position(t)]

    def restrict(self, subset: Iterable) -> "ParamFamily":
        pos = sorted(self.position(t) for t in subset)
        return ParamFamily([self.points[i] for i in pos], self.values[pos])

    def with_values(self, values) -> "ParamFamily":
        """Same index set with new values (given in this family's point order)."""
        return ParamFamily(self.points, values)

    def _require_k1(self):
        if self.k != 1:
            raise DomainError(f"operation needs a one-parameter family, got k={self.k}")

    def _format_point(self, i: int):
        p = self.points[i]
        if self.k == 1:
            return _fmt_fraction(p[0])
        return [_fmt_fraction(c) for c in p]


@dataclass(frozen=True)
class IncreasingSequence:
    """Sequence ``I_0 < I_1 < ... < I_J`` strictly increasing in every coordinate."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __init__(self, entries: Iterable):
        pts = tuple(_as_point(t) for t in entries)
        if len(pts) < 2:
            raise DomainError("an increasing sequence needs J >= 1, i.e. at least two entries")
        k = len(pts[0])
        if any(len(p) != k for p in pts):
            raise DomainError("sequence entries must have the same dimension")
        strict = _MUTATION.get() != "non_strict_sequence"
        for a, b in zip(pts, pts[1:]):
            ok = all(x < y for x, y in zip(a, b)) if strict else all(x <= y for x, y in zip(a, b))
            if not ok:
                raise DomainError(f"sequence is not strictly increasing at {a} -> {b}")
        object.__setattr__(self, "entries", pts)

    @property
    def J(self) -> int:
        return len(self.entries) - 1

    @property
    def k(self) -> int:
        return len(self.entries[0])

    def boxes(self) -> list[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
        """Half-open boxes ``[I_j, I_{j+1})`` as (lower corner, upper corner) pairs."""
        return list(zip(self.entries, self.entries[1:]))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class SeminormValue:
    kind: str
    parameter: float
    value: float
    witness: list | None = None
    exact: bool = True

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"seminorm value must be nonnegative, got {self.value}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "parameter": self.parameter,
            "value": self.value,
            "witness": self.witness,
            "exact": self.exact,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _check_r(r: float):
    if not (math.isfinite(r) and r >= 1):
        raise DomainError(f"exponent r must be a finite real >= 1, got {r}")


def _check_lambda(lam: float):
    if not (math.isfinite(lam) and lam > 0):
        raise DomainError(f"jump size must be positive, got {lam}")


# ---------------------------------------------------------------------------
# r-variation
# ---------------------------------------------------------------------------


def variation(fam: ParamFamily, r: float) -> SeminormValue:
    """r-variation by dynamic programming over chain suffixes, O(n^2).

    ``g[i]`` is the best sum of ``|increment|^r`` over chains starting at
    ``i``; the witness is the lexicographically first optimal chain.
    """
    _check_r(r)
    fam._require_k1()
    a = fam.values
    n = len(a)
    g = np.zeros(n)
    nxt = np.full(n, -1)
    for i in range(n - 2, -1, -1):
        cand = np.abs(a[i + 1:] - a[i]) ** r + g[i + 1:]
        j = int(np.argmax(cand))
        if cand[j] > 0:
            g[i] = cand[j]
            nxt[i] = i + 1 + j
    start = int(np.argmax(g))
    if g[start] == 0:
        chain = [0, 1]
    else:
        chain = [start]
        while nxt[chain[-1]] >= 0:
            chain.append(int(nxt[chain[-1]]))
    return SeminormValue("variation", r, float(g[start] ** (1.0 / r)),
                         [fam._format_point(i) for i in chain])


@lru_cache(maxsize=None)
def _chain_incidence(n: int, max_len: int):
    """Sparse map from increasing subsequences to their consecutive pairs.

    Row ``s`` has a one at column ``i*n + j`` for every consecutive pair of
    subsequence ``s``; ``sizes[s]`` is its length.
    """
    rows, cols, sizes, subsets = [], [], [], []
    s = 0
    for size in range(2, max_len + 1):
        for comb in itertools.combinations(range(n), size):
            for i, j in zip(comb, comb[1:]):
                rows.append(s)
                cols.append(i * n + j)
            sizes.append(size)
            subsets.append(comb)
            s += 1
    mat = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(s, n * n))
    return mat, np.array(sizes), subsets


def _bruteforce_guard(fam: ParamFamily):
    if len(fam) > BRUTEFORCE_LIMIT:
        raise DomainError(f"brute force refused for {len(fam)} > {BRUTEFORCE_LIMIT} indices")


def variation_bruteforce(fam: ParamFamily, r: float) -> SeminormValue:
    """r-variation by enumerating every increasing subsequence (tests only)."""
    _check_r(r)
    fam._require_k1()
    _bruteforce_guard(fam)
    a = fam.values
    n = len(a)
    inc, _, subsets = _chain_incidence(n, n)
    pair = np.abs(a[None, :] - a[:, None]) ** r
    sums = inc @ pair.reshape(-1)
    best = int(np.argmax(sums))
    return SeminormValue("variation", r, float(sums[best] ** (1.0 / r)),
                         [fam._format_point(i) for i in subsets[best]])


# ---------------------------------------------------------------------------
# r-oscillation
# ---------------------------------------------------------------------------


def _block_members(ranks: np.ndarray, lo: int, hi: int, mask: np.ndarray | None) -> np.ndarray:
    """Positions t with ranks[lo] <= ranks[t] < ranks[hi] coordinatewise."""
    upper = ranks <= ranks[hi] if _MUTATION.get() == "block_off_by_one" else ranks < ranks[hi]
    inside = np.all(ranks >= ranks[lo], axis=1) & np.all(upper, axis=1)
    if mask is not None:
        inside &= mask
    return np.flatnonzero(inside)


def oscillation_terms(values: np.ndarray, ranks: np.ndarray, seq_pos: Sequence[int], r: float,
                      mask: np.ndarray | None = None) -> tuple[np.ndarray, list]:
    """Pointwise r-oscillation of a family of fields.

    ``values`` has shape ``(n, m)``: row ``t`` holds ``a_t`` at ``m``
    evaluation points.  Returns the field of length ``m`` and, per block,
    the row achieving the supremum at the first evaluation point (or
    ``None`` for an empty block).  Terms are accumulated block by block in a
    fixed order, so scalar and field callers get bit-identical results.
    """
    acc = np.zeros(values.shape[1])
    argmax = []
    empty_rule = _MUTATION.get() == "empty_sup"
    for lo, hi in zip(seq_pos, seq_pos[1:]):
        members = _block_members(ranks, lo, hi, mask)
        if members.size == 0:
            argmax.append(None)
            if empty_rule:
                acc = acc + np.abs(values[hi] - values[lo]) ** r
            continue
        diffs = np.abs(values[members] - values[lo]) ** r
        acc = acc + diffs.max(axis=0)
        argmax.append(int(members[np.argmax(diffs[:, 0])]))
    return acc ** (1.0 / r), argmax


def _subdomain_mask(fam: ParamFamily, subdomain) -> np.ndarray | None:
    if subdomain is None:
        return None
    mask = np.zeros(len(fam), dtype=bool)
    for t in subdomain:
        mask[fam.position(t)] = True
    return mask


def oscillation(fam: ParamFamily, seq: IncreasingSequence | Sequence, r: float,
                subdomain: Iterable | None = None) -> SeminormValue:
    """r-oscillation of ``fam`` along ``seq`` restricted to ``subdomain``.

    Blocks are the half-open boxes ``[I_j, I_{j+1})``; a block that meets
    no index of the subdomain contributes zero.
    """
    _check_r(r)
    if not isinstance(seq, IncreasingSequence):
        seq = IncreasingSequence(seq)
    if seq.k != fam.k:
        raise DomainError(f"sequence dimension {seq.k} does not match family dimension {fam.k}")
    pos = [fam.position(t) for t in seq.entries]
    mask = _subdomain_mask(fam, subdomain)
    field_, argmax = oscillation_terms(fam.values.reshape(-1, 1), fam.ranks, pos, r, mask)
    witness = [fam._format_point(i) for i in argmax if i is not None]
    return SeminormValue("oscillation", r, float(field_[0]), witness)


def _block_sup_table(a: np.ndarray, r: float, mask: np.ndarray | None) -> np.ndarray:
    """S[i, j] = max over i <= t < j (t in mask) of |a_t - a_i|^r, zero if empty."""
    n = len(a)
    S = np.zeros((n, n))
    for i in range(n - 1):
        d = np.abs(a[i:n - 1] - a[i]) ** r
        if mask is not None:
            d = np.where(mask[i:n - 1], d, 0.0)
        S[i, i + 1:] = np.maximum.accumulate(d)
    return S


def _layered_best(W: np.ndarray, J_max: int) -> tuple[float, list[int]]:
    """Best chain with exactly c links, maximised over 1 <= c <= J_max.

    ``W[i, j]`` is the link weight (``-inf`` when the link is not allowed).
    """
    n = W.shape[0]
    prev = np.zeros(n)
    backs = []
    best_val, best_end, best_c = -np.inf, -1, 0
    for c in range(1, J_max + 1):
        cand = prev[:, None] + W
        back = np.argmax(cand, axis=0)
        cur = cand[back, np.arange(n)]
        backs.append(back)
        j = int(np.argmax(cur))
        if cur[j] > best_val:
            best_val, best_end, best_c = float(cur[j]), j, c
        if not np.isfinite(cur).any():
            break
        prev = cur
    chain = [best_end]
    for b in reversed(backs[:best_c]):
        chain.append(int(b[chain[-1]]))
    return best_val, chain[::-1]


def _unbounded_best(W: np.ndarray, order: np.ndarray) -> tuple[float, list[int]]:
    """Best chain with any number of links; ``order`` is a topological order."""
    n = W.shape[0]
    best = np.zeros(n)
    back = np.full(n, -1)
    for j in order:
        cand = best + W[:, j]
        i = int(np.argmax(cand))
        if np.isfinite(cand[i]):
            best[j] = cand[i]
            back[j] = i
    has_link = back >= 0
    if not has_link.any():
        raise DomainError("no admissible pair of indices")
    vals = np.where(has_link, best, -np.inf)
    end = int(np.argmax(vals))
    chain = [end]
    while back[chain[-1]] >= 0:
        chain.append(int(back[chain[-1]]))
    return float(vals[end]), chain[::-1]


def sup_oscillation(fam: ParamFamily, r: float, J_max: int | None = None,
                    subdomain: Iterable | None = None) -> SeminormValue:
    """Supremum of the r-oscillation over all sequences with J <= J_max.

    Exact, by dynamic programming on the table of block suprema.  The
    result is nondecreasing in ``J_max``; ``J_max = n - 1`` (the default)
    already covers every sequence.
    """
    _check_r(r)
    fam._require_k1()
    n = len(fam)
    J_max = n - 1 if J_max is None else int(J_max)
    if J_max < 1:
        raise DomainError("J_max must be at least 1")
    S = _block_sup_table(fam.values, r, _subdomain_mask(fam, subdomain))
    W = np.where(np.triu(np.ones((n, n), dtype=bool), 1), S, -np.inf)
    if J_max >= n - 1:
        total, chain = _unbounded_best(W, np.arange(n))
    else:
        total, chain = _layered_best(W, J_max)
    return SeminormValue("oscillation", r, float(max(total, 0.0) ** (1.0 / r)),
                         [fam._format_point(i) for i in chain])


def sup_oscillation_bruteforce(fam: ParamFamily, r: float, J_max: int | None = None,
                               subdomain: Iterable | None = None) -> SeminormValue:
    """Exhaustive counterpart of :func:`sup_oscillation` (tests only).

    Block suprema are recomputed by direct scans and every sequence is
    enumerated.
    """
    _check_r(r)
    fam._require_k1()
    _bruteforce_guard(fam)
    a = fam.values
    n = len(a)
    J_max = n - 1 if J_max is None else min(int(J_max), n - 1)
    mask = _subdomain_mask(fam, subdomain)
    S = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            best = 0.0
            for t in range(i, j):
                if mask is None or mask[t]:
                    best = max(best, abs(a[t] - a[i]) ** r)
            S[i, j] = best
    inc, _, subsets = _chain_incidence(n, J_max + 1)
    sums = inc @ S.reshape(-1)
    best = int(np.argmax(sums))
    return SeminormValue("oscillation", r, float(sums[best] ** (1.0 / r)),
                         [fam._format_point(i) for i in subsets[best]])


def _strict_less(ranks: np.ndarray) -> np.ndarray:
    return np.all(ranks[:, None, :] < ranks[None, :, :], axis=2)


def _box_sup_table(values: np.ndarray, ranks: np.ndarray, r: float, less: np.ndarray) -> np.ndarray:
    """Block suprema for every strictly increasing pair of a multi-parameter family."""
    n = len(values)
    S = np.zeros((n, n))
    # below[j, t]: t < j strictly in every coordinate
    below = np.all(ranks[None, :, :] < ranks[:, None, :], axis=2)
    for i in range(n):
        js = np.flatnonzero(less[i])
        if js.size == 0:
            continue
        above_i = np.all(ranks >= ranks[i], axis=1)
        d = np.where(above_i, np.abs(values - values[i]) ** r, 0.0)
        inbox = below[js] & above_i[None, :]
        S[i, js] = np.max(np.where(inbox, d[None, :], 0.0), axis=1)
    return S


def sup_oscillation_multiparam(fam: ParamFamily, r: float, J_max: int | None = None,
                               trials: int = 256, seed: int = 0,
                               exact_limit: int = 512) -> SeminormValue:
    """Supremum of the multi-parameter r-oscillation over increasing sequences.

    The objective is a sum of block terms over consecutive pairs, so an
    exact longest-path computation on the strict coordinatewise order
    applies.  Families with more than ``exact_limit`` indices fall back to
    a seeded random chain search whose result is flagged ``exact=False``.
    """
    _check_r(r)
    n = len(fam)
    J_max = n - 1 if J_max is None else int(J_max)
    if J_max < 1:
        raise DomainError("J_max must be at least 1")
    ranks = fam.ranks
    if n <= exact_limit:
        less = _strict_less(ranks)
        if not less.any():
            return SeminormValue("oscillation", r, 0.0, None)
        S = _box_sup_table(fam.values, ranks, r, less)
        W = np.where(less, S, -np.inf)
        order = np.argsort(ranks.sum(axis=1), kind="stable")
        if J_max >= n - 1:
            total, chain = _unbounded_best(W, order)
        else:
            total, chain = _layered_best(W, J_max)
        return SeminormValue("oscillation", r, float(max(total, 0.0) ** (1.0 / r)),
                             [fam._format_point(i) for i in chain])
    return _random_chain_search(fam, r, J_max, trials, seed)


def _random_chain_search(fam: ParamFamily, r: float, J_max: int, trials: int, seed: int) -> SeminormValue:
    rng = np.random.default_rng(seed)
    ranks = fam.ranks
    n = len(fam)
    best_val, best_chain = 0.0, None
    for _ in range(max(trials, 1)):
        chain = [int(rng.integers(n))]
        while len(chain) <= J_max:
            nxt = np.flatnonzero(np.all(ranks > ranks[chain[-1]], axis=1))
            if nxt.size == 0:
                break
            # bias toward near successors so that chains get long
            gaps = ranks[nxt].sum(axis=1) - ranks[chain[-1]].sum()
            w = 1.0 / gaps
            chain.append(int(rng.choice(nxt, p=w / w.sum())))
        if len(chain) < 2:
            continue
        val, _ = oscillation_terms(fam.values.reshape(-1, 1), ranks, chain, r)
        if val[0] > best_val or best_chain is None:
            best_val, best_chain = float(val[0]), chain
    witness = None if best_chain is None else [fam._format_point(i) for i in best_chain]
    return SeminormValue("oscillation", r, best_val, witness, exact=False)


def sup_oscillation_multiparam_bruteforce(fam: ParamFamily, r: float,
                                          J_max: int | None = None) -> SeminormValue:
    """Enumerate every strictly increasing chain and evaluate :func:`oscillation` (tests only)."""
    _check_r(r)
    _bruteforce_guard(fam)
    n = len(fam)
    J_max = n - 1 if J_max is None else int(J_max)
    less = _strict_less(fam.ranks)
    best_val, best_chain = 0.0, None

    def extend(chain):
        nonlocal best_val, best_chain
        if len(chain) >= 2:
            v = oscillation(fam, [fam.points[i] for i in chain], r).value
            if v > best_val or best_chain is None:
                best_val, best_chain = v, list(chain)
        if len(chain) > J_max:
            return
        for j in np.flatnonzero(less[chain[-1]]):
            chain.append(int(j))
            extend(chain)
            chain.pop()

    for i in range(n):
        extend([i])
    witness = None if best_chain is None else [fam._format_point(i) for i in best_chain]
    return SeminormValue("oscillation", r, best_val, witness)


# ---------------------------------------------------------------------------
# jumps
# ---------------------------------------------------------------------------


def jump_count(fam: ParamFamily, lam: float) -> SeminormValue:
    """Number of lambda-jumps: longest chain whose consecutive increments are >= lam."""
    _check_lambda(lam)
    fam._require_k1()
    a = fam.values
    n = len(a)
    L = np.zeros(n, dtype=np.int64)
    back = np.full(n, -1)
    for j in range(1, n):
        ok = np.abs(a[j] - a[:j]) >= lam
        if ok.any():
            cand = np.where(ok, L[:j] + 1, -1)
            i = int(np.argmax(cand))
            L[j] = cand[i]
            back[j] = i
    end = int(np.argmax(L))
    chain = [end]
    while back[chain[-1]] >= 0:
        chain.append(int(back[chain[-1]]))
    witness = [fam._format_point(i) for i in reversed(chain)] if L[end] > 0 else []
    return SeminormValue("jump_count", lam, float(L[end]), witness)


def jump_count_bruteforce(fam: ParamFamily, lam: float) -> SeminormValue:
    """Exhaustive counterpart of :func:`jump_count` (tests only)."""
    _check_lambda(lam)
    fam._require_k1()
    _bruteforce_guard(fam)
    a = fam.values
    n = len(a)
    inc, sizes, subsets = _chain_incidence(n, n)
    small = (np.abs(a[None, :] - a[:, None]) < lam).astype(float)
    bad = inc @ small.reshape(-1)
    jumps = np.where(bad == 0, sizes - 1, 0)
    best = int(np.argmax(jumps))
    witness = [fam._format_point(i) for i in subsets[best]] if jumps[best] > 0 else []
    return SeminormValue("jump_count", lam, float(jumps[best]), witness)


def overlap_jump_count(fam: ParamFamily, lam: float) -> SeminormValue:
    """Maximal number of pairs s_1 < t_1 <= s_2 < t_2 <= ... with |a_t - a_s| >= lam.

    Greedy: always close the pair that ends earliest.  Any optimal family of
    pairs can be exchanged, pair by pair, for the greedy one.
    """
    _check_lambda(lam)
    fam._require_k1()
    a = fam.values
    n = len(a)
    pairs = []
    start = 0
    t = start + 1
    while t < n:
        window = a[start:t]
        hit = np.flatnonzero(np.abs(a[t] - window) >= lam)
        if hit.size:
            s = start + int(hit[0])
            pairs.append([fam._format_point(s), fam._format_point(t)])
            start = t
        t += 1
    return SeminormValue("overlap_jump_count", lam, float(len(pairs)), pairs)


def overlap_jump_count_bruteforce(fam: ParamFamily, lam: float) -> SeminormValue:
    """Exhaustive search over all admissible pair systems (tests only)."""
    _check_lambda(lam)
    fam._require_k1()
    _bruteforce_guard(fam)
    a = fam.values
    n = len(a)

    @lru_cache(maxsize=None)
    def best_from(start: int) -> int:
        out = 0
        for s in range(start, n):
            for t in range(s + 1, n):
                if abs(a[t] - a[s]) >= lam:
                    out = max(out, 1 + best_from(t))
        return out

    return SeminormValue("overlap_jump_count", lam, float(best_from(0)), None)


# ---------------------------------------------------------------------------
# sequences and convergence
# ---------------------------------------------------------------------------


def diagonal_embed(seq: IncreasingSequence | Sequence, k_target: int) -> IncreasingSequence:
    """Map ``(I_0, ..., I_J)`` to ``((I_0, ..., I_0), ..., (I_J, ..., I_J))`` in ``k_target`` coordinates."""
    if k_target < 1:
        raise DomainError("k_target must be at least 1")
    if not isinstance(seq, IncreasingSequence):
        seq = IncreasingSequence(seq)
    if seq.k != 1:
        raise DomainError("diagonal embedding needs a one-parameter sequence")
    return IncreasingSequence([(p[0],) * k_target for p in seq.entries])


@dataclass(frozen=True)
class CertificateReport:
    epsilon: float
    N: Fraction | None
    tail_diameters: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.N is not None

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "N": None if self.N is None else _fmt_fraction(self.N),
            "certified": self.certified,
            "tail_diameters": [[_fmt_fraction(q), d] for q, d in self.tail_diameters],
        }


def _diameter(v: np.ndarray) -> float:
    if not np.iscomplexobj(v):
        return float(v.max() - v.min())
    best = 0.0
    for i in range(len(v)):
        best = max(best, float(np.abs(v[i:] - v[i]).max()))
    return best


def convergence_certificate(fam: ParamFamily, epsilon: float) -> CertificateReport:
    """Smallest grid level N with sup over s, t >= (N, ..., N) of |a_s - a_t| <= epsilon.

    Only tails holding at least two indices are considered, so the top
    corner of the grid never certifies by itself.  ``N`` is ``None`` when
    no level qualifies.
    """
    if not epsilon >= 0:
        raise DomainError("epsilon must be nonnegative")
    levels = sorted({c for p in fam.points for c in p})
    exact = fam.points
    diams = []
    found = None
    for lev in levels:
        tail = [i for i, p in enumerate(exact) if all(c >= lev for c in p)]
        if len(tail) < 2:
            break
        d = _diameter(fam.values[tail])
        diams.append((lev, d))
        if found is None and d <= epsilon:
            found = lev
    return CertificateReport(float(epsilon), found, diams)


# ---------------------------------------------------------------------------
# series input
# ---------------------------------------------------------------------------


def _parse_value(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        v = v.strip()
        try:
            return float(v)
        except ValueError:
            return complex(v.replace("i", "j"))
    return v


def read_family_csv(text_or_file) -> ParamFamily:
    """Parse a CSV with header ``t_1,...,t_k,value``; coordinates are exact rationals."""
    handle = io.StringIO(text_or_file) if isinstance(text_or_file, str) else text_or_file
    reader = csv.reader(handle)
    header = [h.strip() for h in next(reader)]
    if not header or header[-1] != "value" or any(not h.startswith("t_") for h in header[:-1]):
        raise DomainError(f"unexpected CSV header {header}")
    k = len(header) - 1
    pts, vals = [], []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != k + 1:
            raise DomainError(f"row {row} does not have {k + 1} fields")
        pts.append(tuple(Fraction(c.strip()) for c in row[:k]))
        vals.append(_parse_value(row[k]))
    return ParamFamily(pts, np.array(vals))


def read_family_json(text: str) -> ParamFamily:
    """Parse a JSON array of ``{"t": [...], "value": ...}`` records."""
    records = json.loads(text)
    pts = [_as_point([str(c) if isinstance(c, str) else c for c in rec["t"]]) for rec in records]
    vals = [_parse_value(rec["value"]) for rec in records]
    return ParamFamily(pts, np.array(vals))
