"""Multi-parameter families built from commuting one-parameter factors.

A factor is any object with a sorted integer array ``indices`` and a method
``apply(t, f)`` acting linearly on arrays over a shared model space.  The
composed operator is ``T_t = T^1_{t_1} ... T^k_{t_k}``: the last factor acts
first.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import AverageSpec, IntPolynomial, LatticeFunction, average_multiplier, ergodic_average
from .projections import ProjectionFamily
from .seminorms import (
    DomainError,
    IncreasingSequence,
    ParamFamily,
    SeminormValue,
    convergence_certificate,
)

__all__ = [
    "NonCommutingError",
    "IdentityFactor",
    "AverageFactor",
    "ProjectionFactor",
    "ComposedFamily",
    "telescoping_identity_check",
    "multiparam_oscillation",
    "multiparam_oscillation_field",
    "multiparam_chain_check",
    "dz_convergence_probe",
    "dz_product_bound",
    "gauss_checkpoint",
]


class NonCommutingError(DomainError):
    """Raised when two factors fail the commutation probe."""


def _lp(field: np.ndarray, p: float) -> float:
    a = np.abs(field).reshape(-1)
    if p == math.inf:
        return float(a.max())
    return float(np.mean(a**p) ** (1.0 / p))


class IdentityFactor:
    """Factor with ``T_t = id`` for every index."""

    positive = True
    shape = None

    def __init__(self, indices: Sequence[int]):
        self.indices = np.array(sorted(set(int(t) for t in indices)), dtype=np.int64)

    def apply(self, t, f):
        return f


class AverageFactor:
    """One-parameter polynomial average ``M -> A^P_M`` on ``Z_N^d`` along a shift vector."""

    positive = True

    def __init__(self, poly: IntPolynomial, shift: Sequence[int], N: int, indices: Sequence[int],
                 strategy: str = "sparse"):
        if poly.num_vars != 1:
            raise DomainError("factor polynomials are univariate")
        self.poly = poly
        self.shift = tuple(int(c) for c in shift)
        self.N = int(N)
        self.shape = (self.N,) * len(self.shift)
        self.indices = np.array(sorted(set(int(t) for t in indices)), dtype=np.int64)
        if self.indices[0] < 1:
            raise DomainError("averaging parameters must be positive")
        self.strategy = strategy

    def spec(self, M: int) -> AverageSpec:
        return AverageSpec([self.poly], (int(M),), [self.shift])

    def apply(self, t, f):
        g = LatticeFunction(f, "cyclic", N=self.N)
        return ergodic_average(g, self.spec(t), strategy=self.strategy).values


class ProjectionFactor:
    """A one-dimensional projection family acting along one axis of a product space."""

    def __init__(self, family: ProjectionFamily, axis: int, ndim: int, positive: bool | None = None):
        self.family = family
        self.axis = axis
        self.ndim = ndim
        self.shape = (family.size,) * ndim
        self.indices = family.indices
        self.positive = family.kind in ("martingale", "haar_filtration") if positive is None else positive

    def apply(self, t, f):
        moved = np.moveaxis(np.asarray(f), self.axis, -1)
        out = self.family.apply(int(t), moved)
        return np.moveaxis(out, -1, self.axis)


class ComposedFamily:
    """``T_t = T^1_{t_1} ... T^k_{t_k}`` over the grid ``indices_1 x ... x indices_k``.

    On construction the factors are probed for pairwise commutation with
    random functions and random indices; a failure raises
    :class:`NonCommutingError` naming the offending pair.
    """

    def __init__(self, factors: Sequence, check: bool = True, probes: int = 3, seed: int = 0,
                 tol: float = 1e-12):
        if not factors:
            raise DomainError("need at least one factor")
        self.factors = list(factors)
        shapes = {f.shape for f in self.factors if f.shape is not None}
        if len(shapes) > 1:
            raise DomainError(f"factors act on different spaces: {sorted(shapes)}")
        self.shape = shapes.pop() if shapes else None
        self.tol = tol
        if check:
            self.check_commutation(probes, seed)

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def axes(self) -> list[np.ndarray]:
        return [f.indices for f in self.factors]

    @property
    def positive(self) -> bool:
        return all(f.positive for f in self.factors)

    def check_commutation(self, probes: int = 3, seed: int = 0) -> float:
        if self.shape is None or self.k < 2:
            return 0.0
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(probes):
            f = rng.standard_normal(self.shape)
            scale = float(np.max(np.abs(f)))
            for a, b in itertools.combinations(range(self.k), 2):
                A, B = self.factors[a], self.factors[b]
                s = int(rng.choice(A.indices))
                t = int(rng.choice(B.indices))
                dev = float(np.max(np.abs(A.apply(s, B.apply(t, f)) - B.apply(t, A.apply(s, f))))) / scale
                worst = max(worst, dev)
                if dev > self.tol:
                    raise NonCommutingError(
                        f"factors {a} and {b} do not commute at indices ({s}, {t}): deviation {dev:.3g}"
                    )
        return worst

    def _check_point(self, t) -> tuple[int, ...]:
        t = tuple(int(c) for c in t)
        if len(t) != self.k:
            raise DomainError(f"index has {len(t)} coordinates, family has {self.k} factors")
        for c, fac in zip(t, self.factors):
            if c not in set(fac.indices.tolist()):
                raise DomainError(f"index coordinate {c} not in factor index set")
        return t

    def apply(self, t, f, cache: dict | None = None):
        """``T_t f``; ``cache`` memoizes suffix applications ``T^m_{t_m} ... T^k_{t_k} f``."""
        t = self._check_point(t)
        return self._apply_suffix(t, 0, np.asarray(f), cache)

    def _apply_suffix(self, t, start, f, cache):
        out = f
        m = self.k
        # reuse the longest cached suffix
        if cache is not None:
            for s in range(start, self.k):
                key = t[s:]
                if key in cache:
                    out, m = cache[key], s
                    break
        for i in range(m - 1, start - 1, -1):
            out = self.factors[i].apply(t[i], out)
            if cache is not None:
                cache[t[i:]] = out
        return out

    def apply_except(self, m: int, coords: Sequence[int], f):
        """``T^{(m)}_{coords} f``: all factors but ``m``, coordinates listed without slot ``m``."""
        out = np.asarray(f)
        full = list(coords[:m]) + [None] + list(coords[m:])
        for i in range(self.k - 1, -1, -1):
            if i != m:
                out = self.factors[i].apply(full[i], out)
        return out

    def grid_stack(self, f, axes: Sequence[Sequence[int]] | None = None) -> tuple[list, np.ndarray]:
        """All ``T_t f`` over a sub-grid, in lexicographic order of ``t``."""
        axes = self.axes if axes is None else axes
        cache: dict = {}
        pts = list(itertools.product(*[[int(c) for c in a] for a in axes]))
        return pts, np.stack([self._apply_suffix(p, 0, np.asarray(f), cache) for p in pts])


def telescoping_identity_check(fam: ComposedFamily, n, I_j, f) -> dict:
    """Compare ``T_n f - T_{I_j} f`` with ``sum_m T^{(m)}_{n(m)} (T^m_{n_m} - T^m_{I_jm}) f``.

    ``n(m) = (n_1, ..., n_{m-1}, I_{j,m+1}, ..., I_{jk})``.
    """
    n = fam._check_point(n)
    I_j = fam._check_point(I_j)
    if any(a > b for a, b in zip(I_j, n)):
        raise DomainError("the identity is checked for I_j <= n coordinatewise")
    f = np.asarray(f)
    lhs = fam.apply(n, f) - fam.apply(I_j, f)
    rhs = np.zeros_like(lhs)
    for m in range(fam.k):
        fac = fam.factors[m]
        inc = fac.apply(n[m], f) - fac.apply(I_j[m], f)
        coords = list(n[:m]) + list(I_j[m + 1:])
        rhs = rhs + fam.apply_except(m, coords, inc)
    dev = float(np.max(np.abs(lhs - rhs)))
    scale = float(np.max(np.abs(f))) or 1.0
    return {"n": list(n), "I_j": list(I_j), "max_deviation": dev, "relative_deviation": dev / scale,
            "lhs_max": float(np.max(np.abs(lhs)))}


def _seq_entries(fam: ComposedFamily, seq) -> list[tuple[int, ...]]:
    if not isinstance(seq, IncreasingSequence):
        seq = IncreasingSequence(seq)
    if seq.k != fam.k:
        raise DomainError(f"sequence dimension {seq.k} does not match {fam.k} factors")
    entries = []
    for e in seq.entries:
        if any(c.denominator != 1 for c in e):
            raise DomainError("composed families use integer indices")
        entries.append(fam._check_point([int(c) for c in e]))
    return entries


def _box_axes(fam: ComposedFamily, lo, hi) -> list[list[int]]:
    return [[int(c) for c in a if l <= c < h] for a, l, h in zip(fam.axes, lo, hi)]


def multiparam_oscillation_field(fam: ComposedFamily, f, seq, r: float = 2) -> np.ndarray:
    """Pointwise ``O^r_{I,J}(T_t f : t in grid)`` with half-open boxes ``[I_j, I_{j+1})``.

    Boxes are streamed one at a time; the accumulation order matches the
    one-parameter kernel, so identity factors give bit-identical output.
    """
    entries = _seq_entries(fam, seq)
    f = np.asarray(f)
    acc = np.zeros(f.size)
    for lo, hi in zip(entries, entries[1:]):
        _, st = fam.grid_stack(f, _box_axes(fam, lo, hi))
        st = st.reshape(len(st), -1)
        base = fam.apply(lo, f).reshape(-1)
        diffs = np.abs(st - base) ** r
        acc = acc + diffs.max(axis=0)
    return (acc ** (1.0 / r)).reshape(f.shape)


def multiparam_oscillation(fam: ComposedFamily, f, seq, r: float = 2, p: float = 2) -> SeminormValue:
    """``L^p`` norm (probability measure) of the pointwise multi-parameter oscillation."""
    field = multiparam_oscillation_field(fam, f, seq, r)
    return SeminormValue("multiparam_oscillation", r, _lp(field, p))


def multiparam_chain_check(fam: ComposedFamily, f, seq, r: float = 2) -> dict:
    """Pointwise check of the box-supremum bound behind the composition estimate.

    For each block ``j``: ``sup_{n in box} |T_n f - T_{I_j} f|`` is at most
    ``sum_m sup_{n'} T^{(m)}_{n'} F^m_j`` where ``F^m_j`` is the axis-``m``
    block supremum of ``|T^m_{n_m} f - T^m_{I_jm} f|``.  Needs positive
    factors, for which ``|T| g = T |g|``.
    """
    if not fam.positive:
        raise DomainError("the chain uses |T| = T|.|, which needs positive factors")
    entries = _seq_entries(fam, seq)
    f = np.asarray(f)
    worst = -np.inf
    lhs_total = np.zeros(f.shape)
    rhs_total = np.zeros(f.shape)
    for lo, hi in zip(entries, entries[1:]):
        _, st = fam.grid_stack(f, _box_axes(fam, lo, hi))
        lhs = np.abs(st - fam.apply(lo, f)).max(axis=0)
        rhs = np.zeros(f.shape)
        for m, fac in enumerate(fam.factors):
            block = [int(c) for c in fac.indices if lo[m] <= c < hi[m]]
            Fm = np.max([np.abs(fac.apply(c, f) - fac.apply(lo[m], f)) for c in block], axis=0)
            others = [[int(c) for c in a] for i, a in enumerate(fam.axes) if i != m]
            best = np.zeros(f.shape)
            for coords in itertools.product(*others):
                best = np.maximum(best, fam.apply_except(m, coords, Fm))
            rhs = rhs + best
        worst = max(worst, float(np.max(lhs - rhs)))
        lhs_total += lhs**r
        rhs_total += rhs**r
    return {"max_excess": worst, "lhs_norm": _lp(lhs_total ** (1 / r), 2),
            "rhs_norm": _lp(rhs_total ** (1 / r), 2)}


def _axis_multipliers(polys: Sequence[IntPolynomial], N: int, M: Sequence[int]) -> list[np.ndarray]:
    return [average_multiplier(AverageSpec([P], (int(m),), [(-1,)]), N, dim=1) for P, m in zip(polys, M)]


def _apply_product_multiplier(f: np.ndarray, mults: list[np.ndarray]) -> np.ndarray:
    F = np.fft.fftn(f)
    for axis, mult in enumerate(mults):
        shape = [1] * f.ndim
        shape[axis] = len(mult)
        F = F * mult.reshape(shape)
    out = np.fft.ifftn(F)
    return out if np.iscomplexobj(f) else out.real


def dz_convergence_probe(f, polynomials: Sequence[IntPolynomial], schedule: Sequence,
                         epsilon: float | None = None, point: Sequence[int] | None = None) -> dict:
    """Track ``sup_x |A_M f(x) - mean(f)|`` along a schedule of boxes ``M`` on ``Z_N^d``.

    ``A_M`` averages ``f(x_1 - P_1(m_1), ..., x_d - P_d(m_d))`` over
    ``m in Q_M`` and is applied as a product of per-axis Fourier
    multipliers.  The decay exponent is a least-squares slope of
    log-deviation against ``log min(M)``, skipping zero deviations.  With
    ``epsilon`` set, a convergence certificate is issued for the scalar
    family ``M -> A_M f(point)``.
    """
    f = f.values if isinstance(f, LatticeFunction) else np.asarray(f)
    d = f.ndim
    N = f.shape[0]
    if len(polynomials) != d:
        raise DomainError("need one polynomial per axis")
    sched = [tuple([int(m)] * d) if np.isscalar(m) else tuple(int(c) for c in m) for m in schedule]
    mean = f.mean()
    devs, at_point = [], []
    pt = tuple(0 for _ in range(d)) if point is None else tuple(int(c) % N for c in point)
    for M in sched:
        avg = _apply_product_multiplier(f, _axis_multipliers(polynomials, N, M))
        devs.append(float(np.max(np.abs(avg - mean))))
        at_point.append(avg[pt])
    mins = np.array([min(M) for M in sched], dtype=float)
    pos = np.array(devs) > 1e-300
    exponent = None
    if pos.sum() >= 2 and len(set(mins[pos])) >= 2:
        exponent = float(np.polyfit(np.log(mins[pos]), np.log(np.array(devs)[pos]), 1)[0])
    report = {"N": N, "schedule": [list(M) for M in sched], "deviations": devs, "decay_exponent": exponent}
    if epsilon is not None and len(sched) >= 2:
        cert = convergence_certificate(ParamFamily(sched, np.array(at_point)), epsilon)
        report["certificate"] = cert.to_dict()
    return report


def dz_product_bound(f, polynomials: Sequence[IntPolynomial], M: Sequence[int] | None = None) -> dict:
    """Deviation of ``A_M f`` against ``N^{-d/2} prod_j c_j ||f||_{l^2}``.

    ``c_j = sqrt(N) max_{xi != 0} |multiplier_j(xi)|`` is the measured
    one-parameter constant of axis ``j`` at ``M_j`` (``M = (N, ..., N)`` by
    default).  The bound is rigorous when every one-dimensional fiber of
    ``f`` has mean zero, because then only frequencies with all
    coordinates nonzero survive.
    """
    f = f.values if isinstance(f, LatticeFunction) else np.asarray(f)
    d = f.ndim
    N = f.shape[0]
    M = tuple([N] * d) if M is None else tuple(int(m) for m in M)
    mults = _axis_multipliers(polynomials, N, M)
    consts = [float(math.sqrt(N) * np.max(np.abs(m[1:]))) for m in mults]
    l2 = float(np.sqrt(np.sum(np.abs(f) ** 2)))
    bound = N ** (-d / 2) * math.prod(consts) * l2
    avg = _apply_product_multiplier(f, mults)
    dev = float(np.max(np.abs(avg)))
    return {"N": N, "M": list(M), "constants": consts, "l2_norm": l2, "bound": bound, "deviation": dev,
            "ratio": dev / bound if bound > 0 else (0.0 if dev == 0 else math.inf)}


def gauss_checkpoint(N: int = 101, xi: int = 1) -> dict:
    """``sup_x |A_N f|`` for ``P(m) = m^2`` and the character ``f(x) = e(x xi / N)``.

    The average is evaluated by direct summation over the orbit, not through
    a multiplier.
    """
    x = np.arange(N)
    f = np.exp(2j * np.pi * xi * x / N)
    spec = AverageSpec([IntPolynomial.univariate([0, 0, 1])], (N,))
    avg = ergodic_average(LatticeFunction(f, "cyclic", N=N), spec, strategy="direct").values
    value = float(np.max(np.abs(avg)))
    return {"N": N, "xi": xi, "sup_abs_average": value, "expected": N ** -0.5,
            "deviation": abs(value - N ** -0.5)}
