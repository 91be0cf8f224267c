"""Discrete measure-preserving systems and polynomial ergodic averages.

Two spatial models are supported:

* ``lattice``: finitely supported functions on ``Z^d`` with counting
  measure, stored as a dense array over a bounding box with an integer
  ``origin``;
* ``cyclic``: functions on ``Z_N^d`` with normalized counting measure.

A transformation is an integer shift vector ``v`` acting by ``T x = x + v``.
The default transformations are the coordinate shifts ``S_j x = x - e_j``,
so that with polynomials ``P_1, ..., P_d`` the average reads

    A_M f(x) = E_{m in Q_M} f(x_1 - P_1(m), ..., x_d - P_d(m)).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import signal

from .seminorms import DomainError, ParamFamily

__all__ = [
    "IntPolynomial",
    "LatticeFunction",
    "AverageSpec",
    "ergodic_average",
    "average_kernel",
    "average_multiplier",
    "product_spec",
    "multiparam_average",
    "telescoping_check",
    "TelescopingReport",
    "birkhoff_decomposition",
    "BirkhoffDecomposition",
    "average_family",
    "AverageFamily",
    "lacunary",
]

_INT64_SAFE = 2**62


class IntPolynomial:
    """Polynomial in ``k`` variables with integer coefficients.

    ``terms`` maps exponent tuples to coefficients.  Evaluation at integer
    points is exact: int64 arithmetic when a coefficient bound proves it
    cannot overflow, Python integers otherwise.
    """

    def __init__(self, terms, num_vars: int | None = None, zero_at_origin: bool = False):
        if isinstance(terms, dict):
            items = list(terms.items())
        else:
            items = [(tuple(e), c) for e, c in terms]
        clean: dict[tuple[int, ...], int] = {}
        for exps, coeff in items:
            exps = (int(exps),) if isinstance(exps, (int, np.integer)) else tuple(int(e) for e in exps)
            if any(e < 0 for e in exps):
                raise DomainError("exponents must be nonnegative")
            if int(coeff) != coeff:
                raise DomainError(f"coefficient {coeff!r} is not an integer")
            clean[exps] = clean.get(exps, 0) + int(coeff)
        clean = {e: c for e, c in clean.items() if c != 0}
        k = num_vars if num_vars is not None else max((len(e) for e in clean), default=1)
        if any(len(e) != k for e in clean):
            raise DomainError("all exponent tuples must have num_vars entries")
        self.num_vars = k
        self.terms = dict(sorted(clean.items()))
        self.zero_at_origin = zero_at_origin
        if zero_at_origin and self.terms.get((0,) * k, 0) != 0:
            raise DomainError("polynomial must vanish at the origin")

    @classmethod
    def univariate(cls, coeffs: Sequence[int], **kw) -> "IntPolynomial":
        """``coeffs[i]`` is the coefficient of ``m**i``."""
        return cls({(i,): c for i, c in enumerate(coeffs)}, num_vars=1, **kw)

    @classmethod
    def monomial(cls, degree: int, var: int = 0, num_vars: int = 1, coeff: int = 1) -> "IntPolynomial":
        exps = [0] * num_vars
        exps[var] = degree
        return cls({tuple(exps): coeff}, num_vars=num_vars)

    def embed(self, var: int, num_vars: int) -> "IntPolynomial":
        """Same univariate polynomial, read as a polynomial in variable ``var`` of ``num_vars``."""
        if self.num_vars != 1:
            raise DomainError("only univariate polynomials can be embedded")
        terms = {}
        for (e,), c in self.terms.items():
            exps = [0] * num_vars
            exps[var] = e
            terms[tuple(exps)] = c
        return IntPolynomial(terms, num_vars=num_vars)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def __call__(self, *m: int) -> int:
        if len(m) != self.num_vars:
            raise DomainError(f"expected {self.num_vars} arguments")
        total = 0
        for exps, c in self.terms.items():
            term = c
            for x, e in zip(m, exps):
                term *= int(x) ** e
            total += term
        return total

    def __eq__(self, other) -> bool:
        return isinstance(other, IntPolynomial) and self.terms == other.terms and self.num_vars == other.num_vars

    def __hash__(self):
        return hash((self.num_vars, tuple(self.terms.items())))

    def __repr__(self) -> str:
        return f"IntPolynomial({self.terms!r}, num_vars={self.num_vars})"

    def bound(self, box: Sequence[int]) -> int:
        """Upper bound for ``|P(m)|`` with ``1 <= m_i <= box[i]``."""
        total = 0
        for exps, c in self.terms.items():
            term = abs(c)
            for M, e in zip(box, exps):
                term *= int(M) ** e
            total += term
        return total

    def evaluate_box(self, box: Sequence[int]) -> np.ndarray:
        """Values on ``Q_M = [M_1] x ... x [M_k]``, flattened in C order.

        Returns int64 when provably overflow-free, otherwise an object array
        of Python integers.
        """
        if len(box) != self.num_vars:
            raise DomainError(f"box has {len(box)} sides, polynomial has {self.num_vars} variables")
        safe = self.bound(box) < _INT64_SAFE
        dtype = np.int64 if safe else object
        axes = [np.arange(1, int(M) + 1, dtype=np.int64).astype(dtype) for M in box]
        grids = np.meshgrid(*axes, indexing="ij")
        out = np.zeros(grids[0].shape, dtype=dtype)
        for exps, c in self.terms.items():
            term = np.full(grids[0].shape, c, dtype=dtype)
            for g, e in zip(grids, exps):
                if e:
                    term = term * g**e
            out = out + term
        return out.reshape(-1)

    def evaluate_box_mod(self, box: Sequence[int], N: int) -> np.ndarray:
        """Values on ``Q_M`` reduced modulo ``N`` (int64, exact for N < 2**31)."""
        if N >= 2**31:
            return np.array([int(v) % N for v in self.evaluate_box(box)], dtype=object)
        axes = [np.arange(1, int(M) + 1, dtype=np.int64) % N for M in box]
        grids = np.meshgrid(*axes, indexing="ij")
        out = np.zeros(grids[0].shape, dtype=np.int64)
        for exps, c in self.terms.items():
            term = np.full(grids[0].shape, c % N, dtype=np.int64)
            for g, e in zip(grids, exps):
                for _ in range(e):
                    term = (term * g) % N
            out = (out + term) % N
        return out.reshape(-1)

    def to_json(self) -> list:
        return [[list(e), c] for e, c in self.terms.items()]

    @classmethod
    def from_json(cls, data, num_vars: int | None = None) -> "IntPolynomial":
        return cls([(tuple(e), c) for e, c in data], num_vars=num_vars)


class LatticeFunction:
    """Function on ``Z^d`` (finite support) or on the torus ``Z_N^d``."""

    def __init__(self, values, kind: str = "lattice", origin: Sequence[int] | None = None,
                 N: int | None = None):
        vals = np.asarray(values)
        if vals.dtype != object and not np.iscomplexobj(vals):
            vals = vals.astype(float)
        if kind not in ("lattice", "cyclic"):
            raise DomainError(f"unknown space kind {kind!r}")
        if vals.ndim < 1:
            raise DomainError("values must have at least one axis")
        self.kind = kind
        self.values = vals
        if kind == "lattice":
            self.origin = tuple(int(o) for o in (origin if origin is not None else (0,) * vals.ndim))
            if len(self.origin) != vals.ndim:
                raise DomainError("origin dimension does not match values")
            self.N = None
        else:
            if N is None:
                N = vals.shape[0]
            if any(s != N for s in vals.shape):
                raise DomainError(f"cyclic values must have shape (N,)*d with N={N}, got {vals.shape}")
            self.N = int(N)
            self.origin = (0,) * vals.ndim

    # -- constructors -----------------------------------------------------
    @classmethod
    def delta(cls, point: Sequence[int], kind: str = "lattice", N: int | None = None) -> "LatticeFunction":
        point = tuple(int(p) for p in point)
        if kind == "lattice":
            return cls(np.ones((1,) * len(point)), "lattice", origin=point)
        vals = np.zeros((N,) * len(point))
        vals[tuple(p % N for p in point)] = 1.0
        return cls(vals, "cyclic", N=N)

    @classmethod
    def cyclic(cls, values) -> "LatticeFunction":
        return cls(values, "cyclic")

    # -- basic properties -------------------------------------------------
    @property
    def dim(self) -> int:
        return self.values.ndim

    def copy_with(self, values, origin=None) -> "LatticeFunction":
        if self.kind == "cyclic":
            return LatticeFunction(values, "cyclic", N=self.N)
        return LatticeFunction(values, "lattice", origin=self.origin if origin is None else origin)

    def measure_weight(self) -> float:
        """Mass of a single point: 1 on ``Z^d``, ``N^-d`` on the torus."""
        return 1.0 if self.kind == "lattice" else float(self.N) ** (-self.dim)

    def norm(self, p: float = 2) -> float:
        a = np.abs(self.values.astype(complex) if self.values.dtype == object else self.values)
        if p == math.inf:
            return float(a.max(initial=0.0))
        return float((np.sum(a**p) * self.measure_weight()) ** (1.0 / p))

    def total(self):
        """Sum of all values (counting measure)."""
        return self.values.sum()

    def __call__(self, x: Sequence[int]):
        x = tuple(int(c) for c in x)
        if self.kind == "cyclic":
            return self.values[tuple(c % self.N for c in x)]
        idx = tuple(c - o for c, o in zip(x, self.origin))
        if any(i < 0 or i >= s for i, s in zip(idx, self.values.shape)):
            return 0.0
        return self.values[idx]

    def _check_compatible(self, other: "LatticeFunction"):
        if self.kind != other.kind or self.dim != other.dim or self.N != other.N:
            raise DomainError("functions live on different spaces")

    def embed(self, origin: Sequence[int], shape: Sequence[int]) -> np.ndarray:
        """Dense copy over the box ``origin + [0, shape)`` (lattice only)."""
        out = np.zeros(tuple(shape), dtype=self.values.dtype)
        start = [o - b for o, b in zip(self.origin, origin)]
        if any(s < 0 or s + n > m for s, n, m in zip(start, self.values.shape, shape)):
            raise DomainError("support does not fit in the requested box")
        out[tuple(slice(s, s + n) for s, n in zip(start, self.values.shape))] = self.values
        return out

    def _union_box(self, other: "LatticeFunction"):
        lo = [min(a, b) for a, b in zip(self.origin, other.origin)]
        hi = [max(a + n, b + m) for a, n, b, m in
              zip(self.origin, self.values.shape, other.origin, other.values.shape)]
        return lo, [h - l for h, l in zip(hi, lo)]

    def __add__(self, other: "LatticeFunction") -> "LatticeFunction":
        self._check_compatible(other)
        if self.kind == "cyclic":
            return self.copy_with(self.values + other.values)
        lo, shape = self._union_box(other)
        return LatticeFunction(self.embed(lo, shape) + other.embed(lo, shape), "lattice", origin=lo)

    def __sub__(self, other: "LatticeFunction") -> "LatticeFunction":
        return self + other.scale(-1)

    def scale(self, c) -> "LatticeFunction":
        return self.copy_with(self.values * c)

    def compose_shift(self, v: Sequence[int], times: int = 1) -> "LatticeFunction":
        """``f o T^times`` for ``T x = x + v``, i.e. ``x -> f(x + times * v)``."""
        v = [int(c) * times for c in v]
        if len(v) != self.dim:
            raise DomainError("shift vector dimension mismatch")
        if self.kind == "cyclic":
            return self.copy_with(np.roll(self.values, [-c for c in v], axis=tuple(range(self.dim))))
        return LatticeFunction(self.values, "lattice", origin=[o - c for o, c in zip(self.origin, v)])

    def allclose(self, other: "LatticeFunction", atol: float = 0.0) -> bool:
        return max_deviation(self, other) <= atol

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        space = {"kind": self.kind, "dim": self.dim}
        if self.kind == "cyclic":
            space["N"] = self.N
        pts = []
        vals = self.values
        for idx in zip(*np.nonzero(vals)):
            v = complex(vals[idx])
            coords = [int(i) + o for i, o in zip(idx, self.origin)]
            pts.append(coords + [v.real, v.imag])
        return {"space": space, "points": pts}

    @classmethod
    def from_json(cls, data) -> "LatticeFunction":
        if isinstance(data, str):
            data = json.loads(data)
        space = data["space"]
        d = int(space["dim"])
        pts = data["points"]
        is_complex = any(len(p) > d + 1 and p[d + 1] != 0 for p in pts)
        dtype = complex if is_complex else float
        if space["kind"] == "cyclic":
            N = int(space["N"])
            vals = np.zeros((N,) * d, dtype=dtype)
            for p in pts:
                vals[tuple(int(c) % N for c in p[:d])] += _point_value(p, d, is_complex)
            return cls(vals, "cyclic", N=N)
        if not pts:
            return cls(np.zeros((1,) * d, dtype=dtype), "lattice", origin=(0,) * d)
        coords = np.array([[int(c) for c in p[:d]] for p in pts])
        lo = coords.min(axis=0)
        shape = coords.max(axis=0) - lo + 1
        vals = np.zeros(tuple(shape), dtype=dtype)
        for p, c in zip(pts, coords):
            vals[tuple(c - lo)] += _point_value(p, d, is_complex)
        return cls(vals, "lattice", origin=tuple(int(x) for x in lo))


def _point_value(p, d, is_complex):
    re = float(p[d])
    im = float(p[d + 1]) if len(p) > d + 1 else 0.0
    return complex(re, im) if is_complex else re


def max_deviation(f: LatticeFunction, g: LatticeFunction) -> float:
    """Sup-norm distance between two functions on the same space."""
    f._check_compatible(g)
    if f.kind == "cyclic":
        return float(np.max(np.abs(f.values - g.values), initial=0.0))
    lo, shape = f._union_box(g)
    return float(np.max(np.abs(f.embed(lo, shape) - g.embed(lo, shape)), initial=0.0))


@dataclass
class AverageSpec:
    """Polynomials ``P_1..P_d`` in ``k`` variables, box ``M`` and shift vectors ``T_1..T_d``."""

    polynomials: list
    M: tuple
    transformations: list | None = None

    def __post_init__(self):
        if not self.polynomials:
            raise DomainError("at least one polynomial is required")
        ks = {p.num_vars for p in self.polynomials}
        if len(ks) != 1:
            raise DomainError("polynomials must share the number of variables")
        self.M = tuple(int(m) for m in (self.M if isinstance(self.M, (tuple, list)) else (self.M,)))
        if len(self.M) != self.k:
            raise DomainError(f"box M has {len(self.M)} sides but polynomials have {self.k} variables")
        if any(m < 1 for m in self.M):
            raise DomainError("empty averaging box")
        if self.transformations is not None:
            self.transformations = [tuple(int(c) for c in v) for v in self.transformations]
            if len(self.transformations) != len(self.polynomials):
                raise DomainError("need one transformation per polynomial")

    @property
    def k(self) -> int:
        return self.polynomials[0].num_vars

    @property
    def d(self) -> int:
        return len(self.polynomials)

    @property
    def box_size(self) -> int:
        return math.prod(self.M)

    def shifts(self, dim: int) -> list[tuple[int, ...]]:
        if self.transformations is not None:
            if any(len(v) != dim for v in self.transformations):
                raise DomainError("transformation vectors do not match the space dimension")
            return self.transformations
        if self.d != dim:
            raise DomainError(f"default coordinate shifts need d == dim, got d={self.d}, dim={dim}")
        return [tuple(-1 if i == j else 0 for i in range(dim)) for j in range(dim)]

    def with_M(self, M) -> "AverageSpec":
        return AverageSpec(self.polynomials, M, self.transformations)

    def to_json(self) -> dict:
        return {
            "polynomials": [p.to_json() for p in self.polynomials],
            "num_vars": self.k,
            "M": list(self.M),
            "transformations": None if self.transformations is None else [list(v) for v in self.transformations],
        }

    @classmethod
    def from_json(cls, data) -> "AverageSpec":
        if isinstance(data, str):
            data = json.loads(data)
        k = data.get("num_vars")
        polys = [IntPolynomial.from_json(p, num_vars=k) for p in data["polynomials"]]
        M = data.get("M", [1] * polys[0].num_vars)
        return cls(polys, tuple(M), data.get("transformations"))


def average_kernel(spec: AverageSpec, dim: int, N: int | None = None):
    """Orbit offsets ``sum_j P_j(m) v_j`` over ``m in Q_M`` as a multiset.

    Returns ``(offsets, counts)`` with unique offset rows; offsets are reduced
    modulo ``N`` when ``N`` is given.  Multiplicities matter: distinct ``m``
    may land on the same orbit point.
    """
    shifts = spec.shifts(dim)
    size = spec.box_size
    if N is None:
        vals = [p.evaluate_box(spec.M) for p in spec.polynomials]
        use_obj = any(v.dtype == object for v in vals) or \
            sum(p.bound(spec.M) * max(abs(c) for c in v) for p, v in zip(spec.polynomials, shifts)) >= _INT64_SAFE
        dtype = object if use_obj else np.int64
        off = np.zeros((size, dim), dtype=dtype)
        for v_p, shift in zip(vals, shifts):
            for c in range(dim):
                if shift[c]:
                    off[:, c] = off[:, c] + v_p.astype(dtype) * shift[c]
        if use_obj:
            raise DomainError("orbit does not fit in a bounded lattice box")
    else:
        vals = [p.evaluate_box_mod(spec.M, N) for p in spec.polynomials]
        off = np.zeros((size, dim), dtype=np.int64)
        for v_p, shift in zip(vals, shifts):
            for c in range(dim):
                if shift[c]:
                    off[:, c] = (off[:, c] + v_p.astype(np.int64) * (shift[c] % N)) % N
    uniq, counts = np.unique(off, axis=0, return_counts=True)
    return uniq, counts


class _Compensated:
    """Neumaier-compensated elementwise accumulation (real or complex)."""

    def __init__(self, shape, dtype):
        self.complex = np.issubdtype(dtype, np.complexfloating)
        self.parts = [[np.zeros(shape), np.zeros(shape)] for _ in range(2 if self.complex else 1)]

    def add(self, term, where=...):
        comps = (term.real, term.imag) if self.complex else (term,)
        for (s, c), x in zip(self.parts, comps):
            sv = s[where]
            t = sv + x
            c[where] += np.where(np.abs(sv) >= np.abs(x), (sv - t) + x, (x - t) + sv)
            s[where] = t

    def result(self):
        vals = [s + c for s, c in self.parts]
        return vals[0] + 1j * vals[1] if self.complex else vals[0]


def _choose_strategy(f: LatticeFunction, n_offsets: int, out_size: int, fft_size: int) -> str:
    if f.values.dtype == object:
        return "sparse"
    sparse_cost = n_offsets * out_size
    fft_cost = 6.0 * fft_size * max(math.log2(max(fft_size, 2)), 1.0)
    return "fft" if fft_cost < sparse_cost else "sparse"


def ergodic_average(f: LatticeFunction, spec: AverageSpec, strategy: str = "auto") -> LatticeFunction:
    """Polynomial ergodic average ``A_M f(x) = E_{m in Q_M} f(x + sum_j P_j(m) v_j)``.

    Strategies: ``direct`` visits every ``m`` in ``Q_M``; ``sparse`` groups
    equal orbit offsets with their multiplicity; ``fft`` applies the
    histogram of offsets as a convolution.  ``auto`` picks ``sparse`` or
    ``fft`` from a cost model.  Object arrays of Fractions are averaged
    exactly; floating inputs use compensated summation on the non-FFT paths.
    """
    dim = f.dim
    cyclic = f.kind == "cyclic"
    size = spec.box_size
    if strategy == "direct":
        offsets, counts = _all_offsets(spec, dim, f.N if cyclic else None)
    else:
        offsets, counts = average_kernel(spec, dim, f.N if cyclic else None)
    if cyclic:
        out_shape = f.values.shape
        fft_size = f.values.size
    else:
        omin = offsets.min(axis=0)
        omax = offsets.max(axis=0)
        out_shape = tuple(int(s + hi - lo) for s, lo, hi in zip(f.values.shape, omin, omax))
        fft_size = math.prod(int(s + (hi - lo)) for s, lo, hi in zip(out_shape, omin, omax))
    if strategy == "auto":
        strategy = _choose_strategy(f, len(offsets), math.prod(out_shape), fft_size)
    if strategy not in ("direct", "sparse", "fft"):
        raise DomainError(f"unknown strategy {strategy!r}")

    if strategy == "fft":
        return _average_fft(f, offsets, counts, size)

    exact = f.values.dtype == object
    if exact:
        out = np.full(out_shape, Fraction(0), dtype=object)
    else:
        acc = _Compensated(out_shape, f.values.dtype)
    for o, c in zip(offsets, counts):
        if cyclic:
            term = np.roll(f.values, [-int(x) for x in o], axis=tuple(range(dim)))
            where = ...
        else:
            start = [int(hi - x) for hi, x in zip(omax, o)]
            where = tuple(slice(s, s + n) for s, n in zip(start, f.values.shape))
            term = f.values
        if exact:
            out[where] = out[where] + term * int(c)
        else:
            acc.add(term * float(c), where)
    if exact:
        res = out / size
        res = np.vectorize(lambda q: Fraction(q), otypes=[object])(res)
    else:
        res = acc.result() / size
    if cyclic:
        return LatticeFunction(res, "cyclic", N=f.N)
    origin = tuple(int(o - hi) for o, hi in zip(f.origin, omax))
    return LatticeFunction(res, "lattice", origin=origin)


def _all_offsets(spec: AverageSpec, dim: int, N: int | None):
    """Every orbit offset, one row per m (no grouping)."""
    shifts = spec.shifts(dim)
    vals = [p.evaluate_box(spec.M) if N is None else p.evaluate_box_mod(spec.M, N)
            for p in spec.polynomials]
    off = np.zeros((spec.box_size, dim), dtype=np.int64)
    for v_p, shift in zip(vals, shifts):
        for c in range(dim):
            if shift[c]:
                off[:, c] = off[:, c] + np.asarray(v_p, dtype=np.int64) * shift[c]
    if N is not None:
        off %= N
    return off, np.ones(len(off), dtype=np.int64)


def _average_fft(f: LatticeFunction, offsets, counts, size) -> LatticeFunction:
    dim = f.dim
    weights = counts / size
    if f.kind == "cyclic":
        hist = np.zeros(f.values.shape)
        np.add.at(hist, tuple(offsets.T), weights)
        # f(x + o) has transform f^(xi) e(o.xi / N)
        mult = np.conj(np.fft.fftn(hist))
        res = np.fft.ifftn(np.fft.fftn(f.values) * mult)
        if not np.iscomplexobj(f.values):
            res = res.real
        return LatticeFunction(res, "cyclic", N=f.N)
    omin = offsets.min(axis=0)
    omax = offsets.max(axis=0)
    # correlation with the offset histogram = convolution with its reflection
    kern = np.zeros(tuple(int(h - l + 1) for l, h in zip(omin, omax)))
    np.add.at(kern, tuple((omax - offsets).T), weights)
    vals = f.values
    if np.iscomplexobj(vals):
        res = signal.fftconvolve(vals.real, kern) + 1j * signal.fftconvolve(vals.imag, kern)
    else:
        res = signal.fftconvolve(vals, kern)
    origin = tuple(int(o - hi) for o, hi in zip(f.origin, omax))
    return LatticeFunction(res, "lattice", origin=origin)


def average_multiplier(spec: AverageSpec, N: int, dim: int | None = None) -> np.ndarray:
    """Fourier multiplier of ``A_M`` on ``Z_N^d`` (numpy fftn frequency layout).

    ``A_M e_xi = multiplier[xi] * e_xi`` for the character ``e_xi(x) = e(x.xi/N)``.
    """
    if dim is None:
        dim = len(spec.transformations[0]) if spec.transformations else spec.d
    offsets, counts = average_kernel(spec, dim, N)
    hist = np.zeros((N,) * dim)
    np.add.at(hist, tuple(offsets.T), counts / spec.box_size)
    return np.conj(np.fft.fftn(hist))


def product_spec(specs: Sequence[AverageSpec]) -> AverageSpec:
    """Single multi-parameter spec whose j-th polynomial depends on ``m_j`` only.

    Each input spec has one univariate polynomial and one transformation;
    the result averages over ``[M_1] x ... x [M_k]`` directly.
    """
    k = len(specs)
    polys, shifts, box = [], [], []
    for j, s in enumerate(specs):
        if s.k != 1 or s.d != 1:
            raise DomainError("product_spec expects one-parameter, single-polynomial specs")
        polys.append(s.polynomials[0].embed(j, k))
        shifts.append(s.transformations[0] if s.transformations else None)
        box.append(s.M[0])
    if any(v is None for v in shifts):
        raise DomainError("product_spec needs explicit transformations")
    return AverageSpec(polys, tuple(box), shifts)


def multiparam_average(f: LatticeFunction, specs: Sequence[AverageSpec], strategy: str = "auto") -> LatticeFunction:
    """Multi-parameter average as a composition of one-parameter averages.

    ``A_{M_1..M_k} = A_{M_1} o ... o A_{M_k}`` for commuting shifts; the
    last spec is applied first.
    """
    out = f
    for s in reversed(list(specs)):
        out = ergodic_average(out, s, strategy=strategy)
    return out


@dataclass
class TelescopingReport:
    lhs: LatticeFunction
    rhs: LatticeFunction
    max_deviation: float
    relative_deviation: float

    def to_dict(self) -> dict:
        return {"max_deviation": self.max_deviation, "relative_deviation": self.relative_deviation}


def telescoping_check(g: LatticeFunction, shift: Sequence[int], M: int,
                      strategy: str = "sparse") -> TelescopingReport:
    """Compare ``A_M h`` with ``(g o T - g o T^(M+1)) / M`` for ``h = g - g o T``.

    ``A_M`` here is the Birkhoff average ``E_{m in [M]} h(T^m x)``.  The
    relative deviation is measured against ``max(|g|)``.
    """
    h = g - g.compose_shift(shift)
    spec = AverageSpec([IntPolynomial.univariate([0, 1])], (M,), [tuple(shift)])
    lhs = ergodic_average(h, spec, strategy=strategy)
    rhs = (g.compose_shift(shift) - g.compose_shift(shift, M + 1)).scale(1.0 / M)
    dev = max_deviation(lhs, rhs)
    scale = float(np.max(np.abs(g.values), initial=0.0))
    return TelescopingReport(lhs, rhs, dev, dev / scale if scale > 0 else dev)


@dataclass
class BirkhoffDecomposition:
    """``f = invariant + (transfer - transfer o T) + residual`` on a torus."""

    invariant: LatticeFunction
    coboundary: LatticeFunction
    transfer: LatticeFunction
    residual: float


def birkhoff_decomposition(f: LatticeFunction, shift: Sequence[int]) -> BirkhoffDecomposition:
    """Split ``f`` into its ``T``-invariant projection and a coboundary.

    Works frequency by frequency: ``f o T`` multiplies the coefficient at
    ``xi`` by ``e(v.xi/N)``.  Frequencies with ``v.xi = 0 mod N`` form the
    invariant part; on the others the transfer function solves
    ``g - g o T = f - invariant``.  Averages ``A_M f`` converge to the
    invariant part at rate ``2 max|g| / M``.
    """
    if f.kind != "cyclic":
        raise DomainError("the decomposition is computed on cyclic spaces")
    N, d = f.N, f.dim
    v = [int(c) for c in shift]
    if len(v) != d:
        raise DomainError("shift vector dimension mismatch")
    grids = np.meshgrid(*[np.arange(N)] * d, indexing="ij")
    phase_idx = sum(c * g for c, g in zip(v, grids)) % N
    invariant_mask = phase_idx == 0
    phase = np.exp(2j * np.pi * phase_idx / N)
    F = np.fft.fftn(f.values)
    inv_hat = np.where(invariant_mask, F, 0)
    denom = np.where(invariant_mask, 1.0, 1.0 - phase)
    g_hat = np.where(invariant_mask, 0, (F - inv_hat) / denom)
    real = not np.iscomplexobj(f.values)
    inv = np.fft.ifftn(inv_hat)
    g = np.fft.ifftn(g_hat)
    if real:
        inv, g = inv.real, g.real
    inv_f = LatticeFunction(inv, "cyclic", N=N)
    g_f = LatticeFunction(g, "cyclic", N=N)
    cob = g_f - g_f.compose_shift(v)
    residual = float(np.max(np.abs(f.values - inv - cob.values)))
    return BirkhoffDecomposition(inv_f, cob, g_f, residual)


@dataclass
class AverageFamily:
    """Snapshots ``(A_M f : M in M_list)`` on a common support."""

    index: list
    snapshots: np.ndarray
    kind: str
    origin: tuple
    N: int | None = None

    def field(self, i: int) -> LatticeFunction:
        if self.kind == "cyclic":
            return LatticeFunction(self.snapshots[i], "cyclic", N=self.N)
        return LatticeFunction(self.snapshots[i], "lattice", origin=self.origin)

    def at(self, x: Sequence[int]) -> ParamFamily:
        """Scalar family ``M -> A_M f(x)``."""
        x = tuple(int(c) for c in x)
        if self.kind == "cyclic":
            idx = tuple(c % self.N for c in x)
        else:
            idx = tuple(c - o for c, o in zip(x, self.origin))
            if any(i < 0 or i >= s for i, s in zip(idx, self.snapshots.shape[1:])):
                return ParamFamily(self.index, np.zeros(len(self.index)))
        return ParamFamily(self.index, self.snapshots[(slice(None),) + idx])

    def matrix(self) -> np.ndarray:
        """Snapshots flattened to shape ``(len(index), number of points)``."""
        return self.snapshots.reshape(len(self.index), -1)


def average_family(f: LatticeFunction, spec: AverageSpec, M_list: Sequence) -> AverageFamily:
    """Evaluate ``A_M f`` for every ``M`` in a strictly increasing list.

    One-parameter specs reuse a running (compensated) sum of orbit
    translates, adding one translate per step ``M -> M + 1``.
    """
    if len(M_list) < 2:
        raise DomainError("need at least two averaging parameters")
    if spec.k == 1:
        Ms = [int(m[0]) if isinstance(m, (tuple, list)) else int(m) for m in M_list]
        if any(b <= a for a, b in zip(Ms, Ms[1:])) or Ms[0] < 1:
            raise DomainError("M_list must be strictly increasing positive integers")
        return _running_family(f, spec, Ms)
    Ms = [tuple(int(c) for c in m) for m in M_list]
    for a, b in zip(Ms, Ms[1:]):
        if not all(x < y for x, y in zip(a, b)):
            raise DomainError("M_list must be strictly increasing coordinatewise")
    fields = [ergodic_average(f, spec.with_M(m)) for m in Ms]
    return _stack_fields(fields, Ms)


def _stack_fields(fields: list[LatticeFunction], index) -> AverageFamily:
    f0 = fields[0]
    if f0.kind == "cyclic":
        return AverageFamily(list(index), np.stack([g.values for g in fields]), "cyclic", (0,) * f0.dim, f0.N)
    lo = [min(g.origin[c] for g in fields) for c in range(f0.dim)]
    hi = [max(g.origin[c] + g.values.shape[c] for g in fields) for c in range(f0.dim)]
    shape = [h - l for h, l in zip(hi, lo)]
    return AverageFamily(list(index), np.stack([g.embed(lo, shape) for g in fields]), "lattice", tuple(lo))


def _running_family(f: LatticeFunction, spec: AverageSpec, Ms: list[int]) -> AverageFamily:
    dim = f.dim
    shifts = spec.shifts(dim)
    M_max = Ms[-1]
    cyclic = f.kind == "cyclic"
    vals = [p.evaluate_box((M_max,)) if not cyclic else p.evaluate_box_mod((M_max,), f.N)
            for p in spec.polynomials]
    offs = np.zeros((M_max, dim), dtype=np.int64)
    for v_p, sh in zip(vals, shifts):
        offs += np.outer(np.asarray(v_p, dtype=np.int64), np.array(sh, dtype=np.int64))
    if cyclic:
        offs %= f.N
        shape = f.values.shape
        origin = (0,) * dim
    else:
        omin, omax = offs.min(axis=0), offs.max(axis=0)
        shape = tuple(int(s + hi - lo) for s, lo, hi in zip(f.values.shape, omin, omax))
        origin = tuple(int(o - hi) for o, hi in zip(f.origin, omax))
    acc = _Compensated(shape, f.values.dtype)
    snaps = []
    targets = set(Ms)
    for m in range(1, M_max + 1):
        o = offs[m - 1]
        if cyclic:
            acc.add(np.roll(f.values, [-int(x) for x in o], axis=tuple(range(dim))))
        else:
            start = [int(hi - x) for hi, x in zip(omax, o)]
            acc.add(f.values, tuple(slice(s, s + n) for s, n in zip(start, f.values.shape)))
        if m in targets:
            snaps.append(acc.result() / m)
    return AverageFamily(Ms, np.stack(snaps), f.kind, origin, f.N)


def lacunary(tau, upper: int) -> list[int]:
    """Distinct values ``floor(tau**n) <= upper`` for ``n = 0, 1, ...`` (tau > 1), increasing.

    ``tau`` is read exactly (a float through its decimal repr, or a
    Fraction / string); repeated values for small ``tau`` are dropped.
    """
    from .seminorms import to_fraction

    t = to_fraction(tau)
    if t <= 1:
        raise DomainError("lacunary ratio must exceed 1")
    out: list[int] = []
    power = Fraction(1)
    while True:
        v = math.floor(power)
        if v > upper:
            break
        if not out or v > out[-1]:
            out.append(v)
        power *= t
    return out
