"""Projection families on finite model spaces.

Model spaces are the dyadic space ``{0, ..., 2^K - 1}`` with uniform
measure and the cyclic group ``Z_N``.  Functions are numpy arrays whose last
axis runs over the space, so a batch of functions is a 2-D array.  Norms use
the normalized (probability) measure unless stated otherwise; inner products
for orthonormal systems use counting measure, which only rescales both sides
of every Bessel-type inequality.

Frequencies use the balanced convention ``xi in {-floor(N/2), ..., ceil(N/2) - 1}``
and characters ``e(x xi / N)`` with ``e(z) = exp(2 pi i z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .seminorms import DomainError, IncreasingSequence, oscillation_terms

__all__ = [
    "martingale_projection",
    "fourier_cutoff",
    "balanced_frequencies",
    "SmoothBump",
    "smooth_dilate_multiplier",
    "OrthonormalSystem",
    "partial_sum_projection",
    "ProjectionFamily",
    "MartingaleFamily",
    "CutoffFamily",
    "SmoothBumpFamily",
    "PartialSumFamily",
    "HaarFiltrationFamily",
    "block_square_function",
    "thm31_decomposition_check",
    "oscillation_chain",
    "maximal_function",
    "lattice_identity_residual",
    "smooth_sharp_comparison",
    "doob_ratio",
    "rademacher_menshov_curve",
]


def _log2_size(size: int) -> int:
    K = size.bit_length() - 1
    if size < 1 or 1 << K != size:
        raise DomainError(f"dyadic space needs a power-of-two size, got {size}")
    return K


def _prob_norm(f: np.ndarray, p: float = 2) -> np.ndarray:
    a = np.abs(f)
    if p == math.inf:
        return a.max(axis=-1)
    return np.mean(a**p, axis=-1) ** (1.0 / p)


def martingale_projection(f, n: int, K: int | None = None) -> np.ndarray:
    """Conditional expectation onto the level-``n`` dyadic sigma-algebra.

    Each dyadic block of length ``2^(K-n)`` is replaced by its mean.  Object
    arrays (Fractions or ints) are averaged exactly.
    """
    f = np.asarray(f)
    size = f.shape[-1]
    K_size = _log2_size(size)
    if K is None:
        K = K_size
    elif K != K_size:
        raise DomainError(f"array of length {size} is not a level-{K} dyadic space")
    if not 0 <= n <= K:
        raise DomainError(f"level {n} outside 0..{K}")
    width = 1 << (K - n)
    blocks = f.reshape(f.shape[:-1] + (1 << n, width))
    if f.dtype == object:
        means = np.vectorize(lambda v: Fraction(v), otypes=[object])(blocks.sum(axis=-1)) / width
    else:
        means = blocks.mean(axis=-1)
    return np.repeat(means, width, axis=-1)


def balanced_frequencies(N: int) -> np.ndarray:
    """Integer frequencies in numpy FFT order, balanced around zero."""
    return np.rint(np.fft.fftfreq(N) * N).astype(np.int64)


def _real_if_real(out: np.ndarray, f: np.ndarray) -> np.ndarray:
    return out if np.iscomplexobj(f) else out.real


def fourier_cutoff(f, t: float) -> np.ndarray:
    """Sharp frequency cutoff ``f -> (1_{|xi| <= t} f^)^vee`` on ``Z_N``."""
    f = np.asarray(f)
    N = f.shape[-1]
    if t < 0:
        raise DomainError("cutoff must be nonnegative")
    if t >= N // 2:
        return f.copy()
    mask = np.abs(balanced_frequencies(N)) <= t
    out = np.fft.ifft(np.fft.fft(f, axis=-1) * mask, axis=-1)
    return _real_if_real(out, f)


@dataclass(frozen=True)
class SmoothBump:
    """Smooth ``chi`` with ``1_{[-1,1]^d} <= chi <= 1_{[-2,2]^d}``.

    Built from ``theta(u) = exp(-1/u)`` (zero for ``u <= 0``) as
    ``theta(2 - s) / (theta(2 - s) + theta(s - 1))`` with ``s = |xi|_inf``.
    """

    inner: float = 1.0
    outer: float = 2.0

    @staticmethod
    def theta(u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    def __call__(self, xi, axis: int | None = None) -> np.ndarray:
        s = np.abs(np.asarray(xi, dtype=float))
        if axis is not None:
            s = s.max(axis=axis)
        # rescale so that the transition band is [1, 2]
        s = 1.0 + (s - self.inner) / (self.outer - self.inner)
        a = self.theta(2.0 - s)
        b = self.theta(s - 1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            chi = a / (a + b)
        chi = np.where(s <= 1.0, 1.0, chi)
        chi = np.where(s >= 2.0, 0.0, chi)
        return chi


def smooth_dilate_multiplier(f, n: int, bump: SmoothBump | None = None) -> np.ndarray:
    """Multiply ``f^(xi)`` by ``chi(xi / 2^n)`` on ``Z_N`` (integer frequency units).

    The level ``2^n`` is on the same scale as the sharp cutoff index, so
    ``fourier_cutoff(f, 2^n)`` is the natural projection to compare with.
    This operator is not idempotent.
    """
    f = np.asarray(f)
    bump = bump or SmoothBump()
    N = f.shape[-1]
    mult = bump(balanced_frequencies(N) / float(2**n))
    out = np.fft.ifft(np.fft.fft(f, axis=-1) * mult, axis=-1)
    return _real_if_real(out, f)


class OrthonormalSystem:
    """Orthonormal basis ``Phi_0, ..., Phi_{N-1}`` of ``C^N`` (rows of ``vectors``)."""

    def __init__(self, vectors, name: str = "custom", check: bool = True):
        v = np.asarray(vectors)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DomainError("an orthonormal basis needs a square matrix of row vectors")
        self.vectors = v
        self.name = name
        if check and self.gram_error() > 1e-10:
            raise DomainError(f"vectors are not orthonormal (Gram error {self.gram_error():.3g})")

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def gram_error(self) -> float:
        G = self.vectors.conj() @ self.vectors.T
        return float(np.max(np.abs(G - np.eye(self.size))))

    def coefficients(self, f) -> np.ndarray:
        """``<f, Phi_k>`` for every ``k`` (counting measure)."""
        return np.asarray(f) @ self.vectors.conj().T

    def synthesize(self, coeffs) -> np.ndarray:
        return np.asarray(coeffs) @ self.vectors

    @classmethod
    def fourier(cls, N: int) -> "OrthonormalSystem":
        """Characters ordered by frequency ``0, 1, -1, 2, -2, ...``."""
        order = [0]
        for k in range(1, N):
            order.append((k + 1) // 2 if k % 2 else -(k // 2))
        x = np.arange(N)
        vecs = np.exp(2j * np.pi * np.outer(order, x) / N) / math.sqrt(N)
        sysm = cls(vecs, "fourier", check=False)
        sysm.frequencies = np.array(order)
        return sysm

    @classmethod
    def haar(cls, K: int) -> "OrthonormalSystem":
        """Haar system on ``2^K`` points, coarse to fine, left to right."""
        N = 1 << K
        vecs = np.zeros((N, N))
        vecs[0] = 1.0 / math.sqrt(N)
        row = 1
        for level in range(K):
            width = N >> level
            amp = 1.0 / math.sqrt(width)
            for i in range(1 << level):
                start = i * width
                vecs[row, start:start + width // 2] = amp
                vecs[row, start + width // 2:start + width] = -amp
                row += 1
        return cls(vecs, "haar", check=False)

    @classmethod
    def random(cls, N: int, seed: int = 0, complex_: bool = False) -> "OrthonormalSystem":
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((N, N))
        if complex_:
            A = A + 1j * rng.standard_normal((N, N))
        Q, R = np.linalg.qr(A)
        Q = Q * np.sign(np.diag(R).real)
        return cls(Q.T, "random")


def partial_sum_projection(f, system: OrthonormalSystem, n: int) -> np.ndarray:
    """``sum_{k <= n} <f, Phi_k> Phi_k``."""
    if not 0 <= n < system.size:
        raise DomainError(f"partial sum index {n} outside 0..{system.size - 1}")
    f = np.asarray(f)
    c = system.coefficients(f)
    out = c[..., : n + 1] @ system.vectors[: n + 1]
    return out.real if np.isrealobj(system.vectors) and np.isrealobj(f) else out


class ProjectionFamily:
    """Finite family ``(P_t : t in indices)`` of linear operators on one model space."""

    kind = "generic"
    is_projection = True

    def __init__(self, size: int, indices: Sequence):
        self.size = int(size)
        self.indices = np.array(sorted(set(int(t) for t in indices)), dtype=np.int64)
        if len(self.indices) < 1:
            raise DomainError("empty index set")
        self._pos = {int(t): i for i, t in enumerate(self.indices)}

    def apply(self, t, f) -> np.ndarray:
        raise NotImplementedError

    def position(self, t) -> int:
        try:
            return self._pos[int(t)]
        except KeyError:
            raise DomainError(f"index {t} is not in the family") from None

    def stack(self, f) -> np.ndarray:
        """Array of shape ``(len(indices), size)`` holding ``P_t f``."""
        return np.stack([self.apply(int(t), f) for t in self.indices])

    def ranks(self) -> np.ndarray:
        return np.arange(len(self.indices))[:, None]

    def seq_positions(self, seq) -> list[int]:
        entries = seq.entries if isinstance(seq, IncreasingSequence) else IncreasingSequence(seq).entries
        return [self.position(int(e[0])) for e in entries]

    def oscillation_field(self, f, seq, r: float = 2, stack: np.ndarray | None = None) -> np.ndarray:
        """Pointwise ``O^r_{I,J}(P_t f : t in indices)``."""
        st = self.stack(f) if stack is None else stack
        field, _ = oscillation_terms(st, self.ranks(), self.seq_positions(seq), r)
        return field

    def describe(self) -> dict:
        return {"kind": self.kind, "size": self.size, "indices": [int(t) for t in self.indices]}


class MartingaleFamily(ProjectionFamily):
    """Dyadic conditional expectations ``E[f | F_n]``, ``n = 0..K``."""

    kind = "martingale"

    def __init__(self, K: int, indices: Sequence | None = None):
        self.K = K
        super().__init__(1 << K, range(K + 1) if indices is None else indices)
        if self.indices[0] < 0 or self.indices[-1] > K:
            raise DomainError("martingale levels must lie in 0..K")

    def apply(self, t, f):
        return martingale_projection(f, int(t), self.K)


class CutoffFamily(ProjectionFamily):
    """Sharp Fourier cutoffs on ``Z_N``, indices ``0..N//2`` by default."""

    kind = "cutoff"

    def __init__(self, N: int, indices: Sequence | None = None):
        super().__init__(N, range(N // 2 + 1) if indices is None else indices)
        if self.indices[0] < 0:
            raise DomainError("cutoffs must be nonnegative")

    def apply(self, t, f):
        return fourier_cutoff(f, t)

    def stack(self, f):
        f = np.asarray(f)
        F = np.fft.fft(f)
        freq = np.abs(balanced_frequencies(self.size))
        masks = freq[None, :] <= self.indices[:, None]
        masks[self.indices >= self.size // 2] = True
        out = np.fft.ifft(F[None, :] * masks, axis=-1)
        return _real_if_real(out, f)


class SmoothBumpFamily(ProjectionFamily):
    """Smooth multipliers ``chi(xi / 2^n)``; not projections."""

    kind = "bump"
    is_projection = False

    def __init__(self, N: int, indices: Sequence | None = None, bump: SmoothBump | None = None):
        top = max(int(math.ceil(math.log2(max(N // 2, 1)))), 0)
        super().__init__(N, range(top + 1) if indices is None else indices)
        self.bump = bump or SmoothBump()

    def apply(self, t, f):
        return smooth_dilate_multiplier(f, int(t), self.bump)


class PartialSumFamily(ProjectionFamily):
    """Partial sums of an orthonormal expansion."""

    kind = "orthonormal"

    def __init__(self, system: OrthonormalSystem, indices: Sequence | None = None):
        self.system = system
        super().__init__(system.size, range(system.size) if indices is None else indices)
        if self.indices[0] < 0 or self.indices[-1] >= system.size:
            raise DomainError("partial sum indices out of range")

    def apply(self, t, f):
        return partial_sum_projection(f, self.system, int(t))

    def stack(self, f):
        f = np.asarray(f)
        c = self.system.coefficients(f)
        contrib = c[:, None] * self.system.vectors
        out = np.cumsum(contrib, axis=0)[self.indices]
        return out.real if np.isrealobj(self.system.vectors) and np.isrealobj(f) else out


def haar_coefficients(f) -> np.ndarray:
    """Coefficients of ``f`` in ``OrthonormalSystem.haar`` order, in O(N)."""
    f = np.asarray(f, dtype=float)
    N = f.shape[-1]
    K = _log2_size(N)
    coeffs = np.empty(f.shape)
    sums = f.copy()
    # bottom-up: pairwise sums give block sums, differences give Haar coefficients
    for level in range(K - 1, -1, -1):
        width = N >> level
        left = sums[..., 0::2]
        right = sums[..., 1::2]
        coeffs[..., (1 << level):(2 << level)] = (left - right) / math.sqrt(width)
        sums = left + right
    coeffs[..., 0] = sums[..., 0] / math.sqrt(N)
    return coeffs


class HaarFiltrationFamily(ProjectionFamily):
    """Martingale with ``2^K`` steps: partial sums of the Haar expansion.

    Step ``n`` conditions on the partition obtained by splitting the first
    ``n`` Haar supports; indices run over ``0..2^K - 1``.  At a fixed point
    only ``K + 1`` basis functions are nonzero, which gives an
    ``O(K * 2^K)`` oscillation path that never materializes the full stack.
    """

    kind = "haar_filtration"

    def __init__(self, K: int):
        self.K = K
        super().__init__(1 << K, range(1 << K))

    def apply(self, t, f):
        c = haar_coefficients(f)
        return OrthonormalSystem.haar(self.K).synthesize(np.where(np.arange(self.size) <= t, c, 0.0))

    def stack(self, f):
        return PartialSumFamily(OrthonormalSystem.haar(self.K)).stack(np.asarray(f, dtype=float))

    def pointwise_terms(self, f) -> tuple[np.ndarray, np.ndarray]:
        """Per point and level: Haar index touching the point and its contribution."""
        K, N = self.K, self.size
        c = haar_coefficients(f)
        x = np.arange(N)
        breaks = np.empty((K + 1, N), dtype=np.int64)
        contrib = np.empty((K + 1, N))
        breaks[0] = 0
        contrib[0] = c[0] / math.sqrt(N)
        for level in range(K):
            width = N >> level
            block = x // width
            idx = (1 << level) + block
            sign = np.where(x % width < width // 2, 1.0, -1.0)
            breaks[level + 1] = idx
            contrib[level + 1] = c[idx] * sign / math.sqrt(width)
        return breaks, contrib

    def oscillation_field(self, f, seq, r: float = 2, stack=None, terms=None) -> np.ndarray:
        entries = seq.entries if isinstance(seq, IncreasingSequence) else IncreasingSequence(seq).entries
        I = np.array([int(e[0]) for e in entries], dtype=np.int64)
        if I[0] < 0 or I[-1] >= self.size:
            raise DomainError("sequence leaves the index set")
        breaks, contrib = self.pointwise_terms(f) if terms is None else terms
        J = len(I) - 1
        N = self.size
        cols = np.arange(N)
        best = np.zeros((J, N))
        running = np.zeros(N)
        current = np.full(N, -1, dtype=np.int64)
        for level in range(self.K + 1):
            b = breaks[level]
            # block j with I_j <= b < I_{j+1}; the jump at b = I_j is part of the base value
            j = np.searchsorted(I, b, side="right") - 1
            inside = (j >= 0) & (j < J)
            fresh = j != current
            running = np.where(fresh, 0.0, running)
            current = j
            interior = inside & (b != I[np.clip(j, 0, J)])
            running = np.where(interior, running + contrib[level], running)
            jj = np.clip(j, 0, J - 1)
            val = np.where(interior, np.abs(running) ** r, 0.0)
            best[jj, cols] = np.maximum(best[jj, cols], val)
        return best.sum(axis=0) ** (1.0 / r)


def _delta_blocks(family: ProjectionFamily, f, seq) -> tuple[list[int], np.ndarray]:
    entries = seq.entries if isinstance(seq, IncreasingSequence) else IncreasingSequence(seq).entries
    I = [int(e[0]) for e in entries]
    for t in I:
        family.position(t)
    proj = np.stack([family.apply(t, f) for t in I])
    return I, np.diff(proj, axis=0)


def block_square_function(family: ProjectionFamily, f, seq, r: float = 2,
                          p: float = 2) -> tuple[np.ndarray, float]:
    """Pointwise ``(sum_j |(P_{I_{j+1}} - P_{I_j}) f|^r)^{1/r}`` and its ``L^p`` norm."""
    _, deltas = _delta_blocks(family, f, seq)
    field = np.sum(np.abs(deltas) ** r, axis=0) ** (1.0 / r)
    return field, float(_prob_norm(field, p))


def thm31_decomposition_check(family: ProjectionFamily, f, seq, t) -> dict:
    """Check ``(P_t - P_{I_j}) f = P_t (P_{I_{j+1}} - P_{I_j}) f`` for ``I_j < t < I_{j+1}``."""
    I, deltas = _delta_blocks(family, f, seq)
    t = int(t)
    family.position(t)
    j = next((i for i in range(len(I) - 1) if I[i] < t < I[i + 1]), None)
    if j is None:
        raise DomainError(f"t={t} is not strictly inside any block of the sequence")
    lhs = family.apply(t, f) - family.apply(I[j], f)
    rhs = family.apply(t, deltas[j])
    dev = float(np.max(np.abs(lhs - rhs)))
    scale = float(np.max(np.abs(np.asarray(f, dtype=complex)))) or 1.0
    return {"block": j, "t": t, "I_j": I[j], "I_j1": I[j + 1],
            "max_deviation": dev, "relative_deviation": dev / scale}


def oscillation_chain(family: ProjectionFamily, f, seq, r: float = 2) -> dict:
    """Pointwise links ``O <= (sum_j sup_block |P_t D_j f|^r)^{1/r} <= (sum_j sup_all |P_t D_j f|^r)^{1/r}``.

    ``D_j = P_{I_{j+1}} - P_{I_j}``; the first link is an equality for
    projection families satisfying the lattice identity.
    """
    entries = seq.entries if isinstance(seq, IncreasingSequence) else IncreasingSequence(seq).entries
    I = [int(e[0]) for e in entries]
    _, deltas = _delta_blocks(family, f, seq)
    osc = family.oscillation_field(f, seq, r)
    inner = np.zeros(family.size)
    outer = np.zeros(family.size)
    for j, d in enumerate(deltas):
        st = np.abs(family.stack(d)) ** r
        in_block = (family.indices >= I[j]) & (family.indices < I[j + 1])
        inner += st[in_block].max(axis=0)
        outer += st.max(axis=0)
    inner **= 1.0 / r
    outer **= 1.0 / r
    return {
        "oscillation": osc,
        "block_sup": inner,
        "full_sup": outer,
        "link1_excess": float(np.max(osc - inner)),
        "link2_excess": float(np.max(inner - outer)),
        "norms": [float(_prob_norm(v)) for v in (osc, inner, outer)],
    }


def maximal_function(family: ProjectionFamily, f, p: float = 2) -> tuple[np.ndarray, float]:
    """Pointwise ``max_t |P_t f|`` and its ``L^p`` norm."""
    field = np.abs(family.stack(f)).max(axis=0)
    return field, float(_prob_norm(field, p))


def lattice_identity_residual(family: ProjectionFamily, f, s, t) -> float:
    """``max |P_s P_t f - P_{min(s,t)} f|``."""
    lhs = family.apply(s, family.apply(t, f))
    rhs = family.apply(min(int(s), int(t)), f)
    return float(np.max(np.abs(np.asarray(lhs) - np.asarray(rhs))))


def smooth_sharp_comparison(f, levels: Sequence[int] | None = None, bump: SmoothBump | None = None) -> dict:
    """``C = sum_n ||(T_{2^n} - P_{2^n}) f||_2^2 / ||f||_2^2`` for smooth ``T`` and sharp ``P``."""
    f = np.asarray(f)
    N = f.shape[-1]
    if levels is None:
        levels = range(int(math.log2(max(N // 2, 1))) + 1)
    total = 0.0
    per_level = []
    for n in levels:
        diff = smooth_dilate_multiplier(f, n, bump) - fourier_cutoff(f, 2**n)
        e = float(np.sum(np.abs(diff) ** 2))
        per_level.append(e)
        total += e
    norm2 = float(np.sum(np.abs(f) ** 2))
    return {"levels": list(levels), "per_level": per_level, "constant": total / norm2 if norm2 else 0.0}


def doob_ratio(K: int, trials: int, seed: int = 0) -> dict:
    """Largest observed ``||max_n |E[f|F_n]| ||_2 / ||f||_2`` over random ``f``."""
    rng = np.random.default_rng(seed)
    fam = MartingaleFamily(K)
    ratios = []
    for _ in range(trials):
        f = rng.standard_normal(1 << K) * rng.exponential(1.0, 1 << K) ** 2
        _, mnorm = maximal_function(fam, f)
        ratios.append(mnorm / float(_prob_norm(f)))
    return {"K": K, "trials": trials, "max_ratio": max(ratios), "mean_ratio": float(np.mean(ratios))}


def rademacher_menshov_curve(sizes: Sequence[int], trials: int, seed: int = 0) -> dict:
    """Largest observed maximal partial-sum ratio for Fourier systems versus ``log(N+1)``.

    The growth slope is the least-squares slope of ratio against ``log(N+1)``.
    """
    rng = np.random.default_rng(seed)
    ratios = []
    for N in sizes:
        fam = PartialSumFamily(OrthonormalSystem.fourier(N))
        best = 0.0
        for _ in range(trials):
            f = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            _, mnorm = maximal_function(fam, f)
            best = max(best, mnorm / float(_prob_norm(f)))
        ratios.append(best)
    logs = np.log(np.asarray(sizes, dtype=float) + 1)
    slope = float(np.polyfit(logs, ratios, 1)[0]) if len(sizes) > 1 else float("nan")
    return {"sizes": list(sizes), "ratios": ratios, "log_sizes": logs.tolist(), "slope": slope}
