"""Experiment runner: invariant batteries, constant estimates and plot data.

``run_verify`` executes the battery of a scenario and returns a JSON-ready
report together with an exit code (0 pass, 1 violation, 2 configuration
error).  ``run_estimate`` sweeps ``J`` and records the largest observed
ratio ``||O^r_{I,J}||_p / ||f||_p`` over seeded random functions and
sequences; those numbers are lower bounds for the operator constants and
are reported as such.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import yaml

from . import compose, dynamics, projections, seminorms
from .seminorms import DomainError, IncreasingSequence, ParamFamily

__all__ = [
    "SCENARIOS",
    "ConfigError",
    "ExperimentConfig",
    "Battery",
    "ConstantEstimate",
    "run_verify",
    "run_estimate",
    "long_short_split_report",
    "emit_plot_data",
    "read_plot_data",
    "report_json",
    "random_function",
    "birkhoff_stack",
]

SCENARIOS = (
    "seminorm_chain",
    "martingale_osc",
    "carleson_osc",
    "dz_theorem",
    "thm31_hypotheses",
    "eq42_telescoping",
    "long_short_split",
)

DEFAULT_TOLERANCES = {
    "inequality": 1e-10,
    "projection_identity": 1e-12,
    "block_identity": 1e-12,
    "birkhoff_telescoping": 1e-13,
    "multiparam_telescoping": 1e-11,
    "composition": 1e-12,
    "bessel": 1e-12,
    "commutation": 1e-12,
    "golden": 1e-12,
    "gauss": 1e-10,
    "dz_bound_factor": 5.0,
    "doob_constant": 2.0,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 2)."""


@dataclass
class ExperimentConfig:
    scenario: str = "seminorm_chain"
    seed: int = 0
    trials: int = 100
    K: int = 14
    N: int = 101
    d: int = 2
    n_max: int = 12
    J_values: list = field(default_factory=lambda: [4, 8, 16, 32, 64])
    r: float = 2.0
    p_values: list = field(default_factory=lambda: [2.0])
    family: str | None = None
    M_max: int = 256
    tau: list | None = None
    C_split: float = 8.0
    tolerances: dict = field(default_factory=dict)
    mutation: str | None = None
    report: str | None = None
    plot_dir: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit nonnegative integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        for name in ("K", "N", "d", "n_max", "M_max"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.n_max < 2:
            raise ConfigError("n_max must be at least 2")
        if not self.J_values or any(not isinstance(j, int) or j < 1 for j in self.J_values):
            raise ConfigError("J_values must be a nonempty list of positive integers")
        if not self.r >= 1:
            raise ConfigError("r must be at least 1")
        if not self.p_values or any(not p >= 1 for p in self.p_values):
            raise ConfigError("p_values must be a nonempty list of exponents >= 1")
        if self.tau is not None and any(not t > 1 for t in self.tau):
            raise ConfigError("lacunary ratios tau must exceed 1")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
        if self.mutation is not None and self.mutation not in seminorms.MUTATIONS:
            raise ConfigError(f"unknown mutation {self.mutation!r}")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ExperimentConfig":
        """Read a YAML (or JSON, which YAML accepts) key-value file."""
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# assertion bookkeeping
# ---------------------------------------------------------------------------


class Battery:
    """Aggregates checks by name: count, violations and the smallest slack seen."""

    def __init__(self):
        self.entries: dict[str, dict] = {}

    def _entry(self, name: str, prop: str, tol: float) -> dict:
        if name not in self.entries:
            self.entries[name] = {"name": name, "property": prop, "tolerance": tol, "count": 0,
                                  "violations": 0, "min_slack": math.inf, "worst_value": None}
        return self.entries[name]

    def _record(self, e: dict, slack: float, value: float):
        e["count"] += 1
        if not slack >= 0:
            e["violations"] += 1
        if slack < e["min_slack"] or e["worst_value"] is None or math.isnan(slack):
            e["min_slack"] = slack
            e["worst_value"] = value

    def leq(self, name: str, prop: str, lhs: float, rhs: float, tol: float):
        """Record ``lhs <= rhs + tol``."""
        e = self._entry(name, prop, tol)
        self._record(e, float(rhs) + tol - float(lhs), float(lhs) - float(rhs))

    def small(self, name: str, prop: str, deviation: float, tol: float):
        """Record ``deviation <= tol``."""
        e = self._entry(name, prop, tol)
        self._record(e, tol - float(deviation), float(deviation))

    def truth(self, name: str, prop: str, ok: bool):
        e = self._entry(name, prop, 0.0)
        self._record(e, 0.0 if ok else -1.0, 0.0 if ok else 1.0)

    def info(self, name: str, prop: str, value):
        """Informational measurement: never fails."""
        e = self.entries.setdefault(name, {"name": name, "property": prop, "informational": True})
        e["value"] = value

    @property
    def violations(self) -> int:
        return sum(e.get("violations", 0) for e in self.entries.values())

    def to_list(self) -> list[dict]:
        out = []
        for e in self.entries.values():
            e = dict(e)
            if "violations" in e:
                e["passed"] = e["violations"] == 0
                if e["min_slack"] == math.inf:
                    e["min_slack"] = None
            out.append(e)
        return out


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def report_json(report: dict) -> str:
    return json.dumps(_clean(report), indent=2) + "\n"


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def random_function(rng: np.random.Generator, shape, ensemble: str | int) -> np.ndarray:
    """Random real function from one of the ``gaussian``, ``spikes`` or ``trig`` ensembles."""
    if isinstance(ensemble, int):
        ensemble = ("gaussian", "spikes", "trig")[ensemble % 3]
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    size = math.prod(shape)
    if ensemble == "gaussian":
        return rng.standard_normal(shape)
    if ensemble == "spikes":
        f = np.zeros(size)
        k = max(1, int(rng.integers(1, max(2, size // 16) + 1)))
        f[rng.choice(size, k, replace=False)] = rng.standard_normal(k) * 4
        return f.reshape(shape)
    if ensemble == "trig":
        grids = np.meshgrid(*[np.arange(n) / n for n in shape], indexing="ij")
        f = np.zeros(shape)
        for _ in range(4):
            freq = rng.integers(-6, 7, size=len(shape))
            phase = rng.uniform(0, 2 * np.pi)
            f += rng.standard_normal() * np.cos(2 * np.pi * sum(fr * g * n for fr, g, n in zip(freq, grids, shape))
                                                + phase)
        return f
    raise ConfigError(f"unknown ensemble {ensemble!r}")


def _random_family(rng: np.random.Generator, n_max: int) -> ParamFamily:
    n = int(rng.integers(2, n_max + 1))
    style = int(rng.integers(5))
    if style == 0:
        vals = rng.standard_normal(n)
    elif style == 1:
        vals = rng.integers(-3, 4, n).astype(float)
    elif style == 2:
        vals = np.cumsum(rng.exponential(size=n))
    elif style == 3:
        vals = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        vals = np.where(rng.random(n) < 0.3, rng.standard_normal(n) * 5, 0.0)
    if rng.random() < 0.5:
        index = list(range(n))
    else:
        pts = set()
        while len(pts) < n:
            pts.add(Fraction(int(rng.integers(-50, 50)), int(rng.integers(1, 8))))
        index = sorted(pts)
    return ParamFamily(index, vals)


def _random_positions(rng: np.random.Generator, n: int, J: int) -> list[int]:
    """``J + 1`` sorted distinct positions in ``0..n-1``, uniform or log-uniform."""
    if J + 1 > n:
        raise DomainError("not enough indices for the requested J")
    if rng.random() < 0.5:
        return sorted(int(v) for v in rng.choice(n, J + 1, replace=False))
    pos = set(int(v) for v in np.floor(np.exp(rng.uniform(0, math.log(n), 4 * (J + 1)))) - 1)
    pos = sorted(p for p in pos if 0 <= p < n)
    if len(pos) > J + 1:
        pos = sorted(int(v) for v in rng.choice(pos, J + 1, replace=False))
    rest = [p for p in range(n) if p not in set(pos)]
    if len(pos) < J + 1:
        pos = sorted(pos + [int(v) for v in rng.choice(rest, J + 1 - len(pos), replace=False)])
    return pos


def _lp_norm(field: np.ndarray, p: float) -> float:
    a = np.abs(field).reshape(-1)
    return float(np.mean(a**p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# verify scenarios
# ---------------------------------------------------------------------------


def _golden_checks(b: Battery, cfg: ExperimentConfig):
    """Frozen examples and cross-checks that pin down block and sequence conventions."""
    tol = cfg.tol("golden")
    fam = ParamFamily.from_sequence([0.0, 0.0, 5.0, 0.0])
    b.small("golden.half_open_blocks", "oscillation blocks are half-open [I_j, I_{j+1})",
            abs(seminorms.oscillation(fam, [0, 2, 3], 2).value - 0.0), tol)
    fam = ParamFamily.from_sequence([0.0, 1.0, 0.0, 1.0, 0.0])
    b.small("golden.oscillation_value", "oscillation of (0,1,0,1,0) along (0,2,4), r=2",
            abs(seminorms.oscillation(fam, [0, 2, 4], 2).value - math.sqrt(2)), tol)
    fam = ParamFamily.from_sequence([0.0, 3.0, 1.0, 2.0])
    b.small("golden.empty_sup_zero", "supremum over an empty block contributes zero",
            abs(seminorms.oscillation(fam, [0, 2, 3], 2, subdomain=[0, 3]).value - 0.0), tol)
    try:
        IncreasingSequence([0, 1, 1, 2])
        rejected = False
    except DomainError:
        rejected = True
    b.truth("golden.strict_sequences", "sequences with repeated entries are rejected", rejected)
    try:
        IncreasingSequence([(0, 0), (1, 0), (2, 1)])
        rejected = False
    except DomainError:
        rejected = True
    b.truth("golden.strict_coordinatewise", "multi-parameter sequences increase in every coordinate", rejected)
    fam = ParamFamily.from_sequence([0.0, 1.0, 0.0, 1.0])
    b.small("golden.sup_oscillation_value", "sup oscillation of (0,1,0,1), r=2",
            abs(seminorms.sup_oscillation(fam, 2).value - 1.0), tol)
    # enumeration through oscillation() against the dynamic programme
    rng = _trial_rng(cfg.seed, 10**6)
    for _ in range(20):
        n = int(rng.integers(3, 7))
        fam = ParamFamily.from_sequence(rng.integers(-3, 4, n).astype(float))
        r = float(rng.choice([1.0, 2.0]))
        best = 0.0
        for size in range(2, n + 1):
            for seq in itertools.combinations(range(n), size):
                best = max(best, seminorms.oscillation(fam, list(seq), r).value)
        b.small("golden.enumeration_matches_dp", "max over sequences of oscillation equals sup_oscillation",
                abs(best - seminorms.sup_oscillation(fam, r).value), tol)


def _scenario_seminorm_chain(cfg: ExperimentConfig, b: Battery):
    tol = cfg.tol("inequality")
    _golden_checks(b, cfg)
    r_choices = [1.0, 1.5, 2.0, 3.0]
    lam_choices = [0.25, 0.5, 1.0]
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, trial)
        fam = _random_family(rng, cfg.n_max)
        n = len(fam)
        r = r_choices[trial % 4] if rng.random() < 0.8 else float(rng.uniform(1, 4))
        lam = lam_choices[trial % 3] if rng.random() < 0.8 else float(rng.uniform(0.05, 2))
        a = fam.values
        norm_r = float(np.sum(np.abs(a) ** r) ** (1 / r))
        J = int(rng.integers(1, n))
        pos = _random_positions(rng, n, J)
        seq = [fam.points[i] for i in pos]
        O = seminorms.oscillation(fam, seq, r).value
        V = seminorms.variation(fam, r).value
        supO = seminorms.sup_oscillation(fam, r).value
        b.leq("crude_bound", "O <= 2 (sum_t |a_t|^r)^(1/r)", O, 2 * norm_r, tol)
        b.leq("chain.osc_le_var", "O <= V^r", O, V, tol)
        b.leq("chain.sup_osc_le_var", "sup_I O <= V^r", supO, V, tol)
        b.leq("chain.var_le_2norm", "V^r <= 2 (sum_t |a_t|^r)^(1/r)", V, 2 * norm_r, tol)
        b.leq("sup_osc_dominates", "O along I <= sup over sequences with the same J",
              O, seminorms.sup_oscillation(fam, r, J_max=J).value, tol)
        t0 = int(rng.integers(n))
        b.leq("sup_bound", "sup_t |a_t| <= |a_t0| + V^r", np.abs(a).max(), abs(a[t0]) + V, tol)
        r2 = r + float(rng.uniform(0.1, 2))
        b.leq("variation_monotone_r", "V^r2 <= V^r1 for r1 < r2", seminorms.variation(fam, r2).value, V, tol)
        if n > 2:
            keep = sorted(int(v) for v in rng.choice(n, int(rng.integers(2, n)), replace=False))
            b.leq("variation_monotone_index", "V^r over a subset <= V^r over the full index set",
                  seminorms.variation(fam.restrict([fam.points[i] for i in keep]), r).value, V, tol)
        N_lam = seminorms.jump_count(fam, lam).value
        b.leq("jump_bridge", "lambda N_lambda^(1/r) <= V^r", lam * N_lam ** (1 / r), V, tol)
        NN = seminorms.overlap_jump_count(fam, lam).value
        b.leq("sandwich.lower", "N_lambda <= overlapping N_lambda", N_lam, NN, 0.0)
        b.leq("sandwich.upper", "overlapping N_lambda <= N_(lambda/2)", NN,
              seminorms.jump_count(fam, lam / 2).value, 0.0)
        # maximal domination with base index min(I) and the block [min, max)
        lhs = np.abs(a[:-1]).max()
        b.leq("maximal_domination", "sup_{t < max I} |a_t| <= |a_min| + sup oscillation (J = 1)",
              lhs, abs(a[0]) + seminorms.sup_oscillation(fam, r, J_max=1).value, tol)
        b.leq("maximal_domination_sup", "sup_{t < max I} |a_t| <= |a_min| + sup oscillation",
              lhs, abs(a[0]) + supO, tol)
        g = fam.with_values(rng.standard_normal(n))
        Og = seminorms.oscillation(g, seq, r).value
        Ofg = seminorms.oscillation(fam.with_values(a + g.values), seq, r).value
        b.leq("subadditivity", "O(a + b) <= O(a) + O(b)", Ofg, O + Og, tol)
        split = rng.random(n) < 0.5
        J1 = [fam.points[i] for i in range(n) if split[i]]
        J2 = [fam.points[i] for i in range(n) if not split[i]]
        b.leq("disjoint_union", "O over J1 u J2 <= O over J1 + O over J2", O,
              seminorms.oscillation(fam, seq, r, subdomain=J1).value
              + seminorms.oscillation(fam, seq, r, subdomain=J2).value, tol)


def _projection_battery(b: Battery, cfg: ExperimentConfig, label: str, make: Callable, ortho: bool):
    """Lattice identity, block identity, Bessel bound and oscillation chain for one family kind."""
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, trial)
        fam = make(rng)
        f = random_function(rng, fam.size, trial)
        idx = fam.indices
        s, t = (int(v) for v in rng.choice(idx, 2, replace=False))
        b.small(f"{label}.lattice_identity", "P_s P_t f = P_min(s,t) f for s != t",
                projections.lattice_identity_residual(fam, f, s, t), cfg.tol("projection_identity"))
        b.small(f"{label}.idempotent", "P_t P_t f = P_t f",
                projections.lattice_identity_residual(fam, f, t, t), cfg.tol("projection_identity"))
        if len(idx) >= 3:
            J = int(rng.integers(1, min(len(idx) - 1, 8) + 1))
            pos = _random_positions(rng, len(idx), J)
            seq = [int(idx[p]) for p in pos]
            gaps = [j for j in range(J) if pos[j + 1] - pos[j] >= 2]
            if gaps:
                j = gaps[int(rng.integers(len(gaps)))]
                tt = int(idx[int(rng.integers(pos[j] + 1, pos[j + 1]))])
                rep = projections.thm31_decomposition_check(fam, f, seq, tt)
                b.small(f"{label}.block_identity", "(P_t - P_Ij) f = P_t (P_Ij+1 - P_Ij) f",
                        rep["max_deviation"], cfg.tol("block_identity"))
            if ortho:
                _, deltas = projections._delta_blocks(fam, f, seq)
                b.leq(f"{label}.bessel", "sum_j ||D_j f||^2 <= ||f||^2",
                      float(np.sum(np.abs(deltas) ** 2)), float(np.sum(np.abs(f) ** 2)), cfg.tol("bessel"))
            chain = projections.oscillation_chain(fam, f, seq, cfg.r)
            b.small(f"{label}.chain_link1", "O(P_t f) <= (sum_j sup_block |P_t D_j f|^r)^(1/r)",
                    max(chain["link1_excess"], 0.0), cfg.tol("inequality"))
            b.small(f"{label}.chain_link2", "block sup <= sup over the full index set",
                    max(chain["link2_excess"], 0.0), cfg.tol("inequality"))
            st = fam.stack(f)
            osc1 = projections.ProjectionFamily.oscillation_field(fam, f, [int(idx[0]), int(idx[-1])], cfg.r, st)
            b.leq(f"{label}.maximal_domination", "max_{t < max I} |P_t f| <= |P_min f| + O along (min, max)",
                  float(np.max(np.abs(st[:-1]).max(axis=0) - np.abs(st[0]) - osc1)), 0.0, cfg.tol("inequality"))


def _scenario_martingale(cfg: ExperimentConfig, b: Battery):
    _projection_battery(b, cfg, "martingale",
                        lambda rng: projections.MartingaleFamily(int(rng.integers(2, 9))), ortho=True)
    _projection_battery(b, cfg, "haar_filtration",
                        lambda rng: projections.HaarFiltrationFamily(int(rng.integers(2, 6))), ortho=True)
    for trial in range(min(cfg.trials, 50)):
        rng = _trial_rng(cfg.seed, trial)
        fam = projections.HaarFiltrationFamily(int(rng.integers(3, 8)))
        f = random_function(rng, fam.size, trial)
        J = int(rng.integers(1, min(12, fam.size)))
        seq = _random_positions(rng, fam.size, J)
        fast = fam.oscillation_field(f, seq, cfg.r)
        slow = projections.ProjectionFamily.oscillation_field(fam, f, seq, cfg.r)
        b.small("haar_filtration.fast_path", "pointwise oscillation: level walk equals full stack",
                float(np.max(np.abs(fast - slow))), cfg.tol("block_identity"))
    rep = projections.doob_ratio(min(cfg.K, 12), min(cfg.trials, 50), cfg.seed)
    b.leq("doob_maximal", "||max_n |E[f|F_n]| ||_2 <= 2 ||f||_2 (observed sup)", rep["max_ratio"],
          cfg.tol("doob_constant"), 0.0)
    b.info("doob_ratio", "largest observed Doob ratio", rep)


def _scenario_carleson(cfg: ExperimentConfig, b: Battery):
    _projection_battery(b, cfg, "cutoff",
                        lambda rng: projections.CutoffFamily(int(rng.integers(8, 65))), ortho=True)
    _projection_battery(b, cfg, "fourier_partial_sums",
                        lambda rng: projections.PartialSumFamily(
                            projections.OrthonormalSystem.fourier(int(rng.integers(4, 33)))), ortho=True)
    _projection_battery(b, cfg, "random_partial_sums",
                        lambda rng: projections.PartialSumFamily(
                            projections.OrthonormalSystem.random(int(rng.integers(4, 25)),
                                                                 int(rng.integers(2**31)))), ortho=True)
    rng = _trial_rng(cfg.seed, 0)
    b.info("smooth_vs_sharp", "sum_n ||(T_2^n - P_2^n) f||^2 / ||f||^2",
           projections.smooth_sharp_comparison(rng.standard_normal(1 << 12))["constant"])
    b.info("rademacher_menshov", "maximal partial-sum ratio against log(N+1)",
           projections.rademacher_menshov_curve([8, 16, 32, 64, 128], min(cfg.trials, 10), cfg.seed))


def _scenario_thm31(cfg: ExperimentConfig, b: Battery):
    _projection_battery(b, cfg, "martingale", lambda rng: projections.MartingaleFamily(int(rng.integers(2, 8))), True)
    _projection_battery(b, cfg, "cutoff", lambda rng: projections.CutoffFamily(int(rng.integers(8, 49))), True)
    _projection_battery(b, cfg, "haar_partial_sums",
                        lambda rng: projections.PartialSumFamily(
                            projections.OrthonormalSystem.haar(int(rng.integers(2, 6)))), True)
    rng = _trial_rng(cfg.seed, 0)
    bump = projections.SmoothBumpFamily(64)
    f = rng.standard_normal(64)
    b.info("bump.idempotence_defect", "max |T_n T_n f - T_n f| for the smooth multiplier (not a projection)",
           max(projections.lattice_identity_residual(bump, f, int(t), int(t)) for t in bump.indices))


def _scenario_dz(cfg: ExperimentConfig, b: Battery):
    P = dynamics.IntPolynomial.univariate
    g = compose.gauss_checkpoint(cfg.N if _is_prime(cfg.N) else 101)
    b.small("gauss.sup_average", "sup_x |A_N f| = N^(-1/2) for P = m^2 and a nontrivial character",
            g["deviation"], cfg.tol("gauss"))
    rng = _trial_rng(cfg.seed, 0)
    N = cfg.N
    f = random_function(rng, (N, N), "gaussian")
    f = f - f.mean(axis=0, keepdims=True)
    f = f - f.mean(axis=1, keepdims=True)
    rep = compose.dz_product_bound(f, [P([0, 0, 1]), P([0, 0, 0, 1])])
    b.leq("dz.product_bound", "sup |A_(N,N) f| <= factor * N^(-1) c_2 c_3 ||f||_2 (fiber-mean-zero f)",
          rep["deviation"], cfg.tol("dz_bound_factor") * rep["bound"], 0.0)
    b.info("dz.product_bound_report", "measured one-parameter constants and ratio", rep)
    b.info("dz.schedule", "deviation along M = (N, 2N, 4N, 8N)",
           compose.dz_convergence_probe(f, [P([0, 0, 1]), P([0, 0, 0, 1])], [N, 2 * N, 4 * N, 8 * N]))
    n_small = 31
    for trial in range(min(cfg.trials, 100)):
        rng = _trial_rng(cfg.seed, trial)
        M1, M2 = (int(v) for v in rng.integers(1, 12, 2))
        fac1 = compose.AverageFactor(P([0, 1]), (-1, 0), n_small, [M1])
        fac2 = compose.AverageFactor(P([0, 0, 1]), (0, -1), n_small, [M2])
        h = random_function(rng, (n_small, n_small), trial)
        fam = compose.ComposedFamily([fac1, fac2], check=False)
        composed = fam.apply((M1, M2), h)
        direct = dynamics.ergodic_average(dynamics.LatticeFunction(h, "cyclic"),
                                          dynamics.product_spec([fac1.spec(M1), fac2.spec(M2)]), "direct").values
        scale = float(np.max(np.abs(h))) or 1.0
        b.small("dz.composition", "A_(M1,M2) = A_M1 o A_M2 against the direct double sum (relative)",
                float(np.max(np.abs(composed - direct))) / scale, cfg.tol("composition"))
        swapped = fac2.apply(M2, fac1.apply(M1, h))
        b.small("dz.commutation", "A_M1 A_M2 = A_M2 A_M1 (relative)",
                float(np.max(np.abs(composed - swapped))) / scale, cfg.tol("commutation"))


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(math.isqrt(n)) + 1))


def _scenario_eq42(cfg: ExperimentConfig, b: Battery):
    P = dynamics.IntPolynomial.univariate
    K = 5
    mart = compose.ComposedFamily([
        compose.ProjectionFactor(projections.MartingaleFamily(K), 0, 2),
        compose.ProjectionFactor(projections.MartingaleFamily(K), 1, 2)])
    N = 23
    avg = compose.ComposedFamily([
        compose.AverageFactor(P([0, 1]), (-1, 0), N, range(1, 9)),
        compose.AverageFactor(P([0, 0, 1]), (0, -1), N, range(1, 9))])
    for trial in range(cfg.trials):
        rng = _trial_rng(cfg.seed, trial)
        for label, fam in (("martingale", mart), ("averages", avg)):
            axes = fam.axes
            I_j = tuple(int(rng.choice(a)) for a in axes)
            if trial % 10 == 0:
                n = I_j
            else:
                n = tuple(int(rng.choice(a[a >= c])) for a, c in zip(axes, I_j))
            f = random_function(rng, fam.shape, trial)
            rep = compose.telescoping_identity_check(fam, n, I_j, f)
            b.small(f"telescoping.{label}", "T_n f - T_Ij f = sum_m T^(m) (T^m_nm - T^m_Ijm) f (relative)",
                    rep["relative_deviation"], cfg.tol("multiparam_telescoping"))
            if n == I_j:
                b.small(f"telescoping.{label}.vacuous", "n = I_j gives zero on both sides", rep["lhs_max"], 0.0)
        g = dynamics.LatticeFunction.cyclic(random_function(rng, 101, trial))
        M = int(rng.integers(1, 60))
        rep = dynamics.telescoping_check(g, (int(rng.integers(1, 101)),), M)
        b.small("telescoping.birkhoff", "A_M (g - g o T) = (g o T - g o T^(M+1)) / M (relative)",
                rep.relative_deviation, cfg.tol("birkhoff_telescoping"))
        if trial < min(cfg.trials, 20):
            seq = [(0, 0), (int(rng.integers(1, 3)), int(rng.integers(1, 3))), (K, K)]
            rep = compose.multiparam_chain_check(mart, random_function(rng, mart.shape, trial), seq, cfg.r)
            b.leq("composition_chain", "box sup <= sum_m sup_n' T^(m) (axis-m block sup)",
                  rep["max_excess"], 0.0, cfg.tol("inequality"))


def _scenario_long_short(cfg: ExperimentConfig, b: Battery):
    for trial in range(min(cfg.trials, 50)):
        rng = _trial_rng(cfg.seed, trial)
        L = int(rng.integers(1, 6))
        q = int(rng.integers(2, 5))
        grid = _dyadic_refined_grid(L, q)
        m = 32
        if trial % 2:
            f = random_function(rng, m, trial)
            vals = np.stack([_smooth_at_scale(f, float(t)) for t in grid])
        else:
            vals = np.cumsum(rng.standard_normal((len(grid), m)) / np.sqrt(len(grid)), axis=0)
        rep = long_short_split_report(grid, vals, cfg.r, cfg.r, cfg.C_split)
        b.leq("long_short.bound", "sup-oscillation <= C (dyadic oscillation + l2 short variations)",
              rep["lhs"], cfg.C_split * rep["rhs"], cfg.tol("inequality"))
        dyadic = [t for t in grid if _is_power_of_two(t)]
        rows = [grid.index(t) for t in dyadic]
        if len(dyadic) >= 2:
            rep2 = long_short_split_report(dyadic, vals[rows], cfg.r, cfg.r, cfg.C_split)
            b.leq("long_short.dyadic_only", "grid of dyadic times: ratio <= 1", rep2["lhs"], rep2["rhs"], 1e-12)


SCENARIO_RUNNERS = {
    "seminorm_chain": _scenario_seminorm_chain,
    "martingale_osc": _scenario_martingale,
    "carleson_osc": _scenario_carleson,
    "dz_theorem": _scenario_dz,
    "thm31_hypotheses": _scenario_thm31,
    "eq42_telescoping": _scenario_eq42,
    "long_short_split": _scenario_long_short,
}


def run_verify(config: ExperimentConfig | dict) -> tuple[dict, int]:
    """Run the battery of ``config.scenario``; returns ``(report, exit_code)``."""
    try:
        cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    except ConfigError as exc:
        return {"error": str(exc)}, 2
    b = Battery()
    with seminorms.mutation(cfg.mutation):
        SCENARIO_RUNNERS[cfg.scenario](cfg, b)
    report = {
        "kind": "verify",
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "mutation": cfg.mutation,
        "assertions": b.to_list(),
        "violations": b.violations,
        "passed": b.violations == 0,
    }
    return _clean(report), 0 if b.violations == 0 else 1


# ---------------------------------------------------------------------------
# long/short split
# ---------------------------------------------------------------------------


def _is_power_of_two(t) -> bool:
    t = Fraction(t)
    if t <= 0:
        return False
    num, den = t.numerator, t.denominator
    return (num & (num - 1) == 0) and (den & (den - 1) == 0) and (num == 1 or den == 1)


def _dyadic_refined_grid(L: int, q: int) -> list[Fraction]:
    """``[1, 2^L]`` with every block ``[2^n, 2^(n+1)]`` cut into ``q`` equal steps."""
    pts = set()
    for n in range(L):
        lo = Fraction(2**n)
        for i in range(q + 1):
            pts.add(lo + lo * Fraction(i, q))
    return sorted(pts)


def _smooth_at_scale(f: np.ndarray, t: float) -> np.ndarray:
    """Gaussian smoothing of ``f`` on ``Z_m`` with width ``t``."""
    m = len(f)
    xi = projections.balanced_frequencies(m) / m
    return np.fft.ifft(np.fft.fft(f) * np.exp(-((np.pi * xi * t) ** 2))).real


def _pair_weights(vals: np.ndarray, r: float) -> np.ndarray:
    """``W[i, j, x] = max_{i <= t < j} |a_t(x) - a_i(x)|^r`` (zero unless i < j)."""
    n, m = vals.shape
    W = np.zeros((n, n, m))
    for i in range(n - 1):
        d = np.abs(vals[i:n - 1] - vals[i]) ** r
        W[i, i + 1:] = np.maximum.accumulate(d, axis=0)
    return W


def _best_chain_total(W: np.ndarray) -> tuple[float, list[int]]:
    n = W.shape[0]
    A = np.where(np.triu(np.ones((n, n), dtype=bool), 1), W, -np.inf)
    return seminorms._unbounded_best(A, np.arange(n))


def _sup_osc_norm(vals: np.ndarray, r: float, p: float) -> tuple[float, bool]:
    """``sup_I ||O^r_I||_p`` over all sequences; exact when ``p == r``, else a lower bound."""
    n, m = vals.shape
    W = _pair_weights(vals, r)
    if p == r:
        total, _ = _best_chain_total(W.mean(axis=2))
        return max(total, 0.0) ** (1 / r), True
    best = 0.0
    for x in range(m):
        _, chain = _best_chain_total(W[:, :, x])
        terms = sum(W[i, j] for i, j in zip(chain, chain[1:])) ** (1 / r)
        best = max(best, _lp_norm(terms, p))
    return best, False


def _variation_field(vals: np.ndarray, r: float) -> np.ndarray:
    """Pointwise r-variation by suffix dynamic programming."""
    n, m = vals.shape
    best = np.zeros((n, m))
    for i in range(n - 2, -1, -1):
        cand = np.abs(vals[i + 1:] - vals[i]) ** r + best[i + 1:]
        best[i] = cand.max(axis=0)
    return best.max(axis=0) ** (1 / r)


def long_short_split_report(grid: Sequence, values, r: float = 2.0, p: float = 2.0, C: float = 8.0) -> dict:
    """Compare the full-grid sup-oscillation with its long/short decomposition.

    ``values`` has shape ``(len(grid), m)`` (or ``(len(grid),)`` for a
    scalar family).  LHS is ``sup_I ||O^r_I||_p`` over the whole grid; RHS
    is the same over dyadic times plus ``||(sum_n V^r(block n)^2)^(1/2)||_p``
    with blocks ``[2^n, 2^(n+1)]``.  Norms use the normalized measure.
    """
    grid = [Fraction(t) for t in grid]
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if len(grid) != len(vals) or len(grid) < 2:
        raise DomainError("grid and values must match and hold at least two times")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("grid must be strictly increasing")
    lo, hi = grid[0], grid[-1]
    if not (_is_power_of_two(lo) and _is_power_of_two(hi)):
        raise DomainError("grid must start and end at dyadic times 2^n")
    dyadic = []
    t = lo
    while t <= hi:
        if t not in grid:
            raise DomainError(f"grid does not refine the dyadic blocks: {t} missing")
        dyadic.append(t)
        t *= 2
    pos = {t: i for i, t in enumerate(grid)}
    lhs, exact = _sup_osc_norm(vals, r, p)
    dyadic_rows = [pos[t] for t in dyadic]
    long_term = _sup_osc_norm(vals[dyadic_rows], r, p)[0] if len(dyadic) >= 2 else 0.0
    short_sq = np.zeros(vals.shape[1])
    for a, b_ in zip(dyadic, dyadic[1:]):
        rows = list(range(pos[a], pos[b_] + 1))
        short_sq += _variation_field(vals[rows], r) ** 2
    short_term = _lp_norm(np.sqrt(short_sq), p)
    rhs = long_term + short_term
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    return {"lhs": lhs, "lhs_exact": exact, "dyadic_term": long_term, "short_term": short_term,
            "rhs": rhs, "ratio": ratio, "C": C, "passed": lhs <= C * rhs + 1e-12}


# ---------------------------------------------------------------------------
# constant estimation
# ---------------------------------------------------------------------------


@dataclass
class ConstantEstimate:
    """Largest observed ``||O^r_{I,J}||_p / ||f||_p`` per ``J`` (a lower bound for the constant)."""

    label: str
    p: float
    samples: int
    J_values: list
    per_J: list
    tau: float | None = None

    @property
    def normalized(self) -> list:
        return [v / math.sqrt(J) for v, J in zip(self.per_J, self.J_values)]

    @property
    def baseline(self) -> list:
        """Curve a ``J^(1/2)`` law would follow from the first measured point."""
        J0, v0 = self.J_values[0], self.per_J[0]
        return [v0 * math.sqrt(J / J0) for J in self.J_values]

    def growth(self) -> float:
        return self.per_J[-1] / self.per_J[0] if self.per_J[0] > 0 else math.inf

    def monotone_within(self, band: float) -> bool:
        """Normalized curve never rises by more than the relative ``band``."""
        nz = self.normalized
        return all(b <= a * (1 + band) for a, b in zip(nz, nz[1:]))

    def to_dict(self) -> dict:
        return {"label": self.label, "p": self.p, "tau": self.tau, "samples": self.samples,
                "J_values": self.J_values, "per_J": self.per_J, "normalized": self.normalized,
                "baseline": self.baseline, "growth": self.growth()}


def birkhoff_stack(f: np.ndarray, M_max: int) -> np.ndarray:
    """``A_M f(x) = M^-1 sum_{m=1}^M f(x + m)`` on ``Z_N`` for ``M = 1..M_max`` via prefix sums."""
    N = len(f)
    reps = -(-(M_max + 1) // N)
    ext = np.concatenate([f] + [f] * reps)[: N + M_max + 1]
    C = np.concatenate([[0.0], np.cumsum(ext)])
    win = np.lib.stride_tricks.sliding_window_view(C[1:], N)[1:M_max + 1]
    return (win - C[1:N + 1]) / np.arange(1, M_max + 1)[:, None]


def _stack_oscillation(stack: np.ndarray, pos: Sequence[int], r: float) -> np.ndarray:
    acc = np.zeros(stack.shape[1])
    for lo, hi in zip(pos, pos[1:]):
        blk = stack[lo:hi]
        base = blk[0]
        acc += np.maximum(blk.max(axis=0) - base, base - blk.min(axis=0)) ** r
    return acc ** (1 / r)


def _estimate_setup(cfg: ExperimentConfig):
    """Return (label, space size, number of indices, evaluator factory, index of position 0)."""
    fam_kind = cfg.family or {"martingale_osc": "haar", "carleson_osc": "cutoff",
                              "dz_theorem": "birkhoff"}.get(cfg.scenario)
    if fam_kind is None:
        raise ConfigError(f"scenario {cfg.scenario!r} has no estimate sweep")
    if fam_kind == "haar":
        fam = projections.HaarFiltrationFamily(cfg.K)

        def prepare(f):
            terms = fam.pointwise_terms(f)
            return lambda pos: fam.oscillation_field(f, pos, cfg.r, terms=terms)

        return f"martingale (Haar filtration), K={cfg.K}", fam.size, fam.size, prepare, 0
    if fam_kind == "dyadic":
        fam = projections.MartingaleFamily(cfg.K)

        def prepare(f):
            st = fam.stack(f)
            return lambda pos: fam.oscillation_field(f, pos, cfg.r, stack=st)

        return f"martingale (dyadic levels), K={cfg.K}", fam.size, len(fam.indices), prepare, 0
    if fam_kind == "cutoff":
        fam = projections.CutoffFamily(1 << cfg.K)

        def prepare(f):
            st = fam.stack(f)
            return lambda pos: _stack_oscillation(st, pos, cfg.r)

        return f"sharp Fourier cutoffs, N=2^{cfg.K}", fam.size, len(fam.indices), prepare, 0
    if fam_kind == "birkhoff":
        N = 1 << cfg.K

        def prepare(f):
            st = birkhoff_stack(f, cfg.M_max)
            return lambda pos: _stack_oscillation(st, pos, cfg.r)

        return f"Birkhoff averages on Z_2^{cfg.K}, M in [1, {cfg.M_max}]", N, cfg.M_max, prepare, 1
    raise ConfigError(f"unknown estimate family {fam_kind!r}")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("OSC_LAB_THREADS", "1")))
    except ValueError:
        return 1


def run_estimate(config: ExperimentConfig | dict) -> tuple[dict, int]:
    """Sweep ``J`` and record per-``J`` largest ratios; returns ``(report, exit_code)``."""
    try:
        cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
        label, size, n_idx, prepare, first_index = _estimate_setup(cfg)
    except ConfigError as exc:
        return {"error": str(exc)}, 2
    taus = cfg.tau or [None]
    lac_sets = {}
    for tau in taus:
        if tau is None:
            continue
        top = n_idx - 1 + first_index
        lac_sets[tau] = [v - first_index for v in dynamics.lacunary(tau, top) if v >= first_index]
    Js = sorted(cfg.J_values)
    for tau in taus:
        limit = n_idx if tau is None else len(lac_sets[tau])
        if Js[-1] + 1 > limit:
            return {"error": f"J={Js[-1]} needs {Js[-1] + 1} indices, only {limit} available"}, 2

    def trial(i: int) -> np.ndarray:
        rng = _trial_rng(cfg.seed, i)
        f = random_function(rng, size, i)
        norms = [_lp_norm(f, p) for p in cfg.p_values]
        evaluate = prepare(f)
        out = np.zeros((len(taus), len(Js), len(cfg.p_values)))
        for a, tau in enumerate(taus):
            for b_, J in enumerate(Js):
                if tau is None:
                    pos = _random_positions(rng, n_idx, J)
                else:
                    lac = lac_sets[tau]
                    pos = [lac[k] for k in _random_positions(rng, len(lac), J)]
                field_ = evaluate(pos)
                for c, p in enumerate(cfg.p_values):
                    out[a, b_, c] = _lp_norm(field_, p) / norms[c] if norms[c] > 0 else 0.0
        return out

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(trial, range(cfg.trials)))
    else:
        results = [trial(i) for i in range(cfg.trials)]
    best = np.max(np.stack(results), axis=0)
    estimates = []
    for a, tau in enumerate(taus):
        for c, p in enumerate(cfg.p_values):
            estimates.append(ConstantEstimate(label, float(p), cfg.trials, Js,
                                              [float(v) for v in best[a, :, c]], tau))
    report = {"kind": "estimate", "scenario": cfg.scenario, "seed": cfg.seed, "trials": cfg.trials,
              "r": cfg.r, "label": label, "estimates": [e.to_dict() for e in estimates]}
    return _clean(report), 0


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------


def emit_plot_data(report: dict, path: str | os.PathLike | None = None) -> str:
    """Flatten per-J curves of an estimate report to CSV ``x,y,series``.

    Reports without curves give a header-only CSV.  The text is returned
    and, when ``path`` is given, written there.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "series"])
    for est in report.get("estimates", []):
        tag = f"p={est['p']:g}" + ("" if est.get("tau") is None else f",tau={est['tau']:g}")
        for key in ("per_J", "normalized", "baseline"):
            for x, y in zip(est["J_values"], est[key]):
                w.writerow([x, repr(float(y)), f"{key}[{tag}]"])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_plot_data(text: str) -> dict[str, list[tuple[float, float]]]:
    """Parse CSV produced by :func:`emit_plot_data` into ``{series: [(x, y), ...]}``."""
    out: dict[str, list] = {}
    for row in csv.DictReader(io.StringIO(text)):
        out.setdefault(row["series"], []).append((float(row["x"]), float(row["y"])))
    return out
