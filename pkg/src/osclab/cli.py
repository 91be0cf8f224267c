"""Command line entry point ``osc-lab``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import compose, dynamics, harness, projections, seminorms
from .seminorms import DomainError


def _write(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return harness.report_json(obj)


def _parse_list(text: str, cast=int) -> list:
    return [cast(v) for v in text.replace(" ", "").split(",") if v]


def _parse_points(text: str) -> list:
    """``"0,2,4"`` gives scalars; ``"0:0;1:2"`` gives tuples (``:`` or ``,`` inside ``;`` groups)."""
    if ";" in text or ":" in text:
        return [tuple(int(c) for c in grp.replace(":", ",").split(",")) for grp in text.split(";") if grp]
    return [seminorms.to_fraction(v) for v in text.split(",") if v]


def _load_family(path: str) -> seminorms.ParamFamily:
    text = Path(path).read_text()
    if path.endswith(".json") or text.lstrip().startswith("["):
        return seminorms.read_family_json(text)
    return seminorms.read_family_csv(text)


def _load_array(path: str) -> np.ndarray:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        return dynamics.LatticeFunction.from_json(data).values
    return np.asarray(data, dtype=float)


# ---------------------------------------------------------------------------


def cmd_seminorm(args) -> int:
    fam = _load_family(args.input)
    kind = args.kind
    if kind == "variation":
        val = seminorms.variation(fam, args.r)
    elif kind == "oscillation":
        if not args.seq:
            raise DomainError("--seq is required for oscillation")
        val = seminorms.oscillation(fam, _parse_points(args.seq), args.r)
    elif kind == "sup_oscillation":
        val = (seminorms.sup_oscillation(fam, args.r, args.J_max) if fam.k == 1
               else seminorms.sup_oscillation_multiparam(fam, args.r, args.J_max, seed=args.seed))
    elif kind == "jump_count":
        val = seminorms.jump_count(fam, args.lam)
    elif kind == "overlap_jump_count":
        val = seminorms.overlap_jump_count(fam, args.lam)
    else:
        _write(_dump(seminorms.convergence_certificate(fam, args.epsilon).to_dict()), args.output)
        return 0
    _write(val.to_json() + "\n", args.output)
    return 0


def cmd_average(args) -> int:
    f = dynamics.LatticeFunction.from_json(Path(args.function).read_text())
    spec = dynamics.AverageSpec.from_json(Path(args.spec).read_text())
    Ms = _parse_points(args.M) if args.M else [spec.M]
    Ms = [tuple(int(c) for c in m) if isinstance(m, tuple) else (int(m),) for m in Ms]
    out = []
    if len(Ms) >= 2:
        fam = dynamics.average_family(f, spec, Ms if spec.k > 1 else [m[0] for m in Ms])
        for i, M in enumerate(Ms):
            out.append({"M": list(M), "average": fam.field(i).to_json()})
    else:
        avg = dynamics.ergodic_average(f, spec.with_M(Ms[0]), strategy=args.strategy)
        out.append({"M": list(Ms[0]), "average": avg.to_json()})
    _write(_dump({"averages": out}), args.output)
    return 0


def _make_family(args):
    size = args.space_size
    if args.family == "martingale":
        K = size.bit_length() - 1
        if 1 << K != size:
            raise DomainError("martingale family needs a power-of-two --space-size")
        return projections.MartingaleFamily(K)
    if args.family == "cutoff":
        return projections.CutoffFamily(size)
    if args.family == "bump":
        return projections.SmoothBumpFamily(size)
    if args.system == "haar":
        K = size.bit_length() - 1
        system = projections.OrthonormalSystem.haar(K)
    elif args.system == "random":
        system = projections.OrthonormalSystem.random(size, args.seed)
    else:
        system = projections.OrthonormalSystem.fourier(size)
    return projections.PartialSumFamily(system)


def cmd_project(args) -> int:
    fam = _make_family(args)
    if args.input:
        f = _load_array(args.input)
    else:
        f = np.random.default_rng(args.seed).standard_normal(fam.size)
    if f.shape != (fam.size,):
        raise DomainError(f"input has shape {f.shape}, expected ({fam.size},)")
    members = {int(t) for t in fam.indices}
    idx = _parse_list(args.indices) if args.indices else sorted(members)
    if any(t not in members for t in idx):
        raise DomainError(f"--indices must be drawn from {sorted(members)}")
    lattice = [projections.lattice_identity_residual(fam, f, s, t) for s in idx for t in idx if s != t]
    block = []
    if fam.is_projection:
        for lo, hi in zip(idx, idx[1:]):
            for t in range(lo + 1, hi):
                if t in members:
                    block.append(projections.thm31_decomposition_check(fam, f, idx, t)["max_deviation"])
    report = {"family": fam.describe(), "is_projection": fam.is_projection,
              "sequence": idx,
              "identity_residuals": {"lattice_max": max(lattice, default=0.0),
                                     "block_identity_max": max(block, default=0.0)}}
    if len(idx) >= 2:
        fnorm = float(np.sqrt(np.mean(np.abs(f) ** 2)))
        _, sq2 = projections.block_square_function(fam, f, idx, r=2)
        osc = fam.oscillation_field(f, idx, args.r)
        report["square_function_norms"] = {"r=2": sq2, "ratio": sq2 / fnorm if fnorm else 0.0}
        report["oscillation_ratios"] = {f"r={args.r:g}": float(np.sqrt(np.mean(osc**2))) / fnorm if fnorm else 0.0}
        _, mnorm = projections.maximal_function(fam, f)
        report["maximal_ratio"] = mnorm / fnorm if fnorm else 0.0
    _write(_dump(report), args.output)
    return 0


def _build_factor(spec: dict, space: dict, axis_default: int):
    kind = spec.get("type", "average")
    dim = int(space.get("dim", 1))
    if kind == "identity":
        return compose.IdentityFactor(spec.get("indices", [0]))
    if kind == "average":
        poly = dynamics.IntPolynomial.from_json(spec["polynomial"], num_vars=1)
        shift = spec.get("shift") or [-1 if c == axis_default else 0 for c in range(dim)]
        return compose.AverageFactor(poly, shift, int(space["N"]), spec.get("indices", range(1, 9)))
    axis = int(spec.get("axis", axis_default))
    if kind == "martingale":
        fam = projections.MartingaleFamily(int(spec["K"]), spec.get("indices"))
    elif kind == "cutoff":
        fam = projections.CutoffFamily(int(space["N"]), spec.get("indices"))
    else:
        raise DomainError(f"unknown factor type {kind!r}")
    return compose.ProjectionFactor(fam, axis, dim)


def _parse_grid(text: str) -> list[list[int]]:
    return [_parse_list(g) for g in text.split(";") if g]


def cmd_multiparam(args) -> int:
    spec = json.loads(Path(args.factors).read_text())
    space = spec.get("space", {})
    grid = _parse_grid(args.grid) if args.grid else None
    factors = []
    for i, fs in enumerate(spec["factors"]):
        fs = dict(fs)
        if grid is not None:
            fs["indices"] = grid[i]
        factors.append(_build_factor(fs, space, i))
    fam = compose.ComposedFamily(factors, seed=args.seed)
    if fam.shape is None:
        raise DomainError("at least one factor must fix the model space")
    if args.input:
        f = _load_array(args.input)
    else:
        f = np.random.default_rng(args.seed).standard_normal(fam.shape)
    seq = _sequence_arg(args.seq, fam)
    r = float(spec.get("r", args.r))
    value = compose.multiparam_oscillation(fam, f, seq, r)
    tele = max(compose.telescoping_identity_check(fam, b, a, f)["max_deviation"] for a, b in zip(seq, seq[1:]))
    fnorm = float(np.sqrt(np.mean(np.abs(f) ** 2)))
    report = {"sequence": [list(p) for p in seq], "oscillation": value.to_dict(),
              "ratio": value.value / fnorm if fnorm else 0.0, "telescoping_max_deviation": tele,
              "commutation_deviation": fam.check_commutation(seed=args.seed)}
    _write(_dump(report), args.report)
    return 0


def _sequence_arg(text: str, fam: compose.ComposedFamily) -> list[tuple[int, ...]]:
    if text.startswith("random"):
        opts = dict(kv.split("=") for kv in text.partition(":")[2].split(",") if kv)
        J = int(opts.get("J", 2))
        rng = np.random.default_rng(int(opts.get("seed", 0)))
        cols = []
        for axis in fam.axes:
            if len(axis) < J + 1:
                raise DomainError(f"axis with {len(axis)} indices cannot host J={J}")
            cols.append(sorted(int(v) for v in rng.choice(axis, J + 1, replace=False)))
        return [tuple(c[j] for c in cols) for j in range(J + 1)]
    if Path(text).exists():
        text = Path(text).read_text().strip()
        try:
            data = json.loads(text)
            return [tuple(int(c) for c in p) for p in data]
        except json.JSONDecodeError:
            pass
    return [tuple(p) for p in _parse_points(text)]


def _config_from_args(args) -> harness.ExperimentConfig:
    data = {}
    if args.config:
        data = harness.ExperimentConfig.from_file(args.config).to_dict()
    for key in ("scenario", "seed", "trials", "K", "N", "mutation", "family", "M_max"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if getattr(args, "J", None):
        data["J_values"] = _parse_list(args.J)
    if getattr(args, "p", None):
        data["p_values"] = _parse_list(args.p, float)
    if getattr(args, "tau", None):
        data["tau"] = _parse_list(args.tau, float)
    if getattr(args, "report", None):
        data["report"] = args.report
    if getattr(args, "plot_dir", None):
        data["plot_dir"] = args.plot_dir
    return harness.ExperimentConfig.from_dict(data)


def cmd_verify(args) -> int:
    try:
        cfg = _config_from_args(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report, code = harness.run_verify(cfg)
    _write(_dump(report), cfg.report)
    return code


def cmd_estimate(args) -> int:
    try:
        cfg = _config_from_args(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report, code = harness.run_estimate(cfg)
    if code == 0 and cfg.plot_dir:
        Path(cfg.plot_dir).mkdir(parents=True, exist_ok=True)
        harness.emit_plot_data(report, Path(cfg.plot_dir) / f"{cfg.scenario}_curves.csv")
    if code == 2:
        print(f"config error: {report.get('error')}", file=sys.stderr)
    _write(_dump(report), cfg.report)
    return code


def _positive_int(text: str) -> int:
    # trials=0 must reach the config validation (exit 2), so only parse here
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osc-lab", description="Oscillation, variation and jump seminorms "
                                     "of parameterized families, ergodic averages and projection families.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("seminorm", help="seminorms of a scalar family read from CSV or JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", default="variation",
                   choices=["variation", "oscillation", "sup_oscillation", "jump_count",
                            "overlap_jump_count", "certificate"])
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--seq", help="increasing sequence, e.g. 0,2,4 or 0:0;1:1")
    p.add_argument("--J-max", dest="J_max", type=int)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_seminorm)

    p = sub.add_parser("average", help="polynomial ergodic averages of a lattice function")
    p.add_argument("--function", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--M", help="averaging parameters, e.g. 1,2,4 or 1:1;2:2")
    p.add_argument("--strategy", default="auto", choices=["auto", "direct", "sparse", "fft"])
    p.add_argument("--output")
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("project", help="identity residuals and square functions of a projection family")
    p.add_argument("--family", required=True, choices=["martingale", "cutoff", "bump", "orthonormal"])
    p.add_argument("--space-size", dest="space_size", type=int, required=True)
    p.add_argument("--indices", help="increasing sequence drawn from the family indices")
    p.add_argument("--system", default="fourier", choices=["fourier", "haar", "random"])
    p.add_argument("--input")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("multiparam", help="multi-parameter oscillation of a composed family")
    p.add_argument("--factors", required=True)
    p.add_argument("--grid", help="per-axis index lists separated by ';'")
    p.add_argument("--seq", required=True, help="file, explicit list, or random:J=..,seed=..")
    p.add_argument("--input")
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_multiparam)

    for name, func, helptext in (("verify", cmd_verify, "run an invariant battery"),
                                 ("estimate", cmd_estimate, "estimate oscillation constants")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config")
        p.add_argument("--scenario")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=_positive_int)
        p.add_argument("--K", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--mutation")
        p.add_argument("--report")
        if name == "estimate":
            p.add_argument("--family")
            p.add_argument("--M-max", dest="M_max", type=int)
            p.add_argument("--J")
            p.add_argument("--p")
            p.add_argument("--tau")
            p.add_argument("--plot-dir", dest="plot_dir")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
