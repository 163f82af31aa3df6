"""Experiment harness: config ingestion, verification runs, sweeps, reports.

Subcommands:

  constants   print the closed-form constant tables and optimized constants
  verify      run one experiment config: bound vs counted N across a grid schedule
  sweep       run a parameter sweep; records worst observed count/bound ratios
  partition   print the interval partition behind the circle half-moment bound
  count       raw operator counting (factorization inertia, optional dense check)

Exit codes: 0 all converged inequalities pass, 1 inequality failure,
2 hypothesis violation, 3 unconverged counts.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import _kernels
from . import bounds as B
from . import constants as C
from . import potentials as P
from . import spectral as S
from .errors import (
    DegeneratePartitionError,
    FluxDegenerateError,
    GridBudgetError,
    HypothesisError,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_HYPOTHESIS = 2
EXIT_UNCONVERGED = 3

CSV_HEADER = "theorem,psi,a,theta,constant,integral,bound,n,L,count,margin,verdict"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


@dataclass
class RunArtifact:
    """Reports plus deterministic renderings of one harness invocation."""

    reports: list = field(default_factory=list)
    stamp: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def csv(self) -> str:
        lines = [CSV_HEADER]
        for rep in self.reports:
            rows = rep.trace if rep.trace else [("", rep.count)]
            for n_label, cnt in rows:
                margin = None if cnt is None else rep.bound - cnt
                lines.append(
                    ",".join(
                        _fmt(x)
                        for x in (
                            rep.theorem,
                            rep.psi,
                            rep.a,
                            rep.theta,
                            rep.constant,
                            rep.integral,
                            rep.bound,
                            n_label,
                            rep.domain,
                            cnt,
                            margin,
                            rep.verdict,
                        )
                    )
                )
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        out = [f"calogero2d {self.stamp.get('version', '?')} verification report"]
        for k, v in self.stamp.items():
            out.append(f"  {k}: {v}")
        out.append("")
        for rep in self.reports:
            out.append(f"[{rep.verdict}] {rep.theorem}")
            out.append(f"  constant = {_fmt(rep.constant)}  (a={_fmt(rep.a)}, theta={_fmt(rep.theta)})")
            out.append(f"  integral = {_fmt(rep.integral)}   bound = {_fmt(rep.bound)}")
            if rep.trace:
                trace = ", ".join(f"n={n}: N={c}" for n, c in rep.trace)
                out.append(f"  counts   = {trace}  ({'stable' if rep.converged else 'UNCONVERGED'})")
            if rep.count is not None:
                out.append(f"  N = {rep.count}  margin = {_fmt(rep.margin)}")
            if rep.note:
                out.append(f"  note: {rep.note}")
            out.append("")
        for n in self.notes:
            out.append(f"note: {n}")
        return "\n".join(out) + "\n"

    def write(self, outdir, stem):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / f"{stem}.csv").write_text(self.csv())
        (outdir / f"{stem}.txt").write_text(self.text())
        return outdir / f"{stem}.csv", outdir / f"{stem}.txt"

    def exit_code(self) -> int:
        codes = set()
        for rep in self.reports:
            if rep.verdict == "fail":
                codes.add(EXIT_FAIL)
            elif rep.verdict == "out_of_hypothesis":
                codes.add(EXIT_HYPOTHESIS)
            elif rep.verdict == "unconverged":
                codes.add(EXIT_UNCONVERGED)
        for code in (EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_UNCONVERGED):
            if code in codes:
                return code
        return EXIT_PASS


def _stamp() -> dict:
    return {
        "version": __version__,
        "backend": _kernels.BACKEND,
        "pivot_tol_factor": f"{S.PIVOT_TOL_FACTOR:g}",
        "shift_jitter_factor": f"{S.JITTER_FACTOR:g}",
        "stability_rule": "count constant over the last three refinement levels",
    }


# ----------------------------------------------------------------------
# Config handling.
# ----------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    theorem: str
    family: str
    params: dict
    psi: float | None = None
    split: object = "optimize"  # "optimize" or {"a":..., "theta":...}
    scalar_sharp: bool = False
    shape: list | None = None  # matrix potentials
    grid: dict = field(default_factory=dict)
    mode: str = "verify"  # "verify" | "lemma4"
    sweep: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ValueError(f"config {path} must be a mapping")
        pot = raw.get("potential", {})
        return cls(
            theorem=raw.get("theorem", "operator_calogero"),
            family=pot.get("family", "well"),
            params=dict(pot.get("params", {})),
            psi=raw.get("flux"),
            split=raw.get("split", "optimize"),
            scalar_sharp=bool(raw.get("scalar_sharp", False)),
            shape=pot.get("shape"),
            grid=dict(raw.get("grid", {})),
            mode=raw.get("mode", "verify"),
            sweep=dict(raw.get("sweep", {})),
        )


def _theorem_id(cfg: ExperimentConfig) -> C.TheoremId:
    if cfg.theorem == C.AHARONOV_BOHM:
        if cfg.psi is None:
            raise ValueError("aharonov_bohm configs need a flux entry")
        return C.aharonov_bohm(float(cfg.psi))
    return C.TheoremId(cfg.theorem)


def _build_potential(cfg: ExperimentConfig, **overrides):
    params = dict(cfg.params)
    params.update(overrides)
    if cfg.family == "matrix_well":
        if cfg.shape is None:
            raise ValueError("matrix_well potentials need a shape matrix")
        params.setdefault("shape", np.asarray(cfg.shape, dtype=float))
    return P.make_potential(cfg.family, **params)


def _split_params(cfg: ExperimentConfig):
    if cfg.split == "optimize" or cfg.split is None:
        return None
    return C.SplitParams(float(cfg.split["a"]), float(cfg.split["theta"]))


# ----------------------------------------------------------------------
# Counting pipelines (one per theorem).
# ----------------------------------------------------------------------

def _levels(grid: dict, n_levels: int | None):
    k = int(n_levels if n_levels is not None else grid.get("levels", 3))
    return [int(grid.get("base_n", 400)) * 2 ** i for i in range(k)]


def _stable(counts) -> bool:
    return len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]


def _count_halfline(v, grid, n_levels):
    L = float(grid.get("domain", 20.0))
    trace = []
    for n in _levels(grid, n_levels):
        trace.append((n, S.count_negative(S.build_halfline(v, L, n)).neg))
    return trace, L


def _count_matrix(mv, grid, n_levels):
    L = float(grid.get("domain", 20.0))
    trace = []
    for n in _levels(grid, n_levels):
        trace.append((n, S.count_negative(S.build_matrix_halfline(mv, L, n)).neg))
    return trace, L


def _count_halfplane(V, grid, n_levels):
    L1 = float(grid.get("domain1", 4.0))
    L2 = float(grid.get("domain2", 4.0))
    b1 = int(grid.get("base_n1", 24))
    b2 = int(grid.get("base_n2", 48))
    k = int(n_levels if n_levels is not None else grid.get("levels", 3))
    trace = []
    for i in range(k):
        n1, n2 = b1 * 2 ** i, b2 * 2 ** i
        cnt = S.count_negative(S.build_halfplane(V, n1, n2, L1, L2)).neg
        trace.append((f"{n1}x{n2}", cnt))
    return trace, f"{L1}x{L2}"


def _count_radial_modes(V, theorem, grid, n_levels):
    flux = theorem.flux
    R = float(grid.get("domain", 12.0))
    cutoff = S.mode_cutoff(V, flux)
    if theorem.kind == C.AHARONOV_BOHM:
        nus = S.flux_mode_strengths(flux, cutoff)
        edge_nus = [(cutoff + flux.psi) ** 2, (-cutoff + flux.psi) ** 2]
    else:
        nus = S.antisymmetric_mode_strengths(cutoff)
        edge_nus = [float(cutoff * cutoff)]
    trace = []
    ns = _levels(grid, n_levels)
    for n in ns:
        trace.append((n, S.count_radial_modes(V, nus, R, n)))
    # truncation witness: the cutoff modes themselves contribute nothing
    edge_counts = [
        S.count_negative(
            S.build_radial_mode(S.RadialModeOperator(nu, V, R), ns[-1])
        ).neg
        for nu in edge_nus
    ]
    return trace, R, cutoff, max(edge_counts)


def run_verify(cfg: ExperimentConfig, n_levels=None, optimize=None,
               scalar_sharp=None) -> RunArtifact:
    """Build potential -> validate -> bound -> count across the schedule."""
    art = RunArtifact(stamp=_stamp())
    if cfg.mode == "lemma4":
        return run_lemma4(cfg)
    theorem = _theorem_id(cfg)
    V = _build_potential(cfg)
    params = None if optimize else _split_params(cfg)
    sharp = cfg.scalar_sharp if scalar_sharp is None else scalar_sharp
    try:
        rep = B.theorem_bound(theorem, V, params, scalar_sharp=sharp)
    except HypothesisError as e:
        rep = B.BoundReport(
            theorem=theorem.label,
            psi=theorem.flux.psi if theorem.flux else None,
            a=None, theta=None, constant=math.nan, integral=math.nan,
            bound=math.nan, note=str(e), verdict="out_of_hypothesis",
        )
        art.reports.append(rep)
        return art
    if theorem.kind == C.OPERATOR_CALOGERO:
        if isinstance(V, P.MatrixPotential):
            rep.trace, rep.domain = _count_matrix(V, cfg.grid, n_levels)
        else:
            rep.trace, rep.domain = _count_halfline(V, cfg.grid, n_levels)
    elif theorem.kind == C.HALF_PLANE:
        rep.trace, rep.domain = _count_halfplane(V, cfg.grid, n_levels)
    else:
        rep.trace, rep.domain, cutoff, edge = _count_radial_modes(
            V, theorem, cfg.grid, n_levels
        )
        rep.note = (rep.note + f"; mode cutoff {cutoff}, edge-mode count {edge}").strip("; ")
        if edge:
            rep.note += " (TRUNCATION SUSPECT)"
    counts = [c for _, c in rep.trace]
    rep.count = counts[-1]
    rep.converged = _stable(counts)
    rep.finish()
    art.reports.append(rep)
    return art


def run_lemma4(cfg: ExperimentConfig) -> RunArtifact:
    """Half-moment inequality on the circle with proof-chain replay."""
    art = RunArtifact(stamp=_stamp())
    flux = C.flux_constants(float(cfg.psi))
    v = _build_potential(cfg)
    res = B.lemma4_bound_check(v, flux)
    rep = B.BoundReport(
        theorem=f"lemma4(psi={flux.psi:g})",
        psi=flux.psi,
        a=None,
        theta=None,
        constant=flux.d_psi,
        integral=res.integral,
        bound=res.rhs,
        note=(
            f"trace={res.lhs:.6g}, chain={'-' if res.chain is None else f'{res.chain:.6g}'}, "
            f"BS={res.bs_bound:.6g}, degenerate={res.degenerate}"
        ),
        trace=list(res.count_trace),
        count=res.count,
        converged=True,
    )
    rep.verdict = "pass" if res.passed else "fail"
    rep.domain = "circle"
    art.reports.append(rep)
    return art


# ----------------------------------------------------------------------
# Commands.
# ----------------------------------------------------------------------

def cmd_constants(args) -> int:
    try:
        flux_list = (
            [float(args.flux)] if args.flux is not None else [0.1, 0.2, 0.25, 1 / 3, 0.4, 0.5]
        )
        fluxes = [C.flux_constants(p) for p in flux_list]
    except FluxDegenerateError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    print("R(b) samples (cell-counting constant):")
    for b in (0.25, 1.0, 4.0, 4 * math.pi ** 2, 100.0, 1e6):
        print(f"  R({b:g}) = {C.eval_R(b):.6f}")
    print("g(y) samples (inverse of x tanh x):")
    for y in (0.0, 0.01, 1.0, 3.0, 10.0):
        print(f"  g({y:g}) = {C.eval_g(y):.6f}")
    print()
    print("flux table:  psi      c_psi     G0        epsilon   d_psi")
    for f in fluxes:
        print(
            f"            {f.psi:<8g} {f.c_psi:<9.6f} {f.g0:<9.6f} "
            f"{f.epsilon:<9.6f} {f.d_psi:.6f}"
        )
    print()
    print("optimized constants (minimized over a in (1,64], theta in (0,1)):")
    rows = [
        (C.half_plane(), "half-plane Dirichlet"),
        (C.operator_calogero(), "operator-valued half-line"),
        (C.antisymmetric(), "antisymmetric plane"),
    ]
    for tid, label in rows:
        p, val = C.optimize_constant(tid)
        print(f"  {label:<28s} C = {val:<10.5f} at a = {p.a:.5f}, theta = {p.theta:.5f}")
    for f in fluxes:
        tid = C.TheoremId(C.AHARONOV_BOHM, f)
        p, val = C.optimize_constant(tid)
        print(
            f"  flux psi = {f.psi:<16g} C = {val:<10.5f} at a = {p.a:.5f}, "
            f"theta = {p.theta:.5f}  [general-a form: derived]"
        )
    return EXIT_PASS


def cmd_verify(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    art = run_verify(
        cfg,
        n_levels=args.levels,
        optimize=True if args.optimize else None,
        scalar_sharp=True if args.scalar_sharp else None,
    )
    stem = Path(args.config).stem
    if args.out:
        csvp, txtp = art.write(args.out, stem)
        print(f"wrote {csvp} and {txtp}")
    print(art.text(), end="")
    return art.exit_code()


def _sweep_values(spec):
    if spec is None:
        return [None]
    if isinstance(spec, dict):
        return list(np.linspace(spec["start"], spec["stop"], int(spec["num"])))
    return list(spec)


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    amplitudes = _sweep_values(cfg.sweep.get("amplitude"))
    radii = _sweep_values(cfg.sweep.get("radius"))
    fluxes = _sweep_values(cfg.sweep.get("flux"))
    jobs = []
    for amp in amplitudes:
        for rad in radii:
            for psi in fluxes:
                jobs.append((amp, rad, psi))
    if not any(k in cfg.sweep for k in ("amplitude", "radius", "flux")):
        jobs = []

    def run_one(job):
        amp, rad, psi = job
        sub = ExperimentConfig(
            theorem=cfg.theorem,
            family=cfg.family,
            params=dict(cfg.params),
            psi=psi if psi is not None else cfg.psi,
            split=cfg.split,
            scalar_sharp=cfg.scalar_sharp,
            shape=cfg.shape,
            grid=cfg.grid,
            mode=cfg.mode,
        )
        overrides = {}
        if amp is not None:
            overrides["amplitude"] = float(amp)
        if rad is not None:
            overrides["radius"] = float(rad)
        sub.params.update(overrides)
        return run_verify(sub, n_levels=args.levels)

    art = RunArtifact(stamp=_stamp())
    if jobs:
        workers = max(1, int(args.workers))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(run_one, jobs))
        else:
            results = [run_one(j) for j in jobs]
        max_ratio_bound = 0.0
        max_ratio_integral = 0.0
        for sub_art, job in zip(results, jobs):
            for rep in sub_art.reports:
                art.reports.append(rep)
                if rep.count is not None and rep.bound:
                    max_ratio_bound = max(max_ratio_bound, rep.count / rep.bound)
                if rep.count is not None and rep.integral:
                    max_ratio_integral = max(max_ratio_integral, rep.count / rep.integral)
        art.notes.append(f"max observed N/bound = {max_ratio_bound:.6g}")
        art.notes.append(f"max observed N/integral = {max_ratio_integral:.6g}")
        art.notes.append("no sharpness is asserted; ratios are observational")
    stem = Path(args.config).stem
    if args.out:
        csvp, txtp = art.write(args.out, stem)
        print(f"wrote {csvp} and {txtp}")
    print(art.text(), end="")
    return art.exit_code()


def cmd_partition(args) -> int:
    try:
        flux = C.flux_constants(float(args.flux))
    except FluxDegenerateError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    if args.family == "circle_constant":
        v = P.circle_constant(args.amplitude)
    else:
        v = P.circle_well(args.amplitude, args.half_width)
    print(f"flux psi = {flux.psi:g}: epsilon = {flux.epsilon:.6f}, G0 = {flux.g0:.6f}")
    try:
        part = B.lemma4_partition(v, flux)
    except DegeneratePartitionError as e:
        print(f"no partition: {e}")
        return EXIT_PASS
    res = B.partition_residuals(part, v)
    print(f"{len(part.intervals)} intervals (tail overlap: {part.overlap_tail}):")
    for (a, b), r in zip(part.intervals, res):
        print(f"  [{a:+.6f}, {b:+.6f}]  len={b - a:.6f}  defect={r:.2e}")
    print(f"max relative defect: {res.max():.2e}")
    return EXIT_PASS


def cmd_count(args) -> int:
    flux = C.flux_constants(args.flux) if args.flux is not None else None
    if args.operator == "halfline":
        v = P.scalar_well(args.amplitude, args.width)
        M = S.build_halfline(v, args.domain, args.n)
    elif args.operator == "circle":
        v = P.circle_constant(args.amplitude)
        M = S.build_circle(v, flux if flux else C.flux_constants(0.5), args.n)
    elif args.operator == "radial-mode":
        V = P.radial_well(args.amplitude, args.width)
        M = S.build_radial_mode(S.RadialModeOperator(args.nu, V, args.domain), args.n)
    elif args.operator == "halfplane":
        V = P.halfplane_well(args.amplitude, args.width, args.width,
                             cover1=args.domain, cover2=args.domain)
        n2 = 2 * args.n
        M = S.build_halfplane(V, args.n, n2, args.domain, args.domain)
    else:
        raise ValueError(f"unknown operator {args.operator}")
    inertia = S.count_negative(M, shift=args.shift)
    print(f"inertia at shift {args.shift:g}: neg={inertia.neg} zero={inertia.zero} "
          f"pos={inertia.pos} (pivot tol {inertia.tolerance:.3e})")
    if args.dense:
        ev = S.eigenvalues_dense(M)
        dn = int((ev < args.shift - inertia.tolerance).sum())
        print(f"dense oracle: {dn} eigenvalues below shift; lowest = {ev[0]:.8g}")
        if dn != inertia.neg:
            print("MISMATCH between factorization count and dense oracle")
            return EXIT_FAIL
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="calogero2d",
        description="verify eigenvalue-counting bounds for 2-D Schrodinger operators",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print constant tables")
    p.add_argument("--flux", type=float, default=None, help="single flux value")
    p.set_defaults(fn=cmd_constants)

    p = sub.add_parser("verify", help="run one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="directory for CSV/text reports")
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--optimize", action="store_true",
                   help="force optimized split parameters")
    p.add_argument("--scalar-sharp", dest="scalar_sharp", action="store_true",
                   help="use the sharp 2/pi constant for scalar half-line data")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("partition", help="print a circle interval partition")
    p.add_argument("--flux", required=True)
    p.add_argument("--family", default="circle_constant",
                   choices=["circle_constant", "circle_well"])
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--half-width", dest="half_width", type=float, default=1.0)
    p.set_defaults(fn=cmd_partition)

    p = sub.add_parser("count", help="raw operator counting")
    p.add_argument("--operator", required=True,
                   choices=["halfline", "circle", "radial-mode", "halfplane"])
    p.add_argument("--amplitude", type=float, default=25.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--domain", type=float, default=20.0)
    p.add_argument("--flux", type=float, default=None)
    p.add_argument("--nu", type=float, default=0.25)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--shift", type=float, default=0.0)
    p.add_argument("--dense", action="store_true")
    p.set_defaults(fn=cmd_count)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (HypothesisError, FluxDegenerateError) as e:
        print(f"hypothesis violation: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except GridBudgetError as e:
        print(f"grid budget: {e}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
