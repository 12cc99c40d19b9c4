"""Command-line entry point: verify, compile, simulate, tomography, report.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, hv, linalg, pulses, simulate, tomography
from .model import (build_model, chi4_operator, chi13_operator, dump_model,
                    quantum_expectation)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_IO = 3

QUANTUM_CHI13 = analysis.QUANTUM_CHI13
QUANTUM_CHI4 = analysis.QUANTUM_CHI4


@dataclass
class RunConfig:
    master_seed: int = 0
    shots: int = 10_000
    noise: str = "paper"  # "ideal" | "paper" | "flip" | "photon-count"
    eps_dark_to_bright: float = 0.010
    eps_bright_to_dark: float = 0.021
    prep_depolarization: float = 0.0
    states: list[str] = field(default_factory=list)  # empty = full roster
    out_dir: str = "run"
    with_tomography: bool = False


def _noise_from_config(cfg: RunConfig) -> simulate.NoiseModel:
    if cfg.noise == "ideal":
        return simulate.NoiseModel.ideal()
    if cfg.noise in ("paper", "flip"):
        return simulate.NoiseModel(
            mode="flip",
            eps_dark_to_bright=cfg.eps_dark_to_bright,
            eps_bright_to_dark=cfg.eps_bright_to_dark,
            prep_depolarization=cfg.prep_depolarization,
        )
    if cfg.noise == "photon-count":
        return simulate.NoiseModel(mode="photon-count",
                                   prep_depolarization=cfg.prep_depolarization)
    raise ValueError(f"unknown noise preset {cfg.noise!r}")


def _select_roster(cfg: RunConfig) -> list[simulate.StateSpec]:
    roster = simulate.default_state_roster()
    if not cfg.states:
        return roster
    by_label = {s.label: s for s in roster}
    missing = [s for s in cfg.states if s not in by_label]
    if missing:
        raise ValueError(f"unknown state labels: {', '.join(missing)}")
    return [by_label[s] for s in cfg.states]


def run_verification(report_lines: list[str]) -> bool:
    """Static checks: graph, operators, classical bounds, setting mappings."""
    ok = True

    def check(name: str, passed: bool, detail: str = ""):
        nonlocal ok
        ok = ok and passed
        status = "ok  " if passed else "FAIL"
        report_lines.append(f"[{status}] {name}" + (f": {detail}" if detail else ""))

    model = build_model()
    check("graph edges", len(model.edges) == 24, f"{len(model.edges)} edges")
    expected_tris = {(1, 2, 3), (1, 4, 7), (2, 5, 8), (3, 6, 9)}
    check("graph triangles", set(model.triangles) == expected_tris,
          f"{sorted(model.triangles)}")

    d13 = linalg.frobenius_distance(chi13_operator(model),
                                    QUANTUM_CHI13 * linalg.IDENTITY)
    check("quantum chi13 operator = (83/3) I", d13 < 1e-9, f"deficit {d13:.2e}")
    d4 = linalg.frobenius_distance(chi4_operator(model),
                                   QUANTUM_CHI4 * linalg.IDENTITY)
    check("quantum chi4 operator = (4/3) I", d4 < 1e-12, f"deficit {d4:.2e}")

    r13 = hv.max_chi13_noncontextual(model)
    check("classical bound chi13 = 25", r13.maximum == 25,
          f"max {r13.maximum}, {r13.argmax_count} maximizers")
    r4 = hv.max_chi4_constrained(model)
    check("classical bound chi4 = 1", r4.maximum == 1,
          f"max {r4.maximum}, {r4.admissible_count} admissible assignments")

    try:
        reports = pulses.verify_all_settings()
        worst = max(d for r in reports for _, _, d in r.deficits)
        check("all 16 setting mappings", True, f"worst deficit {worst:.2e}")
    except ValueError as exc:
        check("all 16 setting mappings", False, str(exc))

    covered = pulses.covered_pairs(pulses.settings_table())
    check("settings cover all 24 edges", covered == set(model.edges))
    return ok


def cmd_verify(args) -> int:
    lines: list[str] = []
    ok = run_verification(lines)
    lines.append("verification " + ("PASSED" if ok else "FAILED"))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(Path(args.out), text)
        _write(Path(args.out).with_suffix(".model.txt"), dump_model(build_model()))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_compile(args) -> int:
    table = {s.id: s for s in pulses.settings_table()}
    unknown = [i for i in args.settings if i not in table]
    if unknown:
        sys.stderr.write(f"unknown setting ids: {', '.join(unknown)}\n")
        return EXIT_CONFIG
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for sid in (args.settings or sorted(table)):
            pulses.emit_schedule(table[sid], out_dir / f"{sid}.schedule")
            sys.stdout.write(f"wrote {out_dir / (sid + '.schedule')}\n")
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    return EXIT_OK


@dataclass
class StateResult:
    label: str
    fidelity: float
    chi13_raw: analysis.Estimate
    chi13: analysis.Estimate
    chi4_raw: analysis.Estimate
    chi4: analysis.Estimate

    @property
    def significance13(self) -> float:
        return analysis.significance(self.chi13, 25.0)

    @property
    def significance4(self) -> float:
        return analysis.significance(self.chi4, 1.0)


def run_simulation(cfg: RunConfig) -> tuple[dict, list[StateResult]]:
    """Execute the full plan for the configured roster; pure computation."""
    model = build_model()
    settings = pulses.settings_table()
    plan = simulate.build_plan(model, settings, cfg.shots)
    roster = _select_roster(cfg)
    noise = _noise_from_config(cfg)
    confusion = None
    if noise.mode == "flip" and (noise.eps_dark_to_bright or noise.eps_bright_to_dark):
        confusion = analysis.ConfusionModel(noise.eps_dark_to_bright,
                                            noise.eps_bright_to_dark)
    tables = simulate.run_roster(roster, plan, settings, noise, cfg.master_seed)

    tomo_settings = tomography.tomography_settings() if cfg.with_tomography else None
    results = []
    for state in roster:
        est = analysis.estimates_from_counts(tables[state.label], confusion)
        chi13 = analysis.assemble_chi13(est.singles, est.pairs, model)
        chi13_raw = analysis.assemble_chi13(est.singles_raw, est.pairs_raw, model)
        chi4 = analysis.assemble_chi4(est.singles)
        chi4_raw = analysis.assemble_chi4(est.singles_raw)
        if tomo_settings is not None:
            rng = simulate.derive_rng(cfg.master_seed, state.label, "tomography")
            probs = tomography.simulate_tomography(state, tomo_settings, noise,
                                                   cfg.shots, rng)
            fid = tomography.reconstruct(probs, tomo_settings,
                                         state.rho).fidelity_to_target
        else:
            fid = linalg.fidelity(simulate._prepare(state, noise), state.rho)
        results.append(StateResult(state.label, fid, chi13_raw, chi13,
                                   chi4_raw, chi4))
    return tables, results


def results_csv(results: list[StateResult]) -> str:
    lines = ["state,fidelity,chi13_raw,chi13_raw_err,chi13,chi13_err,"
             "chi4_raw,chi4_raw_err,chi4,chi4_err,sigma13,sigma4"]
    for r in results:
        lines.append(
            f"{r.label},{r.fidelity:.6f},"
            f"{r.chi13_raw.value:.6f},{r.chi13_raw.stderr:.6f},"
            f"{r.chi13.value:.6f},{r.chi13.stderr:.6f},"
            f"{r.chi4_raw.value:.6f},{r.chi4_raw.stderr:.6f},"
            f"{r.chi4.value:.6f},{r.chi4.stderr:.6f},"
            f"{r.significance13:.3f},{r.significance4:.3f}")
    return "\n".join(lines) + "\n"


def results_text(results: list[StateResult]) -> str:
    head = (f"{'state':<8}{'fid':>8}{'chi13 raw':>14}{'chi13 corr':>16}"
            f"{'chi4 corr':>14}{'sig13':>8}{'sig4':>8}")
    lines = [head, "-" * len(head)]
    for r in results:
        lines.append(
            f"{r.label:<8}{r.fidelity:>8.4f}"
            f"{r.chi13_raw.value:>14.3f}"
            f"{r.chi13.value:>10.3f} ({r.chi13.stderr:.3f})"
            f"{r.chi4.value:>9.4f} ({r.chi4.stderr:.4f})"
            f"{r.significance13:>8.1f}{r.significance4:>8.1f}")
    lines.append("-" * len(head))
    lines.append(f"classical bounds: chi13 <= 25, chi4 <= 1; "
                 f"quantum values: {QUANTUM_CHI13:.4f}, {QUANTUM_CHI4:.4f}")
    return "\n".join(lines) + "\n"


def plot_data(results: list[StateResult]) -> str:
    """Columnar plot-ready data with reference lines."""
    lines = ["# column data: state chi13 chi13_err chi4 chi4_err"]
    for r in results:
        lines.append(f"{r.label} {r.chi13.value:.6f} {r.chi13.stderr:.6f} "
                     f"{r.chi4.value:.6f} {r.chi4.stderr:.6f}")
    lines.append("# reference classical_chi13 25")
    lines.append(f"# reference quantum_chi13 {QUANTUM_CHI13:.9f}")
    lines.append("# reference classical_chi4 1")
    lines.append(f"# reference quantum_chi4 {QUANTUM_CHI4:.9f}")
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(cfg: RunConfig, extra: dict) -> str:
    payload = {"config": asdict(cfg), "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
               **extra}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def cmd_simulate(args) -> int:
    try:
        cfg = RunConfig(master_seed=args.seed, shots=args.shots, noise=args.noise,
                        eps_dark_to_bright=args.eps_dark_to_bright,
                        eps_bright_to_dark=args.eps_bright_to_dark,
                        prep_depolarization=args.prep_depolarization,
                        states=args.states or [], out_dir=args.out_dir,
                        with_tomography=args.tomography)
        tables, results = run_simulation(cfg)
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    try:
        _write(out / "counts.csv", simulate.counts_to_csv(tables))
        _write(out / "results.csv", results_csv(results))
        _write(out / "results.txt", results_text(results))
        _write(out / "plot.dat", plot_data(results))
        plan_size = sum(1 for _ in simulate.build_plan(
            build_model(), pulses.settings_table(), cfg.shots))
        _write(out / "manifest.json", _manifest(cfg, {
            "plan_size": plan_size,
            "realizations_per_state": plan_size * cfg.shots,
        }))
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    sys.stdout.write(results_text(results))
    return EXIT_OK


def cmd_tomography(args) -> int:
    try:
        cfg = RunConfig(master_seed=args.seed, shots=args.shots, noise=args.noise,
                        states=args.states or [], out_dir=args.out_dir)
        roster = _select_roster(cfg)
        noise = _noise_from_config(cfg)
        settings = tomography.tomography_settings()
    except ValueError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    lines = ["state,fidelity,residual,projected"]
    fids = []
    try:
        for state in roster:
            rng = simulate.derive_rng(cfg.master_seed, state.label, "tomography")
            probs = tomography.simulate_tomography(state, settings, noise,
                                                   cfg.shots, rng)
            res = tomography.reconstruct(probs, settings, state.rho)
            fids.append(res.fidelity_to_target)
            lines.append(f"{state.label},{res.fidelity_to_target:.6f},"
                         f"{res.residual:.6g},{int(res.projected)}")
            _write(out / f"{state.label}.rho.txt",
                   tomography.format_density_matrix(res.rho))
        _write(out / "fidelities.csv", "\n".join(lines) + "\n")
        _write(out / "manifest.json", _manifest(cfg, {"command": "tomography"}))
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    sys.stdout.write("\n".join(lines) + "\n")
    sys.stdout.write(f"mean fidelity {sum(fids) / len(fids):.4f}\n")
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    src = run_dir / "results.csv"
    if not src.exists():
        sys.stderr.write(f"missing results table: {src}\n")
        return EXIT_IO
    rows = src.read_text().strip().splitlines()[1:]
    lines = ["# state chi13 chi13_err chi4 chi4_err"]
    for row in rows:
        f = row.split(",")
        lines.append(f"{f[0]} {f[4]} {f[5]} {f[8]} {f[9]}")
    lines.append("# reference classical_chi13 25")
    lines.append(f"# reference quantum_chi13 {QUANTUM_CHI13:.9f}")
    lines.append("# reference classical_chi4 1")
    lines.append(f"# reference quantum_chi4 {QUANTUM_CHI4:.9f}")
    text = "\n".join(lines) + "\n"
    try:
        _write(run_dir / "report.dat", text)
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qutrit-ks",
                                description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the static verification suite")
    v.add_argument("--out", help="write the report to this file")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("compile", help="emit pulse schedules for settings")
    c.add_argument("settings", nargs="*", help="setting ids, e.g. M5 (default all)")
    c.add_argument("--out-dir", default="schedules")
    c.set_defaults(func=cmd_compile)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--shots", type=int, default=10_000)
        sp.add_argument("--noise", default="paper",
                        choices=["ideal", "paper", "flip", "photon-count"])
        sp.add_argument("--states", nargs="*", metavar="LABEL")
        sp.add_argument("--out-dir", default="run")

    s = sub.add_parser("simulate", help="run the Monte Carlo experiment")
    common(s)
    s.add_argument("--eps-dark-to-bright", type=float, default=0.010)
    s.add_argument("--eps-bright-to-dark", type=float, default=0.021)
    s.add_argument("--prep-depolarization", type=float, default=0.0)
    s.add_argument("--tomography", action="store_true",
                   help="take fidelities from simulated tomography")
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tomography", help="simulate and reconstruct states")
    common(t)
    t.set_defaults(func=cmd_tomography)

    r = sub.add_parser("report", help="aggregate a finished run directory")
    r.add_argument("run_dir")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
