"""Command-line front end.

Exit codes: 0 success (any verdict, including Inconclusive), 2 config
error, 3 internal numeric failure, 4 output I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import classify, config as cfgmod, feller, model, simulate, svgplot
from .errors import ConfigError, DivMarketError, ParameterError, QuadratureError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _emit(obj: dict, quiet: bool) -> None:
    if not quiet:
        print(json.dumps(obj, indent=2, sort_keys=True))


def _dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _apply_overrides(cfg: cfgmod.ExperimentConfig, args) -> cfgmod.ExperimentConfig:
    if args.seed is not None:
        cfg.sim = dataclasses.replace(cfg.sim, seed=args.seed)
    if args.out is not None:
        cfg.outputs.directory = Path(args.out)
    if args.format is not None:
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        bad = set(formats) - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"unknown output format(s): {sorted(bad)}")
        cfg.outputs.formats = formats
    return cfg


def _out_dir(cfg: cfgmod.ExperimentConfig) -> Path | None:
    d = cfg.outputs.directory
    if d is None:
        return None
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc
    return d


class _IOFailure(Exception):
    pass


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_classify(cfg: cfgmod.ExperimentConfig, args) -> int:
    spec = cfg.market.spec
    n = cfg.market.n
    verdict = classify.classify_diversity(n, spec)
    consts = model.A_coeffs(n, spec.delta)
    payload = {
        **verdict.to_dict(),
        "constants": {
            "a1": consts.a1,
            "a2": consts.a2,
            "threshold_not_diverse": 1.0 / consts.a1,
            "threshold_diverse": 1.0 / consts.a2,
            "x0": consts.x0,
        },
        "model": spec.label(),
        "n": n,
    }
    _emit(payload, args.quiet)
    out = _out_dir(cfg)
    if out is not None and "json" in cfg.outputs.formats:
        _write(out / "verdict.json", _dump_json(payload))
    return EXIT_OK


def cmd_simulate(cfg: cfgmod.ExperimentConfig, args) -> int:
    record = cfg.outputs.sample_paths if ({"csv", "svg"} & set(cfg.outputs.formats)) else 0
    results = simulate.simulate_paths(cfg.market, cfg.sim, record_paths=record)
    report = simulate.summarize(cfg.market, cfg.sim, results)
    payload = report.to_dict()
    _emit(payload, args.quiet)

    out = _out_dir(cfg)
    if out is not None:
        if "json" in cfg.outputs.formats:
            _write(out / "report.json", _dump_json(payload))
        if "csv" in cfg.outputs.formats:
            import io

            buf = io.StringIO()
            simulate.write_trajectory_csv(buf, results, cfg.sim.record_stride)
            _write(out / "trajectories.csv", buf.getvalue())
        if "svg" in cfg.outputs.formats:
            _write(out / "max_weight.svg", _max_weight_svg(cfg, results))
    return EXIT_OK


def _max_weight_svg(cfg: cfgmod.ExperimentConfig, results) -> str:
    series = []
    for r in results:
        if r.sampled_trajectory is None:
            continue
        times, weights = r.sampled_trajectory
        series.append(
            {"x": list(times), "y": list(weights.max(axis=1)), "label": f"path {r.path_index}"}
        )
    return svgplot.line_plot_svg(
        series,
        title="Max market weight over time",
        xlabel="time",
        ylabel="max weight",
        hline=cfg.market.spec.right_end,
    )


def cmd_verify(cfg: cfgmod.ExperimentConfig, args) -> int:
    if cfg.verify is None:
        raise ConfigError("verify command needs a [verify] section with p_values")
    spec0 = cfg.market.spec
    n = cfg.market.n
    fam0 = spec0.family
    rows = []
    for q in cfg.verify.q_values:
        for p in cfg.verify.p_values:
            if isinstance(fam0, model.PatchedPowerLaw):
                fam = dataclasses.replace(fam0, p=p, q=q)
            else:
                fam = model.PowerLaw(p=p, q=q)
            spec = model.DriftSpec(delta=spec0.delta, family=fam)
            market = dataclasses.replace(cfg.market, spec=spec)
            verdict = classify.classify_diversity(n, spec)
            report = simulate.monte_carlo_hitting(market, cfg.sim)
            gap = None
            if cfg.verify.consistency:
                cons_params = dataclasses.replace(
                    cfg.sim, horizon_T=min(1.0, cfg.sim.horizon_T), n_paths=min(4, cfg.sim.n_paths)
                )
                gap = simulate.ito_consistency_check(market, cons_params)["max_abs_weight_gap"]
            lo, hi = report.wilson_ci_95
            flag = ""
            if verdict.status is classify.Status.DIVERSE and lo > 0.0:
                flag = "warn: Diverse verdict but CI excludes 0"
            elif verdict.status is classify.Status.NOT_DIVERSE and report.n_hits == 0:
                flag = "warn: NotDiverse verdict but zero hits (finite horizon)"
            rows.append(
                {
                    "p": p,
                    "q": q,
                    "n": n,
                    "delta": spec0.delta,
                    "verdict": verdict.status.value,
                    "rule": verdict.rule,
                    "hit_frequency": report.hit_frequency,
                    "ci_low": lo,
                    "ci_high": hi,
                    "consistency_gap": gap,
                    "flag": flag,
                }
            )
    payload = {"rows": rows, "note": simulate.EVIDENCE_NOTE}
    _emit(payload, args.quiet)
    out = _out_dir(cfg)
    if out is not None:
        if "json" in cfg.outputs.formats:
            _write(out / "verify.json", _dump_json(payload))
        if "csv" in cfg.outputs.formats:
            cols = ["p", "q", "n", "delta", "verdict", "rule", "hit_frequency",
                    "ci_low", "ci_high", "consistency_gap", "flag"]
            lines = [",".join(cols)]
            for row in rows:
                lines.append(",".join("" if row[c] is None else str(row[c]) for c in cols))
            _write(out / "verify.csv", "\n".join(lines) + "\n")
    return EXIT_OK


_SAFE_FUNCS = {
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt, "sin": math.sin,
    "cos": math.cos, "tanh": math.tanh, "abs": abs, "pi": math.pi, "e": math.e,
}


def _expr_fn(expr: str):
    code = compile(expr, "<config>", "eval")
    for name in code.co_names:
        if name not in _SAFE_FUNCS and name != "x":
            raise ConfigError(f"unknown name {name!r} in expression {expr!r}")

    def fn(x: float) -> float:
        return float(eval(code, {"__builtins__": {}}, {**_SAFE_FUNCS, "x": x}))

    return fn


def cmd_feller(cfg: cfgmod.ExperimentConfig, args) -> int:
    fspec = cfg.feller or cfgmod.FellerSpec()
    if fspec.kind == "weight2":
        prob = feller.weight_diffusion_problem(cfg.market.spec)
    else:
        prob = feller.FellerProblem(
            alpha=fspec.alpha,
            beta=fspec.beta,
            x0=fspec.x0,
            drift=_expr_fn(fspec.drift),
            diffusion_sq=_expr_fn(fspec.diffusion_sq),
        )
    left = feller.classify_endpoint(prob, feller.Side.LEFT)
    right = feller.classify_endpoint(prob, feller.Side.RIGHT)
    merged = feller.FellerReport(
        phi_alpha=left.phi_alpha,
        I_alpha=left.I_alpha,
        verdict_alpha=left.verdict_alpha,
        phi_beta=right.phi_beta,
        I_beta=right.I_beta,
        verdict_beta=right.verdict_beta,
        fitted_exponents={**left.fitted_exponents, **right.fitted_exponents},
        notes=left.notes + right.notes,
    )
    payload = {
        **merged.to_dict(),
        "interval": [prob.alpha, prob.beta],
        "x0": prob.x0,
        "kind": fspec.kind,
    }
    payload["interval"] = [
        "inf" if math.isinf(v) and v > 0 else "-inf" if math.isinf(v) else v
        for v in payload["interval"]
    ]
    _emit(payload, args.quiet)
    out = _out_dir(cfg)
    if out is not None and "json" in cfg.outputs.formats:
        _write(out / "feller.json", _dump_json(payload))
    return EXIT_OK


def cmd_selftest(cfg, args) -> int:
    checks = []

    def check(name, fn):
        try:
            ok = bool(fn())
        except Exception as exc:  # noqa: BLE001 - selftest reports, never raises
            ok = False
            name = f"{name} ({exc})"
        checks.append((name, ok))

    spec = model.DriftSpec(0.2, model.PowerLaw(p=0.25, q=1.0))
    check(
        "decision table: n=2, p=0.25, q=1 is Diverse",
        lambda: classify.classify_diversity(2, spec).status is classify.Status.DIVERSE,
    )
    check(
        "decision table matches closed form on a spot grid",
        lambda: all(
            classify.classify_diversity(
                nn, model.DriftSpec(0.2, model.PatchedPowerLaw(p, 1.0, 0.5, 0.1))
            ).status
            == classify.golden_decision_table(nn, 0.2, p, 1.0).status
            for nn in (3, 5)
            for p in (0.05, 0.3)
        ),
    )
    bm = feller.FellerProblem(0.0, 1.0, 0.5, lambda x: 0.0, lambda x: 1.0)
    check(
        "Brownian motion hits both endpoints of (0, 1)",
        lambda: feller.classify_endpoint(bm, feller.Side.RIGHT).verdict_beta
        is feller.Verdict.HITS,
    )

    def _determinism():
        market = simulate.MarketConfig(2, spec)
        params = simulate.SimParams(dt=0.01, horizon_T=1.0, n_paths=8, seed=11)
        a = simulate.monte_carlo_hitting(market, params).to_dict()
        b = simulate.monte_carlo_hitting(market, params).to_dict()
        return json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    check("identical seeds give identical reports", _determinism)

    failures = 0
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += not ok
    return EXIT_OK if failures == 0 else 1


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "feller": cmd_feller,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divmarket",
        description="Analytic and Monte Carlo diversity lab for drift-controlled markets",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name != "selftest":
            p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override sim seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", default=None, help="comma list of csv,json,svg")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return cmd_selftest(None, args)
        cfg = cfgmod.load_config(args.config)
        cfg = _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _IOFailure as exc:
        print(f"output failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
