"""Command-line front end.

Configs are plain ``key=value`` files with ``#`` comments::

    I=0.1
    D=0.2
    N=0.35
    A=0.35
    U=0.2
    O=0
    alpha=0.05
    beta=0.2

Exit status is 0 on success, 1 for invalid input and 2 when a
computation cannot produce an answer (for example an unattainable design).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

from . import pilot as pilot_mod
from .estimands import bias as closed_form_bias
from .estimands import reported_means, true_ate
from .optimizer import SPLITS, effect_range, grid_oracle, sweep, worst_case_lambda
from .population import DeltaVector, Margins, independence_deltas, margin_violations, table_from_margins_and_deltas
from .power import (
    DesignParams,
    EffectSignIndeterminate,
    detection_probability,
    detection_probability_from_means,
    sample_size_fixed_delta,
)
from .sensitivity import GammaModel, is_feasible
from .simulation import run_replications

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 1, 2
REQUIRED_KEYS = ("I", "D", "N", "A", "U", "O", "alpha", "beta")
FLOAT_KEYS = REQUIRED_KEYS + ("gamma",)
INT_KEYS = ("seed", "reps", "N_sp", "n")
LIST_KEYS = ("gammas", "shares")
CSV_HEADER = ["share", "gamma", "n_total", "lambda", "bias", "mu1", "mu0", "status"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    margins: Margins
    params: DesignParams
    gamma: float | None = None
    gammas: list[float] | None = None
    shares: list[float] | None = None
    split: str | None = None
    seed: int | None = None
    reps: int | None = None
    N_sp: int | None = None
    n: int | None = None
    lines: dict[str, int] = field(default_factory=dict, repr=False)


def _parse_float(text: str, key: str, lineno: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key}: malformed number {text!r}") from None


def parse_number_list(text: str, key: str = "value", lineno: int | None = None) -> list[float]:
    """``a,b,c`` or an inclusive range ``start:stop:step``."""
    where = f"line {lineno}: " if lineno is not None else ""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{where}{key}: range must be start:stop:step")
        start, stop, step = (_parse_float(p, key, lineno) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"{where}{key}: range needs step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
        return [v for v in values if v <= stop + 1e-12]
    out = []
    for part in text.split(","):
        try:
            out.append(float(part))
        except ValueError:
            raise ConfigError(f"{where}{key}: malformed number {part!r}") from None
    return out


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in lines:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key in FLOAT_KEYS:
            values[key] = _parse_float(value, key, lineno)
        elif key in INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key}: malformed integer {value!r}") from None
        elif key in LIST_KEYS:
            values[key] = parse_number_list(value, key, lineno)
        elif key == "split":
            if value not in SPLITS:
                raise ConfigError(f"line {lineno}: split must be one of {', '.join(SPLITS)}")
            values[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        lines[key] = lineno

    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError("missing required keys: " + ", ".join(missing) + f" (required: {', '.join(REQUIRED_KEYS)})")

    margin_vals = {k: values[k] for k in ("I", "D", "N", "A", "U", "O")}
    problems = margin_violations(argparse.Namespace(**margin_vals))
    if problems:
        last = max(lines[k] for k in margin_vals)
        raise ConfigError(f"line {last}: invalid margins: " + "; ".join(problems))
    try:
        params = DesignParams(values["alpha"], values["beta"])
    except ValueError as exc:
        raise ConfigError(f"line {max(lines['alpha'], lines['beta'])}: {exc}") from None
    gamma = values.get("gamma")
    if gamma is not None and not gamma >= 1:
        raise ConfigError(f"line {lines['gamma']}: gamma must be >= 1")
    for key in ("reps", "N_sp", "n"):
        if key in values and values[key] < 1:
            raise ConfigError(f"line {lines[key]}: {key} must be positive")
    return RunConfig(
        margins=Margins(**margin_vals),
        params=params,
        gamma=gamma,
        gammas=values.get("gammas"),
        shares=values.get("shares"),
        split=values.get("split"),
        seed=values.get("seed"),
        reps=values.get("reps"),
        N_sp=values.get("N_sp"),
        n=values.get("n"),
        lines=lines,
    )


def fmt(x) -> str:
    """Fixed formatting: 6 significant digits, scientific outside %g's range."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    return f"{x:.6g}"


def _load(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _gamma(args, cfg: RunConfig) -> float:
    g = args.gamma if getattr(args, "gamma", None) is not None else cfg.gamma
    if g is None:
        raise ConfigError("gamma not given (use --gamma or gamma= in the config)")
    return g


def _print_pairs(pairs, out):
    width = max(len(k) for k, _ in pairs)
    for k, v in pairs:
        out.write(f"{k:<{width}}  {fmt(v) if not isinstance(v, str) else v}\n")


def cmd_validate(args, out) -> int:
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        out.write(f"INVALID: {exc}\n")
        return EXIT_INVALID
    m = cfg.margins
    try:
        model = GammaModel(cfg.gamma or 1.0, m)
    except ValueError as exc:
        out.write(f"INVALID: {exc}\n")
        return EXIT_INVALID
    pairs = [("margins", "ok"), ("tau_sp", m.tau_sp), ("gamma", model.gamma)]
    _print_pairs(pairs, out)
    out.write("VALID\n")
    return EXIT_OK


def cmd_bias(args, out) -> int:
    cfg = _load(args.config)
    m = cfg.margins
    model = GammaModel(_gamma(args, cfg), m)
    ind = independence_deltas(m)
    lo, hi = effect_range(model)
    pairs = [
        ("tau_sp", true_ate(m)),
        ("gamma", model.gamma),
        ("bias_independence", closed_form_bias(m, ind)),
        ("expected_estimate_independence", m.tau_sp + closed_form_bias(m, ind)),
        ("bias_min", lo - m.tau_sp),
        ("bias_max", hi - m.tau_sp),
        ("expected_estimate_min", lo),
        ("expected_estimate_max", hi),
    ]
    if args.delta:
        delta = DeltaVector.from_array(parse_number_list(args.delta, "--delta"))
        report = is_feasible(delta, model)
        if not report:
            raise ConfigError("delta infeasible: " + "; ".join(report.violations))
        b = closed_form_bias(m, delta)
        pairs += [("bias_delta", b), ("expected_estimate_delta", m.tau_sp + b)]
    _print_pairs(pairs, out)
    return EXIT_OK


def cmd_power(args, out) -> int:
    cfg = _load(args.config)
    n = args.n if args.n is not None else cfg.n
    if n is None:
        raise ConfigError("n not given (use --n or n= in the config)")
    m = cfg.margins
    ind = independence_deltas(m)
    mu1, mu0 = reported_means(m, ind)
    _print_pairs(
        [("n_per_arm", n), ("mu1", mu1), ("mu0", mu0), ("detection_probability", detection_probability(m, ind, n, cfg.params))],
        out,
    )
    return EXIT_OK


def cmd_samplesize(args, out) -> int:
    cfg = _load(args.config)
    m = cfg.margins
    ind = independence_deltas(m)
    n = sample_size_fixed_delta(m, ind, cfg.params)
    mu1, mu0 = reported_means(m, ind)
    _print_pairs([("mu1", mu1), ("mu0", mu0), ("n_per_arm", n), ("n_total", 2 * n)], out)
    return EXIT_OK


def _worstcase_fields(res) -> dict:
    return {
        "lambda_star": res.lambda_star,
        "n_per_arm": res.n_per_arm,
        "n_total": res.n_total,
        "bias_at_worst": res.bias_at_worst,
        "mu1": res.mu1,
        "mu0": res.mu0,
        "delta_star": {k: getattr(res.delta_star, k) for k in ("UI", "UD", "UA", "OI", "OD", "ON")},
    }


def cmd_worstcase(args, out) -> int:
    cfg = _load(args.config)
    model = GammaModel(_gamma(args, cfg), cfg.margins)
    res = worst_case_lambda(model, cfg.params)
    fields = _worstcase_fields(res)
    if args.oracle:
        orc = grid_oracle(model)
        fields["oracle_lambda"] = orc.lambda_estimate
        fields["oracle_rel_diff"] = (orc.lambda_estimate - res.lambda_star) / res.lambda_star
    if args.json:
        out.write(json.dumps({"gamma": model.gamma, **fields}, sort_keys=True) + "\n")
        return EXIT_OK
    pairs = [("gamma", model.gamma)]
    for k, v in fields.items():
        if k == "delta_star":
            pairs += [(f"delta_{name}", x) for name, x in v.items()]
        else:
            pairs.append((k, v))
    _print_pairs(pairs, out)
    return EXIT_OK


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(
            [fmt(r.share), fmt(r.gamma), fmt(r.n_total), fmt(r.lambda_star), fmt(r.bias), fmt(r.mu1), fmt(r.mu0), r.status]
        )
    return buf.getvalue()


def cmd_sweep(args, out) -> int:
    cfg = _load(args.config)
    gammas = parse_number_list(args.gammas, "--gammas") if args.gammas else cfg.gammas
    shares = parse_number_list(args.shares, "--shares") if args.shares else cfg.shares
    split = args.split or cfg.split or "under"
    if not gammas or not shares:
        raise ConfigError("sweep needs --gammas and --shares (or gammas=/shares= in the config)")
    rows = sweep(cfg.margins, shares, split, gammas, cfg.params)
    text = sweep_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    cfg = _load(args.config)
    gamma = args.gamma if args.gamma is not None else (cfg.gamma or 1.0)
    n = args.n if args.n is not None else cfg.n
    reps = args.reps if args.reps is not None else (cfg.reps or 1000)
    seed = args.seed if args.seed is not None else (cfg.seed or 0)
    n_sp = args.N_sp if args.N_sp is not None else (cfg.N_sp or 10**6)
    m = cfg.margins
    model = GammaModel(gamma, m)
    res = worst_case_lambda(model, cfg.params)
    delta = res.delta_star
    if n is None:
        n = res.n_per_arm
    table = table_from_margins_and_deltas(m, delta)
    summary = run_replications(table, n_sp, n, reps, seed, cfg.params)
    mu1, mu0 = reported_means(m, delta)
    pairs = [
        ("gamma", gamma),
        ("n_per_arm", n),
        ("reps", reps),
        ("seed", seed),
        ("N_sp", n_sp),
        ("bias_closed_form", closed_form_bias(m, delta)),
        ("bias_empirical", summary.empirical_bias),
        ("bias_se", summary.bias_se),
        ("power_predicted", detection_probability_from_means(mu1, mu0, n, cfg.params)),
        ("power_empirical", summary.power),
        ("power_se", summary.power_se),
        ("degenerate_trials", summary.degenerate_trials),
    ]
    _print_pairs(pairs, out)
    return EXIT_OK


def _counts(text: str, flag: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"{flag}: expected four integers a,b,c,d") from None
    if len(vals) != 4:
        raise ConfigError(f"{flag}: expected four counts ordered 11,10,01,00")
    return vals


def cmd_pilot(args, out) -> int:
    counts = pilot_mod.PilotCounts(_counts(args.treated, "--treated"), _counts(args.control, "--control"))
    res = pilot_mod.estimate(counts, no_decrease=args.no_decrease)
    pairs = [
        ("B_hat", res.B_hat),
        ("reported_mean_treated", res.reported_mean_treated),
        ("reported_mean_control", res.reported_mean_control),
    ]
    if args.n is not None:
        params = DesignParams(args.alpha, args.beta)
        pairs.append(
            (
                "detection_probability",
                detection_probability_from_means(res.reported_mean_treated, res.reported_mean_control, args.n, params),
            )
        )
    if res.reconstruction is not None:
        pairs += [(k, v) for k, v in res.reconstruction.as_dict().items()]
        pairs.append(("feasible", res.reconstruction.feasible))
    _print_pairs(pairs, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="misreport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bias", help="true effect and bias range")
    p.add_argument("--config", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", help="six ratios UI,UD,UA,OI,OD,ON")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("power", help="detection probability at independence ratios")
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("samplesize", help="sample size at independence ratios")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_samplesize)

    p = sub.add_parser("worstcase", help="worst-case sample size for one Gamma")
    p.add_argument("--config", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--json", action="store_true")
    p.add_argument("--oracle", action="store_true", help="also run the brute-force grid oracle")
    p.set_defaults(func=cmd_worstcase)

    p = sub.add_parser("sweep", help="worst-case sample sizes over shares and Gammas (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--gammas")
    p.add_argument("--shares", help="list a,b,c or inclusive range start:stop:step")
    p.add_argument("--split", choices=SPLITS)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo check at the worst-case ratios")
    p.add_argument("--config", required=True)
    p.add_argument("--gamma", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--N-sp", dest="N_sp", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pilot", help="gold-standard pilot estimates")
    p.add_argument("--treated", required=True, help="counts 11,10,01,00 (true,reported)")
    p.add_argument("--control", required=True, help="counts 11,10,01,00 (true,reported)")
    p.add_argument("--no-decrease", action="store_true")
    p.add_argument("--n", type=int, help="per-arm n for a projected detection probability")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--beta", type=float, default=0.2)
    p.set_defaults(func=cmd_pilot)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except EffectSignIndeterminate as exc:
        sys.stderr.write(f"unattainable: {exc}\n")
        return EXIT_COMPUTE
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (ArithmeticError, AssertionError, RuntimeError) as exc:
        sys.stderr.write(f"computation failed: {exc}\n")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
