"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 total conflict,
3 non-converged fit.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from functools import reduce
from pathlib import Path
from typing import Sequence

from belieflik import frames
from belieflik.combination import Rule, TotalConflictError, combine, combine_many
from belieflik.frames import FrameError
from belieflik.glr import Dataset, DatasetError, FitConfig, FitResult, classical_fit, fit, predict
from belieflik.likelihood import (
    BernoulliCount,
    FastPathUnavailable,
    TrialModel,
    bernoulli_surface,
    complement_event,
    belief_likelihood_bruteforce,
    disjunctive_complement_likelihood,
    lower_likelihood_sharp,
    plausibility_bruteforce,
    sharp_bruteforce,
    upper_likelihood_sharp,
    verify_factorization,
)
from belieflik.mass import MassError, MassFunction, mass_from_json

log = logging.getLogger("belieflik")

CONFIG_ENV = "BELIEFLIK_CONFIG"
EXIT_OK, EXIT_INPUT, EXIT_CONFLICT, EXIT_NONCONVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class Config:
    frame_cap: int = frames.FRAME_CAP
    product_cap: int = frames.PRODUCT_CAP
    bound: float = 50.0
    eps: float = 1e-8
    max_iter: int = 10_000
    tol: float = 1e-6
    n_starts: int = 5
    step: float = 0.01

    def __post_init__(self):
        if self.frame_cap < 1 or self.product_cap < 1:
            raise UsageError("caps must be at least 1")
        if self.tol <= 0 or self.eps <= 0 or self.bound <= 0 or self.step <= 0:
            raise UsageError("tolerances, bounds and steps must be positive")

    @classmethod
    def load(cls, path: str | None) -> Config:
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def apply_caps(self) -> None:
        frames.FRAME_CAP = self.frame_cap
        frames.PRODUCT_CAP = self.product_cap


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _dump(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_mass(path: str) -> MassFunction:
    try:
        return mass_from_json(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None


def cmd_combine(args, config: Config) -> int:
    if len(args.inputs) < 2:
        raise UsageError("combine needs at least two input files")
    masses = [_read_mass(p) for p in args.inputs]
    if args.product:
        result = combine_many(masses, args.rule)
    else:
        first = masses[0].frame
        if any(m.frame != first for m in masses[1:]):
            raise UsageError("inputs live on different frames (use --product for distinct factors)")
        result = reduce(lambda a, b: combine(a, b, args.rule), masses)
    doc = result.to_json()
    doc["rule"] = Rule(args.rule).value
    _dump(doc, args.output)
    return EXIT_OK


def _parse_sample(text: str) -> list[str]:
    return [s.strip() for s in text.split(",")]


def cmd_likelihood(args, config: Config) -> int:
    masses = [_read_mass(p) for p in args.models]
    model = TrialModel(masses, args.rule)
    sample = model.check_sample(_parse_sample(args.sample))
    report: dict = {"rule": model.rule.value, "sample": list(sample), "method": args.method}
    want_fast = args.method in ("factorized", "both")
    want_brute = args.method in ("bruteforce", "both")
    if model.rule is Rule.DISJUNCTIVE:
        report["event"] = "complement"
        if want_fast:
            pair = disjunctive_complement_likelihood(model, sample)
            report["factorized"] = {"lower": pair.lower, "upper": pair.upper}
        if want_brute:
            event = complement_event(model, sample)
            report["bruteforce"] = {"lower": belief_likelihood_bruteforce(model, event),
                                    "upper": plausibility_bruteforce(model, event)}
    else:
        report["event"] = "sample"
        if want_fast:
            fast = {"lower": lower_likelihood_sharp(model, sample)}
            try:
                up = upper_likelihood_sharp(model, sample)
                fast["upper"] = up.value
                fast["upper_conjecture_based"] = up.conjecture_based
            except FastPathUnavailable as exc:
                fast["upper"] = None
                fast["upper_note"] = str(exc)
            report["factorized"] = fast
        if want_brute:
            pair = sharp_bruteforce(model, sample)
            report["bruteforce"] = {"lower": pair.lower, "upper": pair.upper}
    if args.method == "both":
        f, b = report["factorized"], report["bruteforce"]
        report["discrepancy"] = {
            key: abs(f[key] - b[key]) for key in ("lower", "upper") if f.get(key) is not None}
    _dump(report, args.output)
    return EXIT_OK


def cmd_verify(args, config: Config) -> int:
    if args.n < 1 or args.trials < 1:
        raise UsageError("--n and --trials must be positive")
    report = verify_factorization(args.n, args.trials, args.seed, cap=config.product_cap)
    _dump(report.to_json(), args.output)
    return EXIT_OK if report.proven_ok else EXIT_INPUT


def cmd_surface(args, config: Config) -> int:
    step = config.step if args.step is None else args.step
    if not 0 < step <= 0.5:
        raise UsageError(f"--step must lie in (0, 0.5], got {step}")
    try:
        count = BernoulliCount(args.k, args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    surf = bernoulli_surface(count, step)
    csv_text = surf.to_csv()
    lp, lq = surf.argmax_lower
    up, uq = surf.argmax_upper
    p_diag, low_diag, _ = surf.bayesian_section()
    classical = p_diag**count.k * (1 - p_diag) ** (count.n - count.k)
    summary = (f"# argmax lower=({lp:.2f},{lq:.2f}) upper=({up:.2f},{uq:.2f}) "
               f"bayesian_section_points={p_diag.size} "
               f"bayesian_max_dev={float(abs(low_diag - classical).max()):.3e}")
    if args.output:
        Path(args.output).write_text(csv_text)
        print(summary)
    else:
        sys.stdout.write(csv_text)
        print(summary, file=sys.stderr)
    return EXIT_OK


def _load_dataset(path: str) -> Dataset:
    try:
        return Dataset.from_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_fit(args, config: Config) -> int:
    data = _load_dataset(args.data)
    if args.which == "classical":
        result = classical_fit(data, slope=not args.no_slope, bound=config.bound)
    else:
        cfg = FitConfig(bound=config.bound, eps=config.eps, max_iter=config.max_iter,
                        tol=config.tol, n_starts=config.n_starts,
                        fix_beta1=0.0 if args.no_slope else None, fix_beta2=args.fix_beta2)
        result = fit(data, args.which, cfg)
    _dump(result.to_json(), args.output)
    if not result.converged:
        log.error("fit did not converge: %s", result.message)
        return EXIT_NONCONVERGED
    return EXIT_OK


def _read_model(path: str | None) -> FitResult | None:
    if path is None:
        return None
    try:
        return FitResult.from_json(json.loads(Path(path).read_text()))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"{path}: malformed model file: {exc}") from None


def cmd_predict(args, config: Config) -> int:
    lower, upper = _read_model(args.lower), _read_model(args.upper)
    if lower is None and upper is None:
        raise UsageError("predict needs --lower and/or --upper")
    rows = [predict(lower, upper, x).to_json() for x in args.x]
    if args.json:
        _dump(rows, None)
        return EXIT_OK
    header = ["x"]
    if lower is not None:
        header += ["lower_bel", "lower_pl"]
    if upper is not None:
        header += ["upper_bel", "upper_pl"]
    header += ["union_lo", "union_hi"]
    print(",".join(header))
    for row in rows:
        vals = [row["x"]]
        for name in ("lower", "upper"):
            if name in row:
                vals += row[name]["interval"]
        vals += row["union_interval"]
        print(",".join(f"{v:.17g}" for v in vals))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="belieflik", description="Belief likelihoods of repeated trials.")
    parser.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    rules = [r.value for r in Rule]

    p = sub.add_parser("combine", help="combine mass functions")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--rule", choices=rules, default="dempster")
    p.add_argument("--product", action="store_true",
                   help="inputs are factors; combine their vacuous extensions")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_combine)

    p = sub.add_parser("likelihood", help="likelihood of a sharp sample")
    p.add_argument("models", nargs="+", help="one mass JSON file per trial")
    p.add_argument("--sample", required=True, help="comma-separated outcomes, e.g. T,T,F")
    p.add_argument("--rule", choices=rules, default="conjunctive")
    p.add_argument("--method", choices=["factorized", "bruteforce", "both"], default="both")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("verify", help="audit factorizations against the brute-force oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("surface", help="Bernoulli lower/upper likelihood grid")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--step", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("fit", help="fit a (generalised) logistic regression")
    p.add_argument("data", help="CSV with header x,y; y in {0,1,NA}")
    p.add_argument("--which", choices=["classical", "lower", "upper"], default="lower")
    p.add_argument("--no-slope", action="store_true", help="intercept-only model")
    p.add_argument("--fix-beta2", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="belief intervals at new covariate values")
    p.add_argument("--lower")
    p.add_argument("--upper")
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    caps = frames.FRAME_CAP, frames.PRODUCT_CAP
    try:
        config = Config.load(args.config)
        config.apply_caps()
        return args.func(args, config)
    except TotalConflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFLICT
    except (UsageError, FrameError, MassError, DatasetError, FastPathUnavailable, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        frames.FRAME_CAP, frames.PRODUCT_CAP = caps


if __name__ == "__main__":
    sys.exit(main())
