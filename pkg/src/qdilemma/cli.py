"""Command-line front end.

Exit codes: 0 success, 1 a reproduction check failed, 2 invalid input,
3 output path not writable, 4 NE indicator not monotone in mu.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import acceptance, channel
from .equilibrium import (
    StrategyGrid, default_grid, enumerate_pure_ne, ne_threshold, reference_mixed_profile,
    verify_mixed_ne,
)
from .errors import InvalidParameter, NotMonotone, QDilemmaError
from .game import (
    HALF_PI, NAMED_STRATEGIES, ClassicalPayoffs, MeasurementBasis, Strategy,
    ThreeParamStrategy, TwoParamStrategy, closed_form_2p_entangled, closed_form_2p_general,
    closed_form_3p, closed_form_product, payoffs,
)
from .linalg import frobenius_distance

SCHEMA_VERSION = 1
CSV_HEADER = ("param", "value", "theta_a", "phi_a", "psi_a",
              "theta_b", "phi_b", "psi_b", "payoff_a", "payoff_b")
MAX_SWEEP_STEPS = 10**6
# a delta within this distance of 0 or pi/2 counts as that special basis
SPECIAL_DELTA_TOL = 1e-6

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_UNWRITABLE, EXIT_NOT_MONOTONE = 0, 1, 2, 3, 4

_ANGLE = re.compile(r"^\s*(?P<sign>-)?\s*(?:(?P<k>\d+(?:\.\d*)?)\s*\*\s*)?pi\s*(?:/\s*(?P<d>\d+(?:\.\d*)?))?\s*$")


class UsageError(QDilemmaError):
    """Invalid command-line input; the message names the field."""


def parse_angle(text: str, field_name: str = "angle") -> float:
    """Radians, or a literal such as ``pi``, ``pi/2``, ``-pi/4``, ``3*pi/4``."""
    m = _ANGLE.match(text.lower())
    if m:
        v = math.pi * float(m["k"] or 1.0) / float(m["d"] or 1.0)
        return -v if m["sign"] else v
    try:
        v = float(text)
    except ValueError:
        raise UsageError(f"{field_name}: cannot parse {text!r} as an angle") from None
    if not math.isfinite(v):
        raise UsageError(f"{field_name}: must be finite, got {text!r}")
    return v


def parse_strategy(text: str, convention: str, field_name: str) -> Strategy:
    key = text.strip().upper()
    if key in NAMED_STRATEGIES:
        if convention != "2p":
            raise UsageError(f"{field_name}: named strategy {key} needs --convention 2p")
        return NAMED_STRATEGIES[key]
    parts = [parse_angle(p, field_name) for p in text.split(",")]
    try:
        if convention == "2p":
            if len(parts) != 2:
                raise UsageError(f"{field_name}: expected 'theta,phi' or C/D/Q, got {text!r}")
            return TwoParamStrategy(*parts)
        if len(parts) != 3:
            raise UsageError(f"{field_name}: expected 'theta,phi,psi', got {text!r}")
        return ThreeParamStrategy(*parts)
    except InvalidParameter as exc:
        raise UsageError(f"{field_name}: {exc}") from None


@dataclass
class RunConfig:
    mu: float
    delta: float
    convention: str = "2p"
    payoffs: ClassicalPayoffs = field(default_factory=ClassicalPayoffs)
    grid: StrategyGrid | None = None
    tolerance: float = 1e-9
    seed: int = 0
    output_path: str | None = None
    gamma_t: float | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = asdict(self.effective_grid)
        return d

    @property
    def effective_grid(self) -> StrategyGrid:
        return self.grid or default_grid(self.convention)


def build_config(args) -> RunConfig:
    """Validate every shared option before any computation starts."""
    if args.mu is not None and args.gamma_t is not None:
        raise UsageError("mu/gamma-t: give exactly one of --mu or --gamma-t")
    try:
        if args.gamma_t is not None:
            gamma_t = float(args.gamma_t)
            mu = channel.decoherence_from_gamma_t(gamma_t).mu
        else:
            gamma_t = None
            mu = channel.DecoherenceParam(1.0 if args.mu is None else args.mu).mu
    except InvalidParameter as exc:
        raise UsageError(f"mu/gamma-t: {exc} (mu in [0, 1], gamma-t >= 0)") from None
    delta = parse_angle(args.delta, "delta")
    try:
        MeasurementBasis(delta)
    except InvalidParameter:
        raise UsageError(f"delta: must lie in [0, pi/2], got {args.delta!r}") from None
    if args.convention not in ("2p", "3p"):
        raise UsageError(f"convention: must be 2p or 3p, got {args.convention!r}")
    try:
        vals = [float(v) for v in args.payoffs.split(",")]
        if len(vals) != 4:
            raise ValueError
        game = ClassicalPayoffs(*vals)
    except (ValueError, InvalidParameter):
        raise UsageError(f"payoffs: expected 4 finite numbers 'R,S,T,P', got {args.payoffs!r}") from None
    grid = None
    if args.grid:
        try:
            counts = [int(v) for v in args.grid.split(",")]
            grid = StrategyGrid(*counts)
        except (ValueError, TypeError, InvalidParameter) as exc:
            raise UsageError(f"grid: expected odd counts 'n_theta,n_phi[,n_psi]' ({exc})") from None
    if not (args.tolerance >= 0 and math.isfinite(args.tolerance)):
        raise UsageError(f"tolerance: must be finite and >= 0, got {args.tolerance!r}")
    return RunConfig(mu=mu, delta=delta, convention=args.convention, payoffs=game, grid=grid,
                     tolerance=args.tolerance, seed=args.seed,
                     output_path=getattr(args, "output", None), gamma_t=gamma_t)


def fmt_number(x: float) -> str:
    """Shortest round-trip decimal, capped at 12 significant digits."""
    x = float(x)
    if x == 0:
        return "0"
    short = repr(x)
    capped = f"{x:.12g}"
    return short if float(capped) == x and len(short) <= len(capped) else capped


def _emit(args, config: RunConfig | None, results: list, text: str) -> None:
    if args.json:
        doc = {"schema_version": SCHEMA_VERSION,
               "config": config.as_dict() if config else {},
               "results": results}
        out = json.dumps(doc, indent=2, sort_keys=True, default=_json_default)
    else:
        out = text
    if getattr(args, "output", None) and args.command != "sweep":
        _write(args.output, out + "\n")
    else:
        print(out)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


class Unwritable(QDilemmaError):
    pass


def _write(path: str, content: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
    except OSError as exc:
        raise Unwritable(f"cannot write {path}: {exc.strerror or exc}") from None


# -- commands ---------------------------------------------------------------

def cmd_payoff(args) -> int:
    config = build_config(args)
    alice = parse_strategy(args.alice, config.convention, "alice")
    bob = parse_strategy(args.bob, config.convention, "bob")
    ref = payoffs(alice, bob, config.mu, config.delta, config.payoffs)
    closed = {}
    if config.payoffs == ClassicalPayoffs():
        if config.convention == "2p":
            closed["2p_general"] = closed_form_2p_general(alice, bob, config.mu, config.delta)
            if abs(config.delta - HALF_PI) <= SPECIAL_DELTA_TOL:
                closed["2p_entangled"] = closed_form_2p_entangled(alice, bob, config.mu)
            if config.delta <= SPECIAL_DELTA_TOL:
                closed["product"] = closed_form_product(alice, bob, config.mu)
        else:
            closed["3p"] = closed_form_3p(alice, bob, config.mu, config.delta)
    record = {
        "alice": list(alice.params), "bob": list(bob.params),
        "payoff_a": ref.alice, "payoff_b": ref.bob,
        "closed_forms": {
            k: {"payoff_a": v.alice, "payoff_b": v.bob,
                "dev_a": abs(v.alice - ref.alice), "dev_b": abs(v.bob - ref.bob)}
            for k, v in closed.items()
        },
    }
    lines = [f"payoff_a={fmt_number(ref.alice)}", f"payoff_b={fmt_number(ref.bob)}"]
    for k, v in record["closed_forms"].items():
        lines.append(f"closed_form[{k}]: payoff_a={fmt_number(v['payoff_a'])} "
                     f"payoff_b={fmt_number(v['payoff_b'])} "
                     f"(deviation {v['dev_a']:.3e}, {v['dev_b']:.3e})")
    _emit(args, config, [record], "\n".join(lines))
    return EXIT_OK


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    step: float
    profile: tuple[Strategy, Strategy]

    def __post_init__(self):
        if self.parameter not in ("mu", "delta", "gamma_t"):
            raise UsageError(f"param: must be mu, delta or gamma_t, got {self.parameter!r}")
        if not all(math.isfinite(v) for v in (self.start, self.stop, self.step)):
            raise UsageError("start/stop/step: must be finite")
        if self.step <= 0:
            raise UsageError(f"step: must be > 0, got {self.step!r}")
        if self.start > self.stop:
            raise UsageError("start/stop: start must be <= stop")
        if (self.stop - self.start) / self.step > MAX_SWEEP_STEPS:
            raise UsageError(f"step: more than {MAX_SWEEP_STEPS} steps requested")
        lo, hi = {"mu": (0.0, 1.0), "delta": (0.0, HALF_PI), "gamma_t": (0.0, math.inf)}[self.parameter]
        if self.start < lo or self.stop > hi + 1e-12:
            raise UsageError(f"{self.parameter}: sweep range must lie in [{lo:g}, {hi:g}]")

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        vals = self.start + self.step * np.arange(n)
        return np.minimum(vals, self.stop)


def sweep_rows(config: RunConfig, spec: SweepSpec) -> list[list[str]]:
    alice, bob = spec.profile
    rows = []
    for value in spec.values():
        mu, delta = config.mu, config.delta
        if spec.parameter == "mu":
            mu = float(value)
        elif spec.parameter == "delta":
            delta = float(value)
        else:
            mu = math.exp(-2.0 * float(value))
        pa, pb = payoffs(alice, bob, mu, delta, config.payoffs)
        params = []
        for s in (alice, bob):
            p = list(s.params) + ([None] if len(s.params) == 2 else [])
            params += ["" if v is None else fmt_number(v) for v in p]
        rows.append([spec.parameter, fmt_number(value), *params, fmt_number(pa), fmt_number(pb)])
    return rows


def cmd_sweep(args) -> int:
    config = build_config(args)
    profile = (parse_strategy(args.alice, config.convention, "alice"),
               parse_strategy(args.bob, config.convention, "bob"))
    start = parse_angle(args.start, "start") if args.param == "delta" else _num(args.start, "start")
    stop = parse_angle(args.stop, "stop") if args.param == "delta" else _num(args.stop, "stop")
    step = parse_angle(args.step, "step") if args.param == "delta" else _num(args.step, "step")
    spec = SweepSpec(args.param, start, stop, step, profile)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(sweep_rows(config, spec))
    if args.output:
        _write(args.output, buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def _num(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"{name}: not a number: {text!r}") from None


def cmd_find_ne(args) -> int:
    config = build_config(args)
    if config.convention != "2p":
        raise UsageError("convention: find-ne enumerates the named C/D/Q profiles (2p only)")
    reports = enumerate_pure_ne(config.mu, config.delta, config.effective_grid,
                                tolerance=config.tolerance, c=config.payoffs)
    lines = []
    for r in reports:
        a, b = r.profile
        lines.append(f"({a},{b}) {'NE    ' if r.is_ne else 'not NE'} payoffs=({fmt_number(r.payoffs.alice)}, "
                     f"{fmt_number(r.payoffs.bob)}) worst_gain={r.worst_deviation_gain:.3e} "
                     f"by {r.witness_player} -> {r.witness}")
    ne = [f"({r.profile[0]},{r.profile[1]})" for r in reports if r.is_ne]
    lines.append("NE set: {" + ", ".join(ne) + "}")
    _emit(args, config, [r.as_dict() for r in reports], "\n".join(lines))
    return EXIT_OK


def cmd_threshold(args) -> int:
    config = build_config(args)
    profile = (parse_strategy(args.alice, config.convention, "alice"),
               parse_strategy(args.bob, config.convention, "bob"))
    res = ne_threshold(profile, config.delta, config.effective_grid, args.direction,
                       tol=args.tol, tolerance=config.tolerance, c=config.payoffs)
    record = {"profile": [str(p) for p in profile], "mu_star": res.mu_star,
              "gamma_t": res.gamma_t, "flag": res.flag, "direction": res.direction}
    if res.flag == "always":
        text = "always NE"
    elif res.flag == "never":
        text = "never NE"
    else:
        text = f"mu*={res.mu_star:.9f} gamma_t*={res.gamma_t:.9f} ({res.direction})"
    _emit(args, config, [record], text)
    return EXIT_OK


def cmd_mixed_ne(args) -> int:
    config = build_config(args)
    psi, phi = parse_angle(args.psi, "psi"), parse_angle(args.phi, "phi")
    try:
        m_a, m_b = reference_mixed_profile(psi, phi)
    except InvalidParameter as exc:
        raise UsageError(f"psi/phi: {exc}") from None
    grid = config.grid or default_grid("3p")
    r = verify_mixed_ne(m_a, m_b, config.mu, config.delta, grid, config.tolerance, config.payoffs)
    lines = ["pair      payoff_a      payoff_b"]
    names = [[str(s) for s, _ in m.support] for m in (m_a, m_b)]
    for key, v in r.component_payoffs.items():
        i, j = map(int, key.split(","))
        lines.append(f"{names[0][i]},{names[1][j]}   {fmt_number(v['alice']):<12}  {fmt_number(v['bob'])}")
    lines.append(f"average: ({fmt_number(r.payoffs.alice)}, {fmt_number(r.payoffs.bob)})")
    lines.append(f"NE: {r.is_ne} (worst deviation gain {r.worst_deviation_gain:.3e})")
    _emit(args, config, [r.as_dict()], "\n".join(lines))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    try:
        values = [float(v) for v in args.gamma_t_list.split(",")]
    except ValueError:
        raise UsageError(f"gamma-t-list: expected comma-separated numbers, got {args.gamma_t_list!r}") from None
    if any(not math.isfinite(v) or v < 0 for v in values):
        raise UsageError("gamma-t-list: values must be finite and >= 0")
    if not (args.dt > 0 and math.isfinite(args.dt)):
        raise UsageError(f"dt: must be > 0, got {args.dt!r}")
    records, lines = [], []
    for gt in values:
        rho = channel.integrate_master_equation(channel.initial_state(1.0), 1.0, gt, args.dt)
        d = frobenius_distance(rho.mat, channel.initial_state(math.exp(-2 * gt)).mat)
        records.append({"gamma_t": gt, "dt": args.dt, "frobenius_distance": d})
        lines.append(f"gamma_t={fmt_number(gt)} dt={fmt_number(args.dt)} distance={d:.3e}")
    _emit(args, None, records, "\n".join(lines))
    return EXIT_OK


def cmd_verify_paper(args) -> int:
    results = []
    for num, *_ in acceptance.CRITERIA:
        r = acceptance.run_criterion(num)
        results.append(r)
        if not args.json:
            print(r.line(), flush=True)
    n_fail = sum(not r.passed for r in results)
    records = [r.as_dict() for r in results]
    if args.json:
        _emit(args, None, records, "")
    else:
        print(f"{len(results) - n_fail}/{len(results)} criteria passed")
        if args.output:
            # text goes to the terminal; the file always gets the JSON report
            doc = {"schema_version": SCHEMA_VERSION, "config": {}, "results": records}
            _write(args.output, json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


# -- parser -----------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, help="decoherence level exp(-2 gamma t) in [0, 1] (default 1)")
    p.add_argument("--gamma-t", dest="gamma_t", type=float, help="elapsed gamma*t >= 0 (instead of --mu)")
    p.add_argument("--delta", default="pi/2", help="measurement-basis entanglement in [0, pi/2]")
    p.add_argument("--convention", default="2p", help="strategy set: 2p or 3p")
    p.add_argument("--payoffs", default="3,0,5,1", help="classical payoffs R,S,T,P")
    p.add_argument("--grid", help="deviation grid counts n_theta,n_phi[,n_psi]")
    p.add_argument("--tolerance", type=float, default=1e-9, help="NE tolerance in payoff units")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write output to this file")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qdilemma",
                                     description="Quantum Prisoners' Dilemma under collective dephasing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("payoff", help="payoffs of one strategy profile")
    _add_common(p)
    p.add_argument("--alice", required=True, help="C, D, Q, 'theta,phi' or 'theta,phi,psi'")
    p.add_argument("--bob", required=True)
    p.set_defaults(func=cmd_payoff)

    p = sub.add_parser("sweep", help="payoffs along one parameter, as CSV")
    _add_common(p)
    p.add_argument("--param", required=True, choices=("mu", "delta", "gamma_t"))
    p.add_argument("--start", required=True)
    p.add_argument("--stop", required=True)
    p.add_argument("--step", required=True)
    p.add_argument("--alice", required=True)
    p.add_argument("--bob", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("find-ne", help="check every profile over {C, D, Q}^2")
    _add_common(p)
    p.set_defaults(func=cmd_find_ne)

    p = sub.add_parser("threshold", help="bisect for the mu where a profile stops/starts being NE")
    _add_common(p)
    p.add_argument("--alice", required=True)
    p.add_argument("--bob", required=True)
    p.add_argument("--direction", choices=("ne_above", "ne_below"))
    p.add_argument("--tol", type=float, default=1e-6, help="bisection width in mu")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("mixed-ne", help="verify the equal-weight three-parameter mixed NE")
    _add_common(p)
    p.add_argument("--psi", default="0", help="Alice's free psi")
    p.add_argument("--phi", default="0", help="Bob's free phi")
    p.set_defaults(func=cmd_mixed_ne, convention="3p")

    p = sub.add_parser("oracle-check", help="RK4 master equation vs closed-form dephased state")
    p.add_argument("--gamma-t-list", default="0.1,0.5,1,3")
    p.add_argument("--dt", type=float, default=channel.DEFAULT_DT)
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("verify-paper", help="run every reproduction check")
    p.add_argument("--output")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify_paper)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidParameter) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Unwritable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    except NotMonotone as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_MONOTONE


if __name__ == "__main__":
    sys.exit(main())
