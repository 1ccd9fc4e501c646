"""Command-line front end: occupation/purity sweeps, optimization, simulation, calibration.

Exit codes: 0 success, 2 invalid input, 3 instability or failed optimization,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys

import numpy as np

from . import calibrate, controllers, purity, sde, systems
from .core import DimensionlessParams, MethodId, stationary_wavefunction_covariances, zero_point_energy
from .errors import (
    DivergenceError,
    DomainError,
    EvaluationError,
    InputError,
    InstabilityError,
    OptimizationError,
    SingularityError,
)

SEED_ENV = "FEEDBACK_COOLING_SEED"
EXIT_OK, EXIT_INPUT, EXIT_UNSTABLE, EXIT_IO = 0, 2, 3, 4

CURVE_HEADER = ["gamma_tilde", "occupation", "optimal_s", "optimal_g", "stderr", "status"]
PURITY_HEADER = ["method", "eta", "gamma_tilde", "purity", "stderr", "status"]


# ---------------------------------------------------------------- parsing


def parse_grid(text: str) -> list:
    """``start:step:stop`` (inclusive), single values, or comma-separated mixes of both."""
    values = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        try:
            nums = [float(p) for p in parts]
        except ValueError:
            raise InputError(f"bad grid item {item!r}") from None
        if len(nums) == 1:
            values.append(nums[0])
        elif len(nums) == 3:
            start, step, stop = nums
            if not step > 0.0 or stop < start:
                raise InputError(f"grid {item!r} needs step > 0 and stop >= start")
            count = int(math.floor((stop - start) / step + 1e-9))
            values.extend(float(f"{start + i * step:.12g}") for i in range(count + 1))
        else:
            raise InputError(f"grid item {item!r} must be a value or start:step:stop")
    if not values:
        raise InputError(f"empty grid {text!r}")
    return values


def parse_time(text: str) -> float:
    """A float, or a multiple/fraction of pi such as ``pi/2000`` or ``4000pi``."""
    s = str(text).strip().lower().replace(" ", "")
    m = re.fullmatch(r"([0-9.eE+-]*)\*?pi(?:/([0-9.eE+-]+))?", s)
    try:
        if m:
            num = float(m.group(1)) if m.group(1) else 1.0
            den = float(m.group(2)) if m.group(2) else 1.0
            return num * math.pi / den
        return float(s)
    except ValueError:
        raise InputError(f"cannot parse time value {text!r}") from None


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return sde.SimConfig().seed
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def sim_config(args) -> sde.SimConfig:
    base = sde.SimConfig()
    seed = args.seed if args.seed is not None else default_seed()
    return sde.SimConfig(
        dt=parse_time(args.dt) if args.dt else base.dt,
        t_total=parse_time(args.time) if args.time else base.t_total,
        burn_in=parse_time(args.burn_in) if args.burn_in else base.burn_in,
        n_traj=args.ntraj if args.ntraj is not None else base.n_traj,
        seed=seed,
        scheme=args.scheme or base.scheme,
    )


def fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def error_kind(exc: Exception) -> str:
    for cls, name in ((DivergenceError, "divergence"), (InstabilityError, "instability"),
                      (OptimizationError, "optimization"), (SingularityError, "singularity"),
                      (EvaluationError, "evaluation"), (DomainError, "domain"), (InputError, "input")):
        if isinstance(exc, cls):
            return name
    return type(exc).__name__.lower()


# ---------------------------------------------------------------- output


class _Output:
    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def write_rows(self, header, rows):
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)

    def close(self):
        text = self.buf.getvalue()
        if self.path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)


# --------------------------------------------------------------- commands


def _solve(method, gamma, eta, cfg, floor):
    if method is MethodId.CD_DELAYED:
        return controllers.delayed_result(gamma, eta, cfg, floor=floor)
    return controllers.method_result(method, gamma, eta)


def cmd_curve(args) -> int:
    method = MethodId.parse(args.method)
    eta = float(args.eta)
    grid = parse_grid(args.gamma)
    cfg = sim_config(args) if method is MethodId.CD_DELAYED else None
    rows = []
    for gamma in grid:
        try:
            res = _solve(method, gamma, eta, cfg, args.floor)
            err = res.stderr.get("occupation") if res.stderr else None
            p = res.optimal_params
            rows.append([fmt(gamma), fmt(res.occupation), fmt(p.s_tilde), fmt(p.g_tilde), fmt(err), "ok"])
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            rows.append([fmt(gamma), "", "", "", "", f"error:{error_kind(exc)}"])
    out = _Output(args.output)
    out.write_rows(CURVE_HEADER, rows)
    out.close()
    return EXIT_OK


def cmd_purity(args) -> int:
    methods = [MethodId.parse(m) for m in args.methods.split(",") if m.strip()]
    etas = parse_grid(args.eta)
    grid = parse_grid(args.gamma)
    cfg = sim_config(args) if MethodId.CD_DELAYED in methods else None
    rows = []
    for method in methods:
        for eta in etas:
            for gamma in grid:
                try:
                    res = _solve(method, gamma, eta, cfg, args.floor)
                    err = res.stderr.get("purity") if res.stderr else None
                    rows.append([method.value, fmt(eta), fmt(gamma), fmt(res.purity), fmt(err), "ok"])
                except (ArithmeticError, ValueError, RuntimeError) as exc:
                    rows.append([method.value, fmt(eta), fmt(gamma), "", "", f"error:{error_kind(exc)}"])
    out = _Output(args.output)
    out.write_rows(PURITY_HEADER, rows)
    out.close()
    return EXIT_OK


def cmd_optimize(args) -> int:
    method = MethodId.parse(args.method)
    eta, gamma = float(args.eta), float(args.gamma)
    if method is MethodId.CD_DELAYED:
        res = controllers.delayed_result(gamma, eta, sim_config(args), floor=args.floor)
    else:
        res = controllers.method_result(method, gamma, eta)
    p = res.optimal_params
    lines = [f"method = {method.value}", f"eta = {eta!r}", f"gamma_tilde = {gamma!r}"]
    if method is MethodId.LPF:
        lines.append("optimal_s = gamma / sqrt(1/eta + gamma^2/2)")
    if p.s_tilde is not None:
        lines.append(f"optimal_s = {p.s_tilde!r}")
    if p.g_tilde is not None:
        lines.append(f"optimal_g = {p.g_tilde!r}")
    lines.append(f"occupation = {res.occupation!r}")
    if res.stderr:
        lines.append(f"occupation_stderr = {res.stderr['occupation']!r}")
    print("\n".join(lines))
    return EXIT_OK


def _simulate_linear(method, gamma, eta, s, g, cfg, dump):
    zp = zero_point_energy(gamma)
    base = stationary_wavefunction_covariances(gamma)
    if method is MethodId.LPF:
        s = s if s is not None else controllers.lpf_optimal_s(gamma, eta)
        p = DimensionlessParams(gamma, eta, s_tilde=s)
        system, T = systems.lpf_system(p), systems.LPF_OBSERVABLES
    else:
        if s is None or g is None:
            opt = controllers.bp_minimize(gamma, eta).optimal_params
            s = s if s is not None else opt.s_tilde
            g = g if g is not None else opt.g_tilde
        p = DimensionlessParams(gamma, eta, s_tilde=s, g_tilde=g)
        system, T = systems.bp_real_system(p), np.eye(4)[:2]
    try:
        moments = sde.integrate_linear(system, cfg, observables=T, dump_dir=dump)
    except DivergenceError as exc:
        if method is MethodId.CD_BANDPASS and not controllers.bp_is_stable(s, g):
            bound = 0.25 * (s + 1.0 / s)
            raise DivergenceError(
                f"{exc}; band-pass loop at s={s!r}, g={g!r} violates the stability condition "
                f"0 < g < (s + 1/s)/4 = {bound!r}", time=exc.time, trajectory=exc.trajectory) from exc
        raise
    energy = moments.linear(0.5 * np.eye(2))

    def pur(m):
        det = (base.vx + m[0, 0]) * (base.vp + m[1, 1]) - (base.vcov + 0.5 * (m[0, 1] + m[1, 0])) ** 2
        return 0.5 / math.sqrt(det)

    return p, moments, energy.mean + zp, energy.stderr, moments.delta(pur)


def cmd_simulate(args) -> int:
    method = MethodId.parse(args.method)
    if method is MethodId.LQG:
        raise InputError("lqg is evaluated in closed form; use 'curve' or 'optimize'")
    eta, gamma = float(args.eta), float(args.gamma)
    cfg = sim_config(args)
    if method is MethodId.CD_DELAYED:
        g = args.g if args.g is not None else sde.optimize_delayed_gain(gamma, eta, cfg, floor=args.floor)
        moments = sde.run_delayed(gamma, eta, g, cfg, dump_dir=args.dump)
        en = sde.delayed_energy(moments, gamma, eta, args.floor)
        pur = sde.delayed_purity_estimate(moments, gamma, eta)
        p = DimensionlessParams(gamma, eta, g_tilde=g)
        energy, energy_err = en.mean, en.stderr
    else:
        p, moments, energy, energy_err, pur = _simulate_linear(method, gamma, eta, args.s, args.g, cfg, args.dump)

    lines = [
        f"method = {method.value}",
        f"eta = {eta!r}",
        f"gamma_tilde = {gamma!r}",
        f"s_tilde = {fmt(p.s_tilde) or 'n/a'}",
        f"g_tilde = {fmt(p.g_tilde) or 'n/a'}",
        f"dt = {cfg.dt!r}",
        f"t_total = {cfg.t_total!r}",
        f"burn_in = {cfg.burn_in!r}",
        f"n_traj = {cfg.n_traj}",
        f"seed = {cfg.seed}",
        f"scheme = {cfg.scheme.value}",
        f"energy = {energy!r}",
        f"occupation = {energy - 0.5!r}",
        f"stderr = {energy_err!r}",
        f"purity = {pur.mean!r}",
        f"purity_stderr = {pur.stderr!r}",
    ]
    print("\n".join(lines))
    if args.output:
        mean, err = moments.mean, moments.stderr
        rows = []
        names = moments.labels if method is not MethodId.LPF else ("X-X_pre", "P")
        for i in range(mean.shape[0]):
            for j in range(i, mean.shape[1]):
                rows.append([f"{names[i]}*{names[j]}", fmt(mean[i, j]), fmt(err[i, j])])
        out = _Output(args.output)
        out.write_rows(["moment", "mean", "stderr"], rows)
        out.close()
    return EXIT_OK


def _calibration_params(args) -> calibrate.ExperimentParams:
    values = {}
    if args.file:
        with open(args.file, encoding="utf-8") as fh:
            values.update(calibrate.parse_param_text(fh.read()))
    # a frequency flag overrides whichever form the file used
    if args.omega is not None or args.frequency is not None:
        values.pop("omega", None)
        values.pop("frequency", None)
    for key in ("mass", "omega", "frequency", "precision", "eta", "heating_rate"):
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    return calibrate.params_from_mapping(values)


def cmd_calibrate(args) -> int:
    p = _calibration_params(args)
    report = calibrate.natural_units_report(p)
    lines = report.lines()
    if p.eta is not None:
        g, eta = report.gamma_tilde, p.eta
        lines.append(f"fundamental_bound = {controllers.fundamental_bound(eta)!r}")
        lines.append(f"occupation lpf = {controllers.lpf_min_occupation(g, eta)!r}")
        lines.append(f"occupation lqg = {controllers.lqg_energy(g, eta) - 0.5!r}")
        for method in (MethodId.CD_BANDPASS, MethodId.CD_DELAYED):
            if method is MethodId.CD_DELAYED and args.no_delayed:
                continue
            try:
                res = _solve(method, g, eta, sim_config(args), args.floor)
                extra = f" +- {res.stderr['occupation']!r}" if res.stderr else ""
                lines.append(f"occupation {method.value} = {res.occupation!r}{extra}")
            except (ArithmeticError, RuntimeError) as exc:
                lines.append(f"occupation {method.value} = error:{error_kind(exc)}")
    print("\n".join(lines))
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_sim_flags(p):
    g = p.add_argument_group("Monte Carlo (dimensionless time; 'pi/N' accepted)")
    g.add_argument("--dt")
    g.add_argument("--time", help="total simulated time")
    g.add_argument("--burn-in", dest="burn_in")
    g.add_argument("--ntraj", type=int)
    g.add_argument("--seed", type=int, help=f"default: ${SEED_ENV} or 12345")
    g.add_argument("--scheme", choices=[s.value for s in sde.Scheme])
    g.add_argument("--floor", choices=["conditioned", "zero-point"], default="conditioned",
                   help="energy floor added to the delayed-feedback fluctuations")


def build_parser() -> argparse.ArgumentParser:
    methods = [m.value for m in MethodId]
    parser = argparse.ArgumentParser(prog="feedback-cooling", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="minimum occupation versus gamma_tilde (CSV)")
    p.add_argument("--method", required=True, choices=methods)
    p.add_argument("--eta", required=True, type=float)
    p.add_argument("--gamma", required=True, help="grid start:step:stop, value or list")
    p.add_argument("--output", "-o", default="-")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("optimize", help="optimal filter/gain settings at one point")
    p.add_argument("--method", required=True, choices=methods)
    p.add_argument("--eta", required=True, type=float)
    p.add_argument("--gamma", required=True, type=float)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo run with summary")
    p.add_argument("--method", required=True, choices=methods)
    p.add_argument("--eta", required=True, type=float)
    p.add_argument("--gamma", required=True, type=float)
    p.add_argument("--s", type=float, help="filter cutoff (default: optimal)")
    p.add_argument("--g", type=float, help="feedback gain (default: optimal)")
    p.add_argument("--dump", help="directory for per-trajectory CSVs")
    p.add_argument("--output", "-o", help="CSV of the estimated second moments")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("purity", help="purity versus gamma_tilde for several methods (CSV)")
    p.add_argument("--methods", default=",".join(methods))
    p.add_argument("--eta", required=True, help="grid of efficiencies")
    p.add_argument("--gamma", required=True)
    p.add_argument("--output", "-o", default="-")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("calibrate", help="gamma_tilde and natural units from lab parameters")
    p.add_argument("--file", help="key=value parameter file")
    p.add_argument("--mass", type=float, help="kg")
    p.add_argument("--omega", type=float, help="rad/s")
    p.add_argument("--frequency", type=float, help="Hz (alternative to --omega)")
    p.add_argument("--precision", type=float, help="m/sqrt(Hz)")
    p.add_argument("--eta", type=float)
    p.add_argument("--heating-rate", dest="heating_rate", type=float, help="J/s")
    p.add_argument("--no-delayed", action="store_true", help="skip the Monte Carlo delayed-feedback estimate")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstabilityError, OptimizationError, SingularityError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (InputError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
