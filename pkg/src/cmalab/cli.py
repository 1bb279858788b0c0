"""Command-line entry point: solve | energy | envelope | verify | study.

Exit status: 0 success/pass, 1 check failure or non-convergence, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import io
from .calculus import GridFunction, normalization
from .energy import RandomFamily, ProbeFamily, energy_report
from .envelope import psh_projection, relative_extremal
from .families import random_psh
from .grid import ClosedBall, build_domain, canonical_preset, node_set
from .measures import KINDS, MeasureSpec, realize
from .solver import SolveOptions, solve_dirichlet


class ConfigError(ValueError):
    pass


SCHEMA = {
    "domain": {"preset": str, "resolution": int},
    "measure": {"kind": str, "params": str, "normalization": float, "path": str, "source": str},
    "solver": {"max_iters": int, "tol_residual": float, "tol_j": float, "step0": float,
               "seed_start": str, "polish": bool},
    "energy": {"function": str, "p": float},
    "envelope": {"obstacle": str},
    "verify": {"suite": str, "samples": int},
    "output": {"directory": str},
    "run": {"seed": int},
}

SUITES = ("holder", "triangle", "lipschitz", "derivative", "envelope-derivative", "comparison",
          "optimality", "uniqueness", "condition3", "condition4")


@dataclass
class RunConfig:
    preset: str = "disc"
    resolution: int = 65
    measure: MeasureSpec = field(default_factory=lambda: MeasureSpec("constant", (4.0,)))
    measure_source: str = ""
    solver: SolveOptions = field(default_factory=SolveOptions)
    energy_function: str = "solution"
    energy_p: float = 1.0
    obstacle: str = "radial-quartic"
    suite: str = "all"
    samples: int = 10
    output: str = "out"
    seed: int = 0


def _get(cp, section, key, typ):
    raw = cp.get(section, key)
    try:
        if typ is bool:
            return cp.getboolean(section, key)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r}: expected {typ.__name__}") from None


def parse_config(path) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"configuration file {path!r} not found")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
    vals = {s: {k: _get(cp, s, k, t) for k, t in SCHEMA[s].items() if cp.has_option(s, k)}
            for s in SCHEMA if cp.has_section(s)}
    cfg = RunConfig()
    d = vals.get("domain", {})
    try:
        cfg.preset = canonical_preset(d.get("preset", cfg.preset))
    except ValueError as exc:
        raise ConfigError(f"[domain] preset: {exc}") from None
    cfg.resolution = d.get("resolution", cfg.resolution)
    if cfg.resolution < 5 or cfg.resolution % 2 == 0:
        raise ConfigError(f"[domain] resolution = {cfg.resolution}: must be odd and >= 5")
    run = vals.get("run", {})
    cfg.seed = run.get("seed", cfg.seed)

    m = vals.get("measure", {})
    kind = m.get("kind", "constant")
    if kind not in KINDS:
        raise ConfigError(f"[measure] kind = {kind!r}: expected one of {KINDS}")
    try:
        params = tuple(float(x) for x in m.get("params", "4").replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"[measure] params = {m['params']!r}: expected numbers") from None
    mpath = m.get("path")
    if kind == "csv-path":
        if not mpath:
            raise ConfigError("[measure] path is required for kind = csv-path")
        if not os.path.isabs(mpath):
            mpath = os.path.join(os.path.dirname(os.path.abspath(path)), mpath)
        if not os.path.exists(mpath):
            raise ConfigError(f"[measure] path = {m['path']!r}: file not found")
    cfg.measure_source = m.get("source", "quadratic")
    if kind == "ma-of":
        _check_function_name(cfg.measure_source, "[measure] source")
    cfg.measure = MeasureSpec(kind, params, m.get("normalization"), mpath)

    s = vals.get("solver", {})
    try:
        cfg.solver = SolveOptions(max_iters=s.get("max_iters", 200),
                                  tol_residual=s.get("tol_residual", 1e-6),
                                  tol_J=s.get("tol_j", 1e-13), step0=s.get("step0", 1.0),
                                  seed_start=s.get("seed_start", "zero"), seed=cfg.seed,
                                  polish=s.get("polish", True))
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None

    e = vals.get("energy", {})
    cfg.energy_function = e.get("function", cfg.energy_function)
    if cfg.energy_function != "solution":
        _check_function_name(cfg.energy_function, "[energy] function")
    cfg.energy_p = e.get("p", 1.0)
    if cfg.energy_p <= 0:
        raise ConfigError("[energy] p must be positive")
    cfg.obstacle = vals.get("envelope", {}).get("obstacle", cfg.obstacle)
    if not (cfg.obstacle == "radial-quartic" or cfg.obstacle.startswith("extremal:")):
        _check_function_name(cfg.obstacle, "[envelope] obstacle")
    v = vals.get("verify", {})
    cfg.suite = v.get("suite", "all")
    cfg.samples = v.get("samples", cfg.samples)
    out = vals.get("output", {}).get("directory", cfg.output)
    if not os.path.isabs(out):
        out = os.path.join(os.path.dirname(os.path.abspath(path)), out)
    cfg.output = out
    return cfg


def _check_function_name(name, where):
    if name == "quadratic" or name.startswith("random:") or name.startswith("csv:"):
        if name.startswith("random:"):
            try:
                int(name.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"{where} = {name!r}: random:SEED needs an integer seed") from None
        if name.startswith("csv:") and not os.path.exists(name[4:]):
            raise ConfigError(f"{where} = {name!r}: file not found")
        return
    raise ConfigError(f"{where} = {name!r}: expected quadratic, random:SEED or csv:PATH")


def named_function(name: str, domain) -> GridFunction:
    if name == "quadratic":
        if domain.preset == "polydisc":
            z2 = np.abs(domain.z) ** 2
            return GridFunction(domain, np.max(z2 - 1.0, axis=1))
        return GridFunction.from_function(domain, domain.defining_function)
    if name.startswith("random:"):
        return random_psh(domain, np.random.default_rng(int(name.split(":", 1)[1])))
    if name.startswith("csv:"):
        vals, _ = io.read_field(name[4:], domain)
        return GridFunction(domain, vals)
    raise ConfigError(f"unknown function {name!r}")


def _measure(cfg, domain):
    spec = cfg.measure
    if spec.kind == "ma-of":
        spec = MeasureSpec("ma-of", spec.params, spec.normalization, source=named_function(cfg.measure_source, domain))
    return realize(spec, domain)


def exact_solution(cfg, domain):
    """Known continuum solution for the configured measure, or None."""
    if cfg.measure.normalization is not None:
        return None
    if cfg.measure.kind == "constant" and domain.preset != "polydisc":
        c = cfg.measure.params[0] if cfg.measure.params else 1.0
        k = (c / normalization(domain.n)) ** (1.0 / domain.n)
        return k * (np.sum(domain.points ** 2, axis=1) - 1.0)
    if cfg.measure.kind == "ma-of":
        return named_function(cfg.measure_source, domain).vec
    return None


def _prepare_output(cfg):
    os.makedirs(cfg.output, exist_ok=True)


def _fresh(path):
    if os.path.exists(path):
        os.remove(path)
    return path


def _solve_report_record(rep):
    d = asdict(rep)
    d.pop("seconds")
    return {"name": "solve", **d}


# ---------------------------------------------------------------- commands

def cmd_solve(cfg) -> int:
    domain = build_domain(cfg.preset, cfg.resolution)
    mu = _measure(cfg, domain)
    u, rep = solve_dirichlet(mu, cfg.solver)
    _prepare_output(cfg)
    io.write_field(os.path.join(cfg.output, "solution.csv"), domain, u.vec)
    io.append_jsonl(_fresh(os.path.join(cfg.output, "solve_report.jsonl")), [_solve_report_record(rep)])
    print(f"solve: {cfg.preset} N={cfg.resolution} iterations={rep.iterations} "
          f"residual={rep.residual_trace[-1]:.3e} converged={rep.converged} ({rep.reason})")
    return 0 if rep.converged else 1


def cmd_energy(cfg, p=None) -> int:
    domain = build_domain(cfg.preset, cfg.resolution)
    mu = _measure(cfg, domain)
    if cfg.energy_function == "solution":
        u, rep = solve_dirichlet(mu, cfg.solver)
    else:
        u = named_function(cfg.energy_function, domain)
    p = cfg.energy_p if p is None else p
    er = energy_report(u, mu, p)
    _prepare_output(cfg)
    io.append_jsonl(_fresh(os.path.join(cfg.output, "energy.jsonl")),
                    [{"name": "energy", "function": cfg.energy_function, **asdict(er)}])
    print(f"energy: e_{p:g} = {er.e_p:.12g}  J = {er.J:.12g}  int(-u)dmu = {er.mu_pairing:.12g}")
    return 0


def cmd_envelope(cfg) -> int:
    domain = build_domain(cfg.preset, cfg.resolution)
    if cfg.obstacle == "radial-quartic":
        phi = GridFunction.from_function(domain, lambda p: -(1.0 - np.sum(p ** 2, axis=1)) ** 2)
        res = psh_projection(phi)
    elif cfg.obstacle.startswith("extremal:"):
        K = node_set(domain, ClosedBall(float(cfg.obstacle.split(":", 1)[1])))
        w = relative_extremal(K)
        res = psh_projection(w)
        res.contact_mask = K.mask.copy()
    else:
        res = psh_projection(named_function(cfg.obstacle, domain))
    _prepare_output(cfg)
    io.write_field(os.path.join(cfg.output, "envelope.csv"), domain, res.w.vec, res.contact_mask)
    io.append_jsonl(_fresh(os.path.join(cfg.output, "envelope_report.jsonl")),
                    [{"name": "envelope", "obstacle": cfg.obstacle, "iterations": res.iterations,
                      "residual": res.residual, "eps_env": res.eps_env,
                      "contact_nodes": int(res.contact_mask.sum())}])
    print(f"envelope: {cfg.obstacle} sweeps={res.iterations} residual={res.residual:.3e}")
    return 0


def run_suite(name, cfg, domain):
    from . import verify as V
    from .families import random_family
    from .calculus import monge_ampere
    k = cfg.samples
    seed = cfg.seed
    if name == "holder":
        return [V.check_holder(domain, k, seed)]
    if name == "triangle":
        return [V.check_triangle(domain, k, seed)]
    if name == "lipschitz":
        return [V.check_lipschitz(domain, k, seed)]
    fam = random_family(domain, k + 2, seed)
    mu = _measure(cfg, domain)
    if name == "derivative":
        return [V.check_energy_derivative(fam[i], fam[i + 1]) for i in range(k)]
    if name == "envelope-derivative":
        return [V.check_J_envelope_derivative(fam[i], fam[i + 1], monge_ampere(fam[i + 2])) for i in range(k)]
    if name == "comparison":
        return [V.check_comparison(fam[i], fam[i + 1], fam[i + 2]) for i in range(k)]
    if name == "optimality":
        u, _ = solve_dirichlet(mu, cfg.solver)
        return [V.check_theoremB_optimality(u, mu, k, seed)]
    if name == "uniqueness":
        return [V.check_uniqueness(mu, ("zero", "scaled-radial", seed), cfg.solver)]
    if name == "condition3":
        return [V.check_condition3_membership(mu, [ProbeFamily(), RandomFamily(k, seed)])]
    if name == "condition4":
        return [V.check_condition4_compactness(mu, length=k, seed=seed)]
    raise ConfigError(f"unknown verify suite {name!r}; expected one of {SUITES + ('all',)}")


def cmd_verify(cfg, suite=None) -> int:
    from .verify import VerifyReport  # noqa: F401
    suite = suite or cfg.suite
    names = SUITES if suite == "all" else [suite]
    for nm in names:
        if nm not in SUITES:
            raise ConfigError(f"unknown verify suite {nm!r}; expected one of {SUITES + ('all',)}")
    domain = build_domain(cfg.preset, cfg.resolution)
    reports = []
    for nm in sorted(names):
        reports.extend(run_suite(nm, cfg, domain))
    _prepare_output(cfg)
    io.append_jsonl(_fresh(os.path.join(cfg.output, "verify.jsonl")), reports)
    print(f"{'check':<24}{'samples':>8}{'worst_gap':>14}{'tolerance':>13}  verdict")
    for r in reports:
        print(f"{r.check_name:<24}{r.samples:>8}{r.worst_gap:>14.4e}{r.tolerance:>13.4e}  {r.verdict}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_study(cfg, resolutions) -> int:
    rows = []
    for N in resolutions:
        domain = build_domain(cfg.preset, N)
        mu = _measure(cfg, domain)
        u, rep = solve_dirichlet(mu, cfg.solver)
        ex = exact_solution(cfg, domain)
        err = float(np.max(np.abs(u.vec - ex))) if ex is not None else float("nan")
        rows.append((N, domain.h, err, rep.residual_trace[-1], rep.iterations, rep.converged))
    _prepare_output(cfg)
    path = os.path.join(cfg.output, "study.csv")
    with open(path, "w") as fh:
        fh.write("resolution,h,max_error,residual,iterations,converged\n")
        for N, h, err, res, it, conv in rows:
            fh.write(f"{N},{io.FMT % h},{io.FMT % err},{io.FMT % res},{it},{int(conv)}\n")
    print(f"{'N':>6}{'h':>12}{'max_error':>14}{'residual':>12}{'iters':>7}")
    for N, h, err, res, it, conv in rows:
        print(f"{N:>6}{h:>12.5g}{err:>14.4e}{res:>12.3e}{it:>7}")
    errs = [r[2] for r in rows]
    monotone = all(b < a for a, b in zip(errs, errs[1:]))
    print(f"monotone decrease: {'yes' if monotone else 'no'}")
    return 0 if all(r[5] for r in rows) else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="cmalab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "envelope"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
    sp = sub.add_parser("energy")
    sp.add_argument("--config", required=True)
    sp.add_argument("--p", type=float, default=None)
    sp = sub.add_parser("verify")
    sp.add_argument("suite", nargs="?", default=None)
    sp.add_argument("--config", required=True)
    sp = sub.add_parser("study")
    sp.add_argument("--config", required=True)
    sp.add_argument("--resolutions", required=True, help="comma-separated odd resolutions")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = parse_config(args.config)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "energy":
            if args.p is not None and args.p <= 0:
                raise ConfigError("--p must be positive")
            return cmd_energy(cfg, args.p)
        if args.command == "envelope":
            return cmd_envelope(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "study":
            try:
                res = [int(x) for x in args.resolutions.split(",") if x.strip()]
            except ValueError:
                raise ConfigError(f"--resolutions {args.resolutions!r}: expected comma-separated integers") from None
            if not res or any(r < 5 or r % 2 == 0 for r in res):
                raise ConfigError("--resolutions: every resolution must be odd and >= 5")
            return cmd_study(cfg, res)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
