"""``liespec`` command line: experiment drivers writing CSV and JSON.

Exit codes: 0 success, 1 a verification check failed, 2 configuration or
parameter error, 3 numerical failure.
"""

import argparse
import concurrent.futures
import csv
import json
import math
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import config as cfgmod
from . import control, extension, groups, spectral, symbols
from .errors import BandlimitError, LiespecError, NumericalError

CSV_HEADERS = {
    "dual_table": ["label", "dim", "laplace_eig", "bracket"],
    "spectral_constants": ["lambda", "n_modes", "lam_min", "log_inv_sqrt", "envelope_value",
                           "underflow_flag"],
    "doubling": ["lambda", "R", "ratio_max", "trials"],
    "cost_scan": ["T", "C_T", "cond_G", "flag"],
    "interpolation": ["draw_id", "lambda", "lhs", "h1_full", "l2_omega", "kappa_star"],
    "cutoff_check": ["epsilon", "psi0", "d1_at_T", "d2_at_T", "d3_at_T", "d4_at_T",
                     "max_norm_i1", "max_norm_i2", "max_norm_i3", "max_norm_i4"],
    "symbol_check": ["alpha", "beta", "constant", "growth"],
    "power_check": ["z", "n_duals", "max_rel_dev"],
}


class CheckFailure(Exception):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def write_json(path, data):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- shared setup -------------------------------------------------------------

def parse_omega(descriptor):
    """``full`` | ``arc:a,b[;c,d...]`` (torus1) | ``ball:r`` (centred at the identity)."""
    d = descriptor.strip()
    if d == "full":
        return "full", None
    kind, _, rest = d.partition(":")
    try:
        if kind == "arc":
            arcs = [tuple(float(v) for v in part.split(",")) for part in rest.split(";")]
            if any(len(a) != 2 for a in arcs):
                raise ValueError
            return "arc", arcs
        if kind == "ball":
            return "ball", float(rest)
    except ValueError:
        pass
    raise cfgmod.ConfigurationError(f"bad omega.descriptor {descriptor!r}")


class Context:
    def __init__(self, cfg):
        self.cfg = cfg
        self.backend = groups.get_backend(cfg["group"])
        self.omega_kind, self.omega_arg = parse_omega(cfg["omega.descriptor"])
        if self.omega_kind == "arc":
            if self.backend.name != "torus1":
                raise cfgmod.ConfigurationError("arc observation sets need group = torus1")
            bps = sorted({v % 1.0 for a in self.omega_arg for v in a})
        else:
            bps = []
        if self.backend.name == "torus1":
            self.grid = groups.panel_quadrature(self.backend, cfg["resolution"], bps)
        else:
            self.grid = groups.haar_quadrature(self.backend, cfg["resolution"])
        self.omega = self.make_omega(self.grid)
        self.op = symbols.make_operator(cfg["operator.preset"], self.backend, 1.0,
                                        cfg["operator.m"], cfg["operator.c"],
                                        cfg["operator.eta"], cfg["operator.seed"])

    def make_omega(self, grid):
        if self.omega_kind == "full":
            return groups.full_set(grid)
        if self.omega_kind == "arc":
            return groups.arc_set(self.backend, grid, self.omega_arg)
        return groups.geodesic_ball(self.backend, self.backend.identity(), self.omega_arg, grid)

    def subspace(self, lambda_cut, check=True):
        return spectral.build_subspace(self.op, lambda_cut, grid=self.grid if check else None)


def _u0(cfg, n, seed):
    kind = cfg["control.u0"]
    if kind == "random":
        rng = cfgmod.stream(seed, "control")
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    elif kind == "ones":
        u = np.ones(n, dtype=complex)
    elif kind == "lowest":
        u = np.zeros(n, dtype=complex)
        u[0] = 1.0
    elif kind == "zero":
        u = np.zeros(n, dtype=complex)
    else:
        raise cfgmod.ConfigurationError(f"control.u0 must be random|ones|lowest|zero, got {kind!r}")
    nrm = np.linalg.norm(u)
    return u / nrm if nrm > 0 else u


# -- subcommands --------------------------------------------------------------

def cmd_dual_table(cfg, out, seed, threads):
    backend = groups.get_backend(cfg["group"])
    rows = []
    for d in groups.enumerate_dual(backend, cfg["dual.bracket_cut"]):
        label = " ".join(str(v) for v in d.label) if isinstance(d.label, tuple) else repr(d.label)
        rows.append((label, d.dim, d.laplace_eig, d.bracket))
    write_csv(os.path.join(out, "dual_table.csv"), CSV_HEADERS["dual_table"], rows)
    return 0


def _check(name, value, tol, passed=None, **extra):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return dict(name=name, value=value, tolerance=tol, passed=ok, **extra)


def verify_checks(cfg, seed):
    """Run every verification suite; returns the list of check records."""
    checks = []
    ctx = Context(cfg)
    backend, grid = ctx.backend, ctx.grid
    try:
        sub = ctx.subspace(cfg["control.lambda_cut"])
        checks.append(_check("bandlimit", 0.0, 0.0, True))
    except BandlimitError as exc:
        checks.append(_check("bandlimit", 1.0, 0.0, False, message=str(exc)))
        return checks
    duals = sorted({md.dual for md in sub.modes}, key=lambda d: (d.laplace_eig, d.label))

    rng = cfgmod.stream(seed, "parseval")
    coeffs = groups.FourierCoefficients({
        d: rng.standard_normal((d.dim, d.dim)) + 1j * rng.standard_normal((d.dim, d.dim))
        for d in duals})
    table = groups.rep_table(backend, grid, duals)
    f = groups.inverse_fourier(backend, coeffs, grid.nodes)
    back = groups.fourier_transform(backend, grid, f, duals, table)
    rt = max(np.max(np.abs(back[d] - coeffs[d])) / np.max(np.abs(coeffs[d])) for d in duals)
    pv = abs(groups.l2_norm_on_grid(grid, f) ** 2 - coeffs.norm() ** 2) / coeffs.norm() ** 2
    checks.append(_check("parseval_roundtrip", float(rt), 1e-8))
    checks.append(_check("parseval_norm", float(pv), 1e-8))

    worst = 0.0
    for d, R in table.items():
        prod = np.einsum("nij,nkj->nik", R, R.conj())
        worst = max(worst, float(np.max(np.abs(prod - np.eye(d.dim)))))
    checks.append(_check("unitarity", worst, 1e-10))

    # coefficients recovered from grid samples, not from the stored eigenvectors
    samples = sub.evaluate(grid.nodes)
    worst = 0.0
    for j, md in enumerate(sub.modes):
        fh = groups.fourier_transform(backend, grid, samples[:, j], [md.dual], table)[md.dual]
        err = np.max(np.abs(ctx.op.symbol_at(md.dual) @ fh - md.eig * fh)) / max(1.0, md.eig)
        worst = max(worst, float(err))
    checks.append(_check("eigenmode", worst, 1e-10))
    gfull = spectral.gram_on_set(sub, groups.full_set(grid), grid).matrix
    checks.append(_check("gram_identity", float(np.max(np.abs(gfull - np.eye(len(sub))))), 1e-8))

    srng = cfgmod.stream(seed, "sinh")
    spec = extension.CutoffSpec(0.5, cfg["cutoff.T"])
    a = srng.standard_normal(len(sub)) + 1j * srng.standard_normal(len(sub))
    field = extension.sinh_extension(sub, a)
    checks.append(_check("cancellation", extension.check_cancellation(field, spec.T, spec), 1e-10))
    lhs, rhs = extension.check_symmetry(field, spec)
    checks.append(_check("symmetry", abs(lhs - rhs) / abs(rhs), 1e-12))

    worst, psi_ok = 0.0, True
    for row in extension.cutoff_table(cfg["cutoff.epsilons"], cfg["cutoff.T"]):
        worst = max(worst, max(abs(v) for v in row.d_at_T) / max(1.0, row.psi0))
        psi_ok &= 0 < row.psi0 < row.epsilon
    checks.append(_check("cutoff_derivatives", worst, 1e-9))
    checks.append(_check("cutoff_psi0", 0.0, 0.0, psi_ok))

    if ctx.op.positivity_floor > 0:
        eps = min(cfg["contour.epsilon"], ctx.op.positivity_floor ** (2 / ctx.op.order) / 2000)
        cspec = symbols.ContourSpec(eps, cfg["contour.ray_length"], cfg["contour.nodes"])
        worst = 0.0
        for z in cfg["contour.z"]:
            cont = symbols.contour_power_symbol(ctx.op.extended(_dual_cut(duals)), z, cspec)
            for d, mat in cont.items():
                ref = symbols.matrix_power(ctx.op.symbol_at(d), z)
                worst = max(worst, float(np.max(np.abs(mat - ref)) / np.max(np.abs(ref))))
        checks.append(_check("contour_vs_direct", worst, 1e-6))
    else:
        checks.append(_check("contour_vs_direct", 0.0, 1e-6, True, note="skipped: zero floor"))

    prob = control.ControlProblem(sub, ctx.omega, grid, cfg["time.alpha"], cfg["time.T"],
                                  _u0(cfg, len(sub), seed))
    res = control.hum_control(prob, tol=cfg["control.tol"])
    quad = control.control_cost_quadrature(prob, res)
    hum = abs(res.cost - quad) / max(res.cost, 1e-300) if res.cost > 0 else quad
    checks.append(_check("hum_identity", float(hum), 1e-8))
    checks.append(_check("terminal_residual", res.terminal_residual, cfg["control.tol"]))
    return checks


def _dual_cut(duals):
    return max(d.bracket for d in duals) * (1 + 1e-12)


def cmd_verify(cfg, out, seed, threads):
    try:
        checks = verify_checks(cfg, seed)
    except NumericalError as exc:
        checks = [_check("numerical", 1.0, 0.0, False, message=f"{type(exc).__name__}: {exc}")]
    failed = [c["name"] for c in checks if not c["passed"]]
    write_json(os.path.join(out, "verify.json"),
               {"passed": not failed, "failed": failed, "checks": checks})
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_spectral_constant(cfg, out, seed, threads):
    ctx = Context(cfg)
    rows = spectral.spectral_constant_sweep(ctx.op, ctx.omega, ctx.grid, cfg["lambda_grid"])
    fit = spectral.fit_sweep(rows)
    csv_rows = [(r.lam, r.n_modes, r.lam_min, r.log_inv_sqrt, float(fit.envelope(r.lam)),
                 r.underflow) for r in rows]
    write_csv(os.path.join(out, "spectral_constants.csv"), CSV_HEADERS["spectral_constants"],
              csv_rows)
    write_json(os.path.join(out, "spectral_constants.json"),
               {"C1": fit.C1, "C2": fit.C2, "active_rows": list(fit.active),
                "n_valid": sum(not r.underflow for r in rows),
                "omega_descriptor": cfg["omega.descriptor"]})
    return 0


def cmd_doubling(cfg, out, seed, threads):
    ctx = Context(cfg)
    center = np.array(cfg["doubling.center"]) if cfg["doubling.center"] else ctx.backend.identity()
    rows, fit = spectral.doubling_sweep(ctx.op, center, cfg["doubling.R"], ctx.grid,
                                        cfg["lambda_grid"], cfg["doubling.trials"],
                                        cfg["doubling.steps"], cfgmod.stream(seed, "doubling"))
    write_csv(os.path.join(out, "doubling.csv"), CSV_HEADERS["doubling"], rows)
    write_json(os.path.join(out, "doubling.json"), {"C1": fit.C1, "C2": fit.C2})
    return 0


def _problem(cfg, ctx, seed, T=None):
    sub = ctx.subspace(cfg["control.lambda_cut"])
    return control.ControlProblem(sub, ctx.omega, ctx.grid, cfg["time.alpha"],
                                  cfg["time.T"] if T is None else T, _u0(cfg, len(sub), seed))


def cmd_control(cfg, out, seed, threads):
    ctx = Context(cfg)
    prob = _problem(cfg, ctx, seed)
    res = control.hum_control(prob, tol=cfg["control.tol"],
                              regularization=cfg["control.regularization"],
                              time_samples=cfg["control.samples"])
    n = len(prob.mu)
    header = ["t"] + [f"g{j}_{part}" for j in range(n) for part in ("re", "im")]
    rows = []
    for t, c in zip(res.times, res.control):
        rows.append([t] + [v for z in c for v in (z.real, z.imag)])
    write_csv(os.path.join(out, "control_run.csv"), header, rows)
    lr = control.lr_scheme(prob, lambda0=cfg["control.lambda0"], tol=cfg["control.tol"])
    write_json(os.path.join(out, "control.json"), {
        "cost": res.cost, "terminal_residual": res.terminal_residual,
        "gramian_condition": res.condition, "regularized": res.regularized,
        "n_modes": n, "alpha": prob.alpha, "m": prob.m, "T": prob.T,
        "subcritical": prob.subcritical, "omega_descriptor": cfg["omega.descriptor"],
        "lr": {"cost": lr.cost, "terminal_residual": lr.terminal_residual,
               "complete": lr.complete, "stage_costs": lr.per_stage_costs,
               "uncontrolled_residual": lr.uncontrolled_residual}})
    return 0


def cmd_cost_scan(cfg, out, seed, threads):
    ctx = Context(cfg)
    prob = _problem(cfg, ctx, seed)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        fit = control.cost_scan(prob, cfg["time.T_grid"], map_fn=pool.map)
    rows = [(T, c, k, f or "ok") for T, c, k, f in zip(fit.T_grid, fit.costs, fit.conditions,
                                                       fit.flags)]
    write_csv(os.path.join(out, "cost_scan.csv"), CSV_HEADERS["cost_scan"], rows)
    write_json(os.path.join(out, "cost_scan.json"), {
        "beta_hat": fit.beta_hat, "r2": fit.r_squared, "C1": fit.C1, "C2": fit.C2,
        "alpha": fit.alpha, "m": fit.m, "omega_descriptor": cfg["omega.descriptor"],
        "subcritical": prob.subcritical})
    return 0


def cmd_cutoff(cfg, out, seed, threads):
    rows = [(r.epsilon, r.psi0, *r.d_at_T, *r.max_norm)
            for r in extension.cutoff_table(cfg["cutoff.epsilons"], cfg["cutoff.T"])]
    write_csv(os.path.join(out, "cutoff_check.csv"), CSV_HEADERS["cutoff_check"], rows)
    ctx = Context(cfg)
    sub = ctx.subspace(cfg["cutoff.lambda"])
    gram = spectral.gram_on_set(sub, ctx.omega, ctx.grid)
    rng = cfgmod.stream(seed, "sinh")
    irows = []
    for k in range(cfg["cutoff.draws"]):
        a = rng.standard_normal(len(sub)) + 1j * rng.standard_normal(len(sub))
        r = extension.interpolation_check(sub, a / np.linalg.norm(a), ctx.omega, ctx.grid,
                                          cfg["cutoff.T"], cfg["cutoff.alpha"], gram=gram)
        irows.append((k, cfg["cutoff.lambda"], r.lhs, r.h1_full, r.l2_omega, r.kappa_star))
    write_csv(os.path.join(out, "interpolation.csv"), CSV_HEADERS["interpolation"], irows)
    return 0


def symbol_preset(name, m):
    if name == "bracket_power":
        return lambda x, k: (1.0 + k * k) ** (m / 2)
    if name == "modulated":
        return lambda x, k: (2.0 + np.sin(2 * np.pi * x)) * (1.0 + k * k) ** (m / 2)
    if name == "sqrt_phase":
        return lambda x, k: (1.0 + k * k) ** (m / 2) * np.exp(1j * np.sqrt(np.abs(k)))
    raise cfgmod.ConfigurationError(
        f"symbol.name must be bracket_power|modulated|sqrt_phase, got {name!r}")


def cmd_check_symbol(cfg, out, seed, threads):
    a = symbol_preset(cfg["symbol.name"], cfg["symbol.m"])
    rep = symbols.check_symbol_class(a, cfg["symbol.m"], cfg["symbol.rho"], cfg["symbol.delta"],
                                     K=cfg["symbol.K"])
    rows = [(al, be, rep.constants[(al, be)], rep.growth[(al, be)])
            for (al, be) in sorted(rep.constants)]
    write_csv(os.path.join(out, "symbol_check.csv"), CSV_HEADERS["symbol_check"], rows)
    write_json(os.path.join(out, "symbol_check.json"),
               {"divergent": rep.divergent, "symbol": cfg["symbol.name"]})
    return 1 if rep.divergent else 0


def cmd_power_check(cfg, out, seed, threads):
    backend = groups.get_backend(cfg["group"])
    op = symbols.make_operator(cfg["operator.preset"], backend, cfg["contour.bracket_cut"],
                               cfg["operator.m"], cfg["operator.c"], cfg["operator.eta"],
                               cfg["operator.seed"])
    spec = symbols.ContourSpec(cfg["contour.epsilon"], cfg["contour.ray_length"],
                               cfg["contour.nodes"])
    rows = []
    for z in cfg["contour.z"]:
        cont = symbols.contour_power_symbol(op, z, spec)
        direct = symbols.direct_power(op, z).symbol
        dev = max(float(np.max(np.abs(cont[d] - direct[d])) / np.max(np.abs(direct[d])))
                  for d in op.symbol)
        rows.append((z, len(op.symbol), dev))
    write_csv(os.path.join(out, "power_check.csv"), CSV_HEADERS["power_check"], rows)
    return 0


COMMANDS = {
    "dual-table": cmd_dual_table,
    "verify": cmd_verify,
    "spectral-constant": cmd_spectral_constant,
    "doubling": cmd_doubling,
    "control": cmd_control,
    "cost-scan": cmd_cost_scan,
    "cutoff": cmd_cutoff,
    "check-symbol": cmd_check_symbol,
    "power-check": cmd_power_check,
}


def build_parser():
    p = argparse.ArgumentParser(prog="liespec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to key = value config file")
        sp.add_argument("--out", default=None, help="output directory (default ./out)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config)
        seed = cfg["seed"] if args.seed is None else args.seed
        if not 0 <= seed < 2**64:
            raise cfgmod.ConfigurationError("seed must be an unsigned 64-bit integer")
        out = args.out or cfg["output.dir"] or "out"
        os.makedirs(out, exist_ok=True)
        # BLAS stays single-threaded so results do not depend on --threads
        with threadpool_limits(limits=1):
            return COMMANDS[args.command](cfg, out, seed, args.threads)
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except LiespecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
