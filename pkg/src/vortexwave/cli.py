"""Command-line entry point.

Configs are flat ``key = value`` files (an optional ``[section]`` header is
ignored); values are parsed as JSON when possible, so lists and numbers work
naturally::

    s = 0.5
    kappa = 1.0
    positions = [[1, 0], [-1, 0]]

Every value may also be given as ``--param key=value``. JSON summaries go to
stdout, tables to ``--out``. Floats are printed with 17 significant digits.

Exit codes: 0 ok, 2 bad input, 3 singular configuration, 4 no convergence.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys

import numpy as np

from . import _accel
from .errors import ConvergenceError, DomainError, SingularityError

log = logging.getLogger("vortexwave")

EXIT_OK, EXIT_DOMAIN, EXIT_SINGULAR, EXIT_CONVERGENCE = 0, 2, 3, 4


def fmt(x):
    return f"{float(x):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # repr of a float round-trips; 17g keeps the text stable across platforms
        return json.loads(fmt(x)) if math.isfinite(x) else None
    return obj


def emit(summary):
    json.dump(_jsonable(summary), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip()


def load_config(path=None, overrides=()):
    cfg = {}
    if path:
        if not os.path.exists(path):
            raise DomainError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text)
        except configparser.Error as exc:
            raise DomainError(f"malformed config: {exc}") from exc
        for section in parser.sections():
            for key, val in parser.items(section):
                cfg[key] = _parse_value(val)
    for item in overrides:
        if "=" not in item:
            raise DomainError(f"--param expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        cfg[key.strip()] = _parse_value(val)
    return cfg


def _get(cfg, key, default=None, kind=float):
    if key not in cfg:
        if default is None:
            raise DomainError(f"missing config key {key!r}")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError) as exc:
        raise DomainError(f"bad value for {key!r}: {cfg[key]!r}") from exc


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _outdir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


# -- commands -------------------------------------------------------------------


def cmd_constants(args, cfg):
    from .equilibria import pair_speed, polygon_omega
    from .frac_kernel import make_constants

    s = _get(cfg, "s")
    const = make_constants(s)
    kappa = _get(cfg, "kappa", 1.0)
    d = _get(cfg, "d", 1.0)
    rho = _get(cfg, "rho", 1.0)
    k = _get(cfg, "k", 1, int)
    emit(
        {
            "s": s,
            "c2s": const.c2s,
            "pair_U": pair_speed(const, kappa, d),
            "polygon_omega": polygon_omega(const, kappa, rho, k),
            "kappa": kappa,
            "d": d,
            "rho": rho,
            "k": k,
        }
    )


def _profile_from_cfg(cfg):
    from .profile import ProfileGrid, ProfileParams, load_profile, solve_profile

    if "profile_file" in cfg:
        return load_profile(cfg["profile_file"])
    params = ProfileParams(_get(cfg, "s"), _get(cfg, "gamma"))
    grid = ProfileGrid(
        n_cheb=_get(cfg, "n_cheb", 128, int),
        n_uniform=_get(cfg, "n_uniform", 801, int),
    )
    return solve_profile(params, grid, tol=_get(cfg, "tol", 1e-12))


def cmd_profile(args, cfg):
    from .profile import save_profile, self_consistency_residual, tail_ratio

    prof = _profile_from_cfg(cfg)
    out = _outdir(args)
    path = os.path.join(out, cfg.get("output", "profile.txt"))
    save_profile(prof, path)
    lo, hi = tail_ratio(prof)
    summary = {
        "s": prof.s,
        "gamma": prof.gamma,
        "M_gamma": prof.M_gamma,
        "R1": prof.R1,
        "W0": prof.W0,
        "r_N": prof.r_N,
        "iterations": prof.iterations,
        "tail_ratio": [lo, hi],
        "profile_file": path,
    }
    if cfg.get("check", False):
        summary["self_consistency"] = self_consistency_residual(prof)
    emit(summary)


def _system_from_cfg(cfg):
    from .equilibria import Frame, VortexSystem, make_polygon, make_traveling_pair
    from .frac_kernel import make_constants

    const = make_constants(_get(cfg, "s"))
    preset = cfg.get("preset")
    if preset == "pair":
        return make_traveling_pair(const, _get(cfg, "kappa", 1.0), _get(cfg, "d", 1.0))
    if preset == "polygon":
        return make_polygon(const, _get(cfg, "kappa", 1.0), _get(cfg, "rho", 1.0), _get(cfg, "k", 2, int))
    if preset is not None:
        raise DomainError(f"unknown preset {preset!r}")
    if "positions" not in cfg or "strengths" not in cfg:
        raise DomainError("give a preset or both positions and strengths")
    frame = Frame(_get(cfg, "U", 0.0), _get(cfg, "omega", 0.0))
    pos = np.asarray(cfg["positions"], dtype=float)
    if pos.size == 0:
        raise DomainError("empty configuration")
    return VortexSystem(const, pos, cfg["strengths"], frame)


def _report(sys_, conv):
    from .equilibria import kr_grad, nondegenerate, velocity_residual

    return {
        "positions": sys_.positions,
        "strengths": sys_.strengths,
        "frame": {"U": sys_.frame.U, "omega": sys_.frame.omega},
        "residual_inf": float(np.max(np.abs(velocity_residual(sys_)))),
        "kr_grad_norm": float(np.max(np.abs(kr_grad(sys_, conv)))),
        "nondegenerate": nondegenerate(sys_, conv),
        "convention": conv.value,
    }


def cmd_equilibria(args, cfg):
    from .equilibria import KrConvention, find_equilibrium

    conv = KrConvention(cfg.get("convention", "weighted"))
    sys_ = _system_from_cfg(cfg)
    if args.action in ("make", "verify"):
        emit(_report(sys_, conv))
        return
    jitter = _get(cfg, "jitter", 0.0)
    if jitter:
        rng = np.random.default_rng(_get(cfg, "seed", 0, int))
        sys_ = sys_.with_positions(sys_.positions * (1.0 + jitter * rng.standard_normal(sys_.positions.shape)))
    free = cfg.get("free")
    if free is None and cfg.get("pin_first", True):
        # fixing the first vortex's y-coordinate removes the rotation mode
        free = np.ones(2 * sys_.p, dtype=bool)
        free[1] = False
    res = find_equilibrium(sys_, free=free, conv=conv)
    rep = _report(res.system, conv)
    rep.update(converged=res.converged, iterations=res.iterations, history=res.history, cond=res.cond)
    emit(rep)


def _ansatz_cfg(cfg, prof):
    from .ansatz import AnsatzConfig, pair_config
    from .equilibria import Frame, pair_speed
    from .profile import mu_from_kappa

    eps = _get(cfg, "eps", 1e-2)
    preset = cfg.get("preset", "pair")
    if preset == "pair":
        kappa = _get(cfg, "kappa", 1.0)
        d = _get(cfg, "d", 1.0)
        U = cfg.get("U")
        if U is None and "U_from_d" in cfg:
            U = pair_speed(prof.const, kappa, _get(cfg, "U_from_d"))
        return pair_config(prof, kappa, d, eps, U=U, delta=cfg.get("delta"))
    if preset == "isolated":
        kappa = _get(cfg, "kappa", 1.0)
        mu = mu_from_kappa(prof.M_gamma, prof.params, kappa)
        return AnsatzConfig(prof.const, prof.gamma, eps, [[0.0, 0.0]], [mu], delta=_get(cfg, "delta", 0.5))
    if preset == "custom":
        mus = [mu_from_kappa(prof.M_gamma, prof.params, k) for k in cfg["wave_kappas"]]
        return AnsatzConfig(
            prof.const,
            prof.gamma,
            eps,
            cfg["wave_centers"],
            mus,
            cfg.get("ext_positions", np.zeros((0, 2))),
            cfg.get("ext_kappas", []),
            Frame(_get(cfg, "U", 0.0), _get(cfg, "omega", 0.0)),
            _get(cfg, "delta", 0.5),
        )
    raise DomainError(f"unknown ansatz preset {preset!r}")


def cmd_ansatz(args, cfg):
    from scipy.optimize import brentq

    from .ansatz import (
        compute_lambdas,
        pair_bracket,
        pair_bracket_root,
        reduced_normalization,
        reduced_residual,
        residual_scan,
    )
    from .frac_kernel import make_constants

    if args.action == "bracket":
        const = make_constants(_get(cfg, "s"))
        kappa, U = _get(cfg, "kappa", 1.0), _get(cfg, "U")
        d = _get(cfg, "d", 1.0)
        emit({"bracket": pair_bracket(const, kappa, d, U), "root_d": pair_bracket_root(const, kappa, U)})
        return

    prof = _profile_from_cfg(cfg)
    out = _outdir(args)
    if args.action == "lambdas":
        rows = []
        for eps in cfg.get("eps_list", [_get(cfg, "eps", 1e-2)]):
            cfg_a = _ansatz_cfg({**cfg, "eps": eps}, prof)
            lam = compute_lambdas(cfg_a, prof)
            for j, v in enumerate(lam.values):
                base = cfg_a.mus[j] ** (-cfg_a.a)
                rows.append((float(eps), j, float(v), base, (v - base) / eps ** (2.0 - 2.0 * cfg_a.s)))
        write_csv(os.path.join(out, "lambdas.csv"), ["epsilon", "center_index", "lambda", "mu_power", "scaled_gap"], rows)
        emit({"rows": [list(r) for r in rows]})
        return
    if args.action == "scan":
        eps_list = cfg.get("eps_list", [1e-1, 10**-1.5, 1e-2, 10**-2.5, 1e-3])
        cfg_a = _ansatz_cfg({**cfg, "eps": eps_list[0]}, prof)
        res = residual_scan(cfg_a, prof, eps_list, n=_get(cfg, "samples", 201, int))
        write_csv(
            os.path.join(out, "residual_scan.csv"),
            ["epsilon", "sup_residual", "slope_partial"],
            zip(res.eps.astype(float), res.sup_residual.astype(float), res.slope_partial.astype(float)),
        )
        emit({"slope": res.slope, "exact": res.exact, "expected": 3.0 - 2.0 * prof.s, "sup_residual": res.sup_residual})
        return
    if args.action == "reduced":
        cfg_a = _ansatz_cfg(cfg, prof)
        lam = compute_lambdas(cfg_a, prof)
        n = _get(cfg, "quad_n", 256, int)
        F = reduced_residual(cfg_a, prof, lam, n, n)
        norm = reduced_normalization(cfg_a, prof)
        rows = [(j, i, float(F[j, i]), float(F[j, i] / norm[j])) for j in range(cfg_a.k) for i in range(2)]
        write_csv(os.path.join(out, "reduced_residual.csv"), ["center_index", "component", "value", "normalized_value"], rows)
        summary = {"F": F, "normalized": F / norm[:, None]}
        if cfg.get("preset", "pair") == "pair":
            kappa = _get(cfg, "kappa", 1.0)
            summary["bracket"] = pair_bracket(prof.const, kappa, cfg_a.centers[0, 0], cfg_a.frame.U)
            if cfg.get("find_root", False):

                def g(d):
                    c = _ansatz_cfg({**cfg, "d": d, "U": cfg_a.frame.U}, prof)
                    return reduced_residual(c, prof, compute_lambdas(c, prof), n, n)[0, 0]

                d0 = pair_bracket_root(prof.const, kappa, cfg_a.frame.U)
                summary["root_d"] = brentq(g, 0.8 * d0, 1.25 * d0, xtol=1e-8)
                summary["root_d_point"] = d0
        emit(summary)
        return
    raise DomainError(f"unknown ansatz action {args.action!r}")


def _write_traj(out, traj):
    rows = []
    for st in traj.states:
        for i, (p, k) in enumerate(zip(st.pv_pos, st.pv_kappa)):
            rows.append((st.t, i, "point", p[0], p[1], k))
        for i, (p, w) in enumerate(zip(st.blob_pos, st.blob_w)):
            rows.append((st.t, i, "blob", p[0], p[1], w))
    write_csv(os.path.join(out, "trajectory.csv"), ["t", "id", "kind", "x", "y", "strength"], rows)
    write_csv(
        os.path.join(out, "invariants.csv"),
        ["t", "H", "Px", "Py", "I"],
        [(float(t), inv.H, float(inv.P[0]), float(inv.P[1]), inv.I) for t, inv in zip(traj.times, traj.invariants)],
    )


def cmd_simulate(args, cfg):
    from .ansatz import compute_lambdas, pair_config
    from .dynamics import (
        IntegratorConfig,
        SimState,
        blob_centroid,
        radius_of_gyration,
        rigid_motion_error,
        simulate,
    )

    out = _outdir(args)
    sample_every = _get(cfg, "sample_every", 10, int)
    if args.action == "points":
        sys_ = _system_from_cfg(cfg)
        state = SimState.from_system(sys_)
        icfg = IntegratorConfig(_get(cfg, "dt", 1e-3), _get(cfg, "t_end", 1.0))
        traj = simulate(state, icfg, sample_every)
        _write_traj(out, traj)
        dH, dP, dI = traj.max_drift
        summary = {"steps": int(round(icfg.t_end / icfg.dt)), "drift_H": dH, "drift_P": dP, "drift_I": dI}
        if cfg.get("preset") in ("pair", "polygon"):
            summary["rigid_error"] = rigid_motion_error(traj, sys_.frame.U, sys_.frame.omega)
        emit(summary)
        return
    if args.action == "vortexwave":
        from .dynamics import discretize_theta

        prof = _profile_from_cfg(cfg)
        kappa, d = _get(cfg, "kappa", 1.0), _get(cfg, "d", 1.0)
        acfg = pair_config(prof, kappa, d, _get(cfg, "eps", 1e-2), delta=cfg.get("delta"))
        state = discretize_theta(acfg, prof, compute_lambdas(acfg, prof), _get(cfg, "n_per_axis", 56, int))
        U = acfg.frame.U
        t_end = _get(cfg, "t_end", _get(cfg, "transit", 0.5) / abs(U))
        icfg = IntegratorConfig(_get(cfg, "dt", 0.02), t_end)
        c0, g0 = blob_centroid(state), radius_of_gyration(state)
        traj = simulate(state, icfg, sample_every)
        _write_traj(out, traj)
        c1, g1 = blob_centroid(traj.final), radius_of_gyration(traj.final)
        speed = (c1 - c0) / t_end
        emit(
            {
                "n_blobs": state.n_blobs,
                "total_weight": float(state.blob_w.sum()),
                "U": U,
                "t_end": t_end,
                "centroid_velocity": speed,
                "speed_ratio": float(speed[1] / U),
                "gyration_growth": g1 / g0 - 1.0,
                "drift": traj.max_drift,
            }
        )
        return
    raise DomainError(f"unknown simulate action {args.action!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="vortexwave", description=__doc__.split("\n")[0])
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", help="output directory for tables")
    p.add_argument("--threads", type=int, default=0, help="cap on worker threads")
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="override a config value")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", help="kernel constant and closed-form speeds")
    sub.add_parser("profile", help="solve the radial ground state")
    for name, actions in (
        ("equilibria", ("make", "verify", "find")),
        ("ansatz", ("lambdas", "scan", "reduced", "bracket")),
        ("simulate", ("points", "vortexwave")),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("action", choices=actions)
    return p


_HANDLERS = {
    "constants": cmd_constants,
    "profile": cmd_profile,
    "equilibria": cmd_equilibria,
    "ansatz": cmd_ansatz,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    _accel.set_threads(args.threads)
    try:
        cfg = load_config(args.config, args.param)
        _HANDLERS[args.command](args, cfg)
    except (DomainError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SingularityError as exc:
        print(f"singular: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
