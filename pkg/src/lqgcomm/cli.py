"""Command-line surface: capacity, lowerbound, simulate, verify-translation, sweep.

Every run emits exactly one JSON document (stdout, and --out when given)
whose bytes depend only on the scenario and seeds; wall time goes to the
stderr log, never into the document. The exit code is 0 iff every check
the command ran passed its tolerance; failures are listed in the
document under "failures".
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .capacity import capacity_noiseless, capacity_scalar, channel_eigen, gamma_hat, water_fill
from .errors import LqgcommError
from .estimation import build_extended, controller_filter
from .lower_bound import inner_solve, outer_solve
from .riccati import solve_dare_control
from .scenario import Scenario, matrix_to_obj, parse_scenario
from .simulate import analytic_cost, empirical_cost, empirical_rate, simulate
from .systems import make_policy
from .translation import TranslationPipeline, tau_ground_truth, translate_stream

log = logging.getLogger("lqgcomm")

LN2 = math.log(2.0)


def _configure_logging():
    level = os.environ.get("LQGCOMM_LOG", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _nats_to_bits(x):
    return x / LN2


def _resolve_policy(sc: Scenario, riccati):
    """Scenario overrides, else the LQG gain and a budget-shaped signal."""
    k_bar = sc.k_bar if sc.k_bar is not None else riccati.gain
    if sc.phi is not None:
        return make_policy(k_bar, sc.phi)
    if sc.observation is None:
        wf = capacity_noiseless(sc.system, riccati, sc.budget)
        if wf.infinite:
            raise LqgcommError(
                "scenario has infinite capacity; give an explicit policy.phi")
        return make_policy(k_bar, wf.phi)
    cf = controller_filter(sc.system, sc.observation, riccati)
    inner = inner_solve(sc.system, sc.observation, cf, k_bar, sc.budget,
                        riccati=riccati)
    return make_policy(k_bar, inner.phi)


def _capacity_payload(sc: Scenario):
    riccati = solve_dare_control(sc.system)
    eig = channel_eigen(sc.system)
    ghat = gamma_hat(sc.system, riccati, eig)
    wf = water_fill(eig, ghat, sc.budget)
    payload = {
        "budget": sc.budget,
        "infinite": wf.infinite,
        "capacity_nats": None if wf.infinite else wf.capacity,
        "capacity_bits": None if wf.infinite else _nats_to_bits(wf.capacity),
        "alpha": wf.alpha,
        "phi": None if wf.phi is None else matrix_to_obj(wf.phi),
        "phi_hat_diag": [None if math.isinf(p) else float(p)
                         for p in wf.phi_hat_diag],
        "gamma_hat_diag": [float(x) for x in wf.gamma_hat_diag],
        "eigenvalues": [float(x) for x in eig.lam],
        "rank": eig.r,
        "j_star": riccati.j_star,
    }
    if sc.system.is_scalar:
        scalar = capacity_scalar(sc.system, riccati, sc.budget)
        payload["scalar_closed_form"] = {"capacity_nats": scalar.capacity,
                                         "phi": scalar.phi}
    return payload, []


def _sweep_rows(sc: Scenario, spec: str):
    try:
        lo_s, hi_s, n_s = spec.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError as exc:
        raise LqgcommError(f"bad sweep range '{spec}', expected a:b:n") from exc
    if n < 2 or hi < lo:
        raise LqgcommError(f"bad sweep range '{spec}'")
    riccati = solve_dare_control(sc.system)
    eig = channel_eigen(sc.system)
    ghat = gamma_hat(sc.system, riccati, eig)
    rows = []
    for v in np.linspace(lo, hi, n):
        wf = water_fill(eig, ghat, float(v))
        rows.append([float(v), wf.capacity, _nats_to_bits(wf.capacity), wf.alpha]
                    + [float(p) for p in wf.phi_hat_diag])
    return rows, sc.system.d2


def _write_sweep_csv(rows, d2, out_path):
    header = ["v", "capacity_nats", "capacity_bits", "alpha"]
    header += [f"phi_{i}" for i in range(d2)]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    text = "\n".join(lines) + "\n"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return text


def _lowerbound_payload(sc: Scenario, seed: int):
    if sc.observation is None:
        raise LqgcommError("lowerbound needs an observation block in the scenario")
    riccati = solve_dare_control(sc.system)
    cf = controller_filter(sc.system, sc.observation, riccati)
    res = outer_solve(sc.system, sc.observation, cf, sc.budget, riccati=riccati,
                      seed=seed)
    payload = {
        "budget": sc.budget,
        "value_nats": res.value,
        "value_bits": _nats_to_bits(res.value),
        "seed_value_nats": res.seed_value,
        "k_bar": matrix_to_obj(res.k_bar_opt),
        "phi": matrix_to_obj(res.phi_opt),
        "multistart_spread": res.multistart_spread,
        "inner_iterations": res.inner_iterations,
        "outer_evaluations": res.outer_evaluations,
        "j_star": riccati.j_star,
        "j_star_star": cf.j_star_star,
    }
    return payload, []


def _analytic_rate(sc: Scenario, policy, ext):
    """Steady-state information rate of the policy being simulated."""
    if sc.observation is None:
        sys = sc.system
        noisy_out = sys.b @ policy.phi @ sys.b.T + sys.psi_w
        sign, ld = np.linalg.slogdet(noisy_out)
        sign_w, ld_w = np.linalg.slogdet(sys.psi_w)
        return 0.5 * (ld - ld_w)
    d = ext.d_rho
    psi_v = sc.observation.psi_v
    sign, ld = np.linalg.slogdet(d @ ext.sigma_rho @ d.T + psi_v)
    sign_p, ld_p = np.linalg.slogdet(d @ ext.pi @ d.T + psi_v)
    return 0.5 * (ld - ld_p)


def _simulate_payload(sc: Scenario, seeds, burn_in, with_rate):
    riccati = solve_dare_control(sc.system)
    policy = _resolve_policy(sc, riccati)
    want = analytic_cost(sc.system, policy, sc.observation, riccati)
    tol = sc.tolerances.get("cost_rel", 0.01)
    ext = None
    if with_rate and sc.observation is not None:
        cf = controller_filter(sc.system, sc.observation, riccati)
        ext = build_extended(sc.system, sc.observation, cf, policy)
    runs = []
    pooled = []
    rates = []
    for seed in seeds:
        traj = simulate(sc.system, policy, sc.horizon, seed, obs=sc.observation,
                        burn_in=burn_in, scenario=sc.name)
        est = empirical_cost(traj, sc.system)
        runs.append({"seed": seed, "j_hat": est.value, "stderr": est.stderr,
                     "n_used": est.n_used})
        pooled.append(est.value)
        if with_rate:
            rate = empirical_rate(traj, sc.system, policy, ext=ext)
            rates.append({"seed": seed, "rate_hat_nats": rate.value,
                          "stderr": rate.stderr})
    j_hat = float(np.mean(pooled))
    rel_err = abs(j_hat - want) / max(abs(want), 1e-300)
    failures = []
    if rel_err > tol:
        failures.append({"check": "cost_vs_analytic", "value": j_hat,
                         "expected": want, "rel_error": rel_err, "tolerance": tol})
    payload = {
        "policy": {"k_bar": matrix_to_obj(policy.k_bar),
                   "phi": matrix_to_obj(policy.phi)},
        "horizon": sc.horizon,
        "burn_in": burn_in,
        "runs": runs,
        "j_hat_pooled": j_hat,
        "analytic_cost": want,
        "rel_error": rel_err,
        "tolerance": tol,
    }
    if with_rate:
        analytic = _analytic_rate(sc, policy, ext)
        pooled_rate = float(np.mean([r["rate_hat_nats"] for r in rates]))
        payload["rates"] = rates
        payload["analytic_rate_nats"] = analytic
        payload["rate_hat_pooled"] = pooled_rate
        rate_tol = sc.tolerances.get("rate_rel")
        if rate_tol is not None:
            rate_err = abs(pooled_rate - analytic) / max(abs(analytic), 1e-300)
            payload["rate_rel_error"] = rate_err
            if rate_err > rate_tol:
                failures.append({"check": "rate_vs_analytic", "value": pooled_rate,
                                 "expected": analytic, "rel_error": rate_err,
                                 "tolerance": rate_tol})
    return payload, failures


def _verify_translation_payload(sc: Scenario, seeds, burn_in):
    if sc.observation is None:
        raise LqgcommError("verify-translation needs an observation block")
    riccati = solve_dare_control(sc.system)
    policy = _resolve_policy(sc, riccati)
    cf = controller_filter(sc.system, sc.observation, riccati)
    ext = build_extended(sc.system, sc.observation, cf, policy)
    tol = sc.tolerances.get("translation", 1e-8)
    d_r_b = sc.observation.d_r @ sc.system.b
    table = []
    failures = []
    for seed in seeds:
        traj = simulate(sc.system, policy, sc.horizon, seed, obs=sc.observation,
                        burn_in=burn_in, scenario=sc.name)
        pipeline = TranslationPipeline(ext)
        ybar = translate_stream(pipeline, traj.z)
        e = traj.x - traj.xcheck
        rho0 = np.concatenate([traj.x[0], e[0]])
        tau = tau_ground_truth(ext, rho0, traj.s, traj.w, traj.q, traj.v)
        beta = (traj.w @ sc.observation.d_r.T
                + tau[:-1] @ (ext.d_rho @ ext.a_rho).T + traj.v[1:])
        resid_out = float(np.max(np.abs(
            (ybar - traj.s @ d_r_b.T - beta)[burn_in:])))
        yhat = ybar @ (pipeline.iaq @ ext.l_rho).T
        j_c = np.eye(sc.system.d1) - cf.l_c @ sc.observation.d_c
        stacked = np.hstack([traj.s @ sc.system.b.T + traj.w,
                             traj.w @ j_c.T - traj.q[1:] @ cf.l_c.T])
        inner = ((stacked + tau[:-1] @ ext.a_rho.T) @ ext.d_rho.T + traj.v[1:])
        resid_pre = float(np.max(np.abs(
            (yhat - inner @ (pipeline.iaq @ ext.l_rho).T)[burn_in:])))
        rho = np.zeros(ext.a_rho.shape[0])
        worst = 0.0
        for t in range(traj.n):
            pred = ext.a_rho @ rho
            z_next = ext.d_rho @ pred + ybar[t]
            worst = max(worst, float(np.max(np.abs(z_next - traj.z[t + 1]))))
            rho = pred + ext.l_rho @ (traj.z[t + 1] - ext.d_rho @ pred)
        entry = {"seed": seed, "output_identity": resid_out,
                 "prefilter_identity": resid_pre, "roundtrip": worst}
        table.append(entry)
        for check, value in (("output_identity", resid_out),
                             ("prefilter_identity", resid_pre),
                             ("roundtrip", worst)):
            if value > tol:
                failures.append({"check": check, "seed": seed, "value": value,
                                 "tolerance": tol})
    payload = {
        "policy": {"k_bar": matrix_to_obj(policy.k_bar),
                   "phi": matrix_to_obj(policy.phi)},
        "horizon": sc.horizon,
        "burn_in": burn_in,
        "tolerance": tol,
        "residuals": table,
        "max_residual": max((max(r["output_identity"], r["prefilter_identity"],
                                 r["roundtrip"]) for r in table), default=0.0),
    }
    return payload, failures


def _emit(record: dict, out_path):
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lqgcomm",
        description="Implicit-communication capacity of LQG control loops")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_seed=True):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="also write the result here")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the scenario's seed list")
        p.add_argument("--burn-in", type=int, default=None,
                       help="override the scenario's burn-in")
        p.add_argument("--bits", action="store_true",
                       help="report the headline number in bits on stderr")

    p_cap = sub.add_parser("capacity", help="noiseless-observation capacity")
    common(p_cap, needs_seed=False)
    p_cap.add_argument("--sweep", default=None, metavar="a:b:n",
                       help="emit a CSV capacity curve over budgets")

    p_lb = sub.add_parser("lowerbound", help="noisy-observation achievable rate")
    common(p_lb)

    p_sim = sub.add_parser("simulate", help="Monte Carlo cost check")
    common(p_sim)
    p_sim.add_argument("--rate", action="store_true",
                       help="also estimate the information rate per seed")

    p_ver = sub.add_parser("verify-translation",
                           help="check the channel translation identities")
    common(p_ver)

    p_sw = sub.add_parser("sweep", help="capacity curve CSV over budgets")
    common(p_sw, needs_seed=False)
    p_sw.add_argument("--sweep", default="0:5:51", metavar="a:b:n")
    return parser


def run(args) -> int:
    sc = parse_scenario(args.scenario)
    burn_in = args.burn_in if getattr(args, "burn_in", None) is not None else sc.burn_in
    seeds = ([args.seed] if getattr(args, "seed", None) is not None
             else list(sc.seeds))
    started = time.perf_counter()

    if args.command in ("capacity", "sweep") and getattr(args, "sweep", None):
        rows, d2 = _sweep_rows(sc, args.sweep)
        out = args.out or f"{sc.name}-capacity-sweep.csv"
        _write_sweep_csv(rows, d2, out)
        log.info("wrote %d sweep rows to %s in %.3fs", len(rows), out,
                 time.perf_counter() - started)
        record = {"command": args.command, "scenario": sc.name,
                  "version": __version__, "payload": {"csv": out, "rows": len(rows)},
                  "failures": []}
        _emit(record, None)
        return 0

    if args.command == "capacity":
        payload, failures = _capacity_payload(sc)
        headline = payload["capacity_bits" if args.bits else "capacity_nats"]
    elif args.command == "lowerbound":
        payload, failures = _lowerbound_payload(sc, seeds[0])
        headline = payload["value_bits" if args.bits else "value_nats"]
    elif args.command == "simulate":
        payload, failures = _simulate_payload(sc, seeds, burn_in, args.rate)
        headline = payload["j_hat_pooled"]
    elif args.command == "verify-translation":
        payload, failures = _verify_translation_payload(sc, seeds, burn_in)
        headline = payload["max_residual"]
    else:  # pragma: no cover
        raise LqgcommError(f"unknown command {args.command}")

    record = {"command": args.command, "scenario": sc.name, "version": __version__,
              "seeds": seeds, "payload": payload, "failures": failures}
    _emit(record, args.out)
    log.info("%s on %s: headline=%s, %d failure(s), %.3fs", args.command, sc.name,
             headline, len(failures), time.perf_counter() - started)
    return 0 if not failures else 1


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except LqgcommError as exc:
        record = {"command": args.command, "version": __version__,
                  "error": {"type": type(exc).__name__, "message": str(exc)}}
        sys.stdout.write(json.dumps(record, indent=2, sort_keys=True) + "\n")
        log.error("%s", exc)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
