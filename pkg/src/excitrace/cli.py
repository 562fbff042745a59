"""Command-line runner: ``run``, ``gradcheck``, ``compare-baseline`` and ``audit``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 Ritz-bound violation.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import shutil
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy
from threadpoolctl import threadpool_limits

from . import __version__, kernels, linalg
from .ansatz import SharedCircuit, init_params, init_pool
from .checkpoint import read_checkpoint, write_checkpoint
from .config import build_family, build_operator, load_config, parse_config
from .errors import ConfigError, NumericalError, TooLarge
from .hamiltonian import (ATOMIC_MASS_UNIT, HBAR, KINETIC_CONSTANT, PLANCK, SPEED_OF_LIGHT,
                          GridOperator)
from .optim import fd_gradient, minimize
from .oracle import (MAX_DENSE_DIM, energy_variance, error_scaling_fit, exact_spectrum,
                     morse_analytic, morse_bound_count, relative_errors, ritz_audit)
from .subspace import BaselineObjective, TraceLossObjective, assemble, ritz_postprocess

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_RITZ = 0, 2, 3, 4
CONVERGENCE_FIELDS = ["step", "loss", "loss_shifted", "grad_norm", "cond_S", "step_length", "wall_ms"]
ENERGY_FIELDS = ["k", "ritz", "exact", "rel_error", "variance", "rel_variance"]

log = logging.getLogger("excitrace")


def _num(x):
    """JSON-safe float: repr-exact for finite values, strings otherwise."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _nums(xs):
    return None if xs is None else [_num(v) for v in xs]


def _fmt(x):
    return "" if x is None else repr(float(x))


def _dump_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _constants():
    return {"hbar_J_s": HBAR, "planck_J_s": PLANCK, "speed_of_light_m_s": SPEED_OF_LIGHT,
            "atomic_mass_unit_kg": ATOMIC_MASS_UNIT, "kinetic_constant_cm-1_A2": KINETIC_CONSTANT}


def _software():
    return {"excitrace": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "kernel_backend": kernels.BACKEND}


def _operator_metadata(h):
    if isinstance(h, GridOperator):
        return {"kind": "grid", "dim": h.dim, **{k: _num(v) if isinstance(v, float) else v
                                                for k, v in h.metadata().items()}}
    return {"kind": "pauli_sum", "dim": h.dim, "n_qubits": h.n_sites, "n_terms": len(h)}


def _exact(cfg, h, k):
    if not cfg.run["oracle"] or h.dim > MAX_DENSE_DIM:
        return None
    return exact_spectrum(h, k)


def _morse_reference(cfg, k):
    s = cfg.system
    top = morse_bound_count(s["de"], s["am"], s["mu"])
    return [morse_analytic(n, s["de"], s["am"], s["mu"]) for n in range(min(k, top + 1))]


class _ConvergenceLog:
    """Streams convergence rows and tracks condition-number extremes and audits."""

    def __init__(self, path, exact=None, ns=None, audit_every=0, audit_tol=1e-10,
                 check_condition=None):
        self.handle = open(path, "w", newline="")
        self.writer = csv.writer(self.handle)
        self.writer.writerow(CONVERGENCE_FIELDS)
        self.handle.flush()
        self.exact = exact
        self.shift = float(np.sum(exact[:ns])) if exact is not None else None
        self.audit_every = audit_every
        self.audit_tol = audit_tol
        self.check_condition = check_condition
        self.cond_min = math.inf
        self.cond_max = -math.inf
        self.audits = []
        self.violations = []

    def __call__(self, rec, x, info):
        shifted = rec.loss - self.shift if self.shift is not None else None
        self.writer.writerow([rec.step, _fmt(rec.loss), _fmt(shifted), _fmt(rec.grad_norm),
                              _fmt(rec.cond_s), _fmt(rec.step_length), f"{rec.wall_ms:.3f}"])
        self.handle.flush()
        if math.isfinite(rec.cond_s):
            self.cond_min = min(self.cond_min, rec.cond_s)
            self.cond_max = max(self.cond_max, rec.cond_s)
        if self.check_condition is not None:
            self.check_condition(info, rec.step)
        if self.exact is not None and "S" in info:
            if rec.step == 0 or (self.audit_every and rec.step % self.audit_every == 0):
                self.audit(rec.step, linalg.gevp(info["H"], info["S"]).energies)

    def audit(self, step, ritz):
        report = ritz_audit(ritz, self.exact, self.audit_tol)
        self.audits.append(step)
        if not report.ok:
            self.violations.append({"step": step, "levels": report.violations,
                                    "margins": _nums(report.margins)})

    def close(self):
        self.handle.close()


def _trial_seed(cfg, trial):
    return [int(cfg.run["seed"]), int(trial)]


def run_trial(cfg, trial, trial_dir, exact_energies):
    """One seeded optimization; writes its own files and returns a JSON-ready record."""
    trial_dir = Path(trial_dir)
    trial_dir.mkdir(parents=True, exist_ok=True)
    with threadpool_limits(limits=1):
        return _run_trial(cfg, trial, trial_dir, exact_energies)


def _run_trial(cfg, trial, trial_dir, exact):
    t0 = time.perf_counter()
    h = build_operator(cfg)
    family = build_family(cfg)
    ns = cfg.run["ns"]
    seed = _trial_seed(cfg, trial)
    objective = TraceLossObjective(family, ns, h, cond_limit=cfg.run["cond_limit"], jitter=cfg.run["jitter"])
    x0 = init_pool(family, ns, cfg.run["init_sigma"], seed)
    logger = _ConvergenceLog(trial_dir / "convergence.csv", exact, ns, cfg.run["audit_every"],
                             cfg.run["audit_tol"], check_condition=objective.check_condition)
    record = {"trial": trial, "seed": seed}
    try:
        trace = minimize(objective, x0, cfg.optimizer, logger)
        psi = objective.states(trace.x)
        m = assemble(psi, h)
        eig = ritz_postprocess(m, psi, jitter=cfg.run["jitter"])
    except NumericalError as exc:
        logger.close()
        record.update(status="numerical_failure", error=f"{type(exc).__name__}: {exc}",
                      step=getattr(exc, "step", None))
        return record, {"trial": trial, "wall_s": time.perf_counter() - t0}
    if exact is not None:
        logger.audit(len(trace.records) - 1, eig.energies)
    logger.close()

    variances = [energy_variance(h, state) for state in eig.states]
    rel = relative_errors(eig.energies, exact) if exact is not None else None
    with open(trial_dir / "energies.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENERGY_FIELDS)
        for k, e in enumerate(eig.energies):
            writer.writerow([k + 1, _fmt(e), _fmt(exact[k] if exact is not None else None),
                             _fmt(rel[k] if rel is not None else None),
                             _fmt(variances[k][0]), _fmt(variances[k][1])])
    write_checkpoint(trial_dir / "params.ckpt", objective.split(trace.x), family.metadata(), seed,
                     cfg.text, extra={"kind": "trace", "trial": trial, "base_dir": str(cfg.base_dir),
                                      "overrides": _overrides(cfg)})
    record.update(
        status="ok",
        termination=trace.reason,
        steps=len(trace.records) - 1,
        n_evals=trace.n_evals,
        final_loss=_num(trace.loss),
        final_grad_norm=_num(np.linalg.norm(trace.grad)),
        ritz=_nums(eig.energies),
        sum_ritz=_num(np.sum(eig.energies)),
        relative_errors=_nums(rel),
        variances=_nums([v for v, _ in variances]),
        relative_variances=_nums([r for _, r in variances]),
        cond_S={"min": _num(logger.cond_min), "max": _num(logger.cond_max), "final": _num(eig.cond_s)},
        audited_steps=logger.audits,
        ritz_violations=logger.violations,
    )
    return record, {"trial": trial, "wall_s": time.perf_counter() - t0, "steps": len(trace.records) - 1}


def _overrides(cfg):
    return {"seed": cfg.run["seed"], "trials": cfg.run["trials"]}


def _apply_overrides(cfg, args):
    run = dict(cfg.run)
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        run["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be positive")
        run["trials"] = args.trials
    if getattr(args, "output", None) is not None:
        run["output_dir"] = args.output
    if getattr(args, "jobs", 1) < 1:
        raise ConfigError("--jobs must be positive")
    return replace(cfg, run=run)


def _output_dir(cfg):
    out = Path(cfg.run["output_dir"])
    return out if out.is_absolute() else Path.cwd() / out


def _map_trials(fn, jobs, tasks):
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        futures = [pool.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def _best(records):
    ok = [r for r in records if r["status"] == "ok"]
    if not ok:
        return None
    return min(ok, key=lambda r: (r["final_loss"], r["trial"]))["trial"]


def command_run(cfg, jobs):
    h = build_operator(cfg)
    family = build_family(cfg)
    ns = cfg.run["ns"]
    spectrum = _exact(cfg, h, ns)
    exact = spectrum.energies if spectrum is not None else None
    out = _output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    trials = cfg.run["trials"]
    tasks = [(cfg, t, out / f"trial_{t:03d}", exact) for t in range(trials)]
    results = _map_trials(run_trial, jobs, tasks)
    records = [r for r, _ in results]
    timing = [t for _, t in results]
    best = _best(records)

    summary = {
        "config": {"text": cfg.text, "parsed": cfg.as_dict(), "overrides": _overrides(cfg)},
        "software": _software(),
        "constants": _constants(),
        "hamiltonian": _operator_metadata(h),
        "ansatz": family.metadata(),
        "exact": None if spectrum is None else {"source": spectrum.source, "energies": _nums(exact)},
        "trials": records,
        "best_trial": best,
    }
    if cfg.experiment == "morse":
        summary["morse_analytic"] = _nums(_morse_reference(cfg, ns))
    if best is not None:
        rec = records[best]
        if rec["relative_errors"] is not None and ns >= 3:
            slope, intercept, r2 = error_scaling_fit(rec["relative_errors"])
            summary["error_scaling_fit"] = {"slope": _num(slope), "intercept": _num(intercept), "r2": _num(r2)}
        for name in ("convergence.csv", "energies.csv", "params.ckpt"):
            shutil.copyfile(out / f"trial_{best:03d}" / name, out / name)
    _dump_json(out / "summary.json", summary)
    _dump_json(out / "timing.json", {"jobs": jobs, "trials": timing})

    for rec in records:
        if rec["status"] == "ok":
            log.info("trial %d: loss %.12g after %d steps (%s)", rec["trial"], rec["final_loss"],
                     rec["steps"], rec["termination"])
        else:
            log.error("trial %d failed at step %s: %s", rec["trial"], rec.get("step"), rec["error"])
    print(json.dumps({"output": str(out), "best_trial": best,
                      "ritz": records[best]["ritz"] if best is not None else None}))
    if any(r.get("ritz_violations") for r in records):
        log.error("Ritz upper bound violated; see summary.json")
        return EXIT_RITZ
    if any(r["status"] != "ok" for r in records):
        return EXIT_NUMERICAL
    return EXIT_OK


def command_gradcheck(cfg, n_sampled, step, tol, target):
    h = build_operator(cfg)
    family = build_family(cfg)
    if h.dim > 1 << 10:
        raise ConfigError(f"gradcheck is limited to dim <= 1024, got {h.dim}")
    seed = int(cfg.run["seed"])
    if target == "baseline":
        if cfg.ansatz["family"] != "circuit":
            raise ConfigError("the baseline target needs family circuit")
        objective = BaselineObjective(SharedCircuit(family, baseline_inputs(h, cfg.run["ns"])), h)
        x = init_params(family, cfg.run["init_sigma"], [seed, 0]).values
    else:
        objective = TraceLossObjective(family, cfg.run["ns"], h, jitter=cfg.run["jitter"])
        x = init_pool(family, cfg.run["ns"], cfg.run["init_sigma"], [seed, 0])
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    n = min(n_sampled, x.size)
    idx = np.sort(rng.choice(x.size, size=n, replace=False))
    with threadpool_limits(limits=1):
        _, grad, _ = objective(x)
        fd = fd_gradient(lambda p: objective(p)[0], x, step=step, indices=idx)
    scale = max(float(np.max(np.abs(fd))), np.finfo(float).tiny)
    deviation = float(np.max(np.abs(grad[idx] - fd))) / scale
    report = {"family": family.metadata(), "target": target, "n_params": int(x.size),
              "indices": idx.tolist(), "step": step, "max_relative_deviation": _num(deviation),
              "tolerance": tol, "passed": deviation < tol}
    out = _output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "gradcheck.json", report)
    print(json.dumps({"max_relative_deviation": deviation, "passed": deviation < tol}))
    return EXIT_OK if deviation < tol else EXIT_NUMERICAL


def baseline_inputs(h, ns):
    """The ``ns`` computational basis strings of lowest diagonal energy (ties by index)."""
    diag = h.diagonal().real
    order = np.lexsort((np.arange(h.dim), np.round(diag, 12)))[:ns]
    return [format(int(i), f"0{h.n_sites}b") for i in order]


def compare_trial(cfg, trial, out, exact):
    with threadpool_limits(limits=1):
        h = build_operator(cfg)
        circuit = build_family(cfg)
        ns = cfg.run["ns"]
        seed = _trial_seed(cfg, trial)
        sigma = cfg.run["init_sigma"]
        result = {"trial": trial, "seed": seed}

        trace_obj = TraceLossObjective(circuit, ns, h, cond_limit=cfg.run["cond_limit"], jitter=cfg.run["jitter"])
        shared = SharedCircuit(circuit, baseline_inputs(h, ns))
        base_obj = BaselineObjective(shared, h)
        runs = (("trace", trace_obj, init_pool(circuit, ns, sigma, seed)),
                ("baseline", base_obj, init_params(circuit, sigma, seed, 0).values))
        for name, obj, x0 in runs:
            path = Path(out) / name / f"trial_{trial:03d}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            logger = _ConvergenceLog(path, exact, ns, cfg.run["audit_every"], cfg.run["audit_tol"],
                                     check_condition=obj.check_condition)
            try:
                tr = minimize(obj, x0, cfg.optimizer, logger)
                m = obj.matrices(tr.x)
                energies = linalg.gevp(m.H, m.S).energies
            except NumericalError as exc:
                result[name] = {"status": "numerical_failure", "error": f"{type(exc).__name__}: {exc}",
                                "step": getattr(exc, "step", None)}
                continue
            finally:
                logger.close()
            result[name] = {
                "status": "ok", "termination": tr.reason, "steps": len(tr.records) - 1,
                "final_loss": _num(tr.loss), "ritz": _nums(energies),
                "relative_errors": _nums(relative_errors(energies, exact)),
            }
        return result


def command_compare(cfg, jobs):
    if cfg.ansatz["family"] != "circuit" or cfg.experiment not in ("hubbard", "heisenberg"):
        raise ConfigError("compare-baseline needs experiment hubbard or heisenberg with family circuit")
    h = build_operator(cfg)
    ns = cfg.run["ns"]
    try:
        exact = exact_spectrum(h, ns).energies
    except TooLarge as exc:
        raise ConfigError(str(exc)) from None
    out = _output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, t, out, exact) for t in range(cfg.run["trials"])]
    trials = _map_trials(compare_trial, jobs, tasks)

    def best_of(name):
        ok = [t for t in trials if t[name]["status"] == "ok"]
        return min(ok, key=lambda t: (t[name]["final_loss"], t["trial"]))["trial"] if ok else None

    best_trace, best_base = best_of("trace"), best_of("baseline")
    report = {
        "config": {"text": cfg.text, "parsed": cfg.as_dict(), "overrides": _overrides(cfg)},
        "software": _software(),
        "hamiltonian": _operator_metadata(h),
        "ansatz": build_family(cfg).metadata(),
        "baseline_inputs": baseline_inputs(h, ns),
        "baseline_weights": "uniform",
        "exact": _nums(exact),
        "trials": trials,
        "paired_final_losses": [[t["trace"].get("final_loss"), t["baseline"].get("final_loss")] for t in trials],
        "best_trial": {"trace": best_trace, "baseline": best_base},
    }
    _dump_json(out / "report.json", report)
    if best_trace is not None and best_base is not None:
        bt, bb = trials[best_trace]["trace"], trials[best_base]["baseline"]
        with open(out / "relative_errors.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "exact", "trace_ritz", "trace_rel_error", "baseline_ritz", "baseline_rel_error"])
            for k in range(ns):
                writer.writerow([k + 1, _fmt(exact[k]), _fmt(bt["ritz"][k]), _fmt(bt["relative_errors"][k]),
                                 _fmt(bb["ritz"][k]), _fmt(bb["relative_errors"][k])])
    print(json.dumps({"output": str(out), "best_trial": report["best_trial"],
                      "paired_final_losses": report["paired_final_losses"]}))
    failed = any(t[n]["status"] != "ok" for t in trials for n in ("trace", "baseline"))
    return EXIT_NUMERICAL if failed else EXIT_OK


def command_audit(path, tol, output):
    try:
        ckpt = read_checkpoint(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from None
    cfg = parse_config(ckpt.config_text, base_dir=ckpt.extra.get("base_dir"))
    h = build_operator(cfg)
    family = build_family(cfg)
    if family.metadata() != ckpt.family:
        raise ConfigError("checkpoint family does not match its embedded config")
    if h.dim > MAX_DENSE_DIM:
        raise ConfigError(f"no oracle available above dimension {MAX_DENSE_DIM}")
    with threadpool_limits(limits=1):
        psi = family.forward_many(ckpt.params)[0]
        m = assemble(psi, h)
        eig = ritz_postprocess(m, psi)
        exact = exact_spectrum(h, ckpt.ns)
        report = ritz_audit(eig.energies, exact, tol)
        variances = [energy_variance(h, s) for s in eig.states]
    result = {
        "checkpoint": str(path), "ritz": _nums(eig.energies), "exact": _nums(exact.energies),
        "exact_source": exact.source, "margins": _nums(report.margins), "violations": report.violations,
        "tol": tol, "relative_errors": _nums(relative_errors(eig.energies, exact.energies)),
        "variances": _nums([v for v, _ in variances]), "relative_variances": _nums([r for _, r in variances]),
        "cond_S": _num(eig.cond_s), "ok": report.ok,
    }
    if output:
        Path(output).mkdir(parents=True, exist_ok=True)
        _dump_json(Path(output) / "audit.json", result)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_RITZ


def build_parser():
    parser = argparse.ArgumentParser(prog="excitrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--output", help="override [run] output_dir")
        if trials:
            p.add_argument("--trials", type=int, help="override [run] trials")
            p.add_argument("--jobs", type=int, default=1, help="trials run in parallel (default 1)")

    common(sub.add_parser("run", help="optimize the trace loss and write run outputs"))
    g = sub.add_parser("gradcheck", help="compare the analytic gradient to central differences")
    common(g, trials=False)
    g.add_argument("--n-params", type=int, default=64, help="coordinates sampled (default 64)")
    g.add_argument("--step", type=float, default=1e-5)
    g.add_argument("--tol", type=float, default=1e-6)
    g.add_argument("--target", choices=("trace", "baseline"), default="trace")
    common(sub.add_parser("compare-baseline", help="paired trace-loss vs subspace-VQE trials"))
    a = sub.add_parser("audit", help="recompute oracle checks from a checkpoint")
    a.add_argument("--checkpoint", required=True)
    a.add_argument("--tol", type=float, default=1e-10)
    a.add_argument("--output", help="directory for audit.json")
    a.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "audit":
            return command_audit(args.checkpoint, args.tol, args.output)
        cfg = _apply_overrides(load_config(args.config), args)
        # everything referenced by the config must build before any output appears
        build_operator(cfg)
        build_family(cfg)
        if args.command == "run":
            return command_run(cfg, args.jobs)
        if args.command == "gradcheck":
            if args.n_params < 1 or args.step <= 0:
                raise ConfigError("--n-params and --step must be positive")
            return command_gradcheck(cfg, args.n_params, args.step, args.tol, args.target)
        return command_compare(cfg, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
