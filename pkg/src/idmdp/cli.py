"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 size guard
exceeded. The environment variable ``IDMDP_TOL`` overrides the default
comparison tolerance used by ``check`` and for tie-breaking in ``solve``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import allocation as alloc
from .documents import (
    DocumentError,
    atomic_write,
    dumps,
    load_model,
    model_to_document,
)
from .examples import BUILDERS, build_example
from .exceptions import (
    ConvergenceError,
    GuardExceededError,
    InvalidModelError,
    NumericalError,
)
from .mdp import (
    ATOL,
    brute_force_optimal,
    finite_horizon_dp,
    is_monotone,
    value_iteration,
)
from .rl import curve_to_csv, q_learning, rectified_l1_penalty, threshold_search
from .structural import (
    _jsonable,
    check_corollary1,
    check_theorem1,
    check_theorem2,
    q_diff_diagnostics,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_GUARD = 0, 2, 3, 4

FIGURES = ("ex1", "sigmoidal-alt", "toy", "ex3", "bidiag", "tridiag",
           "ross-i", "ross-ii")


class InputError(Exception):
    pass


def default_tol():
    raw = os.environ.get("IDMDP_TOL")
    if raw is None:
        return ATOL
    try:
        tol = float(raw)
    except ValueError:
        raise InputError(f"IDMDP_TOL is not a number: {raw!r}") from None
    if not tol >= 0:
        raise InputError("IDMDP_TOL must be non-negative")
    return tol


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {s!r}")


def _as_mdp(model):
    if isinstance(model, alloc.AllocationModel):
        return alloc.to_mdp(model)
    return model


# --- solve -------------------------------------------------------------------

def solve_tables(mdp, horizon=None, tol=None, discounted=None, tie_tol=ATOL):
    """Rows for the Q table ``(k, x, a, Q)`` and value table ``(k, x, V, mu)``.

    Finite horizon when ``horizon`` is given (or recorded on the model and
    no ``tol`` is passed); otherwise value iteration, reported as stage 0.
    """
    if horizon is None and tol is None:
        horizon = mdp.meta.get("horizon")
    q_rows, v_rows = [], []
    X, A = mdp.num_states, mdp.num_actions
    if horizon is not None:
        sol = finite_horizon_dp(mdp, horizon, discounted, tie_tol)
        for k in range(sol.horizon):
            for x in range(X):
                for a in range(A):
                    q_rows.append((k, x + 1, a + 1, sol.q[k, x, a]))
        for k in range(sol.horizon + 1):
            for x in range(X):
                mu = sol.policy[k, x] if k < sol.horizon else ""
                v_rows.append((k, x + 1, sol.values[k, x], mu))
        return q_rows, v_rows, sol.policy
    sol = value_iteration(mdp, tol=1e-8 if tol is None else tol, tie_tol=tie_tol)
    for x in range(X):
        for a in range(A):
            q_rows.append((0, x + 1, a + 1, sol.q[x, a]))
        v_rows.append((0, x + 1, sol.values[x], sol.policy[x]))
    return q_rows, v_rows, sol.policy[None, :]


def cmd_solve(args):
    mdp = _as_mdp(load_model(args.input))
    q_rows, v_rows, policy = solve_tables(mdp, args.horizon, args.tol,
                                          args.discounted_backup, default_tol())
    os.makedirs(args.out, exist_ok=True)
    atomic_write(os.path.join(args.out, "q.csv"), _csv(("k", "x", "a", "Q"), q_rows))
    atomic_write(os.path.join(args.out, "values.csv"),
                 _csv(("k", "x", "V", "mu"), v_rows))
    summary = {"stages": int(policy.shape[0]),
               "policy_stage0": policy[0].tolist() if policy.size else [],
               "monotone_increasing": is_monotone(policy) if policy.size else True,
               "monotone_decreasing": (is_monotone(policy, decreasing=True)
                                       if policy.size else True)}
    sys.stdout.write(dumps(summary))
    return EXIT_OK


# --- check -------------------------------------------------------------------

THEOREMS = ("1", "2", "cor1", "cor2", "cor3", "cor4", "cor5", "thm3")


def run_check(model, theorem, mode="uniform", tol=ATOL):
    """Report document for the named condition set."""
    if theorem == "thm3":
        if not isinstance(model, alloc.AllocationModel):
            raise InputError("thm3 needs an allocation document")
        main = alloc.check_maincost(model, tol)
        strong = alloc.check_stronger(model, tol)
        assumptions = alloc.check_assumptions(model, tol)
        sol = alloc.modified_dp(model)
        certified = main.passed and assumptions["gamma_monotone"] \
            and assumptions["kappa_convex_increasing"]
        return {"theorem": "thm3",
                "verdict": "MONOTONE-CERTIFIED" if certified else "NOT-CERTIFIED",
                "policy_direction": "increasing",
                "conditions": [main.to_dict(), strong.to_dict()],
                "assumptions": assumptions,
                "solved_policies_monotone": alloc.policies_monotone(sol.policy),
                "qbar_submodular": alloc.stagewise_submodular(sol.qbar)}
    mdp = _as_mdp(model)
    if theorem in ("1", "cor3", "cor4"):
        rep = check_theorem1(mdp, mode, tol)
    elif theorem in ("cor1", "cor2"):
        rep = check_corollary1(mdp, tol)
    elif theorem == "2":
        rep = check_theorem2(mdp, "theorem2", mode, tol)
    elif theorem == "cor5":
        rep = check_theorem2(mdp, "corollary5", mode, tol)
    else:
        raise InputError(f"unknown theorem {theorem!r}")
    out = rep.to_dict()
    out["requested"] = theorem
    return out


def cmd_check(args):
    model = load_model(args.input)
    report = run_check(model, args.theorem, args.mode, default_tol())
    _emit(dumps(_jsonable(report)), args.out)
    return EXIT_OK


# --- example -----------------------------------------------------------------

def _parse_override(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(tokens):
    """Turn ``--key value`` pairs into a dict, JSON-decoding each value."""
    out = {}
    it = iter(tokens)
    for tok in it:
        if not tok.startswith("--"):
            raise InputError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, raw = key.split("=", 1)
        else:
            try:
                raw = next(it)
            except StopIteration:
                raise InputError(f"missing value for {tok}") from None
        out[key] = _parse_override(raw)
    return out


def make_example(name, overrides=None):
    overrides = dict(overrides or {})
    if name in ("ross-i", "ross-ii"):
        return alloc.build_ross_case(name.split("-")[1], **overrides)
    if name not in BUILDERS:
        raise InputError(f"unknown example {name!r}; choose from "
                         f"{sorted(BUILDERS) + ['ross-i', 'ross-ii']}")
    try:
        return build_example(name, **overrides)
    except TypeError as exc:
        raise InputError(str(exc)) from None


def cmd_example(args, extra):
    model = make_example(args.name, parse_overrides(extra))
    _emit(dumps(model_to_document(model)), args.out)
    return EXIT_OK


# --- figure ------------------------------------------------------------------

def figure_table(model, stage=0):
    """``x`` and the differences ``Q(x, a) - Q(x, 1)`` at one stage.

    Allocation models use the transformed ``Qbar``; other models the
    finite-horizon Q over their recorded horizon.
    """
    if isinstance(model, alloc.AllocationModel):
        q = alloc.modified_dp(model).qbar[stage]
    else:
        N = model.meta.get("horizon")
        if N is None or model.terminal is None:
            q = value_iteration(model).q
        else:
            q = finite_horizon_dp(model, N).q[stage]
    diffs = q[:, 1:] - q[:, :1]
    header = ["x"] + [f"Q{a + 1}-Q1" for a in range(1, q.shape[1])]
    rows = [[x + 1, *diffs[x]] for x in range(q.shape[0])]
    return header, rows, q


def cmd_figure(args):
    if args.input:
        model = load_model(args.input)
    else:
        model = make_example(args.name)
    header, rows, q = figure_table(model, args.stage)
    _emit(_csv(header, rows), args.out)
    diag = q_diff_diagnostics(q)
    summary = {"sign_changes": [s.count for s in diag.sign_changes],
               "monotone_columns": [diag.column_monotone(j)
                                    for j in range(diag.diffs.shape[1])]}
    sys.stderr.write(json.dumps(summary) + "\n")
    return EXIT_OK


# --- rl ----------------------------------------------------------------------

def cmd_rl(args):
    mdp = _as_mdp(load_model(args.input))
    os.makedirs(args.out, exist_ok=True)
    if args.algo == "qlearn":
        steps = 100_000 if args.steps is None else args.steps
        res = q_learning(mdp, args.seed, steps, project=args.project,
                         record_every=args.record_every or max(steps // 100, 1))
        curve = res.curve
        final = {"algo": "qlearn", "seed": args.seed, "steps": steps,
                 "policy": res.policy.tolist(), "q": res.q.tolist(),
                 "penalty": rectified_l1_penalty(res.policy)}
        if args.project:
            final["projected_policy"] = res.projected.tolist()
            final["projection_failed"] = res.projection_failed
    else:
        budget = 100_000 if args.budget is None else args.budget
        res = threshold_search(mdp, args.lam, args.seed, budget)
        curve = [(i, v, 0.0) for i, (_, v) in enumerate(res.history)]
        final = {"algo": "threshold", "seed": args.seed, "budget": budget,
                 "thresholds": list(res.policy.thresholds),
                 "policy": res.policy.to_policy().tolist(),
                 "value": res.value, "stderr": res.stderr,
                 "method": res.method, "samples_used": res.samples_used,
                 "budget_exhausted": res.budget_exhausted,
                 "baseline": res.baseline}
    atomic_write(os.path.join(args.out, "curve.csv"), curve_to_csv(curve))
    atomic_write(os.path.join(args.out, "policy.json"), dumps(_jsonable(final)))
    return EXIT_OK


# --- oracle ------------------------------------------------------------------

def cmd_oracle(args):
    mdp = _as_mdp(load_model(args.input))
    res = brute_force_optimal(mdp, size_guard=args.guard, tol=default_tol())
    mono = [p.tolist() for p in res.policies if is_monotone(p)]
    report = {"num_evaluated": res.num_evaluated,
              "optimal_policies": res.policies.tolist(),
              "optimal_value": res.best.tolist(),
              "contains_monotone": bool(mono),
              "monotone_optimal_policies": mono}
    _emit(dumps(report), args.out)
    return EXIT_OK


# --- entry point -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="idmdp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a model and write Q/value CSVs")
    s.add_argument("--input", required=True, help="model document (JSON)")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--horizon", type=int, help="finite horizon N")
    g.add_argument("--tol", type=float, help="value-iteration tolerance")
    s.add_argument("--discounted-backup", type=_bool, default=None,
                   help="discount the finite-horizon backup (default: if the "
                        "model has a discount)")
    s.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("check", help="check a condition set")
    c.add_argument("--input", required=True)
    c.add_argument("--theorem", required=True, choices=THEOREMS)
    c.add_argument("--mode", choices=("uniform", "pairwise"), default="uniform")
    c.add_argument("--out", help="report file (default: stdout)")

    e = sub.add_parser("example", help="write a built-in example document; "
                       "extra --key value pairs override builder parameters")
    e.add_argument("--name", required=True)
    e.add_argument("--out", help="output file (default: stdout)")

    f = sub.add_parser("figure", help="write Q-difference curves as CSV")
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--name", choices=FIGURES)
    src.add_argument("--input", help="model document instead of a named example")
    f.add_argument("--stage", type=int, default=0)
    f.add_argument("--out", help="output file (default: stdout)")

    r = sub.add_parser("rl", help="run Q-learning or threshold search")
    r.add_argument("--input", required=True)
    r.add_argument("--algo", choices=("qlearn", "threshold"), required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--steps", type=int, help="Q-learning steps")
    r.add_argument("--budget", type=int, help="threshold-search sample budget")
    r.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="penalty weight for the unconstrained baseline")
    r.add_argument("--project", action="store_true",
                   help="also report a monotone selection of the learned Q")
    r.add_argument("--record-every", type=int, help="learning-curve interval")
    r.add_argument("--out", required=True, help="output directory")

    o = sub.add_parser("oracle", help="brute-force all stationary policies")
    o.add_argument("--input", required=True)
    o.add_argument("--guard", type=int, default=10**6,
                   help="maximum number of policies to enumerate")
    o.add_argument("--out", help="output file (default: stdout)")
    return p


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    if extra and args.command != "example":
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        if args.command == "example":
            return cmd_example(args, extra)
        handler = {"solve": cmd_solve, "check": cmd_check, "figure": cmd_figure,
                   "rl": cmd_rl, "oracle": cmd_oracle}[args.command]
        return handler(args)
    except GuardExceededError as exc:
        sys.stderr.write(f"error: {exc}; required guard: {exc.required}\n")
        return EXIT_GUARD
    except (ConvergenceError, NumericalError) as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERIC
    except (DocumentError, InvalidModelError, InputError, OSError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
