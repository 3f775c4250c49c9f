"""Command-line front end for review planning and drift monitoring.

Exit codes: 0 on success, 1 on usage errors (bad flags or flag values),
2 on data errors (unreadable or invalid files, infeasible requests). With
``--json`` exactly one JSON object is written to stdout; errors go to
stderr and nothing is printed to stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import control, drift, optimize, policy, simulate, tree

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---- file formats --------------------------------------------------------

def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ValueError(f"{where} must be a JSON object")
    extra = set(obj) - set(allowed)
    if extra:
        raise ValueError(f"unknown keys in {where}: {sorted(extra)}")


def scenario_from_dict(data) -> policy.Scenario:
    _reject_unknown(data, {"classes", "human"}, "scenario")
    if "classes" not in data or not isinstance(data["classes"], list):
        raise ValueError("scenario needs a 'classes' array")
    classes = []
    for c in data["classes"]:
        _reject_unknown(c, {"label", "share", "ml_accuracy", "ml_accuracy_se", "review_cost"},
                        "class")
        try:
            classes.append(policy.ClassProfile(
                str(c["label"]), float(c["share"]), float(c["ml_accuracy"]),
                None if c.get("ml_accuracy_se") is None else float(c["ml_accuracy_se"]),
                float(c.get("review_cost", 1.0))))
        except KeyError as exc:
            raise ValueError(f"class entry missing {exc.args[0]!r}") from None
    human = data.get("human", {})
    _reject_unknown(human, {"accuracy", "time_model"}, "human")
    tm = human.get("time_model")
    if tm is not None:
        _reject_unknown(tm, {"max_time"}, "time_model")
        tm = policy.TimeModel(float(tm["max_time"]))
    return policy.Scenario(tuple(classes),
                           policy.HumanModel(float(human.get("accuracy", 1.0)), tm))


def scenario_to_dict(s: policy.Scenario) -> dict:
    classes = []
    for c in s.classes:
        d = {"label": c.label, "share": c.share, "ml_accuracy": c.ml_accuracy,
             "review_cost": c.review_cost}
        if c.ml_accuracy_se is not None:
            d["ml_accuracy_se"] = c.ml_accuracy_se
        classes.append(d)
    human = {"accuracy": s.human.accuracy}
    if s.human.time_model is not None:
        human["time_model"] = {"max_time": s.human.time_model.max_time}
    return {"classes": classes, "human": human}


def policy_from_dict(data, scenario: policy.Scenario):
    _reject_unknown(data, {"review_probability", "time_allocation"}, "policy")
    if ("review_probability" in data) == ("time_allocation" in data):
        raise ValueError("policy needs exactly one of 'review_probability', 'time_allocation'")
    if "review_probability" in data:
        pol = policy.Policy({str(k): float(v) for k, v in data["review_probability"].items()})
    else:
        alloc = {}
        for k, v in data["time_allocation"].items():
            _reject_unknown(v, {"fraction", "time"}, f"time_allocation[{k!r}]")
            alloc[str(k)] = (float(v["fraction"]), float(v["time"]))
        pol = policy.TimePolicy(alloc)
    policy.check_policy(scenario, pol)
    return pol


def policy_to_dict(pol) -> dict:
    if isinstance(pol, policy.Policy):
        return {"review_probability": dict(pol.review_probability)}
    return {"time_allocation": {k: {"fraction": q, "time": t}
                                for k, (q, t) in pol.allocation.items()}}


def drift_from_list(data) -> list[simulate.DriftChange]:
    if not isinstance(data, list):
        raise ValueError("drift schedule must be a JSON array")
    out = []
    for entry in data:
        _reject_unknown(entry, {"at_index", "shares", "accuracies"}, "drift entry")
        out.append(simulate.DriftChange(int(entry["at_index"]), entry.get("shares"),
                                        entry.get("accuracies")))
    return out


# ---- result records ------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: tuples to lists, numpy scalars and inf to plain values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def optimization_to_dict(res: optimize.OptimizationResult) -> dict:
    out = {
        "policy": policy_to_dict(res.policy),
        "achieved_accuracy": res.achieved_accuracy,
        "spent": res.spent,
        "certificate": [{"label": k, "marginal_rate": r} for k, r in res.certificate],
    }
    if res.note is not None:
        out["note"] = res.note
    return out


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


# ---- commands ------------------------------------------------------------

def cmd_evaluate(args):
    scen = scenario_from_dict(_load_json(args.scenario))
    pol = policy_from_dict(_load_json(args.policy), scen)
    if isinstance(pol, policy.TimePolicy):
        acc, total = policy.evaluate_time_policy(scen, pol, args.per_items)
        result = {"expected_accuracy": acc, "total_time": total, "n_items": args.per_items}
        lines = [f"expected accuracy: {_fmt(acc)}",
                 f"total review time per {args.per_items} items: {_fmt(total)}"]
        return result, lines
    m = policy.evaluate_policy(scen, pol, args.per_items)
    result = asdict(m)
    lines = [
        f"expected accuracy: {_fmt(m.expected_accuracy)}",
        f"expected cost per {m.n_items} items: {_fmt(m.expected_cost)}",
        f"minimax accuracy: {_fmt(m.minimax_accuracy)}",
        f"accuracy standard error: {'n/a' if m.accuracy_se is None else _fmt(m.accuracy_se)}",
    ]
    lines += [f"  {c.label}: effective accuracy {_fmt(c.effective_accuracy)}, "
              f"expected reviews {_fmt(c.expected_reviews)}" for c in m.per_class]
    return result, lines


def _optimization_output(res, args, spent_name="cost"):
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(_clean(policy_to_dict(res.policy)), fh, indent=2)
            fh.write("\n")
    lines = [f"achieved accuracy: {_fmt(res.achieved_accuracy)}",
             f"{spent_name} per {args.per_items} items: {_fmt(res.spent)}"]
    if isinstance(res.policy, policy.Policy):
        lines += [f"  review {k} with probability {_fmt(v)}"
                  for k, v in res.policy.review_probability.items()]
    else:
        lines += [f"  review {_fmt(q)} of {k} for {_fmt(t)} each"
                  for k, (q, t) in res.policy.allocation.items()]
    if res.note:
        lines.append(f"note: {res.note}")
    return optimization_to_dict(res), lines


def cmd_optimize(args):
    scen = scenario_from_dict(_load_json(args.scenario))
    res = optimize.optimize_review_budget(scen, policy.Budget(args.budget, args.per_items))
    return _optimization_output(res, args)


def cmd_target(args):
    scen = scenario_from_dict(_load_json(args.scenario))
    res = optimize.target_accuracy_min_cost(scen, args.target_accuracy, args.per_items)
    return _optimization_output(res, args)


def cmd_optimize_time(args):
    scen = scenario_from_dict(_load_json(args.scenario))
    res = optimize.optimize_time_budget(scen, args.total_time, args.per_items)
    return _optimization_output(res, args, spent_name="review time")


def cmd_simulate(args):
    scen = scenario_from_dict(_load_json(args.scenario))
    pol = policy_from_dict(_load_json(args.policy), scen)
    schedule = drift_from_list(_load_json(args.drift)) if args.drift else None
    stream, summary = simulate.simulate_batch(scen, pol, args.items, args.seed, schedule)
    if args.out:
        stream.write_csv(args.out)
    result = asdict(summary)
    lines = [
        f"items: {summary.n}",
        f"accuracy: {_fmt(summary.accuracy_estimate)} (se {_fmt(summary.accuracy_se)})",
        f"total cost: {_fmt(summary.total_cost)}",
        f"total time: {_fmt(summary.total_time)}",
    ]
    lines += [f"  {k}: predicted {c.predicted}, reviewed {c.reviewed}, correct {c.correct}"
              for k, c in summary.per_class_counts.items()]
    return result, lines


def cmd_monitor(args):
    ref = simulate.OutcomeStream.read_csv(args.reference)
    cur = simulate.OutcomeStream.read_csv(args.current, labels=ref.labels)
    report = drift.monitor_stream(ref, cur, args.alpha, args.ph_delta, args.ph_threshold)
    s = report.share_stats
    lines = [f"verdict: {'drift' if report.drift else 'no drift'}"]
    if report.structural_drift:
        lines.append(f"classes absent from reference: {', '.join(report.structural_drift)}")
    if s.cohens_w is not None:
        lines.append(f"chi-square: {_fmt(s.chi_square)}")
        lines.append(f"Cohen's w: {_fmt(s.cohens_w)} ({s.effect_label})")
    lines += [f"dissimilarity index: {_fmt(s.dissimilarity)}",
              f"Hellinger distance: {_fmt(s.hellinger)}",
              f"Jensen-Shannon distance: {_fmt(s.jsd)}"]
    for t in report.class_accuracy_tests:
        lines.append(f"  {t.label}: z {_fmt(t.z_stat)}, p {_fmt(t.p_value)}, "
                     f"Holm p {_fmt(t.holm_adjusted_p)}{' REJECTED' if t.rejected else ''}")
    if report.ph_alarm:
        lines.append(f"Page-Hinkley alarm at index {report.ph_alarm[0]} "
                     f"(gap {_fmt(report.ph_alarm[1])})")
    return report.to_dict(), lines


def cmd_interval(args):
    samples = control.read_samples(args.samples)
    if args.method == "percentile":
        iv = control.percentile_interval(samples, args.alpha)
    elif args.method == "clt":
        iv = control.clt_interval(samples, args.alpha)
    else:
        if args.seed is None:
            raise UsageError("--method bootstrap requires --seed")
        iv = control.bootstrap_interval(samples, np.mean, args.reps, args.alpha, args.seed)
    return asdict(iv), [f"{iv.method} interval at {_fmt(iv.confidence)}: "
                        f"[{_fmt(iv.low)}, {_fmt(iv.high)}]"]


def cmd_tree(args):
    root = tree.load_tree(args.tree)
    path, prob = tree.worst_path(root)
    return {"path": path, "prob": prob}, [f"worst path: {' -> '.join(path)}",
                                          f"probability correct: {_fmt(prob)}"]


def cmd_plan_size(args):
    n = policy.sample_size_heuristic(args.params, args.epsilon)
    return {"records": n}, [str(n)]


# ---- argument parsing ----------------------------------------------------

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer: {text}")
    return value


def _nonneg_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0 or math.isinf(value):
        raise argparse.ArgumentTypeError(f"must be a finite number >= 0: {text}")
    return value


def _open_unit(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1): {text}")
    return value


def _unit(text):
    value = _nonneg_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"must be in [0, 1]: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hitlpolicy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--json", action="store_true", help="emit one JSON object")
        return p

    p = add("evaluate", cmd_evaluate, "closed-form metrics of a review policy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--per-items", type=_positive_int, default=1000)

    p = add("optimize", cmd_optimize, "best policy under a review budget")
    p.add_argument("--scenario", required=True)
    p.add_argument("--budget", type=_nonneg_float, required=True)
    p.add_argument("--per-items", type=_positive_int, default=1000)
    p.add_argument("--out")

    p = add("target", cmd_target, "cheapest policy reaching a target accuracy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--target-accuracy", type=_unit, required=True)
    p.add_argument("--per-items", type=_positive_int, default=1000)
    p.add_argument("--out")

    p = add("optimize-time", cmd_optimize_time, "best time allocation under a time budget")
    p.add_argument("--scenario", required=True)
    p.add_argument("--total-time", type=_nonneg_float, required=True)
    p.add_argument("--per-items", type=_positive_int, default=1000)
    p.add_argument("--out")

    p = add("simulate", cmd_simulate, "simulate an outcome stream")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--items", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--drift")
    p.add_argument("--out")

    p = add("monitor", cmd_monitor, "compare two outcome streams for drift")
    p.add_argument("--reference", required=True)
    p.add_argument("--current", required=True)
    p.add_argument("--alpha", type=_open_unit, default=0.05)
    p.add_argument("--ph-delta", type=_nonneg_float, default=0.005)
    p.add_argument("--ph-threshold", type=_nonneg_float, default=50.0)

    p = add("interval", cmd_interval, "control interval for a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--method", choices=("percentile", "bootstrap", "clt"), required=True)
    p.add_argument("--alpha", type=_open_unit, default=0.05)
    p.add_argument("--reps", type=_positive_int, default=2000)
    p.add_argument("--seed", type=int)

    p = add("tree", cmd_tree, "hybrid decision tree analysis")
    p.add_argument("--tree", required=True)
    p.add_argument("action", choices=("worst-path",))

    p = add("plan-size", cmd_plan_size, "training-set size heuristic")
    p.add_argument("--params", type=_positive_int, required=True)
    p.add_argument("--epsilon", type=_open_unit, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        result, lines = args.func(args)
    except UsageError as exc:
        print(f"hitlpolicy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError, TypeError) as exc:
        print(f"hitlpolicy: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.json:
        print(json.dumps(_clean(result), allow_nan=False))
    else:
        print("\n".join(lines))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
