"""Command-line interface.

Exit codes: 0 success, 1 validation or separation failure, 2 parse error,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ifs import check_sppc, validate
from .oracle import DEFAULT_BUDGET, BudgetExceeded, check_budget, finite_scale_pressure
from .orderings import admissible_orderings
from .potentials import WeightedMeasure, legendre_transform, lq_potential
from .pressure import box_dimension_result, lq_spectrum, lq_value, measure_dimensions
from .scenes import Scene, SceneParseError, load_scene, with_measure
from .simplex_opt import SEED_ENV
from . import worked_examples as wx

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    """Malformed command-line input (exit code 2)."""


class InvalidScene(ValueError):
    """Scene parses but fails validation (exit code 1)."""


def fmt(x) -> str:
    """Twelve significant digits, locale independent."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _json_value(x):
    if isinstance(x, dict):
        return {str(k): _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_value(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return float(f"{x:.12g}") if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _json_value(x.tolist())
    if isinstance(x, Fraction):
        return str(x)
    return x


def dump_json(obj) -> str:
    return json.dumps(_json_value(obj), indent=2)


def ordering_label(sigma: Sequence[int]) -> str:
    """1-based coordinate tuple, e.g. ``(1,2)``."""
    return "(" + ",".join(str(k + 1) for k in sigma) + ")"


def parse_measure(text: str) -> list[float]:
    try:
        return [float(Fraction(part.strip())) for part in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse --measure {text!r}: {exc}") from exc


def parse_range(text: str) -> list[int]:
    """``"10..20"`` (inclusive), a single integer, or a comma list."""
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split("..", 1))
            if hi < lo:
                raise ValueError("empty range")
            return list(range(lo, hi + 1))
        return [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"cannot parse exponent range {text!r}: {exc}") from exc


def q_grid(q_min: float, q_max: float, steps: int) -> np.ndarray:
    if q_min == q_max:
        return np.array([q_min])
    if steps < 2:
        raise UsageError("--q-steps must be at least 2 when --q-min < --q-max")
    if q_max < q_min:
        raise UsageError("--q-max must not be below --q-min")
    return np.linspace(q_min, q_max, steps)


def _scene(args) -> Scene:
    scene = load_scene(args.scene)
    if getattr(args, "measure", None):
        weights = parse_measure(args.measure)
        if len(weights) != scene.ifs.size:
            raise UsageError(f"--measure has {len(weights)} weights for {scene.ifs.size} maps")
        try:
            scene = with_measure(scene, weights)
        except ValueError as exc:
            raise UsageError(f"--measure: {exc}") from exc
    return scene


def _require_valid(scene: Scene) -> None:
    report = validate(scene.ifs)
    if not report.ok:
        raise InvalidScene("invalid scene: " + "; ".join(v.message for v in report.violations))


def _write(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


# commands

def cmd_validate(args) -> int:
    scene = _scene(args)
    ifs = scene.ifs
    report = validate(ifs)
    out = {
        "scene": scene.name or args.scene,
        "maps": ifs.size,
        "dim": ifs.dim,
        "valid": report.ok,
        "violations": [{"kind": v.kind, "message": v.message,
                        "map": None if v.index is None else v.index + 1,
                        "coordinate": None if v.coordinate is None else v.coordinate + 1}
                       for v in report.violations],
    }
    sppc_ok = False
    if report.ok:
        adm = admissible_orderings(ifs)
        sppc = check_sppc(ifs, adm.admissible)
        sppc_ok = sppc.satisfied
        out["face_distance"] = float(report.face_distance)
        out["orderings"] = [{"ordering": [k + 1 for k in s], "status": st.status, "reason": st.reason}
                            for s, st in sorted(adm.statuses.items())]
        out["admissible"] = [[k + 1 for k in s] for s in adm.admissible]
        out["sppc"] = sppc.satisfied
        out["sppc_very_strong"] = sppc.very_strong
        out["sppc_witnesses"] = [{"ordering": [k + 1 for k in s], "level": n, "maps": [i + 1, j + 1]}
                                 for s, n, i, j in sppc.witnesses]
    if args.format == "json":
        _write(dump_json(out) + "\n", args.output)
    else:
        lines = [f"scene: {out['scene']}  ({ifs.size} maps in dimension {ifs.dim})",
                 f"valid: {fmt(report.ok)}"]
        for v in out["violations"]:
            lines.append(f"  violation [{v['kind']}]: {v['message']}")
        if report.ok:
            for s, st in sorted(adm.statuses.items()):
                lines.append(f"  ordering {ordering_label(s)}: {st.status} ({st.reason})")
            lines.append("admissible: " + " ".join(ordering_label(s) for s in adm.admissible))
            lines.append(f"separation condition: {fmt(out['sppc'])}"
                         f"  (very strong: {fmt(out['sppc_very_strong'])})")
            for w in out["sppc_witnesses"]:
                lines.append(f"  overlap at ordering {ordering_label(k - 1 for k in w['ordering'])}"
                             f" level {w['level']} between maps {w['maps'][0]} and {w['maps'][1]}")
        _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK if report.ok and sppc_ok else EXIT_INVALID


def cmd_spectrum(args) -> int:
    scene = _scene(args)
    _require_valid(scene)
    qs = q_grid(args.q_min, args.q_max, args.q_steps)
    res = lq_spectrum(scene.ifs, scene.measure, qs, threads=args.threads)
    if not res.sppc:
        print("warning: separation condition fails; values are the symbolic pressure",
              file=sys.stderr)
    header = ["q", "T", "argmax_ordering", "certified", "gap_to_upper_bound"]
    rows = [(q, T, ordering_label(s), c, g)
            for q, T, s, c, g in zip(res.q, res.T, res.argmax_ordering, res.certified, res.gap)]
    if args.format == "json":
        _write(dump_json({"sppc": res.sppc, "rows": [dict(zip(header, r)) for r in rows]}) + "\n",
               args.output)
    else:
        _write(_csv(header, rows), args.output)
    return EXIT_OK


def cmd_dimensions(args) -> int:
    scene = _scene(args)
    _require_valid(scene)
    ifs, mu = scene.ifs, scene.measure
    box = box_dimension_result(ifs)
    dims = measure_dimensions(ifs, mu)
    out = {
        "scene": scene.name or args.scene,
        "box_dimension": box.value,
        "box_dimension_certified": box.certified,
        "box_dimension_ordering": ordering_label(box.argmax_ordering),
        "frostman_dimension": dims.frostman,
        "box_dimension_of_measure": dims.box_of_measure,
        "closed_lower_bound_frostman": dims.closed_lower_frostman,
        "closed_upper_bound_box_of_measure": dims.closed_upper_box,
        "measure_dimensions_certified": dims.certified,
        "per_ordering": {
            ordering_label(s): {
                "closed_lower": e.bounds.lower[-1],
                "closed_upper": e.bounds.upper[-1],
                "inf": e.inf_value,
                "inf_certified": e.inf_certified,
                "inf_stack": [list(p) for p in e.inf_stack.levels],
                "sup": e.sup_value,
                "sup_certified": e.sup_certified,
                "sup_stack": [list(p) for p in e.sup_stack.levels],
            }
            for s, e in dims.per_ordering.items()
        },
    }
    _write(dump_json(out) + "\n", args.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    scene = _scene(args)
    _require_valid(scene)
    ifs, mu = scene.ifs, scene.measure
    ks = parse_range(args.delta_exponents)
    A = admissible_orderings(ifs).admissible
    phi = lq_potential(ifs, mu, args.q, A)
    reference = lq_value(ifs, mu, args.q).value
    budget = args.budget
    rows, skipped = [], False
    for k in ks:
        delta = Fraction(1, 2 ** k)
        start = time.perf_counter()
        try:
            check_budget(ifs, delta, budget)
            est = finite_scale_pressure(ifs, phi, delta, budget=budget)
        except BudgetExceeded as exc:
            skipped = True
            rows.append({"k": k, "delta": 2.0 ** -k, "status": "skipped",
                         "message": f"{exc.count} cubes exceed budget {exc.budget}"})
            continue
        scale = k * math.log(2.0)
        rows.append({
            "k": k, "delta": est.delta, "estimate": est.estimate, "variational": reference,
            "gap": abs(est.estimate - reference), "cubes": sum(est.counts.values()),
            "per_ordering": {ordering_label(s): v / scale for s, v in sorted(est.log_sums.items())},
            "seconds": time.perf_counter() - start, "status": "ok", "message": "",
        })
    if args.format == "json":
        _write(dump_json({"q": args.q, "variational": reference, "rows": rows}) + "\n", args.output)
    else:
        labels = [ordering_label(s) for s in A]
        header = (["k", "delta", "estimate", "variational", "gap"]
                  + [f"contribution_{lab}" for lab in labels]
                  + ["cubes", "seconds", "status", "message"])
        table = []
        for r in rows:
            if r["status"] == "ok":
                table.append([r["k"], r["delta"], r["estimate"], r["variational"], r["gap"]]
                             + [r["per_ordering"].get(lab, float("nan")) for lab in labels]
                             + [r["cubes"], r["seconds"], "ok", ""])
            else:
                table.append([r["k"], r["delta"], "", "", ""] + [""] * len(labels)
                             + ["", "", "skipped", r["message"]])
        _write(_csv(header, table), args.output)
    if skipped:
        print("some scales were skipped: cube count exceeds the budget", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_legendre(args) -> int:
    scene = _scene(args)
    _require_valid(scene)
    qs = q_grid(args.q_min, args.q_max, args.q_steps)
    if qs.size < 2:
        raise UsageError("the Legendre transform needs at least two q values")
    res = lq_spectrum(scene.ifs, scene.measure, qs, threads=args.threads)
    alpha, f = legendre_transform(res.q, res.T)
    if args.format == "json":
        _write(dump_json({"alpha": alpha, "f": f}) + "\n", args.output)
    else:
        _write(_csv(["alpha", "f"], list(zip(alpha, f))), args.output)
    return EXIT_OK


def cmd_worked_examples(args) -> int:
    lines, ok = [], True
    lines.append("planar carpet, measure (u, 1-u): computed spectrum vs closed form on q in [-3, 3]")
    for u in wx.CARPET_U_VALUES:
        r = wx.carpet_comparison(u, threads=args.threads)
        ok &= r.passed
        lines.append(f"  {'PASS' if r.passed else 'FAIL'} u={fmt(u)} transition q*={fmt(wx.carpet_transition(u))}"
                     f" max error closed branches={fmt(r.max_error_closed)}"
                     f" affine branch={fmt(r.max_error_affine)} ({r.seconds:.1f} s)")
        if not r.passed:
            for q, c, ref, b in zip(r.q, r.computed, r.reference, r.branches):
                if abs(c - ref) > (1e-4 if b == "affine" else 1e-6):
                    lines.append(f"    q={fmt(q)} computed={fmt(c)} expected={fmt(ref)} ({b})")
    g = wx.fraser_jurga_grid()
    lines.append(f"stacked 3D sponge grid: N in {list(wx.GRID_NS)}, step {wx.GRID_STEP},"
                 f" {g.points} points ({g.skipped} skipped as outside the family) in {g.seconds:.1f} s")
    for k in (1, 2, 3):
        bad = g.violations[k]
        lines.append(f"  {'PASS' if not bad else 'FAIL'} condition ({k}): {len(bad)} violations")
        for pt in bad[:10]:
            lines.append(f"    counterexample a={fmt(pt.a)} b={fmt(pt.b)} c={fmt(pt.c)} N={pt.N}")
    for label, count in (("first", g.first_outside), ("second", g.second_outside)):
        lines.append(f"  {'PASS' if count else 'FAIL'} {label} dominant type infeasible"
                     f" at {count} grid points")
    if not g.second_outside:
        probe = wx.narrow_gap_probe()
        if probe is not None:
            lines.append(f"    off the grid: a={fmt(probe.a)} b={fmt(probe.b)} c={fmt(probe.c)}"
                         f" N={probe.N} has second-type min coefficient"
                         f" {fmt(probe.second_min_coefficient)}")
    ok &= g.passed
    lines.append("overall: " + ("PASS" if ok else "FAIL"))
    _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sponge-spectra",
        description="L^q spectra and dimensions of self-affine measures on diagonal sponges.",
        epilog=f"Set {SEED_ENV} (an integer, a range a..b or a comma list) to override the optimizer seeds.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, measure=True, fmt_choices=("csv", "json"), default_fmt="csv"):
        p.add_argument("--scene", required=True, help="scene file or built-in scene name")
        if measure:
            p.add_argument("--measure", help='comma-separated weights, e.g. "0.6,0.4"')
        p.add_argument("--format", choices=fmt_choices, default=default_fmt)
        p.add_argument("--output", help="write to this file instead of stdout")

    def qflags(p):
        p.add_argument("--q-min", type=float, default=-3.0)
        p.add_argument("--q-max", type=float, default=3.0)
        p.add_argument("--q-steps", type=int, default=61)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("validate", help="check the scene, list admissible orderings and separation")
    common(p, fmt_choices=("text", "json"), default_fmt="text")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectrum", help="L^q spectrum on a q grid")
    common(p)
    qflags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dimensions", help="box dimension of the set and extreme dimensions of the measure")
    common(p, fmt_choices=("json",), default_fmt="json")
    p.set_defaults(func=cmd_dimensions)

    p = sub.add_parser("oracle", help="finite-scale pressure by exhaustive cube enumeration")
    common(p)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--delta-exponents", default="10..16", help='scales 2^-k, e.g. "10..20"')
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("legendre", help="discrete Legendre transform of the spectrum")
    common(p)
    qflags(p)
    p.set_defaults(func=cmd_legendre)

    p = sub.add_parser("worked-examples", aliases=["paper-examples"],
                       help="reproduce the carpet spectrum and the 3D sponge grid search")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--output")
    p.set_defaults(func=cmd_worked_examples)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SceneParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidScene as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
