"""``fairshare`` command line.

Verbs: entitle, simulate, sweep, compare, plan, what-if, suggest.

Exit codes: 0 success, 2 usage error, 3 invalid scenario or input,
4 runtime failure (including planner non-convergence). Data goes to
stdout (or ``--output``), diagnostics to stderr. Table and CSV output start
with ``#`` comment lines describing the run unless ``--no-header`` is given;
nothing time-dependent is ever written, so equal inputs give equal bytes.

``FAIRSHARE_FORMAT`` sets the default output format.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import planner, simcore
from .domain import (
    ScenarioError,
    Scenario,
    check_scenario,
    emit_scenario,
    find_scenario,
    load_scenario,
    parse_scenario,
)
from .entitlements import EntitlementTable, NoActiveSharesError, effective_entitlements
from .planner import PlannerConvergenceError, PlanReport, Suggestion, WhatIf
from .simcore import GroupStats, MetricRecord, PolicyComparison, SimReport, UserStats

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 2, 3, 4
FORMATS = ("table", "csv", "json", "structured")
FORMAT_ENV = "FAIRSHARE_FORMAT"

# Per-user rows of a SimReport, in this order.
REPORT_COLUMNS = (
    "scenario", "policy", "user", "group", "processes", "shares",
    "entitlement_static", "entitlement_dynamic", "util", "tps",
    "work_tput_ms_per_s", "resp_mean_ms", "resp_p95_ms",
)
COMPARE_COLUMNS = (
    "scenario", "user", "group", "processes", "shares", "util_ts", "util_fs",
    "resp_ts_ms", "resp_fs_ms", "degradation",
)
ENTITLE_COLUMNS = ("user", "group", "shares", "active", "static", "dynamic", "effective", "cap")
PLAN_COLUMNS = (
    "scenario", "policy", "user", "group", "processes", "entitlement", "util", "tps",
    "work_tput_ms_per_s", "resp_mean_ms",
)
WHATIF_COLUMNS = (
    "hypothesis", "active", "user", "entitlement", "util", "resp_mean_ms",
    "d_entitlement", "d_util", "d_resp_ms", "resp_ratio",
)
SUGGEST_COLUMNS = ("user", "group", "measured", "shares", "entitlement", "wiggle_room")

_PERCENT = {"static", "dynamic", "effective", "entitlement", "entitlement_static",
            "entitlement_dynamic", "util", "util_ts", "util_fs", "measured", "cap"}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# rows


def _report_rows(r: SimReport) -> list[list[Any]]:
    return [
        [r.scenario, r.policy, u.user, u.group, u.processes, u.shares,
         u.entitlement_static, u.entitlement_dynamic, u.util, u.tps,
         u.work_tput_ms_per_s, u.resp_mean_ms, u.resp_p95_ms]
        for u in r.users
    ]


def _frame(obj: Any) -> tuple[Sequence[str], list[list[Any]]]:
    if isinstance(obj, SimReport):
        return REPORT_COLUMNS, _report_rows(obj)
    if isinstance(obj, (list, tuple)) and all(isinstance(r, SimReport) for r in obj):
        return REPORT_COLUMNS, [row for r in obj for row in _report_rows(r)]
    if isinstance(obj, PolicyComparison):
        rows = []
        for d in obj.degradation:
            t, f = obj.ts.user(d.user), obj.fs.user(d.user)
            rows.append([obj.fs.scenario, d.user, t.group, t.processes, t.shares,
                         t.util, f.util, d.resp_ts_ms, d.resp_fs_ms, d.ratio])
        return COMPARE_COLUMNS, rows
    if isinstance(obj, EntitlementTable):
        return ENTITLE_COLUMNS, [
            [e.user, e.group, e.shares, e.active, e.static_e, e.dynamic_e, e.effective_e, e.cap]
            for e in obj.rows
        ]
    if isinstance(obj, PlanReport):
        return PLAN_COLUMNS, [
            [obj.scenario, obj.policy, u.user, u.group, u.processes, u.entitlement,
             u.util, u.tps, u.work_tput_ms_per_s, u.resp_mean_ms]
            for u in obj.users
        ]
    if isinstance(obj, WhatIf):
        ent = {(h, u.user): u for h, rep in enumerate(obj.reports) for u in rep.users}
        rows = []
        for d in obj.deltas:
            u = ent[(d.hypothesis, d.user)]
            rows.append([d.hypothesis, " ".join(obj.reports[d.hypothesis].active), d.user,
                         u.entitlement, u.util, u.resp_mean_ms, d.d_entitlement,
                         d.d_util, d.d_resp_ms, d.resp_ratio])
        return WHATIF_COLUMNS, rows
    if isinstance(obj, Suggestion):
        a = obj.allocation
        return SUGGEST_COLUMNS, [
            [u.name, u.group, obj.measured.get(u.name),
             u.shares, u.shares / a.pool_total, u.name in obj.wiggle_room]
            for u in a.users
        ]
    raise TypeError(f"cannot render {type(obj).__name__}")


def _cell(v: Any, column: str, table: bool) -> str:
    if v is None:
        return "-" if table else ""
    if isinstance(v, bool):
        if table:
            return "yes" if v else "no"
        return "true" if v else "false"
    if isinstance(v, float):
        if table and column in _PERCENT:
            return f"{100 * v:.2f}%"
        return f"{v:.2f}" if table else f"{v:.6f}"
    return str(v)


def _csv(columns: Sequence[str], rows: list[list[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v, c, False) for v, c in zip(row, columns)])
    return buf.getvalue()


def _text_table(columns: Sequence[str], rows: list[list[Any]]) -> str:
    cells = [list(columns)] + [[_cell(v, c, True) for v, c in zip(row, columns)] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    lines = []
    for k, r in enumerate(cells):
        lines.append("  ".join(
            c.ljust(w) if i < 4 and not _numeric(c) else c.rjust(w)
            for i, (c, w) in enumerate(zip(r, widths))
        ).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _numeric(s: str) -> bool:
    return s.replace(".", "", 1).replace("%", "").replace("-", "", 1).isdigit()


# --------------------------------------------------------------------------
# structured documents


def _plain(obj: Any) -> Any:
    if isinstance(obj, Scenario):
        return emit_scenario(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, frozenset, set)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [_plain(v) for v in items]
    return obj


def _document(obj: Any) -> dict[str, Any]:
    if isinstance(obj, SimReport):
        return {"kind": "simulation", "report": _plain(obj)}
    if isinstance(obj, (list, tuple)) and all(isinstance(r, SimReport) for r in obj):
        return {"kind": "sweep", "reports": [_plain(r) for r in obj]}
    kinds = {
        PolicyComparison: "comparison", EntitlementTable: "entitlements",
        PlanReport: "plan", WhatIf: "what-if", Suggestion: "suggestion",
    }
    for cls, kind in kinds.items():
        if isinstance(obj, cls):
            return {"kind": kind, kind: _plain(obj)}
    raise TypeError(f"cannot render {type(obj).__name__}")


def _report_from(d: dict[str, Any]) -> SimReport:
    d = dict(d)
    d["users"] = tuple(UserStats(**u) for u in d["users"])
    d["groups"] = tuple(GroupStats(**g) for g in d["groups"])
    d["windows"] = tuple(
        MetricRecord(**{**w, "resp_samples": tuple(w["resp_samples"])}) for w in d["windows"]
    )
    if d.get("config") is not None:
        d["config"] = parse_scenario(d["config"])
    return SimReport(**d)


def parse_document(text: str | bytes) -> SimReport | list[SimReport]:
    """Inverse of the structured format for simulation and sweep output."""
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "simulation":
        return _report_from(doc["report"])
    if kind == "sweep":
        return [_report_from(r) for r in doc["reports"]]
    raise ValueError(f"unsupported document kind {kind!r}")


def emit_plot_data(report: Any, fmt: str = "csv", header: Iterable[str] = ()) -> bytes:
    """Serialize a result; identical inputs give identical bytes.

    ``header`` lines are written as ``#`` comments ahead of table or CSV
    output and are never part of structured output.
    """
    if fmt in ("json", "structured"):
        return (json.dumps(_document(report), indent=2, allow_nan=False) + "\n").encode()
    if fmt not in ("csv", "table"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, (list, tuple)) and not report:
        columns, rows = REPORT_COLUMNS, []
    else:
        columns, rows = _frame(report)
    body = _csv(columns, rows) if fmt == "csv" else _text_table(columns, rows)
    return ("".join(f"# {h}\n" for h in header) + body).encode()


# --------------------------------------------------------------------------
# argument handling


def parse_range(text: str) -> list[int]:
    """``1..50``, ``1..50:5`` or ``1,2,5``."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                span, _, step = part.partition(":")
                lo, hi = (int(x) for x in span.split(".."))
                out.extend(range(lo, hi + 1, int(step) if step else 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"bad process range {text!r}") from None
    if any(n < 0 for n in out):
        raise UsageError(f"negative process count in {text!r}")
    return out


def _pairs(items: Iterable[str], what: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items:
        for part in item.split(","):
            k, eq, v = part.partition("=")
            if not eq or not k:
                raise UsageError(f"{what}: expected name=value, got {part!r}")
            try:
                out[k.strip()] = float(v)
            except ValueError:
                raise UsageError(f"{what}: {v!r} is not a number") from None
    return out


def _names(items: Iterable[str] | None) -> list[str]:
    return [n for item in items or () for n in item.split(",") if n]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    default_fmt = os.environ.get(FORMAT_ENV, "table")
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=default_fmt if default_fmt in FORMATS else "table")
    common.add_argument("--output", "-o", help="write data here instead of stdout")
    common.add_argument("--no-header", action="store_true", help="omit the '#' run description")

    scen = _Parser(add_help=False)
    scen.add_argument("--scenario", "-s", required=True,
                      help="scenario file, or the name of a bundled scenario")
    scen.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    scen.add_argument("--policy", choices=("ts", "fs"), help="shorthand for --set scheduler.policy=...")

    p = _Parser(prog="fairshare", description="Time-share vs fair-share CPU scheduling simulator and planner.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    e = sub.add_parser("entitle", parents=[common, scen], help="entitlement table")
    e.add_argument("--active", action="append", help="users or groups with work (comma separated)")
    e.add_argument("--inactive", action="append", help="users or groups without work")

    sub.add_parser("simulate", parents=[common, scen], help="run one simulation")

    sw = sub.add_parser("sweep", parents=[common, scen], help="simulate over process counts")
    sw.add_argument("--processes", required=True, help="e.g. 1..50, 1..50:5 or 1,2,5")
    sw.add_argument("--users", action="append", help="users whose process count varies")
    sw.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    c = sub.add_parser("compare", parents=[common, scen], help="same workload under ts and fs")
    c.add_argument("--processes", type=int, help="process count for every active user")

    pl = sub.add_parser("plan", parents=[common, scen], help="analytic prediction")
    pl.add_argument("--active", action="append", help="users or groups with work")

    w = sub.add_parser("what-if", parents=[common, scen], help="predictions for several active sets")
    w.add_argument("--hypothesis", "-H", action="append", required=True,
                   help="comma separated active set; 'all' for every user with processes")

    sg = sub.add_parser("suggest", parents=[common], help="shares from measured consumption")
    sg.add_argument("--measured", action="append", required=True, help="user=fraction[,user=fraction...]")
    sg.add_argument("--pool", type=int, default=100)
    sg.add_argument("--resp-max", action="append", help="user=ms worst response under time-share")
    return p


def _scenario(args) -> tuple[Scenario, Path]:
    path = find_scenario(args.scenario)
    overrides = list(args.overrides)
    if args.policy:
        overrides.append(f"scheduler.policy={args.policy}")
    return check_scenario(load_scenario(path, overrides)), path


def _describe(verb: str, s: Scenario, path: Path) -> list[str]:
    return [
        f"fairshare {verb}",
        f"scenario {s.name} ({path.name}) policy={s.scheduler.policy} seed={s.seed}"
        f" duration_ms={s.duration_ms} warmup_ms={s.warmup_ms}",
    ]


def _dispatch(args) -> tuple[Any, list[str]]:
    verb = args.verb
    if verb == "suggest":
        measured = _pairs(args.measured, "--measured")
        resp = _pairs(args.resp_max, "--resp-max") if args.resp_max else None
        sugg = planner.suggest_shares(measured, args.pool, resp)
        for note in sugg.notes:
            print(f"note: {note}", file=sys.stderr)
        return sugg, [f"fairshare suggest pool={args.pool}"]

    s, path = _scenario(args)
    header = _describe(verb, s, path)
    if verb == "entitle":
        if args.active and args.inactive:
            raise UsageError("use --active or --inactive, not both")
        active = None
        if args.active:
            active = _names(args.active)
        elif args.inactive:
            gone = s.allocation.resolve(_names(args.inactive))
            active = [n for n in s.allocation.user_names if n not in gone]
        return effective_entitlements(s.allocation, active), header
    if verb == "simulate":
        return simcore.run(s), header
    if verb == "sweep":
        counts = parse_range(args.processes)
        if not counts:
            return [], header
        users = _names(args.users) or None
        return simcore.sweep(s, counts, users, jobs=max(1, args.jobs)), header
    if verb == "compare":
        if args.processes is not None:
            s = s.with_processes({u: args.processes for u in s.active_users})
        return simcore.compare_policies(s), header
    if verb == "plan":
        rep = planner.predict(s, None if args.active is None else _names(args.active))
        return rep, header + [f"iterations={rep.iterations} residual={rep.residual:.3g}"]
    if verb == "what-if":
        sets = [None if h.strip().lower() == "all" else _names([h]) for h in args.hypothesis]
        return planner.what_if(s, sets), header
    raise UsageError(f"unknown verb {verb!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        result, header = _dispatch(args)
        data = emit_plot_data(result, args.format, () if args.no_header else header)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (ScenarioError, NoActiveSharesError, FileNotFoundError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fairshare: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except PlannerConvergenceError as exc:
        print(f"fairshare: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"fairshare: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"fairshare: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        if args.output:
            Path(args.output).write_bytes(data)
        else:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
    except OSError as exc:
        print(f"fairshare: cannot write output: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
