"""Command-line front end.

Exit codes: 0 success, 1 parse/type/usage error, 2 state budget exhausted,
3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .corpus import CORPUS_DIR, digest
from .ergodicity import DEFAULT_M_MAX, NotCertified, certify_program, theorem4_bound
from .measure import measure_to_json, rational_to_json, tv
from .semantics import DEFAULT_STATE_BUDGET, Evaluator, StateBudgetExceeded, eval_prob
from .syntax import ParseError, SourceProgram, deep_recursion, parse, pretty
from .terms import Norm, Score, contains, free_vars
from .transforms import approx_all, compile_program, stat_sites
from .typecheck import TypeCheckError, kind_check

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_VERIFY = 0, 1, 2, 3
COMMANDS = ("eval", "compile", "approx", "verify", "check-eliminability")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str
    steps: str | None = None
    state_budget: int = DEFAULT_STATE_BUDGET
    m_max: int = DEFAULT_M_MAX
    format: str = "json"
    list_sites: bool = False
    output: str | None = None
    timing: bool = True


def read_source(name: str) -> SourceProgram:
    if name == "-":
        return SourceProgram(sys.stdin.read(), "<stdin>")
    path = Path(name)
    if not path.exists():
        # "corpus/foo.statl" also resolves against the bundled corpus
        bundled = CORPUS_DIR / path.name
        if path.parent.name == "corpus" and bundled.exists():
            path = bundled
        else:
            raise UsageError(f"no such file: {name}")
    return SourceProgram.from_file(path)


def parse_steps(text: str | None, n_sites: int) -> dict:
    if n_sites == 0:
        return {}
    if text is None:
        raise UsageError("--steps is required for programs with stat sites")
    text = text.strip()
    try:
        if "=" not in text:
            n = int(text)
            plan = {i: n for i in range(n_sites)}
        else:
            plan = {}
            for part in text.split(","):
                label, _, n = part.partition("=")
                plan[int(label)] = int(n)
    except ValueError:
        raise UsageError(f"bad --steps value {text!r}") from None
    if set(plan) != set(range(n_sites)):
        raise UsageError(f"--steps must cover the sites 0..{n_sites - 1}, got {sorted(plan)}")
    if any(n < 0 for n in plan.values()):
        raise UsageError("step counts must be nonnegative")
    return plan


def _measure_payload(mu, ty, kind) -> dict:
    payload = measure_to_json(mu.with_carrier(ty))
    payload["mass"] = rational_to_json(mu.mass)
    payload["kind"] = kind.label
    return payload


def _sites_payload(t, certs=None) -> list:
    out = []
    for site in stat_sites(t):
        entry = {"label": site.label, "path": site.path_str}
        if certs is not None:
            c = certs.get(site.label)
            entry["certificate"] = c.to_json() if c is not None else None
        out.append(entry)
    return out


def run(cfg: RunConfig) -> tuple[dict, int]:
    """Execute one command; returns the report and the exit code."""
    start = time.perf_counter()
    src = read_source(cfg.input)
    t = parse(src)
    kind, ty = kind_check([], t)
    if free_vars(t):
        raise UsageError(f"program has free variables {sorted(free_vars(t))}")
    if not kind.probabilistic:
        raise UsageError("expected a probabilistic program")
    report = {"command": cfg.command, "digest": digest(t)}
    code = EXIT_OK
    ev = Evaluator(cfg.state_budget)
    with deep_recursion():
        if cfg.command == "eval":
            report["result"] = _measure_payload(eval_prob(t, None, ev), ty, kind)
        elif cfg.command == "compile":
            c = compile_program(t)
            text = pretty(c)
            report["result"] = {"term": text, "digest": digest(c)}
            if cfg.output:
                Path(cfg.output).write_text(text + "\n", encoding="utf-8")
        elif cfg.command == "approx":
            plan = parse_steps(cfg.steps, len(stat_sites(t)))
            mu = eval_prob(approx_all(t, plan), None, ev)
            report["result"] = {"plan": {str(k): v for k, v in sorted(plan.items())},
                                "measure": _measure_payload(mu, ty, kind)}
        elif cfg.command == "check-eliminability":
            c = compile_program(t)
            mu, mc = eval_prob(t, None, ev), eval_prob(c, None, ev)
            dist = tv(mu, mc)
            report["result"] = {"tv": rational_to_json(dist), "source": _measure_payload(mu, ty, kind),
                                "compiled_digest": digest(c), "compiled": _measure_payload(mc, ty, kind)}
            report["pass"] = dist == 0
            code = EXIT_OK if dist == 0 else EXIT_VERIFY
        elif cfg.command == "verify":
            report, code = _verify(cfg, t, report, ev)
        else:
            raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.timing:
        report["wall_time_ms"] = round((time.perf_counter() - start) * 1000, 3)
    return report, code


def _verify(cfg: RunConfig, t, report: dict, ev: Evaluator) -> tuple[dict, int]:
    target = compile_program(t) if contains(t, Norm, Score) else t
    report["compiled"] = target is not t
    try:
        certs = certify_program(target, cfg.m_max, state_budget=cfg.state_budget)
    except NotCertified as exc:
        report["result"] = {"sites": _sites_payload(target), "error": str(exc), "site": exc.label}
        report["pass"] = False
        return report, EXIT_VERIFY
    if cfg.list_sites:
        report["result"] = {"sites": _sites_payload(target, certs)}
        report["pass"] = True
        return report, EXIT_OK
    plan = parse_steps(cfg.steps, len(certs))
    bound = theorem4_bound(target, plan, certs, evaluator=ev)
    result = bound.to_json()
    for entry in result["sites"]:
        entry["certificate"] = certs[entry["label"]].to_json()
    report["result"] = result
    report["pass"] = bound.sound
    return report, EXIT_OK if bound.sound else EXIT_VERIFY


def _text(report: dict) -> str:
    cmd = report["command"]
    res = report.get("result", {})
    lines = [f"{cmd}  digest {report['digest'][:16]}"]
    if cmd == "compile":
        return res["term"]
    if cmd == "eval":
        lines += [f"  {json.dumps(v)}: {w}" for v, w in res["support"]]
        lines.append(f"  mass {res['mass']}  kind {res['kind']}")
    elif cmd == "approx":
        lines.append(f"  plan {res['plan']}")
        lines += [f"  {json.dumps(v)}: {w}" for v, w in res["measure"]["support"]]
    elif cmd == "check-eliminability":
        lines.append(f"  tv {res['tv']}")
    elif cmd == "verify":
        if "error" in res:
            lines.append(f"  not certified: {res['error']}")
        for s in res.get("sites", []):
            if "contribution" in s:
                lines.append(f"  site {s['label']}: C={s['C']} rho={s['rho']} N={s['N']} -> {s['contribution']}")
            else:
                cert = s.get("certificate")
                extra = f" C={cert['C']} rho={cert['rho']}" if cert else ""
                lines.append(f"  site {s['label']} at {s['path']}{extra}")
        if "total" in res:
            lines.append(f"  total {res['total']}  empirical {res['empirical_tv']}")
    if "pass" in report:
        lines.append("  PASS" if report["pass"] else "  FAIL")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("input", help="a .statl file, or - for stdin")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--state-budget", type=int, default=DEFAULT_STATE_BUDGET)
        p.add_argument("--no-timing", action="store_true", help="omit wall_time_ms from the report")
        if name in ("approx", "verify"):
            p.add_argument("--steps", help="N for every site, or label=N,label=N,...")
        if name == "verify":
            p.add_argument("--m-max", type=int, default=DEFAULT_M_MAX)
            p.add_argument("--list-sites", action="store_true")
        if name == "compile":
            p.add_argument("-o", "--output", help="also write the compiled program here")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(command=args.command, input=args.input, steps=getattr(args, "steps", None),
                    state_budget=args.state_budget, m_max=getattr(args, "m_max", DEFAULT_M_MAX),
                    format=args.format, list_sites=getattr(args, "list_sites", False),
                    output=getattr(args, "output", None), timing=not args.no_timing)
    try:
        if cfg.state_budget <= 0 or cfg.m_max <= 0:
            raise UsageError("budgets must be positive")
        report, code = run(cfg)
    except ParseError as exc:
        print(json.dumps({"error": "parse", **exc.to_json()}), file=sys.stderr)
        return EXIT_INPUT
    except TypeCheckError as exc:
        print(json.dumps({"error": "type", **exc.to_json()}), file=sys.stderr)
        return EXIT_INPUT
    except UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    except StateBudgetExceeded as exc:
        print(json.dumps({"error": "state_budget", "budget": exc.budget, "message": str(exc)}), file=sys.stderr)
        return EXIT_BUDGET
    out = json.dumps(report, indent=2) if cfg.format == "json" else _text(report)
    print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
