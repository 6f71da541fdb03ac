"""Command-line front end: ``qregion <subcommand> [options]``.

Exit status is 0 on success, 2 on invalid input (one diagnostic line on
stderr) and 3 when a request exceeds a capacity limit.  Every number is
printed in bits or qubits with nine decimals.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import classical, decouple, entropy, qstate, rateregion, rescalc, selftest, squashed
from .errors import CapacityError, DomainError, LabelError, QRegionError, StateFormatError
from .qstate import State

DEFAULT_SEED = 20240601
SEED_ENV = "QREGION_SEED"
DIGITS = 9

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_CAPACITY = 0, 1, 2, 3

SELFTEST_MODULE = {
    "entropy": "entropy", "mpinfo": "entropy", "esq": "squashed", "region": "rateregion",
    "vertices": "rateregion", "merge-region": "rateregion", "sw-region": "classical",
    "typical": "classical", "decouple": "decouple", "fqsw-rates": "decouple",
    "rescalc": "rescalc", "blackhole": "decouple",
}


class UsageError(QRegionError):
    """Malformed command-line input."""


# ---------------------------------------------------------------------------
# formatting


def fmt(x: float) -> str:
    x = float(x)
    if x == 0:
        x = 0.0  # drop negative zero
    return f"{x:.{DIGITS}f}"


def dump_json(obj, indent: int = 0) -> str:
    """JSON with every float written with nine decimals, keys in given order."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dump_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dump_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dump_json(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            return "null"
        return fmt(obj)
    return json.dumps(str(obj), ensure_ascii=False)


class Output:
    """One command result rendered as text, JSON or CSV."""

    def __init__(self, payload: dict, text: str, rows: list[list] | None = None):
        self.payload = payload
        self.text = text
        self.rows = rows

    def render(self, form: str) -> str:
        if form == "json":
            return dump_json(self.payload) + "\n"
        if form == "csv":
            rows = self.rows or [list(self.payload), list(self.payload.values())]
            return "".join(",".join(_cell(c) for c in r) + "\n" for r in rows)
        return self.text.rstrip("\n") + "\n"


def _cell(c) -> str:
    if isinstance(c, (bool, np.bool_)):
        return "true" if c else "false"
    if isinstance(c, (float, np.floating)):
        return fmt(c)
    text = str(c)
    return f'"{text}"' if "," in text else text


# ---------------------------------------------------------------------------
# state specs and label parsing


def _bell_plus_idle() -> qstate.PureState:
    amps = np.zeros(8, dtype=complex)
    # |Phi>^{A1 R} (x) |0>^{A2} with ordering A1 A2 R
    amps[0b000] = amps[0b101] = 1 / math.sqrt(2)
    return qstate.PureState(amps, (2, 2, 2), ("A1", "A2", "R"))


def parse_state(spec: str) -> State:
    """``bell``, ``ghz:m``, ``w:m``, ``product[:k]``, ``bell-plus-idle``, ``isotropic:v``, ``file:path``."""
    kind, _, arg = spec.partition(":")

    def number(cast):
        try:
            return cast(arg)
        except ValueError:
            raise UsageError(f"--state {spec}: bad parameter {arg!r}") from None

    if kind == "bell" and not arg:
        return qstate.bell()
    if kind == "ghz":
        return qstate.ghz(number(int))
    if kind == "w":
        return qstate.w_state(number(int))
    if kind == "product":
        return qstate.product_bell_pairs(number(int) if arg else 2)
    if kind == "bell-plus-idle" and not arg:
        return _bell_plus_idle()
    if kind == "isotropic":
        return qstate.isotropic(number(float))
    if kind == "file":
        try:
            obj = json.loads(Path(arg).read_text())
        except OSError as exc:
            raise UsageError(f"--state {spec}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise StateFormatError(f"$: invalid JSON ({exc.msg} at line {exc.lineno})") from None
        return qstate.state_from_json(obj)
    raise UsageError(f"unknown state spec {spec!r}")


def parse_labels(s: State, text: str) -> tuple[str, ...]:
    """Comma-separated labels or 0-based subsystem indices."""
    out = []
    for tok in (t.strip() for t in text.split(",")):
        if not tok:
            continue
        if tok in s.labels:
            out.append(tok)
        elif tok.isdigit() and int(tok) < s.n_systems:
            out.append(s.labels[int(tok)])
        else:
            raise LabelError(f"no subsystem {tok!r} in {list(s.labels)}")
    return tuple(out)


def parse_parts(s: State, text: str | None, exclude: Sequence[str] = ()) -> list[tuple[str, ...]]:
    """Semicolon-separated groups; default is one party per remaining label."""
    if text is None:
        return [(lab,) for lab in s.labels if lab not in exclude]
    return [parse_labels(s, g) for g in text.split(";") if g.strip()]


def parse_floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _need_state(args) -> State:
    if args.state is None:
        raise UsageError("--state is required")
    return parse_state(args.state)


def _default_ref(s: State, given: str | None) -> tuple[str, ...]:
    if given is not None:
        return parse_labels(s, given)
    return ("R",) if "R" in s.labels else (s.labels[-1],)


# ---------------------------------------------------------------------------
# subcommands


def cmd_entropy(args) -> Output:
    s = _need_state(args)
    subset = parse_labels(s, args.subset) if args.subset else s.labels
    given = parse_labels(s, args.given) if args.given else ()
    value = entropy.cond_entropy(s, subset, given) if given else entropy.von_neumann(s, subset)
    name = f"H({''.join(subset)}{'|' + ''.join(given) if given else ''})"
    return Output({"quantity": name, "value": value}, fmt(value))


def cmd_mpinfo(args) -> Output:
    s = _need_state(args)
    given = parse_labels(s, args.given) if args.given else ()
    parts = parse_parts(s, args.parts, given)
    value = entropy.cond_multiparty_info(s, parts, given) if given else entropy.multiparty_info(s, parts)
    return Output({"parts": [list(p) for p in parts], "given": list(given), "value": value}, fmt(value))


def cmd_esq(args) -> Output:
    s = _need_state(args)
    parts = parse_parts(s, args.parts)
    if args.pure:
        value = squashed.esq_pure(s, parts)
        return Output({"value": value, "method": "pure closed form"}, fmt(value))
    res = squashed.esq_optimize(s, parts, d_E=args.d_e, restarts=args.restarts, tol=args.tol,
                                seed=args.seed, threads=args.threads)
    payload = {"value": res.upper_bound, "method": res.label, "d_E": res.d_E,
               "restarts": res.restarts_used, "converged": res.converged}
    return Output(payload, f"{fmt(res.upper_bound)}  ({res.label})")


def _region_output(f: rateregion.SetFunction, emit: str, names: list[str]) -> Output:
    want = {e.strip() for e in emit.split(",") if e.strip()}
    if not want <= {"h", "v"}:
        raise UsageError(f"--emit takes h and/or v, got {emit!r}")
    desc = rateregion.export_region(f)
    lines, payload, rows = [], {"parties": names}, [["kind", *names, "c"]]
    if "h" in want:
        payload["halfspaces"] = [{"subset": sorted(k), "c": c} for k, c in desc.h_rep]
        for k, c in desc.h_rep:
            lines.append(f"{' + '.join(f'Q[{names[i]}]' for i in sorted(k))} >= {fmt(c)}")
            rows.append(["h", *[1 if i in k else 0 for i in range(f.m)], c])
    if "v" in want:
        payload["vertices"] = [list(map(float, v)) for v in desc.vertices]
        for v in desc.vertices:
            lines.append("vertex (" + ", ".join(fmt(x) for x in v) + ")")
            rows.append(["v", *map(float, v), ""])
    return Output(payload, "\n".join(lines), rows)


def cmd_region(args) -> Output:
    s = _need_state(args)
    ref = _default_ref(s, args.ref)
    parts = parse_parts(s, args.parts, ref)
    f = rateregion.inner_constants(s, parts, ref)
    return _region_output(f, args.emit, ["".join(p) for p in parts])


def cmd_vertices(args) -> Output:
    s = _need_state(args)
    ref = _default_ref(s, args.ref)
    parts = parse_parts(s, args.parts, ref)
    f = rateregion.inner_constants(s, parts, ref)
    corners = rateregion.corner_points_all(f)
    brute = rateregion.vertices_bruteforce(f)
    agree = len(corners) == len(brute) and all(
        np.allclose(a, b, atol=1e-8) for a, b in zip(corners, brute))
    names = ["".join(p) for p in parts]
    lines = ["(" + ", ".join(fmt(x) for x in v) + ")" for v in corners]
    lines.append(f"brute-force enumeration agrees: {'yes' if agree else 'no'}")
    payload = {"parties": names, "vertices": [list(map(float, v)) for v in corners],
               "bruteforce": [list(map(float, v)) for v in brute], "agree": agree}
    return Output(payload, "\n".join(lines), [names] + [list(map(float, v)) for v in corners])


def cmd_merge_region(args) -> Output:
    s = _need_state(args)
    parts = parse_parts(s, args.parts)
    f = rateregion.merging_region(s, parts)
    return _region_output(f, args.emit, ["".join(p) for p in parts])


def cmd_sw_region(args) -> Output:
    if args.probs is None or args.shape is None:
        raise UsageError("sw-region needs --probs and --shape")
    dist = entropy.Distribution(parse_floats(args.probs), parse_ints(args.shape))
    f = classical.classical_sw_setfunction(dist)
    return _region_output(f, args.emit, [f"X{i}" for i in range(f.m)])


def cmd_typical(args) -> Output:
    if args.probs is None:
        raise UsageError("typical needs --probs")
    probs = parse_floats(args.probs)
    ns = parse_ints(args.n)
    rows = [["n", "mass", "tail", "log_count", "bound_log_count", "rate"]]
    lines, reports = [], []
    for n in ns:
        r = classical.typical_stats(probs, n, args.epsilon)
        reports.append({"n": n, "mass": r.mass, "tail": r.tail, "log_count": r.log_count,
                        "bound_log_count": r.bound_log_count, "rate": r.rate})
        rows.append([n, r.mass, r.tail, r.log_count, r.bound_log_count, r.rate])
        lines.append(f"n={n} mass={fmt(r.mass)} log2|T|={fmt(r.log_count)} "
                     f"bound={fmt(r.bound_log_count)}")
    h = entropy.shannon(probs)
    return Output({"entropy": h, "epsilon": args.epsilon, "rows": reports},
                  f"H={fmt(h)}\n" + "\n".join(lines), rows)


def cmd_decouple(args) -> Output:
    s = _need_state(args)
    if not args.sender:
        raise UsageError("decouple needs --sender")
    sender = parse_labels(s, args.sender)
    ref = _default_ref(s, args.ref)
    reports = []
    for d1 in parse_ints(args.d_a1):
        cfg = decouple.DecouplingTrialConfig(s, sender, ref, d1, args.samples, args.seed)
        reports.append(decouple.decoupling_mc(cfg, threads=args.threads))
    rows = [["d_A1", "mean_sq_td", "rhs_bound", "stderr"]]
    rows += [[r.d_a1, r.mean_sq_td, r.rhs_bound, r.stderr] for r in reports]
    lines = [f"d_A1={r.d_a1} mean={fmt(r.mean_sq_td)} bound={fmt(r.rhs_bound)} "
             f"stderr={fmt(r.stderr)} holds={'yes' if r.holds else 'no'}" for r in reports]
    return Output({"reports": [r.to_dict() for r in reports]}, "\n".join(lines), rows)


def cmd_fqsw_rates(args) -> Output:
    s = _need_state(args)
    ref = _default_ref(s, args.ref)
    receiver = parse_labels(s, args.receiver) if args.receiver else ()
    senders = parse_parts(s, args.parts, ref + receiver)
    order = parse_ints(args.order) if args.order else list(range(len(senders)))
    if sorted(order) != list(range(len(senders))):
        raise UsageError(f"--order {args.order} is not a permutation of 0..{len(senders) - 1}")
    if args.qubits:
        chain = decouple.fqsw_chain_sim(s, senders, receiver, ref, order, parse_ints(args.qubits),
                                        args.samples, args.seed, threads=args.threads)
        d = chain.to_dict()
        lines = [f"{''.join(st.sender)}: rate={fmt(st.min_rate)} threshold={st.threshold_qubits} "
                 f"sent={st.qubits_sent} residual={fmt(st.report.mean_sq_td)}" for st in chain.steps]
        lines.append(f"chained residual={fmt(chain.chained_residual)} bound={fmt(chain.chained_bound)}")
        rows = [["sender", "min_rate", "threshold", "qubits_sent", "mean_sq_td"]]
        rows += [["".join(st.sender), st.min_rate, st.threshold_qubits, st.qubits_sent,
                  st.report.mean_sq_td] for st in chain.steps]
        return Output(d, "\n".join(lines), rows)
    steps, lines, rows = [], [], [["sender", "min_rate"]]
    for pos, j in enumerate(order):
        after = tuple(lab for k in order[pos + 1:] for lab in senders[k])
        rate = decouple.fqsw_min_rate(s, senders[j], after, ref)
        name = "".join(senders[j])
        steps.append({"sender": name, "peers_after": list(after), "min_rate": rate})
        lines.append(f"{name}: {fmt(rate)}")
        rows.append([name, rate])
    return Output({"order": order, "steps": steps}, "\n".join(lines), rows)


def _scale_factor(text: str, s: State | None, roles) -> float:
    if text.lower() == "half_iar":
        if s is None:
            raise UsageError("scale half_IAR needs --state")
        s2, r = rescalc._roles(s, roles)
        return 0.5 * entropy.mutual_info(s2, r["A"], r["R"])
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"bad scale factor {text!r}") from None


def cmd_rescalc(args) -> Output:
    s = parse_state(args.state) if args.state else None
    roles = {}
    for role in ("A", "B", "R"):
        val = getattr(args, f"role_{role.lower()}")
        if val:
            if s is None:
                raise UsageError("role labels need --state")
            roles[role] = parse_labels(s, val)
    if args.identity:
        if s is None:
            raise UsageError("--identity needs --state")
        rep = rescalc.verify_identity(s, args.identity, roles or None)
        payload = {"identity": rep.identity, "derived": rep.derived, "expected": rep.expected,
                   "residual": rep.residual, "holds": rep.holds, "inequality": str(rep.derivation)}
        text = (f"{rep.derivation}\n{rep.identity}: derived={fmt(rep.derived)} "
                f"expected={fmt(rep.expected)} holds={'yes' if rep.holds else 'no'}")
        return Output(payload, text)
    if not args.builtin:
        raise UsageError("rescalc needs --builtin or --identity")
    total = None
    for term in args.builtin:
        name, _, factor = term.partition("*")
        inq = rescalc.builtin(name, s, roles or None)
        if factor:
            inq = rescalc.scale(inq, _scale_factor(factor, s, roles or None))
        total = inq if total is None else rescalc.compose(total, inq)
    payload = total.to_dict()
    payload["text"] = str(total)
    return Output(payload, str(total))


def cmd_blackhole(args) -> Output:
    s = _need_state(args)
    if not args.subset:
        raise UsageError("blackhole needs --subset for the dropped system A")
    a = parse_labels(s, args.subset)
    if args.mode == "lost":
        if not args.b2 or not args.lost:
            raise UsageError("lost mode needs --b2 and --lost")
        value = decouple.blackhole_threshold(s, a, "lost", b2=parse_labels(s, args.b2),
                                             lost=parse_labels(s, args.lost))
    else:
        b = parse_labels(s, args.b) if args.b else None
        value = decouple.blackhole_threshold(s, a, "simple", b=b)
    return Output({"mode": args.mode, "threshold": value}, fmt(value))


COMMANDS: dict[str, Callable] = {
    "entropy": cmd_entropy, "mpinfo": cmd_mpinfo, "esq": cmd_esq, "region": cmd_region,
    "vertices": cmd_vertices, "merge-region": cmd_merge_region, "sw-region": cmd_sw_region,
    "typical": cmd_typical, "decouple": cmd_decouple, "fqsw-rates": cmd_fqsw_rates,
    "rescalc": cmd_rescalc, "blackhole": cmd_blackhole,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--state", help="bell, ghz:m, w:m, product[:k], bell-plus-idle, isotropic:v, file:path")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")
    common.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed (default: ${SEED_ENV} or {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--selftest", action="store_true", help="run this module's sanity checks")

    parser = _Parser(prog="qregion", description="Multiparty quantum information and rate regions.")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("entropy", "von Neumann entropy of a subset")
    p.add_argument("--subset", help="labels or 0-based indices, comma separated")
    p.add_argument("--given", help="conditioning subsystems")

    p = add("mpinfo", "multiparty information, optionally conditional")
    p.add_argument("--parts", help="groups separated by ';', members by ','")
    p.add_argument("--given", help="conditioning subsystems")

    p = add("esq", "squashed entanglement")
    p.add_argument("--parts")
    p.add_argument("--pure", action="store_true", help="closed form for pure states")
    p.add_argument("--d-e", type=int, default=2, help="extension dimension")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-7)

    for name, text in (("region", "inner-bound rate region"), ("vertices", "vertex enumeration check")):
        p = add(name, text)
        p.add_argument("--parts", help="sender groups (default: every label except the reference)")
        p.add_argument("--ref", help="reference system (default: R or the last label)")
        if name == "region":
            p.add_argument("--emit", default="h,v")

    p = add("merge-region", "state merging region f(K) = H(A_K|A_K^c)")
    p.add_argument("--parts")
    p.add_argument("--emit", default="h,v")

    p = add("sw-region", "classical Slepian-Wolf region")
    p.add_argument("--probs", help="flat joint distribution in C order")
    p.add_argument("--shape", help="alphabet sizes, comma separated")
    p.add_argument("--emit", default="h,v")

    p = add("typical", "exact typical-set statistics")
    p.add_argument("--probs")
    p.add_argument("--n", default="10,20,30", help="block lengths, comma separated")
    p.add_argument("--epsilon", type=float, default=0.1)

    p = add("decouple", "Monte Carlo decoupling check")
    p.add_argument("--sender", help="system A^S")
    p.add_argument("--ref", help="reference system")
    p.add_argument("--d-a1", default="2", help="dimensions of the sent part, comma separated")
    p.add_argument("--samples", type=int, default=200)

    p = add("fqsw-rates", "per-step FQSW rates and optional chain simulation")
    p.add_argument("--parts", help="sender groups")
    p.add_argument("--ref")
    p.add_argument("--receiver", help="systems already held by the receiver")
    p.add_argument("--order", help="sending order as 0-based sender indices")
    p.add_argument("--qubits", help="qubits sent per sender; enables the simulation")
    p.add_argument("--samples", type=int, default=100)

    p = add("rescalc", "resource inequality calculus")
    p.add_argument("--builtin", action="append",
                   help="NAME or NAME*FACTOR (FACTOR a number or half_IAR); repeat to compose")
    p.add_argument("--identity", choices=("hashing", "merging"))
    p.add_argument("--role-a")
    p.add_argument("--role-b")
    p.add_argument("--role-r")

    p = add("blackhole", "qubits radiated before the dropped system escapes")
    p.add_argument("--subset", help="system A dropped into the black hole")
    p.add_argument("--mode", choices=("simple", "lost"), default="simple")
    p.add_argument("--b", help="black hole systems (simple mode, default: the rest)")
    p.add_argument("--b2", help="radiating part B2 (lost mode)")
    p.add_argument("--lost", help="never-radiated part L (lost mode)")
    return parser


def _resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
    return DEFAULT_SEED


def _selftest(command: str, err) -> int:
    module = SELFTEST_MODULE[command]
    results = selftest.run(module)
    for name, ok in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {module}: {name}")
    failed = sum(not ok for _, ok in results)
    if failed:
        print(f"{failed} of {len(results)} checks failed", file=err)
        return EXIT_FAIL
    return EXIT_OK


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        if args.selftest:
            return _selftest(args.command, err)
        args.seed = _resolve_seed(args.seed)
        if args.threads < 1:
            raise DomainError("--threads must be >= 1")
        result = COMMANDS[args.command](args)
        text = result.render(args.format)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            out.write(text)
        return EXIT_OK
    except CapacityError as exc:
        print(f"qregion: capacity exceeded: {exc}", file=err)
        return EXIT_CAPACITY
    except QRegionError as exc:
        print(f"qregion: error: {_one_line(exc)}", file=err)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qregion: error: {exc.strerror}: {exc.filename}", file=err)
        return EXIT_INVALID


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
