"""Command-line front end: file formats, subcommands and the bundled examples."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import curves, hypotheses, integrate, iwasawa, tree
from .boundary import InsufficientDepth
from .padic import PrecisionError, factorize, is_prime

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- file formats

CURVE_KEYS = ("a1", "a2", "a3", "a4", "a6", "conductor")


def parse_curve_text(text: str, source: str = "<curve>") -> curves.CurveModel:
    values: dict[str, str] = {}
    asserted: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("asserted."):
            asserted.append((key[len("asserted."):], value))
        elif key in CURVE_KEYS or key == "label":
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key}")
            values[key] = value
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key}")
    missing = [k for k in CURVE_KEYS if k not in values]
    if missing:
        raise ConfigError(f"{source}: missing {', '.join(missing)}")
    try:
        ints = {k: int(values[k]) for k in CURVE_KEYS}
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    E = curves.CurveModel(**ints, label=values.get("label", ""), asserted=tuple(asserted))
    problems = E.validate()
    if problems:
        raise ConfigError(f"{source}: " + "; ".join(problems))
    return E


def load_curve(path: str) -> curves.CurveModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    return parse_curve_text(text, path)


def bundled_curve(name: str) -> curves.CurveModel:
    text = resources.files("mockplectic").joinpath("data", f"{name}.curve").read_text()
    return parse_curve_text(text, name)


def parse_point_system_text(text: str, source: str = "<points>") -> integrate.PointSystem:
    rows = [line.split("#", 1)[0].split() for line in text.splitlines()]
    rows = [r for r in rows if r]
    try:
        ints = [[int(x) for x in r] for r in rows]
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not ints or len(ints[0]) != 4:
        raise ConfigError(f"{source}: header must be 'p k depth rank'")
    p, k, depth, rank = ints[0]
    if not is_prime(p) or p < 5 or k < 1 or depth < 1 or rank < 1:
        raise ConfigError(f"{source}: bad header {ints[0]}")
    if len(ints) - 1 != depth:
        raise ConfigError(f"{source}: expected {depth} level lines, found {len(ints) - 1}")
    levels = []
    for n, row in enumerate(ints[1:], start=1):
        h = integrate.group_order(p, n)
        if len(row) != h * rank:
            raise ConfigError(f"{source}: level {n} needs {h * rank} integers, found {len(row)}")
        levels.append(np.array(row, dtype=np.int64).reshape(h, rank))
    return integrate.PointSystem(p, k, depth, rank, levels)


def format_point_system(ps: integrate.PointSystem) -> str:
    lines = [f"{ps.p} {ps.k} {ps.depth} {ps.rank}"]
    lines += [" ".join(str(int(x)) for x in ps.level(n).reshape(-1)) for n in range(1, ps.depth + 1)]
    return "\n".join(lines) + "\n"


def load_point_system(path: str) -> integrate.PointSystem:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    return parse_point_system_text(text, path)


def _index(s: str) -> frozenset:
    return frozenset(int(x) for x in s.split(",") if x.strip())


def parse_bipartite_json(text: str, source: str = "<bipartite>") -> iwasawa.BipartiteData:
    """JSON with p, k, primes, kappas {"l1,l2": [...]}, lambdas {"l": [...]},
    locs {"l1,l2|l": [[...], ...]}."""
    try:
        obj = json.loads(text)
        p, k = int(obj["p"]), int(obj["k"])
        data = iwasawa.BipartiteData(p, k, tuple(int(x) for x in obj["primes"]))
        for key, vec in obj.get("kappas", {}).items():
            data.kappas[_index(key)] = np.array(vec, dtype=np.int64)
        for key, coeffs in obj.get("lambdas", {}).items():
            data.lambdas[_index(key)] = iwasawa.IwasawaElem(p, k, tuple(int(c) for c in coeffs))
        for key, mat in obj.get("locs", {}).items():
            m, ell = key.split("|")
            data.locs[(_index(m), int(ell))] = np.array(mat, dtype=np.int64)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return data


# ---------------------------------------------------------------- reporting

@dataclass
class Report:
    machine: bool
    lines: list[tuple[str, str, str]] = field(default_factory=list)

    def add(self, section: str, key: str, value) -> None:
        if isinstance(value, bool):
            value = "yes" if value else "no"
        self.lines.append((section, key, str(value)))

    def render(self) -> str:
        if self.machine:
            return "\n".join(f"{s}.{k} = {v}" for s, k, v in self.lines)
        out, current = [], None
        for s, k, v in self.lines:
            if s != current:
                if current is not None:
                    out.append("")
                out.append(f"[{s}]")
                current = s
            out.append(f"{k} = {v}")
        return "\n".join(out)


def _echo_config(rep: Report, args: argparse.Namespace) -> None:
    for key, value in sorted(vars(args).items()):
        if key != "func":
            rep.add("config", key, value)


def _curve_from_args(args) -> curves.CurveModel:
    if getattr(args, "example", None):
        return bundled_curve(f"e{args.example}")
    if getattr(args, "curve", None):
        return load_curve(args.curve)
    raise ConfigError("give --curve FILE or --example {1,2,3}")


def _check_field(D: int) -> None:
    if D >= 0 or not curves.is_fundamental(D):
        raise ConfigError(f"{D} is not a negative fundamental discriminant")


def _check_prime(p: int) -> None:
    if not is_prime(p) or p < 5:
        raise ConfigError(f"p = {p} must be a prime >= 5")


# ---------------------------------------------------------------- commands

def cmd_check(args, rep: Report) -> int:
    E = _curve_from_args(args)
    _check_field(args.D)
    _check_prime(args.p)
    report = hypotheses.check_hypotheses(E, args.D, args.p)
    for line in report.lines:
        rep.add("hypotheses", line.name, f"{line.status} ({line.detail})")
    rep.add("hypotheses", "ok", report.ok)
    return EXIT_OK if report.ok else EXIT_CHECK


def cmd_ap(args, rep: Report) -> int:
    E = _curve_from_args(args)
    for ell in args.ell:
        if not is_prime(ell):
            raise ConfigError(f"{ell} is not prime")
    for ell in args.ell:
        if E.conductor % ell == 0:
            rep.add("ap", f"a_{ell}", f"{curves.bad_ap(E, ell)} (bad)")
        else:
            rep.add("ap", f"a_{ell}", curves.ap_count(E, ell))
    return EXIT_OK


def _lvalue_lines(rep: Report, section: str, name: str, L: curves.LValue) -> None:
    rep.add(section, f"{name}.root_number", f"{L.root_number:+d}")
    if L.exact_zero:
        rep.add(section, f"{name}.value", "0 (forced by the root number)")
    else:
        rep.add(section, f"{name}.value", f"{L.value:.10f}")
        rep.add(section, f"{name}.tail_bound", f"{L.bound:.2e}")
        rep.add(section, f"{name}.terms", L.terms)


def cmd_lvalue(args, rep: Report) -> int:
    E = _curve_from_args(args)
    if args.D is not None:
        _check_field(args.D)
        L, LD = curves.l_value_over_K(E, args.D, args.tolerance)
        _lvalue_lines(rep, "lvalue", "E", L)
        _lvalue_lines(rep, "lvalue", "twist", LD)
        rep.add("lvalue", "over_K.vanishes", L.vanishes(args.threshold) or LD.vanishes(args.threshold))
    else:
        L = curves.l_value(E, args.tolerance)
        _lvalue_lines(rep, "lvalue", "E", L)
        rep.add("lvalue", "E.vanishes", L.vanishes(args.threshold))
    return EXIT_OK


def cmd_sieve(args, rep: Report) -> int:
    E = _curve_from_args(args)
    _check_field(args.D)
    _check_prime(args.p)
    found = hypotheses.admissible_sieve(E, args.D, args.p, args.k, args.bound, args.start)
    rep.add("sieve", "count", len(found))
    for a in found:
        rep.add("sieve", f"ell_{a.ell}", f"{a.sign:+d}")
    return EXIT_OK


def cmd_tree(args, rep: Report) -> int:
    _check_prime(args.p)
    t = tree.TorusData(args.p, level=max(args.n, 2))
    rep.add("tree", "fixed_vertex", tree.torus_fixed_vertex(t))
    rep.add("tree", "generator", t.generator)
    for n in range(1, args.n + 1):
        rep.add("tree", f"sphere_{n}", len(tree.sphere(t, n)))
        rep.add("tree", f"orbit_{n}", len(set(tree.level_edges(t, n))))
        rep.add("tree", f"group_order_{n}", t.order(n))
    edges = tree.consecutive_edges(t, args.n)
    rep.add("tree", "consecutive_edges", " ".join(str(e.dst) for e in edges))
    return EXIT_OK


def _random_system(args) -> integrate.PointSystem:
    _check_prime(args.p)
    rng = np.random.default_rng(args.seed)
    return integrate.spread_point_system(args.p, args.k, args.depth, args.rank, rng)


def _system_from_args(args) -> integrate.PointSystem:
    if args.points:
        return load_point_system(args.points)
    return _random_system(args)


def cmd_integrate_demo(args, rep: Report) -> int:
    ps = _system_from_args(args)
    m = min(ps.depth - 1, ps.k)
    if m < 1:
        raise ConfigError("depth must be at least 2")
    t = tree.TorusData(ps.p, level=max(ps.depth, 2))
    mu = integrate.measure_from_point_system(ps, t)
    f = integrate.boundary_function(t, m + 2, args.orientation)
    riemann = integrate.integrate_mult(mu, f, m, convention=args.convention, orientation=args.orientation)
    inv = integrate.mock_invariant(ps, convention=args.convention)
    rep.add("integrate", "precision", f"p^{m}")
    rep.add("integrate", "riemann_product", " ".join(map(str, riemann.coeffs.reshape(-1))))
    rep.add("integrate", "derivative", " ".join(map(str, inv.value.reduce(m).coeffs.reshape(-1))))
    same = riemann == inv.value.reduce(m)
    rep.add("integrate", "routes_agree", same)
    return EXIT_OK if same else EXIT_CHECK


def cmd_derive(args, rep: Report) -> int:
    ps = _system_from_args(args)
    report = integrate.validate_point_system(ps)
    if not report.ok:
        raise ConfigError(f"invalid point system: {report.detail}")
    inv = integrate.mock_invariant(ps, convention=args.convention, multiplier=args.tate_val)
    for lvl in inv.ladder:
        rep.add("derive", f"D_{lvl.n}.precision", f"p^{lvl.precision}")
        rep.add("derive", f"D_{lvl.n}.value", " ".join(map(str, lvl.value.reshape(-1))))
    for n, ok in inv.certificate:
        rep.add("derive", f"certificate_{n}", ok)
    rep.add("derive", "stable_level", inv.stable_level if inv.stable_level is not None else "none")
    rep.add("derive", "multiplier", inv.multiplier)
    for note in inv.notes:
        rep.add("derive", "note", note)
    return EXIT_OK if all(ok for _, ok in inv.certificate) else EXIT_CHECK


def cmd_iwasawa(args, rep: Report) -> int:
    ps = _system_from_args(args)
    bip = None
    if args.bipartite:
        try:
            bip = parse_bipartite_json(Path(args.bipartite).read_text(), args.bipartite)
        except OSError as exc:
            raise ConfigError(str(exc)) from None
    kappa = iwasawa.kappa_from_system(ps, args.a_p, args.tate_val, args.truncation)
    order = kappa.ord_I()
    rep.add("iwasawa", "augmentation_zero", not np.any(kappa.augmentation()))
    rep.add("iwasawa", "ord_I", order if order < kappa.truncation else f">= {order}")
    status = EXIT_OK
    try:
        rb = iwasawa.rank_bound(order, kappa.truncation)
        rep.add("iwasawa", "char_order_bound", rb.char_order_bound)
        rep.add("iwasawa", "rank_bound", rb.rank_bound)
        rep.add("iwasawa", "verdict", rb.verdict)
    except iwasawa.RankBoundRefused as exc:
        rep.add("iwasawa", "rank_bound", f"refused ({exc})")
    table = iwasawa.selmer_split_table(args.eps, args.a_p, (args.delta_plus, args.delta_minus))
    rep.add("iwasawa", "forced_sign", f"{table.forced_sign:+d}")
    for c in table.candidates:
        rep.add("iwasawa", f"candidate_{c[0]}_{c[1]}", f"max(r+d) = {table.maxima[c]}")
    if bip is not None:
        res = iwasawa.validate_bipartite(bip)
        rep.add("bipartite", "checked", res.checked)
        rep.add("bipartite", "ok", res.ok)
        for m, ell, rel in res.failures:
            rep.add("bipartite", f"failure_{'_'.join(map(str, m)) or '1'}_{ell}", rel)
        if not res.ok:
            status = EXIT_CHECK
    return status


# ---------------------------------------------------------------- examples

@dataclass(frozen=True)
class ExampleFixture:
    name: str
    D: int
    p: int
    expect: dict


EXAMPLES = (
    ExampleFixture("e1", -8, 37, {"p_splitting": "inert", "reduction": "nonsplit-mult", "a_p": -1,
                                "eps_Q": -1, "eps_K": 1, "N_plus": 1, "N_minus": 1, "L_over_K_zero": True}),
    ExampleFixture("e2", -8, 109, {"p_splitting": "inert", "eps_K": 1, "N_plus": 1, "N_minus": 1,
                                 "L_E_nonzero": True, "L_over_K_zero": True}),
    ExampleFixture("e3", -7, 19, {"p_splitting": "inert", "split_43": "split", "factors": "19*43",
                               "eps_K": 1, "N_plus": 43, "N_minus": 1, "L_over_K_zero": True}),
)

L_TOLERANCE = 1e-6
L_ZERO = 1e-4
L_NONZERO = 1e-3


def example_row(ex: ExampleFixture) -> dict:
    E = bundled_curve(ex.name)
    K = hypotheses.FieldData(ex.D)
    info = curves.reduction_type(E, ex.p)
    fac = hypotheses.factor_N(E, K, ex.p)
    L, LD = curves.l_value_over_K(E, ex.D, L_TOLERANCE)
    row = {
        "curve": " ".join(map(str, E.ainvs)),
        "conductor": E.conductor,
        "factors": "*".join(str(q) for q in sorted(factorize(E.conductor))),
        "p": ex.p,
        "D": ex.D,
        "p_splitting": K.splitting(ex.p),
        "reduction": info.kind,
        "a_p": info.a_p,
        "tate_val": info.tate_val,
        "eps_Q": curves.root_number(E),
        "eps_twist": curves.root_number_twist(E, ex.D),
        "eps_K": curves.root_number_over_K(E, ex.D),
        "N_plus": fac.n_plus,
        "N_minus": fac.n_minus,
        "L_E": "0 (sign)" if L.exact_zero else f"{L.value:.8f}",
        "L_twist": "0 (sign)" if LD.exact_zero else f"{LD.value:.8f}",
        "L_E_nonzero": L.nonvanishing(L_NONZERO),
        "L_over_K_zero": L.vanishes(L_ZERO) or LD.vanishes(L_ZERO),
    }
    for ell, kind in fac.witness:
        row[f"split_{ell}"] = kind
    hyp = hypotheses.check_hypotheses(E, ex.D, ex.p)
    for line in hyp.lines:
        row[f"hyp.{line.name}"] = line.status
    for key, value in E.asserted:
        if key.startswith("rank"):
            row[f"asserted.{key}"] = value
    return row


def cmd_examples(args, rep: Report) -> int:
    status = EXIT_OK
    for ex in EXAMPLES:
        row = example_row(ex)
        for key, value in row.items():
            if isinstance(value, int) and not isinstance(value, bool) and key.startswith(("eps", "a_p")):
                value = f"{value:+d}"
            rep.add(ex.name, key, value)
        mismatches = [k for k, v in ex.expect.items() if row.get(k) != v]
        rep.add(ex.name, "fixture_ok", not mismatches)
        if mismatches:
            rep.add(ex.name, "mismatches", ",".join(mismatches))
            status = EXIT_CHECK
    return status


# ---------------------------------------------------------------- parser

def _add_curve_args(sp) -> None:
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--curve", help="curve file (key = value lines)")
    g.add_argument("--example", type=int, choices=(1, 2, 3), help="bundled example curve")


def _add_system_args(sp, depth: int = 2) -> None:
    sp.add_argument("--points", help="point-system file; random system if omitted")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--depth", type=int, default=depth)
    sp.add_argument("--rank", type=int, default=1)
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mockplectic", description=__doc__)
    parser.add_argument("--machine", action="store_true", help="emit section.key = value lines")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("check", help="hypothesis checklist for (E, K, p)")
    _add_curve_args(sp)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("ap", help="traces of Frobenius")
    _add_curve_args(sp)
    sp.add_argument("--ell", type=int, nargs="+", required=True)
    sp.set_defaults(func=cmd_ap)

    sp = sub.add_parser("lvalue", help="central L-values")
    _add_curve_args(sp)
    sp.add_argument("--D", type=int)
    sp.add_argument("--tolerance", type=float, default=L_TOLERANCE)
    sp.add_argument("--threshold", type=float, default=L_ZERO)
    sp.set_defaults(func=cmd_lvalue)

    sp = sub.add_parser("sieve", help="k-admissible primes")
    _add_curve_args(sp)
    sp.add_argument("--D", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--bound", type=int, default=5000)
    sp.add_argument("--start", type=int, default=2)
    sp.set_defaults(func=cmd_sieve)

    sp = sub.add_parser("tree", help="torus orbits on the tree")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--n", type=int, default=2)
    sp.set_defaults(func=cmd_tree)

    sp = sub.add_parser("integrate-demo", help="Riemann product against the derivative")
    _add_system_args(sp)
    sp.add_argument("--convention", type=int, choices=(1, -1), default=1)
    sp.add_argument("--orientation", type=int, choices=(1, -1), default=1)
    sp.set_defaults(func=cmd_integrate_demo)

    sp = sub.add_parser("derive", help="Kolyvagin-derivative ladder")
    _add_system_args(sp)
    sp.add_argument("--convention", type=int, choices=(1, -1), default=1)
    sp.add_argument("--tate-val", type=int, default=1)
    sp.set_defaults(func=cmd_derive)

    sp = sub.add_parser("iwasawa", help="kappa class, rank bound and split table")
    _add_system_args(sp)
    sp.add_argument("--bipartite", help="bipartite data (JSON)")
    sp.add_argument("--a-p", type=int, choices=(1, -1), default=-1)
    sp.add_argument("--eps", type=int, choices=(1, -1), default=-1)
    sp.add_argument("--tate-val", type=int, default=1)
    sp.add_argument("--truncation", type=int, default=iwasawa.DEFAULT_TRUNCATION)
    sp.add_argument("--delta-plus", type=int, default=0)
    sp.add_argument("--delta-minus", type=int, default=0)
    sp.set_defaults(func=cmd_iwasawa)

    sp = sub.add_parser("examples", help="reproduce the three bundled examples")
    sp.set_defaults(func=cmd_examples)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    rep = Report(args.machine)
    _echo_config(rep, args)
    start = time.perf_counter()
    try:
        status = args.func(args, rep)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PrecisionError, InsufficientDepth, ArithmeticError, ValueError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    if not args.machine:
        rep.add("run", "seconds", f"{time.perf_counter() - start:.2f}")
    print(rep.render())
    return status


if __name__ == "__main__":
    sys.exit(main())
