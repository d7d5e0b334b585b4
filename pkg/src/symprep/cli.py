"""Command-line interface: ``symprep <subcommand> [flags]``.

Exit codes: 0 success, 1 domain or usage error, 2 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import ansatz_a, ansatz_e, gate_counts
from .core_sim import Circuit, circuit_to_dict
from .span_verify import VerifyConfig, as_parametrized, fidelity_sweep, span_fidelity, sweep_csv, \
    unfreeze_schedule
from .symmetry import DomainError, SpinLayout, make_sector
from .vqe import VqeConfig, parse_hamiltonian, vqe_minimize

FAMILIES = ("a", "a-sz", "e", "e-spin")


class UsageError(Exception):
    pass


class InvariantError(Exception):
    """An internal consistency check failed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------- ansatz selection

def _family(args) -> str:
    if args.ansatz:
        return args.ansatz
    if args.s is not None:
        return "e-spin"
    if args.sz is not None:
        return "a-sz"
    return "a"


def make_ansatz(family: str, n: int, m: int, sz=None, s=None, tr: bool = False):
    """(parametrized object, sector, real targets) for an ansatz family."""
    if family == "a":
        c = ansatz_a.build_general(n, m, ansatz_a.AnsatzOptions(time_reversal=tr))
        return c, make_sector(n, m), tr
    if family == "a-sz":
        if sz is None:
            raise DomainError("a-sz needs --sz")
        c = ansatz_a.build_sz(n, m, sz, time_reversal=tr)
        return c, make_sector(n, m, sz=sz, layout=SpinLayout.BLOCK), tr
    if family == "e":
        return ansatz_e.e_ansatz(n, m, phases=not tr), make_sector(n, m), tr
    if family == "e-spin":
        if s is None or sz is None:
            raise DomainError("e-spin needs --s and --sz")
        sec = make_sector(n, m, sz=sz, s=s, layout=SpinLayout.INTERLEAVED)
        return ansatz_e.e_ansatz(n, m, s=s, sz=sz), sec, True
    raise DomainError(f"unknown ansatz family {family!r}")


def _add_sector_flags(p, family=True):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sz", default=None, help="spin projection, e.g. 0 or 1/2")
    p.add_argument("--s", default=None, help="total spin, e.g. 0 or 1/2")
    p.add_argument("--tr", action="store_true", help="time-reversal (real) variant")
    if family:
        p.add_argument("--ansatz", choices=FAMILIES, default=None)


def _verify_config(args, real) -> VerifyConfig:
    return VerifyConfig(n_targets=args.targets, restarts=args.restarts, seed=args.seed,
                        real_targets=real, threads=args.threads)


# ---------------------------------------------------------------- subcommands

def _build_circuit(args) -> Circuit:
    if args.fig:
        return {"1": ansatz_a.build_fig1, "3": lambda: ansatz_a.build_fig3(time_reversal=args.tr),
                "4": ansatz_a.build_fig4, "s5": ansatz_a.build_sz_fig_s5}[args.fig]()
    if args.n is None or args.m is None:
        raise UsageError("build needs --n and --m (or --fig)")
    if args.sz is not None:
        return ansatz_a.build_sz(args.n, args.m, args.sz, time_reversal=args.tr)
    xs = None
    if args.x_placement:
        xs = tuple(int(q) for q in args.x_placement.split(","))
    return ansatz_a.build_general(args.n, args.m,
                                  ansatz_a.AnsatzOptions(time_reversal=args.tr, x_placement=xs))


def _gate_rows(c: Circuit) -> str:
    lines = ["index,kind,targets,controls,params"]
    for i, g in enumerate(c.gates):
        ctrl = " ".join(f"{q}:{p}" for q, p in g.controls)
        par = " ".join(f"free{p.slot}" if hasattr(p, "slot") else repr(p.value()) for p in g.params)
        lines.append(f"{i},{g.kind},{' '.join(map(str, g.targets))},{ctrl},{par}")
    return "\n".join(lines) + "\n"


def cmd_build(args) -> str:
    c = _build_circuit(args)
    if args.format == "csv":
        return _gate_rows(c)
    d = circuit_to_dict(c)
    d["a_gates"] = c.count("A")
    return _dump_json(d)


def cmd_span_verify(args) -> str:
    fam = _family(args)
    obj, sec, real = make_ansatz(fam, args.n, args.m, args.sz, args.s, args.tr)
    rep = span_fidelity(obj, sec, _verify_config(args, real))
    out = rep.to_dict()
    out.update(ansatz=fam, sector=sec.label(), seed=args.seed, real_targets=real)
    if args.format == "csv":
        return ("ansatz,sector,n_params,n_targets,mean_fidelity,min_fidelity,failures\n"
                f"{fam},\"{sec.label()}\",{rep.n_params},{rep.n_targets},"
                f"{rep.mean:.10f},{rep.min:.10f},{rep.failures}\n")
    return _dump_json(out)


def cmd_sweep(args) -> str:
    fam = _family(args)
    obj, sec, real = make_ansatz(fam, args.n, args.m, args.sz, args.s, args.tr)
    d = as_parametrized(obj).n_free
    rows = fidelity_sweep(obj, sec, unfreeze_schedule(range(d)), _verify_config(args, real))
    if args.format == "json":
        return _dump_json([dict(params=k, **r.to_dict()) for k, r in rows])
    return sweep_csv(rows)


def cmd_counts(args) -> str:
    m_max = args.m_max if args.m_max is not None else args.n - 1
    if not 1 <= m_max < args.n:
        raise DomainError("need 1 <= m-max < n")
    rng = range(1, m_max + 1)
    if args.format == "json":
        return _dump_json([gate_counts.cnot_comparisons(args.n, m).to_dict() for m in rng])
    return gate_counts.emit_fig6_csv(args.n, rng, sci=args.sci)


def cmd_dims(args) -> str:
    if args.n_min < 2 or args.n_max < args.n_min:
        raise DomainError("need 2 <= n-min <= n-max")
    ns = range(args.n_min, args.n_max + 1)
    if args.format == "json":
        keys = ("full", "number_m_half", "sz0", "s0")
        return _dump_json([dict(n=n, **dict(zip(keys, gate_counts.fig7_row(n)))) for n in ns])
    return gate_counts.emit_fig7_csv(ns, sci=args.sci)


def cmd_decompose(args) -> str:
    if args.fixture:
        c = ansatz_e.fixture_e4() if args.fixture == "e4" else ansatz_e.fixture_e6()
        n = c.n_qubits
        cost = ansatz_e.toffoli_cost(n, circuit=c)
        label = args.fixture
    else:
        if args.n is None or args.m is None:
            raise UsageError("decompose needs --n and --m (or --fixture)")
        c = ansatz_e.decompose_gray(ansatz_e.gray_order(args.n, args.m))
        cost = ansatz_e.toffoli_cost(args.n, args.m, args.s, args.sz)
        if args.s is None and args.sz is None:
            cost = ansatz_e.toffoli_cost(args.n, args.m, circuit=c)
        label = f"E{args.n}{args.m}"
    cd = {"n_toffoli": cost.n_toffoli, "cnot_exact": cost.cnot_exact,
          "cnot_approx": cost.cnot_approx, "cnot_numeric": cost.cnot_numeric,
          "schedule": list(cost.schedule) if cost.schedule else None}
    if args.format == "csv":
        return ("label,n_toffoli,cnot_exact,cnot_approx,cnot_numeric\n"
                f"{label},{cost.n_toffoli},{cost.cnot_exact},"
                f"{'' if cost.cnot_approx is None else cost.cnot_approx},"
                f"{'' if cost.cnot_numeric is None else cost.cnot_numeric}\n")
    return _dump_json({"label": label, "circuit": circuit_to_dict(c), "cost": cd,
                       "single_qubit_gates": sum(len(g.qubits()) == 1 for g in c.gates)})


def cmd_vqe(args) -> str:
    try:
        with open(args.ham, encoding="utf-8") as fh:
            h = parse_hamiltonian(fh.read())
    except OSError as e:
        raise DomainError(f"cannot read {args.ham}: {e.strerror}") from None
    n = args.n if args.n is not None else h.n
    if n != h.n:
        raise DomainError(f"--n {n} does not match the Hamiltonian's {h.n} qubits")
    fam = _family(args)
    obj, sec, _ = make_ansatz(fam, n, args.m, args.sz, args.s, args.tr)
    cfg = VqeConfig(restarts=args.restarts, seed=args.seed, threads=args.threads)
    res = vqe_minimize(h, obj, cfg, sector=sec, layout=sec.layout)
    if res.delta_e is not None and res.delta_e < -1e-9:
        raise InvariantError(f"variational bound violated by {-res.delta_e:.3e}")
    out = res.to_dict()
    out.update(ansatz=fam, sector=sec.label(), seed=args.seed)
    if args.format == "csv":
        return ("ansatz,sector,energy,delta_e,s2,sz,iterations\n"
                f"{fam},\"{sec.label()}\",{res.energy!r},{res.delta_e!r},{res.s2!r},{res.sz!r},"
                f"{res.iterations}\n")
    return _dump_json(out)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--output", "-o", default=None, help="write here instead of stdout")

    def fmt(p, default):
        p.add_argument("--format", choices=("csv", "json"), default=default)

    top = _Parser(prog="symprep", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("build", parents=[common], help="emit an A-gate circuit")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sz", default=None)
    p.add_argument("--tr", action="store_true")
    p.add_argument("--x-placement", default=None, help="comma-separated qubits")
    p.add_argument("--fig", choices=("1", "3", "4", "s5"), default=None)
    fmt(p, "json")
    p.set_defaults(func=cmd_build)

    for name, func, default, hlp in (
            ("span-verify", cmd_span_verify, "json", "mean overlap with random sector targets"),
            ("sweep", cmd_sweep, "csv", "fidelity against unfrozen parameter count")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        _add_sector_flags(p)
        p.add_argument("--targets", type=int, default=200)
        p.add_argument("--restarts", type=int, default=16)
        fmt(p, default)
        p.set_defaults(func=func)

    p = sub.add_parser("counts", parents=[common], help="CNOT-count comparison table")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-max", type=int, default=None)
    p.add_argument("--sci", action="store_true")
    fmt(p, "csv")
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("dims", parents=[common], help="Hilbert-space dimension series")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--sci", action="store_true")
    fmt(p, "csv")
    p.set_defaults(func=cmd_dims)

    p = sub.add_parser("decompose", parents=[common], help="E-gate Gray decomposition and costs")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--sz", default=None)
    p.add_argument("--s", default=None)
    p.add_argument("--fixture", choices=("e4", "e6"), default=None)
    fmt(p, "json")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("vqe", parents=[common], help="run VQE on a Pauli Hamiltonian file")
    p.add_argument("--ham", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sz", default=None)
    p.add_argument("--s", default=None)
    p.add_argument("--tr", action="store_true")
    p.add_argument("--ansatz", choices=FAMILIES, default=None)
    p.add_argument("--restarts", type=int, default=8)
    fmt(p, "json")
    p.set_defaults(func=cmd_vqe)
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        text = args.func(args)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return 1
    except InvariantError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except AssertionError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
