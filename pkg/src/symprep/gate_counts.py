"""CNOT-count analytics and circuit-level CNOT counting."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from fractions import Fraction
from math import comb, factorial

from .core_sim import Circuit, Fixed, GateInstance, X, expand_a_gates
from .symmetry import DomainError, dim_number, dim_spin, sz_count


def _check(n, m):
    if not (isinstance(n, int) and isinstance(m, int)) or not 0 < m < n:
        raise DomainError(f"need integers 0 < m < n, got n={n}, m={m}")


def cnot_ours(n: int, m: int) -> int:
    """Simplified CNOT count of the general A-gate circuit (three branches)."""
    _check(n, m)
    C = comb(n, m)
    if 2 * m < n:
        return 3 * C - 3 * m + 1
    if 2 * m == n:
        return 3 * C - 2 * m - 2
    return 3 * C - 3 * n + 3 * m + 1


def cnot_upper(n: int, m: int) -> int:
    _check(n, m)
    return 3 * comb(n, m)


def wang_exact(n: int, m: int) -> Fraction:
    return Fraction(2 ** (m + 1) * n ** m, factorial(m))


def wang_fig6(n: int, m: int) -> Fraction:
    """The reading 2^m n^m / m! that the plotted comparison series follows."""
    return Fraction(2 ** m * n ** m, factorial(m))


def ortiz(n: int, m: int) -> int:
    return comb(n, m) ** 2 * n ** 2


def bergholm(n: int) -> int:
    return 2 ** (n + 1) - 2 * n - 2


def multiplexer_full(n: int) -> int:
    return 2 ** (n + 2) - 4 * n - 4


def multiplexer_half(n: int) -> int:
    return 2 ** (n + 1) - 4


@dataclass(frozen=True)
class CountReport:
    n: int
    m: int
    ours_eq3: int
    ours_upper: int
    wang: int
    wang_exact: Fraction
    wang_fig6: Fraction
    ortiz: int
    bergholm: int
    multiplexer_full: int
    multiplexer_half: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wang_exact"] = str(self.wang_exact)
        d["wang_fig6"] = str(self.wang_fig6)
        return d


def cnot_comparisons(n: int, m: int) -> CountReport:
    _check(n, m)
    w = wang_exact(n, m)
    return CountReport(n, m, cnot_ours(n, m), cnot_upper(n, m), w.numerator // w.denominator, w,
                       wang_fig6(n, m), ortiz(n, m), bergholm(n), multiplexer_full(n),
                       multiplexer_half(n))


# Plotted values of the "ours" comparison series at n = 40, m = 1..39.
OURS_FIG6_REFERENCE_N40 = (
    "80", "2298", "29596", "274124", "1.97E+06", "1.15E+07", "5.59E+07", "2.31E+08",
    "8.20E+08", "2.54E+09", "6.94E+09", "1.68E+10", "3.61E+10", "6.96E+10", "1.21E+11",
    "1.89E+11", "2.66E+11", "3.40E+11", "3.94E+11", "4.14E+11", "3.94E+11", "3.40E+11",
    "2.66E+11", "1.89E+11", "1.21E+11", "6.96E+10", "3.61E+10", "1.68E+10", "6.94E+09",
    "2.54E+09", "8.20E+08", "2.31E+08", "5.59E+07", "1.15E+07", "1.97E+06", "274124",
    "29596", "2298", "80",
)


# ---------------------------------------------------------------- rendering

SCI_THRESHOLD = 10 ** 6


def render(v, sci: bool = False) -> str:
    """Integers verbatim, non-integral rationals as p/q; ``sci`` switches
    values at or above 1e6 (and all non-integers) to 6-significant-digit
    scientific notation."""
    if isinstance(v, Fraction) and v.denominator == 1:
        v = v.numerator
    if sci and (isinstance(v, Fraction) or abs(v) >= SCI_THRESHOLD):
        return f"{float(v):.5e}"
    return str(v)


FIG6_COLUMNS = ("m", "ours_eq3", "ours_upper", "wang", "wang_fig6", "ortiz", "bergholm",
                "multiplexer_full", "multiplexer_half")


def emit_fig6_csv(n: int, m_range=None, sci: bool = False) -> str:
    m_range = range(1, n) if m_range is None else m_range
    cols = list(FIG6_COLUMNS) + (["ours_fig6_reference"] if n == 40 else [])
    lines = [",".join(cols)]
    for m in m_range:
        r = cnot_comparisons(n, m)
        row = [str(m)] + [render(getattr(r, c), sci) for c in FIG6_COLUMNS[1:]]
        if n == 40:
            row.append(OURS_FIG6_REFERENCE_N40[m - 1])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def fig7_row(n: int) -> tuple:
    """(2^n, C(n, n//2), sz=0 count, singlet count) at half filling.

    The spin entries are None unless n/2 is even, i.e. sz = 0 and s = 0
    exist at m = n/2.
    """
    if n < 2:
        raise DomainError("Hilbert-space series need n >= 2")
    h = n // 2
    if n % 4:
        return 2 ** n, dim_number(n, h), None, None
    return 2 ** n, dim_number(n, h), sz_count(n, h, 0), dim_spin(n, h, 0)


def emit_fig7_csv(n_range, sci: bool = False) -> str:
    lines = ["n,full,number_m_half,sz0,s0"]
    for n in n_range:
        lines.append(",".join([str(n)] + ["" if v is None else render(v, sci) for v in fig7_row(n)]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- circuit counting

def _angle(p):
    return p.value() if isinstance(p, Fixed) else None


def _is_zero_rotation(g: GateInstance) -> bool:
    if g.kind not in ("Ry", "Rz"):
        return False
    a = _angle(g.params[0])
    return a is not None and abs(a) < 1e-15


def simplify_cnots(circuit: Circuit, control_one_to_x: bool = True) -> Circuit:
    """Peephole passes on an A-expanded circuit acting on |0...0>.

    - CNOT whose control is statically |0> is deleted.
    - CNOT whose control is statically |1> becomes X on the target
      (disable with ``control_one_to_x``).
    - Zero-angle Ry/Rz are deleted.
    - Adjacent identical CNOTs (no gate between them on either qubit) cancel.
    Static values are tracked per qubit; Rz keeps a basis value, anything
    else that is not a known-control CNOT or X makes it unknown.
    """
    c = expand_a_gates(circuit)
    known = {q: 0 for q in range(1, c.n_qubits + 1)}
    out = []
    for g in c.gates:
        if _is_zero_rotation(g):
            continue
        if g.kind == "X":
            t = g.targets[0]
            if known[t] is not None:
                known[t] ^= 1
            out.append(g)
            continue
        if g.kind == "CNOT":
            (cq, pol), t = g.controls[0], g.targets[0]
            kc = known[cq]
            if kc is not None:
                if kc != pol:
                    continue
                if control_one_to_x:
                    out.append(X(t))
                    if known[t] is not None:
                        known[t] ^= 1
                    continue
            if kc is None:
                known[t] = None
            elif known[t] is not None:
                known[t] ^= 1
            out.append(g)
            continue
        if g.kind == "Rz":
            out.append(g)
            continue
        for q in g.qubits():
            known[q] = None
        out.append(g)
    return Circuit(c.n_qubits, tuple(_cancel_pairs(out)), c.n_free)


def _cancel_pairs(gates: list) -> list:
    changed = True
    gates = list(gates)
    while changed:
        changed = False
        last = {}            # qubit -> index of the latest gate touching it
        keep = [True] * len(gates)
        for i, g in enumerate(gates):
            qs = g.qubits()
            if g.kind == "CNOT":
                prev = {last.get(q) for q in qs}
                if len(prev) == 1:
                    j = prev.pop()
                    if j is not None and keep[j] and gates[j] == g:
                        keep[i] = keep[j] = False
                        changed = True
                        for q in qs:
                            last.pop(q, None)
                        continue
            for q in qs:
                last[q] = i
        gates = [g for g, k in zip(gates, keep) if k]
    return gates


def count_circuit_cnots(circuit: Circuit, simplify: bool = False,
                        control_one_to_x: bool = True) -> int:
    """Two-qubit gate count: 3 per A gate plus literal CNOT/CZ, optionally after peephole passes."""
    if simplify:
        c = simplify_cnots(circuit, control_one_to_x)
        return sum(1 for g in c.gates if g.kind in ("CNOT", "CZ"))
    return sum(3 if g.kind == "A" else 1 for g in circuit.gates if g.kind in ("A", "CNOT", "CZ"))
