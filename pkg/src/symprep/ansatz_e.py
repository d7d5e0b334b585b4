"""Hyperspherical E-gate machinery.

Coefficients over a Gray-ordered basis b_1..b_D are
c_j = cos(u_j) prod_{i<j} sin(u_i) with u_D = 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from math import comb
from typing import Callable

import numpy as np

from .core_sim import Circuit, Free, MCX, Ry, StateVector, X, circuit_from_dict
from .symmetry import (DomainError, SpinLayout, SymmetrySector, make_sector,
                       sector_projector_basis, twice)

E4_ORDER = ("1100", "1010", "0110", "0011", "1001", "0101")
E6_ORDER = tuple(
    "111000 110100 110010 110001 101001 101100 101010 100110 100101 100011 "
    "010011 010101 010110 011100 011010 011001 001101 001110 001011 000111".split())


# ---------------------------------------------------------------- Gray bases

@dataclass(frozen=True)
class GrayOrderedBasis:
    n: int
    m: int
    strings: tuple

    def __post_init__(self):
        s = tuple(self.strings)
        object.__setattr__(self, "strings", s)
        if len(set(s)) != len(s) or len(s) != comb(self.n, self.m):
            raise ValueError("basis must list every weight-m string once")
        for a in s:
            if len(a) != self.n or a.count("1") != self.m:
                raise ValueError(f"bad basis string {a!r}")
        for a, b in zip(s, s[1:]):
            if sum(x != y for x, y in zip(a, b)) != 2:
                raise ValueError(f"{a} -> {b} is not a two-bit change")

    @property
    def D(self) -> int:
        return len(self.strings)

    def indices(self) -> np.ndarray:
        return np.array([int(b, 2) for b in self.strings], dtype=np.int64)


def revolving_door(n: int, k: int) -> list:
    """Revolving-door combinations of {1..n}; neighbours differ by one swap."""
    if k == 0:
        return [()]
    if k == n:
        return [tuple(range(1, n + 1))]
    return revolving_door(n - 1, k) + [c + (n,) for c in reversed(revolving_door(n - 1, k - 1))]


def gray_order(n: int, m: int) -> GrayOrderedBasis:
    if not 0 < m < n:
        raise DomainError("need 0 < m < n")
    if (n, m) == (4, 2):
        return GrayOrderedBasis(4, 2, E4_ORDER)
    if (n, m) == (6, 3):
        return GrayOrderedBasis(6, 3, E6_ORDER)
    strings = ["".join("1" if q in c else "0" for q in range(1, n + 1))
               for c in revolving_door(n, m)]
    return GrayOrderedBasis(n, m, tuple(strings))


# ---------------------------------------------------------------- coordinates

def hyperspherical_coeffs(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    D = len(u)
    c = np.empty(D)
    pre = 1.0
    for j in range(D):
        uj = u[j] if j < D - 1 else 0.0
        c[j] = np.cos(uj) * pre
        pre *= np.sin(uj)
    return c


def full_angles(free_u, D: int) -> np.ndarray:
    """Pad D-1 angles with the terminal u_D = 0."""
    u = np.zeros(D)
    u[:D - 1] = free_u
    return u


def hyperspherical_amps(basis: GrayOrderedBasis, u, phases=None) -> np.ndarray:
    """Amplitude array sum_j c_j e^{i p_j} |b_j>; real when phases is None."""
    u = np.asarray(u, dtype=float)
    if len(u) != basis.D:
        raise ValueError(f"need {basis.D} angles, got {len(u)}")
    if abs(u[-1]) > 0:
        raise ValueError("u_D must be 0")
    c = hyperspherical_coeffs(u).astype(complex)
    if phases is not None:
        ph = np.zeros(basis.D)
        ph[1:] = phases   # first term stays real
        c = c * np.exp(1j * ph)
    out = np.zeros(1 << basis.n, dtype=complex)
    out[basis.indices()] = c
    return out


def hyperspherical_state(basis: GrayOrderedBasis, u, phases=None) -> StateVector:
    return StateVector(basis.n, hyperspherical_amps(basis, u, phases))


def coeffs_to_angles(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if abs(np.linalg.norm(c) - 1) > 1e-10:
        raise ValueError("coefficient vector must be a unit vector")
    D = len(c)
    u = np.zeros(D)
    if D == 1:
        return u
    tail = np.sqrt(np.cumsum((c ** 2)[::-1])[::-1])   # tail[j] = ||c[j:]||
    for j in range(D - 1):
        r = tail[j]
        if r < 1e-15:
            break               # remaining coefficients vanish, keep zeros
        if j == D - 2:
            u[j] = np.arctan2(c[D - 1], c[D - 2])
        else:
            u[j] = np.arctan2(tail[j + 1], c[j])
    return u


# ---------------------------------------------------------------- spin constraints

def acot(x: float) -> float:
    """Inverse cotangent with range (-pi/2, pi/2], acot(x) = atan(1/x)."""
    return float(np.pi / 2) if x == 0 else float(np.arctan(1.0 / x))


@dataclass
class SpinConstraintSet:
    """Fixed and dependent hyperspherical angles (1-based indices)."""
    D: int
    free: tuple
    fixed: dict = field(default_factory=dict)           # index -> value
    dependent: dict = field(default_factory=dict)       # index -> f(u) using earlier entries

    @property
    def n_free(self) -> int:
        return len(self.free)

    def angles(self, free_values) -> np.ndarray:
        free_values = np.asarray(free_values, dtype=float)
        if len(free_values) != len(self.free):
            raise ValueError(f"need {len(self.free)} free angles")
        u = {i: v for i, v in zip(self.free, free_values)}
        u.update(self.fixed)
        for i, f in self.dependent.items():
            u[i] = f(u)
        out = np.array([u.get(j, 0.0) for j in range(1, self.D + 1)])
        out[-1] = 0.0
        return out


HALF_PI = np.pi / 2


def spin_constraints_table(sector: SymmetrySector) -> SpinConstraintSet:
    """Tabulated constraint rows for the (4,2) and (6,3) Interleaved sectors."""
    key = (sector.n, sector.m, sector.s2, sector.sz2)
    if sector.layout != SpinLayout.INTERLEAVED:
        key = None
    if key == (4, 2, 2, 0):
        return SpinConstraintSet(6, (), {1: HALF_PI, 2: HALF_PI, 3: np.pi / 4, 4: HALF_PI, 5: 0.0})
    if key == (4, 2, 0, 0):
        return SpinConstraintSet(6, (1, 4), {2: HALF_PI, 5: 0.0},
                                 {3: lambda u: -np.arctan(1.0 / np.sin(u[4]))
                                  if np.sin(u[4]) != 0 else -HALF_PI})
    if key in ((6, 3, 3, 1), (6, 3, 3, -1)):
        special = {5: acot(1 / np.sqrt(2)), 8: np.pi / 4, 15: 0.0} if key[3] == 1 else \
            {9: acot(1 / np.sqrt(2)), 13: np.pi / 4, 16: 0.0}
        fixed = {j: HALF_PI for j in range(1, 20)}
        fixed.update(special)
        return SpinConstraintSet(20, (), fixed)
    if key == (6, 3, 1, 1):
        free = (1, 3, 6, 8, 10, 15, 18)
        fixed = {j: HALF_PI for j in range(1, 20) if j not in free and j not in (5, 19)}
        fixed[19] = 0.0

        def u5(u):
            d = np.sin(u[10]) * np.cos(u[15]) * np.sin(u[6]) * np.sin(u[8]) + np.sin(u[6]) * np.cos(u[8])
            return -acot(d)
        return SpinConstraintSet(20, free, fixed, {5: u5})
    if key == (6, 3, 1, -1):
        free = (2, 4, 11, 13, 14, 16, 17)
        fixed = {j: HALF_PI for j in range(1, 20) if j not in free and j != 9}

        def u9(u):
            k = np.sin(u[11]) * np.sin(u[13]) * np.sin(u[14]) * np.cos(u[16]) + np.sin(u[11]) * np.cos(u[13])
            return -acot(k)
        return SpinConstraintSet(20, free, fixed, {9: u9})
    raise DomainError(f"no tabulated constraints for {sector.label()}; use spin_constraints_general")


@dataclass
class SpinGenerator:
    """k-1 hyperspherical angles over an orthonormal (s, sz) eigenbasis."""
    sector: SymmetrySector
    basis: object   # ProjectorBasis

    @property
    def n_free(self) -> int:
        return self.basis.k - 1

    def state(self, free_values) -> np.ndarray:
        k = self.basis.k
        c = hyperspherical_coeffs(full_angles(free_values, k)) if k > 1 else np.ones(1)
        return np.real(self.basis.to_full(c))

    def gray_coeffs(self, free_values, gray: GrayOrderedBasis) -> np.ndarray:
        return self.state(free_values)[gray.indices()]


def spin_constraints_general(sector: SymmetrySector) -> SpinGenerator:
    if sector.s2 is None or sector.sz2 is None:
        raise DomainError("general spin constraints need s and sz")
    if sector.n > 12:
        raise DomainError("general spin constraints limited to n <= 12")
    return SpinGenerator(sector, sector_projector_basis(sector))


class EAnsatz:
    """Parametrized state from a constraint set or generator, for optimizers."""

    def __init__(self, n: int, fn: Callable, n_free: int, label: str = "E"):
        self.n_qubits = n
        self.n_free = n_free
        self._fn = fn
        self.label = label

    def amps(self, x) -> np.ndarray:
        return np.asarray(self._fn(np.asarray(x, dtype=float)), dtype=complex)


def e_ansatz(n, m, s=None, sz=None, phases: bool = False, table: bool = False) -> EAnsatz:
    """E_{n,m} (optionally spin-restricted) as a parametrized state.

    Without spin labels the free parameters are u_1..u_{D-1}, followed by
    D-1 phases when ``phases`` is set.
    """
    basis = gray_order(n, m)
    if s is None:
        D = basis.D
        if phases:
            return EAnsatz(n, lambda x: hyperspherical_amps(basis, full_angles(x[:D - 1], D), x[D - 1:]),
                           2 * D - 2, f"E{n}{m}c")
        return EAnsatz(n, lambda x: hyperspherical_amps(basis, full_angles(x, D)), D - 1, f"E{n}{m}")
    sec = make_sector(n, m, sz=sz, s=s, layout=SpinLayout.INTERLEAVED)
    if table:
        cs = spin_constraints_table(sec)
        return EAnsatz(n, lambda x: hyperspherical_amps(basis, cs.angles(x)), cs.n_free,
                       f"E{n}{m}{sec.label()}")
    gen = spin_constraints_general(sec)
    return EAnsatz(n, gen.state, gen.n_free, f"E{n}{m}{sec.label()}")


# ---------------------------------------------------------------- unitaries

def complete_unitary(first_column, dim: int | None = None) -> np.ndarray:
    """Deterministic unitary with the given first column.

    Gram-Schmidt over standard basis vectors; at each step the candidate
    with the largest remaining norm is taken.
    """
    v = np.asarray(first_column, dtype=complex).reshape(-1)
    dim = dim or len(v)
    if len(v) != dim:
        raise ValueError("dimension mismatch")
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise ValueError("first column must be a unit vector")
    cols = [v]
    Q = v.reshape(-1, 1)
    remaining = list(range(dim))
    while len(cols) < dim:
        best, best_r, best_norm = None, None, -1.0
        for k in remaining:
            e = np.zeros(dim, dtype=complex)
            e[k] = 1.0
            r = e - Q @ (Q.conj().T @ e)
            nr = np.linalg.norm(r)
            if nr > best_norm + 1e-12:
                best, best_r, best_norm = k, r, nr
        remaining.remove(best)
        r = best_r - Q @ (Q.conj().T @ best_r)   # second pass for stability
        r /= np.linalg.norm(r)
        cols.append(r)
        Q = np.column_stack(cols)
    return Q


_E4_ROWS = (
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0 & 0 & 0',
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0 & 0',
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0',
    'C4 S1 S2 S3 & 0 & 0 & 0 & 0 & S4 & -C1 C4 S2 S3 & 0 & 0 & 0 & -C2 C4 S3 & 0 & 0 & 0 & 0 & -C3 C4',
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    'S1 S2 S3 S4 S5 & 0 & 0 & 0 & 0 & -C4 S5 & -C1 S2 S3 S4 S5 & 0 & 0 & -C5 & -C2 S3 S4 S5 & 0 & 0 & 0 & 0 & -C3 S4 S5',
    'C3 S1 S2 & 0 & 0 & 0 & 0 & 0 & -C1 C3 S2 & 0 & 0 & 0 & -C2 C3 & 0 & 0 & 0 & 0 & S3',
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0 & 0 & 0 & 0',
    '0 & 0 & 0 & 0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    'C5 S1 S2 S3 S4 & 0 & 0 & 0 & 0 & -C4 C5 & -C1 C5 S2 S3 S4 & 0 & 0 & S5 & -C2 C5 S3 S4 & 0 & 0 & 0 & 0 & -C3 C5 S4',
    'C2 S1 & 0 & 0 & 0 & 0 & 0 & -C1 C2 & 0 & 0 & 0 & S2 & 0 & 0 & 0 & 0 & 0',
    '0 & 0 & 0 & 0 & 0 & 0 & 0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    'C1 & 0 & 0 & 0 & 0 & 0 & S1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    '0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    '0 & 0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
    '0 & 0 & 0 & 1 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0 & 0',
)


def _eval_monomial(term: str, C, S) -> float:
    term = term.strip()
    sign = -1.0 if term.startswith("-") else 1.0
    term = term.lstrip("-").strip()
    if term in ("0", "1"):
        return sign * float(term)
    val = sign
    for f in term.split():
        val *= (C if f[0] == "C" else S)[int(f[1:]) - 1]
    return val


def e4_reference(u) -> np.ndarray:
    """The explicit 16x16 E_4 unitary, entries C_i = cos u_i, S_i = sin u_i."""
    u = np.asarray(u, dtype=float)[:5]
    C, S = np.cos(u), np.sin(u)
    return np.array([[_eval_monomial(t, C, S) for t in row.split("&")] for row in _E4_ROWS])


# ---------------------------------------------------------------- Gray decomposition

def _data(name: str) -> dict:
    return json.loads(resources.files("symprep").joinpath("data", name).read_text())


@lru_cache(maxsize=None)
def fixture_e4() -> Circuit:
    """Gate-for-gate E_4 Gray decomposition (27 gates, 15 Toffolis)."""
    return circuit_from_dict(_data("e4_gray.json"))


@lru_cache(maxsize=None)
def fixture_e6() -> Circuit:
    """Gate-for-gate E_6 Gray decomposition (98 gates, 57 Toffolis)."""
    return circuit_from_dict(_data("e6_gray.json"))


def decompose_gray(basis: GrayOrderedBasis) -> Circuit:
    """Gray-walk circuit on free slots u_1..u_{D-1}.

    Step j moves the tail amplitude from b_j to b_{j+1}. With p the bit
    going 1 -> 0 and q the bit going 0 -> 1: MCX on p (controls = b_j),
    Y_j^dag on q, MCX on q (controls = b_j xor e_p), Y_j on q, MCX on p again,
    where Y_j = Ry(u_j - pi/2).
    """
    n = basis.n
    if n > 8:
        raise DomainError("decompose_gray limited to n <= 8")
    s = basis.strings
    gates = [X(q) for q in range(1, n + 1) if s[0][q - 1] == "1"]
    for j in range(basis.D - 1):
        a, b = s[j], s[j + 1]
        p = next(q for q in range(1, n + 1) if a[q - 1] == "1" and b[q - 1] == "0")
        q = next(q for q in range(1, n + 1) if a[q - 1] == "0" and b[q - 1] == "1")
        ctrl_p = [(k, int(a[k - 1])) for k in range(1, n + 1) if k != p]
        ctrl_q = [(k, 0 if k == p else int(a[k - 1])) for k in range(1, n + 1) if k != q]
        gates += [
            MCX(p, ctrl_p),
            Ry(q, Free(j, -1.0, np.pi / 2)),
            MCX(q, ctrl_q),
            Ry(q, Free(j, 1.0, -np.pi / 2)),
            MCX(p, ctrl_p),
        ]
    return Circuit(n, tuple(gates), basis.D - 1)


# ---------------------------------------------------------------- cost accounting

# Toffoli rows: (n, m, s2, sz2) -> (N_T, N_C(E), N_C(A) or None, N_C(N))
TABLE_S1 = {
    (4, 2, None, None): (15, 155, 135, 28),
    (4, 2, 2, 0): (7, 67, 63, 14),
    (4, 2, 0, 0): (9, 93, 81, 24),
    (6, 3, None, None): (57, 2337, None, 124),
    (6, 3, 3, 1): (14, 574, None, 62),
    (6, 3, 3, -1): (14, 574, None, 62),
    (6, 3, 1, 1): (24, 984, None, 114),
    (6, 3, 1, -1): (24, 984, None, 106),
    (8, 4, None, None): (207, 17595, None, 508),
    (8, 4, 4, 2): (21, 1785, None, 254),
    (8, 4, 4, -2): (21, 1785, None, 254),
    (8, 4, 4, 0): (35, 2975, None, 254),
    (8, 4, 2, 2): (45, 3825, None, 454),
    (8, 4, 2, -2): (45, 3825, None, 454),
    (8, 4, 2, 0): (71, 6885, None, 508),
    (8, 4, 0, 0): (77, 6545, None, 432),
}

TOFFOLI4_EXACT = 13      # one 4-qubit Toffoli
TOFFOLI4_PAIR = 18       # two identical 4-qubit Toffolis together
TOFFOLI4_APPROX = 9      # lone Toffoli in the approximate (relative-phase) column


def toffoli_cnots(n: int) -> int:
    """CNOTs per (n)-qubit Toffoli in the n >= 6 model."""
    return 2 * n * n - 6 * n + 5


def multiplexer_full(n: int) -> int:
    return 2 ** (n + 2) - 4 * n - 4


def multiplexer_half(n: int) -> int:
    return 2 ** (n + 1) - 4


def count_toffolis(circuit: Circuit) -> int:
    return sum(1 for g in circuit.gates if g.kind == "MCX" and len(g.controls) >= 2)


def identical_toffoli_pairs(circuit: Circuit) -> list:
    """Disjoint pairs (i, j) of identical MCX gates separated by one Y^dag.MCX.Y block.

    Greedy left-to-right matching; a gate is paired with the next
    identical MCX when only single-qubit gates and one other MCX intervene.
    """
    g = circuit.gates
    used, pairs = set(), []
    for i, a in enumerate(g):
        if a.kind != "MCX" or i in used:
            continue
        others = 0
        for j in range(i + 1, len(g)):
            b = g[j]
            if b.kind == "MCX":
                if b == a and j not in used:
                    pairs.append((i, j))
                    used |= {i, j}
                    break
                others += 1
                if others > 1:
                    break
    return pairs


@dataclass(frozen=True)
class ToffoliCost:
    n_toffoli: int
    cnot_exact: int
    cnot_approx: int | None
    cnot_numeric: int | None
    schedule: tuple | None = None   # (identical pairs, lone Toffolis) for n = 4


def _schedule_for(n_t: int, cnot_exact: int):
    """Solve 18 p + 13 s = N_C(E), 2 p + s = N_T for the pair schedule."""
    for p in range(n_t // 2 + 1):
        s = n_t - 2 * p
        if TOFFOLI4_PAIR * p + TOFFOLI4_EXACT * s == cnot_exact:
            return p, s
    return None


def toffoli_cost(n: int, m: int | None = None, s=None, sz=None, circuit: Circuit | None = None) -> ToffoliCost:
    """Toffoli and CNOT accounting for an E-gate decomposition.

    With ``circuit`` the Toffolis and identical pairs are counted from the
    gates; otherwise the tabulated Toffoli count of the sector is used.
    """
    m = n // 2 if m is None else m
    s2 = None if s is None else twice(s)
    sz2 = None if sz is None else twice(sz)
    numeric = multiplexer_half(n) if 2 * m == n and s2 is None else None
    if circuit is not None:
        n_t = count_toffolis(circuit)
        if n == 4:
            p = len(identical_toffoli_pairs(circuit))
            lone = n_t - 2 * p
            return ToffoliCost(n_t, TOFFOLI4_PAIR * p + TOFFOLI4_EXACT * lone,
                               TOFFOLI4_PAIR * p + TOFFOLI4_APPROX * lone, numeric, (p, lone))
        return ToffoliCost(n_t, n_t * toffoli_cnots(n), None, numeric)
    key = (n, m, s2, sz2)
    if key not in TABLE_S1:
        raise DomainError(f"no tabulated Toffoli count for {key}")
    n_t, e_tab, a_tab, num_tab = TABLE_S1[key]
    if n == 4:
        sched = _schedule_for(n_t, e_tab)
        if sched is None:
            return ToffoliCost(n_t, e_tab, None, num_tab)
        p, lone = sched
        return ToffoliCost(n_t, e_tab, TOFFOLI4_PAIR * p + TOFFOLI4_APPROX * lone, num_tab, sched)
    return ToffoliCost(n_t, n_t * toffoli_cnots(n), None, num_tab)
