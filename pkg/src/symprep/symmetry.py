"""Symmetry sectors, their dimensions, and number / spin operators.

Half-integer quantum numbers are stored as twice their value (``sz2``,
``s2``) so equality tests never touch floats.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np
import scipy.sparse as sp

MAX_PROJECTOR_QUBITS = 12


class DomainError(ValueError):
    pass


class SpinLayout(str, Enum):
    BLOCK = "block"              # 1..n/2 up, n/2+1..n down
    INTERLEAVED = "interleaved"  # odd qubits up, even qubits down


def twice(x) -> int:
    """Exact 2*x for a half-integer given as int, float, Fraction or 'p/q' string."""
    f = Fraction(str(x)) if isinstance(x, str) else Fraction(x).limit_denominator(4)
    t = 2 * f
    if t.denominator != 1:
        raise DomainError(f"{x} is not a half-integer")
    return int(t)


def half_str(x2: int) -> str:
    return str(x2 // 2) if x2 % 2 == 0 else f"{x2}/2"


@dataclass(frozen=True)
class SymmetrySector:
    n: int
    m: int
    sz2: int | None = None
    s2: int | None = None
    layout: SpinLayout | None = None

    def __post_init__(self):
        n, m = self.n, self.m
        if not 0 < m < n:
            raise DomainError(f"need 0 < m < n, got n={n}, m={m}")
        if self.sz2 is None and self.s2 is None:
            return
        if self.layout is None:
            raise DomainError("a spin layout is required with sz or s")
        if n % 2:
            raise DomainError("spin sectors need even n")
        if self.s2 is not None:
            if self.sz2 is None:
                raise DomainError("s requires sz")
            if (self.s2 - m) % 2:
                raise DomainError("s must equal m/2 modulo 1")
            if not abs(self.sz2) <= self.s2 <= m:
                raise DomainError("need |sz| <= s <= m/2")
        if self.sz2 is not None:
            if (m - abs(self.sz2)) % 2 or abs(self.sz2) > m:
                raise DomainError("m/2 - |sz| must be a nonnegative integer")
            up, dn = self.spin_counts()
            if up > n // 2 or dn > n // 2:
                raise DomainError("spin occupation exceeds available orbitals")

    def spin_counts(self):
        """(number of up electrons, number of down electrons)."""
        return (self.m + self.sz2) // 2, (self.m - self.sz2) // 2

    @property
    def sz(self):
        return None if self.sz2 is None else Fraction(self.sz2, 2)

    @property
    def s(self):
        return None if self.s2 is None else Fraction(self.s2, 2)

    def label(self) -> str:
        parts = [str(self.n), str(self.m)]
        if self.s2 is not None:
            parts.append(f"s={half_str(self.s2)}")
        if self.sz2 is not None:
            parts.append(f"sz={half_str(self.sz2)}")
        return "(" + ",".join(parts) + ")"


def make_sector(n, m, sz=None, s=None, layout=None) -> SymmetrySector:
    if layout is not None and not isinstance(layout, SpinLayout):
        layout = SpinLayout(layout)
    return SymmetrySector(n, m, None if sz is None else twice(sz),
                          None if s is None else twice(s), layout)


def up_qubits(n: int, layout: SpinLayout) -> list:
    if layout == SpinLayout.BLOCK:
        return list(range(1, n // 2 + 1))
    return list(range(1, n + 1, 2))


def down_qubits(n: int, layout: SpinLayout) -> list:
    if layout == SpinLayout.BLOCK:
        return list(range(n // 2 + 1, n + 1))
    return list(range(2, n + 1, 2))


def _mask(n, qubits):
    return sum(1 << (n - q) for q in qubits)


def sz2_of_index(k: int, n: int, layout: SpinLayout) -> int:
    return bin(k & _mask(n, up_qubits(n, layout))).count("1") - \
        bin(k & _mask(n, down_qubits(n, layout))).count("1")


# ---------------------------------------------------------------- bases and dims

def sector_basis(n, m, sz=None, layout=None) -> list:
    """Weight-m bitstrings (optionally at fixed sz), ascending by index."""
    sec = make_sector(n, m, sz=sz, layout=layout if sz is not None else None)
    return [format(k, f"0{n}b") for k in _sector_indices(sec.n, sec.m, sec.sz2, sec.layout)]


@lru_cache(maxsize=256)
def _sector_indices(n, m, sz2, layout):
    out = []
    for k in range(1 << n):
        if bin(k).count("1") != m:
            continue
        if sz2 is not None and sz2_of_index(k, n, layout) != sz2:
            continue
        out.append(k)
    return tuple(out)


def sector_indices(sector: SymmetrySector) -> np.ndarray:
    return np.array(_sector_indices(sector.n, sector.m, sector.sz2, sector.layout), dtype=np.int64)


def dim_number(n, m) -> int:
    if not 0 < m < n:
        raise DomainError("need 0 < m < n")
    return comb(n, m)


def dim_complex_params(n, m) -> int:
    return 2 * dim_number(n, m) - 2


def dim_spin(n, m, s) -> int:
    """Dimension at each admissible fixed sz of the (n, m, s) sector."""
    if n % 2:
        raise DomainError("spin sectors need even n")
    if not 0 < m < n:
        raise DomainError("need 0 < m < n")
    s2 = twice(s)
    if s2 < 0 or (s2 - m) % 2 or s2 > m:
        raise DomainError(f"s={s} invalid for m={m}")
    h = n // 2
    total = 0
    for k in range(0, (m - s2) // 2 + 1):
        nsingle = m - 2 * k
        if nsingle < 0 or nsingle > h - k:
            continue
        a = (nsingle - s2) // 2      # m/2 - k - s
        b = (nsingle + s2) // 2 + 1  # m/2 - k + s + 1
        mult = (s2 + 1) * factorial(nsingle) // (factorial(a) * factorial(b))
        total += comb(h, k) * comb(h - k, nsingle) * mult
    return total


def valid_spins(n, m) -> list:
    """Twice the admissible s values for (n, m), ascending."""
    return list(range(m % 2, min(m, n - m) + 1, 2))


def sz_count(n, m, sz) -> int:
    up, dn = (m + twice(sz)) // 2, (m - twice(sz)) // 2
    return comb(n // 2, up) * comb(n // 2, dn)


# ---------------------------------------------------------------- operators

def number_op_diag(n) -> np.ndarray:
    k = np.arange(1 << n)
    return np.array([bin(int(i)).count("1") for i in k], dtype=float)


def apply_number(state):
    amps = getattr(state, "amps", state)
    n = int(round(np.log2(len(amps))))
    p = np.abs(amps) ** 2
    w = number_op_diag(n)
    mean = float(p @ w)
    return mean, float(p @ w ** 2 - mean ** 2)


def _need_even(n):
    if n % 2:
        raise DomainError("spin operators need even n")


def apply_sz(state, layout):
    amps = getattr(state, "amps", state)
    n = int(round(np.log2(len(amps))))
    _need_even(n)
    layout = SpinLayout(layout)
    d = 0.5 * np.array([sz2_of_index(k, n, layout) for k in range(1 << n)])
    p = np.abs(amps) ** 2
    mean = float(p @ d)
    return mean, float(p @ d ** 2 - mean ** 2)


def _hop(k: int, n: int, i: int, j: int):
    """c_i^dag c_j on basis index k (qubit labels), returning (sign, new index) or None."""
    bi, bj = 1 << (n - i), 1 << (n - j)
    if not k & bj:
        return None
    k2 = k ^ bj
    if k2 & bi:
        return None
    # modes preceding j in qubit order are qubits 1..j-1 = bits above bj
    sign = (-1) ** bin(k2 >> (n - j + 1)).count("1")
    k3 = k2 | bi
    sign *= (-1) ** bin(k2 >> (n - i + 1)).count("1")
    return sign, k3


@lru_cache(maxsize=32)
def _s_plus(n: int, layout: SpinLayout) -> sp.csr_matrix:
    ups, dns = up_qubits(n, layout), down_qubits(n, layout)
    rows, cols, vals = [], [], []
    for k in range(1 << n):
        for u, d in zip(ups, dns):
            r = _hop(k, n, u, d)
            if r is not None:
                rows.append(r[1])
                cols.append(k)
                vals.append(r[0])
    return sp.csr_matrix((vals, (rows, cols)), shape=(1 << n, 1 << n), dtype=float)


@lru_cache(maxsize=32)
def s2_matrix(n: int, layout: SpinLayout) -> sp.csr_matrix:
    """Sparse S^2 = S- S+ + Sz (Sz + 1) on the full 2^n space."""
    _need_even(n)
    layout = SpinLayout(layout)
    Sp = _s_plus(n, layout)
    szd = 0.5 * np.array([sz2_of_index(k, n, layout) for k in range(1 << n)])
    return (Sp.T @ Sp + sp.diags(szd * (szd + 1))).tocsr()


def apply_s2(state, layout):
    amps = np.asarray(getattr(state, "amps", state))
    n = int(round(np.log2(len(amps))))
    _need_even(n)
    S2 = s2_matrix(n, SpinLayout(layout))
    phi = S2 @ amps
    mean = float(np.vdot(amps, phi).real)
    return mean, float(np.vdot(phi, phi).real - mean ** 2)


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    leakage: float
    s2_mean: float | None = None
    s2_var: float | None = None
    sz_mean: float | None = None
    sz_var: float | None = None


def check_membership(state, sector: SymmetrySector, tol: float = 1e-9) -> MembershipReport:
    amps = np.asarray(getattr(state, "amps", state))
    idx = sector_indices(sector)
    p = np.abs(amps) ** 2
    leakage = float(1.0 - p[idx].sum())
    ok = leakage < tol
    rep = {}
    if sector.sz2 is not None:
        sm, sv = apply_sz(amps, sector.layout)
        rep.update(sz_mean=sm, sz_var=sv)
        ok = ok and abs(sm - sector.sz2 / 2) < tol and sv < tol
    if sector.s2 is not None:
        mean, var = apply_s2(amps, sector.layout)
        s = sector.s2 / 2
        rep.update(s2_mean=mean, s2_var=var)
        ok = ok and abs(mean - s * (s + 1)) < tol and var < tol
    return MembershipReport(bool(ok), leakage, **rep)


@dataclass(frozen=True)
class ProjectorBasis:
    """Orthonormal real basis of a sector, as columns over ``indices``."""
    n: int
    indices: np.ndarray
    columns: np.ndarray   # shape (len(indices), k)

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def to_full(self, coeffs) -> np.ndarray:
        out = np.zeros(1 << self.n, dtype=complex)
        out[self.indices] = self.columns @ np.asarray(coeffs)
        return out


def _fix_signs(V):
    for c in range(V.shape[1]):
        col = V[:, c]
        j = int(np.argmax(np.abs(col) > 1e-9))
        if col[j] < 0:
            V[:, c] = -col
    return V


def sector_projector_basis(sector: SymmetrySector) -> ProjectorBasis:
    n = sector.n
    if n > MAX_PROJECTOR_QUBITS:
        raise DomainError(f"projector basis limited to n <= {MAX_PROJECTOR_QUBITS}")
    idx = sector_indices(sector)
    if sector.s2 is None:
        return ProjectorBasis(n, idx, np.eye(len(idx)))
    S2 = s2_matrix(n, sector.layout)[idx][:, idx].toarray()
    w, V = np.linalg.eigh(S2)
    s = sector.s2 / 2
    sel = np.abs(w - s * (s + 1)) < 1e-8
    return ProjectorBasis(n, idx, _fix_signs(np.ascontiguousarray(V[:, sel])))


def s2_multiplicities(n, m, sz2, layout) -> dict:
    """Twice-s -> multiplicity of S^2 eigenvalues in the (n, m, sz) block."""
    sec = SymmetrySector(n, m, sz2, None, SpinLayout(layout))
    idx = sector_indices(sec)
    w = np.linalg.eigvalsh(s2_matrix(n, sec.layout)[idx][:, idx].toarray())
    out = {}
    for v in w:
        s = (-1 + np.sqrt(1 + 4 * max(v, 0.0))) / 2
        key = int(round(2 * s))
        out[key] = out.get(key, 0) + 1
    return out
