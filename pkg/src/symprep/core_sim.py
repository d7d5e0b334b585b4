"""Dense statevector simulation and the parameterized circuit IR.

Basis convention: qubit 1 is the most significant bit of the amplitude
index, so ``|s1 s2 ... sn>`` has index ``sum_i s_i 2**(n-i)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import _backend

MAX_QUBITS = 24
MAX_UNITARY_QUBITS = 10


class SizeError(ValueError):
    """Qubit count outside the supported range."""


class BindingError(ValueError):
    """Parameter vector does not match the circuit's free slots."""


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class Free:
    """Reference to free slot ``slot``; the bound value is ``scale*x[slot] + offset``."""
    slot: int
    scale: float = 1.0
    offset: float = 0.0

    def value(self, x) -> float:
        return self.scale * float(x[self.slot]) + self.offset


@dataclass(frozen=True)
class Fixed:
    value_: float

    def value(self, x=None) -> float:
        return self.value_


ParamRef = Union[Free, Fixed]


# ---------------------------------------------------------------- gates

GATE_KINDS = ("X", "Ry", "Rz", "R", "CNOT", "CZ", "A", "MCRy", "MCRz", "MCX")
N_PARAMS = {"X": 0, "CNOT": 0, "CZ": 0, "MCX": 0, "Ry": 1, "Rz": 1,
            "MCRy": 1, "MCRz": 1, "R": 2, "A": 2}


@dataclass(frozen=True)
class GateInstance:
    kind: str
    targets: tuple
    controls: tuple = ()      # (qubit, polarity) pairs, polarity 1 = on-1, 0 = on-0
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple((int(q), int(p)) for q, p in self.controls))
        object.__setattr__(self, "params", tuple(self.params))
        if len(self.params) != N_PARAMS[self.kind]:
            raise ValueError(f"{self.kind} takes {N_PARAMS[self.kind]} params")
        want_t = 2 if self.kind == "A" else 1
        if len(self.targets) != want_t:
            raise ValueError(f"{self.kind} takes {want_t} target(s)")
        if self.kind == "A" and abs(self.targets[0] - self.targets[1]) != 1:
            raise ValueError("A gate acts on adjacent qubits")
        cq = [q for q, _ in self.controls]
        if set(cq) & set(self.targets) or len(set(cq)) != len(cq):
            raise ValueError("targets and controls must be disjoint")
        if self.kind in ("CNOT", "CZ") and len(self.controls) != 1:
            raise ValueError(f"{self.kind} takes exactly one control")
        if self.kind in ("X", "Ry", "Rz", "R", "A") and self.controls:
            raise ValueError(f"{self.kind} takes no controls")
        for _, p in self.controls:
            if p not in (0, 1):
                raise ValueError("control polarity must be 0 or 1")

    def qubits(self) -> tuple:
        return self.targets + tuple(q for q, _ in self.controls)


# convenience constructors
def X(q):
    return GateInstance("X", (q,))


def CNOT(c, t):
    return GateInstance("CNOT", (t,), ((c, 1),))


def CZ(c, t):
    return GateInstance("CZ", (t,), ((c, 1),))


def Ry(q, ref):
    return GateInstance("Ry", (q,), (), (ref,))


def Rz(q, ref):
    return GateInstance("Rz", (q,), (), (ref,))


def R(q, theta_ref, phi_ref):
    return GateInstance("R", (q,), (), (theta_ref, phi_ref))


def A(q1, q2, theta_ref, phi_ref):
    return GateInstance("A", (q1, q2), (), (theta_ref, phi_ref))


def MCX(t, controls):
    return GateInstance("MCX", (t,), tuple(controls))


def MCRy(t, controls, ref):
    return GateInstance("MCRy", (t,), tuple(controls), (ref,))


def MCRz(t, controls, ref):
    return GateInstance("MCRz", (t,), tuple(controls), (ref,))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple = ()
    n_free: int = field(default=-1)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        slots = sorted({p.slot for g in self.gates for p in g.params if isinstance(p, Free)})
        if self.n_free < 0:
            object.__setattr__(self, "n_free", len(slots))
        if slots != list(range(self.n_free)):
            raise ValueError("free slots must be the contiguous range 0..n_free-1")
        for g in self.gates:
            for q in g.qubits():
                if not 1 <= q <= self.n_qubits:
                    raise ValueError(f"qubit {q} out of range for n={self.n_qubits}")

    def count(self, kind: str) -> int:
        return sum(1 for g in self.gates if g.kind == kind)

    def then(self, gates: Iterable[GateInstance]) -> "Circuit":
        return Circuit(self.n_qubits, self.gates + tuple(gates))


# ---------------------------------------------------------------- matrices

_I2 = np.eye(2, dtype=complex)
_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PZ = np.diag([1.0 + 0j, -1.0])


def ry_matrix(b: float) -> np.ndarray:
    c, s = np.cos(b / 2), np.sin(b / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(a: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])


def r_matrix(theta: float, phi: float) -> np.ndarray:
    """R(theta, phi) = Rz(phi + pi) Ry(theta + pi/2)."""
    return rz_matrix(phi + np.pi) @ ry_matrix(theta + np.pi / 2)


def a_block(theta: float, phi: float) -> np.ndarray:
    """The A gate restricted to (|01>, |10>)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, np.exp(1j * phi) * s], [np.exp(-1j * phi) * s, -c]], dtype=complex)


def a_gate_matrix(theta: float, phi: float) -> np.ndarray:
    M = np.eye(4, dtype=complex)
    M[1:3, 1:3] = a_block(theta, phi)
    return M


def _d_ry(b):
    c, s = np.cos(b / 2), np.sin(b / 2)
    return 0.5 * np.array([[-s, -c], [c, -s]], dtype=complex)


def _d_rz(a):
    return np.diag([-0.5j * np.exp(-0.5j * a), 0.5j * np.exp(0.5j * a)])


def _d_a_block(theta, phi, which):
    c, s = np.cos(theta), np.sin(theta)
    e = np.exp(1j * phi)
    if which == 0:
        return np.array([[-s, e * c], [c / e, s]], dtype=complex)
    return np.array([[0, 1j * e * s], [-1j * s / e, 0]], dtype=complex)


def _kind_matrix(kind, vals):
    if kind in ("X", "CNOT", "MCX"):
        return _PX
    if kind == "CZ":
        return _PZ
    if kind in ("Ry", "MCRy"):
        return ry_matrix(vals[0])
    if kind in ("Rz", "MCRz"):
        return rz_matrix(vals[0])
    if kind == "R":
        return r_matrix(vals[0], vals[1])
    if kind == "A":
        return a_block(vals[0], vals[1])
    raise ValueError(kind)


def _kind_dmatrix(kind, vals, which):
    if kind in ("Ry", "MCRy"):
        return _d_ry(vals[0])
    if kind in ("Rz", "MCRz"):
        return _d_rz(vals[0])
    if kind == "R":
        if which == 0:
            return rz_matrix(vals[1] + np.pi) @ _d_ry(vals[0] + np.pi / 2)
        return _d_rz(vals[1] + np.pi) @ ry_matrix(vals[0] + np.pi / 2)
    if kind == "A":
        return _d_a_block(vals[0], vals[1], which)
    raise ValueError(kind)


def _bit(n, q):
    return 1 << (n - q)


def gate_masks(gate: GateInstance, n: int):
    """(cond_mask, cond_val, flip) of the pair op realizing ``gate`` on n qubits."""
    cm = cv = 0
    for q, pol in gate.controls:
        b = _bit(n, q)
        cm |= b
        if pol:
            cv |= b
    if gate.kind == "A":
        hi, lo = _bit(n, gate.targets[0]), _bit(n, gate.targets[1])
        # lower pair element is |01> on (targets[0], targets[1])
        cm |= hi | lo
        cv |= lo
        return cm, cv, hi | lo
    t = _bit(n, gate.targets[0])
    return cm | t, cv, t


def bind_values(gate: GateInstance, x) -> list:
    try:
        return [p.value(x) for p in gate.params]
    except IndexError as exc:
        raise BindingError("unbound free slot") from exc


# ---------------------------------------------------------------- states

@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        a = np.array(self.amps, dtype=complex).reshape(-1)
        if a.shape[0] != 1 << self.n_qubits:
            raise SizeError("amplitude length must be 2**n_qubits")
        if abs(np.vdot(a, a).real - 1.0) > 1e-9:
            raise ValueError("state is not normalized")
        a.setflags(write=False)
        object.__setattr__(self, "amps", a)

    def ket_dump(self, tol: float = 1e-10) -> str:
        lines = []
        for k, a in enumerate(self.amps):
            if abs(a) > tol:
                lines.append(f"({a.real:.10f},{a.imag:.10f}) |{k:0{self.n_qubits}b}>")
        return "\n".join(lines)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))


def _check_n(n, limit=MAX_QUBITS):
    if not 1 <= n <= limit:
        raise SizeError(f"qubit count {n} outside 1..{limit}")


def zero_state(n: int) -> StateVector:
    _check_n(n)
    a = np.zeros(1 << n, dtype=complex)
    a[0] = 1.0
    return StateVector(n, a)


def basis_state(bits: str) -> StateVector:
    n = len(bits)
    a = np.zeros(1 << n, dtype=complex)
    a[int(bits, 2)] = 1.0
    return StateVector(n, a)


def from_amplitudes(amps, normalize: bool = True) -> StateVector:
    a = np.asarray(amps, dtype=complex).reshape(-1)
    n = int(round(np.log2(a.shape[0])))
    if normalize:
        a = a / np.linalg.norm(a)
    return StateVector(n, a)


def _apply_inplace(buf, gate, n, x):
    cm, cv, fl = gate_masks(gate, n)
    M = _kind_matrix(gate.kind, bind_values(gate, x))
    _backend.apply_pair(buf, cm, cv, fl, M[0, 0], M[0, 1], M[1, 0], M[1, 1])


def apply_gate(state: StateVector, gate: GateInstance, values=()) -> StateVector:
    for q in gate.qubits():
        if not 1 <= q <= state.n_qubits:
            raise ValueError(f"qubit {q} out of range")
    buf = np.array(state.amps, dtype=complex)
    _apply_inplace(buf, gate, state.n_qubits, values)
    return StateVector(state.n_qubits, buf)


def compile_ops(circuit: Circuit, x):
    """Flatten a bound circuit into kernel arrays."""
    n = circuit.n_qubits
    G = len(circuit.gates)
    cm = np.empty(G, dtype=np.int64)
    cv = np.empty(G, dtype=np.int64)
    fl = np.empty(G, dtype=np.int64)
    mats = np.empty((G, 4), dtype=complex)
    for k, g in enumerate(circuit.gates):
        cm[k], cv[k], fl[k] = gate_masks(g, n)
        mats[k] = _kind_matrix(g.kind, bind_values(g, x)).reshape(-1)
    return cm, cv, fl, mats


def _check_values(circuit, values):
    x = np.asarray(values, dtype=float).reshape(-1)
    if x.shape[0] != circuit.n_free:
        raise BindingError(f"expected {circuit.n_free} values, got {x.shape[0]}")
    return x


def run_amps(circuit: Circuit, values=(), initial=None) -> np.ndarray:
    """Raw amplitude array after executing ``circuit``; no StateVector wrapping."""
    x = _check_values(circuit, values)
    if initial is None:
        buf = np.zeros(1 << circuit.n_qubits, dtype=complex)
        buf[0] = 1.0
    else:
        buf = np.array(initial, dtype=complex)
    if circuit.gates:
        _backend.apply_ops(buf, *compile_ops(circuit, x))
    return buf


def run(circuit: Circuit, values=()) -> StateVector:
    _check_n(circuit.n_qubits)
    return StateVector(circuit.n_qubits, run_amps(circuit, values))


def unitary_of(circuit: Circuit, values=()) -> np.ndarray:
    n = circuit.n_qubits
    _check_n(n, MAX_UNITARY_QUBITS)
    x = _check_values(circuit, values)
    ops = compile_ops(circuit, x) if circuit.gates else None
    U = np.zeros((1 << n, 1 << n), dtype=complex)
    for k in range(1 << n):
        buf = np.zeros(1 << n, dtype=complex)
        buf[k] = 1.0
        if ops is not None:
            _backend.apply_ops(buf, *ops)
        U[:, k] = buf
    return U


def overlap(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise SizeError("size mismatch")
    return complex(np.vdot(a.amps, b.amps))


def phase_distance(M1, M2) -> float:
    """min over alpha of ||exp(i alpha) M1 - M2||_max.

    The optimal alpha aligns the largest entry of M1 with M2, refined by
    a 1-D bounded search.
    """
    from scipy.optimize import minimize_scalar

    M1 = np.asarray(M1, dtype=complex)
    M2 = np.asarray(M2, dtype=complex)
    k = np.unravel_index(np.argmax(np.abs(M1)), M1.shape)
    a0 = np.angle(M2[k]) - np.angle(M1[k]) if abs(M1[k]) > 0 else 0.0

    def f(a):
        return float(np.max(np.abs(np.exp(1j * a) * M1 - M2)))
    res = minimize_scalar(f, bounds=(a0 - 0.5, a0 + 0.5), method="bounded",
                          options={"xatol": 1e-14})
    return min(f(a0), float(res.fun))


# ---------------------------------------------------------------- adjoint

_KIND_CODE = {"X": 0, "CNOT": 0, "MCX": 0, "CZ": 1, "Ry": 2, "MCRy": 2,
              "Rz": 3, "MCRz": 3, "R": 4, "A": 5}


class CompiledCircuit:
    """Masks and parameter tables of a circuit, precomputed once.

    Gate matrices and their parameter derivatives are then built with
    vectorized numpy for each evaluation.
    """

    def __init__(self, circuit: Circuit):
        n = circuit.n_qubits
        G = len(circuit.gates)
        self.circuit = circuit
        self.n_qubits = n
        self.n_free = circuit.n_free
        self.cm = np.empty(G, dtype=np.int64)
        self.cv = np.empty(G, dtype=np.int64)
        self.fl = np.empty(G, dtype=np.int64)
        self.code = np.empty(G, dtype=np.int64)
        self.slot = np.full((G, 2), -1, dtype=np.int64)
        self.scale = np.zeros((G, 2))
        self.offset = np.zeros((G, 2))   # fixed value when slot < 0
        for k, g in enumerate(circuit.gates):
            self.cm[k], self.cv[k], self.fl[k] = gate_masks(g, n)
            self.code[k] = _KIND_CODE[g.kind]
            for w, p in enumerate(g.params):
                if isinstance(p, Free):
                    self.slot[k, w], self.scale[k, w], self.offset[k, w] = p.slot, p.scale, p.offset
                else:
                    self.offset[k, w] = p.value()
        dg, dw = np.nonzero(self.slot >= 0)
        self.dgate, self.dwhich = dg.astype(np.int64), dw
        self.dslot = self.slot[dg, dw].astype(np.int64)
        self.dscale = self.scale[dg, dw].astype(float)
        self.groups = {c: np.nonzero(self.code == c)[0] for c in range(6)}

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = self.offset.copy()
        free = self.slot >= 0
        if free.any():
            v[free] += self.scale[free] * x[self.slot[free]]
        return v

    def matrices(self, v) -> np.ndarray:
        G = len(self.code)
        M = np.zeros((G, 4), dtype=complex)
        g = self.groups
        M[g[0]] = (0, 1, 1, 0)
        M[g[1]] = (1, 0, 0, -1)
        if len(g[2]):
            b = v[g[2], 0] / 2
            c, s = np.cos(b), np.sin(b)
            M[g[2]] = np.stack([c, -s, s, c], axis=1)
        if len(g[3]):
            z = np.exp(0.5j * v[g[3], 0])
            M[g[3], 0], M[g[3], 3] = 1 / z, z
        if len(g[4]):
            b = (v[g[4], 0] + np.pi / 2) / 2
            cy, sy = np.cos(b), np.sin(b)
            z = np.exp(0.5j * (v[g[4], 1] + np.pi))
            M[g[4]] = np.stack([cy / z, -sy / z, z * sy, z * cy], axis=1)
        if len(g[5]):
            c, s = np.cos(v[g[5], 0]), np.sin(v[g[5], 0])
            e = np.exp(1j * v[g[5], 1])
            M[g[5]] = np.stack([c, e * s, s / e, -c], axis=1)
        return M

    def dmatrices(self, v) -> np.ndarray:
        dg, dw = self.dgate, self.dwhich
        D = np.zeros((len(dg), 4), dtype=complex)
        codes = self.code[dg]
        for c in (2, 3, 4, 5):
            r = np.nonzero(codes == c)[0]
            if not len(r):
                continue
            gi, w = dg[r], dw[r]
            if c == 2:
                b = v[gi, 0] / 2
                cc, ss = np.cos(b), np.sin(b)
                D[r] = 0.5 * np.stack([-ss, -cc, cc, -ss], axis=1)
            elif c == 3:
                z = np.exp(0.5j * v[gi, 0])
                D[r, 0], D[r, 3] = -0.5j / z, 0.5j * z
            elif c == 4:
                b = (v[gi, 0] + np.pi / 2) / 2
                cy, sy = np.cos(b), np.sin(b)
                z = np.exp(0.5j * (v[gi, 1] + np.pi))
                dth = np.stack([-0.5 * sy / z, -0.5 * cy / z, 0.5 * z * cy, -0.5 * z * sy], axis=1)
                dph = np.stack([-0.5j * cy / z, 0.5j * sy / z, 0.5j * z * sy, 0.5j * z * cy], axis=1)
                D[r] = np.where((w == 0)[:, None], dth, dph)
            else:
                cc, ss = np.cos(v[gi, 0]), np.sin(v[gi, 0])
                e = np.exp(1j * v[gi, 1])
                dth = np.stack([-ss, e * cc, cc / e, ss], axis=1)
                dph = np.stack([0 * ss, 1j * e * ss, -1j * ss / e, 0 * ss], axis=1)
                D[r] = np.where((w == 0)[:, None], dth, dph)
        return D

    def run(self, x, initial=None) -> np.ndarray:
        x = _check_values(self.circuit, x)
        if initial is None:
            buf = np.zeros(1 << self.n_qubits, dtype=complex)
            buf[0] = 1.0
        else:
            buf = np.array(initial, dtype=complex)
        if len(self.code):
            _backend.apply_ops(buf, self.cm, self.cv, self.fl, self.matrices(self.values(x)))
        return buf

    def overlap_grad(self, x, target):
        """<target|psi(x)> and its gradient over the free slots (adjoint method)."""
        x = _check_values(self.circuit, x)
        v = self.values(x)
        M = self.matrices(v)
        psi = np.zeros(1 << self.n_qubits, dtype=complex)
        psi[0] = 1.0
        grad = np.zeros(self.n_free, dtype=complex)
        if not len(self.code):
            return complex(np.vdot(target, psi)), grad
        _backend.apply_ops(psi, self.cm, self.cv, self.fl, M)
        ov = complex(np.vdot(target, psi))
        lam = np.array(target, dtype=complex)
        _backend.adjoint_sweep(psi, lam, self.cm, self.cv, self.fl, M, self.dmatrices(v),
                               self.dgate, self.dslot, self.dscale, grad)
        return ov, grad


def gradient_overlap(circuit: Circuit, values, target: np.ndarray):
    """Overlap <target|psi(x)> and its gradient with respect to the free slots.

    Reverse-mode sweep: one forward pass, then walk the gates backward
    carrying psi_{k-1} = U_k^dag psi_k and lambda_k = U_{k+1}^dag ... target.
    """
    return CompiledCircuit(circuit).overlap_grad(values, target)


# ---------------------------------------------------------------- serialization

def _ref_to_json(p: ParamRef) -> dict:
    if isinstance(p, Free):
        d = {"free": p.slot}
        if p.scale != 1.0:
            d["scale"] = p.scale
        if p.offset != 0.0:
            d["offset"] = p.offset
        return d
    return {"fixed": p.value_}


def _ref_from_json(d: dict) -> ParamRef:
    if "free" in d:
        return Free(int(d["free"]), float(d.get("scale", 1.0)), float(d.get("offset", 0.0)))
    if "fixed" in d:
        return Fixed(float(d["fixed"]))
    raise ValueError(f"bad param ref {d!r}")


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "n_free": circuit.n_free,
        "gates": [
            {"kind": g.kind, "targets": list(g.targets),
             "controls": [[q, p] for q, p in g.controls],
             "params": [_ref_to_json(p) for p in g.params]}
            for g in circuit.gates
        ],
    }


def circuit_from_dict(d: dict) -> Circuit:
    gates = [GateInstance(g["kind"], tuple(g["targets"]),
                          tuple(tuple(c) for c in g.get("controls", [])),
                          tuple(_ref_from_json(p) for p in g.get("params", [])))
             for g in d["gates"]]
    return Circuit(int(d["n_qubits"]), tuple(gates), int(d.get("n_free", -1)))


def circuit_to_json(circuit: Circuit, indent=None) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=indent, sort_keys=True)


def circuit_from_json(text: str) -> Circuit:
    return circuit_from_dict(json.loads(text))


# ---------------------------------------------------------------- A gate

def a_gate_decomposition(theta_ref: ParamRef, phi_ref: ParamRef, q1: int = 1, q2: int = 2,
                         n: int = 2) -> Circuit:
    """CNOT(q2->q1), R^dag(q2), CNOT(q1->q2), R(q2), CNOT(q2->q1)."""
    return Circuit(n, tuple(a_gate_sequence(q1, q2, theta_ref, phi_ref)))


def _neg(p: ParamRef, shift: float) -> ParamRef:
    # reference to -(p + shift)
    if isinstance(p, Free):
        return Free(p.slot, -p.scale, -(p.offset + shift))
    return Fixed(-(p.value_ + shift))


def _shift(p: ParamRef, shift: float) -> ParamRef:
    if isinstance(p, Free):
        return Free(p.slot, p.scale, p.offset + shift)
    return Fixed(p.value_ + shift)


def a_gate_sequence(q1, q2, theta_ref, phi_ref) -> list:
    """Elementary-gate list equal to A(theta, phi) on (q1, q2) up to global phase."""
    return [
        CNOT(q2, q1),
        Rz(q2, _neg(phi_ref, np.pi)),
        Ry(q2, _neg(theta_ref, np.pi / 2)),
        CNOT(q1, q2),
        Ry(q2, _shift(theta_ref, np.pi / 2)),
        Rz(q2, _shift(phi_ref, np.pi)),
        CNOT(q2, q1),
    ]


def expand_a_gates(circuit: Circuit) -> Circuit:
    """Replace every A gate by its three-CNOT decomposition."""
    out = []
    for g in circuit.gates:
        if g.kind == "A":
            out.extend(a_gate_sequence(g.targets[0], g.targets[1], *g.params))
        else:
            out.append(g)
    return Circuit(circuit.n_qubits, tuple(out), circuit.n_free)


def operator_form(theta: float, phi: float, corrected: bool = True) -> np.ndarray:
    """Product of three exponentials of Pauli terms for the A gate.

    ``corrected=False`` evaluates the form
    exp(-i/2 (pi/2 - phi) Z2) exp(-i/2 (theta XX + theta YY + pi/2 ZZ)) exp(-i/2 (pi/2 Z1 - phi Z2)).
    That form is not equal to the A gate under the MSB-first convention.
    ``corrected=True`` swaps the qubit labels and negates the last exponent,
    which reproduces the A gate up to global phase.

    The middle factor uses the closed forms of the commuting XX, YY, ZZ terms.
    """
    Z1 = np.kron(_PZ, _I2)
    Z2 = np.kron(_I2, _PZ)
    XX = np.kron(_PX, _PX)
    YY = np.kron(_PY, _PY)
    ZZ = np.kron(_PZ, _PZ)
    I4 = np.eye(4, dtype=complex)

    def exp_pauli(a, P):  # exp(-i a/2 P) for P^2 = I
        return np.cos(a / 2) * I4 - 1j * np.sin(a / 2) * P

    def diag_exp(d):  # exp(-i/2 diag(d))
        return np.diag(np.exp(-0.5j * np.diag(d)))

    middle = exp_pauli(theta, XX) @ exp_pauli(theta, YY) @ exp_pauli(np.pi / 2, ZZ)
    if not corrected:
        return diag_exp((np.pi / 2 - phi) * Z2) @ middle @ diag_exp(np.pi / 2 * Z1 - phi * Z2)
    return diag_exp((np.pi / 2 - phi) * Z1) @ middle @ diag_exp(-(np.pi / 2) * Z2 + phi * Z1)


def tangent_rank(circuit: Circuit, values=None, seed: int = 0, h: float = 1e-6,
                 tol: float = 1e-6) -> int:
    """Real rank of the output-state Jacobian after removing the psi direction.

    At a generic point this equals the local dimension of the reachable
    manifold of rays: 2D-2 for full complex span of a D-dim sector, D-1 for
    real span.
    """
    k = circuit.n_free
    if k == 0:
        return 0
    if values is None:
        values = np.random.default_rng(seed).uniform(0, 2 * np.pi, k)
    x0 = np.asarray(values, dtype=float)
    psi = run_amps(circuit, x0)
    cols = []
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        d = (run_amps(circuit, x0 + e) - run_amps(circuit, x0 - e)) / (2 * h)
        d = d - np.vdot(psi, d) * psi
        cols.append(np.concatenate([d.real, d.imag]))
    return int(np.linalg.matrix_rank(np.array(cols), tol=tol))
