"""Random-target span checks for parametrized circuits and E-gate states.

For each target the squared overlap with the circuit output is maximized
over the free parameters; the mean over targets is the span fidelity.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .core_sim import Circuit, CompiledCircuit, Fixed, Free, GateInstance, StateVector
from .symmetry import SymmetrySector, sector_indices, sector_projector_basis


@dataclass(frozen=True)
class VerifyConfig:
    n_targets: int = 200
    restarts: int = 16          # upper bound on multi-starts per target
    max_iters: int = 2000
    f_tol: float = 1e-10
    success_threshold: float = 1 - 1e-4
    seed: int = 42
    real_targets: bool = False
    method: str = "bfgs"        # "bfgs", "lbfgs" or "nelder-mead"
    g_tol: float = 1e-9
    patience: int = 4           # stop after this many non-improving restarts
    threads: int = 1


# ---------------------------------------------------------------- parametrized states

class CircuitState:
    """Adapter giving a Circuit the parametrized-state interface."""

    def __init__(self, circuit: Circuit):
        self.circuit = circuit
        self.compiled = CompiledCircuit(circuit)
        self.n_qubits = circuit.n_qubits
        self.n_free = circuit.n_free

    def amps(self, x) -> np.ndarray:
        return self.compiled.run(x)

    def fidelity_grad(self, x, target):
        ov, g = self.compiled.overlap_grad(x, target)
        return abs(ov) ** 2, 2.0 * np.real(np.conj(ov) * g)


class FunctionState:
    """Adapter for any object exposing n_qubits, n_free and amps(x)."""

    def __init__(self, obj, h: float = 1e-6):
        self.obj = obj
        self.n_qubits = obj.n_qubits
        self.n_free = obj.n_free
        self.h = h

    def amps(self, x) -> np.ndarray:
        return np.asarray(self.obj.amps(x), dtype=complex)

    def fidelity_grad(self, x, target):
        x = np.asarray(x, dtype=float)
        f0 = abs(np.vdot(target, self.amps(x))) ** 2
        g = np.empty(len(x))
        for i in range(len(x)):
            e = np.zeros(len(x))
            e[i] = self.h
            g[i] = (abs(np.vdot(target, self.amps(x + e))) ** 2
                    - abs(np.vdot(target, self.amps(x - e))) ** 2) / (2 * self.h)
        return f0, g


def as_parametrized(obj):
    if isinstance(obj, (CircuitState, FunctionState)):
        return obj
    if isinstance(obj, Circuit):
        return CircuitState(obj)
    return FunctionState(obj)


def freeze_circuit(circuit: Circuit, keep) -> Circuit:
    """Fix every slot not in ``keep`` to value 0; kept slots renumbered in ``keep`` order."""
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 0 <= k < circuit.n_free for k in keep):
        raise ValueError("keep must list distinct existing slots")
    new_slot = {s: i for i, s in enumerate(keep)}

    def remap(p):
        if isinstance(p, Free):
            if p.slot in new_slot:
                return Free(new_slot[p.slot], p.scale, p.offset)
            return Fixed(p.offset)
        return p
    gates = tuple(GateInstance(g.kind, g.targets, g.controls, tuple(remap(p) for p in g.params))
                  for g in circuit.gates)
    return Circuit(circuit.n_qubits, gates, len(keep))


class FrozenState:
    """Embed a reduced parameter vector into a wider state, other entries at 0."""

    def __init__(self, base, keep):
        self.base = base
        self.keep = np.asarray(list(keep), dtype=int)
        self.n_qubits = base.n_qubits
        self.n_free = len(self.keep)

    def amps(self, x) -> np.ndarray:
        full = np.zeros(self.base.n_free)
        full[self.keep] = x
        return self.base.amps(full)


def freeze(obj, keep):
    if isinstance(obj, Circuit):
        return freeze_circuit(obj, keep)
    return FrozenState(obj, keep)


# ---------------------------------------------------------------- targets

def _target_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, index])


def random_sector_state(sector: SymmetrySector, real_targets: bool, rng) -> StateVector:
    """Gaussian random state over the sector (its spin eigenbasis when s is set)."""
    if sector.s2 is not None:
        basis = sector_projector_basis(sector)
        k = basis.k
        z = rng.standard_normal(k) if real_targets else rng.standard_normal(k) + 1j * rng.standard_normal(k)
        amps = basis.to_full(z / np.linalg.norm(z))
    else:
        idx = sector_indices(sector)
        k = len(idx)
        z = rng.standard_normal(k) if real_targets else rng.standard_normal(k) + 1j * rng.standard_normal(k)
        amps = np.zeros(1 << sector.n, dtype=complex)
        amps[idx] = z / np.linalg.norm(z)
    return StateVector(sector.n, amps)


# ---------------------------------------------------------------- optimizer

def _local(state, target, x0, cfg: VerifyConfig):
    if cfg.method == "nelder-mead":
        res = minimize(lambda x: 1.0 - abs(np.vdot(target, state.amps(x))) ** 2, x0,
                       method="Nelder-Mead",
                       options={"maxiter": cfg.max_iters, "fatol": cfg.f_tol, "xatol": 1e-8})
        return 1.0 - float(res.fun), res.x

    def fun(x):
        f, g = state.fidelity_grad(x, target)
        return 1.0 - f, -g
    if cfg.method == "lbfgs":
        res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                       options={"maxiter": cfg.max_iters, "ftol": cfg.f_tol, "gtol": 1e-12})
    elif cfg.method == "bfgs":
        res = minimize(fun, x0, jac=True, method="BFGS",
                       options={"maxiter": cfg.max_iters, "gtol": cfg.g_tol})
    else:
        raise ValueError(f"unknown method {cfg.method!r}")
    return 1.0 - float(res.fun), res.x


def max_overlap(circuit, target, config: VerifyConfig = VerifyConfig(), rng=None):
    """Best |<target|psi(x)>|^2 over multi-start local searches; returns (F, x)."""
    state = as_parametrized(circuit)
    t = np.asarray(getattr(target, "amps", target), dtype=complex)
    if len(t) != 1 << state.n_qubits:
        raise ValueError("target and circuit sizes differ")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    d = state.n_free
    if d == 0:
        return float(min(1.0, abs(np.vdot(t, state.amps(np.zeros(0)))) ** 2)), np.zeros(0)
    best_f, best_x, stale = -1.0, None, 0
    for _ in range(config.restarts):
        x0 = rng.uniform(0, 2 * np.pi, d)
        f, x = _local(state, t, x0, config)
        if f > best_f + 1e-9:
            best_f, best_x, stale = f, x, 0
        else:
            best_f, best_x = (f, x) if f > best_f else (best_f, best_x)
            stale += 1
        if best_f >= config.success_threshold or stale >= config.patience:
            break
    return float(min(1.0, max(0.0, best_f))), best_x


@dataclass
class SpanReport:
    mean: float
    min: float
    failures: int
    n_targets: int
    n_params: int
    fidelities: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {"mean_fidelity": self.mean, "min_fidelity": self.min, "failures": self.failures,
                "n_targets": self.n_targets, "n_params": self.n_params}


def _one_target(state, sector, cfg, i):
    rng = _target_rng(cfg.seed, i)
    t = random_sector_state(sector, cfg.real_targets, rng).amps
    return max_overlap(state, t, cfg, rng)[0]


def span_fidelity(circuit, sector: SymmetrySector, config: VerifyConfig = VerifyConfig()) -> SpanReport:
    state = as_parametrized(circuit)
    if state.n_qubits != sector.n:
        raise ValueError("circuit and sector sizes differ")
    idx = range(config.n_targets)
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as ex:
            fs = list(ex.map(lambda i: _one_target(state, sector, config, i), idx))
    else:
        fs = [_one_target(state, sector, config, i) for i in idx]
    fs = np.array(fs)
    return SpanReport(float(fs.mean()), float(fs.min()),
                      int((fs < config.success_threshold).sum()), len(fs), state.n_free, fs.tolist())


def fidelity_sweep(obj, sector: SymmetrySector, schedule, config: VerifyConfig = VerifyConfig()) -> list:
    """(param count, report) for each entry of ``schedule``.

    ``schedule`` lists the free slots kept at each point; everything else is
    frozen at 0. ``unfreeze_schedule`` gives the usual prefix order.
    """
    out = []
    for keep in schedule:
        rep = span_fidelity(freeze(obj, keep), sector, config)
        out.append((len(keep), rep))
    return out


def unfreeze_schedule(order, counts=None) -> list:
    """Prefixes of ``order``: freezing from the end of the circuit first."""
    order = list(order)
    counts = range(len(order) + 1) if counts is None else counts
    return [order[:k] for k in counts]


def sweep_csv(rows) -> str:
    lines = ["params,fidelity,min_fidelity,failures"]
    for k, rep in rows:
        lines.append(f"{k},{rep.mean:.10f},{rep.min:.10f},{rep.failures}")
    return "\n".join(lines) + "\n"
