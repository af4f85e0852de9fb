"""Variational cloning: costs, parameter-shift gradients, training and structure search.

Everything here runs on a batched state-vector simulator: a circuit is evaluated
for a stack of parameter vectors and a stack of family states in one pass, which
is what makes the parameter-shift gradient cheap enough for plain numpy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import cloning
from .qsim import (
    FIXED_1Q,
    ROTATIONS,
    Circuit,
    DensityMatrix,
    Gate,
    PureState,
    _CNOT,
    _CSWAP,
    _SWAP,
    bures_angle,
    equatorial_state,
    partial_trace,
)

COST_KINDS = ("squared", "local", "global")
PARAM_KINDS = set(ROTATIONS) | {"Phase"}
FIXED_KINDS = {"CZ": None, "CNOT": _CNOT, "SWAP": _SWAP, "CSWAP": _CSWAP, **FIXED_1Q}
ARITY = {"CZ": 2, "CNOT": 2, "SWAP": 2, "CSWAP": 3}
SHIFT = math.pi / 2
# Bures angles of numerically identical states come out around 1e-8 (arccos near 1)
FAITHFUL_ATOL = 1e-6


# ----------------------------------------------------------------- pools


@dataclass(frozen=True)
class GatePool:
    """Gates the structure search may place, as (kind, wires) entries."""

    entries: tuple
    width: int
    connectivity: str = "fully-connected"

    def __post_init__(self):
        entries = tuple((str(k), tuple(int(w) for w in ws)) for k, ws in self.entries)
        object.__setattr__(self, "entries", entries)
        for kind, wires in entries:
            if kind not in PARAM_KINDS and kind not in FIXED_KINDS:
                raise ValueError(f"unsupported pool gate {kind!r}")
            want = ARITY.get(kind, 1)
            if len(wires) != want:
                raise ValueError(f"{kind} needs {want} wire(s), got {wires}")
            if any(w < 0 or w >= self.width for w in wires):
                raise ValueError(f"{kind}{wires} falls outside a {self.width}-wire pool")

    def __len__(self):
        return len(self.entries)

    @classmethod
    def rotations_plus(cls, width: int, cz_pairs, connectivity: str) -> "GatePool":
        entries = [(k, (w,)) for k in ("Rz", "Rx", "Ry") for w in range(width)]
        entries += [("CZ", pair) for pair in cz_pairs]
        return cls(tuple(entries), width, connectivity)

    @classmethod
    def phase_covariant(cls) -> "GatePool":
        """Three wires, all single-qubit rotations, CZ between every pair."""
        return cls.rotations_plus(3, [(0, 1), (1, 2), (0, 2)], "fully-connected")

    @classmethod
    def mayers(cls) -> "GatePool":
        """Three wires with a linear CZ chain."""
        return cls.rotations_plus(3, [(0, 1), (1, 2)], "nearest-neighbor")

    @classmethod
    def coinflip(cls, width: int = 4, connectivity: str = "nearest-neighbor") -> "GatePool":
        if connectivity == "nearest-neighbor":
            pairs = [(w, w + 1) for w in range(width - 1)]
        elif connectivity == "fully-connected":
            pairs = [(a, b) for a in range(width) for b in range(a + 1, width)]
        else:
            raise ValueError(f"unknown connectivity {connectivity!r}")
        return cls.rotations_plus(width, pairs, connectivity)


# --------------------------------------------------------------- families


@dataclass(frozen=True)
class StateFamily:
    """Single-qubit input family.

    ``phase-covariant`` states are (|0> + e^{i eta}|1>)/sqrt(2) with eta uniform;
    ``fixed-overlap`` is the pair cos(phi)|0> +- sin(phi)|1>; ``four-state`` is the
    coin-flip quartet |phi_{x,a}>.
    """

    kind: str
    phi: float | None = None
    grid: int = 64

    def __post_init__(self):
        if self.kind not in ("phase-covariant", "fixed-overlap", "four-state"):
            raise ValueError(f"unknown family {self.kind!r}")
        if self.kind != "phase-covariant" and self.phi is None:
            raise ValueError(f"{self.kind} family needs phi")
        if self.grid < 1:
            raise ValueError("grid must be positive")

    def members(self) -> list[PureState]:
        """The deterministic evaluation set (a uniform eta grid for the continuous family)."""
        if self.kind == "phase-covariant":
            return [equatorial_state(2 * math.pi * k / self.grid) for k in range(self.grid)]
        if self.kind == "fixed-overlap":
            c, s = math.cos(self.phi), math.sin(self.phi)
            return [PureState([c, s]), PureState([c, -s])]
        return [cloning.coinflip_state(self.phi, x, a) for x in (0, 1) for a in (0, 1)]

    def sample(self, K: int, seed=None) -> list[PureState]:
        rng = np.random.default_rng(seed)
        if self.kind == "phase-covariant":
            return [equatorial_state(e) for e in rng.uniform(0, 2 * math.pi, K)]
        pool = self.members()
        return [pool[i] for i in rng.integers(len(pool), size=K)]

    def amplitudes(self, K: int | None = None, seed=None) -> np.ndarray:
        states = self.members() if K is None else self.sample(K, seed)
        return np.array([s.amplitudes for s in states])


# ---------------------------------------------------------------- circuits


@dataclass
class StructuredCircuit:
    """A pool-index sequence plus one angle per parameterised gate.

    ``input_wires`` receive the M input copies (everything else starts in |0>)
    and ``clone_wires`` are read out as the N clones, in order.
    """

    pool: GatePool
    structure: tuple
    params: np.ndarray
    input_wires: tuple = (0,)
    clone_wires: tuple = (0, 1)
    ancilla_wires: tuple | None = None

    def __post_init__(self):
        self.structure = tuple(int(i) for i in self.structure)
        self.params = np.asarray(self.params, dtype=float).reshape(-1)
        self.input_wires = tuple(self.input_wires)
        self.clone_wires = tuple(self.clone_wires)
        if any(i < 0 or i >= len(self.pool) for i in self.structure):
            raise ValueError("structure refers to a gate outside the pool")
        if self.params.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {self.params.size}")
        wires = set(self.input_wires) | set(self.clone_wires)
        if any(w < 0 or w >= self.width for w in wires):
            raise ValueError("input/clone wires outside the circuit")
        if len(set(self.clone_wires)) != len(self.clone_wires):
            raise ValueError("clone wires repeat")
        if self.ancilla_wires is not None:
            self.ancilla_wires = tuple(self.ancilla_wires)
            if set(self.ancilla_wires) & set(self.clone_wires):
                raise ValueError("clone wires overlap ancilla wires")

    @property
    def width(self) -> int:
        return self.pool.width

    @property
    def gates(self) -> list:
        return [self.pool.entries[i] for i in self.structure]

    @property
    def n_params(self) -> int:
        return sum(1 for kind, _ in self.gates if kind in PARAM_KINDS)

    @property
    def M(self) -> int:
        return len(self.input_wires)

    @property
    def N(self) -> int:
        return len(self.clone_wires)

    def with_params(self, params) -> "StructuredCircuit":
        return StructuredCircuit(self.pool, self.structure, params, self.input_wires,
                                 self.clone_wires, self.ancilla_wires)

    def to_circuit(self) -> Circuit:
        gates, j = [], 0
        for kind, wires in self.gates:
            if kind in ROTATIONS:
                gates.append(Gate(kind, wires, float(self.params[j])))
                j += 1
            elif kind == "Phase":
                mat = np.diag([1.0, np.exp(1j * self.params[j])])
                gates.append(Gate("Unitary", wires, matrix=mat, label="Phase"))
                j += 1
            else:
                gates.append(Gate(kind, wires))
        return Circuit(gates, self.width)


def fixed_structure(gates: Sequence, width: int, params, input_wires=(0,), clone_wires=(0, 1)) -> StructuredCircuit:
    """Wrap an explicit gate list as a StructuredCircuit with a pool of exactly those gates."""
    pool = GatePool(tuple(gates), width, "custom")
    return StructuredCircuit(pool, tuple(range(len(pool))), params, input_wires, clone_wires)


def ideal_phase_cov_structure(params=None) -> StructuredCircuit:
    """The known optimal phase-covariant circuit, re-expressed as a trainable structure."""
    gates = [("Ry", (1,)), ("CNOT", (1, 2)), ("Ry", (2,)), ("CNOT", (2, 1)), ("Ry", (1,)),
             ("CNOT", (0, 1)), ("CNOT", (0, 2)), ("CNOT", (1, 0)), ("CNOT", (2, 0))]
    if params is None:
        params = [2 * a for a in cloning.PHASE_COV_ANGLES]
    return fixed_structure(gates, 3, params, (cloning.PHASE_COV_INPUT_WIRE,), cloning.PHASE_COV_CLONE_WIRES)


def random_params(sc: StructuredCircuit, seed=None) -> np.ndarray:
    return np.random.default_rng(seed).uniform(0, 2 * math.pi, sc.n_params)


# -------------------------------------------------------- batched simulator


def _rot_batch(kind: str, theta: np.ndarray) -> np.ndarray:
    """Stack of 2x2 gates, one per angle in ``theta``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    if kind == "Rx":
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = out[..., 1, 0] = -1j * s
    elif kind == "Ry":
        out[..., 0, 0] = out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    elif kind == "Rz":
        out[..., 0, 0] = c - 1j * s
        out[..., 1, 1] = c + 1j * s
    else:  # Phase
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.exp(1j * theta)
    return out


def _cz_signs(a: int, b: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return 1 - 2 * (((idx >> a) & 1) & ((idx >> b) & 1))


def _apply_fixed(psi: np.ndarray, mat: np.ndarray, targets, n: int) -> np.ndarray:
    """psi has shape (B, K, 2**n); mat is little-endian over ``targets``."""
    B, K = psi.shape[:2]
    k = len(targets)
    t = psi.reshape((B, K) + (2,) * n)
    axes = [2 + n - 1 - w for w in reversed(targets)]
    g = mat.reshape((2,) * (2 * k))
    out = np.tensordot(g, t, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(B, K, -1)


def _initial_batch(sc: StructuredCircuit, inputs: np.ndarray) -> np.ndarray:
    """(K, 2**n) product states with the input copied onto every input wire."""
    K = inputs.shape[0]
    n = sc.width
    vec = np.ones((K, 1), dtype=complex)
    zero = np.array([1.0, 0.0], dtype=complex)
    for w in reversed(range(n)):  # high wire first in kron order
        local = inputs if w in sc.input_wires else np.broadcast_to(zero, (K, 2))
        vec = np.einsum("ka,kb->kab", vec, local).reshape(K, -1)
    return vec


def simulate_batch(sc: StructuredCircuit, param_sets: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Output amplitudes of shape (B, K, 2**n) for B parameter vectors and K inputs."""
    param_sets = np.atleast_2d(np.asarray(param_sets, dtype=float))
    B = param_sets.shape[0]
    n = sc.width
    psi = np.broadcast_to(_initial_batch(sc, inputs), (B,) + (inputs.shape[0], 2**n)).copy()
    K = inputs.shape[0]
    j = 0
    for kind, wires in sc.gates:
        if kind in PARAM_KINDS:
            mats = _rot_batch(kind, param_sets[:, j])
            j += 1
            w = wires[0]
            v = psi.reshape(B, K * 2 ** (n - 1 - w), 2, 2**w)
            psi = np.matmul(mats[:, None], v).reshape(B, K, -1)
        elif kind == "CZ":
            psi = psi * _cz_signs(wires[0], wires[1], n)
        else:
            psi = _apply_fixed(psi, FIXED_KINDS[kind], wires, n)
    return psi


def _project(psi: np.ndarray, inputs: np.ndarray, wire: int, n: int) -> np.ndarray:
    """Contract ``wire`` with <input| (per family member); the wire is removed."""
    B, K = psi.shape[:2]
    v = psi.reshape(B, K, 2 ** (n - 1 - wire), 2, 2**wire)
    return np.einsum("bkayc,ky->bkac", v, inputs.conj()).reshape(B, K, -1)


def clone_fidelities(psi: np.ndarray, inputs: np.ndarray, clone_wires, n: int):
    """Local fidelities (B, K, N) and global fidelity (B, K)."""
    local = np.stack(
        [np.sum(np.abs(_project(psi, inputs, w, n)) ** 2, axis=-1) for w in clone_wires], axis=-1
    )
    rest, m = psi, n
    for w in sorted(clone_wires, reverse=True):
        rest = _project(rest, inputs, w, m)
        m -= 1
    glob = np.sum(np.abs(rest) ** 2, axis=-1)
    return local, glob


def clone_states(sc: StructuredCircuit, psi: PureState) -> list[DensityMatrix]:
    """Reduced density matrix of every clone for a single input."""
    out = simulate_batch(sc, sc.params[None, :], psi.amplitudes[None, :])[0, 0]
    n = sc.width
    res = []
    for w in sc.clone_wires:
        v = out.reshape(2 ** (n - 1 - w), 2, 2**w)
        res.append(DensityMatrix(np.einsum("ayc,azc->yz", v, v.conj())))
    return res


# ------------------------------------------------------------------- costs


def _check_kind(kind: str):
    if kind not in COST_KINDS:
        raise ValueError(f"unknown cost kind {kind!r}; choose from {COST_KINDS}")


def _cost_from(local: np.ndarray, glob: np.ndarray, kind: str) -> np.ndarray:
    """Costs per parameter set from per-sample fidelities (leading axis B)."""
    if kind == "local":
        return 1.0 - local.mean(axis=(1, 2))
    if kind == "global":
        return 1.0 - glob.mean(axis=1)
    N = local.shape[-1]
    sq = np.sum((1.0 - local) ** 2, axis=-1)
    for i in range(N):
        for j in range(i + 1, N):
            sq = sq + (local[..., i] - local[..., j]) ** 2
    return sq.mean(axis=1)


def _shot_noise(f: np.ndarray, shots: int, rng) -> np.ndarray:
    """Replace exact fidelities by SWAP-test estimates 2 k/L - 1."""
    p = np.clip(0.5 + 0.5 * f, 0.0, 1.0)
    return 2.0 * rng.binomial(shots, p) / shots - 1.0


def _fidelities(sc, params, inputs, shots=None, rng=None):
    psi = simulate_batch(sc, params, inputs)
    local, glob = clone_fidelities(psi, inputs, sc.clone_wires, sc.width)
    if shots is not None:
        local = _shot_noise(local, shots, rng)
        glob = _shot_noise(glob, shots, rng)
    return local, glob


def cost(sc: StructuredCircuit, family: StateFamily, kind: str = "local", K: int | None = None,
         shots: int | None = None, seed=None) -> float:
    """Cloning cost of ``sc`` over ``family``.

    With ``K=None`` the family's deterministic member set is averaged exactly;
    otherwise K members are drawn with ``seed``.  ``shots`` switches on SWAP-test
    sampling noise with that many shots per fidelity.
    """
    _check_kind(kind)
    inputs = family.amplitudes(K, seed)
    rng = np.random.default_rng(seed)
    local, glob = _fidelities(sc, sc.params[None, :], inputs, shots, rng)
    return float(_cost_from(local, glob, kind)[0])


def fidelity_summary(sc: StructuredCircuit, family: StateFamily) -> dict:
    """Mean local fidelity per clone, overall mean and the mean global fidelity."""
    inputs = family.amplitudes()
    local, glob = _fidelities(sc, sc.params[None, :], inputs)
    per_clone = local[0].mean(axis=0)
    return {
        "per_clone": per_clone,
        "mean": float(per_clone.mean()),
        "global": float(glob[0].mean()),
        "asymmetry": float(per_clone.max() - per_clone.min()),
    }


def gradient(sc: StructuredCircuit, family: StateFamily, kind: str = "local", K: int | None = None,
             seed=None) -> np.ndarray:
    """Parameter-shift gradient of the cost (exact expectation over the family).

    Each component uses the two circuits with that angle shifted by +-pi/2; the
    squared cost is differentiated through the chain rule on per-sample
    fidelities, which needs only those same shifted evaluations.
    """
    return cost_and_gradient(sc, family, kind, K, seed)[1]


def cost_and_gradient(sc: StructuredCircuit, family: StateFamily, kind: str = "local", K: int | None = None,
                      seed=None) -> tuple[float, np.ndarray]:
    """Cost and parameter-shift gradient from one batched simulation."""
    _check_kind(kind)
    for k, _ in sc.gates:
        if k in PARAM_KINDS and k not in ROTATIONS:
            raise ValueError(f"parameter-shift rule needs Pauli rotations; {k!r} is not one")
    P = sc.n_params
    inputs = family.amplitudes(K, seed)
    shifts = np.vstack([sc.params[None, :], sc.params + SHIFT * np.eye(P), sc.params - SHIFT * np.eye(P)])
    local, glob = _fidelities(sc, shifts, inputs)
    c = float(_cost_from(local[:1], glob[:1], kind)[0])
    if P == 0:
        return c, np.zeros(0)
    f0 = local[0]
    d_local = 0.5 * (local[1:P + 1] - local[P + 1:])  # (P, K, N)
    d_glob = 0.5 * (glob[1:P + 1] - glob[P + 1:])
    if kind == "local":
        return c, -d_local.mean(axis=(1, 2))
    if kind == "global":
        return c, -d_glob.mean(axis=1)
    N = f0.shape[-1]
    g = np.sum(-2.0 * (1.0 - f0)[None] * d_local, axis=-1)
    for i in range(N):
        for j in range(i + 1, N):
            g = g + 2.0 * (f0[:, i] - f0[:, j])[None] * (d_local[..., i] - d_local[..., j])
    return c, g.mean(axis=1)


def finite_difference_gradient(sc, family, kind="local", h: float = 1e-5) -> np.ndarray:
    """Central differences; used as an independent check on ``gradient``."""
    g = np.zeros(sc.n_params)
    for j in range(sc.n_params):
        e = np.zeros(sc.n_params)
        e[j] = h
        g[j] = (cost(sc.with_params(sc.params + e), family, kind)
                - cost(sc.with_params(sc.params - e), family, kind)) / (2 * h)
    return g


# ---------------------------------------------------------------- training


@dataclass
class TrainConfig:
    lr: float = 0.05
    iters: int = 200
    seed: int | None = 0
    optimizer: str = "adam"
    batch: int | None = None  # None = exact family average
    randomize: bool = False  # draw fresh initial angles from ``seed``


@dataclass
class TrainResult:
    circuit: StructuredCircuit
    cost: float
    trace: list = field(default_factory=list)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "cost"])
        for i, c in enumerate(self.trace):
            w.writerow([i, f"{c:.12g}"])
        return buf.getvalue()


def train(sc: StructuredCircuit, family: StateFamily, kind: str = "local", config: TrainConfig | None = None) -> TrainResult:
    """Gradient descent (plain or Adam) on the angles; returns the best parameters seen."""
    config = config or TrainConfig()
    if config.optimizer not in ("gd", "adam"):
        raise ValueError(f"unknown optimizer {config.optimizer!r}")
    if config.iters < 0 or not math.isfinite(config.lr):
        raise ValueError("iters must be >= 0 and lr finite")
    rng = np.random.default_rng(config.seed)
    params = random_params(sc, rng) if config.randomize else sc.params.copy()
    cur = sc.with_params(params)
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    b1, b2, eps = 0.9, 0.999, 1e-8
    best_params, best_cost = params.copy(), math.inf
    trace = []
    for it in range(config.iters + 1):
        batch_seed = None if config.batch is None else int(rng.integers(2**31))
        if it == config.iters:
            c, g = cost(cur, family, kind, K=config.batch, seed=batch_seed), None
        else:
            c, g = cost_and_gradient(cur, family, kind, K=config.batch, seed=batch_seed)
        if not math.isfinite(c):
            raise FloatingPointError(f"cost became NaN at iteration {it}")
        trace.append(c)
        if c < best_cost:
            best_cost, best_params = c, cur.params.copy()
        if g is None:
            break
        if config.optimizer == "gd":
            step = config.lr * g
        else:
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            mhat = m / (1 - b1 ** (it + 1))
            vhat = v / (1 - b2 ** (it + 1))
            step = config.lr * mhat / (np.sqrt(vhat) + eps)
        cur = cur.with_params(cur.params - step)
    best = sc.with_params(best_params)
    if config.batch is not None:
        best_cost = cost(best, family, kind)
    return TrainResult(best, best_cost, trace)


# --------------------------------------------------------- structure search


@dataclass
class SearchResult:
    best: StructuredCircuit
    cost: float
    restart_costs: list
    accepted: int


def _transfer_params(old: StructuredCircuit, new_structure, rng) -> np.ndarray:
    """Keep angles of untouched rotation slots; draw fresh ones where a new rotation appears."""
    old_iter = iter(old.params)
    out = []
    for oi, ni in zip(old.structure, new_structure):
        old_param = old.pool.entries[oi][0] in PARAM_KINDS
        val = next(old_iter) if old_param else None
        if old.pool.entries[ni][0] in PARAM_KINDS:
            out.append(val if (val is not None and oi == ni) else rng.uniform(0, 2 * math.pi))
    return np.array(out)


def structure_search(pool: GatePool, seq_len: int, restarts: int, family: StateFamily, kind: str = "local",
                     seed=0, sweeps: int = 20, train_iters: int = 150, reopt_iters: int = 40,
                     input_wires=(0,), clone_wires=(0, 1), lr: float = 0.05) -> SearchResult:
    """Greedy variable-structure search.

    Each restart draws a random gate sequence and angles and trains them; then each
    sweep swaps one random position for a random pool gate, re-optimises the
    angles and keeps the change only if the cost strictly drops.
    """
    if len(pool) == 0:
        raise ValueError("gate pool is empty")
    if seq_len < 1 or restarts < 1:
        raise ValueError("seq_len and restarts must be positive")
    rng = np.random.default_rng(seed)
    best, best_cost, restart_costs, accepted = None, math.inf, [], 0

    def fit(structure, params, iters):
        sc = StructuredCircuit(pool, structure, params, input_wires, clone_wires)
        res = train(sc, family, kind, TrainConfig(lr=lr, iters=iters, seed=int(rng.integers(2**31))))
        return res.circuit, res.cost

    for _ in range(restarts):
        structure = tuple(int(i) for i in rng.integers(len(pool), size=seq_len))
        n_par = sum(1 for i in structure if pool.entries[i][0] in PARAM_KINDS)
        cur, cur_cost = fit(structure, rng.uniform(0, 2 * math.pi, n_par), train_iters)
        if len(pool) > 1:
            for _ in range(sweeps):
                pos = int(rng.integers(seq_len))
                new = list(cur.structure)
                new[pos] = int(rng.integers(len(pool)))
                new = tuple(new)
                if new == cur.structure:
                    continue
                cand, cand_cost = fit(new, _transfer_params(cur, new, rng), reopt_iters)
                if cand_cost < cur_cost:
                    cur, cur_cost = cand, cand_cost
                    accepted += 1
        restart_costs.append(cur_cost)
        if cur_cost < best_cost:
            best, best_cost = cur, cur_cost
    return SearchResult(best, best_cost, restart_costs, accepted)


# --------------------------------------------------------- faithfulness


class UnknownOptimumError(ValueError):
    pass


@dataclass
class FaithfulnessReport:
    epsilon: float
    bound: float
    theta: list  # worst Bures angle per clone (global: single entry)
    cost: float
    cost_opt: float
    passed: bool


def _optimum(sc: StructuredCircuit, family: StateFamily, kind: str):
    """(C_opt, F_opt used in the bound, function psi -> optimal clone states)."""
    if sc.M != 1 or sc.N != 2:
        raise UnknownOptimumError("optimal reference cloners are wired for 1->2 only")
    if family.kind == "phase-covariant":
        f_loc = cloning.phase_covariant_local(2)
        f_glob = cloning.phase_cov_global_fidelity(math.pi / 4)

        def ref(psi):
            return cloning.phase_cov_transformation(math.pi / 4, psi)
    elif family.kind == "fixed-overlap":
        if kind == "global":
            raise UnknownOptimumError("no global reference cloner for the fixed-overlap pair")
        s = math.cos(2 * family.phi)
        f_loc = cloning.fixed_overlap_local(s)
        f_glob = None
        a, b = family.members()
        ref = cloning.fixed_overlap_cloner(a, b)
    else:
        raise UnknownOptimumError(f"no known optimum for the {family.kind} family")
    N = sc.N
    if kind == "local":
        return 1 - f_loc, f_loc, ref
    if kind == "squared":
        return N * (1 - f_loc) ** 2, f_loc, ref
    return 1 - f_glob, f_glob, ref


def faithfulness_bound(kind: str, epsilon: float, f_opt: float, N: int) -> float:
    """Bures-angle radius implied by a cost gap epsilon."""
    _check_kind(kind)
    epsilon = max(epsilon, 0.0)
    if kind == "squared":
        return N * epsilon / (2 * (1 - f_opt) * math.sin(f_opt))
    return N * epsilon / math.sin(f_opt)


def faithfulness_audit(sc: StructuredCircuit, family: StateFamily, kind: str = "local") -> FaithfulnessReport:
    """Compare a circuit's clones with the optimal cloner's, state by state."""
    _check_kind(kind)
    c_opt, f_opt, ref = _optimum(sc, family, kind)
    c = cost(sc, family, kind)
    eps = c - c_opt
    bound = faithfulness_bound(kind, eps, f_opt, sc.N)
    if kind == "global":
        worst = [0.0]
    else:
        worst = [0.0] * sc.N
    inputs = family.members()
    psi_out = simulate_batch(sc, sc.params[None, :], family.amplitudes())[0]
    for k, psi in enumerate(inputs):
        opt = ref(psi)
        out = PureState(psi_out[k])
        if kind == "global":
            ours = partial_trace(out, sorted(sc.clone_wires))
            theirs = opt.reduced(sorted(opt.clone_wires))
            worst[0] = max(worst[0], bures_angle(ours, theirs))
            continue
        ours = clone_states(sc, psi)
        for j in range(sc.N):
            worst[j] = max(worst[j], bures_angle(ours[j], opt.clones[j]))
    return FaithfulnessReport(eps, bound, worst, c, c_opt, all(t <= bound + FAITHFUL_ATOL for t in worst))


def cost_inequality(sc: StructuredCircuit, family: StateFamily) -> tuple[float, float]:
    """(C_L, C_G); the pair should satisfy C_L <= C_G <= N C_L."""
    return cost(sc, family, "local"), cost(sc, family, "global")


# ------------------------------------------------------------ serialisation


def to_text(sc: StructuredCircuit) -> str:
    """One gate per line: ``kind wires [param]`` with comma-joined wires."""
    lines = [f"# width={sc.width} inputs={','.join(map(str, sc.input_wires))} "
             f"clones={','.join(map(str, sc.clone_wires))}"]
    j = 0
    for kind, wires in sc.gates:
        w = ",".join(map(str, wires))
        if kind in PARAM_KINDS:
            lines.append(f"{kind} {w} {float(sc.params[j])!r}")
            j += 1
        else:
            lines.append(f"{kind} {w}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> StructuredCircuit:
    header, gates, params = {}, [], []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                header[key] = val
            continue
        parts = line.split()
        kind, wires = parts[0], tuple(int(w) for w in parts[1].split(","))
        gates.append((kind, wires))
        if kind in PARAM_KINDS:
            if len(parts) != 3:
                raise ValueError(f"missing angle in line {raw!r}")
            params.append(float(parts[2]))
    width = int(header.get("width", 1 + max(w for _, ws in gates for w in ws)))
    inputs = tuple(int(x) for x in header.get("inputs", "0").split(","))
    clones = tuple(int(x) for x in header.get("clones", "0,1").split(","))
    return fixed_structure(gates, width, params, inputs, clones)


def as_cloner_handle(sc: StructuredCircuit, name: str = "varqlone"):
    """Wrap a trained 1->2 circuit for the attack harness (clones = (Bob, Eve))."""
    from .attacks import circuit_handle

    if sc.M != 1 or sc.N != 2:
        raise ValueError("attack handles need a 1->2 circuit")
    anc = tuple(w for w in range(sc.width) if w not in sc.clone_wires)
    return circuit_handle(sc.to_circuit(), sc.input_wires[0], sc.clone_wires, anc, name=name)
