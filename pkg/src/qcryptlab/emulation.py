"""Universal quantum emulation from input/output samples, and forgery attacks built on it.

Register layout used by :func:`build_qe` for an n-qubit system and K samples::

    wires 0 .. n-1             main register (carries the target)
    wires n .. n+K-2           one ancilla per non-reference sample (first stage)
    wire  n+K-1                post-selection ancilla (second stage)
    wires n+K .. 2n+K-1        register holding the reference output (third stage)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qsim import (
    Circuit,
    DensityMatrix,
    Gate,
    PureState,
    apply_circuit,
    apply_matrix,
    fidelity,
    haar_sample,
    partial_trace,
    state_preparation,
)

MAX_QE_DIM = 16


@dataclass
class EmulationSamples:
    inputs: list
    outputs: list
    reference_index: int = 0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs must have the same length")
        if not self.inputs:
            raise ValueError("need at least one sample")
        dims = {s.dim for s in list(self.inputs) + list(self.outputs)}
        if len(dims) != 1:
            raise ValueError(f"samples have mixed dimensions {sorted(dims)}")
        if not 0 <= self.reference_index < len(self.inputs):
            raise ValueError("reference index out of range")

    @property
    def dim(self) -> int:
        return self.inputs[0].dim

    @property
    def n(self) -> int:
        return self.inputs[0].n

    @property
    def reference(self) -> PureState:
        return self.inputs[self.reference_index]

    @property
    def reference_output(self) -> PureState:
        return self.outputs[self.reference_index]

    def others(self) -> list[tuple[PureState, PureState]]:
        return [(i, o) for k, (i, o) in enumerate(zip(self.inputs, self.outputs)) if k != self.reference_index]

    @classmethod
    def from_unitary(cls, inputs, unitary: np.ndarray, reference_index: int = 0) -> "EmulationSamples":
        outs = [PureState(unitary @ s.amplitudes) for s in inputs]
        return cls(list(inputs), outs, reference_index)


@dataclass
class QEResult:
    output_state: DensityMatrix | None
    stage1_success_prob: float
    postselected: bool
    stage2_prob: float = 0.0
    unconditioned_state: DensityMatrix | None = None
    fidelity: float | None = None
    unconditioned_fidelity: float | None = None


@dataclass(frozen=True)
class QELayout:
    n: int
    blocks: int

    @property
    def main(self):
        return list(range(self.n))

    @property
    def stage1_ancillas(self):
        return list(range(self.n, self.n + self.blocks))

    @property
    def stage2_ancilla(self):
        return self.n + self.blocks

    @property
    def reference_register(self):
        start = self.n + self.blocks + 1
        return list(range(start, start + self.n))

    @property
    def width(self):
        return 2 * self.n + self.blocks + 1


def controlled_reflection(phi: PureState, control: int, register) -> Gate:
    return Gate("ControlledReflection", [control, *register], state=phi.amplitudes)


def _minus_prep(wire: int, label: str) -> list[Gate]:
    return [Gate("X", [wire], label=label), Gate("H", [wire], label=label)]


def build_qe(samples: EmulationSamples) -> Circuit:
    """Gate list of the four-stage emulation circuit (labels: prep, stage1..stage4).

    The second-stage measurement is not a gate: the post-selection ancilla is never
    touched again after its Hadamard, so :func:`run_qe` measures it at the end.
    """
    if samples.dim > MAX_QE_DIM:
        raise ValueError(f"emulation is limited to dimension {MAX_QE_DIM}")
    others = samples.others()
    lay = QELayout(samples.n, len(others))
    main = lay.main
    ref_in, ref_out = samples.reference, samples.reference_output
    gates = []
    for a in lay.stage1_ancillas:
        gates += _minus_prep(a, "prep")
    gates += _minus_prep(lay.stage2_ancilla, "prep")
    gates.append(Gate("Unitary", lay.reference_register, matrix=state_preparation(ref_out), label="prep"))

    for a, (phi_in, _) in zip(lay.stage1_ancillas, others):
        gates.append(_label(controlled_reflection(ref_in, a, main), "stage1"))
        gates.append(Gate("H", [a], label="stage1"))
        gates.append(_label(controlled_reflection(phi_in, a, main), "stage1"))

    gates.append(_label(controlled_reflection(ref_in, lay.stage2_ancilla, main), "stage2"))
    gates.append(Gate("H", [lay.stage2_ancilla], label="stage2"))

    for m, r in zip(main, lay.reference_register):
        gates.append(Gate("SWAP", [m, r], label="stage3"))

    # undo the first stage in the output frame, last block first
    for a, (_, phi_out) in reversed(list(zip(lay.stage1_ancillas, others))):
        gates.append(_label(controlled_reflection(phi_out, a, main), "stage4"))
        gates.append(Gate("H", [a], label="stage4"))
        gates.append(_label(controlled_reflection(ref_out, a, main), "stage4"))
    return Circuit(gates, lay.width)


def _label(g: Gate, label: str) -> Gate:
    return Gate(g.kind, g.targets, g.param, g.state, g.matrix, label)


def qe_layout(samples: EmulationSamples) -> QELayout:
    return QELayout(samples.n, len(samples.others()))


def _initial(lay: QELayout, target: PureState) -> PureState:
    vec = np.zeros(2 ** (lay.width - lay.n), dtype=complex)
    vec[0] = 1.0
    return PureState(np.kron(vec, target.amplitudes))


def stage1_state(samples: EmulationSamples, target: PureState) -> PureState:
    """Main register plus first-stage ancillas after the first stage (other wires in |0>)."""
    lay = qe_layout(samples)
    circ = build_qe(samples)
    sub = Circuit([g for g in circ.gates if g.label == "stage1" or
                   (g.label == "prep" and g.targets[0] in lay.stage1_ancillas)], lay.width)
    out = apply_circuit(_initial(lay, target), sub).amplitudes
    keep = lay.n + lay.blocks
    return PureState(out[: 2**keep])


def run_qe(samples: EmulationSamples, target: PureState, unitary=None, expected: PureState | None = None) -> QEResult:
    """Simulate the emulator on ``target``.

    If ``unitary`` or ``expected`` is given, fidelities against U|target> are filled in.
    """
    if target.dim != samples.dim:
        raise ValueError("target dimension does not match the samples")
    lay = qe_layout(samples)
    circ = build_qe(samples)

    chi = stage1_state(samples, target)
    rho_main = partial_trace(chi, lay.main)
    p_ref = rho_main.expectation(samples.reference)
    p_stage1 = float(abs(p_ref) ** 2)

    final = apply_circuit(_initial(lay, target), circ).amplitudes
    bit = lay.stage2_ancilla
    idx = np.arange(final.size)
    keep0 = ((idx >> bit) & 1) == 0
    post = np.where(keep0, final, 0.0)
    p2 = float(np.vdot(post, post).real)

    uncond = partial_trace(PureState(final), lay.main)
    if expected is None and unitary is not None:
        expected = PureState(np.asarray(unitary) @ target.amplitudes)

    if p2 < 1e-14:
        res = QEResult(None, p_stage1, False, p2, uncond)
    else:
        post_state = PureState(post / math.sqrt(p2))
        res = QEResult(partial_trace(post_state, lay.main), p_stage1, True, p2, uncond)
    if expected is not None:
        if res.output_state is not None:
            res.fidelity = fidelity(res.output_state, expected.density())
        res.unconditioned_fidelity = fidelity(uncond, expected.density())
    return res


# ----------------------------------------------------------- closed forms


def chi_recursion(samples: EmulationSamples, target: PureState) -> PureState:
    """First-stage output via chi_i = P_r chi|0> + R_i (1 - P_r) chi|1>, ancillas stacked high."""
    ref = samples.reference.amplitudes
    proj = np.outer(ref, ref.conj())
    chi = target.amplitudes.copy()
    for phi_in, _ in samples.others():
        v = phi_in.amplitudes
        refl = np.eye(v.size) - 2 * np.outer(v, v.conj())
        block0 = (proj @ chi.reshape(-1, v.size).T).T.reshape(-1)
        rest = chi - block0
        block1 = (refl @ rest.reshape(-1, v.size).T).T.reshape(-1)
        chi = np.concatenate([block0, block1])
    return PureState(chi)


def chi_closed_form(samples: EmulationSamples, target: PureState, K: int) -> PureState:
    """Closed-form first-stage state for one or two blocks, built from pairwise overlaps."""
    others = samples.others()
    if K not in (1, 2):
        raise NotImplementedError("closed form only for one or two blocks; use chi_recursion")
    if len(others) != K:
        raise ValueError(f"K={K} does not match {len(others)} non-reference samples")
    r = samples.reference.amplitudes
    psi = target.amplitudes
    p1 = others[0][0].amplitudes

    alpha = np.vdot(r, psi)
    beta1 = np.vdot(p1, psi)
    g1 = np.vdot(p1, r)
    w = psi - alpha * r - 2 * beta1 * p1 + 2 * alpha * g1 * p1
    if K == 1:
        return PureState(np.concatenate([alpha * r, w]))

    p2 = others[1][0].amplitudes
    beta2 = np.vdot(p2, psi)
    g2 = np.vdot(p2, r)
    d = np.vdot(p2, p1)
    c = 2 * np.vdot(r, p1) * (alpha * g1 - beta1)
    w2 = beta2 - (alpha + c) * g2 + 2 * (alpha * g1 - beta1) * d
    last = psi - (alpha + c) * r + 2 * (alpha * g1 - beta1) * p1 - 2 * w2 * p2
    zero = np.zeros_like(psi)
    # ancilla order (high to low): a2, a1
    return PureState(np.concatenate([alpha * r, c * r, zero, last]))


# ------------------------------------------------------------ attacks


def one_block_bound(alpha: float) -> float:
    return alpha**2 * (1 + 4 * (1 - alpha**2) ** 2)


def one_block_attack(alpha: float, dim: int = 2, seed=None) -> dict:
    """Emulate a target from one sample plus a reference leaning towards it.

    The reference is sqrt(1 - alpha^2)|phi_1> + alpha|psi> with <phi_1|psi> = 0.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    frame = haar_sample("unitary", dim, rng)
    hidden = haar_sample("unitary", dim, rng)
    phi1, psi = frame[:, 0], frame[:, 1]
    ref = math.sqrt(1 - alpha**2) * phi1 + alpha * psi
    samples = EmulationSamples.from_unitary([PureState(ref), PureState(phi1)], hidden)
    res = run_qe(samples, PureState(psi), unitary=hidden)
    return {
        "bound": one_block_bound(alpha),
        "simulated_fidelity": res.fidelity,
        "stage1_success_prob": res.stage1_success_prob,
        "result": res,
    }


def three_state_forgery_prob(gamma: float) -> float:
    if not -1e-12 <= gamma <= 1 / math.sqrt(2) + 1e-12:
        raise ValueError("gamma must lie in [0, 1/sqrt(2)]")
    g2 = gamma * gamma
    return g2 * (2 - 5 * g2 + 3 * g2 * g2)


def span_samples(basis: list, unitary: np.ndarray) -> EmulationSamples:
    """Samples for a leaked span: the basis states plus their equal-weight sum as reference."""
    vecs = np.stack([b.amplitudes for b in basis])
    ref = vecs.sum(axis=0)
    ref = PureState(ref / np.linalg.norm(ref))
    return EmulationSamples.from_unitary([ref, *basis], unitary, reference_index=0)


# ------------------------------------------------ sample conversion


def invert_samples(f_pairs, superposed_pair: PureState, seed=None) -> EmulationSamples:
    """Turn queries of U_f (one-bit f) into emulation samples for U_{f^-1}.

    ``f_pairs`` is [(x1, y1), (xk, yk)].  ``superposed_pair`` is the U_f output
    (|x1, y1> + |xk, yk>)/sqrt(2) on two qubits, first register high.
    The returned reference may carry either sign; ``notes["sign"]`` records it.
    """
    (x1, y1), (xk, yk) = f_pairs
    expect = np.zeros(4, dtype=complex)
    expect[2 * x1 + y1] += 1
    expect[2 * xk + yk] += 1
    expect /= np.linalg.norm(expect)
    amps = superposed_pair.amplitudes
    if amps.size != 4 or abs(abs(np.vdot(expect, amps)) - 1) > 1e-9:
        raise ValueError("superposed pair is not of the form (|x1,y1> + |xk,yk>)/sqrt(2)")
    rng = np.random.default_rng(seed)

    # ancilla on wire 2, x register on wire 1, y register on wire 0
    state = np.kron([1.0, 0.0], amps)
    state = apply_matrix(state, Gate("SWAP", [1, 2]).unitary(), [1, 2], 3)
    state = apply_matrix(state, Gate("H", [2]).unitary(), [2], 3)
    branches = state.reshape(2, 4)
    probs = np.sum(np.abs(branches) ** 2, axis=1)
    outcome = int(rng.random() >= probs[0])
    conv = branches[outcome] / math.sqrt(probs[outcome])
    swap = Gate("SWAP", [0, 1]).unitary()
    ref_in = PureState(swap @ conv)

    ref_out = swap @ amps
    if outcome == 1:
        ref_out = np.kron(np.eye(2), np.diag([1, -1])) @ ref_out
    phi1_in = PureState(np.kron(np.eye(2)[y1], [1.0, 0.0]))
    phi1_out = PureState(np.kron(np.eye(2)[y1], np.eye(2)[x1]))
    samples = EmulationSamples([ref_in, phi1_in], [PureState(ref_out), phi1_out], reference_index=0)
    samples.notes["sign"] = +1 if outcome == 0 else -1
    samples.notes["outcome_probs"] = probs.tolist()
    return samples


def inverse_oracle(f: dict) -> np.ndarray:
    """Standard oracle |y, t> -> |y, f^-1(y) xor t> on two qubits for an invertible bit map."""
    inv = {v: k for k, v in f.items()}
    u = np.zeros((4, 4))
    for y in (0, 1):
        for t in (0, 1):
            u[2 * y + (inv[y] ^ t), 2 * y + t] = 1
    return u
