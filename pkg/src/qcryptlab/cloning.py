"""Ideal cloning machines, optimal-fidelity closed forms and two-state discrimination."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .qsim import (
    Circuit,
    DensityMatrix,
    Gate,
    PureState,
    apply_circuit,
    apply_matrix,
    as_density,
    from_bloch,
    partial_trace,
    tensor,
    trace_norm,
)

FAMILIES = ("universal", "phase-covariant", "fixed-overlap", "four-state")
FIGURES = ("local", "global", "local-from-global")


class NoClosedFormError(ValueError):
    """Raised when no closed-form optimal fidelity is known for a configuration."""


class DegenerateOverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CloneSpec:
    family: str
    M: int = 1
    N: int = 2
    figure: str = "local"
    s: float | None = None
    phi: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown cloning family {self.family!r}")
        if self.figure not in FIGURES:
            raise ValueError(f"unknown figure of merit {self.figure!r}")
        if not 1 <= self.M <= self.N:
            raise ValueError("need 1 <= M <= N")
        if self.family == "fixed-overlap":
            if self.s is None or not 0.0 <= self.s <= 1.0:
                raise ValueError("fixed-overlap cloning needs an overlap s in [0, 1]")


@dataclass
class CloneOutput:
    """Joint output of a cloner plus its reduced clone states.

    ``clone_wires`` and ``ancilla_wires`` record where things live in ``global_state``.
    """

    global_state: DensityMatrix
    clones: list
    ancilla: DensityMatrix | None = None
    clone_wires: tuple = ()
    ancilla_wires: tuple = ()
    pure: PureState | None = field(default=None, repr=False)

    @classmethod
    def from_pure(cls, psi: PureState, clone_wires, ancilla_wires=()) -> "CloneOutput":
        clones = [partial_trace(psi, [w]) for w in clone_wires]
        anc = partial_trace(psi, list(ancilla_wires)) if ancilla_wires else None
        return cls(psi.density(), clones, anc, tuple(clone_wires), tuple(ancilla_wires), psi)

    def reduced(self, wires) -> DensityMatrix:
        src = self.pure if self.pure is not None else self.global_state
        return partial_trace(src, list(wires))


# ------------------------------------------------------------ closed forms


def universal_local(M: int, N: int) -> float:
    return (M * N + M + N) / (N * (M + 2))


def universal_global(M: int, N: int) -> float:
    return math.factorial(N) * math.factorial(M + 1) / (math.factorial(M) * math.factorial(N + 1))


def phase_covariant_local(N: int) -> float:
    if N % 2:
        return 0.5 * (1 + (N + 1) / (2 * N))
    return 0.5 * (1 + math.sqrt(N * (N + 2)) / (2 * N))


def fixed_overlap_local(s: float) -> float:
    """Optimal symmetric 1->2 local fidelity for two pure states of overlap s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    if s < 1e-9:
        return 1.0
    root = math.sqrt(1 - 2 * s + 9 * s * s)
    inner = -1 + 2 * s + 3 * s * s + (1 - s) * root
    return 0.5 + math.sqrt(2) / (32 * s) * (1 + s) * (3 - 3 * s + root) * math.sqrt(max(inner, 0.0))


def fixed_overlap_global(s: float, M: int = 1, N: int = 2) -> float:
    return 0.5 * (1 + s ** (M + N) + math.sqrt(1 - s ** (2 * M)) * math.sqrt(1 - s ** (2 * N)))


def local_fidelity_of_global_optimal(s: float, M: int = 1, N: int = 2) -> float:
    """Local clone fidelity of the machine that maximises the global fidelity."""
    if s <= 0.0:
        return 1.0
    if s >= 1.0:
        return 1.0
    sm, sn = s**M, s**N
    a = (1 + sm) / (1 + sn) * (1 + s * s + 2 * sn)
    b = (1 - sm) / (1 - sn) * (1 + s * s - 2 * sn)
    c = 2 * (1 - s ** (2 * M)) / (1 - s ** (2 * N)) * (1 - s * s)
    return 0.25 * (a + b + c)


def optimal_fidelity(spec: CloneSpec) -> float:
    fam, fig, M, N = spec.family, spec.figure, spec.M, spec.N
    if fam == "universal":
        if fig == "local":
            return universal_local(M, N)
        if fig == "global":
            return universal_global(M, N)
    elif fam == "phase-covariant":
        if fig == "local" and M == 1:
            return phase_covariant_local(N)
    elif fam == "fixed-overlap":
        if fig == "local" and (M, N) == (1, 2):
            return fixed_overlap_local(spec.s)
        if fig == "global":
            return fixed_overlap_global(spec.s, M, N)
        if fig == "local-from-global":
            return local_fidelity_of_global_optimal(spec.s, M, N)
    raise NoClosedFormError(f"no closed form for {fam} {fig} {M}->{N}")


# ----------------------------------------------------- phase-covariant map


def phase_cov_unitary(eta: float) -> np.ndarray:
    """Isometry of the phase-covariant family, written as an 8x8 matrix.

    Basis labels are (input, blank, ancilla) written high to low; only the columns
    with blank = ancilla are fixed by the map, the rest are completed unitarily.
    Output labels are (clone B, clone E, ancilla).
    """
    c, s = math.cos(eta), math.sin(eta)
    u = np.zeros((8, 8), dtype=complex)
    u[0b000, 0b000] = 1.0
    u[0b010, 0b100] = s
    u[0b100, 0b100] = c
    u[0b011, 0b011] = c
    u[0b101, 0b011] = s
    u[0b111, 0b111] = 1.0
    # columns 001, 010, 101, 110 are unconstrained; complete with an orthonormal basis
    used = [0b000, 0b100, 0b011, 0b111]
    free = [0b001, 0b010, 0b101, 0b110]
    basis = u[:, used]
    comp = np.linalg.svd(np.eye(8) - basis @ basis.conj().T)[0][:, :4]
    for j, col in enumerate(free):
        u[:, col] = comp[:, j]
    return u


def phase_cov_transformation(eta: float, psi: PureState) -> CloneOutput:
    """Apply the eta-family cloner to a single qubit.

    The blank and ancilla start in (|00> + |11>)/sqrt(2).  Wires: clone B = 2,
    clone E = 1, ancilla = 0.
    """
    if not -1e-12 <= eta <= math.pi / 2 + 1e-12:
        raise ValueError("eta must lie in [0, pi/2]")
    if psi.n != 1:
        raise ValueError("the phase-covariant map clones a single qubit")
    bell = PureState(np.array([1, 0, 0, 1]) / math.sqrt(2))
    start = tensor(psi, bell)
    out = phase_cov_unitary(eta) @ start.amplitudes
    return CloneOutput.from_pure(PureState(out), clone_wires=(2, 1), ancilla_wires=(0,))


def phase_cov_global_fidelity(eta: float) -> float:
    return (1 + math.sin(eta) + math.cos(eta)) ** 2 / 8


def global_fidelity(out: CloneOutput, psi: PureState) -> float:
    """<psi^{x N}| rho_clones |psi^{x N}> with clones in ``out.clone_wires`` order."""
    wires = list(out.clone_wires)
    rho = out.reduced(wires)
    # reduced() orders wires ascending; build the target accordingly
    target = tensor(*[psi for _ in wires])
    return rho.expectation(target)


# ------------------------------------------------ ideal phase-covariant circuit

PHASE_COV_ANGLES = (
    math.asin(math.sqrt(0.5 - 1 / (2 * math.sqrt(3)))),
    -math.asin(math.sqrt(0.5 - math.sqrt(3) / 4)),
    math.asin(math.sqrt(0.5 - 1 / (2 * math.sqrt(3)))),
)
PHASE_COV_INPUT_WIRE = 0
PHASE_COV_CLONE_WIRES = (1, 2)


def phase_cov_ideal_circuit() -> Circuit:
    """Three-wire optimal 1->2 equatorial cloner.

    The input sits on wire 0 and the other two wires start in |0>.  The first five
    gates prepare the blank/ancilla resource; the clones come out on wires 1 and 2
    and wire 0 is left as the machine's ancilla.
    """
    a1, a2, a3 = PHASE_COV_ANGLES
    gates = [
        Gate("Ry", [1], 2 * a1),
        Gate("CNOT", [1, 2]),
        Gate("Ry", [2], 2 * a2),
        Gate("CNOT", [2, 1]),
        Gate("Ry", [1], 2 * a3),
        Gate("CNOT", [0, 1]),
        Gate("CNOT", [0, 2]),
        Gate("CNOT", [1, 0]),
        Gate("CNOT", [2, 0]),
    ]
    return Circuit(gates, 3)


def run_clone_circuit(circuit: Circuit, inputs, input_wires, clone_wires, ancilla_wires=()) -> CloneOutput:
    """Load single-qubit ``inputs`` on ``input_wires`` (others |0>), run, and reduce."""
    n = circuit.n
    vec = np.zeros(2**n, dtype=complex)
    vec[0] = 1.0
    # build the input product by swapping amplitudes in wire by wire
    state = vec
    for psi, w in zip(inputs, input_wires):
        prep = np.array([[psi.amplitudes[0], -np.conj(psi.amplitudes[1])],
                         [psi.amplitudes[1], np.conj(psi.amplitudes[0])]])
        state = apply_matrix(state, prep, [w], n)
    out = apply_circuit(PureState(state), circuit)
    return CloneOutput.from_pure(out, clone_wires, ancilla_wires)


# ----------------------------------------------------- fixed-overlap cloning


def fixed_overlap_states(s: float) -> tuple[PureState, PureState]:
    """cos(t)|0> +- sin(t)|1> with cos(2t) = s."""
    t = 0.5 * math.acos(min(1.0, max(0.0, s)))
    return (PureState([math.cos(t), math.sin(t)]), PureState([math.cos(t), -math.sin(t)]))


def fixed_overlap_alpha_minus_beta(s: float) -> float:
    return math.sqrt((1 - s * s) / (1 - s**4))


def fixed_overlap_coefficients(s: float) -> tuple[float, float, float]:
    """(alpha, beta, gamma) from trace, fidelity and alpha-beta constraints."""
    if s <= 0.0:
        return 1.0, 0.0, 0.0
    f = fixed_overlap_local(s)
    d = fixed_overlap_alpha_minus_beta(s)
    beta = (1 - f) / (1 - s * s)
    alpha = beta + d
    gamma = (1 - alpha - beta) / (2 * s)
    return alpha, beta, gamma


def fixed_overlap_clone(s: float, which: int = 0) -> DensityMatrix:
    """Single clone of phi_which as a mix of the two fixed-overlap states.

    rho = a|phi_w><phi_w| + b|phi_o><phi_o| + g(|phi_w><phi_o| + h.c.)
    """
    if which not in (0, 1):
        raise ValueError("which must be 0 or 1")
    if not 0.0 <= s <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    phis = fixed_overlap_states(s)
    if s >= 1.0 - 1e-12:
        warnings.warn("identical states: returning the input as its own clone", DegenerateOverlapWarning)
        return phis[which].density()
    a, b, g = fixed_overlap_coefficients(s)
    pw, po = phis[which].amplitudes, phis[1 - which].amplitudes
    rho = a * np.outer(pw, pw) + b * np.outer(po, po) + g * (np.outer(pw, po) + np.outer(po, pw))
    return DensityMatrix(rho)


def _fo_clone_pair(s: float, omega: float) -> tuple[np.ndarray, np.ndarray]:
    c = math.sqrt((1 - s) / 2)
    r = math.sqrt((1 + s) / 2)
    a, b = r * math.cos(omega), r * math.sin(omega)
    psi0 = np.array([a, c / math.sqrt(2), c / math.sqrt(2), b], dtype=complex)
    zz = np.array([1, -1, -1, 1])
    return psi0, zz * psi0


def _fo_local_fidelity(s: float, omega: float) -> float:
    psi0, _ = _fo_clone_pair(s, omega)
    rho = partial_trace(PureState(psi0), [1]).entries
    phi0 = fixed_overlap_states(s)[0].amplitudes
    return float(np.real(np.vdot(phi0, rho @ phi0)))


def _complete_isometry(inp: np.ndarray, out: np.ndarray) -> np.ndarray:
    """Unitary U with U inp[:, k] = out[:, k], given matching Gram matrices."""
    dim = inp.shape[0]

    def orthobasis(cols):
        q, _ = np.linalg.qr(cols)
        # extend to a full basis
        full = np.linalg.svd(np.eye(dim) - q @ q.conj().T)[0][:, : dim - q.shape[1]]
        return q, full

    qi, ri = np.linalg.qr(inp)
    qo = out @ np.linalg.inv(ri)
    _, fi = orthobasis(qi)
    _, fo = orthobasis(qo)
    return np.hstack([qo, fo]) @ np.hstack([qi, fi]).conj().T


@lru_cache(maxsize=64)
def optimal_fixed_overlap_unitary(s: float) -> np.ndarray:
    """Two-qubit unitary realising the optimal symmetric 1->2 fixed-overlap cloner.

    The input qubit sits on wire 1 (high), the blank on wire 0 (low) in |0>.
    """
    if not 0.0 <= s < 1.0:
        raise ValueError("overlap must lie in [0, 1)")
    res = minimize_scalar(lambda w: -_fo_local_fidelity(s, w), bounds=(0.0, math.pi / 2),
                          method="bounded", options={"xatol": 1e-12})
    psi0, psi1 = _fo_clone_pair(s, res.x)
    p0, p1 = fixed_overlap_states(s)
    zero = np.array([1.0, 0.0])
    inp = np.stack([np.kron(p0.amplitudes, zero), np.kron(p1.amplitudes, zero)], axis=1)
    out = np.stack([psi0, psi1], axis=1)
    u = _complete_isometry(inp, out)
    return u


def pair_frame(psi_a: PureState, psi_b: PureState) -> np.ndarray:
    """Qubit unitary V with V phi_0 = psi_a and V phi_1 = psi_b (overlap must be real, >= 0)."""
    s = psi_a.overlap(psi_b)
    if abs(s.imag) > 1e-10 or s.real < -1e-10:
        raise ValueError("pair frame needs a real non-negative overlap")
    p0, p1 = fixed_overlap_states(float(s.real))
    inp = np.stack([p0.amplitudes, p1.amplitudes], axis=1)
    out = np.stack([psi_a.amplitudes, psi_b.amplitudes], axis=1)
    if abs(s.real - 1) < 1e-12:
        return _complete_isometry(inp[:, :1], out[:, :1])
    return _complete_isometry(inp, out)


def fixed_overlap_cloner(psi_a: PureState, psi_b: PureState):
    """Optimal symmetric cloner for the pair {psi_a, psi_b}; returns a callable.

    The callable maps an input qubit to a CloneOutput with clones on wires (1, 0).
    """
    s = float(psi_a.overlap(psi_b).real)
    v = pair_frame(psi_a, psi_b)
    u = np.kron(v, v) @ optimal_fixed_overlap_unitary(s) @ np.kron(v.conj().T, np.eye(2))

    def clone(psi: PureState) -> CloneOutput:
        out = u @ np.kron(psi.amplitudes, [1.0, 0.0])
        return CloneOutput.from_pure(PureState(out), clone_wires=(1, 0))

    clone.unitary = u
    return clone


# ------------------------------------------------------ four-state cloning


def coinflip_state(phi: float, x: int, a: int) -> PureState:
    """The four encodings |phi_{x,a}> of the coin-flip family."""
    if a == 0:
        return PureState([math.cos(phi), (-1) ** x * math.sin(phi)])
    return PureState([math.sin(phi), (-1) ** (x ^ 1) * math.cos(phi)])


def four_state_shrinking(phi: float) -> tuple[float, float]:
    s2, c2 = math.sin(2 * phi) ** 2, math.cos(2 * phi) ** 2
    norm = math.sqrt(s2 * s2 + c2 * c2)
    return s2 / norm, c2 / norm


def four_state_bloch(phi: float, x: int, a: int) -> np.ndarray:
    """Bloch direction of |phi_{x,a}>."""
    return np.array([
        (-1) ** (x ^ a) * math.sin(2 * phi),
        0.0,
        (-1) ** a * math.cos(2 * phi),
    ])


def four_state_clone(phi: float, x: int, a: int) -> DensityMatrix:
    """Clone of |phi_{x,a}> from the optimal four-state machine: shrunk Bloch vector."""
    if not 0.0 < phi <= math.pi / 4 + 1e-12:
        raise ValueError("phi must lie in (0, pi/4]")
    if x not in (0, 1) or a not in (0, 1):
        raise ValueError("x and a are bits")
    ex, ez = four_state_shrinking(phi)
    m = four_state_bloch(phi, x, a)
    return from_bloch([ex * m[0], 0.0, ez * m[2]])


# ------------------------------------------------------------ discrimination


def helstrom_prob(rho1, rho2, q1: float = 0.5, q2: float = 0.5) -> float:
    """Optimal minimum-error success probability 1/2 + ||q1 rho1 - q2 rho2||_1 / 2."""
    if q1 < 0 or q2 < 0 or abs(q1 + q2 - 1) > 1e-12:
        raise ValueError("priors must be non-negative and sum to one")
    r1, r2 = as_density(rho1), as_density(rho2)
    if r1.dim != r2.dim:
        raise ValueError("dimension mismatch")
    return 0.5 + 0.5 * trace_norm(q1 * r1.entries - q2 * r2.entries)


def helstrom_measurement(rho1, rho2, q1: float = 0.5, q2: float = 0.5) -> np.ndarray:
    """Projector onto the positive part of q1 rho1 - q2 rho2 (guess 1 on that outcome)."""
    diff = q1 * as_density(rho1).entries - q2 * as_density(rho2).entries
    w, v = np.linalg.eigh(0.5 * (diff + diff.conj().T))
    pos = v[:, w > 0]
    return pos @ pos.conj().T


def unambiguous_disc(theta: float) -> dict:
    """Unambiguous discrimination of two equiprobable pure states at angle theta."""
    if not -1e-12 <= theta <= math.pi / 2 + 1e-12:
        raise ValueError("theta must lie in [0, pi/2]")
    c = math.cos(theta)
    return {"p_conclusive": 1 - c, "p_inconclusive": c, "p_error": 0.0}
