"""Dense state-vector and density-matrix simulator for small registers.

Conventions
-----------
Qubit 0 is the least significant bit of a basis index, so ``|q_{n-1} ... q_1 q_0>``
maps to the integer ``sum_j q_j 2**j``.  ``np.kron(a, b)`` therefore puts ``b`` on
the low wires and ``a`` on the high wires.

A gate matrix is written over its own ``targets`` list in the same little-endian
order: the row index of a two-qubit gate with targets ``[c, t]`` is ``b_c + 2*b_t``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_DENSITY_QUBITS = 6
# Pure states are cheap, and the emulation circuits need a few extra wires.
MAX_PURE_QUBITS = 14

ATOL = 1e-12


def _num_qubits(dim: int) -> int:
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass(frozen=True)
class PureState:
    """Normalised amplitude vector over ``n`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = _num_qubits(amps.size)
        if n > MAX_PURE_QUBITS:
            raise ValueError(f"{n} qubits exceeds the pure-state limit {MAX_PURE_QUBITS}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalised (norm^2 = {norm:.3e})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n(self) -> int:
        return _num_qubits(self.amplitudes.size)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        n = _num_qubits(rho.shape[0])
        if n > MAX_DENSITY_QUBITS:
            raise ValueError(f"{n} qubits exceeds the density-matrix limit {MAX_DENSITY_QUBITS}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace is {np.trace(rho).real:.6g}, expected 1")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix has negative eigenvalues")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def n(self) -> int:
        return _num_qubits(self.entries.shape[0])

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def expectation(self, psi: PureState) -> float:
        """<psi|rho|psi>, which is the fidelity with a pure state."""
        v = psi.amplitudes
        return float(np.real(np.vdot(v, self.entries @ v)))


def as_density(state: PureState | DensityMatrix | np.ndarray) -> DensityMatrix:
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.density()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return PureState(arr).density()
    return DensityMatrix(arr)


def ket(bits: str) -> PureState:
    """Computational basis state from a bit string written high wire first.

    ``ket("10")`` has wire 1 set and wire 0 clear, i.e. basis index 2.
    """
    vec = np.zeros(2 ** len(bits), dtype=complex)
    vec[int(bits, 2)] = 1.0
    return PureState(vec)


def tensor(*states: PureState) -> PureState:
    """Kronecker product; the first argument lands on the highest wires."""
    out = np.array([1.0 + 0j])
    for s in states:
        out = np.kron(out, s.amplitudes)
    return PureState(out)


def tensor_dm(*states: DensityMatrix) -> DensityMatrix:
    out = np.array([[1.0 + 0j]])
    for s in states:
        out = np.kron(out, as_density(s).entries)
    return DensityMatrix(out)


# --------------------------------------------------------------------- gates

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

ROTATIONS = {"Rx": PAULI_X, "Ry": PAULI_Y, "Rz": PAULI_Z}
FIXED_1Q = {"H": HADAMARD, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}
ARITY = {"CNOT": 2, "CZ": 2, "SWAP": 2, "CSWAP": 3}
GATE_KINDS = set(ROTATIONS) | set(FIXED_1Q) | set(ARITY) | {"ControlledReflection", "Unitary"}


def rotation(kind: str, theta: float) -> np.ndarray:
    """exp(-i theta P / 2) for the Pauli P named by ``kind``."""
    pauli = ROTATIONS[kind]
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * pauli


def _permutation_gate(k: int, fn) -> np.ndarray:
    """Matrix of a classical reversible map on k little-endian bits."""
    dim = 2**k
    mat = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = [(idx >> j) & 1 for j in range(k)]
        out = fn(bits)
        mat[sum(b << j for j, b in enumerate(out)), idx] = 1.0
    return mat


def _cnot(b):
    return [b[0], b[1] ^ b[0]]


def _swap(b):
    return [b[1], b[0]]


def _cswap(b):
    return [b[0], b[2], b[1]] if b[0] else list(b)


_CNOT = _permutation_gate(2, _cnot)
_SWAP = _permutation_gate(2, _swap)
_CSWAP = _permutation_gate(3, _cswap)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)


def reflection(phi: np.ndarray) -> np.ndarray:
    """I - 2|phi><phi|, i.e. exp(i pi |phi><phi|)."""
    phi = np.asarray(phi, dtype=complex)
    return np.eye(phi.size, dtype=complex) - 2.0 * np.outer(phi, phi.conj())


def is_unitary(mat: np.ndarray, atol: float = 1e-10) -> bool:
    mat = np.asarray(mat)
    return np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=atol)


@dataclass(frozen=True)
class Gate:
    """One gate acting on ``targets``.

    Rotation kinds take ``param``.  ``ControlledReflection`` takes ``state`` (the
    reflected vector over ``targets[1:]``) and uses ``targets[0]`` as control.
    ``Unitary`` takes an explicit ``matrix`` over ``targets``.
    ``label`` is free-form bookkeeping (e.g. the stage of a larger algorithm).
    """

    kind: str
    targets: tuple
    param: float | None = None
    state: np.ndarray | None = field(default=None, compare=False, repr=False)
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"repeated target in {self.kind} {self.targets}")
        k = len(self.targets)
        if self.kind in ROTATIONS:
            if self.param is None:
                raise ValueError(f"{self.kind} needs a rotation angle")
            if k != 1:
                raise ValueError(f"{self.kind} acts on one qubit")
        elif self.kind in FIXED_1Q and k != 1:
            raise ValueError(f"{self.kind} acts on one qubit")
        elif self.kind in ARITY and k != ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {ARITY[self.kind]} qubits")
        elif self.kind == "ControlledReflection":
            if self.state is None or k < 2:
                raise ValueError("ControlledReflection needs a control, register wires and a state")
            vec = np.asarray(self.state, dtype=complex).reshape(-1)
            if vec.size != 2 ** (k - 1):
                raise ValueError("reflection state does not match the register width")
            if abs(np.linalg.norm(vec) - 1) > 1e-10:
                raise ValueError("reflection state is not normalised")
            object.__setattr__(self, "state", vec)
        elif self.kind == "Unitary":
            mat = np.asarray(self.matrix, dtype=complex)
            if mat.shape != (2**k, 2**k):
                raise ValueError("custom gate matrix does not match its targets")
            if not is_unitary(mat):
                raise ValueError("custom gate matrix is not unitary")
            object.__setattr__(self, "matrix", mat)

    @property
    def is_parameterized(self) -> bool:
        return self.kind in ROTATIONS

    def with_param(self, theta: float) -> "Gate":
        return Gate(self.kind, self.targets, float(theta), self.state, self.matrix, self.label)

    def unitary(self) -> np.ndarray:
        kind = self.kind
        if kind in ROTATIONS:
            return rotation(kind, self.param)
        if kind in FIXED_1Q:
            return FIXED_1Q[kind]
        if kind == "CNOT":
            return _CNOT
        if kind == "CZ":
            return _CZ
        if kind == "SWAP":
            return _SWAP
        if kind == "CSWAP":
            return _CSWAP
        if kind == "ControlledReflection":
            dim = self.state.size
            p0 = np.diag([1.0, 0.0]).astype(complex)
            p1 = np.diag([0.0, 1.0]).astype(complex)
            return np.kron(np.eye(dim), p0) + np.kron(reflection(self.state), p1)
        return self.matrix


@dataclass(frozen=True)
class Circuit:
    gates: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(t < 0 or t >= self.n for t in g.targets):
                raise ValueError(f"gate {g.kind} on {g.targets} is outside a {self.n}-qubit circuit")

    def __len__(self):
        return len(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.gates + other.gates, self.n)

    def select(self, label: str) -> "Circuit":
        return Circuit([g for g in self.gates if g.label == label], self.n)

    def inverse(self) -> "Circuit":
        inv = []
        for g in reversed(self.gates):
            if g.is_parameterized:
                inv.append(g.with_param(-g.param))
            elif g.kind in ("Unitary",):
                inv.append(Gate("Unitary", g.targets, matrix=g.matrix.conj().T, label=g.label))
            else:
                # Every remaining kind is self-inverse.
                inv.append(g)
        return Circuit(inv, self.n)


def _apply_to_axes(tensor: np.ndarray, mat: np.ndarray, axes: list[int]) -> np.ndarray:
    """Contract a k-qubit matrix into the given tensor axes (high-bit axis first)."""
    k = len(axes)
    g = mat.reshape((2,) * (2 * k))
    out = np.tensordot(g, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _axes_for(targets: Sequence[int], n: int) -> list[int]:
    # reshape axis a holds qubit n-1-a; the gate's high bit is targets[-1]
    return [n - 1 - t for t in reversed(targets)]


def apply_matrix(vec: np.ndarray, mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply a little-endian gate matrix to a raw amplitude vector."""
    psi = np.asarray(vec, dtype=complex).reshape((2,) * n)
    psi = _apply_to_axes(psi, mat, _axes_for(targets, n))
    return psi.reshape(-1)


def apply_matrix_dm(rho: np.ndarray, mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
    axes = _axes_for(targets, n)
    t = _apply_to_axes(t, mat, axes)
    t = _apply_to_axes(t, mat.conj(), [a + n for a in axes])
    return t.reshape(2**n, 2**n)


def apply_circuit(state, circuit: Circuit):
    """Run ``circuit`` on a PureState or DensityMatrix and return the same kind."""
    if state.n != circuit.n:
        raise ValueError(f"circuit width {circuit.n} does not match a {state.n}-qubit state")
    if isinstance(state, PureState):
        vec = state.amplitudes
        for g in circuit.gates:
            vec = apply_matrix(vec, g.unitary(), g.targets, circuit.n)
        return PureState(vec / np.linalg.norm(vec))
    if isinstance(state, DensityMatrix):
        rho = state.entries
        for g in circuit.gates:
            rho = apply_matrix_dm(rho, g.unitary(), g.targets, circuit.n)
        rho = 0.5 * (rho + rho.conj().T)
        return DensityMatrix(rho / np.trace(rho).real)
    raise TypeError(f"cannot apply a circuit to {type(state).__name__}")


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    dim = 2**circuit.n
    cols = np.eye(dim, dtype=complex)
    out = np.empty_like(cols)
    for j in range(dim):
        vec = cols[:, j]
        for g in circuit.gates:
            vec = apply_matrix(vec, g.unitary(), g.targets, circuit.n)
        out[:, j] = vec
    return out


def embed(mat: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full 2^n matrix of any operator acting on ``targets`` (identity elsewhere)."""
    dim = 2**n
    out = np.empty((dim, dim), dtype=complex)
    for j in range(dim):
        col = np.zeros(dim, dtype=complex)
        col[j] = 1.0
        out[:, j] = apply_matrix(col, np.asarray(mat, dtype=complex), targets, n)
    return out


# ------------------------------------------------------------ partial trace


def partial_trace(rho: DensityMatrix | PureState, keep) -> DensityMatrix:
    """Reduced state on the wires in ``keep`` (kept in ascending wire order)."""
    if isinstance(rho, PureState):
        return _partial_trace_pure(rho, keep)
    n = rho.n
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep set {keep} out of range for {n} qubits")
    keep_axes = [n - 1 - q for q in reversed(keep)]
    drop_axes = [a for a in range(n) if a not in keep_axes]
    t = rho.entries.reshape((2,) * (2 * n))
    order = keep_axes + drop_axes + [a + n for a in keep_axes + drop_axes]
    dk, dd = 2 ** len(keep), 2 ** len(drop_axes)
    t = np.transpose(t, order).reshape(dk, dd, dk, dd)
    red = np.einsum("ajbj->ab", t)
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red)


def _partial_trace_pure(psi: PureState, keep) -> DensityMatrix:
    n = psi.n
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set is empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep set {keep} out of range for {n} qubits")
    t = psi.amplitudes.reshape((2,) * n)
    keep_axes = [n - 1 - q for q in reversed(keep)]
    drop_axes = [a for a in range(n) if a not in keep_axes]
    mat = np.transpose(t, keep_axes + drop_axes).reshape(2 ** len(keep), -1)
    red = mat @ mat.conj().T
    red = 0.5 * (red + red.conj().T)
    return DensityMatrix(red / np.trace(red).real)


# --------------------------------------------------------------- distances


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def _check_pair(rho, sigma):
    rho, sigma = as_density(rho), as_density(sigma)
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    return rho, sigma


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        if rho.dim != sigma.dim:
            raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
        return float(min(1.0, abs(np.vdot(rho.amplitudes, sigma.amplitudes)) ** 2))
    if isinstance(rho, PureState) or isinstance(sigma, PureState):
        # one side pure: F = <psi|sigma|psi>, no matrix square roots needed
        psi, other = (rho, sigma) if isinstance(rho, PureState) else (sigma, rho)
        other = as_density(other)
        if psi.dim != other.dim:
            raise ValueError(f"dimension mismatch: {psi.dim} vs {other.dim}")
        v = psi.amplitudes
        return float(min(1.0, max(0.0, np.real(np.vdot(v, other.entries @ v)))))
    rho, sigma = _check_pair(rho, sigma)
    for a, b in ((rho, sigma), (sigma, rho)):
        w, v = np.linalg.eigh(a.entries)
        if w[-2] < 1e-12:
            # rank one up to round-off: the square roots would only amplify noise
            return fidelity(PureState(v[:, -1]), b)
    sr = _psd_sqrt(rho.entries)
    inner = sr @ sigma.entries @ sr
    w = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    w = np.clip(w, 0.0, None)
    return float(min(1.0, np.sum(np.sqrt(w)) ** 2))


def trace_norm(mat: np.ndarray) -> float:
    mat = np.asarray(mat)
    return float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)))))


def trace_distance(rho, sigma) -> float:
    rho, sigma = _check_pair(rho, sigma)
    return min(1.0, 0.5 * trace_norm(rho.entries - sigma.entries))


def bures_angle(rho, sigma) -> float:
    return float(np.arccos(np.sqrt(fidelity(rho, sigma))))


@dataclass(frozen=True)
class Distances:
    fidelity: float
    trace_distance: float
    bures_angle: float


def distance_metrics(rho, sigma) -> Distances:
    f = fidelity(rho, sigma)
    return Distances(f, trace_distance(rho, sigma), float(np.arccos(np.sqrt(f))))


def von_neumann_entropy(rho) -> float:
    """Entropy in bits; eigenvalues below 1e-12 contribute nothing."""
    w = np.linalg.eigvalsh(as_density(rho).entries)
    w = w[w > 1e-12]
    return float(-np.sum(w * np.log2(w)))


def depolarize(rho, p: float) -> DensityMatrix:
    """rho -> (1-p) rho + p I/d."""
    rho = as_density(rho)
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    return DensityMatrix((1 - p) * rho.entries + p * np.eye(rho.dim) / rho.dim)


def bloch_vector(rho) -> np.ndarray:
    m = as_density(rho).entries
    if m.shape != (2, 2):
        raise ValueError("Bloch vectors are defined for single qubits")
    return np.real([np.trace(m @ PAULI_X), np.trace(m @ PAULI_Y), np.trace(m @ PAULI_Z)])


def from_bloch(vec) -> DensityMatrix:
    x, y, z = vec
    return DensityMatrix(0.5 * (I2 + x * PAULI_X + y * PAULI_Y + z * PAULI_Z))


# ---------------------------------------------------------------- sampling


def haar_sample(kind: str, dim: int, seed=None):
    """Haar-random unitary (QR of a Ginibre matrix) or a Haar-random state.

    States are normalised complex Gaussian vectors, which have the same
    distribution as a column of a Haar unitary.
    """
    if kind not in ("state", "unitary"):
        raise ValueError(f"kind must be 'state' or 'unitary', got {kind!r}")
    _num_qubits(dim)
    rng = np.random.default_rng(seed)
    if kind == "state":
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        return PureState(v / np.linalg.norm(v))
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return q


def bloch_state(theta: float, phi: float) -> PureState:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    if not (-1e-12 <= theta <= np.pi + 1e-12):
        raise ValueError("theta must lie in [0, pi]")
    if not (-1e-12 <= phi < 2 * np.pi + 1e-12):
        raise ValueError("phi must lie in [0, 2 pi)")
    return PureState([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def equatorial_state(eta: float) -> PureState:
    """(|0> + e^{i eta}|1>)/sqrt(2) for any real eta."""
    return bloch_state(np.pi / 2, float(np.mod(eta, 2 * np.pi)))


def state_preparation(psi: PureState) -> np.ndarray:
    """A unitary whose first column is psi (Householder completion)."""
    v = psi.amplitudes
    dim = v.size
    phase = v[0] / abs(v[0]) if abs(v[0]) > 1e-15 else 1.0
    e0 = np.zeros(dim, dtype=complex)
    e0[0] = 1.0
    w = v / phase - e0
    nw = np.linalg.norm(w)
    if nw < 1e-14:
        return phase * np.eye(dim, dtype=complex)
    w = w / nw
    house = np.eye(dim, dtype=complex) - 2 * np.outer(w, w.conj())
    return phase * house


# ---------------------------------------------------------- serialization


def state_to_csv(psi: PureState) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "re", "im"])
    for i, a in enumerate(psi.amplitudes):
        writer.writerow([i, repr(float(a.real)), repr(float(a.imag))])
    return buf.getvalue()


def state_from_csv(text: str) -> PureState:
    rows = list(csv.DictReader(io.StringIO(text)))
    amps = np.zeros(len(rows), dtype=complex)
    for row in rows:
        amps[int(row["index"])] = float(row["re"]) + 1j * float(row["im"])
    return PureState(amps)
