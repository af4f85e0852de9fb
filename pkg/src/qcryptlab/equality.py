"""State-equality tests: SWAP, generalised SWAP and an idealised threshold test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qsim import (
    Circuit,
    DensityMatrix,
    Gate,
    PureState,
    apply_circuit,
    as_density,
    tensor,
)


@dataclass(frozen=True)
class TestOutcome:
    """Result of an equality test.

    ``accept_prob`` is the closed-form value.  ``circuit_prob`` is what the explicit
    circuit produced; ``frequency`` and ``sampled_bit`` are only set when shots
    were requested (``sampled_bit`` is the first shot, 1 = accept).
    """

    __test__ = False  # not a pytest class

    accept_prob: float
    circuit_prob: float | None = None
    frequency: float | None = None
    shots: int | None = None
    sampled_bit: int | None = None


def swap_circuit(n: int) -> Circuit:
    """Ancilla on wire 0, register A on wires 1..n, register B on wires n+1..2n."""
    gates = [Gate("H", [0])]
    for j in range(n):
        gates.append(Gate("CSWAP", [0, 1 + j, 1 + n + j]))
    gates.append(Gate("H", [0]))
    return Circuit(gates, 2 * n + 1)


def _swap_circuit_accept(rho: DensityMatrix, psi: PureState) -> float:
    """Probability that the ancilla reads 0, simulated on an eigen-decomposition of rho."""
    n = psi.n
    circ = swap_circuit(n)
    anc0 = PureState([1.0, 0.0])
    w, v = np.linalg.eigh(rho.entries)
    total = 0.0
    for lam, vec in zip(w, v.T):
        if lam < 1e-14:
            continue
        # kron order: register B (high wires), register A, ancilla (wire 0)
        start = tensor(psi, PureState(vec), anc0)
        out = apply_circuit(start, circ).amplitudes
        total += lam * float(np.sum(np.abs(out[0::2]) ** 2))
    return total


def swap_accept_prob(rho, psi: PureState, shots: int | None = None, seed=None) -> TestOutcome:
    """SWAP test between a (possibly mixed) state and a pure reference.

    The analytic value 1/2 + <psi|rho|psi>/2 is returned together with the
    value read off the simulated ancilla/controlled-SWAP circuit.
    """
    rho = as_density(rho)
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    analytic = 0.5 + 0.5 * rho.expectation(psi)
    p_circ = _swap_circuit_accept(rho, psi)
    if shots is None:
        return TestOutcome(analytic, p_circ)
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    bits = rng.random(shots) < p_circ
    return TestOutcome(analytic, p_circ, float(bits.mean()), int(shots), int(bits[0]))


def gswap_accept_prob(rho, psi: PureState, M: int) -> float:
    """Generalised SWAP acceptance with M reference copies: (1 + M F)/(M + 1)."""
    if M < 1:
        raise ValueError("GSWAP needs at least one reference copy")
    rho = as_density(rho)
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    f = rho.expectation(psi)
    return 1.0 / (M + 1) + M * f / (M + 1)


def ideal_test(rho, psi: PureState, delta: float, single_instance: bool = False, rng=None) -> int:
    """Threshold test: 1 iff F >= delta.

    With ``single_instance=True`` it instead accepts with probability exactly F,
    which is the best one can do with a single copy.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    rho = as_density(rho)
    if rho.dim != psi.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {psi.dim}")
    f = rho.expectation(psi)
    if single_instance:
        rng = np.random.default_rng(rng)
        return int(rng.random() < f)
    return int(f >= delta - 1e-12)


def repetition_budget(F: float, eps: float, kind: str = "swap") -> int:
    """Smallest number of repetitions M pushing the false-accept rate to <= eps."""
    if not 0.0 <= F < 1.0:
        raise ValueError("F must lie in [0, 1)")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if kind == "swap":
        base = 0.5 * (1.0 + F)
        m = max(1, math.ceil(math.log(eps) / math.log(base) - 1e-9))
        while m > 1 and base ** (m - 1) <= eps:
            m -= 1
        while base**m > eps * (1 + 1e-12):
            m += 1
        return m
    if kind == "gswap":
        if eps <= F:
            raise ValueError(f"GSWAP cannot push the error below F = {F}")
        m = max(1, math.ceil((1.0 - eps) / (eps - F) - 1e-9))
        return m
    raise ValueError(f"unknown test kind {kind!r}")

