"""Cloning-based attacks: BB84 critical error rate and coin-flipping biases."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.stats import binom

from . import cloning
from .cloning import CloneOutput
from .qsim import (
    Circuit,
    PureState,
    as_density,
    embed,
    equatorial_state,
    tensor,
    tensor_dm,
    von_neumann_entropy,
)

MAYERS_OVERLAP = math.cos(math.pi / 9)


@dataclass
class ClonerHandle:
    """A 1->2 cloner. ``clone(psi)`` returns a CloneOutput whose clones are (Bob, Eve).

    ``discriminate=False`` marks the trivial forwarder that never measures.
    """

    name: str
    clone: Callable[[PureState], CloneOutput]
    kind: str = "analytic"
    discriminate: bool = True

    def __call__(self, psi: PureState) -> CloneOutput:
        return self.clone(psi)


def phase_cov_handle(eta: float = math.pi / 4) -> ClonerHandle:
    return ClonerHandle(f"phase-cov-map(eta={eta:.4f})", lambda psi: cloning.phase_cov_transformation(eta, psi))


def circuit_handle(circuit: Circuit, input_wire: int, clone_wires, ancilla_wires=(), name="circuit") -> ClonerHandle:
    def run(psi):
        return cloning.run_clone_circuit(circuit, [psi], [input_wire], clone_wires, ancilla_wires)

    return ClonerHandle(name, run, kind="circuit")


def ideal_phase_cov_circuit_handle() -> ClonerHandle:
    return circuit_handle(cloning.phase_cov_ideal_circuit(), cloning.PHASE_COV_INPUT_WIRE,
                          cloning.PHASE_COV_CLONE_WIRES, (0,), name="phase-cov-ideal-circuit")


def fixed_overlap_handle(s: float = MAYERS_OVERLAP) -> ClonerHandle:
    p0, p1 = cloning.fixed_overlap_states(s)
    return ClonerHandle(f"fixed-overlap(s={s:.4f})", cloning.fixed_overlap_cloner(p0, p1))


def pair_handle(psi_a: PureState, psi_b: PureState) -> ClonerHandle:
    return ClonerHandle("fixed-overlap-pair", cloning.fixed_overlap_cloner(psi_a, psi_b))


def forward_handle() -> ClonerHandle:
    """Input goes to Bob untouched, Eve gets a fresh |0>; never discriminates."""

    def run(psi):
        return CloneOutput.from_pure(tensor(psi, PureState([1.0, 0.0])), clone_wires=(1, 0))

    return ClonerHandle("forward", run, discriminate=False)


@dataclass
class AttackReport:
    guess_prob: float
    bias: float
    detection_prob: float = 0.0
    per_state: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


# ------------------------------------------------------------------ BB84


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


BB84_STATES = {
    "+": 0.0,
    "+i": math.pi / 2,
    "-": math.pi,
    "-i": 3 * math.pi / 2,
}


def _holevo(rho0, rho1) -> float:
    avg = 0.5 * (as_density(rho0).entries + as_density(rho1).entries)
    return von_neumann_entropy(avg) - 0.5 * von_neumann_entropy(rho0) - 0.5 * von_neumann_entropy(rho1)


def eve_state(out: CloneOutput, with_ancilla: bool = False):
    wires = [out.clone_wires[1]]
    if with_ancilla:
        wires += list(out.ancilla_wires)
    return out.reduced(wires)


def bb84_chi(cloner: ClonerHandle, sifted: bool = True, eve_ancilla: bool = False) -> float:
    """Holevo information of Eve's share about the key bit.

    Bit 0 is carried by |+> and |+i>, bit 1 by |-> and |-i>.  In sifted mode the
    basis is public, so chi is computed per basis and averaged; otherwise Eve's
    states are averaged over both bases before the entropy is taken.
    """
    eve = {k: eve_state(cloner(equatorial_state(eta)), eve_ancilla) for k, eta in BB84_STATES.items()}
    if sifted:
        return 0.5 * (_holevo(eve["+"], eve["-"]) + _holevo(eve["+i"], eve["-i"]))
    r0 = 0.5 * (eve["+"].entries + eve["+i"].entries)
    r1 = 0.5 * (eve["-"].entries + eve["-i"].entries)
    return _holevo(r0, r1)


def dcrit_from_chi(chi: float, tol: float = 1e-10) -> float:
    """Solve 1 - H(D) - chi = 0 for D in (0, 1/2]."""
    if chi > 1 + 1e-12:
        raise ValueError(f"chi = {chi:.6f} exceeds one bit: no key rate root exists")
    if chi <= 1e-12:
        return 0.5
    if chi >= 1 - 1e-12:
        return 0.0
    return brentq(lambda d: 1 - binary_entropy(d) - chi, 1e-15, 0.5, xtol=tol)


def bb84_dcrit(cloner: ClonerHandle, sifted: bool = True, eve_ancilla: bool = False) -> dict:
    chi = bb84_chi(cloner, sifted=sifted, eve_ancilla=eve_ancilla)
    return {"chi": chi, "d_crit": dcrit_from_chi(chi), "sifted": sifted, "eve_ancilla": eve_ancilla}


# ---------------------------------------------------------------- Mayers


def majority_success(p_success: float, n: int) -> float:
    """Majority vote over n independent guesses; ties broken by a fair coin."""
    if n < 1:
        raise ValueError("need at least one copy")
    k = np.arange(n + 1)
    pmf = binom.pmf(k, n, p_success)
    wins = pmf[k > n / 2].sum()
    if n % 2 == 0:
        wins += 0.5 * pmf[n // 2]
    return float(wins)


def _mayers_clones(cloner: ClonerHandle, s: float):
    p = cloning.fixed_overlap_states(s)
    outs = [cloner(p[0]), cloner(p[1])]
    returned = [o.clones[0] for o in outs]
    kept = [o.clones[1] for o in outs]
    return p, outs, returned, kept


def mayers_bias(cloner: ClonerHandle | None = None, n: int = 1, s: float = MAYERS_OVERLAP) -> AttackReport:
    """Analytic single-round attack on the two-state coin flip, plus the n-round majority vote.

    ``guess_prob`` discriminates |phi_0>|phi_1> from |phi_1> rho_c^0; the
    ``guess_prob_physical`` extra uses Bob's actual pair |phi_a> rho_c^{1-a} in both
    hypotheses.  Overall success composes guessing and not being caught.
    """
    if n < 1:
        raise ValueError("need at least one copy")
    cloner = cloner or fixed_overlap_handle(s)
    p, outs, returned, kept = _mayers_clones(cloner, s)
    dm = [x.density() for x in p]
    if cloner.discriminate:
        literal = cloning.helstrom_prob(tensor_dm(dm[0], dm[1]), tensor_dm(dm[1], kept[0]))
        physical = cloning.helstrom_prob(tensor_dm(dm[0], kept[1]), tensor_dm(dm[1], kept[0]))
    else:
        literal = physical = 0.5
    f_ret = [returned[0].expectation(p[0]), returned[1].expectation(p[1])]
    detection = 1.0 - 0.5 * (f_ret[0] + f_ret[1])
    overall = literal * (1 - detection)
    p_fail = 1 - literal
    return AttackReport(
        guess_prob=literal,
        bias=overall - 0.5,
        detection_prob=detection,
        per_state={"F_returned_phi0": f_ret[0], "F_returned_phi1": f_ret[1]},
        extras={
            "p_fail": p_fail,
            "overall_success": overall,
            "guess_prob_physical": physical,
            "overall_physical": physical * (1 - detection),
            "majority_success": majority_success(literal, n),
            "n": n,
            "s": s,
            "helstrom_ceiling": 0.5 + 0.5 * math.sqrt(1 - s**4),
        },
    )


def simulate_p1_round(cloner: ClonerHandle | None = None, seed=None, trials: int = 10_000,
                      s: float = MAYERS_OVERLAP) -> AttackReport:
    """Monte Carlo of the single-round attack.

    Alice draws a and c, sends |phi_c>|phi_{1-c}> and announces a xor c, which tells
    Bob which qubit (the one holding phi_{1-a}) goes back.  Bob clones it, returns
    clone A and measures (kept qubit, clone B) with the Helstrom projector.  Alice
    checks A against |phi_{1-a}>.  Joint outcome probabilities come from the full
    three-qubit state, so correlations between guessing and detection are kept.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cloner = cloner or fixed_overlap_handle(s)
    rng = np.random.default_rng(seed)
    p, outs, returned, kept = _mayers_clones(cloner, s)
    dm = [x.density() for x in p]
    proj0 = cloning.helstrom_measurement(tensor_dm(dm[0], kept[1]), tensor_dm(dm[1], kept[0]))

    # joint[a] = probabilities of (guess correct, caught) in the order
    # (correct, clean), (correct, caught), (wrong, clean), (wrong, caught)
    joint = []
    for a in (0, 1):
        out = outs[1 - a]
        wa, wb = out.clone_wires
        # three-qubit pure state: kept qubit on the top wire, clone wires below
        full = tensor(p[a], out.pure)
        nq = full.n
        rho = full.density().entries
        dim = 2**nq

        # Bob's two-qubit projector acts on (kept = top wire, B = wb); proj0 was built
        # with kept as the high factor, i.e. targets [wb, top] in little-endian order
        top = nq - 1
        bob0 = embed(proj0, [wb, top], nq)
        bob = [bob0, np.eye(dim) - bob0]
        pa = p[1 - a].amplitudes
        pass_a = embed(np.outer(pa, pa.conj()), [wa], nq)
        alice = [pass_a, np.eye(dim) - pass_a]
        probs = []
        for guess_ok in (True, False):
            for caught in (False, True):
                al = alice[1 if caught else 0]
                if cloner.discriminate:
                    b = bob[a] if guess_ok else bob[1 - a]
                    val = np.real(np.trace(b @ al @ rho @ al))
                else:
                    val = 0.5 * np.real(np.trace(al @ rho @ al))
                probs.append(max(float(val), 0.0))
        probs = np.array(probs)
        joint.append(probs / probs.sum())

    a_bits = rng.integers(0, 2, trials)
    c_bits = rng.integers(0, 2, trials)
    outcomes = np.empty(trials, dtype=int)
    for a in (0, 1):
        mask = a_bits == a
        outcomes[mask] = rng.choice(4, size=int(mask.sum()), p=joint[a])
    correct = outcomes < 2
    caught = (outcomes % 2) == 1
    guess = float(correct.mean())
    det = float(caught.mean())
    win = float((correct & ~caught).mean())
    analytic_guess = 0.5 * (joint[0][0] + joint[0][1] + joint[1][0] + joint[1][1])
    analytic_det = 0.5 * (joint[0][1] + joint[0][3] + joint[1][1] + joint[1][3])
    return AttackReport(
        guess_prob=guess,
        bias=win - 0.5,
        detection_prob=det,
        per_state={"announced_bits": np.bincount(a_bits ^ c_bits, minlength=2).tolist()},
        extras={
            "trials": trials,
            "win_freq": win,
            "sigma_guess": math.sqrt(max(analytic_guess * (1 - analytic_guess), 1e-300) / trials),
            "sigma_detection": math.sqrt(max(analytic_det * (1 - analytic_det), 1e-300) / trials),
            "analytic_guess": analytic_guess,
            "analytic_detection": analytic_det,
            "joint": [j.tolist() for j in joint],
        },
    )


# ---------------------------------------------------------------- Aharonov


def two_state_measurement(psi0: PureState, psi1: PureState) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal pair {v, v_perp} placed symmetrically around two pure states.

    v sits half-way between the normalised sum and difference directions, which is
    the equal-prior optimum for two pure states (phases aligned so the overlap is real).
    """
    a, b = psi0.amplitudes, psi1.amplitudes
    ov = np.vdot(a, b)
    if abs(ov) > 1e-15:
        b = b * np.conj(ov) / abs(ov)
    plus = a + b
    minus = a - b
    plus = plus / np.linalg.norm(plus)
    if np.linalg.norm(minus) < 1e-15:
        raise ValueError("identical states cannot be discriminated")
    minus = minus / np.linalg.norm(minus)
    v = (plus + minus) / math.sqrt(2)
    v_perp = (plus - minus) / math.sqrt(2)
    return v, v_perp


def aharonov_attack_one(phi: float, cloner: ClonerHandle | None = None) -> AttackReport:
    if not 0.0 < phi <= math.pi / 4 + 1e-12:
        raise ValueError("phi must lie in (0, pi/4]")
    s00 = cloning.coinflip_state(phi, 0, 0)
    s11 = cloning.coinflip_state(phi, 1, 1)
    cloner = cloner or pair_handle(s00, s11)
    g0, g1 = cloner(s00), cloner(s11)
    helstrom = cloning.helstrom_prob(g0.global_state, g1.global_state)
    extras = {"closed_form": 0.5 + 0.5 * math.sin(2 * phi), "helstrom": helstrom,
              "overlap": abs(cloning.coinflip_state(phi, 0, 0).overlap(s11))}
    if g0.pure is not None and g1.pure is not None:
        v, vp = two_state_measurement(g0.pure, g1.pure)
        p_v = 0.5 * abs(np.vdot(v, g0.pure.amplitudes)) ** 2 + 0.5 * abs(np.vdot(vp, g1.pure.amplitudes)) ** 2
        extras["projective"] = float(p_v)
        guess = float(p_v)
    else:
        guess = helstrom
    return AttackReport(guess, guess - 0.5, extras=extras)


def aharonov_attack_two_four_state(phi: float, cloner: ClonerHandle | None = None) -> AttackReport:
    if not 0.0 < phi <= math.pi / 4 + 1e-12:
        raise ValueError("phi must lie in (0, pi/4]")
    if cloner is None:
        clones = {(x, a): cloning.four_state_clone(phi, x, a) for x in (0, 1) for a in (0, 1)}
    else:
        clones = {(x, a): cloner(cloning.coinflip_state(phi, x, a)).clones[1] for x in (0, 1) for a in (0, 1)}
    r0 = 0.5 * (clones[0, 0].entries + clones[1, 0].entries)
    r1 = 0.5 * (clones[0, 1].entries + clones[1, 1].entries)
    guess = cloning.helstrom_prob(r0, r1)
    ex, ez = cloning.four_state_shrinking(phi)
    per = {f"F_{x}{a}": clones[x, a].expectation(cloning.coinflip_state(phi, x, a)) for x, a in clones}
    return AttackReport(guess, guess - 0.5, per_state=per,
                        extras={"closed_form": 0.5 + 0.5 * ez * math.cos(2 * phi), "eta_x": ex, "eta_z": ez})


def aharonov_two_state_bounds(phi: float) -> tuple[float, float]:
    s = math.sin(2 * phi)
    f = cloning.fixed_overlap_local(s)
    d = cloning.fixed_overlap_alpha_minus_beta(s)
    inner = f + (s * s - 1) * d
    lower = 0.5 + 0.5 * (1 - math.sqrt(inner))
    upper = 0.5 + 0.5 * math.sqrt(1 - inner)
    return lower, upper


def aharonov_bias(model: str, phi: float = math.pi / 8, cloner: ClonerHandle | None = None):
    if model == "I":
        return aharonov_attack_one(phi, cloner)
    if model == "II_4state":
        return aharonov_attack_two_four_state(phi, cloner)
    if model == "II_2state":
        return aharonov_two_state_bounds(phi)
    raise ValueError(f"unknown attack model {model!r}")
