"""Quantum PUF models and the identification protocols built on them.

A unitary qPUF is a hidden Haar-random unitary.  Around it sit the two
identification protocols (high-resource verifier with SWAP/GSWAP tests, and
low-resource verifier with trap states and a classical check), the counting
formulas for classical attacks on that check, and the hybrid PUF that encodes
classical PUF bits into BB84 states, together with its lock-based round.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import comb, gammaln

from . import equality
from .cloning import helstrom_prob
from .emulation import EmulationSamples, run_qe
from .qsim import (
    DensityMatrix,
    PureState,
    as_density,
    fidelity,
    haar_sample,
    state_to_csv,
)

HPUF_ENCODING = {
    (0, 0): PureState([1.0, 0.0]),
    (1, 0): PureState([0.0, 1.0]),
    (0, 1): PureState(np.array([1.0, 1.0]) / math.sqrt(2)),
    (1, 1): PureState(np.array([1.0, -1.0]) / math.sqrt(2)),
}


class RoundedCountWarning(UserWarning):
    """A formula needed an integer count and the inputs did not give one."""


# -------------------------------------------------------------- unitary qPUF


@dataclass
class UqPUF:
    """A qPUF modelled as a hidden unitary; every evaluation is counted."""

    hidden_unitary: np.ndarray = field(repr=False)
    dim: int
    query_count: int = 0

    @classmethod
    def sample(cls, dim: int, seed=None) -> "UqPUF":
        return cls(haar_sample("unitary", dim, seed), dim)

    def eval(self, state):
        return qpuf_eval(self, state)


def qpuf_eval(puf: UqPUF, state):
    """rho -> U rho U^dagger (pure inputs stay pure)."""
    if isinstance(state, PureState):
        if state.dim != puf.dim:
            raise ValueError(f"state of dimension {state.dim} fed to a {puf.dim}-dimensional PUF")
        puf.query_count += 1
        return PureState(puf.hidden_unitary @ state.amplitudes)
    rho = as_density(state)
    if rho.dim != puf.dim:
        raise ValueError(f"state of dimension {rho.dim} fed to a {puf.dim}-dimensional PUF")
    puf.query_count += 1
    u = puf.hidden_unitary
    return DensityMatrix(u @ rho.entries @ u.conj().T)


@dataclass
class CRPDatabase:
    records: list = field(default_factory=list)  # (challenge, response, copies)

    def to_csv(self) -> str:
        lines = ["index,role,copies,amplitudes"]
        for i, (ch, resp, m) in enumerate(self.records):
            lines.append(f'{i},challenge,{m},"{state_to_csv(ch).strip()}"')
            lines.append(f'{i},response,{m},"{state_to_csv(resp).strip()}"')
        return "\n".join(lines) + "\n"


def build_crp_database(puf: UqPUF, challenges, copies: int) -> CRPDatabase:
    """Query each challenge ``copies`` times, as the verifier does in setup."""
    if copies < 1:
        raise ValueError("need at least one response copy")
    db = CRPDatabase()
    for ch in challenges:
        resp = None
        for _ in range(copies):
            resp = qpuf_eval(puf, ch)
        db.records.append((ch, resp, copies))
    return db


# ------------------------------------------------------- high-resource id


def hrv_soundness(N: int, M: int, F_adv: float, kind: str = "swap") -> float:
    """Upper bound on an adversary with per-response fidelity F_adv passing all tests."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be positive")
    if not 0.0 <= F_adv <= 1.0:
        raise ValueError("F_adv must lie in [0, 1]")
    if kind == "swap":
        return (0.5 * (1 + F_adv)) ** (N * M)
    if kind == "gswap":
        return (1.0 / (M + 1) + M * F_adv / (M + 1)) ** N
    raise ValueError(f"unknown test kind {kind!r}")


@dataclass
class HrvReport:
    accept_rate: float
    trials: int
    mean_fidelity: float
    sigma: float
    queries: int


def _round_accept_prob(fids, M: int, kind: str) -> float:
    """Probability one identification round (N responses) passes verification."""
    fids = np.asarray(fids, dtype=float)
    if kind == "swap":
        return float(np.prod((0.5 + 0.5 * fids) ** M))
    if kind == "gswap":
        return float(np.prod(1.0 / (M + 1) + M * fids / (M + 1)))
    raise ValueError(f"unknown test kind {kind!r}")


def _span_challenge(basis, rng) -> PureState:
    c = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    c /= np.linalg.norm(c)
    return PureState(sum(ci * b.amplitudes for ci, b in zip(c, basis)))


def run_hrv(puf: UqPUF, N: int, M: int, kind: str = "swap", adversary: str = "honest",
            trials: int = 1000, seed=None, span_dim: int = 2) -> HrvReport:
    """Monte Carlo of the high-resource identification protocol.

    Each trial draws N fresh challenges, lets the prover (or adversary) answer,
    and runs the verifier's test against M stored copies of the right response.
    ``span-emulation`` leaks a ``span_dim``-dimensional public subspace to the
    adversary, draws challenges from it and answers with quantum emulation.
    """
    if adversary not in ("honest", "random-state", "span-emulation"):
        raise ValueError(f"unknown adversary {adversary!r}")
    rng = np.random.default_rng(seed)
    basis = None
    samples = None
    if adversary == "span-emulation":
        if not 2 <= span_dim <= puf.dim:
            raise ValueError("span dimension must be between 2 and the PUF dimension")
        frame = haar_sample("unitary", puf.dim, rng)
        basis = [PureState(frame[:, j]) for j in range(span_dim)]
        ref = np.sum([b.amplitudes for b in basis], axis=0)
        inputs = [PureState(ref / np.linalg.norm(ref)), *basis]
        # the adversary's learning phase: one query per sample
        samples = EmulationSamples(inputs, [qpuf_eval(puf, s) for s in inputs], reference_index=0)
    passes, fid_sum = 0, 0.0
    for _ in range(trials):
        fids = []
        for _ in range(N):
            if adversary == "span-emulation":
                ch = _span_challenge(basis, rng)
            else:
                ch = haar_sample("state", puf.dim, rng)
            truth = PureState(puf.hidden_unitary @ ch.amplitudes)  # verifier's stored copy
            if adversary == "honest":
                answer = qpuf_eval(puf, ch)
            elif adversary == "random-state":
                answer = haar_sample("state", puf.dim, rng)
            else:
                answer = run_qe(samples, ch).output_state
            fids.append(fidelity(answer, truth))
        fid_sum += float(np.mean(fids))
        passes += int(rng.random() < _round_accept_prob(fids, M, kind))
    rate = passes / trials
    return HrvReport(rate, trials, fid_sum / trials, math.sqrt(max(rate * (1 - rate), 1e-12) / trials),
                     puf.query_count)


# -------------------------------------------------------- low-resource id


@dataclass
class LrvTranscript:
    trap_positions: frozenset
    bits: np.ndarray
    delta_er: float


def cver(bits, traps, delta_er: float) -> int:
    """Classical check: zeros on every non-trap position, half ones on the traps.

    ``traps`` are the b=0 positions.  test2 compares the number of 1s among them
    with trap_count/2 and accepts within ``delta_er``.
    """
    if delta_er < 0:
        raise ValueError("delta_er must be non-negative")
    bits = np.asarray(bits, dtype=int)
    traps = set(int(t) for t in traps)
    if any(t < 0 or t >= bits.size for t in traps):
        raise ValueError("trap index outside the bit string")
    mask = np.zeros(bits.size, dtype=bool)
    mask[list(traps)] = True
    if np.any(bits[~mask] != 0):
        return 0
    ones = int(bits[mask].sum())
    return int(abs(ones - len(traps) / 2) <= delta_er + 1e-12)


def hoeffding_delta(trap_count: int, fail_prob: float) -> float:
    """Tolerance making Pr[|ones - n/2| > delta] <= fail_prob via Hoeffding."""
    if not 0 < fail_prob < 2:
        raise ValueError("fail_prob must lie in (0, 2)")
    return math.sqrt(trap_count * math.log(2 / fail_prob) / 2)


def lrv_completeness_bound(N: int) -> float:
    return 1 - 2 * math.exp(-N / 4)


def _trap_count(N: int, p: float) -> int:
    return int(math.floor((1 - p) * N + 1e-9))


def lrv_round(puf: UqPUF, N: int, delta_er: float, p: float = 0.5, seed=None) -> LrvTranscript:
    """One honest round, simulated state by state.

    Valid positions carry the true response; traps carry the PUF image of a state
    orthogonal to the challenge.  The prover's bit is the SWAP-test outcome
    (0 = the test accepted).
    """
    rng = np.random.default_rng(seed)
    n_traps = _trap_count(N, p)
    traps = frozenset(int(i) for i in rng.choice(N, size=n_traps, replace=False))
    bits = np.zeros(N, dtype=int)
    for i in range(N):
        ch = haar_sample("state", puf.dim, rng)
        prover = qpuf_eval(puf, ch)
        if i in traps:
            perp = haar_sample("state", puf.dim, rng).amplitudes
            perp = perp - np.vdot(ch.amplitudes, perp) * ch.amplitudes
            sent = qpuf_eval(puf, PureState(perp / np.linalg.norm(perp)))
        else:
            sent = qpuf_eval(puf, ch)
        accept = equality.swap_accept_prob(sent, prover).circuit_prob
        bits[i] = int(rng.random() >= accept)
    return LrvTranscript(traps, bits, delta_er)


def simulate_lrv(N: int, rounds: int, delta_er: float | None = None, p: float = 0.5, seed=None) -> dict:
    """Honest completeness by Monte Carlo over many rounds.

    Outcome probabilities are the SWAP-test values for fidelity 1 (valid
    positions) and 0 (traps), taken from the equality-test module.  With
    ``delta_er=None`` the tolerance is the Hoeffding choice that targets a
    failure probability of 2 exp(-N/4).
    """
    if N < 2 or rounds < 1:
        raise ValueError("need N >= 2 and at least one round")
    rng = np.random.default_rng(seed)
    n_traps = _trap_count(N, p)
    if delta_er is None:
        delta_er = hoeffding_delta(n_traps, 2 * math.exp(-N / 4))
    zero, one = PureState([1.0, 0.0]), PureState([0.0, 1.0])
    p_one_valid = 1 - equality.swap_accept_prob(zero, zero).circuit_prob
    p_one_trap = 1 - equality.swap_accept_prob(one, zero).circuit_prob
    accepted = 0
    for _ in range(rounds):
        traps = rng.choice(N, size=n_traps, replace=False)
        probs = np.full(N, p_one_valid)
        probs[traps] = p_one_trap
        bits = (rng.random(N) < probs).astype(int)
        accepted += cver(bits, traps, delta_er)
    rate = accepted / rounds
    return {"accept_rate": rate, "delta_er": delta_er, "rounds": rounds, "bound": lrv_completeness_bound(N),
            "sigma": math.sqrt(max(rate * (1 - rate), 1e-12) / rounds)}


# --------------------------------------------------- classical attack counting


def _quarter(N: int) -> tuple[int, bool]:
    exact = N % 4 == 0
    if not exact:
        warnings.warn(f"N={N} is not divisible by 4; counts rounded to integers", RoundedCountWarning)
    return int(round(N / 4)), exact


def independent_attack_prob(N: int, delta_er: int, alpha: float, exact: bool = False) -> float:
    """Eve outputs 0 with probability alpha on each position independently.

    The closed form keeps only the central term of the trap binomial times
    (2 delta_er + 1); ``exact=True`` sums the window instead.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    q, _ = _quarter(N)
    half = N // 2
    if not exact:
        return (2 * delta_er + 1) * comb(half, q, exact=True) * alpha ** (half + q) * (1 - alpha) ** q
    total = 0.0
    for k in range(max(0, q - delta_er), min(half, q + delta_er) + 1):
        total += comb(half, k, exact=True) * (1 - alpha) ** k * alpha ** (half - k)
    return alpha**half * total


def global_attack_prob(N: int, delta_er: int) -> float:
    """(2 delta_er + 1) (N/2)! (3N/4)! / (N! (N/4)!)."""
    q, _ = _quarter(N)
    half = N // 2
    log = gammaln(half + 1) + gammaln(N - q + 1) - gammaln(N + 1) - gammaln(q + 1)
    return (2 * delta_er + 1) * math.exp(log)


def classical_attack_prob(N: int, delta_er: int, strategy: str = "global", alpha: float = 0.75) -> dict:
    """Success probability of a classical cheater against ``cver``."""
    if delta_er < 0:
        raise ValueError("delta_er must be non-negative")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RoundedCountWarning)
        if strategy == "independent":
            value = independent_attack_prob(N, delta_er, alpha)
        elif strategy == "global":
            value = global_attack_prob(N, delta_er)
        else:
            raise ValueError(f"unknown strategy {strategy!r}")
    return {"probability": value, "rounded": bool(caught), "strategy": strategy}


def brute_force_attack_prob(N: int, delta_er: int = 0) -> tuple[float, str]:
    """Best single string against a uniformly random choice of N/2 trap positions.

    Enumerates every N-bit string and every trap placement; a mixed strategy can
    never beat the best pure string, so this is the optimum.
    """
    if N > 14:
        raise ValueError("enumeration is limited to N <= 14")
    placements = [frozenset(c) for c in combinations(range(N), N // 2)]
    best, best_s = -1.0, ""
    for x in range(2**N):
        bits = [(x >> i) & 1 for i in range(N)]
        wins = sum(cver(bits, t, delta_er) for t in placements)
        if wins > best:
            best, best_s = wins, "".join(map(str, bits))
    return best / len(placements), best_s


def general_trap_conditional(N: int, p: float) -> float:
    """C(N - Np, (N - Np)/2) / C(N, (N - Np)/2): passing once c1 is guessed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    m = N - N * p
    if abs(m - round(m)) > 1e-9:
        warnings.warn(f"N p = {N * p} is not an integer; rounded", RoundedCountWarning)
        m = float(round(m))
    h = m / 2
    log = gammaln(m + 1) - 2 * gammaln(h + 1) - (gammaln(N + 1) - gammaln(h + 1) - gammaln(N - h + 1))
    return math.exp(log)


def general_trap_prob(N: int, p: float) -> float:
    """Cheater's success when a fraction p of positions are valid: guess c1, then pass."""
    return general_trap_conditional(N, p) / (N / 2 + 1)


def general_trap_average(N: int) -> float:
    """Average over the trap fraction via the exact sum over k = 0..N."""
    total = 0.0
    for k in range(N + 1):
        total += math.exp(gammaln(N - k + 1) + gammaln((N + k) / 2 + 1)
                          - gammaln(N + 1) - gammaln((N - k) / 2 + 1))
    return 2.0 / (N * (N + 2)) * total


def general_trap_asymptotic(N: int) -> float:
    return 6.0 / (N * (N + 2))


# ---------------------------------------------------------------- hybrid PUF


@dataclass(frozen=True)
class HPUFModel:
    p: float = 0.5
    m: int = 4
    q: int = 1

    def __post_init__(self):
        if not 0.5 <= self.p <= 1.0:
            raise ValueError("p must lie in [1/2, 1]")
        if self.m < 1 or self.q < 0:
            raise ValueError("m must be positive and q non-negative")


def hpuf_encode(bit_pairs) -> list[PureState]:
    """(value, basis) pairs to BB84 states: (0,0)->|0>, (1,0)->|1>, (0,1)->|+>, (1,1)->|->."""
    out = []
    for pair in bit_pairs:
        key = tuple(int(b) for b in pair)
        if key not in HPUF_ENCODING:
            raise ValueError(f"not a bit pair: {pair!r}")
        out.append(HPUF_ENCODING[key])
    return out


def _check_p(p: float):
    if not 0.5 <= p <= 1.0:
        raise ValueError("p must lie in [1/2, 1]")


def hpuf_guess_prob(p: float, clip: bool = True) -> float:
    """p (1 + sqrt(p^2 + (1-p)^2)); the raw value exceeds 1 for p near 1."""
    _check_p(p)
    val = p * (1 + math.sqrt(p * p + (1 - p) ** 2))
    return min(val, 1.0) if clip else val


def hpuf_guess_prob_loose(p: float) -> float:
    """The weaker p (1 + sqrt(2) p) form."""
    _check_p(p)
    return p * (1 + math.sqrt(2) * p)


def hpuf_mixtures(p: float) -> tuple[DensityMatrix, DensityMatrix]:
    """State of one qubit given its value bit, when the basis bit is 0 with probability p."""
    _check_p(p)
    s0, s1, sp, sm = (HPUF_ENCODING[k].density().entries for k in [(0, 0), (1, 0), (0, 1), (1, 1)])
    return DensityMatrix(p * s0 + (1 - p) * sp), DensityMatrix(p * s1 + (1 - p) * sm)


def hpuf_helstrom_value(p: float) -> float:
    """p (1 + ||rho0 - rho1||_1 / 2), with the trace norm taken from the Helstrom optimum."""
    r0, r1 = hpuf_mixtures(p)
    half_norm = 2 * helstrom_prob(r0, r1) - 1
    return p * (1 + half_norm)


def hpuf_forgery_bound(p: float, m: int, q: int, p_classic: float) -> float:
    """p_classic (p (1 + sqrt(2) p))^{2 m q}."""
    _check_p(p)
    if not 0.0 <= p_classic <= 1.0:
        raise ValueError("p_classic must lie in [0, 1]")
    if m < 1 or q < 0:
        raise ValueError("m must be positive and q non-negative")
    return p_classic * hpuf_guess_prob_loose(p) ** (2 * m * q)


def _cpuf_bits(model: HPUFModel, rng) -> np.ndarray:
    """4m i.i.d. response bits, each equal to 0 with probability p."""
    return (rng.random(4 * model.m) >= model.p).astype(int)


def _pairs(bits) -> list[tuple[int, int]]:
    return [(int(bits[2 * j]), int(bits[2 * j + 1])) for j in range(len(bits) // 2)]


def _measure(state: PureState, basis: int, rng) -> int:
    """Measure in Z (basis 0) or X (basis 1); returns the value bit."""
    amp = state.amplitudes
    if basis == 1:
        amp = np.array([amp[0] + amp[1], amp[0] - amp[1]]) / math.sqrt(2)
    return int(rng.random() >= abs(amp[0]) ** 2)


def _ver(expected_pairs, states, rng) -> bool:
    """Measure each qubit in the basis named by its expected pair and compare values."""
    return all(_measure(s, b, rng) == v for (v, b), s in zip(expected_pairs, states))


def extract_pair(copies: list, rng) -> tuple[int, int]:
    """Recover a (value, basis) pair from K copies of one encoded qubit.

    Measure copies in Z until two outcomes disagree; all-agreeing means the
    computational basis.  Otherwise the next copy is measured in X.  A single
    copy only allows a Z guess.
    """
    if not copies:
        raise ValueError("need at least one copy")
    first = _measure(copies[0], 0, rng)
    if len(copies) == 1:
        return first, 0  # no way to test the basis; Z is the likelier one for p >= 1/2
    for i in range(1, len(copies)):
        z = _measure(copies[i], 0, rng)
        if z != first:
            if i + 1 < len(copies):
                return _measure(copies[i + 1], 1, rng), 1
            return int(rng.integers(2)), 1
    return first, 0


@dataclass
class HlpufRound:
    client_accept: bool
    server_accept: bool
    eve_extracted_bits: list | None
    truth: list

    def to_json(self, seed) -> str:
        return json.dumps({"seed": seed, "client_accept": self.client_accept,
                           "server_accept": self.server_accept,
                           "eve_extracted_bits": self.eve_extracted_bits, "truth": self.truth})


def hlpuf_round(model: HPUFModel, adversary: str = "honest", seed=None, copies: int = 5) -> HlpufRound:
    """One round of the lock-based authentication.

    The server draws a fresh response f = f1 || f2, sends the encoding of f1; the
    client device checks it, and only then releases the encoding of f2, which
    the server checks in turn.  ``intercept-measure`` is handed ``copies``
    copies of the server's message, runs the copy-based extraction on them and
    forwards re-encoded guesses; ``forward-blind`` forwards the classical
    challenge alone, with no quantum first half, so the lock has nothing to verify.
    """
    if adversary not in ("honest", "intercept-measure", "forward-blind"):
        raise ValueError(f"unknown adversary {adversary!r}")
    rng = np.random.default_rng(seed)
    bits = _cpuf_bits(model, rng)
    f1, f2 = _pairs(bits[: 2 * model.m]), _pairs(bits[2 * model.m:])
    msg = hpuf_encode(f1)
    extracted = None
    if adversary == "honest":
        received = msg
    elif adversary == "intercept-measure":
        extracted = [list(extract_pair([s] * copies, rng)) for s in msg]
        received = hpuf_encode([tuple(e) for e in extracted])
    else:
        received = None
    client_ok = received is not None and _ver(f1, received, rng)
    if not client_ok:
        return HlpufRound(False, False, extracted, [list(x) for x in f1 + f2])
    reply = hpuf_encode(f2)
    server_ok = _ver(f2, reply, rng)
    return HlpufRound(True, server_ok, extracted, [list(x) for x in f1 + f2])
