"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Each criterion collects its sub-checks, prints a single summary line straight to the
terminal (also under pytest's capture) and then asserts every sub-check.  Run it on
its own with ``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest

from qcryptlab import attacks, cloning, emulation, equality, puf, varqlone
from qcryptlab.qsim import DensityMatrix, equatorial_state, fidelity, haar_sample, trace_norm

RESULTS: dict[int, bool] = {}


class Criterion:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.checks = []
        RESULTS[number] = False  # stays False if the criterion raises before closing

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def close(self, capsys=None):
        ok = all(c[1] for c in self.checks)
        RESULTS[self.number] = ok
        parts = [f"{n}={'ok' if good else 'MISS'}{' (' + d + ')' if d else ''}" for n, good, d in self.checks]
        line = f"criterion {self.number:>2} {'PASS' if ok else 'FAIL'}  {self.title}: " + "; ".join(parts)
        if capsys is not None:
            with capsys.disabled():
                print("\n" + line)
        else:
            print(line)
        missed = [n for n, good, _ in self.checks if not good]
        assert not missed, f"criterion {self.number} missed: {missed}"


def near(x, target, tol):
    return abs(x - target) <= tol


def test_criterion_01_cloning_formulas(capsys):
    c = Criterion(1, "cloning formula table")
    u = cloning.universal_local(1, 2)
    c.check("universal 1->2", near(u, 5 / 6, 1e-12), f"{u:.6f}")
    pc = cloning.phase_covariant_local(2)
    c.check("phase-covariant 1->2", near(pc, 0.5 * (1 + math.sqrt(2) / 2), 1e-12), f"{pc:.6f}")
    f_half = cloning.fixed_overlap_local(0.5)
    c.check("fixed-overlap s=1/2", near(f_half, 0.987, 0.001), f"{f_half:.5f}")
    f_mayers = cloning.fixed_overlap_local(math.cos(math.pi / 9))
    c.check("fixed-overlap s=cos(pi/9)", near(f_mayers, 0.997, 0.001), f"{f_mayers:.5f}")
    c.close(capsys)


def test_criterion_02_phase_covariant_circuit(capsys):
    c = Criterion(2, "ideal phase-covariant circuit")
    circ = cloning.phase_cov_ideal_circuit()
    fids, asym = [], 0.0
    for k in range(64):
        psi = equatorial_state(2 * math.pi * k / 64)
        out = cloning.run_clone_circuit(circ, [psi], [cloning.PHASE_COV_INPUT_WIRE], cloning.PHASE_COV_CLONE_WIRES, (0,))
        f = [fidelity(cl, psi) for cl in out.clones]
        fids.extend(f)
        asym = max(asym, abs(f[0] - f[1]))
    mean = float(np.mean(fids))
    c.check("mean local fidelity", near(mean, 0.8536, 1e-4), f"{mean:.6f}")
    c.check("asymmetry", asym <= 1e-8, f"{asym:.1e}")
    c.close(capsys)


def test_criterion_03_swap_and_gswap(capsys):
    c = Criterion(3, "SWAP / GSWAP")
    rng = np.random.default_rng(3)
    worst = 0.0
    for dim in (2, 4):
        for _ in range(10):
            psi = haar_sample("state", dim, rng)
            mix = rng.uniform()
            rho = DensityMatrix(mix * haar_sample("state", dim, rng).density().entries + (1 - mix) * np.eye(dim) / dim)
            out = equality.swap_accept_prob(rho, psi)
            worst = max(worst, abs(out.accept_prob - out.circuit_prob))
            # GSWAP with a single reference copy is the SWAP test
            worst = max(worst, abs(equality.gswap_accept_prob(rho, psi, 1) - out.circuit_prob))
    c.check("analytic vs circuit", worst <= 1e-10, f"{worst:.1e}")
    shots = 10_000
    psi, other = haar_sample("state", 2, 10), haar_sample("state", 2, 11)
    out = equality.swap_accept_prob(other, psi, shots=shots, seed=12)
    sigma = math.sqrt(out.accept_prob * (1 - out.accept_prob) / shots)
    c.check("sampled frequency 3 sigma", abs(out.frequency - out.accept_prob) <= 3 * sigma,
            f"{out.frequency:.4f} vs {out.accept_prob:.4f}")
    c.close(capsys)


def test_criterion_04_quantum_emulation(capsys):
    c = Criterion(4, "quantum emulation")
    bal = emulation.one_block_attack(1 / math.sqrt(2), 2, seed=0)["simulated_fidelity"]
    c.check("alpha=1/sqrt2 fidelity", near(bal, 1.0, 1e-9), f"{bal:.12f}")
    rng = np.random.default_rng(4)
    margins = []
    for _ in range(200):
        alpha = float(rng.uniform(0.05, 1.0))
        out = emulation.one_block_attack(alpha, int(rng.choice([2, 4, 8])), int(rng.integers(2**31)))
        margins.append(out["simulated_fidelity"] - out["bound"])
    c.check("bound on 200 instances", min(margins) >= -1e-9, f"min margin {min(margins):.1e}")
    gammas = np.linspace(0, 1 / math.sqrt(2), 2001)
    vals = np.array([emulation.three_state_forgery_prob(g) for g in gammas])
    poly = gammas**2 * (2 - 5 * gammas**2 + 3 * gammas**4)
    c.check("forgery polynomial", np.max(np.abs(vals - poly)) <= 1e-14)
    k = int(np.argmax(vals))
    g_star = math.sqrt((5 - math.sqrt(7)) / 9)
    c.check("interior maximum", 0 < k < gammas.size - 1 and near(gammas[k], g_star, 1e-3),
            f"gamma*={gammas[k]:.4f}, P={vals[k]:.4f}")
    c.close(capsys)


def test_criterion_05_mayers(capsys):
    c = Criterion(5, "Mayers coin flip")
    rep = attacks.mayers_bias(n=1)
    c.check("P_fail 0.214", near(rep.extras["p_fail"], 0.214, 0.005), f"{rep.extras['p_fail']:.4f}")
    c.check("bias 0.275", near(rep.bias, 0.275, 0.005), f"{rep.bias:.4f}")
    mc = attacks.simulate_p1_round(seed=0, trials=100_000)
    dev = abs(mc.guess_prob - mc.extras["analytic_guess"])
    c.check("Monte Carlo 3 sigma", dev <= 3 * mc.extras["sigma_guess"],
            f"{mc.guess_prob:.4f} vs {mc.extras['analytic_guess']:.4f}")
    fam = varqlone.StateFamily("fixed-overlap", math.pi / 18)
    found = varqlone.structure_search(varqlone.GatePool.mayers(), 12, 5, fam, "local", seed=0)
    trained = attacks.mayers_bias(varqlone.as_cloner_handle(found.best)).guess_prob
    c.check("trained guess >= 0.79", trained >= 0.79, f"{trained:.4f}")
    c.close(capsys)


def test_criterion_06_aharonov(capsys):
    c = Criterion(6, "Aharonov coin flip")
    one = attacks.aharonov_attack_one(math.pi / 8)
    c.check("attack I bias", near(one.bias, 0.353, 0.002), f"{one.bias:.4f}")
    four = attacks.aharonov_bias("II_4state", math.pi / 8)
    c.check("attack II four-state", near(four.bias, 0.25, 1e-12), f"{four.bias:.12f}")
    lo, hi = attacks.aharonov_two_state_bounds(math.pi / 8)
    c.check("two-state bounds", near(lo, 0.619, 0.002) and near(hi, 0.823, 0.002), f"[{lo:.4f}, {hi:.4f}]")
    c.close(capsys)


def test_criterion_07_bb84(capsys):
    c = Criterion(7, "BB84 cloning attack")
    ideal = attacks.bb84_dcrit(attacks.ideal_phase_cov_circuit_handle())["d_crit"]
    c.check("ideal D_crit", near(ideal, 0.146, 0.003), f"{ideal:.4f}")
    fam = varqlone.StateFamily("phase-covariant")
    res = varqlone.train(varqlone.ideal_phase_cov_structure(), fam, "local",
                         varqlone.TrainConfig(seed=0, randomize=True))
    trained = attacks.bb84_dcrit(varqlone.as_cloner_handle(res.circuit))["d_crit"]
    c.check("trained D_crit", 0.14 <= trained <= 0.17, f"{trained:.4f}")
    c.close(capsys)


def _random_structured(rng):
    pool = varqlone.GatePool.phase_covariant()
    structure = tuple(int(i) for i in rng.integers(len(pool), size=int(rng.integers(4, 16))))
    n_par = sum(1 for i in structure if pool.entries[i][0] in varqlone.PARAM_KINDS)
    return varqlone.StructuredCircuit(pool, structure, rng.uniform(0, 2 * math.pi, n_par), (0,), (0, 1))


def test_criterion_08_varqlone(capsys):
    c = Criterion(8, "VarQlone training")
    pc = varqlone.StateFamily("phase-covariant")
    means = []
    for seed in range(5):
        res = varqlone.train(varqlone.ideal_phase_cov_structure(), pc, "local",
                             varqlone.TrainConfig(seed=seed, randomize=True))
        means.append(varqlone.fidelity_summary(res.circuit, pc)["mean"])
    c.check("phase-covariant >= 0.84", np.mean(means) >= 0.84, f"{np.mean(means):.4f}")

    mayers = varqlone.StateFamily("fixed-overlap", math.pi / 18)
    means = []
    for seed in range(5):
        found = varqlone.structure_search(varqlone.GatePool.mayers(), 12, 5, mayers, "local", seed=seed)
        means.append(varqlone.fidelity_summary(found.best, mayers)["mean"])
    c.check("fixed-overlap >= 0.98", np.mean(means) >= 0.98, f"{np.mean(means):.4f}")

    rng = np.random.default_rng(8)
    families = [pc, mayers, varqlone.StateFamily("four-state", math.pi / 8)]
    violations = 0
    for i in range(100):
        c_l, c_g = varqlone.cost_inequality(_random_structured(rng), families[i % 3])
        violations += not (c_l <= c_g + 1e-12 and c_g <= 2 * c_l + 1e-12)
    c.check("cost inequality", violations == 0, f"{violations} violations")

    worst = 0.0
    for _ in range(5):
        sc = _random_structured(rng)
        for kind in varqlone.COST_KINDS:
            g = varqlone.gradient(sc, pc, kind)
            fd = varqlone.finite_difference_gradient(sc, pc, kind, h=1e-5)
            # a 1e-10 absolute floor keeps instances whose true gradient vanishes (finite
            # differences then return pure round-off) from dividing noise by noise
            worst = max(worst, np.linalg.norm(g - fd) / (np.linalg.norm(fd) + 1e-5))
    c.check("gradients vs finite differences", worst <= 1e-5, f"{worst:.1e}")

    coin = varqlone.StateFamily("four-state", math.pi / 8)
    three = varqlone.structure_search(varqlone.GatePool.coinflip(4, "fully-connected"), 30, 15, coin, "squared",
                                      seed=0, sweeps=30, clone_wires=(0, 1, 2))
    f13 = varqlone.fidelity_summary(three.best, coin)["mean"]
    c.check("1->3 >= 0.78", f13 >= 0.78, f"{f13:.4f}")
    four = varqlone.structure_search(varqlone.GatePool.coinflip(5, "fully-connected"), 40, 15, coin, "squared",
                                     seed=0, sweeps=40, input_wires=(0, 1), clone_wires=(0, 1, 2, 3))
    f24 = varqlone.fidelity_summary(four.best, coin)["mean"]
    c.check("2->4 >= 0.78", f24 >= 0.78, f"{f24:.4f}")
    c.close(capsys)


def test_criterion_09_lrv(capsys):
    c = Criterion(9, "lrv identification")
    N = 64
    honest = puf.simulate_lrv(N, 10_000, seed=0)["accept_rate"]
    c.check("honest completeness", honest >= 1 - 2 * math.exp(-N / 4), f"{honest:.4f}")
    best, _ = puf.brute_force_attack_prob(8, 0)
    glob = puf.global_attack_prob(8, 0)
    c.check("brute force = global", near(best, glob, 1e-12), f"{best:.6f} vs {glob:.6f}")
    avg = puf.general_trap_average(100)
    c.check("general trap at N=100", abs(avg / (6 / (100 * 102)) - 1) <= 0.1, f"{avg:.3e}")
    c.close(capsys)


def test_criterion_10_hpuf(capsys):
    c = Criterion(10, "HPUF")
    worst = 0.0
    for p in np.linspace(0.5, 1.0, 50):
        r0, r1 = puf.hpuf_mixtures(p)
        brute = p * (1 + 0.5 * trace_norm(r0.entries - r1.entries))
        worst = max(worst, abs(puf.hpuf_guess_prob(p, clip=False) - brute))
    c.check("guess vs Helstrom", worst <= 1e-9, f"{worst:.1e}")
    bounds = [puf.hpuf_forgery_bound(0.5, 16, 4, pc) for pc in (0.0, 0.5, 0.9, 0.99)]
    c.check("forgery bound < 1e-6", max(bounds) < 1e-6, f"max {max(bounds):.2e}")
    c.close(capsys)


def test_criterion_11_hardware_substitution(capsys):
    c = Criterion(11, "hardware claims substituted by 2, 7, 8")
    missing = [n for n in (2, 7, 8) if n not in RESULTS]
    if missing:
        pytest.skip(f"run criteria {missing} first")
    for n in (2, 7, 8):
        c.check(f"criterion {n}", RESULTS[n])
    c.close(capsys)


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn(None)
            except AssertionError:
                pass
