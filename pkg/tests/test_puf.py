import json
import math
import warnings
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcryptlab import puf
from qcryptlab.cloning import helstrom_prob
from qcryptlab.qsim import DensityMatrix, fidelity, haar_sample, trace_norm
from qcryptlab.puf import (
    HPUFModel,
    RoundedCountWarning,
    UqPUF,
    brute_force_attack_prob,
    build_crp_database,
    classical_attack_prob,
    cver,
    extract_pair,
    general_trap_average,
    general_trap_conditional,
    general_trap_prob,
    global_attack_prob,
    hlpuf_round,
    hoeffding_delta,
    hpuf_encode,
    hpuf_forgery_bound,
    hpuf_guess_prob,
    hpuf_helstrom_value,
    hpuf_mixtures,
    hrv_soundness,
    independent_attack_prob,
    lrv_completeness_bound,
    qpuf_eval,
    run_hrv,
    simulate_lrv,
)

seeds = st.integers(0, 2**31 - 1)


@given(seeds, seeds, seeds)
@settings(max_examples=20, deadline=None)
def test_qpuf_preserves_fidelity(s_puf, s1, s2):
    device = UqPUF.sample(4, s_puf)
    a, b = haar_sample("state", 4, s1), DensityMatrix(0.5 * haar_sample("state", 4, s2).density().entries
                                                       + 0.5 * np.eye(4) / 4)
    assert fidelity(qpuf_eval(device, a), qpuf_eval(device, b)) == pytest.approx(fidelity(a, b), abs=1e-9)


def test_qpuf_deterministic_and_counted():
    device = UqPUF.sample(8, 0)
    psi = haar_sample("state", 8, 1)
    assert np.array_equal(device.eval(psi).amplitudes, device.eval(psi).amplitudes)
    assert device.query_count == 2


def test_qpuf_dimension_checked():
    with pytest.raises(ValueError):
        qpuf_eval(UqPUF.sample(4, 0), haar_sample("state", 2, 0))


def test_independent_pufs_look_unrelated():
    a, b = UqPUF.sample(8, 1), UqPUF.sample(8, 2)
    rng = np.random.default_rng(3)
    fids = [fidelity(a.eval(s), b.eval(s)) for s in (haar_sample("state", 8, rng) for _ in range(100))]
    # Haar overlap in dimension d has mean 1/d and std ~ 1/d
    assert np.mean(fids) == pytest.approx(1 / 8, abs=3 * (1 / 8) / math.sqrt(100))


def test_crp_database():
    device = UqPUF.sample(2, 0)
    chs = [haar_sample("state", 2, k) for k in range(3)]
    db = build_crp_database(device, chs, copies=4)
    assert device.query_count == 12
    assert len(db.records) == 3
    assert db.to_csv().splitlines()[0] == "index,role,copies,amplitudes"


@pytest.mark.parametrize(
    "N, M, F, kind, expected",
    [(4, 5, 0.0, "swap", 2.0**-20), (4, 9, 0.0, "gswap", 1e-4), (3, 3, 1.0, "swap", 1.0), (3, 3, 1.0, "gswap", 1.0)],
)
def test_hrv_soundness_values(N, M, F, kind, expected):
    assert hrv_soundness(N, M, F, kind) == pytest.approx(expected, rel=1e-12)


def test_hrv_honest_always_accepted():
    for N, M in [(1, 1), (3, 2), (5, 4)]:
        rep = run_hrv(UqPUF.sample(4, N), N, M, "swap", "honest", trials=200, seed=0)
        assert rep.accept_rate == 1.0


def test_hrv_random_state_adversary():
    rep = run_hrv(UqPUF.sample(8, 0), 3, 3, "swap", "random-state", trials=10_000, seed=1)
    assert rep.accept_rate <= 0.05
    # Monte Carlo vs the per-round formula at the Haar-average fidelity 1/8 (convexity makes this a
    # slight underestimate, see the tolerance)
    assert rep.accept_rate <= hrv_soundness(3, 3, 1 / 8) + 3 * rep.sigma + 1e-3


def test_hrv_span_emulation_wins():
    rep = run_hrv(UqPUF.sample(4, 0), 2, 2, "swap", "span-emulation", trials=100, seed=2)
    assert rep.accept_rate >= 0.99
    assert rep.mean_fidelity == pytest.approx(1.0, abs=1e-9)


def test_hrv_bad_adversary():
    with pytest.raises(ValueError):
        run_hrv(UqPUF.sample(2, 0), 1, 1, adversary="oracle")


def test_cver_all_zero_fails_test_two():
    assert cver([0] * 8, {0, 1, 2, 3}, 0) == 0


def test_cver_correct_pattern_passes():
    bits = [1, 0, 1, 0, 0, 0, 0, 0]
    assert cver(bits, {0, 1, 2, 3}, 0) == 1


def test_cver_one_on_valid_position_fails():
    assert cver([1, 0, 1, 0, 1, 0, 0, 0], {0, 1, 2, 3}, 5) == 0


def test_cver_bad_inputs():
    with pytest.raises(ValueError):
        cver([0, 0], {5}, 0)
    with pytest.raises(ValueError):
        cver([0, 0], {0}, -1)


def test_honest_lrv_completeness():
    res = simulate_lrv(64, 10_000, seed=0)
    assert res["accept_rate"] >= 1 - 2 * math.exp(-16)
    assert res["bound"] == pytest.approx(lrv_completeness_bound(64))


def test_hoeffding_delta_formula():
    assert hoeffding_delta(32, 2 * math.exp(-16)) == pytest.approx(math.sqrt(32 * 16 / 2))


def test_tight_threshold_lowers_completeness():
    loose = simulate_lrv(16, 2000, seed=3)["accept_rate"]
    tight = simulate_lrv(16, 2000, delta_er=0, seed=3)["accept_rate"]
    assert tight < loose
    # exact oracle: with delta_er = 0 the 8 trap bits must be exactly balanced
    p_exact = math.comb(8, 4) / 2**8
    assert tight == pytest.approx(p_exact, abs=4 * math.sqrt(p_exact * (1 - p_exact) / 2000))


def test_independent_optimum_at_three_quarters():
    grid = np.linspace(0.01, 0.99, 981)
    vals = [independent_attack_prob(16, 0, a) for a in grid]
    assert grid[int(np.argmax(vals))] == pytest.approx(0.75, abs=1e-3)


def test_global_beats_independent():
    g = classical_attack_prob(16, 1, "global")["probability"]
    i = classical_attack_prob(16, 1, "independent", alpha=0.75)["probability"]
    assert g >= i


def test_brute_force_matches_global_formula():
    best, _ = brute_force_attack_prob(8, 0)
    assert best == pytest.approx(global_attack_prob(8, 0), abs=1e-12)


def test_brute_force_string_actually_scores_that():
    best, s = brute_force_attack_prob(8, 0)
    bits = [int(c) for c in s]
    placements = list(combinations(range(8), 4))
    assert sum(cver(bits, t, 0) for t in placements) / len(placements) == pytest.approx(best)


def test_global_formula_factorial_form():
    N = 12
    f = math.factorial
    assert global_attack_prob(N, 0) == pytest.approx(f(N // 2) * f(3 * N // 4) / (f(N) * f(N // 4)))


def test_rounded_counts_flagged():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RoundedCountWarning)
        out = classical_attack_prob(10, 0, "global")
    assert out["rounded"] is True
    assert classical_attack_prob(12, 0, "global")["rounded"] is False


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_general_trap_edge_factors(p):
    assert general_trap_conditional(16, p) == pytest.approx(1.0)


def test_general_trap_half_matches_global():
    N = 16
    assert general_trap_prob(N, 0.5) * (N / 2 + 1) == pytest.approx(global_attack_prob(N, 0), rel=1e-12)


def test_general_trap_average_at_hundred():
    assert general_trap_average(100) == pytest.approx(6 / 10200, rel=0.1)


def test_general_trap_average_against_explicit_sum():
    N = 20
    total = 0.0
    for k in range(N + 1):
        # k valid positions; the cheater must place (N-k)/2 ones among the N-k traps out of N
        m = N - k
        total += math.gamma(m + 1) * math.gamma(N - m / 2 + 1) / (math.gamma(N + 1) * math.gamma(m / 2 + 1))
    assert general_trap_average(N) == pytest.approx(2 / (N * (N + 2)) * total, rel=1e-10)


def test_hpuf_encoding():
    states = hpuf_encode([(0, 0), (1, 0), (0, 1), (1, 1)])
    assert np.allclose(states[0].amplitudes, [1, 0])
    assert np.allclose(states[1].amplitudes, [0, 1])
    assert np.allclose(states[2].amplitudes, np.array([1, 1]) / math.sqrt(2))
    assert np.allclose(states[3].amplitudes, np.array([1, -1]) / math.sqrt(2))
    with pytest.raises(ValueError):
        hpuf_encode([(2, 0)])


def test_hpuf_guess_at_half():
    assert hpuf_guess_prob(0.5) == pytest.approx(0.5 * (1 + 1 / math.sqrt(2)), abs=1e-12)


@pytest.mark.parametrize("p", np.linspace(0.5, 1.0, 50))
def test_hpuf_guess_against_helstrom(p):
    r0, r1 = hpuf_mixtures(p)
    brute = p * (1 + 0.5 * trace_norm(r0.entries - r1.entries))
    assert hpuf_guess_prob(p, clip=False) == pytest.approx(brute, abs=1e-9)
    assert hpuf_helstrom_value(p) == pytest.approx(p * 2 * helstrom_prob(r0, r1), abs=1e-12)


def test_hpuf_deterministic_limit_clipped():
    assert hpuf_guess_prob(1.0, clip=False) >= 1.0
    assert hpuf_guess_prob(1.0) == 1.0


def test_hpuf_forgery_bound_decays():
    assert hpuf_forgery_bound(0.5, 16, 4, 0.99) < 1e-6
    b = hpuf_forgery_bound(0.5, 32, 10, 0.9)
    assert b <= 0.9 * 0.8536**640
    assert b < 1e-40


def test_hpuf_model_validation():
    with pytest.raises(ValueError):
        HPUFModel(p=0.3)
    with pytest.raises(ValueError):
        HPUFModel(m=0)


def test_hlpuf_honest_round():
    for seed in range(20):
        r = hlpuf_round(HPUFModel(0.7, 4, 1), "honest", seed)
        assert r.client_accept and r.server_accept


def test_hlpuf_forward_blind_always_locked_out():
    for seed in range(20):
        r = hlpuf_round(HPUFModel(0.7, 4, 1), "forward-blind", seed)
        assert not r.client_accept and not r.server_accept


def test_hlpuf_round_json_echoes_seed():
    r = hlpuf_round(HPUFModel(), "intercept-measure", 5)
    data = json.loads(r.to_json(5))
    assert data["seed"] == 5
    assert len(data["eve_extracted_bits"]) == 4


def _extraction_rate(basis, trials, seed):
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        value = int(rng.integers(2))
        state = hpuf_encode([(value, basis)])[0]
        hits += extract_pair([state] * 5, rng) == (value, basis)
    return hits / trials


def test_extraction_with_five_copies_z_basis():
    assert _extraction_rate(0, 4000, 0) >= 1 - 2**-5


def test_extraction_with_five_copies_x_basis():
    # failure paths: all five Z outcomes agree (1/16), or the first disagreement uses up the
    # last copy (1/16) and the value is then a coin toss
    expected = 1 - 1 / 16 - 1 / 32
    trials = 4000
    rate = _extraction_rate(1, trials, 1)
    assert rate == pytest.approx(expected, abs=3 * math.sqrt(expected * (1 - expected) / trials))


def test_extraction_needs_a_copy():
    with pytest.raises(ValueError):
        extract_pair([], np.random.default_rng(0))


def test_lrv_transcript_fields():
    t = puf.lrv_round(UqPUF.sample(2, 0), 8, 2, seed=0)
    assert len(t.bits) == 8
    assert len(t.trap_positions) == 4
