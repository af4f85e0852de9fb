import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcryptlab import cloning, varqlone
from qcryptlab.qsim import PureState, apply_circuit, equatorial_state, partial_trace, tensor
from qcryptlab.varqlone import (
    GatePool,
    StateFamily,
    StructuredCircuit,
    TrainConfig,
    UnknownOptimumError,
    cost,
    cost_inequality,
    faithfulness_audit,
    faithfulness_bound,
    finite_difference_gradient,
    fixed_structure,
    fidelity_summary,
    from_text,
    gradient,
    ideal_phase_cov_structure,
    random_params,
    simulate_batch,
    structure_search,
    to_text,
    train,
)

PHASE_COV = cloning.phase_covariant_local(2)
PC = StateFamily("phase-covariant")
MAYERS = StateFamily("fixed-overlap", math.pi / 18)

RANDOM_GATES = [("Ry", (0,)), ("Rx", (1,)), ("CNOT", (0, 1)), ("Rz", (2,)), ("CZ", (1, 2)),
                ("Ry", (1,)), ("CNOT", (2, 0)), ("Rx", (0,)), ("Ry", (2,))]


def random_circuit(seed, clone_wires=(0, 1)):
    params = np.random.default_rng(seed).uniform(0, 2 * math.pi, 6)
    return fixed_structure(RANDOM_GATES, 3, params, (0,), clone_wires)


def simulate_with_qsim(sc, psi):
    """Independent path: build the full input vector and run the generic gate engine."""
    blank = PureState(np.eye(2 ** (sc.width - 1))[0])
    start = tensor(blank, psi)  # input on wire 0
    return apply_circuit(start, sc.to_circuit())


@pytest.mark.parametrize("seed", range(4))
def test_batched_simulator_matches_gate_engine(seed):
    sc = random_circuit(seed)
    psi = equatorial_state(0.3 + seed)
    fast = simulate_batch(sc, sc.params[None, :], psi.amplitudes[None, :])[0, 0]
    slow = simulate_with_qsim(sc, psi).amplitudes
    assert np.allclose(fast, slow, atol=1e-12)


def test_clone_fidelities_match_partial_trace():
    sc = random_circuit(5)
    psi = equatorial_state(1.0)
    out = simulate_with_qsim(sc, psi)
    ours = varqlone.clone_states(sc, psi)
    for j, w in enumerate(sc.clone_wires):
        assert np.allclose(ours[j].entries, partial_trace(out, [w]).entries, atol=1e-12)


def test_identity_circuit_local_cost():
    # Z on the blank wire is a global phase, so clone 1 is the input and clone 2 is |0>
    sc = fixed_structure([("Z", (1,))], 2, [], (0,), (0, 1))
    e_f2 = np.mean([abs(s.amplitudes[0]) ** 2 for s in PC.members()])
    assert cost(sc, PC, "local") == pytest.approx(1 - (1 + e_f2) / 2, abs=1e-12)
    assert cost(sc, PC, "local") == pytest.approx(0.25, abs=1e-12)


def test_ideal_circuit_local_cost_on_samples():
    assert cost(ideal_phase_cov_structure(), PC, "local", K=512, seed=0) == pytest.approx(1 - 0.8536, abs=1e-4)


def test_ideal_circuit_squared_and_global_costs():
    sc = ideal_phase_cov_structure()
    assert cost(sc, PC, "squared") == pytest.approx(2 * (1 - PHASE_COV) ** 2, abs=1e-12)
    assert cost(sc, PC, "global") == pytest.approx(1 - cloning.phase_cov_global_fidelity(math.pi / 4), abs=1e-9)


@given(st.integers(0, 2**31 - 1), st.sampled_from(["phase-covariant", "fixed-overlap", "four-state"]))
@settings(max_examples=30, deadline=None)
def test_local_global_cost_inequality(seed, kind):
    fam = StateFamily(kind, None if kind == "phase-covariant" else 0.3)
    c_l, c_g = cost_inequality(random_circuit(seed), fam)
    assert c_l <= c_g + 1e-12
    assert c_g <= 2 * c_l + 1e-12


def test_shot_noise_cost_is_close_to_exact():
    sc = ideal_phase_cov_structure()
    exact = cost(sc, PC, "local")
    noisy = cost(sc, PC, "local", shots=4000, seed=3)
    # each fidelity estimate has std <= 2 sqrt(p(1-p)/L); 128 of them are averaged
    assert abs(noisy - exact) <= 4 * 2 * 0.5 / math.sqrt(4000 * 128)


def test_unknown_cost_kind():
    with pytest.raises(ValueError):
        cost(ideal_phase_cov_structure(), PC, "cubic")


def test_global_phase_direction_has_zero_gradient():
    gates = [("Rz", (1,)), *RANDOM_GATES]
    params = np.r_[0.7, np.random.default_rng(0).uniform(0, 6, 6)]
    sc = fixed_structure(gates, 3, params)
    for kind in varqlone.COST_KINDS:
        assert gradient(sc, PC, kind)[0] == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("kind", varqlone.COST_KINDS)
@pytest.mark.parametrize("seed", range(3))
def test_parameter_shift_matches_finite_differences(kind, seed):
    sc = random_circuit(seed)
    g = gradient(sc, PC, kind)
    fd = finite_difference_gradient(sc, PC, kind, h=1e-5)
    assert sc.n_params == 6
    assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)
    assert np.max(np.abs(g - fd)) <= 1e-8


def test_local_gradient_is_mean_of_per_clone_shifts():
    sc = random_circuit(11)
    g = gradient(sc, PC, "local")
    expected = []
    for j in range(sc.n_params):
        e = np.zeros(sc.n_params)
        e[j] = math.pi / 2
        up = fidelity_summary(sc.with_params(sc.params + e), PC)["per_clone"]
        down = fidelity_summary(sc.with_params(sc.params - e), PC)["per_clone"]
        expected.append(-np.mean((up - down) / 2))
    assert np.allclose(g, expected, atol=1e-12)


def test_parameter_shift_refuses_phase_gates():
    sc = fixed_structure([("Phase", (0,)), ("CNOT", (0, 1))], 2, [0.3])
    with pytest.raises(ValueError):
        gradient(sc, PC)


def test_zero_iterations_leave_params():
    sc = random_circuit(2)
    res = train(sc, PC, "local", TrainConfig(iters=0))
    assert np.array_equal(res.circuit.params, sc.params)
    assert len(res.trace) == 1


@pytest.mark.parametrize("seed", range(5))
def test_training_ideal_structure_from_random_start(seed):
    res = train(ideal_phase_cov_structure(), PC, "local", TrainConfig(seed=seed, randomize=True, iters=200))
    assert fidelity_summary(res.circuit, PC)["mean"] >= 0.84


def test_training_is_seeded():
    cfg = TrainConfig(seed=4, randomize=True, iters=20)
    a = train(ideal_phase_cov_structure(), PC, "local", cfg)
    b = train(ideal_phase_cov_structure(), PC, "local", cfg)
    assert a.trace == b.trace


def test_gd_optimizer_lowers_cost():
    res = train(random_circuit(1), PC, "local", TrainConfig(optimizer="gd", lr=0.1, iters=30))
    assert res.trace[-1] < res.trace[0]
    assert res.trace_csv().startswith("iteration,cost\n")


def test_bad_optimizer():
    with pytest.raises(ValueError):
        train(random_circuit(1), PC, "local", TrainConfig(optimizer="lbfgs"))


def test_fixed_overlap_training_reaches_target():
    found = structure_search(GatePool.mayers(), 12, 5, MAYERS, "local", seed=0)
    assert fidelity_summary(found.best, MAYERS)["mean"] >= 0.98


def test_single_entry_pool_returns_it():
    pool = GatePool((("Ry", (0,)),), 2, "custom")
    res = structure_search(pool, 1, 2, PC, "local", seed=0, train_iters=5)
    assert res.best.structure == (0,)


def test_empty_pool_rejected():
    with pytest.raises(ValueError):
        structure_search(GatePool((), 2, "custom"), 3, 1, PC)


@pytest.mark.slow
def test_phase_covariant_structure_search():
    found = structure_search(GatePool.phase_covariant(), 20, 5, PC, "local", seed=0)
    assert fidelity_summary(found.best, PC)["mean"] >= 0.83


@pytest.mark.slow
def test_fully_connected_not_worse_than_nearest_neighbour():
    fam = StateFamily("four-state", math.pi / 8)
    means = {}
    for conn in ("nearest-neighbor", "fully-connected"):
        found = structure_search(GatePool.coinflip(4, conn), 30, 15, fam, "squared", seed=0, sweeps=30,
                                 clone_wires=(0, 1, 2))
        means[conn] = fidelity_summary(found.best, fam)["mean"]
    assert means["fully-connected"] >= means["nearest-neighbor"] - 0.02


def test_ideal_circuit_is_faithful():
    rep = faithfulness_audit(ideal_phase_cov_structure(), PC, "local")
    assert rep.epsilon == pytest.approx(0.0, abs=1e-9)
    assert max(rep.theta) == pytest.approx(0.0, abs=1e-3)
    assert rep.passed


def _detuned(target_eps, seed=0):
    """Ideal angles pushed along a random direction until the local cost gap equals target_eps."""
    base = ideal_phase_cov_structure()
    c_opt = 1 - PHASE_COV
    d = np.random.default_rng(seed).normal(size=base.n_params)
    d /= np.linalg.norm(d)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if cost(base.with_params(base.params + mid * d), PC, "local") - c_opt < target_eps:
            lo = mid
        else:
            hi = mid
    return base.with_params(base.params + lo * d)


def test_faithfulness_bound_at_small_gap():
    rep = faithfulness_audit(_detuned(0.01), PC, "local")
    assert rep.epsilon == pytest.approx(0.01, abs=1e-6)
    assert all(t <= rep.bound for t in rep.theta)


def test_faithfulness_bound_at_large_gap():
    rep = faithfulness_audit(_detuned(0.1), PC, "local")
    assert rep.epsilon == pytest.approx(0.1, abs=1e-6)
    assert all(t <= rep.bound for t in rep.theta)


def test_faithfulness_bound_formula():
    assert faithfulness_bound("local", 0.02, 0.8, 2) == pytest.approx(2 * 0.02 / math.sin(0.8))
    assert faithfulness_bound("squared", 0.02, 0.8, 2) == pytest.approx(2 * 0.02 / (2 * 0.2 * math.sin(0.8)))
    assert faithfulness_bound("local", -1.0, 0.8, 2) == 0.0


def test_faithfulness_without_known_optimum():
    sc = fixed_structure(RANDOM_GATES, 3, np.zeros(6), (0,), (0, 1))
    with pytest.raises(UnknownOptimumError):
        faithfulness_audit(sc, StateFamily("four-state", 0.3))


def test_text_roundtrip():
    sc = random_circuit(8, clone_wires=(1, 2))
    back = from_text(to_text(sc))
    assert back.gates == sc.gates
    assert np.array_equal(back.params, sc.params)
    assert back.clone_wires == (1, 2)
    assert cost(back, PC) == cost(sc, PC)


def test_structured_circuit_validation():
    pool = GatePool.phase_covariant()
    with pytest.raises(ValueError):
        StructuredCircuit(pool, (len(pool),), [])
    with pytest.raises(ValueError):
        StructuredCircuit(pool, (0,), [0.1, 0.2])
    with pytest.raises(ValueError):
        StructuredCircuit(pool, (), [], clone_wires=(0, 0))
    with pytest.raises(ValueError):
        StructuredCircuit(pool, (), [], clone_wires=(0, 1), ancilla_wires=(1,))


def test_random_params_in_range():
    p = random_params(ideal_phase_cov_structure(), 0)
    assert p.shape == (3,)
    assert np.all((0 <= p) & (p < 2 * math.pi))


def test_cloner_handle_requires_one_to_two():
    sc = fixed_structure(RANDOM_GATES, 3, np.zeros(6), (0,), (0, 1, 2))
    with pytest.raises(ValueError):
        varqlone.as_cloner_handle(sc)
