"""Train a variational cloner and use it to eavesdrop on BB84.

Takes a few seconds: the phase-covariant cloning circuit is trained from a random
start, then its leaked Holevo information is turned into a critical error rate.
"""

from qcryptlab import attacks, varqlone


def main(seed=0):
    family = varqlone.StateFamily("phase-covariant")
    res = varqlone.train(varqlone.ideal_phase_cov_structure(), family, "local",
                         varqlone.TrainConfig(seed=seed, randomize=True))
    summary = varqlone.fidelity_summary(res.circuit, family)
    print(f"trained in {len(res.trace)} steps, final cost {res.cost:.6f}")
    print("per-clone fidelity", [round(float(f), 5) for f in summary["per_clone"]])
    print(varqlone.to_text(res.circuit))

    for name, handle in [("ideal circuit", attacks.ideal_phase_cov_circuit_handle()),
                         ("trained circuit", varqlone.as_cloner_handle(res.circuit)),
                         ("forward only", attacks.forward_handle())]:
        out = attacks.bb84_dcrit(handle)
        print(f"{name:>15}: chi {out['chi']:.4f}, critical error rate {100 * out['d_crit']:.2f}%")


if __name__ == "__main__":
    main()
