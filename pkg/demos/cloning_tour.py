"""A short walk through the cloning machines.

Prints the closed-form optimal fidelities next to what the explicit circuits and
maps actually produce, so the two can be compared by eye.
"""

import math

import numpy as np

from qcryptlab import cloning
from qcryptlab.qsim import equatorial_state, fidelity


def main():
    print("universal 1->2 local fidelity     ", cloning.universal_local(1, 2))
    print("phase-covariant 1->2 local fidelity", cloning.phase_covariant_local(2))

    circ = cloning.phase_cov_ideal_circuit()
    fids = []
    for k in range(16):
        psi = equatorial_state(2 * math.pi * k / 16)
        out = cloning.run_clone_circuit(circ, [psi], [cloning.PHASE_COV_INPUT_WIRE], cloning.PHASE_COV_CLONE_WIRES, (0,))
        fids.append([fidelity(c, psi) for c in out.clones])
    fids = np.array(fids)
    print(f"ideal circuit on 16 equatorial states: mean {fids.mean():.6f}, "
          f"worst asymmetry {np.abs(fids[:, 0] - fids[:, 1]).max():.1e}")

    for s in (0.0, 0.5, math.cos(math.pi / 9), 0.99):
        a, b = cloning.fixed_overlap_states(s)
        cloner = cloning.fixed_overlap_cloner(a, b)
        sim = np.mean([fidelity(c, psi) for psi in (a, b) for c in cloner(psi).clones])
        print(f"fixed overlap s={s:.4f}: closed form {cloning.fixed_overlap_local(s):.6f}, explicit cloner {sim:.6f}")


if __name__ == "__main__":
    main()
