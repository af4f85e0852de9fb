"""Cloning attacks on two quantum coin-flipping protocols."""

import math

from qcryptlab import attacks


def main():
    rep = attacks.mayers_bias()
    print("Mayers round, optimal fixed-overlap cloner")
    print(f"  guess probability {rep.guess_prob:.4f}, bias {rep.bias:.4f}, "
          f"detection {rep.detection_prob:.4f}, Helstrom ceiling {rep.extras['helstrom_ceiling']:.4f}")
    mc = attacks.simulate_p1_round(seed=0, trials=20_000)
    # the simulated round works on Bob's actual state pair, so it tracks the physical value
    print(f"  physical guess probability {rep.extras['guess_prob_physical']:.4f}")
    print(f"  Monte Carlo (20000 rounds): guess {mc.guess_prob:.4f} +- {mc.extras['sigma_guess']:.4f}")

    print("Aharonov protocol at phi = pi/8")
    one = attacks.aharonov_attack_one(math.pi / 8)
    print(f"  attack I: guess {one.guess_prob:.4f}, bias {one.bias:.4f}")
    four = attacks.aharonov_bias("II_4state", math.pi / 8)
    print(f"  attack II, four states: guess {four.guess_prob:.4f}")
    lo, hi = attacks.aharonov_two_state_bounds(math.pi / 8)
    print(f"  attack II, two states: guess between {lo:.4f} and {hi:.4f}")


if __name__ == "__main__":
    main()
