"""Identification with quantum PUFs: the high- and low-resource protocols and HPUF."""

from qcryptlab import puf


def main(seed=0):
    device = puf.UqPUF.sample(8, seed)
    for adversary in ("honest", "random-state", "span-emulation"):
        rep = puf.run_hrv(device, 3, 3, "swap", adversary, trials=2000, seed=seed)
        print(f"hrv, {adversary:>15}: accept rate {rep.accept_rate:.4f}")
    print(f"hrv soundness formula at F=1/8: {puf.hrv_soundness(3, 3, 1 / 8):.5f}")

    lrv = puf.simulate_lrv(64, 2000, seed=seed)
    print(f"lrv honest acceptance at N=64: {lrv['accept_rate']:.4f} (bound {lrv['bound']:.6f})")
    for N in (8, 16, 32):
        print(f"lrv classical cheater N={N}: global {puf.global_attack_prob(N, 0):.5f}, "
              f"independent {puf.independent_attack_prob(N, 0, 0.75):.5f}")

    for p in (0.5, 0.75, 0.9):
        print(f"HPUF guess probability at p={p}: {puf.hpuf_guess_prob(p):.5f}")
    print(f"HPUF forgery bound m=16 q=4: {puf.hpuf_forgery_bound(0.5, 16, 4, 0.9):.2e}")


if __name__ == "__main__":
    main()
