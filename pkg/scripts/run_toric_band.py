"""Ground band width versus gap for the 2x2 toric code in a random weak field."""
import argparse

from stabkam.experiments import toric_band


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, nargs="+", default=[0.005, 0.01, 0.02, 0.03, 0.05])
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()
    print(f"{'h':>6} {'seed':>4} {'width':>10} {'gap':>7} {'gap/width':>10}")
    for h in args.h:
        for seed in range(args.seeds):
            rep = toric_band(2, 2, h, seed)
            print(f"{h:6.3f} {seed:4d} {rep.delta:10.3e} {rep.gap:7.4f} {rep.gap / rep.delta:10.2e}")


if __name__ == "__main__":
    main()
