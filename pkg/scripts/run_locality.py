"""Locality profile of the dressed centre Z on an Ising ring, plus the projector check."""
import argparse

from stabkam.experiments import locality_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--mu0", type=float, default=1.0)
    args = ap.parse_args()
    res = locality_experiment(args.n, args.h, args.mu0)
    print(f"flow: {res.run.result.status}, n_*={res.run.result.n_star}, {res.run.seconds:.1f}s")
    for r, v in enumerate(res.norms):
        ratio = f"{res.ratios[r]:.1f}" if r < len(res.ratios) else ""
        print(f"  r={r}  ||O_r||={v:.3e}  ratio={ratio}")
    print(f"decay >= e beyond r=2: {res.decay_ok}")
    print(f"||U P U* - P'|| = {res.projector_distance:.3e}   bound = {res.background_bound:.3e}   gap = {res.gap:.3f}")


if __name__ == "__main__":
    main()
