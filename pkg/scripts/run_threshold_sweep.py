"""Empirical eps0 at which the flow stops converging, by bisection on an Ising ring."""
import argparse
import math

from stabkam.experiments import ising_flow
from stabkam.kam import FlowConfig, ising_field_for_eps


def converges(n, mu0, eps0):
    cfg = FlowConfig(mu0=mu0, mode="classical-symmetric", matrix_checks=False)
    r = ising_flow(n, ising_field_for_eps(mu0, eps0), cfg).result
    print(f"  eps0={eps0:.3e} h={ising_field_for_eps(mu0, eps0):.3e} -> {r.status} (n_*={r.n_star})")
    return r.status == "converged"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--mu0", type=float, default=5.0)
    ap.add_argument("--lo", type=float, default=1.0)
    ap.add_argument("--hi", type=float, default=1e5)
    ap.add_argument("--steps", type=int, default=8)
    args = ap.parse_args()
    lo, hi = args.lo, args.hi
    if not converges(args.n, args.mu0, lo):
        print("no convergence at the lower end")
        return
    if converges(args.n, args.mu0, hi):
        print("converges at the upper end; raise --hi")
        return
    for _ in range(args.steps):
        mid = math.sqrt(lo * hi)
        if converges(args.n, args.mu0, mid):
            lo = mid
        else:
            hi = mid
    print(f"threshold in [{lo:.3e}, {hi:.3e}]")


if __name__ == "__main__":
    main()
