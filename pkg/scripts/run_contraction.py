"""Per-scale flow table on an Ising ring for a list of eps0 values."""
import argparse

from stabkam.experiments import contraction_table, ising_flow
from stabkam.kam import FlowConfig, ising_field_for_eps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--mu0", type=float, default=5.0)
    ap.add_argument("--eps0", type=float, nargs="+", default=[1e-3, 3e-3, 1e-2])
    ap.add_argument("--variant", choices=["explicit", "resummed"], default="explicit")
    args = ap.parse_args()
    for eps0 in args.eps0:
        cfg = FlowConfig(mu0=args.mu0, mode="classical-symmetric", variant=args.variant, matrix_checks=False)
        run = ising_flow(args.n, ising_field_for_eps(args.mu0, eps0), cfg)
        r = run.result
        print(f"eps0={r.eps0:.2e} status={r.status} n_*={r.n_star} stop={r.stop_level:.2e} "
              f"time={run.seconds:.1f}s")
        print(f"  {'n':>2} {'mu':>7} {'eps':>10} {'rhs':>10} {'eta':>10}")
        for row in contraction_table(run):
            rhs = f"{row.rhs:10.3e}" if row.rhs is not None else " " * 10
            print(f"  {row.n:2d} {row.mu:7.4f} {row.eps:10.3e} {rhs} {row.eta:10.3e}")


if __name__ == "__main__":
    main()
