"""Ground splitting of periodic Ising rings versus N, with the log-slope fit."""
import argparse
import math

from stabkam.experiments import splitting_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.05)
    ap.add_argument("--nmin", type=int, default=4)
    ap.add_argument("--nmax", type=int, default=12)
    ap.add_argument("--ed-cap", type=int, default=10, help="largest N also checked by dense ED")
    args = ap.parse_args()
    res = splitting_scaling(range(args.nmin, args.nmax + 1), args.h, ed_cap=args.ed_cap)
    print(f"{'N':>3} {'delta':>12} {'delta_ED':>12} {'delta_PT':>12} {'gap':>7}")
    for r in res.rows:
        ed = f"{r.delta_ed:12.4e}" if r.delta_ed is not None else " " * 12
        print(f"{r.n:3d} {r.delta:12.4e} {ed} {r.delta_pt:12.4e} {r.gap:7.4f}")
    print(f"slope {res.slope:.4f}   log h {math.log(args.h):.4f}   log 2h {math.log(2 * args.h):.4f}")
    print(f"relative error vs log h: {res.slope_rel_error:.3f}")


if __name__ == "__main__":
    main()
