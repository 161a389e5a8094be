#!/usr/bin/env python3
"""Series-condition checks for the two benchmark regimes.

Explosive side: counts floor(e^X) with Pareto X (tail t^-a, a in (0,1)),
quadratic speed, rho = 2.  Non-explosive side: counts floor(e^{Y ln Y})
with exponential Y and the speed whose reciprocal prefix telescopes to
ln(n+1).  A point mass is included to show the explosion condition failing.
"""
import argparse

from frogmodel import Dirac, LogPareto, SpeedFunction, YLogY
from frogmodel.conditions import check_explosion, check_nonexplosion


def show(title, report):
    print(f"\n{title}: {report.verdict}")
    for name, part in report.parts.items():
        h = part.horizon
        s = part.checkpoints[-1][1]
        print(f"  {name:<24} {part.verdict:<24} partial sum {s:.6g} @ {h}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizon", type=int, default=65536)
    ap.add_argument("--rho", type=float, default=2.0)
    ap.add_argument("--pareto-a", type=float, default=0.5)
    args = ap.parse_args()

    square = SpeedFunction.power(2.0, horizon=args.horizon)
    log_inc = SpeedFunction.log_increment(horizon=args.horizon)

    show("heavy log-Pareto counts, quadratic speed",
         check_explosion(LogPareto(args.pareto_a), square, rho=args.rho))
    show("exp(Y ln Y) counts, log-increment speed",
         check_nonexplosion(YLogY(1.0), log_inc))
    show("point-mass counts, quadratic speed",
         check_explosion(Dirac(1), square, rho=args.rho))
    print("\nverdicts are finite-horizon diagnostics, not convergence proofs")


if __name__ == "__main__":
    main()
