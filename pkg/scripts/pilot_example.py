"""Pilot estimates for the worked counts and for simulated pilots of growing size."""

import argparse

from misreport.pilot import PilotCounts, estimate
from misreport.population import JointClassTable
from misreport.simulation import simulate_pilot

TABLE = JointClassTable(TI=0.1, TN=0.4, TA=0.2, OI=0.05, ON=0.05, UI=0.1, UA=0.1)


def show(label, counts):
    est = estimate(counts, no_decrease=True)
    rec = est.reconstruction
    cells = " ".join(f"{k}={v:.4f}" for k, v in rec.as_dict().items())
    print(f"{label:>10}  B_hat={est.B_hat:+.4f}  {cells}  feasible={rec.feasible}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    show("worked", PilotCounts((35, 20, 5, 40), (20, 10, 10, 60)))
    for n in (100, 1_000, 10_000, 50_000):
        show(f"n={n}", simulate_pilot(TABLE, n, seed=args.seed))


if __name__ == "__main__":
    main()
