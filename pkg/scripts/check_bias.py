"""Monte Carlo check of the closed-form bias and the detection probability.

Draws random joint tables, runs repeated trials on a fixed finite
population and reports the z-score of the empirical bias against the
closed form.  With ``--design`` it instead checks the predicted power of
the Gamma=1 underreporting design (n = 581 per arm).
"""

import argparse

import numpy as np

from misreport.estimands import bias_from_table, reported_means
from misreport.population import (
    CELL_NAMES,
    STRUCTURAL_ZEROS,
    JointClassTable,
    Margins,
    independence_deltas,
    table_from_margins_and_deltas,
)
from misreport.power import DesignParams, detection_probability_from_means
from misreport.simulation import apportion, run_replications

FREE = [c for c in CELL_NAMES if c not in STRUCTURAL_ZEROS]


def random_tables(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        w = rng.dirichlet(np.ones(len(FREE)))
        yield JointClassTable(**dict(zip(FREE, w)))


def check_bias(args, params):
    print(f"{'table':>5} {'closed':>10} {'empirical':>10} {'se':>9} {'z':>6}")
    for k, table in enumerate(random_tables(args.tables, args.seed)):
        counts = apportion(table, args.n_sp)
        realised = JointClassTable(**{c: v / args.n_sp for c, v in counts.items()})
        res = run_replications(table, args.n_sp, args.n, args.reps, args.seed + k, params)
        closed = bias_from_table(realised)
        z = (res.empirical_bias - closed) / res.bias_se
        print(f"{k:>5} {closed:>10.5f} {res.empirical_bias:>10.5f} {res.bias_se:>9.2e} {z:>6.2f}")


def check_design(args, params):
    m = Margins(0.1, 0.2, 0.35, 0.35, U=0.2)
    delta = independence_deltas(m)
    table = table_from_margins_and_deltas(m, delta)
    res = run_replications(table, args.n_sp, 581, args.reps, args.seed, params)
    predicted = detection_probability_from_means(*reported_means(m, delta), 581, params)
    print(f"predicted power {predicted:.4f}, empirical {res.power:.4f} +/- {res.power_se:.4f}")
    print(f"bias closed form {bias_from_table(table):.5f}, empirical {res.empirical_bias:.5f} +/- {res.bias_se:.5f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tables", type=int, default=10)
    parser.add_argument("--n-sp", dest="n_sp", type=int, default=100_000)
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--design", action="store_true")
    args = parser.parse_args()
    params = DesignParams()
    if args.design:
        if args.n_sp < 10**6:
            args.n_sp = 10**6
        check_design(args, params)
    else:
        check_bias(args, params)


if __name__ == "__main__":
    main()
