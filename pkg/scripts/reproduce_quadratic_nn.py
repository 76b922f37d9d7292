"""Y = X^2 + e fitted with a one-hidden-layer ReLU network (width 10)."""
from _common import parse_args, sweep

from qae_conformal.harness import RunConfig

if __name__ == "__main__":
    args = parse_args(__doc__)
    sweep(RunConfig(scenario="quadratic-nn", n_lrn=1000, n_cal=1000, n_test=1000), args, "quadratic")
