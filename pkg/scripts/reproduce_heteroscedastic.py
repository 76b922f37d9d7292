"""One-dimensional heteroscedastic data, Y = X + |X| e: adaptive intervals
(Ad-EffOrt, locally weighted CP, CQR)."""
from _common import parse_args, sweep

from qae_conformal.harness import RunConfig

if __name__ == "__main__":
    args = parse_args(__doc__)
    sweep(RunConfig(scenario="heteroscedastic-1d", n_lrn=1000, n_cal=1000, n_test=1000), args, "hetero")
