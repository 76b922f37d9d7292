"""Linear model in three dimensions, n = 1000 per split: split CP (least
squares and Huber) against the QAE-trained interval under four noise laws."""
from _common import parse_args, sweep

from qae_conformal.harness import RunConfig

if __name__ == "__main__":
    args = parse_args(__doc__)
    sweep(RunConfig(scenario="linear-3d", n_lrn=1000, n_cal=1000, n_test=1000), args, "linear")
