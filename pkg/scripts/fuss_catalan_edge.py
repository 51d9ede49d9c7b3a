"""Compare ||(X/sqrt n)^m|| / (m+1) with the Fuss-Catalan edge as n grows."""
import argparse
import math

from outlab.ensembles import sample_iid_matrix
from outlab.stats import power_norm_ratio


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000])
    parser.add_argument("--m-max", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args()
    print("n     m  ratio    limit")
    for n in args.sizes:
        X = sample_iid_matrix(n, "rademacher", args.seed, 0)
        for m in range(1, args.m_max + 1):
            limit = math.sqrt((m + 1) ** (m + 1) / m ** m) / (m + 1)
            print(f"{n:<5d} {m}  {power_norm_ratio(X, m):.4f}  {limit:.4f}")


if __name__ == "__main__":
    main()
