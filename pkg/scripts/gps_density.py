"""Monte Carlo zero density of the Gaussian power series against both kernels."""
import argparse

from outlab.laurent import adjudicate_gps, gps_band_density, gps_zero_density


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--radii", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    parser.add_argument("--half-width", type=float, default=0.05)
    parser.add_argument("--trials", type=int, default=5000)
    parser.add_argument("--order", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    est = gps_zero_density(args.radii, args.half_width, args.order, args.trials, args.seed)
    print("r     estimate  +-se      1/pi(1-r^2)  1/pi(1-r^2)^2")
    for r, d, se in zip(est.radii, est.density, est.standard_error):
        print(f"{r:.2f}  {d:.4f}    {se:.4f}    {gps_band_density(r, args.half_width, 'linear'):.4f}"
              f"       {gps_band_density(r, args.half_width, 'squared'):.4f}")
    winner, _ = adjudicate_gps(est)
    print(f"matching kernel: {winner}")


if __name__ == "__main__":
    main()
