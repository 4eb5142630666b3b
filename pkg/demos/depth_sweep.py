"""A never-observed event, measured at shrinking depth.

With the prior fixed at mu = 0.25, sigma2 = 0.05, every sample has t = 0 and
only the sequencing depth o changes. Deep samples are real evidence that the
rate is low; shallow samples say almost nothing, so the estimate returns to
the prior mean.
"""

from latentlog.experiments import run_depth_sweep


def main():
    sweep = run_depth_sweep()
    print(f"{'depth o':>12}  {'nlag':>10}  {'lag':>10}")
    cols = sweep.columns()
    for o, nlag, lag in zip(cols["o"], cols["nlag"], cols["lag"]):
        print(f"{o:12.3g}  {nlag:10.5f}  {lag:10.4f}")
    print(f"\nmonotone in depth: {sweep.monotone}")
    print(f"distance from prior mean at the shallowest depth: {sweep.endpoint_gap:.2e}")


if __name__ == "__main__":
    main()
