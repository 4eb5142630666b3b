"""How far off is log(t + 1)? A rare and an abundant synthetic gene.

Both genes are drawn from the hierarchy at 2597 samples with log-normal depths
around 5 million reads. For the rare gene a zero count under a pseudocount of
1 maps to log(1) = 0, which is far too high; for the abundant gene a zero in a
deep sample is better explained as bad luck than as absence.
"""

import numpy as np

from latentlog.experiments import run_gene_analogs


def main():
    for name, analog in run_gene_analogs().items():
        d = analog.diagnostics
        table = analog.compare()
        zero = table["t"] == 0
        print(f"{name} gene (true mu {analog.truth.mu}, sigma2 {analog.truth.sigma2})")
        print(f"  zero fraction       {d['zero_fraction']:.3f}")
        print(f"  learned mu, sigma2  {d['mu_hat']:.3f}, {d['sigma2_hat']:.3g}"
              f"  ({d['iterations']} sweeps, converged={d['converged']})")
        print(f"  lag of zero counts  {np.min(table['lag'][zero]):.3f} .. {np.max(table['lag'][zero]):.3f}"
              "  versus log(0 + 1) = 0")
        print()


if __name__ == "__main__":
    main()
