"""Monte Carlo dispersion of random and low-discrepancy expanded sample sets.

    python scripts/dispersion_table.py -n 160 -d 2 --horizon 2 --seeds 20
"""

import argparse

import numpy as np

from ldseds import harness

SAMPLERS = [
    harness.SamplerSpec("Rand", "random"),
    harness.SamplerSpec("LDSEDS1-Halton", "direct", "halton"),
    harness.SamplerSpec("LDSEDS1-HSS", "direct", "scrambled_halton"),
    harness.SamplerSpec("LDSEDS1-Sobol", "direct", "sobol"),
    harness.SamplerSpec("LDSEDS1-HWS", "direct", "hua_wang"),
    harness.SamplerSpec("LDSEDS2-HSS", "combined", "scrambled_halton"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=160)
    ap.add_argument("-d", type=int, default=2)
    ap.add_argument("--horizon", type=int, default=2)
    ap.add_argument("--probes", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    rows = harness.dispersion_report(SAMPLERS, args.n, args.d, args.horizon, args.probes,
                                     range(args.seeds))
    print(f"n={args.n} d={args.d} G={args.horizon} probes={args.probes}")
    print(f"{'sampler':<18}{'mean':>10}{'std':>10}{'min':>10}{'max':>10}")
    for spec in SAMPLERS:
        v = np.array([r["dispersion"] for r in rows if r["sampler"] == spec.label])
        print(f"{spec.label:<18}{v.mean():>10.4f}{v.std():>10.4f}{v.min():>10.4f}{v.max():>10.4f}")


if __name__ == "__main__":
    main()
