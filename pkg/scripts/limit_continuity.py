"""How fast does the scaled Jensen divergence reach its Bregman limit?

For each 1D family, generator (F, Z) and parameter pair, prints
|J^s(eps) - B(theta1:theta2)| for eps = 1e-2 ... 1e-7 and the log-log slope
of the error against eps (1.0 means the gap shrinks linearly in eps).

    python3 scripts/limit_continuity.py
"""

import argparse

import numpy as np

from expfamdiv import bregman, jensen_scaled, make_family
from expfamdiv.suites import ONE_D_KINDS, family_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7])
    args = ap.parse_args()
    print(f"{'generator':<24} {'pair':<28} " + " ".join(f"{e:>10.0e}" for e in args.eps) + "  slope")
    for kind in ONE_D_KINDS:
        model = make_family(kind)
        for g in (model.generator("F"), model.generator("Z")):
            for t1, t2 in family_pairs(model):
                b = bregman(g, t1, t2)
                errs = [abs(jensen_scaled(g, t1, t2, e) - b) for e in args.eps]
                # log-log slope over the well-conditioned part of the range
                slope = np.polyfit(np.log10(args.eps[:4]), np.log10(np.maximum(errs[:4], 1e-300)), 1)[0]
                pair = f"{t1.tolist()} {t2.tolist()}"
                print(f"{g.name:<24} {pair:<28} " + " ".join(f"{e:10.2e}" for e in errs) + f"  {slope:5.2f}")


if __name__ == "__main__":
    main()
