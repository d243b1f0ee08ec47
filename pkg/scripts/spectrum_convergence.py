#!/usr/bin/env python3
"""Surface-spectrum mesh-refinement table.

Builds the boundary-operator spectrum of the unit sphere at several
icosphere subdivision levels and reports per-cluster eigenvalue errors
against the analytic values 1/(2(2n+1)) plus the leading moment
constant against 4*pi/27.
"""

import argparse
import time

import numpy as np

from chiralmeta.np_spectral import sphere_spectrum

ANALYTIC = [1.0 / (2.0 * (2 * n + 1)) for n in (1, 2, 3)]
C1 = 4.0 * np.pi / 27.0


def run(max_subdiv: int) -> None:
    print(f"{'subdiv':>6} {'panels':>7} {'err n=1':>9} {'err n=2':>9} "
          f"{'err n=3':>9} {'c_1 err':>9} {'secs':>6}")
    for s in range(1, max_subdiv + 1):
        t0 = time.time()
        spec = sphere_spectrum(s, mode_count=15)
        secs = time.time() - t0
        clusters = spec.clusters()
        errs = [abs(c.eigenvalue - a) / a for c, a in zip(clusters, ANALYTIC)]
        cerr = abs(clusters[0].c_n - C1) / C1
        print(f"{s:>6} {20 * 4 ** s:>7} "
              + " ".join(f"{e:>9.2%}" for e in errs)
              + f" {cerr:>9.2%} {secs:>6.1f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-subdiv", type=int, default=3,
                    help="finest icosphere level (4 takes ~40 s)")
    run(ap.parse_args().max_subdiv)
