#!/usr/bin/env python3
"""Sweep the doping-bump amplitude and report how the steady deviation
norms scale: in the small-amplitude regime the response is linear, so
halving the bump should halve every deviation norm."""

import sys

from nsplab import (FluidParams, GammaLaw, Grid, gaussian_bump_doping,
                    solve_steady, verify_steady)


def main():
    grid = Grid(dim=3, n=32)
    print(f"{'amplitude':>10s} {'iters':>6s} {'residual':>10s} "
          f"{'|grad rho|_H2':>14s} {'W2r/Lr':>8s}")
    prev = None
    for amp in (0.2, 0.1, 0.05, 0.025, 0.0125):
        doping = gaussian_bump_doping(grid, amplitude=amp)
        params = FluidParams(law=GammaLaw(2.0), rho_bar=doping.b_bar)
        ss = solve_steady(params, doping)
        rep = verify_steady(params, ss, doping, r=1.2)
        ratio = "" if prev is None else f"  (x{rep.grad_rho_hk / prev:.3f})"
        print(f"{amp:10.4f} {ss.iterations:6d} {ss.residual_l2:10.2e} "
              f"{rep.grad_rho_hk:14.6e} {rep.ratio_w2r_lr:8.3f}{ratio}")
        prev = rep.grad_rho_hk
    return 0


if __name__ == "__main__":
    sys.exit(main())
