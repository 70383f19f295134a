"""Flows between the nested paraboloids M1, M2 -> M3.

Runs the singularity scan for M1 -> M3 and M2 -> M3 (vertical
correspondence) and the straight Poincare flow M2 -> g(M2), prints a
summary and writes the outputs of the three configs in scripts/configs.

    python scripts/nested_paraboloids.py [--out DIR] [--grid N] [--tsamples N]
"""
import argparse
import os
import time

import numpy as np

from lorentz_flow.config import load_config
from lorentz_flow.envelope import ParameterGrid
from lorentz_flow.flow import Correspondence, FlowProblem, singularity_scan
from lorentz_flow.geodesics import PoincareElement
from lorentz_flow.run import run
from lorentz_flow.surfaces import nested_paraboloids

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = ["m1_m3_vertical.yaml", "m2_m3_vertical.yaml", "m2_poincare.yaml"]


def summarize(label, rep):
    det = rep.det_field
    print(f"{label}: verdict {rep.verdict}")
    print(f"  det N' range [{np.nanmin(det):.4f}, {np.nanmax(det):.4f}], min |det| {rep.min_abs_det:.4g}")
    print(f"  det N' sign changes {len(rep.sign_changes)}, smoothness sign changes {len(rep.smoothness_changes)}")
    if rep.smoothness_changes:
        first = min(rep.smoothness_changes, key=lambda c: c[1])
        print(f"  earliest fold between t = {first[1]:.3f} and {first[2]:.3f} at u = {first[0]}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out/nested_paraboloids")
    ap.add_argument("--grid", type=int, default=41)
    ap.add_argument("--tsamples", type=int, default=41)
    args = ap.parse_args()

    m1, m2, m3 = nested_paraboloids()
    grid = ParameterGrid.from_ranges([(-2, 2, args.grid), (-2, 2, args.grid)])
    times = np.linspace(0, 1, args.tsamples)
    for label, src in (("M1 -> M3", m1), ("M2 -> M3", m2)):
        t0 = time.perf_counter()
        rep = singularity_scan(FlowProblem(src, m3, Correspondence.vertical()), grid, times)
        summarize(f"{label} vertical ({time.perf_counter() - t0:.1f} s)", rep)

    g = PoincareElement(np.eye(3), 0.4, np.array([0.0, 0.0, 3.2]))
    prob = FlowProblem(m2, m3, Correspondence.poincare(g))
    gap = prob.target_mismatch(grid.points)
    print(f"g(M2) vs M3 vertical gap: [{gap.min():.4f}, {gap.max():.4f}] (the Poincare flow ends on g(M2))")
    summarize("M2 -> g(M2) Poincare", singularity_scan(prob, grid, times))

    for name in CONFIGS:
        cfg = load_config(os.path.join(HERE, "configs", name)).with_overrides(args.grid, args.tsamples)
        rep = run(cfg, os.path.join(args.out, cfg.name))
        print(f"wrote {cfg.name}: " + ", ".join(f"{os.path.basename(o.path)} ({o.rows})" for o in rep.outputs))


if __name__ == "__main__":
    main()
