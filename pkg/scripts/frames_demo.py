"""Parallel frames along a random geodesic, with and without an end twist.

    python scripts/frames_demo.py [--seed N] [--twist RAD] [--samples N]
"""
import argparse

import numpy as np

from lorentz_flow.frames import distinguished_frame, frame_interpolate, parallel_check, parallel_transport_frame
from lorentz_flow.run import random_segment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--twist", type=float, default=0.8)
    ap.add_argument("--samples", type=int, default=401)
    args = ap.parse_args()

    seg = random_segment(args.seed)
    times = np.linspace(0, 1, args.samples)
    print(f"n0 = {seg.z0.normal.round(4)}, c0 = {seg.z0.offset:.4f}")
    print(f"n1 = {seg.z1.normal.round(4)}, c1 = {seg.z1.offset:.4f}, theta = {seg.theta:.4f}")

    fam = parallel_transport_frame(seg, distinguished_frame(seg, [0.0])[0][0], times)
    for i in range(seg.dim - 1):
        rep = parallel_check(seg, fam.section(i))
        print(f"transported e{i + 1}: parallel {rep.is_parallel}, residual {rep.residual:.2e}, "
              f"beta(1) = {fam.offsets[-1, i]:.4f}")

    e = fam.frames[-1]
    c, s = np.cos(args.twist), np.sin(args.twist)
    target = np.array([c * e[0] + s * e[1], -s * e[0] + c * e[1]])
    twisted = frame_interpolate(fam, target)
    for i in range(seg.dim - 1):
        rep = parallel_check(seg, twisted.section(i))
        print(f"twisted e{i + 1}: parallel {rep.is_parallel}, residual {rep.residual:.2e}, "
              f"|phi| max {np.max(np.abs(rep.phi)):.4f}")
    print(f"end frame error {np.max(np.abs(twisted.frames[-1] - target)):.2e}")


if __name__ == "__main__":
    main()
