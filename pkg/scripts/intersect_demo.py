#!/usr/bin/env python3
"""Compare mesh self-intersections with the analytic curves across a few t values.

Prints the two directed distances and the 2*max-edge tolerance for each stage.
"""
import argparse
import time

from everse.intersections import (
    branch_points, clip_to_domain, directed_distance, general_curve, mesh_self_intersections,
)
from everse.meshio import tessellate
from everse.surface import StageParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--resolution", default="100x314")
    ap.add_argument("--H", type=float, default=3.0)
    ap.add_argument("--t", type=float, nargs="*", default=[-0.5, 0.0, 0.3, 0.9, 1.5])
    ap.add_argument("--q", type=float, default=0.0)
    args = ap.parse_args()
    rows, cols = (int(v) for v in args.resolution.split("x"))
    print(f"{'t':>6} {'segments':>9} {'mesh->curve':>12} {'curve->mesh':>12} {'tol':>8} {'sec':>5}")
    for t in args.t:
        t0 = time.perf_counter()
        st = StageParams.make(n=2, t=t, q=args.q, p=1 - args.q * abs(t))
        mesh = tessellate(st, rows, cols, mode="raw", H=args.H)
        cloud = mesh_self_intersections(mesh)
        ana = branch_points(clip_to_domain(general_curve(st.surface, 2000), args.H))
        a = directed_distance(cloud.points, ana) if len(ana) else float("nan")
        b = directed_distance(ana, cloud.points) if len(cloud) else float("nan")
        print(f"{t:6.2f} {len(cloud):9d} {a:12.4f} {b:12.4f} {2 * mesh.max_edge():8.4f} "
              f"{time.perf_counter() - t0:5.1f}")


if __name__ == "__main__":
    main()
