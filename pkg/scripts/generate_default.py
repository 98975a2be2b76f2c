#!/usr/bin/env python3
"""Write the default eversion as OBJ frames plus manifest.json.

    python3 scripts/generate_default.py out/ --frames 60 --resolution 128x402
"""
import argparse
import time

from everse.meshio import default_schedule, frame_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--frames", type=int, default=60, help="frames per leg")
    ap.add_argument("--resolution", default="128x402")
    ap.add_argument("--format", default="obj", choices=["obj", "ply"])
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    rows, cols = (int(v) for v in args.resolution.split("x"))
    sched = default_schedule(frames_per_leg=args.frames)
    t0 = time.perf_counter()
    files = frame_sequence(sched, args.out, args.format, rows, cols, threads=args.threads)
    print(f"{len(files) - 1} frames in {time.perf_counter() - t0:.1f} s -> {files[-1]}")


if __name__ == "__main__":
    main()
