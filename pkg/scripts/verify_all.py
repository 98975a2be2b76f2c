#!/usr/bin/env python3
"""Run `everse verify` on every preset and print a one-line summary each."""
import io
import json
import sys
from contextlib import redirect_stdout

from everse.cli import PRESETS, main


def summarize(rep):
    parts = []
    for k, v in rep.get("implicit", {}).get("max_relative", {}).items():
        parts.append(f"{k} {v:.1e}")
    sm = rep.get("smoothness")
    if sm:
        parts.append(f"margin {sm['margin']:.3f}, min|N| {sm['min_normal_norm']:.3g}, "
                     f"min det {sm['min_jacobian']:.3g}")
    return "; ".join(parts)


def run():
    worst = 0
    for name in sorted(PRESETS):
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = main(["verify", "--stage", name])
        rep = json.loads(buf.getvalue())
        print(f"{name:9s} {'ok ' if code == 0 else 'FAIL'} {summarize(rep)}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(run())
