#!/usr/bin/env python3
"""Run the scaling benchmark and print a per-size summary table.

Thin wrapper over `treefield bench`; pass --sizes and --f through. Example:

    python scripts/bench_scaling.py --sizes 1024,2048,4096,8192 --f poly:1,-0.5
"""

import argparse
import csv
import io
import subprocess
import sys
from collections import defaultdict


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1024,2048,4096,8192")
    ap.add_argument("--f", default="poly:1,-0.5,0.25")
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--d", type=int, default=1)
    args = ap.parse_args()

    cmd = [
        sys.executable, "-m", "treefield", "bench",
        "--sizes", args.sizes, "--f", args.f,
        "--repeats", str(args.repeats), "--d", str(args.d),
    ]
    out = subprocess.run(cmd, check=True, capture_output=True, text=True).stdout
    rows = [r for r in csv.DictReader(
        line for line in io.StringIO(out) if not line.startswith("#"))]

    times = defaultdict(list)
    for r in rows:
        times[(int(r["n"]), r["method"], r["phase"])].append(float(r["seconds"]))

    sizes = sorted({int(r["n"]) for r in rows})
    print(f"{'n':>8} {'FTFI pre':>10} {'FTFI int':>10} {'BTFI int':>10} {'speedup':>8}")
    for n in sizes:
        fpre = min(times.get((n, "FTFI", "preprocess"), [float('nan')]))
        fint = min(times.get((n, "FTFI", "integrate"), [float('nan')]))
        bint = min(times.get((n, "BTFI", "integrate"), [float('nan')]))
        speed = bint / fint if fint and fint == fint else float("nan")
        print(f"{n:>8} {fpre:>10.4f} {fint:>10.4f} {bint:>10.4f} {speed:>8.2f}")


if __name__ == "__main__":
    main()
