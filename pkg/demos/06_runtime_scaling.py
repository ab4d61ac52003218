"""Runtime scaling: pairwise pipeline versus full-ML baseline.

Times both estimation routes on shared datasets of growing size and
fits log-log slopes.  The pairwise route (tree build + greedy coupling
+ closed-form solve) stays near-linear; the baseline pays an O(n^3)
spectral step, so the gap widens quickly.  Uses smaller sizes than the
acceptance benchmark to finish in seconds.
"""

from pathlib import Path

from pairlik import timing_benchmark
from pairlik.io import write_timing_series_csv

report = timing_benchmark(ns=[250, 500, 1000, 2000], repeats=5, base_seed=99)

print(f"{'n':>6} {'PL median':>12} {'FL median':>12} {'FL / PL':>9}")
for n in report.ns:
    pl = report.median_time("pl", n)
    fl = report.median_time("fl", n)
    print(f"{n:6d} {pl * 1e3:10.2f} ms {fl * 1e3:10.2f} ms {fl / pl:9.1f}x")

pl_slope, pl_resid = report.slopes["pl"]
fl_slope, fl_resid = report.slopes["fl"]
print(f"\nlog-log slopes: PL {pl_slope:.2f} (rms resid {pl_resid:.3f}), "
      f"FL {fl_slope:.2f} (rms resid {fl_resid:.3f})")

out_dir = Path("demo_output")
out_dir.mkdir(exist_ok=True)
for method in ("pl", "fl"):
    write_timing_series_csv(out_dir / f"times_{method}.csv", report, method)
print(f"plot-ready n,seconds series written to {out_dir}/")
