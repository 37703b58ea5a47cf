"""Timing/accuracy sweep over dictionary sizes, written to CSV.

Single-scale rows show how coding time grows with the atom count while the
approximation improves; the paired two-scale row reports the measured and
predicted speedups.
"""

import tempfile
from pathlib import Path

from crossdict import benchmark_sweep, write_benchmark_csv
from crossdict.synthetic import synthetic_image

image = synthetic_image((96, 96), seed=1)
sweep = [
    {"t": 64, "k": 8},
    {"t": 128, "k": 8},
    {"t": 256, "k": 8},
    {"t_high": 256, "t_low": 16, "k_low": 8, "k_high": 8},
]
print("training and timing 4 configurations (median of 3 repetitions) ...")
rows = benchmark_sweep(image, sweep, patch_shape=(8, 8), stride=(4, 4),
                       iterations=6, seed=0, repetitions=3)

header = f"{'method':12s} {'T_high':>6s} {'T_low':>5s} {'time ms':>8s} {'snr dB':>7s} {'meas.':>6s} {'pred.':>6s}"
print("\n" + header)
for row in rows:
    print(f"{row.method:12s} {row.t_high:6d} {row.t_low:5d} {row.time_ms:8.1f} "
          f"{row.snr_db:7.2f} {row.speedup_measured:6.2f} {row.speedup_predicted:6.2f}")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "bench.csv"
    write_benchmark_csv(rows, path)
    print(f"\nCSV written with canonical header:\n{path.read_text().splitlines()[0]}")
