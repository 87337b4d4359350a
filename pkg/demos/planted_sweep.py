"""
Planted partitions with growing noise
=====================================

128 vertices in four groups of 32 with expected degree 16. As the
expected number of links leaving a group (z_out) grows, the groups blur.
"""
import sys

from agreecomm.bench import run_sweep, write_csv

rows = run_sweep("planted", values=range(1, 9), repeats=20, taus=(0.2,), master_seed=1)
write_csv(rows, sys.stdout)

# a crude text plot of the NMI curve
for row in rows:
    print(f"z_out={row.sweep:g} {'#' * int(round(row.nmi_mean * 50))} {row.nmi_mean:.2f}")
