#!/usr/bin/env python3
"""Plot the ATM-skew term structure produced next to this script."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
FIT = None
MEMBER_FILES = []


def read_curve(path, method="finite_difference"):
    ts, skews, errs = [], [], []
    with open(path) as f:
        for row in csv.DictReader(r for r in f if not r.startswith("#")):
            if row["method"] != method:
                continue
            ts.append(float(row["t"]))
            skews.append(abs(float(row["skew"])))
            errs.append(float(row["stderr"]))
    return ts, skews, errs


fig, ax = plt.subplots(figsize=(6, 4.5))
ts, skews, errs = read_curve(os.path.join(HERE, "skew_curve.csv"))
ax.errorbar(ts, skews, yerr=errs, fmt="o", ms=4, capsize=2, label="explode")
for member in MEMBER_FILES:
    mts, mskews, merrs = read_curve(os.path.join(HERE, member))
    ax.errorbar(mts, mskews, yerr=merrs, fmt=".", ms=3, alpha=0.7,
                label=member.replace("skew_curve_", "").replace(".csv", ""))
if FIT is not None and ts:
    c, alpha = FIT
    grid = [min(ts) * (max(ts) / min(ts)) ** (i / 200.0) for i in range(201)]
    ax.plot(grid, [c * t ** -alpha for t in grid], "-",
            label=f"fit: {c:.3g} T^-{alpha:.3f}")
ax.set_xscale("log")
ax.set_yscale("log")
ax.set_xlabel("maturity T (years)")
ax.set_ylabel("|ATM skew|")
ax.legend(fontsize=8)
ax.set_title("explode")
fig.tight_layout()
out = os.path.join(HERE, "skew.png")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
