#!/usr/bin/env python3
"""Plot test MSE from genf report JSON files.

Usage: plot_reports.py OUT_DIR [--metric mse|mae|smape] [--save FILE]

OUT_DIR is the --out directory of `genf sweep` or `genf bench`; every
seed-*/report-*.json below it is read. Left panel: metric per strategy label,
one marker per seed. Right panel: GenF metric against L, one line per seed,
with DF and IF as dashed references.
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.ticker import MaxNLocator


def load(out_dir):
    reports = []
    for path in sorted(Path(out_dir).glob("seed-*/report-*.json")):
        with open(path) as f:
            rep = json.load(f)
        if rep.get("schema") != "genf-report/v1":
            raise SystemExit(f"{path}: not a genf-report/v1 file")
        reports.append(rep)
    if not reports:
        raise SystemExit(f"no reports under {out_dir}")
    return reports


def order(label):
    if label == "DF":
        return (0, 0)
    if label == "IF":
        return (1, 0)
    return (2, int(label.split("-")[1]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--metric", default="mse", choices=["mse", "mae", "smape"])
    ap.add_argument("--save", default=None, help="image path (default OUT_DIR/reports.png)")
    args = ap.parse_args()

    reports = load(args.out_dir)
    by_seed = defaultdict(dict)
    for r in reports:
        by_seed[r["master_seed"]][r["label"]] = r["metrics"][args.metric]
    labels = sorted({r["label"] for r in reports}, key=order)

    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))
    for seed, row in sorted(by_seed.items()):
        xs = [i for i, lab in enumerate(labels) if lab in row]
        left.plot(xs, [row[labels[i]] for i in xs], "o", alpha=0.7, label=f"seed {seed}")
    left.set_xticks(range(len(labels)), labels)
    left.set_ylabel(f"test {args.metric}")
    left.legend(fontsize=8)

    for seed, row in sorted(by_seed.items()):
        genf = sorted((order(lab)[1], v) for lab, v in row.items() if lab.startswith("GenF"))
        if genf:
            line = right.plot([l for l, _ in genf], [v for _, v in genf], "o-", label=f"seed {seed}")[0]
            for ref in ("DF", "IF"):
                if ref in row:
                    right.axhline(row[ref], color=line.get_color(), ls="--" if ref == "DF" else ":", lw=0.8)
    right.xaxis.set_major_locator(MaxNLocator(integer=True))
    right.set_xlabel("L (synthetic window)")
    right.set_ylabel(f"test {args.metric}")
    right.set_title("GenF vs L (dashed DF, dotted IF)")

    fig.tight_layout()
    dest = args.save or str(Path(args.out_dir) / "reports.png")
    fig.savefig(dest, dpi=120)
    print(dest)


if __name__ == "__main__":
    main()
