#!/usr/bin/env python3
"""Convert the Breast Cancer Wisconsin (original, 699 rows) table into the
featrec CSV layout.

Accepts either the UCI ``breast-cancer-wisconsin.data`` file (no header,
'?' for missing, class 2/4) or the R MASS ``biopsy.csv`` export (header,
'NA' for missing, class benign/malignant). The 16 missing Bare Nuclei
cells are filled with the column median so all 699 rows are kept.
"""
import argparse
import csv
import statistics

FEATURES = [
    "clump_thickness", "cell_size_uniformity", "cell_shape_uniformity",
    "marginal_adhesion", "epithelial_cell_size", "bare_nuclei",
    "bland_chromatin", "normal_nucleoli", "mitoses",
]


def read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows[0][-1].strip('"') == "class":
        # MASS export: "", ID, V1..V9, class
        out = []
        for r in rows[1:]:
            label = "malignant" if r[-1] == "malignant" else "benign"
            out.append((r[2:11], label))
        return out
    out = []
    for r in rows:
        label = "malignant" if r[-1].strip() == "4" else "benign"
        out.append((r[1:10], label))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("input")
    ap.add_argument("output")
    args = ap.parse_args()

    rows = read_rows(args.input)
    missing = {"NA", "?", ""}
    medians = []
    for j in range(len(FEATURES)):
        vals = [float(r[0][j]) for r in rows if r[0][j] not in missing]
        medians.append(statistics.median(vals))

    with open(args.output, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURES + ["class"])
        for feats, label in rows:
            vals = [medians[j] if v in missing else float(v) for j, v in enumerate(feats)]
            w.writerow([f"{v:g}" for v in vals] + [label])
    print(f"wrote {len(rows)} rows to {args.output}")


if __name__ == "__main__":
    main()
