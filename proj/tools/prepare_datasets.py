#!/usr/bin/env python3
"""Regenerate data/wdbc.csv and data/ionosphere.csv from locally available copies.

WDBC comes from the copy shipped with scikit-learn; ionosphere from the KEEL
repository copy shipped in the `keel-ds` wheel. Output layout: label first
(+1/-1), then the raw features, no header.

    python3 tools/prepare_datasets.py --keel-wheel keel_ds-0.2.5-py3-none-any.whl
"""
import argparse
import csv
import os
import zipfile


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in rows:
            w.writerow(r)


def wdbc(out_dir):
    import sklearn

    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "breast_cancer.csv")
    rows = []
    with open(src) as fh:
        reader = csv.reader(fh)
        next(reader)  # "569,30,malignant,benign"
        for rec in reader:
            # sklearn target: 0 = malignant, 1 = benign. Benign is the +1 class.
            label = "1" if rec[-1].strip() == "1" else "-1"
            rows.append([label] + [v.strip() for v in rec[:-1]])
    assert len(rows) == 569 and all(len(r) == 31 for r in rows)
    write_rows(os.path.join(out_dir, "wdbc.csv"), rows)


def ionosphere(out_dir, wheel):
    raw = zipfile.ZipFile(wheel).read("keel_ds/data/balanced/raw/ionosphere.dat").decode()
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rec = [v.strip() for v in line.split(",")]
        feats, cls = rec[:-1], rec[-1]
        # KEEL drops UCI attribute 2, which is identically zero; restore it so
        # the file has the original 34 columns.
        feats = feats[:1] + ["0"] + feats[1:]
        rows.append(["1" if cls == "g" else "-1"] + feats)
    assert len(rows) == 351 and all(len(r) == 35 for r in rows)
    write_rows(os.path.join(out_dir, "ionosphere.csv"), rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--keel-wheel", required=True)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    a = ap.parse_args()
    wdbc(a.out)
    ionosphere(a.out, a.keel_wheel)
