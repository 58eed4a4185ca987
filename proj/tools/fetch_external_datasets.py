#!/usr/bin/env python3
"""Convert UCI files that are not bundled into data/<name>.csv + schema.

Download the raw files by hand (the UCI repository is not reachable from
every build machine) and point this script at them:

    slump_test.data   -> concrete   (103 x 10, quantitative)
    parkinsons.data   -> parkinson  (195 x 22, quantitative)
    clean1.data       -> musk       (476 x 167, mixed)

Usage: fetch_external_datasets.py --concrete slump_test.data \
           --parkinson parkinsons.data --musk clean1.data [--out data]

With --download the files are fetched from archive.ics.uci.edu first.
"""

import argparse
import csv
import json
import pathlib
import urllib.request

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases/"
SOURCES = {
    "concrete": UCI + "concrete/slump/slump_test.data",
    "parkinson": UCI + "parkinsons/parkinsons.data",
    "musk": UCI + "musk/clean1.data",
}


def write(out, name, header, rows, kinds):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    columns = []
    for col, kind in zip(header, kinds):
        if kind is None:
            columns.append({"name": col, "kind": "quantitative"})
        else:
            columns.append({"name": col, "kind": "categorical", "levels": kind})
    with open(out / f"{name}.schema.json", "w") as f:
        json.dump({"columns": columns}, f, indent=2)
        f.write("\n")
    print(f"{name}: {len(rows)} x {len(header)}")


def concrete(path, out):
    with open(path) as f:
        records = list(csv.reader(f))
    header = [h.strip() for h in records[0][1:]]
    rows = [[v.strip() for v in r[1:]] for r in records[1:] if r]
    write(out, "concrete", header, rows, [None] * len(header))


def parkinson(path, out):
    with open(path) as f:
        records = list(csv.reader(f))
    keep = [i for i, h in enumerate(records[0]) if h not in ("name", "status")]
    header = [records[0][i] for i in keep]
    rows = [[r[i] for i in keep] for r in records[1:] if r]
    write(out, "parkinson", header, rows, [None] * len(header))


def musk(path, out):
    with open(path) as f:
        records = [line.strip().rstrip(".").split(",") for line in f if line.strip()]
    header = [f"f{i}" for i in range(1, 167)] + ["class"]
    rows = [r[2:168] + ["musk" if float(r[168]) == 1 else "non-musk"] for r in records]
    write(out, "musk", header, rows, [None] * 166 + [["non-musk", "musk"]])


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--concrete", type=pathlib.Path)
    parser.add_argument("--parkinson", type=pathlib.Path)
    parser.add_argument("--musk", type=pathlib.Path)
    parser.add_argument("--download", action="store_true", help="fetch the raw files from UCI")
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "data")
    args = parser.parse_args()
    converters = {"concrete": concrete, "parkinson": parkinson, "musk": musk}
    for name, convert in converters.items():
        path = getattr(args, name)
        if path is None and args.download:
            path = args.out / pathlib.Path(SOURCES[name]).name
            urllib.request.urlretrieve(SOURCES[name], path)
        if path is not None:
            convert(path, args.out)


if __name__ == "__main__":
    main()
