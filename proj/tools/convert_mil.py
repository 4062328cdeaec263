#!/usr/bin/env python3
"""Convert the CSV files shipped in the `mil` wheel (label, bag, features...)
into bag-CSV (bag id, label, features...).

    pip download --no-deps mil==1.0.5
    python3 -m zipfile -e mil-1.0.5-py3-none-any.whl mil_wheel
    python3 tools/convert_mil.py mil_wheel/mil/data/datasets/csv data musk1 musk2 elephant
"""
import argparse
import csv
import pathlib


def convert(src: pathlib.Path, dst: pathlib.Path, name: str) -> int:
    rows = 0
    with src.open(newline="") as fin, dst.open("w", newline="") as fout:
        out = csv.writer(fout, lineterminator="\n")
        for rec in csv.reader(fin):
            if not rec:
                continue
            label, bag, *features = rec
            out.writerow([f"{name}_{bag}", label, *features])
            rows += 1
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("src_dir", type=pathlib.Path)
    ap.add_argument("dst_dir", type=pathlib.Path)
    ap.add_argument("names", nargs="+")
    args = ap.parse_args()
    args.dst_dir.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        n = convert(args.src_dir / f"{name}.csv", args.dst_dir / f"{name}.csv", name)
        print(f"{name}: {n} instances")


if __name__ == "__main__":
    main()
