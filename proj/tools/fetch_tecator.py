#!/usr/bin/env python3
"""Fetch the Tecator meat dataset and write it as mirsel CSV + split JSON.

Tries the StatLib archive first. When that host is unreachable, falls back
to the copy shipped in the `rdatasets` Python package (modeldata::meats),
which holds the same 215 spectra in the same order.

Output (in --out, default ./data):
  tecator.csv         100 absorbance columns (850..1048 nm) + fat
  tecator_split.json  rows 0..171 train, 172..214 test
  tecator.json        dataset manifest consumed by `mirsel --dataset`
"""
import argparse
import json
import os
import sys
import urllib.request

STATLIB_URL = "http://lib.stat.cmu.edu/datasets/tecator"
N_SAMPLES = 215
N_TRAIN = 172
N_CHANNELS = 100


def from_statlib():
    with urllib.request.urlopen(STATLIB_URL, timeout=30) as resp:
        text = resp.read().decode("latin-1")
    # The archive starts with a free-text description; the data block is
    # 215 records of 125 numbers (100 absorbances, 22 PCs, water, fat, protein).
    numbers = []
    for line in text.splitlines():
        parts = line.split()
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            numbers = []
            continue
        numbers.extend(vals)
    if len(numbers) < N_SAMPLES * 125:
        raise RuntimeError("unexpected StatLib tecator layout")
    numbers = numbers[-N_SAMPLES * 125:]
    rows = []
    for i in range(N_SAMPLES):
        rec = numbers[i * 125:(i + 1) * 125]
        rows.append(rec[:N_CHANNELS] + [rec[123]])
    return rows


def from_rdatasets():
    import rdatasets  # pip install rdatasets
    df = rdatasets.data("modeldata", "meats")
    cols = [f"x_{j:03d}" for j in range(1, N_CHANNELS + 1)]
    return [list(map(float, r)) + [float(f)]
            for r, f in zip(df[cols].itertuples(index=False), df["fat"])]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.environ.get("MIRSEL_DATA_DIR", "data"))
    ap.add_argument("--source", choices=["auto", "statlib", "rdatasets"], default="auto")
    args = ap.parse_args()

    rows = None
    if args.source in ("auto", "statlib"):
        try:
            rows = from_statlib()
            print("fetched from StatLib", file=sys.stderr)
        except Exception as exc:  # noqa: BLE001
            if args.source == "statlib":
                raise
            print(f"StatLib unavailable ({exc}); using rdatasets", file=sys.stderr)
    if rows is None:
        rows = from_rdatasets()

    os.makedirs(args.out, exist_ok=True)
    header = [f"{850 + 2 * j}nm" for j in range(N_CHANNELS)] + ["fat"]
    with open(os.path.join(args.out, "tecator.csv"), "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(repr(v) for v in r) + "\n")
    with open(os.path.join(args.out, "tecator_split.json"), "w") as fh:
        json.dump({"train": list(range(N_TRAIN)),
                   "test": list(range(N_TRAIN, N_SAMPLES))}, fh)
    manifest = {
        "name": "tecator",
        "csv": "tecator.csv",
        "target": "fat",
        "split": "tecator_split.json",
        "preprocess": "spectrum-normalize",
        "folds": 4,
    }
    with open(os.path.join(args.out, "tecator.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


if __name__ == "__main__":
    main()
