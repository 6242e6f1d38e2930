#!/usr/bin/env python3
"""Materialize MovieLens-100K in its original GroupLens layout.

The original archive host is not always reachable. The RecBole wheel on PyPI
bundles the same 100,000 ratings plus user/item metadata as "atomic" files;
this script downloads that wheel (or uses a local copy) and rewrites
u.data, u.user, u.item and u.genre.

    python3 tools/fetch_ml100k.py --out data/ml-100k
"""
import argparse
import pathlib
import re
import subprocess
import sys
import tempfile
import zipfile

GENRES = ["unknown", "Action", "Adventure", "Animation", "Children's", "Comedy",
          "Crime", "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror",
          "Musical", "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western"]
PREFIX = "recbole/dataset_example/ml-100k/ml-100k."


def read_atomic(zf, suffix):
    lines = zf.read(PREFIX + suffix).decode("latin-1").splitlines()
    return [line.split("\t") for line in lines[1:] if line]


def convert(wheel, out):
    out.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(wheel) as zf:
        inter = read_atomic(zf, "inter")
        users = read_atomic(zf, "user")
        items = read_atomic(zf, "item")

    with open(out / "u.data", "w") as f:
        for u, i, r, t in inter:
            f.write(f"{u}\t{i}\t{int(float(r))}\t{int(float(t))}\n")
    with open(out / "u.user", "w") as f:
        for u, age, gender, occ, zipc in users:
            f.write(f"{u}|{age}|{gender}|{occ}|{zipc}\n")
    with open(out / "u.item", "w") as f:
        for row in items:
            row += [""] * (4 - len(row))
            iid, title, year, classes = row[:4]
            tags = set(classes.split())
            # "Children's" is split into tokens on whitespace only, so it survives intact.
            flags = ["1" if g in tags else "0" for g in GENRES]
            if not any(flags[1:]):
                flags[0] = "1"
            if not re.fullmatch(r"\d{4}", year.strip()):
                m = re.search(r"\((\d{4})\)", title)
                year = m.group(1) if m else ""
            date = f"01-Jan-{year.strip()}" if year else ""
            f.write("|".join([iid, title, date, "", ""] + flags) + "\n")
    with open(out / "u.genre", "w") as f:
        for k, g in enumerate(GENRES):
            f.write(f"{g}|{k}\n")
    print(f"wrote {len(inter)} ratings, {len(users)} users, {len(items)} items to {out}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="data/ml-100k")
    ap.add_argument("--wheel", help="path to an already downloaded recbole wheel")
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    if args.wheel:
        convert(pathlib.Path(args.wheel), out)
        return
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "recbole==1.2.1",
                        "--no-deps", "-q", "-d", tmp], check=True)
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        convert(wheel, out)


if __name__ == "__main__":
    main()
