#!/usr/bin/env python3
"""Fetch MovieLens-100k into data/ml-100k/ml-100k.inter.

The RecBole wheel ships an atomic-file copy of the dataset (tab separated,
header `user_id:token item_id:token rating:float timestamp:float`). pip
downloads the wheel; nothing is installed.
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main():
    root = pathlib.Path(__file__).resolve().parent.parent
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=root / "data" / "ml-100k")
    ap.add_argument("--wheel", type=pathlib.Path, help="use an already downloaded recbole wheel")
    args = ap.parse_args()

    target = args.out / "ml-100k.inter"
    if target.exists():
        print(f"{target} already present", file=sys.stderr)
        return 0
    args.out.mkdir(parents=True, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                            "-d", tmp, "recbole==1.2.1"], check=True)
            wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            data = zf.read(MEMBER)
    lines = data.count(b"\n")
    if lines < 100001:
        print(f"unexpected row count {lines - 1}", file=sys.stderr)
        return 1
    target.write_bytes(data)
    print(f"wrote {target} ({lines - 1} interactions)", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
