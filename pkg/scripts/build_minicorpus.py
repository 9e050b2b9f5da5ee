"""Regenerate the bundled mini-corpus and chat fixtures under src/groundgate/data."""

import argparse
from pathlib import Path

from groundgate.minicorpus import N_GROUPS, SEED, build_minicorpus, write_minicorpus

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "src" / "groundgate" / "data"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    ap.add_argument("--groups", type=int, default=N_GROUPS)
    ap.add_argument("--seed", type=int, default=SEED)
    args = ap.parse_args()
    for name, path in write_minicorpus(args.out, build_minicorpus(args.groups, args.seed)).items():
        print(f"{name}: {path}")
