"""Build the fixture LDPC codes shipped in src/jamsim/data/.

Regular (3, 6) code of length 256, built by random edge placement that
rejects 4-cycles, retried until H has full GF(2) rank.
"""
import argparse
from pathlib import Path

import numpy as np

from jamsim.fec import ParityCheck, gf2_rref, to_alist

HAMMING = [[1, 1, 0, 1, 1, 0, 0],
           [1, 0, 1, 1, 0, 1, 0],
           [0, 1, 1, 1, 0, 0, 1]]


def regular_code(n, wc, wr, rng, tries=200):
    m = n * wc // wr
    for _ in range(tries):
        H = np.zeros((m, n), dtype=np.uint8)
        ok = True
        for j in rng.permutation(n):
            room = np.flatnonzero(H.sum(1) < wr)
            placed = []
            for i in rng.permutation(room):
                # a shared check with any neighbour of j's current checks closes a 4-cycle
                if placed and np.any(H[placed][:, H[i] == 1].sum(0) > 0):
                    continue
                placed.append(i)
                if len(placed) == wc:
                    break
            if len(placed) < wc:
                ok = False
                break
            H[placed, j] = 1
        if ok and len(gf2_rref(H)[1]) == m:
            return H
    raise RuntimeError("no full-rank code found")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=Path(__file__).parents[1] / "src/jamsim/data")
    args = ap.parse_args()
    H = regular_code(args.n, 3, 6, np.random.default_rng(args.seed))
    (args.out / f"ldpc_{args.n}_{args.n // 2}.alist").write_text(to_alist(ParityCheck.from_dense(H)))
    (args.out / "hamming_7_4.alist").write_text(to_alist(ParityCheck.from_dense(HAMMING)))


if __name__ == "__main__":
    main()
