"""Binary LDPC codes: alist I/O, systematic encoding, and flooding min-sum decoding.

LLRs are log P(b=0)/P(b=1) throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from importlib import resources

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

LLR_CLIP = 30.0


class AlistError(ValueError):
    pass


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ParityCheck:
    """Sparse parity-check matrix given by the check->variable adjacency lists."""
    n: int
    rows: tuple  # m tuples of 0-based variable indices

    def __post_init__(self):
        if any(len(r) == 0 for r in self.rows):
            raise ValueError("parity-check matrix has an empty row")
        used = np.zeros(self.n, dtype=bool)
        for r in self.rows:
            used[list(r)] = True
        if not used.all():
            raise ValueError("parity-check matrix has an empty column")
        if self.m >= self.n:
            raise ValueError("need fewer checks than variables")

    @property
    def m(self) -> int:
        return len(self.rows)

    @cached_property
    def dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            H[i, list(r)] = 1
        return H

    @classmethod
    def from_dense(cls, H) -> "ParityCheck":
        H = np.asarray(H) % 2
        return cls(H.shape[1], tuple(tuple(np.flatnonzero(row).tolist()) for row in H))

    def __eq__(self, other):
        return isinstance(other, ParityCheck) and self.n == other.n and np.array_equal(self.dense, other.dense)

    def syndrome(self, c) -> np.ndarray:
        return (np.asarray(c) @ self.dense.T.astype(np.int64)) % 2


def load_alist(text: str) -> ParityCheck:
    """Parse the standard alist format (1-indexed, zero padding allowed)."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    pos = 0

    def take(count=None):
        nonlocal pos
        if pos >= len(lines):
            lineno = lines[-1][0] + 1 if lines else 1
            raise AlistError(f"line {lineno}: unexpected end of file")
        lineno, toks = lines[pos]
        pos += 1
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise AlistError(f"line {lineno}: non-integer token") from None
        if count is not None and len(vals) < count:
            raise AlistError(f"line {lineno}: expected {count} entries, got {len(vals)}")
        return lineno, vals

    ln, (n, m, *_) = take(2)
    ln, (max_c, max_r, *_) = take(2)
    ln_c, col_deg = take(n)
    ln_r, row_deg = take(m)
    col_deg, row_deg = col_deg[:n], row_deg[:m]
    if max(col_deg) > max_c or max(row_deg) > max_r:
        raise AlistError(f"line {ln_c}: degree exceeds declared maximum")
    cols = []
    for j in range(n):
        ln, vals = take(col_deg[j])
        idx = [v for v in vals if v != 0]
        if len(idx) != col_deg[j] or any(not 1 <= v <= m for v in idx):
            raise AlistError(f"line {ln}: column {j + 1} inconsistent with its degree or m={m}")
        cols.append(idx)
    rows = []
    for i in range(m):
        ln, vals = take(row_deg[i])
        idx = [v for v in vals if v != 0]
        if len(idx) != row_deg[i] or any(not 1 <= v <= n for v in idx):
            raise AlistError(f"line {ln}: row {i + 1} inconsistent with its degree or n={n}")
        rows.append(idx)
    from_cols = sorted((r, j + 1) for j, c in enumerate(cols) for r in c)
    from_rows = sorted((i + 1, v) for i, r in enumerate(rows) for v in r)
    if from_cols != from_rows:
        raise AlistError(f"line {ln}: row and column adjacency lists disagree")
    return ParityCheck(n, tuple(tuple(sorted(v - 1 for v in r)) for r in rows))


def to_alist(h: ParityCheck) -> str:
    H = h.dense
    cols = [np.flatnonzero(H[:, j]) + 1 for j in range(h.n)]
    rows = [np.flatnonzero(H[i]) + 1 for i in range(h.m)]
    max_c, max_r = max(map(len, cols)), max(map(len, rows))
    pad = lambda v, k: " ".join(map(str, list(v) + [0] * (k - len(v))))
    out = [f"{h.n} {h.m}", f"{max_c} {max_r}",
           " ".join(str(len(c)) for c in cols), " ".join(str(len(r)) for r in rows)]
    out += [pad(c, max_c) for c in cols]
    out += [pad(r, max_r) for r in rows]
    return "\n".join(out) + "\n"


def read_alist(path) -> ParityCheck:
    with open(path) as f:
        return load_alist(f.read())


def fixture_code(name: str = "ldpc_256_128") -> ParityCheck:
    """Codes shipped with the package: ``ldpc_256_128`` (rate 1/2) and ``hamming_7_4``."""
    return load_alist(resources.files("jamsim.data").joinpath(f"{name}.alist").read_text())


@dataclass(frozen=True, eq=False)
class CodeSpec:
    h: ParityCheck
    info_pos: np.ndarray  # (K,) codeword positions carrying the message
    parity_pos: np.ndarray  # (m,)
    parity_map: np.ndarray  # (m, K) over GF(2): parity = parity_map @ u

    @property
    def n(self) -> int:
        return self.h.n

    @property
    def k(self) -> int:
        return len(self.info_pos)

    @property
    def rate(self) -> float:
        return self.k / self.n

    def encode(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        if u.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {u.shape[-1]}")
        c = np.zeros(u.shape[:-1] + (self.n,), dtype=np.int8)
        c[..., self.info_pos] = u
        c[..., self.parity_pos] = (u @ self.parity_map.T.astype(np.int64)) % 2
        return c


def gf2_rref(A: np.ndarray):
    """Reduced row echelon form over GF(2); returns (R, pivot_columns)."""
    R = np.array(A, dtype=np.uint8) % 2
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hit = np.flatnonzero(R[r:, c])
        if not len(hit):
            continue
        p = r + hit[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        others = np.flatnonzero(R[:, c])
        others = others[others != r]
        R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def systematize(h: ParityCheck) -> CodeSpec:
    R, pivots = gf2_rref(h.dense)
    if len(pivots) < h.m:
        raise RankDeficientError(f"parity-check matrix has GF(2) rank {len(pivots)} < {h.m} rows")
    parity_pos = np.asarray(pivots)
    info_pos = np.setdiff1d(np.arange(h.n), parity_pos)
    return CodeSpec(h, info_pos, parity_pos, R[:, info_pos].astype(np.uint8))


@dataclass(frozen=True, eq=False)
class IterationOutputs:
    probs: np.ndarray  # (n_iters, ..., K): P(b=1) after each iteration
    final_llr: np.ndarray  # (..., n) posterior LLRs after the last iteration

    @property
    def n_iters(self) -> int:
        return self.probs.shape[0]

    def hard(self, it: int = -1) -> np.ndarray:
        return (self.probs[it] > 0.5).astype(np.int8)


class MinSumDecoder:
    """Flooding max-product (min-sum) BP with a fixed iteration count."""

    def __init__(self, code: CodeSpec | ParityCheck):
        self.code = code if isinstance(code, CodeSpec) else None
        h = code.h if isinstance(code, CodeSpec) else code
        self.h = h
        self.e_chk = np.concatenate([[i] * len(r) for i, r in enumerate(h.rows)]).astype(np.int64)
        self.e_var = np.concatenate([list(r) for r in h.rows]).astype(np.int64)
        self.starts = np.r_[0, np.cumsum([len(r) for r in h.rows])[:-1]]
        E = len(self.e_var)
        self.gather = sp.csr_matrix((np.ones(E), (np.arange(E), self.e_var)), shape=(E, h.n))
        self.out_pos = self.code.info_pos if self.code is not None else np.arange(h.n)

    def __call__(self, llr, n_iters: int = 20) -> IterationOutputs:
        llr = np.asarray(llr, dtype=float)
        if llr.shape[-1] != self.h.n:
            raise ValueError(f"expected {self.h.n} LLRs per codeword, got {llr.shape[-1]}")
        if n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        lead = llr.shape[:-1]
        ch = np.clip(llr.reshape(-1, self.h.n), -LLR_CLIP, LLR_CLIP)
        starts = self.starts
        v2c = ch[:, self.e_var]
        probs = []
        for _ in range(n_iters):
            mag = np.abs(v2c)
            neg = v2c < 0
            min1 = np.minimum.reduceat(mag, starts, axis=1)
            is_min = mag == min1[:, self.e_chk]
            n_min = np.add.reduceat(is_min, starts, axis=1)
            min2 = np.minimum.reduceat(np.where(is_min, np.inf, mag), starts, axis=1)
            min2 = np.where(n_min > 1, min1, min2)
            excl = np.where(is_min, min2[:, self.e_chk], min1[:, self.e_chk])
            parity = np.add.reduceat(neg, starts, axis=1) % 2
            sign = 1.0 - 2.0 * (parity[:, self.e_chk] ^ neg)
            c2v = sign * excl
            post = ch + np.asarray(self.gather.T @ c2v.T).T
            v2c = post[:, self.e_var] - c2v
            probs.append(expit(-np.clip(post[:, self.out_pos], -LLR_CLIP, LLR_CLIP)))
        post = np.clip(post, -LLR_CLIP, LLR_CLIP)
        return IterationOutputs(np.stack(probs).reshape(n_iters, *lead, len(self.out_pos)),
                                post.reshape(*lead, self.h.n))


def decode_bp(channel_llrs, h: CodeSpec | ParityCheck, n_iters: int = 20,
              variant: str = "max-product") -> IterationOutputs:
    if variant not in ("max-product", "min-sum"):
        raise ValueError(f"unsupported decoder variant {variant!r}")
    return MinSumDecoder(h)(channel_llrs, n_iters)
