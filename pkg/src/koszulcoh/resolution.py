"""Graded Betti numbers of the section module from a minimal free resolution.

This is the independent oracle for the Koszul engine. It never forms a wedge
power: it resolves ``M = sum_m H^0(B + mL)`` over ``S = Sym H^0(L)`` one
homological step and one internal degree at a time, carrying each syzygy
module as explicit kernel bases of graded pieces of a free module.

At step ``p`` with current kernel ``K = ker(F_{p-1} -> F_{p-2})`` the number
of minimal generators in degree ``j`` is ``dim K_j - dim (S_1 K_{j-1})``; the
chosen complement vectors become the generators of ``F_p``.

Elements of a free module are keyed by ``(generator << code_bits) | code``
where ``code`` packs the exponent vector of a monomial of ``S`` so that
multiplying monomials is adding codes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from koszulcoh import exactlin
from koszulcoh.errors import ConfigurationError, IntegrityError, TruncationError
from koszulcoh.exactlin import FieldSpec
from koszulcoh.sections import MonomialSystem

MAX_KEY_BITS = 62


@dataclass(frozen=True)
class GradedModuleSlices:
    """``dim M_m`` and the multiplication maps ``S_1 (x) M_m -> M_{m+1}``."""

    dims: tuple[int, ...]
    # mult[m] has rows M_{m+1}, columns (variable i, basis element x) at i * dim M_m + x
    mult: tuple[exactlin.SparseMatrix, ...]

    def __post_init__(self) -> None:
        for m, mat in enumerate(self.mult):
            if mat.n_rows != self.dims[m + 1]:
                raise IntegrityError(f"mult({m}) has {mat.n_rows} rows, expected {self.dims[m + 1]}")


def _module_basis(sys: MonomialSystem, m: int) -> list[tuple[int, tuple[int, ...]]]:
    return [(s, x) for s in range(sys.n_summands) for x in sys.basis(s, m)]


def module_slices(sys: MonomialSystem, m_max: int) -> GradedModuleSlices:
    if m_max < 0:
        raise ConfigurationError("m_max must be nonnegative")
    bases = [_module_basis(sys, m) for m in range(m_max + 1)]
    mats = []
    h = sys.h0_L
    for m in range(m_max):
        index = {b: k for k, b in enumerate(bases[m + 1])}
        entries = []
        n = len(bases[m])
        for i, v in enumerate(sys.L_points):
            for x, (s, pt) in enumerate(bases[m]):
                tgt = (s, tuple(a + b for a, b in zip(pt, v)))
                if tgt not in index:
                    raise IntegrityError(f"closure violated: {pt} + {v} outside M_{m + 1}")
                entries.append((index[tgt], i * n + x, 1))
        mats.append(exactlin.SparseMatrix.from_entries(len(bases[m + 1]), h * n, entries))
    return GradedModuleSlices(tuple(len(b) for b in bases), tuple(mats))


@dataclass
class ResolutionLedger:
    betti: dict[tuple[int, int], int]
    p_max: int
    degree_bound: int
    start_degree: int
    truncated: bool
    field: str
    # highest internal degree resolved at step p is p + slack
    slack: int = field(init=False)

    def __post_init__(self) -> None:
        self.slack = self.degree_bound - self.p_max

    def in_window(self, p: int, j: int) -> bool:
        return 0 <= p <= self.p_max and j <= p + self.slack

    def beta(self, p: int, j: int) -> int:
        if not self.in_window(p, j):
            raise TruncationError(
                f"beta_{{{p},{j}}} lies outside the resolved window; raise degree_bound "
                f"(currently {self.degree_bound}) or p_max (currently {self.p_max})"
            )
        return self.betti.get((p, j), 0)

    def nonzero(self) -> dict[tuple[int, int], int]:
        return {k: v for k, v in sorted(self.betti.items()) if v}


def tor_dim(ledger: ResolutionLedger, p: int, q: int) -> int:
    """``dim K_{p,q}`` read off as ``beta_{p, p+q}``."""
    if q < 0:
        return 0
    return ledger.beta(p, p + q)


# ---------------------------------------------------------------------------
# monomials of S


class _Monomials:
    """Monomials of ``S`` by degree, as packed exponent codes (sorted)."""

    def __init__(self, h: int, bits: int):
        self.h = h
        self.bits = bits
        self.var_codes = np.array([1 << (bits * i) for i in range(h)], dtype=np.int64)
        self._by_degree: dict[int, np.ndarray] = {0: np.zeros(1, dtype=np.int64)}

    def of_degree(self, k: int) -> np.ndarray:
        if k < 0:
            return np.zeros(0, dtype=np.int64)
        if k not in self._by_degree:
            prev = self.of_degree(k - 1)
            codes = np.unique((prev[:, None] + self.var_codes[None, :]).ravel())
            codes.setflags(write=False)
            self._by_degree[k] = codes
        return self._by_degree[k]

    def exponents(self, codes: np.ndarray) -> np.ndarray:
        mask = (1 << self.bits) - 1
        return np.stack([(codes >> (self.bits * i)) & mask for i in range(self.h)], axis=1)


class _FreeModule:
    """Graded free module: generator degrees and images in the previous module."""

    def __init__(self, mons: _Monomials, code_bits: int):
        self.mons = mons
        self.code_bits = code_bits
        self.degrees: list[int] = []
        # image of each generator: (keys into previous module, coefficients)
        self.images: list[tuple[np.ndarray, np.ndarray]] = []
        self._basis: dict[int, np.ndarray] = {}

    def add(self, degree: int, keys: np.ndarray, coeffs: np.ndarray) -> None:
        if len(self.degrees) >= 1 << (MAX_KEY_BITS - self.code_bits):
            raise ConfigurationError("too many generators for the key encoding")
        self.degrees.append(degree)
        self.images.append((keys, coeffs))
        self._basis.clear()

    def __len__(self) -> int:
        return len(self.degrees)

    def basis(self, j: int) -> np.ndarray:
        """Sorted keys spanning the degree-``j`` piece."""
        if j not in self._basis:
            parts = [
                (g << self.code_bits) + self.mons.of_degree(j - d)
                for g, d in enumerate(self.degrees)
                if d <= j
            ]
            self._basis[j] = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        return self._basis[j]


def _lookup(sorted_keys: np.ndarray, keys: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(sorted_keys, keys)
    if len(keys) and (idx.max(initial=0) >= len(sorted_keys) or np.any(sorted_keys[np.minimum(idx, len(sorted_keys) - 1)] != keys)):
        raise IntegrityError("product landed outside the expected graded piece")
    return idx


# ---------------------------------------------------------------------------
# the resolution


class _Resolver:
    def __init__(
        self,
        sys: MonomialSystem,
        p_max: int,
        degree_bound: int,
        prime: int,
        variable_order: Sequence[int] | None,
    ):
        self.sys = sys
        self.p_max = p_max
        self.D = degree_bound
        self.slack = degree_bound - p_max
        self.prime = prime
        h = sys.h0_L
        order = list(range(h)) if variable_order is None else list(variable_order)
        if sorted(order) != list(range(h)):
            raise ConfigurationError("variable_order must be a permutation of range(h0(L))")
        self.L = [sys.L_points[i] for i in order]
        # every monomial met has degree <= slack + 2
        bits = max(1, (self.slack + 2).bit_length())
        self.code_bits = bits * h
        if self.code_bits + 8 > MAX_KEY_BITS:
            raise ConfigurationError(
                f"h0(L)={h} with degree window {self.slack} is too large for the resolution oracle"
            )
        self.mons = _Monomials(h, bits)
        self.betti: dict[tuple[int, int], int] = {}
        self.start = next(
            (m for m in range(degree_bound + 1) if sys.h0_total(m) > 0), None
        )

    # -- step 0: generators of M -------------------------------------------------

    def _point_of(self, codes: np.ndarray) -> np.ndarray:
        exps = self.mons.exponents(codes)
        return exps @ np.array(self.L, dtype=np.int64).reshape(len(self.L), -1)

    def step0(self) -> _FreeModule:
        F0 = _FreeModule(self.mons, self.code_bits)
        self.M_index: dict[int, dict[tuple[int, tuple[int, ...]], int]] = {}
        if self.start is None:
            return F0
        for j in range(self.start, self.slack + 1):
            basis = _module_basis(self.sys, j)
            self.M_index[j] = {b: k for k, b in enumerate(basis)}
            hit = set()
            if j - 1 >= self.start:
                for s, pt in _module_basis(self.sys, j - 1):
                    for v in self.L:
                        tgt = (s, tuple(a + b for a, b in zip(pt, v)))
                        if tgt not in self.M_index[j]:
                            raise IntegrityError(f"closure violated at {tgt}")
                        hit.add(self.M_index[j][tgt])
            new = [k for k in range(len(basis)) if k not in hit]
            self.betti[(0, j)] = len(new)
            for k in new:
                F0.add(j, np.array([k], dtype=np.int64), np.array([1], dtype=np.int64))
        self.M_basis = {j: _module_basis(self.sys, j) for j in self.M_index}
        return F0

    # -- differential at one degree ---------------------------------------------

    def _matrix_into_M(self, F0: _FreeModule, j: int, cols_keys: np.ndarray):
        """Entries of ``F_0 -> M`` in degree ``j``."""
        if j not in self.M_index:
            self.M_index[j] = {b: k for k, b in enumerate(_module_basis(self.sys, j))}
            self.M_basis[j] = _module_basis(self.sys, j)
        index = self.M_index[j]
        rows, cols, vals = [], [], []
        mask = (1 << self.code_bits) - 1
        gens = cols_keys >> self.code_bits
        codes = cols_keys & mask
        pts = self._point_of(codes)
        for c in range(len(cols_keys)):
            g = int(gens[c])
            keys, coeffs = F0.images[g]
            d = F0.degrees[g]
            shift = pts[c]
            for k, a in zip(keys.tolist(), coeffs.tolist()):
                s, x = self.M_basis[d][k]
                tgt = (s, tuple(int(u + w) for u, w in zip(x, shift)))
                r = index.get(tgt)
                if r is None:
                    raise IntegrityError(f"closure violated at {tgt}")
                rows.append(r)
                cols.append(c)
                vals.append(a)
        return (
            len(index),
            np.array(rows, dtype=np.int64),
            np.array(cols, dtype=np.int64),
            np.array(vals, dtype=np.int64),
        )

    def _matrix_free(self, F: _FreeModule, target: _FreeModule, j: int, cols_keys: np.ndarray):
        """Entries of ``F -> target`` (both free) in degree ``j``."""
        tkeys = target.basis(j)
        mask = (1 << self.code_bits) - 1
        gens = cols_keys >> self.code_bits
        codes = cols_keys & mask
        # group columns by generator: images are shared per generator
        order = np.argsort(gens, kind="stable")
        g_sorted = gens[order]
        cuts = np.flatnonzero(np.diff(g_sorted)) + 1
        rows, cols, vals = [], [], []
        for idx in np.split(order, cuts):
            if not len(idx):
                continue
            g = int(gens[idx[0]])
            keys, coeffs = F.images[g]
            prod = keys[:, None] + codes[idx][None, :]
            rows.append(_lookup(tkeys, prod.ravel()))
            cols.append(np.broadcast_to(idx[None, :], prod.shape).ravel())
            vals.append(np.broadcast_to(coeffs[:, None], prod.shape).ravel())
        if not rows:
            z = np.zeros(0, dtype=np.int64)
            return len(tkeys), z, z, z
        return len(tkeys), np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)

    # -- step p >= 1 ------------------------------------------------------------

    def step(self, p: int, F: _FreeModule, prev: _FreeModule | None) -> _FreeModule:
        """Resolve ``ker(F = F_{p-1} -> prev)``; returns ``F_p``."""
        P = self.prime
        Fp = _FreeModule(self.mons, self.code_bits)
        if not len(F):
            return Fp
        j_lo = min(F.degrees)
        top = p + self.slack
        K_prev: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None  # (vec ids, keys, coeffs)
        for j in range(j_lo, top + 1):
            cols_keys = F.basis(j)
            nF = len(cols_keys)
            if prev is None:
                nR, r, c, v = self._matrix_into_M(F, j, cols_keys)
            else:
                nR, r, c, v = self._matrix_free(F, prev, j, cols_keys)
            v = np.mod(v, P)
            keep = v != 0
            r, c, v = r[keep], c[keep], v[keep]
            # S_1 * K_{j-1}
            if K_prev is not None and len(K_prev[0]):
                kid, kkeys, kco = K_prev
                n_vec = int(kid.max()) + 1
                vc = self.mons.var_codes
                s_keys = (kkeys[None, :] + vc[:, None]).ravel()
                s_vec = (np.arange(len(vc))[:, None] * n_vec + kid[None, :]).ravel()
                s_co = np.broadcast_to(kco[None, :], (len(vc), len(kco))).ravel()
                s_col = _lookup(cols_keys, s_keys)
                n_svec = len(vc) * n_vec
            else:
                s_col = s_vec = s_co = np.zeros(0, dtype=np.int64)
                n_svec = 0
            labels = _merged_components(nF, nR, r, c, n_svec, s_vec, s_col)
            new_K_ids, new_K_keys, new_K_co = [], [], []
            born = 0
            vec_counter = 0
            for cols_idx, d_sel, s_sel in _group(labels, c, s_col):
                rows_here = r[d_sel]
                if len(rows_here):
                    rid, rloc = np.unique(rows_here, return_inverse=True)
                    cloc = np.searchsorted(cols_idx, c[d_sel])
                    D = np.zeros((len(rid), len(cols_idx)), dtype=np.int64)
                    D[rloc, cloc] = v[d_sel]
                    kb, free = exactlin.kernel_basis_mod_p(D, P, with_free=True, reduced_input=True)
                else:
                    kb, free = np.eye(len(cols_idx), dtype=np.int64), np.arange(len(cols_idx))
                if not len(kb):
                    continue
                if len(s_sel):
                    vid, vloc = np.unique(s_vec[s_sel], return_inverse=True)
                    V = np.zeros((len(vid), len(cols_idx)), dtype=np.int64)
                    np.add.at(V, (vloc, np.searchsorted(cols_idx, s_col[s_sel])), s_co[s_sel])
                    coords = np.mod(V[:, free], P)
                    piv = exactlin.independent_rows_mod_p(coords.T, P)
                    spanned = np.zeros(len(free), dtype=bool)
                    spanned[piv] = True
                else:
                    spanned = np.zeros(len(free), dtype=bool)
                for t in np.flatnonzero(~spanned):
                    nz = np.flatnonzero(kb[t])
                    Fp.add(j, cols_keys[cols_idx[nz]], kb[t, nz])
                    born += 1
                if j < top:
                    nzr, nzc = np.nonzero(kb)
                    new_K_ids.append(nzr + vec_counter)
                    new_K_keys.append(cols_keys[cols_idx[nzc]])
                    new_K_co.append(kb[nzr, nzc])
                    vec_counter += len(kb)
            if born:
                self.betti[(p, j)] = born
            if new_K_ids:
                K_prev = (np.concatenate(new_K_ids), np.concatenate(new_K_keys), np.concatenate(new_K_co))
            else:
                K_prev = None
        return Fp

    def run(self) -> ResolutionLedger:
        F = self.step0()
        prev: _FreeModule | None = None
        for p in range(1, self.p_max + 1):
            F, prev = self.step(p, F, prev), F
        truncated = any(
            self.betti.get((p, p + self.slack), 0) for p in range(self.p_max + 1)
        )
        return ResolutionLedger(
            betti={k: v for k, v in sorted(self.betti.items()) if v},
            p_max=self.p_max,
            degree_bound=self.D,
            start_degree=self.start if self.start is not None else 0,
            truncated=truncated,
            field=f"GF({self.prime})",
        )


def _merged_components(nF, nR, r, c, n_svec, s_vec, s_col) -> np.ndarray:
    """Component label of each column, joining columns through d-rows and S_1 K vectors."""
    n = nF + nR + n_svec
    src = np.concatenate([c, s_col])
    dst = np.concatenate([nF + r, nF + nR + s_vec])
    g = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    return labels[:nF]


def _group(labels: np.ndarray, c: np.ndarray, s_col: np.ndarray):
    """Yield (column ids, d-entry selector, S_1 K entry selector) per component."""
    col_order = np.argsort(labels, kind="stable")
    lab_sorted = labels[col_order]
    cuts = np.flatnonzero(np.diff(lab_sorted)) + 1
    col_groups = np.split(col_order, cuts)
    group_of_label = {int(labels[g[0]]): k for k, g in enumerate(col_groups)}
    d_lab = labels[c]
    s_lab = labels[s_col]
    d_order = np.argsort(d_lab, kind="stable")
    s_order = np.argsort(s_lab, kind="stable")
    d_bounds = _bounds(d_lab[d_order], len(col_groups), group_of_label)
    s_bounds = _bounds(s_lab[s_order], len(col_groups), group_of_label)
    for k, cols_idx in enumerate(col_groups):
        d_sel = d_order[d_bounds[k][0] : d_bounds[k][1]]
        s_sel = s_order[s_bounds[k][0] : s_bounds[k][1]]
        yield cols_idx, d_sel, s_sel


def _bounds(sorted_labels: np.ndarray, n_groups: int, group_of_label: dict[int, int]):
    out = [(0, 0)] * n_groups
    if not len(sorted_labels):
        return out
    cuts = np.flatnonzero(np.diff(sorted_labels)) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [len(sorted_labels)]])
    for a, b in zip(starts.tolist(), ends.tolist()):
        out[group_of_label[int(sorted_labels[a])]] = (a, b)
    return out


def minimal_resolution(
    sys: MonomialSystem,
    p_max: int,
    degree_bound: int | None = None,
    field: FieldSpec | None = None,
    variable_order: Sequence[int] | None = None,
) -> ResolutionLedger:
    """Graded Betti numbers ``beta_{p,j}`` for ``p <= p_max``.

    Step ``p`` is resolved through internal degree ``p + degree_bound - p_max``;
    the ledger is flagged ``truncated`` if the last row of that window is not
    identically zero. ``degree_bound`` must be at least ``p_max + dim X + 2``.
    """
    field = field or FieldSpec.prime()
    if not field.is_prime_field:
        raise ConfigurationError("the resolution oracle works over prime fields")
    need = p_max + sys.variety_dim + 2
    if degree_bound is None:
        degree_bound = need
    if degree_bound < need:
        raise TruncationError(
            f"degree_bound={degree_bound} < p_max + dim X + 2 = {need}; "
            "Koszul rows up to q = dim X + 1 would be cut off"
        )
    if p_max < 0:
        raise ConfigurationError("p_max must be nonnegative")
    return _Resolver(sys, p_max, degree_bound, field.modulus, variable_order).run()


def hilbert_check(sys: MonomialSystem, ledger: ResolutionLedger) -> dict[int, tuple[int, int]]:
    """``sum_{p,j} (-1)^p beta_{p,j} dim S_{m-j}`` against ``dim M_m``.

    Checked for ``m`` up to ``start + p_max`` (all generators that can reach
    degree ``m`` are then covered); Betti numbers outside the window are
    taken as zero, which is valid when the ledger is not truncated.
    """
    h = sys.h0_L
    out = {}
    for m in range(ledger.start_degree, ledger.start_degree + ledger.p_max + 1):
        alt = sum(
            (-1) ** p * b * comb(h - 1 + m - j, h - 1)
            for (p, j), b in ledger.betti.items()
            if j <= m
        )
        out[m] = (alt, sys.h0_total(m))
    return out
