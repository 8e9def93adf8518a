"""Finite-index subgroups as transitive permutation actions (coset tables).

Coset labels are 0-based in the Python API (basepoint 0) and 1-based in
JSON.  ``perms[i][c]`` is the coset c . x_i under the right action, so
c . (w1 w2) = (c . w1) . w2.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    DisconnectedCoverError,
    NotARepresentationError,
    ResourceLimitError,
    ValidationError,
)
from .surface_group import (
    SurfaceGroup,
    Word,
    evaluate_word,
    letter_name,
    relator_word,
)
from .mobius import MobiusTransform

DEFAULT_MAX_INDEX = 5
DEFAULT_CORE_LIMIT = 5000


@dataclass(frozen=True, eq=False)
class CosetTable:
    genus: int
    perms: tuple[tuple[int, ...], ...]  # one row per generator a1, b1, a2, ...

    @property
    def degree(self) -> int:
        return len(self.perms[0])

    index = degree

    @property
    def n_generators(self) -> int:
        return 2 * self.genus

    @cached_property
    def letter_perms(self) -> np.ndarray:
        """Array (2 * n_generators, n): row for each letter code."""
        rows = []
        for p in self.perms:
            p = np.asarray(p, dtype=np.int64)
            inv = np.empty_like(p)
            inv[p] = np.arange(p.size)
            rows.extend([p, inv])
        return np.array(rows)

    @cached_property
    def key(self) -> tuple:
        return (self.genus, self.perms)

    def __eq__(self, other) -> bool:
        return isinstance(other, CosetTable) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def act(self, w: Word, c):
        """Right action on a coset label or an array of labels."""
        lp = self.letter_perms
        out = np.asarray(c)
        for code in w.codes:
            out = lp[code][out]
        return int(out) if np.ndim(out) == 0 else out

    def word_permutation(self, w: Word) -> np.ndarray:
        return self.act(w, np.arange(self.degree))

    @cached_property
    def transversal(self) -> tuple[Word, ...]:
        """Shortest words u_c with 0 . u_c = c (breadth-first, letters in code order)."""
        words: list[Word | None] = [None] * self.degree
        words[0] = Word()
        q = deque([0])
        lp = self.letter_perms
        while q:
            c = q.popleft()
            for code in range(lp.shape[0]):
                d = int(lp[code][c])
                if words[d] is None:
                    words[d] = words[c] * Word((code,))
                    q.append(d)
        return tuple(words)  # type: ignore[arg-type]

    @cached_property
    def is_normal(self) -> bool:
        return all(_extends_to_automorphism(self.letter_perms, c) for c in range(self.degree))

    def schreier_generators(self) -> list[Word]:
        """Generators u_c x u_{c.x}^{-1} of the basepoint stabilizer."""
        u = self.transversal
        out, seen = [], set()
        for c in range(self.degree):
            for i in range(self.n_generators):
                code = 2 * i
                d = int(self.letter_perms[code][c])
                s = u[c] * Word((code,)) * u[d].inverse()
                if len(s) and s.codes not in seen:
                    seen.add(s.codes)
                    out.append(s)
        return out

    def contains(self, w: Word) -> bool:
        return stabilizer_membership(self, w)

    def to_json(self) -> dict:
        names = [letter_name(2 * i) for i in range(self.n_generators)]
        perms = {nm: [int(x) + 1 for x in p] for nm, p in zip(names, self.perms)}
        return {"genus": self.genus, "degree": self.degree, "normal": self.is_normal, "perms": perms}

    @classmethod
    def from_json(cls, rec: dict, genus: int | None = None) -> "CosetTable":
        try:
            perms = rec["perms"]
            n = int(rec["degree"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed coset table record: {exc}") from exc
        g = genus if genus is not None else int(rec.get("genus", len(perms) // 2))
        names = [letter_name(2 * i) for i in range(2 * g)]
        missing = [nm for nm in names if nm not in perms]
        if missing:
            raise ValidationError(f"coset table lacks permutations for {missing}")
        rows = [[int(x) - 1 for x in perms[nm]] for nm in names]
        if any(len(r) != n for r in rows):
            raise ValidationError("permutation length differs from degree")
        return from_monodromy(g, rows)


def _extends_to_automorphism(lp: np.ndarray, c: int) -> bool:
    n = lp.shape[1]
    phi = [-1] * n
    phi[0] = c
    q = deque([0])
    while q:
        d = q.popleft()
        for code in range(lp.shape[0]):
            e = int(lp[code][d])
            img = int(lp[code][phi[d]])
            if phi[e] < 0:
                phi[e] = img
                q.append(e)
            elif phi[e] != img:
                return False
    return True


def _check_perm(p, n, name):
    if sorted(p) != list(range(n)):
        raise ValidationError(f"{name} is not a permutation of {n} labels: {p}")


def from_monodromy(G: SurfaceGroup | int, perms) -> CosetTable:
    """Validate a monodromy assignment (0-based images, one per generator)."""
    genus = G if isinstance(G, int) else G.genus
    ngen = 2 * genus
    if isinstance(perms, dict):
        names = [letter_name(2 * i) for i in range(ngen)]
        perms = [perms[nm] for nm in names]
    perms = [tuple(int(x) for x in p) for p in perms]
    if len(perms) != ngen:
        raise ValidationError(f"expected {ngen} permutations, got {len(perms)}")
    n = len(perms[0])
    if n < 1:
        raise ValidationError("degree must be >= 1")
    for i, p in enumerate(perms):
        if len(p) != n:
            raise ValidationError("permutations of unequal length")
        _check_perm(p, n, letter_name(2 * i))
    T = CosetTable(genus, tuple(perms))
    rel = T.word_permutation(relator_word(genus))
    moved = np.nonzero(rel != np.arange(n))[0]
    if moved.size:
        raise NotARepresentationError(
            "relator does not act trivially", witness={"coset": int(moved[0]), "image": int(rel[moved[0]])}
        )
    orbit = _orbit(T.letter_perms, 0)
    if len(orbit) != n:
        missing = sorted(set(range(n)) - orbit)
        raise DisconnectedCoverError("action is not transitive", witness={"unreached": missing})
    return T


def _orbit(lp: np.ndarray, start: int) -> set[int]:
    seen = {start}
    q = deque([start])
    while q:
        c = q.popleft()
        for code in range(lp.shape[0]):
            d = int(lp[code][c])
            if d not in seen:
                seen.add(d)
                q.append(d)
    return seen


def trivial_table(genus: int) -> CosetTable:
    return CosetTable(genus, tuple((0,) for _ in range(2 * genus)))


def coset_action(T: CosetTable, w: Word, c: int) -> int:
    return T.act(w, c)


def stabilizer_membership(T: CosetTable, w: Word) -> bool:
    return T.act(w, 0) == 0


def standardize(genus: int, lp: np.ndarray, base: int = 0) -> CosetTable:
    """Relabel cosets in order of first appearance from ``base``."""
    n = lp.shape[1]
    new = [-1] * n
    new[base] = 0
    order = [base]
    i = 0
    while i < len(order):
        c = order[i]
        for code in range(lp.shape[0]):
            d = int(lp[code][c])
            if new[d] < 0:
                new[d] = len(order)
                order.append(d)
        i += 1
    if len(order) != n:
        raise DisconnectedCoverError("action is not transitive")
    perms = []
    for gi in range(2 * genus):
        row = lp[2 * gi]
        perms.append(tuple(new[int(row[order[k]])] for k in range(n)))
    return CosetTable(genus, tuple(perms))


def _flat(T: CosetTable) -> tuple:
    # compare column-interleaved, matching the enumeration's fill order
    return tuple(int(T.letter_perms[code][c]) for c in range(T.degree) for code in range(T.letter_perms.shape[0]))


def conjugacy_representative(T: CosetTable) -> CosetTable:
    """Lexicographically minimal standard table over all basepoints."""
    best = standardize(T.genus, T.letter_perms, 0)
    best_key = _flat(best)
    for b in range(1, T.degree):
        S = standardize(T.genus, T.letter_perms, b)
        k = _flat(S)
        if k < best_key:
            best, best_key = S, k
    return best


# ---------------------------------------------------------------- low index

def _relator_cycles(genus: int) -> list[tuple[int, ...]]:
    r = relator_word(genus).codes
    rinv = Word(r).inverse().codes
    out = []
    for w in (r, rinv):
        for s in range(len(w)):
            out.append(w[s:] + w[:s])
    return sorted(set(out))


def _deduce(table: list[list[int]], n: int, cycles) -> bool:
    """Scan every relator rotation from every coset; fill single gaps.

    Returns False on a coincidence (inconsistent table).
    """
    changed = True
    while changed:
        changed = False
        for c in range(n):
            for r in cycles:
                L = len(r)
                f, i = c, 0
                while i < L and table[f][r[i]] >= 0:
                    f = table[f][r[i]]
                    i += 1
                if i == L:
                    if f != c:
                        return False
                    continue
                b, j = c, L - 1
                while j > i and table[b][r[j] ^ 1] >= 0:
                    b = table[b][r[j] ^ 1]
                    j -= 1
                if j == i:
                    x = r[i]
                    if table[b][x ^ 1] >= 0 and table[b][x ^ 1] != f:
                        return False
                    table[f][x] = b
                    table[b][x ^ 1] = f
                    changed = True
    return True


def _enumerate_tables(genus: int, max_index: int):
    ncols = 4 * genus
    cycles = _relator_cycles(genus)

    def first_gap(table, n):
        for c in range(n):
            row = table[c]
            for x in range(ncols):
                if row[x] < 0:
                    return c, x
        return None

    def rec(table, n):
        gap = first_gap(table, n)
        if gap is None:
            yield [row[:] for row in table[:n]]
            return
        c, x = gap
        options = [d for d in range(n) if table[d][x ^ 1] < 0]
        if n < max_index:
            options.append(n)
        for d in options:
            t2 = [row[:] for row in table]
            n2 = n + 1 if d == n else n
            t2[c][x] = d
            t2[d][x ^ 1] = c
            if _deduce(t2, n2, cycles):
                yield from rec(t2, n2)

    start = [[-1] * ncols for _ in range(max_index)]
    yield from rec(start, 1)


def _table_from_rows(genus: int, rows) -> CosetTable:
    perms = tuple(tuple(rows[c][2 * i] for c in range(len(rows))) for i in range(2 * genus))
    return CosetTable(genus, perms)


@lru_cache(maxsize=16)
def low_index_subgroups(G: SurfaceGroup | int, max_index: int, conjugacy_classes: bool = True,
                        limit: int = DEFAULT_MAX_INDEX) -> tuple[CosetTable, ...]:
    """Subgroups of index <= max_index by coset-table backtracking.

    Every subgroup appears exactly once in standard form; with
    ``conjugacy_classes`` only the basepoint-minimal table of each class is
    kept.  Output is sorted by (index, table).
    """
    genus = G if isinstance(G, int) else G.genus
    if max_index < 1:
        raise ValidationError("max_index must be >= 1")
    if max_index > limit:
        raise ResourceLimitError(f"max_index {max_index} exceeds limit {limit}")
    out = []
    for rows in _enumerate_tables(genus, max_index):
        T = _table_from_rows(genus, rows)
        if conjugacy_classes and _flat(conjugacy_representative(T)) != _flat(T):
            continue
        out.append(T)
    out.sort(key=lambda T: (T.degree, _flat(T)))
    return tuple(out)


# ---------------------------------------------------------------- cores, intersections

def normal_core(T: CosetTable, limit: int = DEFAULT_CORE_LIMIT) -> CosetTable:
    """Regular action of the permutation image; its stabilizer is the core."""
    gens = [tuple(int(x) for x in T.letter_perms[code]) for code in range(T.letter_perms.shape[0])]
    ident = tuple(range(T.degree))
    index = {ident: 0}
    elems = [ident]
    i = 0
    while i < len(elems):
        p = elems[i]
        for g in gens:
            q = tuple(g[p[c]] for c in range(T.degree))
            if q not in index:
                if len(elems) >= limit:
                    raise ResourceLimitError(f"image group exceeds {limit} elements")
                index[q] = len(elems)
                elems.append(q)
        i += 1
    m = len(elems)
    lp = np.empty((len(gens), m), dtype=np.int64)
    for k, p in enumerate(elems):
        for code, g in enumerate(gens):
            lp[code, k] = index[tuple(g[p[c]] for c in range(T.degree))]
    return standardize(T.genus, lp)


def intersect(T1: CosetTable, T2: CosetTable, limit: int = 10**6) -> CosetTable:
    """Stabilizer of (0, 0) in the product action, on its orbit."""
    if T1.genus != T2.genus:
        raise ValidationError("tables of different genus")
    L1, L2 = T1.letter_perms, T2.letter_perms
    index = {(0, 0): 0}
    pts = [(0, 0)]
    i = 0
    while i < len(pts):
        c1, c2 = pts[i]
        for code in range(L1.shape[0]):
            q = (int(L1[code][c1]), int(L2[code][c2]))
            if q not in index:
                if len(pts) >= limit:
                    raise ResourceLimitError("intersection orbit too large")
                index[q] = len(pts)
                pts.append(q)
        i += 1
    lp = np.array([[index[(int(L1[code][c1]), int(L2[code][c2]))] for (c1, c2) in pts]
                   for code in range(L1.shape[0])], dtype=np.int64)
    return standardize(T1.genus, lp)


def is_subgroup(small: CosetTable, big: CosetTable) -> bool:
    """True when the basepoint stabilizer of ``small`` lies in that of ``big``."""
    return all(stabilizer_membership(big, s) for s in small.schreier_generators())


def quotient_map(fine: CosetTable, coarse: CosetTable) -> np.ndarray:
    """Coset of ``coarse`` containing each coset of ``fine`` (requires fine <= coarse)."""
    return np.array([coarse.act(u, 0) for u in fine.transversal], dtype=np.int64)


# ---------------------------------------------------------------- genus, mass

def covering_genus(base_genus: int, index: int) -> int:
    return index * (base_genus - 1) + 1


def haar_mass(T: CosetTable) -> Fraction:
    return Fraction(1, T.degree)


def cover_euler_characteristic(G: SurfaceGroup, T: CosetTable) -> int:
    """V - E + F of the lifted polygon complex, counted combinatorially.

    Faces are sheets, edges are (sheet, side) pairs glued by the side
    pairings, vertices are classes of (sheet, corner) under the gluing.
    """
    poly = G.fundamental_domain
    ns = poly.n_sides
    n = T.degree
    verts = poly.vertices
    parent = list(range(n * ns))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    edge_classes = set()
    for s, (w, t) in poly.side_pairing.items():
        code = w.codes[0]
        m = G.letter_transforms[code]
        for k in (s, (s + 1) % ns):
            img = m(complex(verts[k]))
            k2 = int(np.argmin(np.abs(verts - img)))
            # (c . x, v_k) is glued to (c, x(v_k))
            for c in range(n):
                union(int(T.letter_perms[code][c]) * ns + k, c * ns + k2)
        for c in range(n):
            edge_classes.add(frozenset({(c, s), (int(T.letter_perms[code][c]), t)}))
    V = len({find(x) for x in range(n * ns)})
    E = len(edge_classes)
    return V - E + n


def cover_genus_from_table(G: SurfaceGroup, T: CosetTable) -> int:
    chi = cover_euler_characteristic(G, T)
    return 1 - chi // 2


# ---------------------------------------------------------------- valuation tower

@dataclass(frozen=True)
class Valuation:
    """val(g); ``truncated`` marks the lower bound reported at the tower depth."""

    value: float
    truncated: bool = False

    def __str__(self) -> str:
        if math.isinf(self.value):
            return "inf"
        return f">={int(self.value)}" if self.truncated else str(int(self.value))

    def to_json(self):
        return str(self)


class ValuationTower:
    """Membership in A_n = intersection of all subgroups of index <= n.

    A word lies in A_n iff it acts trivially on every coset of every
    conjugacy-class representative of index <= n.  All representatives are
    stacked into one permutation action so a word is applied once.
    """

    def __init__(self, G: SurfaceGroup, depth: int, reps: tuple[CosetTable, ...] | None = None):
        if depth < 1:
            raise ValidationError("tower depth must be >= 1")
        self.G = G
        self.depth = depth
        self.reps = reps if reps is not None else low_index_subgroups(G, depth)
        offs, blocks = 0, []
        for T in self.reps:
            blocks.append((T.degree, offs, offs + T.degree))
            offs += T.degree
        self.size = offs
        lp = np.empty((4 * G.genus, offs), dtype=np.int64)
        for T, (_, lo, hi) in zip(self.reps, blocks):
            lp[:, lo:hi] = T.letter_perms + lo
        self._lp = lp
        self._level_of_point = np.concatenate([np.full(T.degree, T.degree) for T in self.reps])

    def levels(self, max_degree: int = 4096) -> list[CosetTable | None]:
        """A_1..A_depth as tables when their index stays below ``max_degree``."""
        out: list[CosetTable | None] = []
        for n in range(1, self.depth + 1):
            try:
                out.append(tower_level(self.G, n, max_degree))
            except ResourceLimitError:
                out.append(None)
        return out

    def _image(self, w: Word) -> np.ndarray:
        p = np.arange(self.size)
        for code in w.codes:
            p = self._lp[code][p]
        return p

    def member(self, w: Word, n: int) -> bool:
        p = self._image(w)
        mask = self._level_of_point <= n
        return bool(np.all(p[mask] == np.arange(self.size)[mask]))

    def _is_identity(self, w: Word) -> bool:
        if not len(w):
            return True
        m = evaluate_word(self.G, w)
        return m.equals(MobiusTransform.identity(), 1e-8)

    def valuation(self, w: Word) -> Valuation:
        p = self._image(w)
        moved = p != np.arange(self.size)
        if not moved.any():
            if self._is_identity(w):
                return Valuation(math.inf)
            return Valuation(self.depth, truncated=True)
        # smallest index among representatives the word fails to stabilize
        first_fail = int(self._level_of_point[moved].min())
        return Valuation(first_fail - 1)


def valuation(tower: ValuationTower, w: Word) -> Valuation:
    return tower.valuation(w)


def profinite_distance(tower: ValuationTower, w1: Word, w2: Word) -> float:
    v = tower.valuation(w1.inverse() * w2)
    return 0.0 if math.isinf(v.value) else math.exp(-v.value)


@lru_cache(maxsize=16)
def tower_level(G: SurfaceGroup, n: int, max_degree: int = 4096) -> CosetTable:
    """A_n as a normal coset table (feasible only for small n)."""
    T = trivial_table(G.genus)
    for H in low_index_subgroups(G, n):
        if H.degree == 1:
            continue
        C = normal_core(H, limit=max_degree)
        T = intersect(T, C, limit=max_degree)
    return T


def refinement_chain(G: SurfaceGroup, tables, max_degree: int = 4096) -> list[CosetTable]:
    """Successive intersections of normal cores, starting from the full group."""
    chain = [trivial_table(G.genus)]
    for H in tables:
        nxt = intersect(chain[-1], normal_core(H, limit=max_degree), limit=max_degree)
        if nxt.degree > max_degree:
            raise ResourceLimitError("refinement chain exceeds degree cap")
        chain.append(nxt)
    return chain
