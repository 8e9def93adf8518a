"""Finite sets of tiles g(F) used to truncate integrals over the disk.

Two families are provided:

* word balls: elements with a freely reduced word of length <= r;
* displacement balls: elements g with d(0, g(0)) <= R.  These grow like
  (cosh R - 1)/2 and are the practical truncation of integrals over the disk.

Both are stored as a breadth-first tree (parent index + last letter) so that
the coset action of every element on a coset table is cheap to propagate.
The tree may hold helper nodes that are not members of the set.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import cKDTree

from .errors import ResourceLimitError
from .mobius import compose_arrays
from .surface_group import SurfaceGroup, Word, evaluate_word

DEFAULT_MAX_TILES = 200_000
DEDUP_TOL = 1e-9


def max_tiles() -> int:
    env = os.environ.get("LAMIWP_MAX_TILES")
    return int(env) if env else DEFAULT_MAX_TILES


@dataclass(frozen=True, eq=False)
class TileSet:
    """The elements prefix * t for the tree nodes t listed in ``members``."""

    tree_a: np.ndarray
    tree_b: np.ndarray
    parent: np.ndarray
    letter: np.ndarray
    depth: np.ndarray
    members: np.ndarray
    prefix: Word = field(default_factory=Word)
    label: str = ""

    def __len__(self) -> int:
        return self.members.size

    @property
    def a(self) -> np.ndarray:
        return self.tree_a[self.members]

    @property
    def b(self) -> np.ndarray:
        return self.tree_b[self.members]

    def centers(self) -> np.ndarray:
        return self.b / np.conj(self.a)

    def displacements(self) -> np.ndarray:
        return 2.0 * np.arccosh(np.clip(np.abs(self.a), 1.0, None))

    def words(self) -> list[Word]:
        codes: list[tuple[int, ...]] = []
        for i in range(self.tree_a.size):
            p = self.parent[i]
            codes.append(() if p < 0 else codes[p] + (int(self.letter[i]),))
        return [self.prefix * Word(codes[i]) for i in self.members]

    def coset_perms(self, letter_perms: np.ndarray) -> np.ndarray:
        """Row t is the map c -> c . g_t for the right action.

        ``letter_perms[x]`` maps c to c . x for every letter code x.
        """
        n = letter_perms.shape[1]
        P = np.empty((self.tree_a.size, n), dtype=np.int64)
        P[0] = np.arange(n)
        for d in range(1, int(self.depth.max(initial=0)) + 1):
            idx = np.nonzero(self.depth == d)[0]
            P[idx] = letter_perms[self.letter[idx][:, None], P[self.parent[idx]]]
        P = P[self.members]
        if len(self.prefix):
            p = np.arange(n)
            for c in self.prefix.codes:
                p = letter_perms[c][p]
            P = P[:, p]
        return P

    def translated(self, G: SurfaceGroup, w: Word) -> "TileSet":
        """The set {w * t}."""
        m = evaluate_word(G, w)
        a, b = compose_arrays(m.a, m.b, self.tree_a, self.tree_b)
        return TileSet(a, b, self.parent, self.letter, self.depth, self.members,
                       w * self.prefix, f"{w}*({self.label})")


def _fresh(seen: np.ndarray, cand: np.ndarray, tol: float, signed: bool = False) -> np.ndarray:
    """Mask of candidates farther than tol from every seen point and from earlier candidates.

    With ``signed`` the negated candidate is tested as well (projective keys).
    """
    tree = cKDTree(seen)
    dd, _ = tree.query(cand, distance_upper_bound=2 * tol)
    keep = dd > tol
    if signed:
        dd2, _ = tree.query(-cand, distance_upper_bound=2 * tol)
        keep &= dd2 > tol
    idx = np.nonzero(keep)[0]
    if idx.size > 1:
        pairs = cKDTree(cand[idx]).query_pairs(tol, output_type="ndarray")
        if len(pairs):
            keep[idx[pairs.max(axis=1)]] = False
    return keep


def _bfs(G: SurfaceGroup, accept_layer, key, limit: int, label: str, signed: bool = False) -> TileSet:
    """Shared breadth-first expansion.

    ``accept_layer(na, nb, parent_letter, letter)`` returns a mask of
    candidates to expand; ``key(na, nb)`` returns dedup coordinates.
    """
    la, lb = G.letter_arrays
    nl = la.size
    A, B = [np.array([1.0 + 0j])], [np.array([0j])]
    par, let, dep = [np.array([-1])], [np.array([-1])], [np.array([0])]
    keys = [key(A[0], B[0])]
    front = np.array([0])
    fa, fb, flet = A[0], B[0], np.array([-1])
    total, d = 1, 0
    while front.size:
        d += 1
        na, nb = compose_arrays(fa[:, None], fb[:, None], la[None, :], lb[None, :])
        parent = np.repeat(front, nl)
        plet = np.repeat(flet, nl)
        letter = np.tile(np.arange(nl), front.size)
        na, nb = na.ravel(), nb.ravel()
        ok = accept_layer(na, nb, plet, letter, d)
        na, nb, parent, letter = na[ok], nb[ok], parent[ok], letter[ok]
        if na.size == 0:
            break
        K = key(na, nb)
        keep = _fresh(np.vstack(keys), K, DEDUP_TOL, signed)
        na, nb, parent, letter, K = na[keep], nb[keep], parent[keep], letter[keep], K[keep]
        m = na.size
        if total + m > 8 * limit:
            raise ResourceLimitError(f"tile enumeration exceeds cap {limit} (set LAMIWP_MAX_TILES)")
        A.append(na); B.append(nb); par.append(parent); let.append(letter)
        dep.append(np.full(m, d)); keys.append(K)
        front = np.arange(total, total + m)
        total += m
        fa, fb, flet = na, nb, letter
    a = np.concatenate(A)
    return TileSet(a, np.concatenate(B), np.concatenate(par), np.concatenate(let),
                   np.concatenate(dep), np.arange(a.size), label=label)


def _center_key(a, b):
    c = b / np.conj(a)
    return np.column_stack([c.real, c.imag])


@lru_cache(maxsize=32)
def displacement_ball(G: SurfaceGroup, radius: float) -> TileSet:
    """All g with d(0, g(0)) <= radius.

    The search keeps every element within radius + circumradius of 0: the
    tiles met by the geodesic from 0 to g(0) form an edge-adjacent chain
    whose centres all lie inside that bound.  Elements of a surface group
    are determined by g(0), so duplicates are detected on tile centres.
    """
    limit = max_tiles()
    bound = radius + G.fundamental_domain.circumradius * (1 + 1e-9) + 1e-9

    def accept(na, nb, plet, letter, d):
        return 2.0 * np.arccosh(np.clip(np.abs(na), 1.0, None)) <= bound

    tree = _bfs(G, accept, _center_key, limit, f"disp<={radius}")
    disp = 2.0 * np.arccosh(np.clip(np.abs(tree.tree_a), 1.0, None))
    members = np.nonzero(disp <= radius)[0]
    if members.size > limit:
        raise ResourceLimitError(f"{members.size} tiles exceed cap {limit} (set LAMIWP_MAX_TILES)")
    return TileSet(tree.tree_a, tree.tree_b, tree.parent, tree.letter, tree.depth, members,
                   label=tree.label)


def _projective_key(a, b):
    k = np.column_stack([a.real, a.imag, b.real, b.imag])
    lead = np.where(np.abs(a.real) >= np.abs(a.imag), a.real, a.imag)
    return k * np.where(lead < 0, -1.0, 1.0)[:, None]


@lru_cache(maxsize=32)
def word_ball_tiles(G: SurfaceGroup, radius: int, max_elements: int | None = None) -> TileSet:
    """Elements with a freely reduced word of length <= radius.

    Deduplication is by projective matrix distance (both signs).
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius > G.max_word_radius:
        raise ResourceLimitError(f"word radius {radius} exceeds maximum {G.max_word_radius}")
    limit = max_elements or max_tiles()

    def accept(na, nb, plet, letter, d):
        return (d <= radius) & (letter != np.where(plet >= 0, plet ^ 1, -1))

    tree = _bfs(G, accept, _projective_key, limit, f"word<={radius}", signed=True)
    if len(tree) > limit:
        raise ResourceLimitError(f"{len(tree)} elements exceed cap {limit}")
    return tree

