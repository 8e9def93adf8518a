"""Genus-g surface groups acting on the disk through the regular 4g-gon.

Letters are encoded as integers: generator index ``i`` (order a1, b1, a2, b2,
...) with exponent +1 is ``2*i`` and with exponent -1 is ``2*i + 1``.  This
matches the column layout of coset tables.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate

from .errors import InvalidGenusError, ReductionFailureError, WordParseError
from .mobius import (
    MobiusTransform,
    apply_arrays,
    compose,
    compose_arrays,
    projective_distance,
)

RELATION_TOL = 1e-9


# ---------------------------------------------------------------- words

def letter_code(gen: int, exp: int) -> int:
    return 2 * gen + (0 if exp > 0 else 1)


def letter_inverse(code: int) -> int:
    return code ^ 1


def letter_name(code: int) -> str:
    gen, inv = divmod(code, 2)
    base = ("a" if gen % 2 == 0 else "b") + str(gen // 2 + 1)
    return base.upper() if inv else base


def free_reduce(codes) -> tuple[int, ...]:
    out: list[int] = []
    for c in codes:
        if out and out[-1] == letter_inverse(c):
            out.pop()
        else:
            out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; ``codes`` holds integer letter codes."""

    codes: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "codes", free_reduce(int(c) for c in self.codes))

    @classmethod
    def from_letters(cls, letters) -> "Word":
        return cls(tuple(letter_code(g, e) for g, e in letters))

    @property
    def letters(self) -> tuple[tuple[int, int], ...]:
        return tuple((c // 2, -1 if c % 2 else 1) for c in self.codes)

    def __len__(self) -> int:
        return len(self.codes)

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.codes + other.codes)

    def __pow__(self, k: int) -> "Word":
        base = self if k >= 0 else self.inverse()
        return Word(base.codes * abs(k))

    def inverse(self) -> "Word":
        return Word(tuple(letter_inverse(c) for c in reversed(self.codes)))

    def __str__(self) -> str:
        return print_word(self)


def print_word(w: Word) -> str:
    return "*".join(letter_name(c) for c in w.codes) if w.codes else "e"


def commutator(x: Word, y: Word) -> Word:
    return x * y * x.inverse() * y.inverse()


def relator_word(genus: int) -> Word:
    w = Word()
    for j in range(genus):
        w = w * commutator(Word((letter_code(2 * j, 1),)), Word((letter_code(2 * j + 1, 1),)))
    return w


class _Parser:
    """Recursive-descent parser for the word grammar.

    expr   := factor (['*'] factor)*
    factor := atom ('^' int)?
    atom   := gen | '[' expr ',' expr ']' | '(' expr ')' | 'e'
    """

    def __init__(self, text: str, genus: int | None):
        self.text = text
        self.genus = genus
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expect(self, ch: str):
        if self._peek() != ch:
            found = self._peek() or "end of input"
            raise WordParseError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def parse(self) -> Word:
        if not self.text.strip():
            return Word()
        w = self.expr()
        if self._peek():
            raise WordParseError(f"unexpected {self._peek()!r}", self.pos)
        return w

    def expr(self) -> Word:
        w = self.factor()
        while True:
            ch = self._peek()
            if ch == "*":
                self.pos += 1
            elif not (ch and ch in "[(aAbB"):
                return w
            w = w * self.factor()

    def factor(self) -> Word:
        w = self.atom()
        if self._peek() == "^":
            self.pos += 1
            self._skip()
            m = re.match(r"-?\d+", self.text[self.pos:])
            if not m:
                raise WordParseError("malformed exponent", self.pos)
            self.pos += m.end()
            w = w ** int(m.group())
        return w

    def atom(self) -> Word:
        ch = self._peek()
        start = self.pos
        if ch == "[":
            self.pos += 1
            x = self.expr()
            self._expect(",")
            y = self.expr()
            self._expect("]")
            return commutator(x, y)
        if ch == "(":
            self.pos += 1
            x = self.expr()
            self._expect(")")
            return x
        m = re.match(r"([aAbB])(\d+)", self.text[self.pos:])
        if m:
            idx = int(m.group(2))
            if idx < 1 or (self.genus is not None and idx > self.genus):
                raise WordParseError(f"unknown generator {m.group(0)!r}", start)
            self.pos += m.end()
            gen = 2 * (idx - 1) + (0 if m.group(1).lower() == "a" else 1)
            return Word((letter_code(gen, -1 if m.group(1).isupper() else 1),))
        m = re.match(r"(e|1)(?![\w])", self.text[self.pos:])
        if m:
            self.pos += m.end()
            return Word()
        if not ch:
            raise WordParseError("unexpected end of input", self.pos)
        if ch == "]" or ch == ")":
            raise WordParseError("unbalanced brackets", self.pos)
        raise WordParseError(f"unknown symbol {ch!r}", self.pos)


def parse_word(text: str, genus: int | None = None) -> Word:
    """Parse e.g. ``"a1*B2^3*[a1,b1]"``; uppercase letters are inverses."""
    return _Parser(text, genus).parse()


# ---------------------------------------------------------------- polygon

@dataclass(frozen=True, eq=False)
class PolygonF:
    """Regular 4g-gon centred at 0 with interior angles 2*pi/(4g)."""

    genus: int
    vertices: np.ndarray
    side_pairing: dict  # side -> (Word of length 1, target side)

    @property
    def n_sides(self) -> int:
        return 4 * self.genus

    @cached_property
    def inradius(self) -> float:
        n = self.n_sides
        return math.acosh(math.cos(math.pi / n) / math.sin(math.pi / n))

    @cached_property
    def circumradius(self) -> float:
        n = self.n_sides
        return math.acosh(1.0 / (math.tan(math.pi / n) ** 2))

    @cached_property
    def vertex_radius(self) -> float:
        return math.tanh(0.5 * self.circumradius)

    @cached_property
    def start_angle(self) -> float:
        return -math.pi / self.n_sides

    @cached_property
    def side_angles(self) -> np.ndarray:
        n = self.n_sides
        return self.start_angle + 2 * math.pi * (np.arange(n) + 0.5) / n

    @cached_property
    def side_circle_offset(self) -> float:
        r = self.vertex_radius
        return (r * r + 1.0) / (2.0 * r * math.cos(math.pi / self.n_sides))

    @cached_property
    def side_circle_radius(self) -> float:
        d = self.side_circle_offset
        return math.sqrt(d * d - 1.0)

    @cached_property
    def side_centers(self) -> np.ndarray:
        return self.side_circle_offset * np.exp(1j * self.side_angles)

    def outside_sides(self, z, tol: float = 1e-12) -> np.ndarray:
        """Boolean array (..., n_sides): z strictly beyond each side."""
        z = np.asarray(z, dtype=complex)
        dist = np.abs(z[..., None] - self.side_centers)
        return dist < self.side_circle_radius - tol

    def contains(self, z, tol: float = 1e-12) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return (np.abs(z) < 1.0) & ~self.outside_sides(z, tol).any(axis=-1)

    def boundary_radius(self, theta):
        """Distance from 0 to the boundary of F along the ray at angle theta."""
        theta = np.asarray(theta, dtype=float)
        n = self.n_sides
        k = np.floor((theta - self.start_angle) / (2 * math.pi / n)).astype(int) % n
        d = self.side_circle_offset
        cos_t = np.cos(theta - self.side_angles[k])
        return d * cos_t - np.sqrt(d * d * cos_t * cos_t - 1.0)

    def euclidean_area(self) -> float:
        n = self.n_sides
        r = self.vertex_radius
        rho = self.side_circle_radius
        beta = math.asin(r * math.sin(math.pi / n) / rho)
        polygon = n * 0.5 * r * r * math.sin(2 * math.pi / n)
        segments = n * 0.5 * rho * rho * (2 * beta - math.sin(2 * beta))
        return polygon - segments

    def hyperbolic_area(self) -> float:
        """Area in the curvature -1 metric, by radial integration per side."""
        n = self.n_sides
        step = 2 * math.pi / n

        def integrand(theta):
            rr = float(self.boundary_radius(theta)) ** 2
            return 2.0 * rr / (1.0 - rr)

        total = 0.0
        for k in range(n):
            lo = self.start_angle + k * step
            val, _ = integrate.quad(integrand, lo, lo + step, epsabs=1e-14, epsrel=1e-13)
            total += val
        return total


# ---------------------------------------------------------------- group

@dataclass(frozen=True, eq=False)
class SurfaceGroup:
    genus: int
    generators: tuple[MobiusTransform, ...]
    fundamental_domain: PolygonF
    max_word_radius: int = 12
    # side k -> letter code that maps the tile across side k back onto F
    side_letters: tuple[int, ...] = field(default=())

    @property
    def n_generators(self) -> int:
        return 2 * self.genus

    @property
    def generator_names(self) -> list[str]:
        return [letter_name(2 * i) for i in range(self.n_generators)]

    @cached_property
    def letter_transforms(self) -> tuple[MobiusTransform, ...]:
        out = []
        for g in self.generators:
            out.extend([g, g.inverse()])
        return tuple(out)

    @cached_property
    def letter_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.array([m.a for m in self.letter_transforms])
        b = np.array([m.b for m in self.letter_transforms])
        return a, b

    def relator(self) -> Word:
        return relator_word(self.genus)

    def relation_residual(self) -> float:
        """Norm of R - (+/-)I for the raw (un-reduced) relator product."""
        m = MobiusTransform.identity()
        for j in range(self.genus):
            x, y = self.generators[2 * j], self.generators[2 * j + 1]
            for t in (x, y, x.inverse(), y.inverse()):
                m = compose(m, t)
        return projective_distance(m, MobiusTransform.identity())

    def to_json(self) -> dict:
        return {
            "genus": self.genus,
            "generators": [g.to_json() for g in self.generators],
            "vertices": [[v.real, v.imag] for v in self.fundamental_domain.vertices],
        }


def _pair_sides(poly: PolygonF, s: int, t: int) -> MobiusTransform:
    """Translation mapping side s onto side t (orientation reversed) and F across side t."""
    phi = poly.side_angles
    m = MobiusTransform.rotation(math.pi - phi[s])
    m = compose(MobiusTransform.translation(2 * poly.inradius), m)
    return compose(MobiusTransform.rotation(phi[t]), m)


@lru_cache(maxsize=8)
def build_genus_group(g: int) -> SurfaceGroup:
    """Surface group of genus g with sides paired in the a b A B pattern.

    In every block of four consecutive sides (4j .. 4j+3), a_j maps side 4j+2
    onto side 4j and b_j maps side 4j+1 onto side 4j+3; with this pattern the
    product of commutators is the identity.
    """
    if not isinstance(g, (int, np.integer)) or g < 2:
        raise InvalidGenusError(f"genus must be an integer >= 2, got {g!r}")
    g = int(g)
    n = 4 * g
    r = math.tanh(0.5 * math.acosh(1.0 / math.tan(math.pi / n) ** 2))
    th0 = -math.pi / n
    vertices = r * np.exp(1j * (th0 + 2 * math.pi * np.arange(n) / n))
    poly0 = PolygonF(g, vertices, {})
    gens = []
    pairing: dict[int, tuple[Word, int]] = {}
    side_letters = [0] * n
    for j in range(g):
        base = 4 * j
        for gi, (s, t) in ((2 * j, (base + 2, base)), (2 * j + 1, (base + 1, base + 3))):
            gens.append(_pair_sides(poly0, s, t))
            pairing[s] = (Word((letter_code(gi, 1),)), t)
            pairing[t] = (Word((letter_code(gi, -1),)), s)
    for k, (w, _) in pairing.items():
        side_letters[k] = w.codes[0]
    poly = PolygonF(g, vertices, dict(sorted(pairing.items())))
    return SurfaceGroup(g, tuple(gens), poly, side_letters=tuple(side_letters))


def evaluate_word(G: SurfaceGroup, w: Word) -> MobiusTransform:
    m = MobiusTransform.identity()
    lt = G.letter_transforms
    for c in w.codes:
        if c // 2 >= G.n_generators:
            raise WordParseError(f"letter {letter_name(c)} outside genus {G.genus}", 0)
        m = compose(m, lt[c])
    return m


# ---------------------------------------------------------------- reduction

@dataclass
class Reduction:
    """Vectorized result of reducing points into F.

    ``steps[p, s]`` is the letter applied at step s to point p (-1 = done),
    in application order.  The composite transform (a, b) satisfies
    (a z + b)/(conj(b) z + conj(a)) = reduced.
    """

    reduced: np.ndarray
    steps: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def word(self, p: int) -> Word:
        codes = [c for c in self.steps[p] if c >= 0]
        return Word(tuple(reversed(codes)))


def reduce_points(G: SurfaceGroup, z, max_steps: int = 200) -> Reduction:
    """Greedy Dirichlet descent of many points at once.

    Each step applies, among the sides the point lies strictly beyond, the
    side letter giving the smallest modulus (ties: lowest side index).
    """
    z = np.array(z, dtype=complex, copy=True).ravel()
    if np.any(np.abs(z) >= 1.0 - 1e-9):
        raise ReductionFailureError("point too close to the boundary circle")
    poly = G.fundamental_domain
    la, lb = G.letter_arrays
    side_letters = np.asarray(G.side_letters)
    side_a, side_b = la[side_letters], lb[side_letters]
    a = np.ones_like(z)
    b = np.zeros_like(z)
    steps = np.full((z.size, 0), -1, dtype=np.int64)
    active = np.arange(z.size)
    cols = []
    for _ in range(max_steps):
        if active.size == 0:
            break
        zz = z[active]
        out = poly.outside_sides(zz)
        moving = out.any(axis=1)
        if not moving.any():
            break
        active = active[moving]
        zz, out = zz[moving], out[moving]
        cand = apply_arrays(side_a[None, :], side_b[None, :], zz[:, None])
        mod = np.where(out, np.abs(cand), np.inf)
        k = np.argmin(mod, axis=1)
        z[active] = cand[np.arange(active.size), k]
        a[active], b[active] = compose_arrays(side_a[k], side_b[k], a[active], b[active])
        col = np.full(z.size, -1, dtype=np.int64)
        col[active] = side_letters[k]
        cols.append(col)
    else:
        if poly.outside_sides(z[active]).any():
            raise ReductionFailureError(f"no convergence after {max_steps} steps")
    if cols:
        steps = np.stack(cols, axis=1)
    return Reduction(z, steps, a, b)


def reduce_to_F(G: SurfaceGroup, z: complex, max_steps: int = 200) -> tuple[Word, complex]:
    res = reduce_points(G, np.array([z]), max_steps)
    return res.word(0), complex(res.reduced[0])


# ---------------------------------------------------------------- word balls

def word_ball(G: SurfaceGroup, radius: int, max_elements: int | None = None):
    """All elements with a freely reduced word of length <= radius."""
    from .tiles import word_ball_tiles

    ts = word_ball_tiles(G, radius, max_elements)
    return [(w, MobiusTransform(complex(a), complex(b))) for w, a, b in zip(ts.words(), ts.a, ts.b)]


def vertex_cycle_ok(G: SurfaceGroup, tol: float = 1e-8) -> bool:
    """Every generator maps its source side onto its target side, reversed."""
    poly = G.fundamental_domain
    v = poly.vertices
    n = poly.n_sides
    for s, (w, t) in poly.side_pairing.items():
        m = G.letter_transforms[w.codes[0]]
        if abs(m(v[s]) - v[(t + 1) % n]) > tol or abs(m(v[(s + 1) % n]) - v[t]) > tol:
            return False
    return True


def origin_orbit_distance(G: SurfaceGroup, w: Word) -> float:
    m = evaluate_word(G, w)
    return m.displacement()

