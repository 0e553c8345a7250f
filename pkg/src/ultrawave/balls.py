"""Exact algebra of clopen sets in the dual group.

Every set handled by the library is a finite disjoint union of balls
c + (A*)^(-k) Hperp relative to a fixed expansive automorphism A.  Balls
are keyed by the digits of their canonical center (digits strictly below
the scale cutoff), which makes equality, sorting and coalescing O(1) per
ball.  All operations return canonical forms: disjoint, sorted, and with
any complete family of |A| sibling balls merged into its parent.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .errors import PrecisionError, SpecMismatchError, ValidationError
from .groups import (
    Automorphism,
    GroupElement,
    GroupSpec,
    Product,
    comp_ops,
    components,
    different_exponent,
)

# per-component key: tuple of (position, digit), sorted by position
CompKey = Tuple[Tuple[int, int], ...]
Key = Tuple[CompKey, ...]


@dataclass(frozen=True)
class DualLattice:
    """The scale chain (A*)^(-k) Hperp for a fixed expansive A."""

    spec: GroupSpec
    auto: Automorphism

    def __post_init__(self):
        if self.auto.spec != self.spec:
            raise SpecMismatchError("automorphism acts on a different group")
        if not self.auto.is_expansive():
            raise ValidationError("the scale chain requires an expansive automorphism")

    @property
    def comps(self):
        return components(self.spec)

    @property
    def shifts(self) -> Tuple[int, ...]:
        return self.auto.shifts

    def modulus(self) -> int:
        m = self.auto.modulus()
        return int(m)

    def cutoffs(self, scale: int) -> Tuple[int, ...]:
        """Digit positions below cutoff identify a ball of this scale."""
        return tuple(scale * a - different_exponent(c)
                     for c, a in zip(self.comps, self.shifts))

    def ball(self, center, scale: int) -> "Ball":
        return Ball.from_center(self, center, scale)

    def hperp(self) -> "BallSet":
        return BallSet(self, (self.ball(0, 0),))

    def ball0_set(self, scale: int) -> "BallSet":
        return BallSet(self, (self.ball(0, scale),))

    def w_set(self, M: int) -> "BallSet":
        """W = (A*)^M Hperp."""
        return self.ball0_set(-M)

    def annulus(self, M: int) -> "BallSet":
        return self.w_set(M + 1).subtract(self.w_set(M))

    def measure_of_scale(self, scale: int) -> Fraction:
        return Fraction(1, 1) / Fraction(self.modulus()) ** scale

    def element_from_key(self, key: Key) -> GroupElement:
        items = [list(ck) for ck in key]
        return GroupElement.from_digits(
            self.spec, items if isinstance(self.spec, Product) else items[0])

    def key_of(self, x: GroupElement, scale: int) -> Key:
        cuts = self.cutoffs(scale)
        for p, cut in zip(x.precs, cuts):
            if p is not None and p < cut:
                raise PrecisionError(
                    f"center known below {p}, ball of scale {scale} needs digits below {cut}")
        digit_maps = []
        for c, v, cut in zip(self.comps, x.comps, cuts):
            digit_maps.append(tuple(sorted(comp_ops(c).digits(v, None, cut).items())))
        return tuple(digit_maps)

    def truncate_key(self, key: Key, scale: int) -> Key:
        cuts = self.cutoffs(scale)
        return tuple(tuple((n, d) for n, d in ck if n < cut)
                     for ck, cut in zip(key, cuts))

    def child_keys(self, key: Key, scale: int) -> Iterator[Key]:
        """Keys of the |A| balls of scale+1 partitioning a scale ball."""
        lo, hi = self.cutoffs(scale), self.cutoffs(scale + 1)
        per_comp = []
        for ck, a, b, c in zip(key, lo, hi, self.comps):
            q = c.p
            alts = []
            for digs in itertools.product(range(q), repeat=b - a):
                extra = tuple((a + i, d) for i, d in enumerate(digs) if d)
                alts.append(tuple(sorted(ck + extra)))
            per_comp.append(alts)
        for combo in itertools.product(*per_comp):
            yield tuple(combo)


@dataclass(frozen=True)
class Ball:
    """c + (A*)^(-scale) Hperp with canonical center digits."""

    lattice: DualLattice
    scale: int
    key: Key

    @classmethod
    def from_center(cls, lattice: DualLattice, center, scale: int) -> "Ball":
        if not isinstance(center, GroupElement):
            center = GroupElement.from_rational(lattice.spec, center)
        return cls(lattice, scale, lattice.key_of(center, scale))

    def center(self) -> GroupElement:
        return self.lattice.element_from_key(self.key)

    def measure(self) -> Fraction:
        return self.lattice.measure_of_scale(self.scale)

    def contains(self, other: "Ball") -> bool:
        return (self.scale <= other.scale
                and self.lattice.truncate_key(other.key, self.scale) == self.key)

    def contains_point(self, x: GroupElement) -> bool:
        return self.lattice.key_of(x, self.scale) == self.key

    def children(self) -> List["Ball"]:
        return [Ball(self.lattice, self.scale + 1, k)
                for k in self.lattice.child_keys(self.key, self.scale)]

    def sort_key(self):
        return (self.scale, self.key)

    def __repr__(self):
        from .groups import format_element
        return f"Ball({format_element(self.center())}, scale={self.scale})"


class BallSet:
    """Canonical finite disjoint union of balls (union semantics on input)."""

    __slots__ = ("lattice", "balls")

    def __init__(self, lattice: DualLattice, balls: Iterable[Ball] = ()):
        self.lattice = lattice
        self.balls = _canonicalize(lattice, list(balls))

    # -- basics --------------------------------------------------------------

    def is_empty(self) -> bool:
        return not self.balls

    def __bool__(self):
        return bool(self.balls)

    def __iter__(self) -> Iterator[Ball]:
        return iter(self.balls)

    def __len__(self):
        return len(self.balls)

    def __eq__(self, other):
        return (isinstance(other, BallSet)
                and self.lattice == other.lattice
                and self.balls == other.balls)

    def __hash__(self):
        return hash((self.lattice, self.balls))

    def measure(self) -> Fraction:
        return sum((b.measure() for b in self.balls), Fraction(0))

    def max_scale(self) -> Optional[int]:
        return max((b.scale for b in self.balls), default=None)

    def min_scale(self) -> Optional[int]:
        return min((b.scale for b in self.balls), default=None)

    def _check(self, other: "BallSet"):
        if self.lattice != other.lattice:
            raise SpecMismatchError("ball sets live on different scale chains")

    def _index(self):
        by_scale: dict[int, set] = {}
        for b in self.balls:
            by_scale.setdefault(b.scale, set()).add(b.key)
        return by_scale

    def _covers_key(self, index, scale: int, key: Key) -> bool:
        for s, keys in index.items():
            if s <= scale and self.lattice.truncate_key(key, s) in keys:
                return True
        return False

    def contains_point(self, x: GroupElement) -> bool:
        return any(b.contains_point(x) for b in self.balls)

    def contains_set(self, other: "BallSet") -> bool:
        return other.subtract(self).is_empty()

    # -- set operations --------------------------------------------------------

    def intersect(self, other: "BallSet") -> "BallSet":
        self._check(other)
        oidx = other._index()
        sidx = self._index()
        out = [b for b in self.balls if other._covers_key(oidx, b.scale, b.key)]
        for b in other.balls:
            for s, keys in sidx.items():
                if s < b.scale and self.lattice.truncate_key(b.key, s) in keys:
                    out.append(b)
                    break
        return BallSet(self.lattice, out)

    def subtract(self, other: "BallSet") -> "BallSet":
        self._check(other)
        oidx = other._index()
        out: List[Ball] = []
        for b in self.balls:
            if other._covers_key(oidx, b.scale, b.key):
                continue
            inner = [Ball(self.lattice, s, k)
                     for s, keys in oidx.items() if s > b.scale
                     for k in keys
                     if self.lattice.truncate_key(k, b.scale) == b.key]
            out.extend(_split_out(b, inner))
        return BallSet(self.lattice, out)

    def union(self, other: "BallSet") -> "BallSet":
        self._check(other)
        return BallSet(self.lattice, list(self.balls) + list(other.balls))

    def translate(self, gamma, sign: int = 1) -> "BallSet":
        """X + sign*gamma; gamma must be exact to the deepest cutoff present."""
        if not isinstance(gamma, GroupElement):
            gamma = GroupElement.from_rational(self.lattice.spec, gamma)
        if gamma.spec != self.lattice.spec:
            raise SpecMismatchError("translation element from a different group")
        out = []
        for b in self.balls:
            c = b.center()
            shifted = c + gamma if sign > 0 else c - gamma
            out.append(Ball.from_center(self.lattice, shifted, b.scale))
        return BallSet(self.lattice, out)

    def dilate(self, n: int) -> "BallSet":
        """(A*)^n X: scales shift by -n, centers move by the monomial action."""
        auto_n = self.lattice.auto ** n
        out = []
        for b in self.balls:
            out.append(Ball.from_center(self.lattice, auto_n.apply(b.center()),
                                        b.scale - n))
        return BallSet(self.lattice, out)

    def refine_to(self, scale: int) -> "BallSet":
        """Same set, with every ball refined to at least the given scale."""
        out = []
        for b in self.balls:
            stack = [b]
            while stack:
                cur = stack.pop()
                if cur.scale >= scale:
                    out.append(cur)
                else:
                    stack.extend(cur.children())
        s = BallSet.__new__(BallSet)
        s.lattice = self.lattice
        s.balls = tuple(sorted(out, key=Ball.sort_key))
        return s

    def __repr__(self):
        return f"BallSet[{len(self.balls)} balls, measure {self.measure()}]"


def _split_out(ball: Ball, inner: List[Ball]) -> List[Ball]:
    """ball minus a list of strictly deeper sub-balls, as disjoint balls."""
    if not inner:
        return [ball]
    if any(i.scale == ball.scale for i in inner):
        return []
    out = []
    for child in ball.children():
        sub = [i for i in inner if child.contains(i)]
        if not sub:
            out.append(child)
        else:
            out.extend(_split_out(child, sub))
    return out


def _canonicalize(lattice: DualLattice, balls: List[Ball]) -> Tuple[Ball, ...]:
    for b in balls:
        if b.lattice != lattice:
            raise SpecMismatchError("ball from a different scale chain")
    by_scale: dict[int, set] = {}
    for b in sorted(balls, key=Ball.sort_key):
        covered = any(lattice.truncate_key(b.key, s) in keys
                      for s, keys in by_scale.items() if s <= b.scale)
        if not covered:
            by_scale.setdefault(b.scale, set()).add(b.key)
    # coalesce complete sibling families, deepest scale first; merging at s
    # may enable a merge at s-1, so the floor tracks newly populated scales
    m = lattice.modulus()
    live = [s for s, keys in by_scale.items() if keys]
    if live:
        s, lo = max(live), min(live)
        while s >= lo:
            keys = by_scale.get(s, set())
            if keys:
                groups: dict[Key, list] = {}
                for k in keys:
                    groups.setdefault(lattice.truncate_key(k, s - 1), []).append(k)
                for pk, ks in groups.items():
                    if len(ks) == m:
                        keys.difference_update(ks)
                        by_scale.setdefault(s - 1, set()).add(pk)
                        lo = min(lo, s - 1)
            s -= 1
    out = [Ball(lattice, s, k) for s, keys in by_scale.items() for k in keys]
    return tuple(sorted(out, key=Ball.sort_key))


# ---------------------------------------------------------------------------
# coset representatives in the dual: the generated scheme D
# ---------------------------------------------------------------------------

class CosetScheme:
    """The representative set D generated from base digits rho_0=0, ..., rho_{N-1}.

    D consists of all finite sums of (A*)^j rho_{i_j} with j >= 1; theta maps a
    dual element to its representative by peeling scales outward, eta is the
    remainder in Hperp.
    """

    __slots__ = ("lattice", "rhos")

    def __init__(self, lattice: DualLattice, rhos: Sequence[GroupElement]):
        self.lattice = lattice
        self.rhos = tuple(rhos)
        m = lattice.modulus()
        if len(self.rhos) != m:
            raise ValidationError(f"need |A| = {m} base representatives, got {len(self.rhos)}")
        if not self.rhos[0].is_zero():
            raise ValidationError("rho_0 must be 0")
        zero = self.lattice.ball(0, 1)
        seen = set()
        for rho in self.rhos:
            if not rho.is_exact():
                raise ValidationError("base representatives must be exact")
            if not self._in_scale(rho, 0):
                raise ValidationError("base representatives must lie in Hperp")
            k = lattice.key_of(rho, 1)
            if k in seen:
                raise ValidationError("base representatives collide modulo (A*)^-1 Hperp")
            seen.add(k)

    @classmethod
    def canonical(cls, lattice: DualLattice) -> "CosetScheme":
        """rho_i = the i-th digit string on the window [cutoff(0), cutoff(1)),
        mixed-radix with the first position least significant (rho_i = i on Q_p)."""
        spec = lattice.spec
        cs = lattice.comps
        lo, hi = lattice.cutoffs(0), lattice.cutoffs(1)
        positions = [(ci, pos) for ci, (a, b) in enumerate(zip(lo, hi))
                     for pos in range(a, b)]
        rhos = []
        for i in range(lattice.modulus()):
            items = [[] for _ in cs]
            rem = i
            for ci, pos in positions:
                rem, d = divmod(rem, cs[ci].p)[0], rem % cs[ci].p
                if d:
                    items[ci].append((pos, d))
            rhos.append(GroupElement.from_digits(
                spec, items if isinstance(spec, Product) else items[0]))
        return cls(lattice, rhos)

    def _in_scale(self, x: GroupElement, scale: int) -> bool:
        cuts = self.lattice.cutoffs(scale)
        return all(v is None or v >= cut
                   for v, cut in zip(x.valuation(), cuts))

    def sigma0(self) -> GroupElement:
        return GroupElement.zero(self.lattice.spec)

    def _depth_of(self, gamma: GroupElement) -> int:
        """Smallest n >= 0 with (A*)^(-n) gamma in Hperp."""
        n = 0
        for c, v, a in zip(self.lattice.comps, gamma.valuation(), self.lattice.shifts):
            if v is None:
                continue
            need = -(v + different_exponent(c))
            if need > 0:
                n = max(n, -(-need // a))  # ceil division
        return n

    def theta(self, gamma: GroupElement) -> GroupElement:
        """The unique element of D congruent to gamma modulo Hperp."""
        cuts = self.lattice.cutoffs(0)
        g = gamma.truncate(cuts)
        g = GroupElement(g.spec, g.comps, (None,) * len(g.comps))  # exact coset data
        acc = GroupElement.zero(self.lattice.spec)
        n = self._depth_of(g)
        while n >= 1:
            x = (self.lattice.auto ** (-n)).apply(g)
            for rho in self.rhos:
                if self._in_scale(x - rho, 1):
                    term = (self.lattice.auto ** n).apply(rho)
                    acc = acc + term
                    g = g - term
                    break
            else:
                raise ValidationError(
                    "base representatives do not cover Hperp/(A*)^-1 Hperp")
            n2 = self._depth_of(g)
            if n2 >= n:
                raise ValidationError("theta failed to descend; invalid scheme")
            n = n2
        return acc

    def eta(self, gamma: GroupElement) -> GroupElement:
        return gamma - self.theta(gamma)

    def generate(self, depth: int) -> List[GroupElement]:
        """All sums over j = 1..depth; |A|^depth elements (includes 0)."""
        out = [GroupElement.zero(self.lattice.spec)]
        for j in range(1, depth + 1):
            dil = self.lattice.auto ** j
            layer = [dil.apply(rho) for rho in self.rhos]
            out = [x + t for x in out for t in layer]
        return out

    def annulus_reps(self, M: int = 0) -> List[GroupElement]:
        """D intersected with (A*)^(M+1) Hperp minus (A*)^M Hperp, sorted."""
        out = []
        for element in self.generate(M + 1):
            if not self._in_scale(element, -M):
                out.append(element)
        out.sort(key=lambda e: self.lattice.key_of(e, 0))
        return out

    def in_d(self, sigma: GroupElement) -> bool:
        return sigma.is_exact() and self.theta(sigma) == sigma


def coset_refine(x: BallSet, scheme: CosetScheme) -> List[Tuple[GroupElement, BallSet]]:
    """Partition of x into pieces lying in single cosets sigma + Hperp.

    Balls of negative scale are refined to scale 0 first; pieces are keyed by
    the D-representative of their coset, in canonical center order.
    """
    lattice = x.lattice
    refined = x.refine_to(0)
    groups: dict[Key, List[Ball]] = {}
    for b in refined:
        groups.setdefault(lattice.truncate_key(b.key, 0), []).append(b)
    out = []
    for key0 in sorted(groups):
        sigma = scheme.theta(lattice.element_from_key(key0))
        out.append((sigma, BallSet(lattice, groups[key0])))
    return out


def translation_reps(lattice: DualLattice, n: int) -> List[GroupElement]:
    """Representatives of A^n H / H: digit strings on [-n*a_i, 0)."""
    if n <= 0:
        return [GroupElement.zero(lattice.spec)]
    spec = lattice.spec
    positions = [(ci, pos) for ci, (c, a) in enumerate(zip(lattice.comps, lattice.shifts))
                 for pos in range(-n * a, 0)]
    out = []
    for digs in itertools.product(*[range(lattice.comps[ci].p) for ci, _ in positions]):
        items = [[] for _ in lattice.comps]
        for (ci, pos), d in zip(positions, digs):
            if d:
                items[ci].append((pos, d))
        out.append(GroupElement.from_digits(
            spec, items if isinstance(spec, Product) else items[0]))
    return out
