"""Exact arithmetic for the supported groups and their duals.

Supported groups: p-adic fields Q_p, Laurent-series fields F_p((t)),
Eisenstein extensions Q_p(pi) with pi^e = p, and finite products of these.
Elements are digit expansions in the uniformizer; exact elements are backed
by closed-form values (rationals, F_p Laurent polynomials, coefficient
tuples) so that addition, negation and multiplication stay exact, while
digit windows, carry rules and precision scales remain the external
contract.  Finite-precision elements carry the truncated value plus the
scale below which digits are known.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

from .cyclotomic import Cyclo
from .errors import PrecisionError, SpecMismatchError, ValidationError


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _check_prime(p: int) -> int:
    if not _is_prime(p):
        raise ValidationError(f"{p} is not prime")
    return p


# ---------------------------------------------------------------------------
# group specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrimeField:
    """Q_p: Laurent series in p with digit carrying."""

    p: int

    def __post_init__(self):
        _check_prime(self.p)

    def __str__(self):
        return f"Q_{self.p}"


@dataclass(frozen=True)
class LaurentField:
    """F_p((t)): Laurent series in t, no carrying."""

    p: int

    def __post_init__(self):
        _check_prime(self.p)

    def __str__(self):
        return f"F_{self.p}((t))"


@dataclass(frozen=True)
class PiExtension:
    """Totally ramified extension Q_p(pi), pi^ram = p.

    Digit carries jump `ram` positions.  `different_exponent` fixes the
    annihilator of the ring of integers as pi^(-r) * integers under the
    trace pairing; it is derived from the trace character and validated.
    """

    p: int
    ram: int
    different_exponent: int

    def __post_init__(self):
        _check_prime(self.p)
        if self.ram < 2:
            raise ValidationError("ramification index must be >= 2 (use PrimeField for e=1)")
        r = self.ram * _frac_val(self.p, Fraction(self.ram)) + self.ram - 1
        if self.different_exponent != r:
            raise ValidationError(
                f"different_exponent {self.different_exponent} does not match the "
                f"trace character of pi^{self.ram}={self.p} (expected {r})")

    def __str__(self):
        return f"Q_{self.p}(pi), pi^{self.ram}={self.p}"


@dataclass(frozen=True)
class Product:
    components: Tuple[Union[PrimeField, LaurentField, PiExtension], ...]

    def __post_init__(self):
        if len(self.components) < 2:
            raise ValidationError("Product needs at least 2 components")
        for c in self.components:
            if isinstance(c, Product):
                raise ValidationError("nested products must be flattened")

    def __str__(self):
        return " x ".join(str(c) for c in self.components)


ScalarSpec = Union[PrimeField, LaurentField, PiExtension]
GroupSpec = Union[ScalarSpec, Product]


def components(spec: GroupSpec) -> Tuple[ScalarSpec, ...]:
    return spec.components if isinstance(spec, Product) else (spec,)


def q2sqrt2() -> PiExtension:
    """The built-in Q_2(sqrt 2): pi = sqrt 2, carries jump two positions."""
    return PiExtension(2, 2, 3)


# ---------------------------------------------------------------------------
# carry rules (the digit-level view of addition)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CarryRule:
    """Digitwise addition table: (d1, d2) -> (digit, carries at offsets 1..).

    carry_offset 0 encodes "no carrying" (Laurent fields); otherwise the
    single base-q carry lands `carry_offset` positions up.
    """

    q: int
    carry_offset: int

    def digit_add(self, d1: int, d2: int) -> Tuple[int, Tuple[int, ...]]:
        s = d1 + d2
        if self.carry_offset == 0:
            return s % self.q, ()
        digit, carry = s % self.q, s // self.q
        if not carry:
            return digit, ()
        vec = [0] * self.carry_offset
        vec[self.carry_offset - 1] = carry
        return digit, tuple(vec)

    def table(self) -> dict:
        return {(a, b): self.digit_add(a, b)
                for a in range(self.q) for b in range(self.q)}


def carry_rule(comp: ScalarSpec) -> CarryRule:
    if isinstance(comp, PrimeField):
        return CarryRule(comp.p, 1)
    if isinstance(comp, LaurentField):
        return CarryRule(comp.p, 0)
    return CarryRule(comp.p, comp.ram)


# ---------------------------------------------------------------------------
# per-component value backends
# ---------------------------------------------------------------------------

def _frac_val(p: int, x: Fraction) -> Optional[int]:
    if not x:
        return None
    v = 0
    n = x.numerator
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _frac_digits(p: int, x: Fraction, lo: Optional[int], hi: int) -> dict:
    """Digits of the p-adic expansion of x at positions [lo, hi)."""
    if not x:
        return {}
    v = _frac_val(p, x)
    if v >= hi:
        return {}
    k = hi - v
    unit = x / Fraction(p) ** v
    num, den = unit.numerator, unit.denominator
    res = num * pow(den, -1, p ** k) % p ** k
    out = {}
    pos = v
    while res:
        res, d = divmod(res, p)
        if d and (lo is None or pos >= lo):
            out[pos] = d
        pos += 1
    return out


class _FracOps:
    """Backing: Fraction (denominator may carry powers of p)."""

    def __init__(self, comp: PrimeField):
        self.p = comp.p
        self.zero = Fraction(0)
        self.one = Fraction(1)

    def add(self, x, y):
        return x + y

    def neg(self, x):
        return -x

    def mul(self, x, y):
        return x * y

    def val(self, x):
        return _frac_val(self.p, x)

    def scale_pi(self, x, shift):
        return x * Fraction(self.p) ** shift

    def digits(self, x, lo, hi):
        return _frac_digits(self.p, x, lo, hi)

    def from_digits(self, items):
        return sum((Fraction(d) * Fraction(self.p) ** n for n, d in items), Fraction(0))

    def truncate(self, x, cutoff):
        return self.from_digits(_frac_digits(self.p, x, None, cutoff).items())

    def char_angle(self, x):
        v = _frac_val(self.p, x)
        if v is None or v >= 0:
            return Fraction(0)
        f = self.from_digits(_frac_digits(self.p, x, None, 0).items())
        return f % 1

    def char_cutoff(self):
        return 0  # the character reads digits at positions < 0

    def from_rational(self, q):
        return Fraction(q)

    def unit_ok(self, u):
        return _frac_val(self.p, u) == 0

    def unit_inv(self, u):
        return 1 / u


class _PolyOps:
    """Backing: Laurent polynomial over F_p, stored as sorted ((exp, coeff)...)."""

    def __init__(self, comp: LaurentField):
        self.p = comp.p
        self.zero = ()
        self.one = ((0, 1),)

    def _norm(self, d: dict):
        return tuple(sorted((e, c % self.p) for e, c in d.items() if c % self.p))

    def add(self, x, y):
        d = dict(x)
        for e, c in y:
            d[e] = d.get(e, 0) + c
        return self._norm(d)

    def neg(self, x):
        return tuple((e, (-c) % self.p) for e, c in x)

    def mul(self, x, y):
        d = {}
        for e1, c1 in x:
            for e2, c2 in y:
                d[e1 + e2] = d.get(e1 + e2, 0) + c1 * c2
        return self._norm(d)

    def val(self, x):
        return x[0][0] if x else None

    def scale_pi(self, x, shift):
        return tuple((e + shift, c) for e, c in x)

    def digits(self, x, lo, hi):
        return {e: c for e, c in x if (lo is None or e >= lo) and e < hi}

    def from_digits(self, items):
        return self._norm({n: d for n, d in items})

    def truncate(self, x, cutoff):
        return tuple((e, c) for e, c in x if e < cutoff)

    def char_angle(self, x):
        for e, c in x:
            if e == -1:
                return Fraction(c, self.p)
        return Fraction(0)

    def char_cutoff(self):
        return 0

    def from_rational(self, q):
        q = Fraction(q)
        if q.denominator != 1:
            raise ValidationError("Laurent components accept integer constants only")
        c = q.numerator % self.p
        return ((0, c),) if c else ()

    def unit_ok(self, u):
        return len(u) == 1 and u[0][0] == 0

    def unit_inv(self, u):
        return ((0, pow(u[0][1], -1, self.p)),)


class _ExtOps:
    """Backing: tuple (a_0..a_{e-1}) of Fractions, x = sum a_i pi^i, pi^e = p."""

    def __init__(self, comp: PiExtension):
        self.p = comp.p
        self.e = comp.ram
        self.zero = (Fraction(0),) * comp.ram
        self.one = (Fraction(1),) + (Fraction(0),) * (comp.ram - 1)

    def add(self, x, y):
        return tuple(a + b for a, b in zip(x, y))

    def neg(self, x):
        return tuple(-a for a in x)

    def mul(self, x, y):
        out = [Fraction(0)] * self.e
        for i, a in enumerate(x):
            if not a:
                continue
            for j, b in enumerate(y):
                if not b:
                    continue
                k = i + j
                if k < self.e:
                    out[k] += a * b
                else:
                    out[k - self.e] += a * b * self.p
        return tuple(out)

    def val(self, x):
        best = None
        for i, a in enumerate(x):
            v = _frac_val(self.p, a)
            if v is not None:
                cand = self.e * v + i
                if best is None or cand < best:
                    best = cand
        return best

    def scale_pi(self, x, shift):
        out = [Fraction(0)] * self.e
        for i, a in enumerate(x):
            if not a:
                continue
            n = i + shift
            q, s = divmod(n, self.e)
            out[s] += a * Fraction(self.p) ** q
        return tuple(out)

    def digits(self, x, lo, hi):
        out = {}
        for i, a in enumerate(x):
            plo = None if lo is None else math.floor((lo - i) / self.e)
            phi = math.ceil((hi - i) / self.e)
            for k, d in _frac_digits(self.p, a, plo, phi).items():
                n = self.e * k + i
                if (lo is None or n >= lo) and n < hi:
                    out[n] = d
        return out

    def from_digits(self, items):
        out = [Fraction(0)] * self.e
        for n, d in items:
            q, s = divmod(n, self.e)
            out[s] += Fraction(d) * Fraction(self.p) ** q
        return tuple(out)

    def truncate(self, x, cutoff):
        return self.from_digits(self.digits(x, None, cutoff).items())

    def char_angle(self, x):
        tr = self.e * x[0]
        v = _frac_val(self.p, tr)
        if v is None or v >= 0:
            return Fraction(0)
        f = sum((Fraction(d) * Fraction(self.p) ** n
                 for n, d in _frac_digits(self.p, tr, None, 0).items()), Fraction(0))
        return f % 1

    def char_cutoff(self):
        # trace character reads digits at positions < -r
        return -(self.e * _frac_val(self.p, Fraction(self.e)) + self.e - 1)

    def from_rational(self, q):
        return (Fraction(q),) + (Fraction(0),) * (self.e - 1)

    def unit_ok(self, u):
        # restricted to base-field units: exactly invertible
        return (_frac_val(self.p, u[0]) == 0
                and all(not a for a in u[1:]))

    def unit_inv(self, u):
        return (1 / u[0],) + (Fraction(0),) * (self.e - 1)


@lru_cache(maxsize=None)
def comp_ops(comp: ScalarSpec):
    if isinstance(comp, PrimeField):
        return _FracOps(comp)
    if isinstance(comp, LaurentField):
        return _PolyOps(comp)
    if isinstance(comp, PiExtension):
        return _ExtOps(comp)
    raise SpecMismatchError(f"not a scalar component: {comp!r}")


def residue_cardinality(comp: ScalarSpec) -> int:
    return comp.p


def different_exponent(comp: ScalarSpec) -> int:
    return comp.different_exponent if isinstance(comp, PiExtension) else 0


# ---------------------------------------------------------------------------
# group elements
# ---------------------------------------------------------------------------

Prec = Optional[int]


@dataclass(frozen=True)
class GroupElement:
    """Digit expansion in the uniformizer, exact or truncated.

    comps[i] is the backing value of component i; precs[i] is None for an
    exact element, else the scale below which digits are known (the element
    is its stored value modulo pi^prec * integers).
    """

    spec: GroupSpec
    comps: Tuple
    precs: Tuple[Prec, ...]

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, spec: GroupSpec) -> "GroupElement":
        cs = components(spec)
        return cls(spec, tuple(comp_ops(c).zero for c in cs), (None,) * len(cs))

    @classmethod
    def from_rational(cls, spec: GroupSpec, value) -> "GroupElement":
        """Broadcast a rational (p-free or not) into every component."""
        cs = components(spec)
        vals = value if isinstance(value, (tuple, list)) else (value,) * len(cs)
        if len(vals) != len(cs):
            raise SpecMismatchError("component count mismatch")
        return cls(spec, tuple(comp_ops(c).from_rational(v) for c, v in zip(cs, vals)),
                   (None,) * len(cs))

    @classmethod
    def from_digits(cls, spec: GroupSpec, digit_items, prec: Prec = None) -> "GroupElement":
        """digit_items: [(pos, digit)] for scalar specs, or a list per component."""
        cs = components(spec)
        if not isinstance(spec, Product):
            digit_items = (digit_items,)
        vals = []
        for c, items in zip(cs, digit_items):
            ops = comp_ops(c)
            for n, d in items:
                if not 0 <= d < c.p:
                    raise ValidationError(f"digit {d} out of range for base {c.p}")
            vals.append(ops.from_digits(items))
        return cls(spec, tuple(vals), (prec,) * len(cs))

    # -- views -------------------------------------------------------------

    def is_exact(self) -> bool:
        return all(p is None for p in self.precs)

    def is_zero(self) -> bool:
        return all(v == comp_ops(c).zero
                   for c, v in zip(components(self.spec), self.comps))

    def valuation(self) -> Tuple[Optional[int], ...]:
        return tuple(comp_ops(c).val(v)
                     for c, v in zip(components(self.spec), self.comps))

    @property
    def lead(self) -> Optional[int]:
        vs = [v for v in self.valuation() if v is not None]
        return min(vs) if vs else None

    @property
    def precision(self) -> Prec:
        fin = [p for p in self.precs if p is not None]
        return min(fin) if fin else None

    def digits(self, lo: Optional[int], hi: int) -> Tuple[dict, ...]:
        """Per-component digit maps on [lo, hi); raises if not known that deep."""
        out = []
        for c, v, p in zip(components(self.spec), self.comps, self.precs):
            if p is not None and hi > p:
                raise PrecisionError(f"digits up to {hi} requested, known below {p}")
            out.append(comp_ops(c).digits(v, lo, hi))
        return tuple(out)

    def truncate(self, cutoffs: Union[int, Sequence[int]]) -> "GroupElement":
        """Truncated element with digits below the per-component cutoffs."""
        cs = components(self.spec)
        if isinstance(cutoffs, int):
            cutoffs = (cutoffs,) * len(cs)
        vals, precs = [], []
        for c, v, p, cut in zip(cs, self.comps, self.precs, cutoffs):
            if p is not None and cut > p:
                raise PrecisionError(f"cannot truncate at {cut}; known below {p}")
            vals.append(comp_ops(c).truncate(v, cut))
            precs.append(cut)
        return GroupElement(self.spec, tuple(vals), tuple(precs))

    def as_exact(self) -> "GroupElement":
        """Promote the stored digits to an exactly-chosen element."""
        if self.is_exact():
            return self
        return GroupElement(self.spec, self.comps, (None,) * len(self.comps))

    # -- arithmetic ---------------------------------------------------------

    def _binary(self, other: "GroupElement"):
        if self.spec != other.spec:
            raise SpecMismatchError(f"{self.spec} vs {other.spec}")

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._binary(other)
        vals, precs = [], []
        for c, x, px, y, py in zip(components(self.spec), self.comps, self.precs,
                                   other.comps, other.precs):
            ops = comp_ops(c)
            v = ops.add(x, y)
            p = _min_prec(px, py)
            if p is not None:
                v = ops.truncate(v, p)
            vals.append(v)
            precs.append(p)
        return GroupElement(self.spec, tuple(vals), tuple(precs))

    def __neg__(self) -> "GroupElement":
        vals = []
        for c, x, p in zip(components(self.spec), self.comps, self.precs):
            ops = comp_ops(c)
            v = ops.neg(x)
            if p is not None:
                v = ops.truncate(v, p)
            vals.append(v)
        return GroupElement(self.spec, tuple(vals), self.precs)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return self + (-other)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        self._binary(other)
        if isinstance(self.spec, Product):
            if not (self._scalar_embeddable() or other._scalar_embeddable()):
                raise SpecMismatchError(
                    "componentwise product of two generic product-group elements "
                    "is not defined; one factor must be a broadcast rational")
        vals, precs = [], []
        for c, x, px, y, py in zip(components(self.spec), self.comps, self.precs,
                                   other.comps, other.precs):
            v, p = _comp_mul(c, x, px, y, py)
            vals.append(v)
            precs.append(p)
        return GroupElement(self.spec, tuple(vals), tuple(precs))

    def _scalar_embeddable(self) -> bool:
        if not isinstance(self.spec, Product):
            return True
        rats = []
        for c, v in zip(components(self.spec), self.comps):
            ops = comp_ops(c)
            if isinstance(c, PrimeField):
                rats.append(v)
            elif isinstance(c, PiExtension):
                if any(v[1:]):
                    return False
                rats.append(v[0])
            else:
                return False
        return len(set(rats)) == 1

    def __repr__(self):
        return f"<{format_element(self)} in {self.spec}>"


def _min_prec(a: Prec, b: Prec) -> Prec:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _comp_mul(comp, x, px, y, py):
    ops = comp_ops(comp)
    v = ops.mul(x, y)
    if px is None and py is None:
        return v, None
    vx, vy = ops.val(x), ops.val(y)
    cands = []
    if px is not None:
        cands.append(px + (vy if vy is not None else py))
    if py is not None:
        cands.append(py + (vx if vx is not None else px))
    if px is not None and py is not None:
        cands.append(px + py)
    p = min(cands)
    vt = ops.truncate(v, p)
    if vx is not None and vy is not None and vx + vy >= p:
        raise PrecisionError(
            f"product known to fewer than 1 digit (valuation {vx + vy}, precision {p})")
    return vt, p


# ---------------------------------------------------------------------------
# duality pairing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitRoot:
    """Exact root of unity e^(2 pi i angle), angle a fraction of a turn."""

    angle: Fraction

    def __post_init__(self):
        object.__setattr__(self, "angle", self.angle % 1)

    def __mul__(self, other: "UnitRoot") -> "UnitRoot":
        return UnitRoot(self.angle + other.angle)

    def conj(self) -> "UnitRoot":
        return UnitRoot(-self.angle)

    def is_one(self) -> bool:
        return self.angle == 0

    def to_cyclo(self) -> Cyclo:
        return Cyclo.root(self.angle)

    def to_complex(self) -> complex:
        return self.to_cyclo().to_complex()


ONE_ROOT = UnitRoot(Fraction(0))


def pairing(x: GroupElement, gamma: GroupElement) -> UnitRoot:
    """(x, gamma) = product over components of chi_i(x_i * gamma_i)."""
    if x.spec != gamma.spec:
        raise SpecMismatchError(f"{x.spec} vs {gamma.spec}")
    angle = Fraction(0)
    for c, xv, xp, gv, gp in zip(components(x.spec), x.comps, x.precs,
                                 gamma.comps, gamma.precs):
        ops = comp_ops(c)
        v, p = _comp_mul(c, xv, xp, gv, gp)
        if p is not None and p < -different_exponent(c):
            raise PrecisionError(
                f"pairing needs the product known below {-different_exponent(c)}, "
                f"got precision {p}")
        angle += ops.char_angle(v)
    return UnitRoot(angle)


# ---------------------------------------------------------------------------
# monomial automorphisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Automorphism:
    """x -> u * pi^(-shift) * x per component; expansive iff every shift >= 1."""

    spec: GroupSpec
    shifts: Tuple[int, ...]
    units: Tuple = ()

    def __post_init__(self):
        cs = components(self.spec)
        if len(self.shifts) != len(cs):
            raise SpecMismatchError("one valuation shift per component required")
        units = self.units
        if not units:
            units = tuple(comp_ops(c).one for c in cs)
            object.__setattr__(self, "units", units)
        for c, u in zip(cs, units):
            if not comp_ops(c).unit_ok(u):
                raise ValidationError(f"unsupported unit {u!r} for component {c}")

    @classmethod
    def scale(cls, spec: GroupSpec, shifts: Union[int, Sequence[int]]) -> "Automorphism":
        n = len(components(spec))
        if isinstance(shifts, int):
            shifts = (shifts,) * n
        return cls(spec, tuple(shifts))

    def apply(self, x: GroupElement) -> "GroupElement":
        if x.spec != self.spec:
            raise SpecMismatchError(f"{x.spec} vs {self.spec}")
        vals, precs = [], []
        for c, v, p, a, u in zip(components(self.spec), x.comps, x.precs,
                                 self.shifts, self.units):
            ops = comp_ops(c)
            vals.append(ops.mul(u, ops.scale_pi(v, -a)))
            precs.append(None if p is None else p - a)
        return GroupElement(self.spec, tuple(vals), tuple(precs))

    def adjoint(self) -> "Automorphism":
        # multiplication maps are self-adjoint under the trace duality
        return self

    def modulus(self) -> Fraction:
        m = Fraction(1)
        for c, a in zip(components(self.spec), self.shifts):
            m *= Fraction(c.p) ** a
        return m

    def inverse(self) -> "Automorphism":
        units = tuple(comp_ops(c).unit_inv(u)
                      for c, u in zip(components(self.spec), self.units))
        return Automorphism(self.spec, tuple(-a for a in self.shifts), units)

    def __pow__(self, n: int) -> "Automorphism":
        base = self if n >= 0 else self.inverse()
        cs = components(self.spec)
        units = []
        for c, u in zip(cs, base.units):
            ops = comp_ops(c)
            acc = ops.one
            for _ in range(abs(n)):
                acc = ops.mul(acc, u)
            units.append(acc)
        return Automorphism(self.spec, tuple(a * abs(n) for a in base.shifts),
                            tuple(units))

    def compose(self, other: "Automorphism") -> "Automorphism":
        if self.spec != other.spec:
            raise SpecMismatchError("compose across different groups")
        units = tuple(comp_ops(c).mul(u1, u2)
                      for c, u1, u2 in zip(components(self.spec), self.units, other.units))
        return Automorphism(self.spec, tuple(a + b for a, b in zip(self.shifts, other.shifts)),
                            units)

    def is_expansive(self) -> bool:
        return all(a >= 1 for a in self.shifts)


@dataclass(frozen=True)
class ExpansiveReport:
    expansive: bool
    grows_h: bool            # H properly contained in AH
    trivial_core: bool       # intersection of A^n H over n <= 0 is {0}
    shifts: Tuple[int, ...]
    depth_checked: int
    dual_exhaustion: Tuple[Tuple[int, int], ...]  # (test depth d, n with pi^-d in (A*)^n Hperp)
    witness: Optional[GroupElement]  # nonzero element of the core, when not expansive


def expansive_report(auto: Automorphism, depth: int = 8) -> ExpansiveReport:
    """Symbolic verdict plus a finite-depth check of the dual exhaustion."""
    cs = components(auto.spec)
    grows = all(a >= 0 for a in auto.shifts) and any(a > 0 for a in auto.shifts)
    trivial = all(a >= 1 for a in auto.shifts)
    expansive = grows and trivial
    witness = None
    if not trivial:
        i = next(idx for idx, a in enumerate(auto.shifts) if a < 1)
        items = [[] for _ in cs]
        items[i] = [(0, 1)]
        witness = GroupElement.from_digits(auto.spec, items if isinstance(auto.spec, Product) else items[0])
    exhaustion = []
    if expansive:
        for d in range(depth + 1):
            # smallest n with the depth-d test point inside (A*)^n Hperp
            n = max(math.ceil((d - different_exponent(c)) / a)
                    for c, a in zip(cs, auto.shifts))
            exhaustion.append((d, max(n, 0)))
    return ExpansiveReport(expansive, grows, trivial, auto.shifts, depth,
                           tuple(exhaustion), witness)


# ---------------------------------------------------------------------------
# coset representatives of G/H
# ---------------------------------------------------------------------------

def coset_reps(spec: GroupSpec, count: int) -> list:
    """First `count` representatives of G/H: digit strings at negative
    positions, enumerated by depth then lexicographically."""
    cs = components(spec)
    out = [GroupElement.zero(spec)]
    depth = 1
    while len(out) < count:
        per_comp = []
        for c in cs:
            combos = [tuple()]
            alts = []
            for digs in itertools.product(range(c.p), repeat=depth):
                alts.append(tuple((-depth + i, d) for i, d in enumerate(digs) if d))
            per_comp.append(alts)
        fresh = []
        for choice in itertools.product(*per_comp):
            if all(all(pos > -depth for pos, _ in items) for items in choice):
                continue  # seen at a smaller depth
            fresh.append(choice)
        fresh.sort()
        for choice in fresh:
            items = list(choice)
            out.append(GroupElement.from_digits(
                spec, items if isinstance(spec, Product) else items[0]))
            if len(out) >= count:
                break
        depth += 1
    return out[:count]


def coset_canonical(x: GroupElement) -> GroupElement:
    """Canonical representative of [x] in G/H: digits at negative positions,
    returned exact (the representative is a chosen element, not a truncation)."""
    return x.truncate(0).as_exact()


# ---------------------------------------------------------------------------
# digit-string literals
# ---------------------------------------------------------------------------

_LIT = re.compile(r"^\(([^|()]*)\|([^|()]*)\)@(\d+)$")


def _parse_scalar(comp: ScalarSpec, text: str) -> Tuple:
    text = text.strip()
    m = _LIT.match(text)
    ops = comp_ops(comp)
    if m:
        neg, pos, base = m.group(1).split(), m.group(2).split(), int(m.group(3))
        if base != comp.p:
            raise ValidationError(f"literal base {base} does not match {comp}")
        items = [(-len(neg) + i, int(d)) for i, d in enumerate(neg)]
        items += [(i, int(d)) for i, d in enumerate(pos)]
        for _, d in items:
            if not 0 <= d < comp.p:
                raise ValidationError(f"digit {d} out of range in {text!r}")
        return ops.from_digits(items)
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"cannot parse element literal {text!r}")
    return ops.from_rational(q)


def parse_element(spec: GroupSpec, text: str) -> GroupElement:
    """Parse a digit-string literal "(.. | ..)@q" or a rational string."""
    cs = components(spec)
    if isinstance(spec, Product):
        parts = [p.strip() for p in text.split(" x ")]
        if len(parts) == 1 and not _LIT.match(parts[0]):
            return GroupElement.from_rational(spec, Fraction(parts[0]))
        if len(parts) != len(cs):
            raise ValidationError(
                f"expected {len(cs)} component literals joined by ' x ', got {text!r}")
        vals = tuple(_parse_scalar(c, p) for c, p in zip(cs, parts))
        return GroupElement(spec, vals, (None,) * len(cs))
    return GroupElement(spec, (_parse_scalar(spec, text),), (None,))


def _format_scalar(comp: ScalarSpec, value, prec: Prec) -> str:
    ops = comp_ops(comp)
    hi = prec
    marker = ""
    if hi is None:
        end = _terminal_position(comp, value)
        if end is None:
            hi = max((ops.val(value) or 0) + 12, 1)  # repr only; not parseable back
            marker = " ..."
        else:
            hi = end
    dg = ops.digits(value, None, max(hi, 0))
    lo = min(list(dg) + [0]) if dg else 0
    neg = " ".join(str(dg.get(n, 0)) for n in range(lo, 0))
    pos = " ".join(str(dg.get(n, 0)) for n in range(0, max(hi, 0)))
    return f"({neg}|{pos}{marker})@{comp.p}"


def _terminal_position(comp: ScalarSpec, value) -> Optional[int]:
    """One past the last nonzero digit when the expansion terminates, else None."""

    def frac_end(p: int, x: Fraction) -> Optional[int]:
        if not x:
            return 0
        if x < 0:
            return None
        den = x.denominator
        k = 0
        while den % p == 0:
            den //= p
            k += 1
        if den != 1:
            return None
        m = int(x * p ** k)
        hi = -k
        while m:
            m //= p
            hi += 1
        return hi

    if isinstance(comp, PrimeField):
        return frac_end(comp.p, value)
    if isinstance(comp, LaurentField):
        return value[-1][0] + 1 if value else 0
    ends = []
    for i, a in enumerate(value):
        e = frac_end(comp.p, a)
        if e is None:
            return None
        ends.append(comp.ram * (e - 1) + i + 1 if a else 0)
    return max(ends) if ends else 0


def format_element(x: GroupElement) -> str:
    parts = [_format_scalar(c, v, p)
             for c, v, p in zip(components(x.spec), x.comps, x.precs)]
    return " x ".join(parts)
