"""Exact complex numbers built from roots of unity.

Every number produced by the library's character sums lives in some
cyclotomic field: a finite sum of rational multiples of exp(2*pi*i*angle)
with rational angles.  Sums are kept formal; zero tests reduce against the
minimal vanishing relations (the prime-power tensor basis of Z[zeta_n]),
so orthogonality checks never touch floating point.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Tuple

Angle = Fraction  # fraction of a full turn, canonically in [0, 1)

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _norm_angle(a: Fraction) -> Fraction:
    return a - (a // 1)


class Cyclo:
    """Formal sum of rational multiples of unit roots, immutable."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[Tuple[Fraction, Fraction]] = ()):
        acc: dict[Fraction, Fraction] = {}
        for angle, coeff in terms:
            if not coeff:
                continue
            a = _norm_angle(Fraction(angle))
            c = acc.get(a)
            if c is None:
                acc[a] = Fraction(coeff)
            else:
                c = c + coeff
                if c:
                    acc[a] = c
                else:
                    del acc[a]
        self._terms = tuple(sorted(acc.items()))

    @classmethod
    def _raw(cls, sorted_terms: tuple) -> "Cyclo":
        obj = cls.__new__(cls)
        obj._terms = sorted_terms
        return obj

    @classmethod
    def rational(cls, q) -> "Cyclo":
        q = Fraction(q)
        return cls._raw(((Fraction(0), q),) if q else ())

    @classmethod
    def root(cls, angle, coeff=1) -> "Cyclo":
        return cls(((Fraction(angle), Fraction(coeff)),))

    @property
    def terms(self) -> tuple:
        return self._terms

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __add__(self, other) -> "Cyclo":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self._terms:
            return other
        if not other._terms:
            return self
        return Cyclo(self._terms + other._terms)

    __radd__ = __add__

    def __neg__(self) -> "Cyclo":
        return Cyclo._raw(tuple((a, -c) for a, c in self._terms))

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "Cyclo":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Cyclo()
            q = Fraction(other)
            return Cyclo._raw(tuple((a, c * q) for a, c in self._terms))
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = []
        for a1, c1 in self._terms:
            for a2, c2 in other._terms:
                out.append((a1 + a2, c1 * c2))
        return Cyclo(out)

    __rmul__ = __mul__

    def conj(self) -> "Cyclo":
        return Cyclo((-a, c) for a, c in self._terms)

    def abs_sq(self) -> "Cyclo":
        return self * self.conj()

    def reduced(self) -> dict:
        """Coordinates in the tensor basis of Z[zeta_n]; {} iff zero.

        n = lcm of angle denominators, n = prod p^m.  Each root splits by
        partial fractions into prime-power roots; exponents k with top
        digit p-1 are rewritten via 1 + zeta^{p^{m-1}} + ... = 0.
        """
        if not self._terms:
            return {}
        n = 1
        for a, _ in self._terms:
            n = n * a.denominator // math.gcd(n, a.denominator)
        primes = _prime_power_split(n)
        coords: dict[tuple, Fraction] = {}
        for a, c in self._terms:
            k = int(a * n)
            parts = []
            for p, pm in primes:
                cof = n // pm
                ki = (k * pow(cof, -1, pm)) % pm
                parts.append(ki)
            # expand factors whose leading digit is p-1
            stack = [(c, tuple(parts))]
            for idx, (p, pm) in enumerate(primes):
                pm1 = pm // p
                nxt = []
                for coeff, key in stack:
                    u, v = divmod(key[idx], pm1)
                    if u < p - 1:
                        nxt.append((coeff, key))
                    else:
                        for u2 in range(p - 1):
                            k2 = key[:idx] + (u2 * pm1 + v,) + key[idx + 1:]
                            nxt.append((-coeff, k2))
                stack = nxt
            for coeff, key in stack:
                cur = coords.get(key, _ZERO) + coeff
                if cur:
                    coords[key] = cur
                else:
                    coords.pop(key, None)
        return coords

    def is_zero(self) -> bool:
        if not self._terms:
            return True
        if len(self._terms) == 1:
            return False  # a single root times a nonzero rational
        return not self.reduced()

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self._terms == other._terms:
            return True
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("Cyclo is unhashable; compare via ==")

    def as_rational(self) -> Optional[Fraction]:
        """The value as a Fraction, or None if not rational."""
        if not self._terms:
            return _ZERO
        if len(self._terms) == 1 and self._terms[0][0] == 0:
            return self._terms[0][1]
        coords = self.reduced()
        triv = None
        for key, coeff in coords.items():
            if any(key):
                return None
            triv = coeff
        return triv if triv is not None else _ZERO

    def to_complex(self) -> complex:
        z = 0j
        for a, c in self._terms:
            z += float(c) * cmath.exp(2j * cmath.pi * float(a))
        return z

    def __repr__(self):
        if not self._terms:
            return "Cyclo(0)"
        bits = [f"{c}*e({a})" for a, c in self._terms]
        return "Cyclo(" + " + ".join(bits) + ")"


def _coerce(x):
    if isinstance(x, Cyclo):
        return x
    if isinstance(x, (int, Fraction)):
        return Cyclo.rational(x)
    return NotImplemented


def _prime_power_split(n: int) -> list:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            pm = 1
            while n % d == 0:
                n //= d
                pm *= d
            out.append((d, pm))
        d += 1
    if n > 1:
        out.append((n, n))
    return out


ZERO = Cyclo()
ONE = Cyclo.rational(1)


class Scaled:
    """A cyclotomic number times an exact half-integer power of a base.

    Wavelet normalisations contribute |A|^{a/2}; the square root never has
    to be evaluated because inner products and energies pair matching
    half-powers.  value = base**(half/2) * core, with even halves folded
    into the core so comparisons are canonical.
    """

    __slots__ = ("base", "half", "core")

    def __init__(self, base: int, half: int, core: Cyclo):
        if half % 2 == 0:
            if half:
                core = core * (Fraction(base) ** (half // 2))
            half = 0
        if core.terms == ():
            half = 0
        self.base = int(base)
        self.half = half
        self.core = core

    @classmethod
    def exact(cls, core: Cyclo, base: int = 1) -> "Scaled":
        return cls(base, 0, core)

    def is_zero(self) -> bool:
        return self.core.is_zero()

    def __add__(self, other: "Scaled") -> "Scaled":
        if isinstance(other, (int, Fraction, Cyclo)):
            other = Scaled(self.base, 0, _coerce(other))
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.half != other.half or (self.half and self.base != other.base):
            raise ValueError("cannot add Scaled values with distinct half-powers")
        return Scaled(self.base, self.half, self.core + other.core)

    def __mul__(self, other) -> "Scaled":
        if isinstance(other, Scaled):
            if self.half and other.half and self.base != other.base:
                raise ValueError("mismatched Scaled bases")
            base = self.base if self.half else other.base
            return Scaled(base, self.half + other.half, self.core * other.core)
        return Scaled(self.base, self.half, self.core * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(self.base, self.half, -self.core)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Cyclo)):
            other = Scaled(self.base, 0, _coerce(other))
        return self + (-other)

    def conj(self) -> "Scaled":
        return Scaled(self.base, self.half, self.core.conj())

    def abs_sq(self) -> Cyclo:
        return self.core.abs_sq() * (Fraction(self.base) ** self.half)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, Cyclo)):
            other = Scaled(self.base, 0, _coerce(other))
        if self.is_zero() and other.is_zero():
            return True
        if self.half != other.half:
            return False
        return self.core == other.core

    def to_complex(self) -> complex:
        return self.core.to_complex() * (self.base ** (self.half / 2.0))

    def __repr__(self):
        if self.half == 0:
            return f"Scaled({self.core!r})"
        return f"Scaled({self.base}^({self.half}/2) * {self.core!r})"
