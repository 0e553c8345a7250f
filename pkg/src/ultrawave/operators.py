"""Weight functions, wavelet symbols, and exact character integrals.

Every inner product the library needs reduces to integrals of
(constant) x (character) over balls, where the character integral over
c + (A*)^(-k) Hperp is pairing(x, c) * |A|^(-k) when x lies in A^k H and 0
otherwise.  Wavelet values and analysis coefficients are assembled from
these, so Gram matrices and transforms are exact cyclotomic numbers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .balls import BallSet, CosetScheme, DualLattice, coset_refine
from .cyclotomic import Cyclo, Scaled
from .errors import RefinementNeededError, SpecMismatchError, ValidationError
from .groups import (
    GroupElement,
    UnitRoot,
    coset_canonical,
    components,
    different_exponent,
    pairing,
)


def in_group_ball(lattice: DualLattice, x: GroupElement, k: int) -> bool:
    """Membership of x in A^k H (the annihilator of (A*)^(-k) Hperp)."""
    return all(v is None or v >= -k * a
               for v, a in zip(x.valuation(), lattice.shifts))


def outer_exponent(lattice: DualLattice, gamma: GroupElement) -> int:
    """Smallest j with gamma in (A*)^j Hperp (negative when gamma is deep)."""
    j = None
    for c, v, a in zip(lattice.comps, gamma.valuation(), lattice.shifts):
        if v is None:
            continue
        need = -((v + different_exponent(c)) // a)  # ceil((-r - v)/a)
        j = need if j is None else max(j, need)
    return 0 if j is None else j


@dataclass(frozen=True)
class WeightFunction:
    """w_[s](gamma) = conj((s, eta(gamma))): the unimodular translation weight."""

    scheme: CosetScheme
    s: GroupElement

    def __post_init__(self):
        object.__setattr__(self, "s", coset_canonical(self.s))

    def __call__(self, gamma: GroupElement) -> UnitRoot:
        return pairing(self.s, self.scheme.eta(gamma)).conj()


def weight_eval(w: WeightFunction, gamma: GroupElement) -> UnitRoot:
    return w(gamma)


def char_integral(x: GroupElement, xset: BallSet) -> Cyclo:
    """Integral over the ball set of the character gamma -> (x, gamma)."""
    lattice = xset.lattice
    if x.spec != lattice.spec:
        raise SpecMismatchError("character argument from a different group")
    terms = []
    for ball in xset:
        if in_group_ball(lattice, x, ball.scale):
            root = pairing(x, ball.center())
            terms.append((root.angle, lattice.measure_of_scale(ball.scale)))
    return Cyclo(terms)


class WaveletSymbol:
    """Frequency-side data of a dilated translated wavelet.

    The Fourier transform of the represented function is
    |A|^(-a/2) * 1_Omega((A*)^(-a) gamma) * conj((s, eta((A*)^(-a) gamma))).
    """

    __slots__ = ("scheme", "omega", "dil", "shift", "_pieces")

    def __init__(self, scheme: CosetScheme, omega: BallSet, dil: int = 0,
                 shift: Optional[GroupElement] = None):
        if omega.lattice != scheme.lattice:
            raise SpecMismatchError("omega lives on a different scale chain")
        self.scheme = scheme
        self.omega = omega
        self.dil = dil
        if shift is None:
            shift = GroupElement.zero(scheme.lattice.spec)
        self.shift = coset_canonical(shift)
        self._pieces = None

    @property
    def lattice(self) -> DualLattice:
        return self.scheme.lattice

    def index(self):
        return (self.dil, self.lattice.key_of(self.shift, 0),
                tuple(b.sort_key() for b in self.omega))

    def pieces(self) -> List[Tuple[GroupElement, BallSet]]:
        """Coset refinement of omega, cached; wavelet values sum over these."""
        if self._pieces is None:
            self._pieces = coset_refine(self.omega, self.scheme)
        return self._pieces

    def min_constancy_exponent(self) -> int:
        """Smallest K with the wavelet constant on cosets of A^(-K) H."""
        m = None
        for _, piece in self.pieces():
            for ball in piece:
                j = outer_exponent(self.lattice, ball.center())
                cand = min(ball.scale, -j)
                m = cand if m is None else min(m, cand)
        if m is None:
            return self.dil
        return self.dil - m

    def eval(self, x: GroupElement) -> Scaled:
        """Exact time-domain value at x via the inverse transform."""
        lattice = self.lattice
        y = (lattice.auto ** self.dil).apply(x) - self.shift
        total = Cyclo()
        for sigma, piece in self.pieces():
            ci = char_integral(y, piece)
            if ci.terms:
                total = total + Cyclo.root(pairing(self.shift, sigma).angle) * ci
        return Scaled(lattice.modulus(), self.dil, total)

    def __repr__(self):
        return (f"WaveletSymbol(dil={self.dil}, shift={self.shift!r}, "
                f"omega={self.omega!r})")


def wavelet_eval(symbol: WaveletSymbol, x: GroupElement) -> Scaled:
    return symbol.eval(x)


def analysis_coeff(signal, symbol: WaveletSymbol) -> Scaled:
    """<f, psi> as an exact finite sum over the signal's cells.

    Exact because the wavelet is constant on cells at or below its constancy
    scale; raises RefinementNeededError when the signal's cells are too coarse.
    """
    need = symbol.min_constancy_exponent()
    if signal.K < need:
        raise RefinementNeededError(
            f"signal constant on A^-{signal.K} H cells, wavelet needs K >= {need}")
    lattice = symbol.lattice
    cell_measure = Fraction(1) / Fraction(lattice.modulus()) ** signal.K
    core = Cyclo()
    for key, value in signal.items():
        psi = symbol.eval(signal.cell_center(key))
        if psi.core.terms:
            core = core + value * psi.core.conj()
    return Scaled(lattice.modulus(), symbol.dil, core * cell_measure)
