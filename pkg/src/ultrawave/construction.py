"""The wavelet-set iteration: translation maps, validated inputs, the
set recursion with exact truncation accounting, and closed-form
stabilization detection.

The recursion needs the union over n >= 1 of (A*)^(-n) of the current
total set.  That union is infinite; it is accumulated up to a bound and
certified complete relative to the sets it will be intersected with: all
deeper dilates lie inside the enclosing ball E = (A*)^(nb - M) applied to
nothing but the origin ball, so if each target meets E only inside the
accumulated part, nothing was lost.  The bound is raised until the
certificate holds.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .balls import Ball, BallSet, CosetScheme, DualLattice
from .errors import ConstructionError, SpecMismatchError, ValidationError
from .groups import Automorphism, GroupElement, PrimeField, PiExtension, comp_ops, components


@dataclass(frozen=True)
class MapPiece:
    domain: Ball
    sigma: GroupElement


class TranslationMap:
    """A piecewise translation from W into the annulus (A* W) minus W.

    Each piece moves the coset slice around its domain ball by
    sigma - theta(domain); build through make_translation_map, which
    validates every invariant and names the violated one.
    """

    __slots__ = ("scheme", "M", "pieces", "_shifts", "_canon")

    def __init__(self, scheme: CosetScheme, M: int, pieces: Sequence[MapPiece],
                 _validated: bool = False):
        if not _validated:
            raise ValidationError("use make_translation_map")
        self.scheme = scheme
        self.M = M
        self.pieces = tuple(pieces)
        self._shifts = tuple((p.domain, p.sigma - scheme.theta(p.domain.center()))
                             for p in self.pieces)
        self._canon = self._canonical_pieces()

    def _canonical_pieces(self):
        """Function-identity key: domain balls mapped to their shift, with
        complete sibling families carrying equal shifts merged."""
        lattice = self.scheme.lattice
        entries = {(d.scale, d.key): lattice.key_of(shift, d.scale - 0)
                   for d, shift in self._shifts}
        # merge upward while all |A| children share a shift-key prefix
        changed = True
        m = lattice.modulus()
        while changed:
            changed = False
            groups: dict = {}
            for (s, k) in entries:
                groups.setdefault((s - 1, lattice.truncate_key(k, s - 1)), []).append((s, k))
            for (ps, pk), kids in groups.items():
                if len(kids) != m or ps < 0:
                    continue
                shifts = {entries[kid] for kid in kids}
                if len(shifts) == 1:
                    sh = shifts.pop()
                    for kid in kids:
                        del entries[kid]
                    entries[(ps, pk)] = sh
                    changed = True
        return tuple(sorted(entries.items()))

    def __eq__(self, other):
        return (isinstance(other, TranslationMap)
                and self.scheme.lattice == other.scheme.lattice
                and self.M == other.M and self._canon == other._canon)

    def __hash__(self):
        return hash((self.M, self._canon))

    def apply(self, x: BallSet) -> BallSet:
        lattice = self.scheme.lattice
        if not x.subtract(lattice.w_set(self.M)).is_empty():
            raise ValidationError("translation map applied outside W")
        out = BallSet(lattice)
        for domain, shift in self._shifts:
            piece = x.intersect(BallSet(lattice, [domain]))
            if piece:
                out = out.union(piece.translate(shift))
        return out

    def image_of_w(self) -> BallSet:
        return self.apply(self.scheme.lattice.w_set(self.M))


def make_translation_map(pieces: Sequence[Tuple[Ball, GroupElement]],
                         scheme: CosetScheme, M: int = 0) -> TranslationMap:
    """Validate (domain, sigma) pieces and build the map; raises
    ValidationError naming the broken invariant and the offending pieces."""
    lattice = scheme.lattice
    w = lattice.w_set(M)
    annulus = lattice.annulus(M)
    mapped = [MapPiece(d, s) for d, s in pieces]

    for i, p in enumerate(mapped):
        if p.domain.scale < 0:
            raise ValidationError(f"piece {i}: domain scale {p.domain.scale} < 0")
        if not BallSet(lattice, [p.domain]).subtract(w).is_empty():
            raise ValidationError(f"piece {i}: domain escapes W")
        if not scheme.in_d(p.sigma):
            raise ValidationError(f"piece {i}: sigma is not a D-representative")
        sigma_ball = BallSet(lattice, [lattice.ball(p.sigma, 0)])
        if not sigma_ball.subtract(annulus).is_empty():
            raise ValidationError(f"piece {i}: sigma + Hperp escapes the annulus")

    domains = BallSet(lattice, [p.domain for p in mapped])
    total = sum((p.domain.measure() for p in mapped), Fraction(0))
    if total != domains.measure():
        raise ValidationError("domains overlap")
    if domains != w:
        raise ValidationError("domains do not partition W")

    images = []
    for i, p in enumerate(mapped):
        shift = p.sigma - scheme.theta(p.domain.center())
        images.append(BallSet(lattice, [p.domain]).translate(shift))
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            overlap = images[i].intersect(images[j])
            if overlap:
                raise ValidationError(f"pieces {i} and {j} have overlapping images")
    return TranslationMap(scheme, M, mapped, _validated=True)


def haar_map(scheme: CosetScheme, sigma: GroupElement, M: int = 0) -> TranslationMap:
    """gamma -> gamma - sigma'_0 + sigma on all of W, W cut at scale 0."""
    lattice = scheme.lattice
    w = lattice.w_set(M).refine_to(0)
    return make_translation_map([(b, sigma) for b in w], scheme, M)


# ---------------------------------------------------------------------------
# algorithm input
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlgorithmInput:
    scheme: CosetScheme
    maps: Tuple[TranslationMap, ...]
    omegas0: Tuple[BallSet, ...]
    cover_exponent: int = field(default=-1)

    def __post_init__(self):
        from .verification import check_congruence  # verification has no construction dep
        lattice = self.scheme.lattice
        if not self.maps or len(self.maps) != len(self.omegas0):
            raise ValidationError("need one translation map per initial set")
        M = self.maps[0].M
        for t in self.maps:
            if t.scheme.lattice != lattice or t.M != M:
                raise SpecMismatchError("maps disagree on scheme or W exponent")
        w = lattice.w_set(M)
        for j, om in enumerate(self.omegas0):
            if not om.subtract(w).is_empty():
                raise ValidationError(f"Omega_{j + 1},0 escapes W")
            witness = check_congruence(om, self.scheme)
            if witness.defect_measure != 0:
                raise ValidationError(
                    f"Omega_{j + 1},0 is not congruent to Hperp "
                    f"(defect measure {witness.defect_measure})")
        tilde = _union_all(lattice, self.omegas0)
        ell = None
        top = tilde.max_scale()
        for cand in range(0, (top if top is not None else 0) + 1):
            if lattice.ball0_set(cand).subtract(tilde).is_empty():
                ell = cand
                break
        if ell is None:
            raise ValidationError("the initial sets contain no neighborhood of 0")
        object.__setattr__(self, "cover_exponent", ell)
        for j in range(len(self.maps)):
            for k in range(j + 1, len(self.maps)):
                if self.maps[j] == self.maps[k]:
                    if self.omegas0[j].intersect(self.omegas0[k]):
                        raise ValidationError(
                            f"equal maps {j + 1},{k + 1} with overlapping initial sets")
                else:
                    if self.maps[j].image_of_w().intersect(self.maps[k].image_of_w()):
                        raise ValidationError(
                            f"maps {j + 1},{k + 1} have intersecting ranges")

    @property
    def lattice(self) -> DualLattice:
        return self.scheme.lattice

    @property
    def M(self) -> int:
        return self.maps[0].M

    @property
    def N(self) -> int:
        return len(self.maps)


def _union_all(lattice: DualLattice, sets: Sequence[BallSet]) -> BallSet:
    out = BallSet(lattice)
    for s in sets:
        out = out.union(s)
    return out


def _certified_dilation_union(lattice: DualLattice, tilde: BallSet, M: int,
                              targets: Sequence[BallSet]) -> BallSet:
    """union over n = 1..nb of (A*)^(-n) tilde, complete w.r.t. the targets."""
    top = tilde.max_scale()
    if top is None:
        return BallSet(lattice)
    nb = max(top + M + 1, 1)
    for _ in range(12):
        u = BallSet(lattice)
        for n in range(1, nb + 1):
            u = u.union(tilde.dilate(-n))
        enclosing = lattice.ball0_set(nb - M)
        if all(t.intersect(enclosing).subtract(u).is_empty() for t in targets):
            return u
        nb += 2
    raise ConstructionError("could not certify the dilation-union truncation")


# ---------------------------------------------------------------------------
# the iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationState:
    inp: AlgorithmInput
    m: int
    omegas: Tuple[BallSet, ...]
    lambdas: Tuple[Tuple[BallSet, ...], ...]  # per j, entries m = 1..

    @classmethod
    def initial(cls, inp: AlgorithmInput) -> "IterationState":
        return cls(inp, 0, tuple(inp.omegas0), tuple(() for _ in inp.maps))


def step(state: IterationState, check_invariants: bool = True) -> IterationState:
    """One pass of the set recursion, as exact ball sets."""
    inp = state.inp
    lattice = inp.lattice
    tilde = _union_all(lattice, state.omegas)
    u = _certified_dilation_union(lattice, tilde, inp.M, state.omegas)
    new_omegas: List[BallSet] = []
    new_lambdas: List[Tuple[BallSet, ...]] = []
    for j, (om, t_map) in enumerate(zip(state.omegas, inp.maps)):
        lam = om.intersect(u)
        if state.m == 0:
            earlier = _union_all(lattice, state.omegas[:j])
            lam = lam.union(om.intersect(earlier))
        moved = t_map.apply(lam)
        new_om = om.subtract(lam).union(moved)
        new_omegas.append(new_om)
        new_lambdas.append(state.lambdas[j] + (lam,))
    out = IterationState(inp, state.m + 1, tuple(new_omegas), tuple(new_lambdas))
    if check_invariants:
        _assert_step_invariants(out)
    return out


def _assert_step_invariants(state: IterationState) -> None:
    inp = state.inp
    lattice = inp.lattice
    annulus = lattice.annulus(inp.M)
    tilde = _union_all(lattice, state.omegas)
    for j, (om, history, t_map) in enumerate(zip(state.omegas, state.lambdas, inp.maps)):
        om0 = inp.omegas0[j]
        cum = _union_all(lattice, history)
        if not cum.subtract(om0).is_empty():
            raise ConstructionError(f"Lambda_{j + 1} escapes Omega_{j + 1},0")
        if not om.subtract(annulus.union(om0)).is_empty():
            raise ConstructionError(f"Omega_{j + 1},{state.m} escapes annulus + Omega_0")
        if om.measure() != 1:
            raise ConstructionError(
                f"measure(Omega_{j + 1},{state.m}) = {om.measure()} != 1")
        rebuilt = om0.subtract(cum).union(t_map.apply(cum))
        if rebuilt != om:
            raise ConstructionError(f"telescoped identity failed for j={j + 1}")
        u = _certified_dilation_union(lattice, tilde, inp.M, [cum])
        bound = history[0].union(u)
        if not cum.subtract(bound).is_empty():
            raise ConstructionError(f"tail inclusion bound failed for j={j + 1}")


# ---------------------------------------------------------------------------
# self-similarity detection and stabilization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SelfSimilarity:
    """Lambda_(m+period) = shift_c + (A*)^(-period) Lambda_m per chain c."""

    period: int
    start: int
    shifts: Tuple[GroupElement, ...]
    vanished: bool = False
    limit_points: Tuple[Optional[GroupElement], ...] = ()

    def contraction(self, lattice: DualLattice) -> Fraction:
        return Fraction(1) / Fraction(lattice.modulus()) ** self.period


def _linear_limit(lattice: DualLattice, gamma: GroupElement, period: int):
    """Solve x = gamma + (A*)^(-period) x when the action is rational."""
    auto = lattice.auto ** (-period)
    vals = []
    for c, g, a, u in zip(lattice.comps, gamma.comps, auto.shifts, auto.units):
        ops = comp_ops(c)
        if isinstance(c, PrimeField):
            s = u * Fraction(c.p) ** (-a)
            vals.append(g / (1 - s))
        elif isinstance(c, PiExtension) and (-a) % c.ram == 0:
            s = u[0] * Fraction(c.p) ** ((-a) // c.ram)
            vals.append(tuple(q / (1 - s) for q in g))
        else:
            return None
    return GroupElement(lattice.spec, tuple(vals), (None,) * len(vals))


def detect_self_similarity(lattice: DualLattice, lambdas: Sequence[BallSet],
                           max_period: int = 2) -> Optional[SelfSimilarity]:
    """Affine recursion detector over the Lambda history; None when no
    pattern verifies across all available iterates."""
    total = len(lambdas)
    if total < 3:
        return None
    for i in range(total):
        if all(l.is_empty() for l in lambdas[i:]) and total - i >= 2:
            return SelfSimilarity(1, i + 1, (GroupElement.zero(lattice.spec),),
                                  vanished=True)
    for period in range(1, max_period + 1):
        for start in (1, 2, 3):
            last_checkable = total - period
            if last_checkable < start + period - 1 or total - start + 1 < period + 2:
                continue
            shifts: List[GroupElement] = []
            ok = True
            for c in range(period):
                m0 = start + c
                base = lambdas[m0 - 1].dilate(-period)
                target = lambdas[m0 + period - 1]
                if base.is_empty() or target.is_empty() or len(base) != len(target):
                    ok = False
                    break
                shifts.append(target.balls[0].center() - base.balls[0].center())
            if not ok:
                continue
            for m in range(start, last_checkable + 1):
                gamma = shifts[(m - start) % period]
                if lambdas[m - 1].dilate(-period).translate(gamma) != lambdas[m + period - 1]:
                    ok = False
                    break
            if ok:
                limits = tuple(_composite_limit(lattice, shifts, period, c)
                               for c in range(period))
                return SelfSimilarity(period, start, tuple(shifts),
                                      limit_points=limits)
    return None


def _composite_limit(lattice: DualLattice, shifts: Sequence[GroupElement],
                     period: int, chain: int) -> Optional[GroupElement]:
    """Limit point of chain c: fixed point of the period-composed affine map.

    Chain c steps by x -> shift_c + (A*)^(-period) x, so the one-chain solve
    applies with that chain's own shift.
    """
    return _linear_limit(lattice, shifts[chain], period)


@dataclass(frozen=True)
class JResult:
    omega: BallSet
    lambdas: Tuple[BallSet, ...]
    descriptor: Optional[SelfSimilarity]
    stabilized: Optional[BallSet]
    residual: Optional[Fraction]
    lambda_total: Optional[Fraction]


@dataclass(frozen=True)
class ConstructionResult:
    inp: AlgorithmInput
    m_done: int
    per_j: Tuple[JResult, ...]
    measures: Tuple[Tuple[Fraction, ...], ...]  # per j, nu(Lambda_{j,m})
    decreasing: bool
    warnings: Tuple[str, ...]

    @property
    def omegas(self) -> Tuple[BallSet, ...]:
        return tuple(r.omega for r in self.per_j)

    def residual_bound(self) -> Optional[Fraction]:
        out = Fraction(0)
        for r in self.per_j:
            if r.residual is None:
                return None
            out += r.residual
        return out


def _tail_measure(lattice: DualLattice, desc: SelfSimilarity,
                  lambdas: Sequence[BallSet]) -> Fraction:
    """Exact measure of all Lambda iterates beyond the computed history."""
    if desc.vanished:
        return Fraction(0)
    m = Fraction(lattice.modulus()) ** desc.period
    total = Fraction(0)
    for c in range(period := desc.period):
        # last computed index of chain c
        last = len(lambdas) - ((len(lambdas) - (desc.start + c)) % period)
        if last < desc.start + c:
            continue
        total += lambdas[last - 1].measure() / (m - 1)
    return total


def _stabilize(inp: AlgorithmInput, j: int, lambdas: Sequence[BallSet],
               desc: Optional[SelfSimilarity]):
    """Exact limit set when the Lambda chain provably fills its leftover."""
    lattice = inp.lattice
    om0 = inp.omegas0[j]
    cum = _union_all(lattice, lambdas)
    if desc is None:
        return None, None
    if desc.vanished:
        om = om0.subtract(cum).union(inp.maps[j].apply(cum))
        return om, Fraction(0)
    leftover = om0.subtract(cum)
    if len(leftover) != 1 or desc.period != 1:
        return None, None
    tail = _tail_measure(lattice, desc, lambdas)
    if tail != leftover.measure():
        return None, None
    gamma = desc.shifts[0]
    next_lambda = lambdas[-1].dilate(-1).translate(gamma)
    mapped_leftover = leftover.dilate(-1).translate(gamma)
    if not (next_lambda.subtract(leftover).is_empty()
            and mapped_leftover.subtract(leftover).is_empty()):
        return None, None
    # the future chain exhausts the leftover ball up to its limit point
    lam_inf = cum.union(leftover)
    om = om0.subtract(lam_inf).union(inp.maps[j].apply(lam_inf))
    return om, leftover.measure()


def run(inp: AlgorithmInput, m_max: int, epsilon: Fraction = Fraction(0),
        check_invariants: bool = True, patience: int = 3) -> ConstructionResult:
    """Iterate to m_max or until the Lambda measures stay below epsilon for
    two consecutive steps; assemble exact results and tail accounting."""
    if m_max < 1:
        raise ValidationError("m_max must be >= 1")
    state = IterationState.initial(inp)
    small_streak = 0
    while state.m < m_max:
        state = step(state, check_invariants=check_invariants)
        if epsilon > 0:
            if all(hist[-1].measure() < epsilon for hist in state.lambdas):
                small_streak += 1
                if small_streak >= 2:
                    break
            else:
                small_streak = 0
    measures = tuple(tuple(l.measure() for l in hist) for hist in state.lambdas)
    warnings = []
    decreasing = True
    for j, ms in enumerate(measures):
        window = ms[-patience:]
        if len(window) == patience and all(window[i] <= window[i + 1]
                                           for i in range(patience - 1)) and window[0] > 0:
            decreasing = False
            warnings.append(
                f"Lambda_{j + 1} measures not decreasing over the last {patience} steps")
    per_j = []
    for j in range(inp.N):
        hist = state.lambdas[j]
        desc = detect_self_similarity(inp.lattice, hist)
        stabilized, stab_residual = _stabilize(inp, j, hist, desc)
        if desc is not None:
            tail = _tail_measure(inp.lattice, desc, hist)
            lam_total = sum((l.measure() for l in hist), Fraction(0)) + tail
            residual = stab_residual if stabilized is not None else tail
        else:
            lam_total = None
            residual = None
        per_j.append(JResult(state.omegas[j], hist, desc, stabilized,
                             residual, lam_total))
    return ConstructionResult(inp, state.m, tuple(per_j), measures,
                              decreasing, tuple(warnings))


# ---------------------------------------------------------------------------
# bundled input builders
# ---------------------------------------------------------------------------

def haar_input(scheme: CosetScheme) -> AlgorithmInput:
    """M = 0, N = |A| - 1, T_j = shift by sigma_j, Omega_j0 = Hperp.

    Valid for every group and expansive automorphism: the default data that
    always exists.
    """
    lattice = scheme.lattice
    sigmas = scheme.annulus_reps(0)
    maps = tuple(haar_map(scheme, s) for s in sigmas)
    omegas0 = tuple(lattice.hperp() for _ in sigmas)
    return AlgorithmInput(scheme, maps, omegas0)


def single_wavelet_input(scheme: CosetScheme, sigma_index: int = 0) -> AlgorithmInput:
    """M = 0, N = 1, one Haar-type map to the chosen annulus representative."""
    sigmas = scheme.annulus_reps(0)
    return AlgorithmInput(scheme, (haar_map(scheme, sigmas[sigma_index]),),
                          (scheme.lattice.hperp(),))


def q3_parity_input(scheme: CosetScheme) -> AlgorithmInput:
    """The split map on Q_3: 1+3Z_3 moves by 2/3, the rest of Z_3 by 1/3."""
    lattice = scheme.lattice
    spec = lattice.spec
    if not (isinstance(spec, PrimeField) and spec.p == 3 and lattice.shifts == (1,)):
        raise ValidationError("the parity example is specific to Q_3 with shift 1")
    third = GroupElement.from_rational(spec, Fraction(1, 3))
    two_thirds = GroupElement.from_rational(spec, Fraction(2, 3))
    pieces = [
        (lattice.ball(1, 1), two_thirds),
        (lattice.ball(0, 1), third),
        (lattice.ball(2, 1), third),
    ]
    t_map = make_translation_map(pieces, scheme, 0)
    return AlgorithmInput(scheme, (t_map,), (lattice.hperp(),))
