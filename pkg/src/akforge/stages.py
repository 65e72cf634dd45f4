"""Integer stage sequences for the successive-conjugation scheme.

A stage is the tuple (n, p, q, a, b, s) with a*b - s*q = 1, plus the
auxiliary integer c used to produce the next stage.  Two recurrences are
supported:

* dependent mode   -- b is constant, the two limit angles satisfy an exact
  integer relation (beta = b0 * alpha mod 1);
* independent mode -- b grows by q at each step, and a Katok-Stepin style
  cyclic-approximation certificate witnesses that the pair of limit angles
  generates an ergodic torus translation.

Certified runs pick c large enough that every convergence inequality holds
by construction; the resulting denominators grow super-exponentially, so
everything here is exact integer arithmetic and the giant-number paths
avoid gcd normalization (see ExactRatio).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .circleset import modular_inverse

DEPENDENT = "dependent"
INDEPENDENT = "independent"


def _ceil_log2(x: int) -> int:
    if x < 1:
        raise ValueError("x must be >= 1")
    return (x - 1).bit_length()


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


class ExactRatio:
    """Exact integer ratio that is *not* reduced to lowest terms.

    fractions.Fraction normalizes with gcd on every operation, which is
    prohibitively slow once certified denominators reach millions of bits.
    This class keeps num/den raw; reduce only on demand.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: int, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            num, den = -num, -den
        self.num = num
        self.den = den

    @classmethod
    def of(cls, x) -> "ExactRatio":
        if isinstance(x, ExactRatio):
            return x
        if isinstance(x, int):
            return cls(x, 1)
        if isinstance(x, Fraction):
            return cls(x.numerator, x.denominator)
        raise TypeError(f"cannot make ExactRatio from {type(x)}")

    # CPython big-int division costs O(divisor * quotient) words, so the
    # divisibility fast path is only safe when divisor or quotient is small.
    _DIV_GUARD_BITS = 60_000

    @staticmethod
    def _chain_ok(den_small: int, den_big: int) -> bool:
        g = ExactRatio._DIV_GUARD_BITS
        return (den_small.bit_length() <= g
                or den_big.bit_length() - den_small.bit_length() <= g)

    def __add__(self, other):
        o = ExactRatio.of(other)
        if self.den == o.den:
            return ExactRatio(self.num + o.num, self.den)
        # exact-divisibility fast path: stage denominators form a chain
        if self.den < o.den and self._chain_ok(self.den, o.den) \
                and o.den % self.den == 0:
            k = o.den // self.den
            return ExactRatio(self.num * k + o.num, o.den)
        if o.den < self.den and self._chain_ok(o.den, self.den) \
                and self.den % o.den == 0:
            k = self.den // o.den
            return ExactRatio(self.num + o.num * k, self.den)
        return ExactRatio(self.num * o.den + o.num * self.den, self.den * o.den)

    def __sub__(self, other):
        o = ExactRatio.of(other)
        return self + ExactRatio(-o.num, o.den)

    def __mul__(self, other):
        o = ExactRatio.of(other)
        return ExactRatio(self.num * o.num, self.den * o.den)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return ExactRatio(-self.num, self.den)

    def _cmp(self, other) -> int:
        o = ExactRatio.of(other)
        lhs = self.num * o.den
        rhs = o.num * self.den
        return (lhs > rhs) - (lhs < rhs)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __eq__(self, other):
        if isinstance(other, (ExactRatio, int, Fraction)):
            return self._cmp(other) == 0
        return NotImplemented

    def __hash__(self):
        return hash(self.as_fraction())

    def mod1(self) -> "ExactRatio":
        return ExactRatio(self.num % self.den, self.den)

    def is_integer(self) -> bool:
        return self.num % self.den == 0

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def serialize(self) -> str:
        return f"{self.num}/{self.den}"

    def approx_float(self) -> float:
        """Rounded float value, safe for astronomically large num/den
        (underflows to 0.0 / overflows to inf instead of raising)."""
        if self.num == 0:
            return 0.0
        sign = -1.0 if self.num < 0 else 1.0
        num = abs(self.num)
        # mantissa with ~64 significant bits: value = mantissa * 2^-s
        s = self.den.bit_length() - num.bit_length() + 64
        if s >= 0:
            mantissa = (num << s) // self.den
        else:
            mantissa = num // (self.den << -s)
        try:
            return sign * math.ldexp(float(mantissa), -s)
        except OverflowError:
            return sign * math.inf

    def __repr__(self):
        if max(self.num.bit_length(), self.den.bit_length()) <= 128:
            return f"ExactRatio({self.num}/{self.den})"
        return f"ExactRatio(~{self.approx_float():.6g})"


@dataclass(frozen=True)
class Stage:
    """Arithmetic skeleton of one construction stage.

    c and r are the auxiliary integer and the convergence exponent used to
    produce stage n+1; both are None at the final stage of a run (and r is
    None throughout relaxed runs, which enforce no convergence inequality).
    """

    n: int
    p: int
    q: int
    a: int
    b: int
    s: int
    c: Optional[int] = None
    r: Optional[int] = None

    def __post_init__(self):
        if min(self.p, self.q, self.a, self.b) < 1:
            raise ValueError("p, q, a, b must be positive")
        if self.s == 0:
            raise ValueError("s must be a nonzero integer")
        if self.a * self.b - self.s * self.q != 1:
            raise ValueError(
                f"stage {self.n}: a*b - s*q = "
                f"{self.a * self.b - self.s * self.q} != 1"
            )
        # a*b - s*q = 1 forces gcd(a, q) = gcd(b, q) = 1; no explicit gcd
        # (gcd on certified-size integers is the one slow big-int op).

    def angle(self) -> Fraction:
        return Fraction(self.p, self.q)

    def to_json(self) -> dict:
        rec = {
            "n": self.n,
            "p": str(self.p),
            "q": str(self.q),
            "a": str(self.a),
            "b": str(self.b),
            "s": str(self.s),
            "c": str(self.c) if self.c is not None else None,
        }
        return rec

    @classmethod
    def unchecked(cls, n: int, p: int, q: int, a: int, b: int, s: int,
                  c: Optional[int] = None, r: Optional[int] = None) -> "Stage":
        """Build without invariant validation (for untrusted stage files;
        verify_assumptions reports the failures instead of raising)."""
        obj = object.__new__(cls)
        for k, v in (("n", n), ("p", p), ("q", q), ("a", a), ("b", b),
                     ("s", s), ("c", c), ("r", r)):
            object.__setattr__(obj, k, v)
        return obj

    @classmethod
    def from_json(cls, rec: dict, r: Optional[int] = None,
                  strict: bool = True) -> "Stage":
        make = cls if strict else cls.unchecked
        return make(
            n=int(rec["n"]),
            p=int(rec["p"]),
            q=int(rec["q"]),
            a=int(rec["a"]),
            b=int(rec["b"]),
            s=int(rec["s"]),
            c=int(rec["c"]) if rec.get("c") is not None else None,
            r=r,
        )


@dataclass
class ConstructionPolicy:
    """How stages are generated.

    certified=True picks c_n as the smallest integer satisfying both
    c_n >= (b_{n+1} q_n)^R(n) and c_n >= b_{n+1} 2^{n+1}/epsilon, which
    makes every convergence bound checkable.  certified=False (relaxed)
    uses the small c_overrides so that denominators stay grid-friendly;
    no convergence inequality is then guaranteed.

    R(n) defaults to max(n, 2*(n + L) + 4) where L is a ceil-log2 upper
    bound for ||B_n||_1: a measured value when one is supplied through
    norm_log2_hints, otherwise the symbolic product of the per-stage map
    bounds (b_k q_{k-1})^R(k-1).  The exponent is bumped, if ever needed,
    until (b_{n+1} q_n)^R(n) >= (2^{n+1} q_n^{3/2} ||B_n||_1)^2 holds.
    """

    mode: str = DEPENDENT
    epsilon: Fraction = Fraction(1, 10)
    certified: bool = True
    c_overrides: Tuple[int, ...] = (1,)
    r_function: Optional[Callable[[int], int]] = None
    norm_log2_hints: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (DEPENDENT, INDEPENDENT):
            raise ValueError(f"unknown mode {self.mode!r}")
        self.epsilon = Fraction(self.epsilon)
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    # -- R(n) ------------------------------------------------------------

    def norm_log2_standin(self, n: int, stages: Sequence[Stage]) -> int:
        """Upper bound for ceil(log2 ||B_n||_1); 0 for the identity B_0."""
        if n in self.norm_log2_hints:
            return max(0, self.norm_log2_hints[n])
        total = 0
        for k in range(1, n + 1):
            prev = stages[k - 1]
            if prev.r is None:
                # relaxed history: no symbolic bound is available; fall
                # back to a crude per-map bound (b_k q_{k-1})^k.
                exponent = max(1, k)
            else:
                exponent = prev.r
            total += exponent * _ceil_log2(stages[k].b * prev.q)
        return total

    def r_exponent(self, n: int, stages: Sequence[Stage], b_next: int) -> int:
        st = stages[n]
        if self.r_function is not None:
            r = max(n, self.r_function(n))
        else:
            log_b = self.norm_log2_standin(n, stages)
            r = max(n, 2 * (n + log_b) + 4)
        base = b_next * st.q
        if base < 2:
            raise ValueError("certified mode requires b_{n+1} * q_n >= 2")
        # (b q)^r >= (2^{n+1} q^{3/2} ||B_n||)^2, compared through safe
        # powers of two: lhs >= 2^(r*(bitlen-1)), rhs <= 2^(2n+2+3*bitlen(q)+2L)
        need = 2 * n + 2 + 3 * st.q.bit_length() + 2 * self.norm_log2_standin(n, stages)
        while r * (base.bit_length() - 1) < need:
            r += 1
        return r

    # -- c(n) --------------------------------------------------------------

    def c_value(self, n: int, stages: Sequence[Stage], b_next: int) -> Tuple[int, Optional[int]]:
        if not self.certified:
            idx = min(n, len(self.c_overrides) - 1)
            return int(self.c_overrides[idx]), None
        st = stages[n]
        r = self.r_exponent(n, stages, b_next)
        c_pow = (b_next * st.q) ** r
        c_eps = _ceil_div(b_next * (2 ** (n + 1)) * self.epsilon.denominator,
                          self.epsilon.numerator)
        return max(c_pow, c_eps), r

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": f"{self.epsilon.numerator}/{self.epsilon.denominator}",
            "certified": self.certified,
            "c_overrides": list(self.c_overrides),
        }


def bezout_init(b0: int, q0: int, p0: int) -> Stage:
    """Stage 0 from the seed fraction p0/q0 and multiplier b0.

    a0 is the smallest positive integer with a0*b0 = 1 mod q0 whose Bezout
    cofactor s0 = (a0*b0 - 1)/q0 is nonzero; if the minimal inverse gives
    s0 = 0 (only for b0 = 1), a0 + q0 is used instead.
    """
    if b0 < 1 or q0 < 1 or p0 < 1:
        raise ValueError("b0, q0, p0 must be positive")
    if math.gcd(b0, q0) != 1:
        raise ValueError(f"gcd(b0, q0) = {math.gcd(b0, q0)} != 1")
    a0 = modular_inverse(b0, q0) if q0 > 1 else 1
    if a0 == 0:
        a0 = q0
    s0 = (a0 * b0 - 1) // q0
    if s0 == 0:
        a0 += q0
        s0 = (a0 * b0 - 1) // q0
    return Stage(n=0, p=p0, q=q0, a=a0, b=b0, s=s0)


def _with_c(st: Stage, c: int, r: Optional[int]) -> Stage:
    return Stage(n=st.n, p=st.p, q=st.q, a=st.a, b=st.b, s=st.s, c=c, r=r)


def step_dependent(st: Stage, policy: ConstructionPolicy,
                   stages: Optional[Sequence[Stage]] = None) -> Tuple[Stage, Stage]:
    """One dependent-mode step; returns (stage n with c filled, stage n+1)."""
    stages = list(stages) if stages is not None else [st]
    b_next = st.b
    c, r = policy.c_value(st.n, stages, b_next)
    a_next = st.a + st.s * c * st.q
    q_next = st.q * st.s * (1 + c * st.b)
    if q_next <= st.q:
        raise ValueError("q_{n+1} <= q_n: invalid stage or c")
    p_next = st.p * (q_next // st.q) + 1
    nxt = Stage(n=st.n + 1, p=p_next, q=q_next, a=a_next, b=b_next, s=1)
    return _with_c(st, c, r), nxt


def step_independent(st: Stage, policy: ConstructionPolicy,
                     stages: Optional[Sequence[Stage]] = None) -> Tuple[Stage, Stage]:
    """One independent-mode step (b grows by q); requires s_n = 1."""
    if st.s != 1:
        raise ValueError(
            f"independent step needs s_n = 1: with s_n = {st.s} the identity "
            f"a_nb_n - q_n = 1 fails, so a_{{n+1}}b_{{n+1}} - q_{{n+1}} = 1 "
            f"cannot be arranged by this recurrence; choose a seed with s0 = 1"
        )
    stages = list(stages) if stages is not None else [st]
    b_next = st.b + st.q
    c, r = policy.c_value(st.n, stages, b_next)
    a_next = st.a + st.s * c * st.q
    q_next = st.s * st.q * (1 + c * st.b + c * st.q + st.a)
    if q_next <= st.q:
        raise ValueError("q_{n+1} <= q_n: invalid stage or c")
    p_next = st.p * (q_next // st.q) + 1
    nxt = Stage(n=st.n + 1, p=p_next, q=q_next, a=a_next, b=b_next, s=1)
    return _with_c(st, c, r), nxt


def generate(policy: ConstructionPolicy, seed_p: int, seed_q: int, seed_b: int,
             steps: int) -> List[Stage]:
    """Seed with bezout_init, then apply `steps` recurrence steps."""
    stages = [bezout_init(seed_b, seed_q, seed_p)]
    step_fn = step_dependent if policy.mode == DEPENDENT else step_independent
    for _ in range(steps):
        cur, nxt = step_fn(stages[-1], policy, stages)
        stages[-1] = cur
        stages.append(nxt)
    return stages


# ---------------------------------------------------------------------------
# verification of the four assumptions (plus the derived divisibility)
# ---------------------------------------------------------------------------

@dataclass
class PairCheck:
    n: int
    primality: bool           # a_n b_n - s_n q_n = 1
    monotonicity: bool        # q_n | q_{n+1} and q_n < q_{n+1}
    isomorphism: bool         # q_n | a_{n+1} - a_n
    convergence: Optional[bool]  # 0 < |dp| <= 1/(b_{n+1} q_n)^R(n); None if relaxed
    convergence_nonzero: bool    # 0 < |p_{n+1}/q_{n+1} - p_n/q_n|
    b_divisibility: bool      # q_n | b_{n+1} - b_n

    def all_pass(self) -> bool:
        checks = [self.primality, self.monotonicity, self.isomorphism,
                  self.convergence_nonzero, self.b_divisibility]
        if self.convergence is not None:
            checks.append(self.convergence)
        return all(checks)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "primality": self.primality,
            "monotonicity": self.monotonicity,
            "isomorphism": self.isomorphism,
            "convergence": self.convergence,
            "convergence_nonzero": self.convergence_nonzero,
            "b_divisibility": self.b_divisibility,
        }


def verify_assumptions(stages: Sequence[Stage],
                       policy: ConstructionPolicy) -> List[PairCheck]:
    """Exact per-pair checks; failures are recorded, never raised."""
    if len(stages) < 2:
        raise ValueError("need at least 2 stages")
    out = []
    for st, nxt in zip(stages, stages[1:]):
        primality = (st.a * st.b - st.s * st.q == 1) and (
            nxt.a * nxt.b - nxt.s * nxt.q == 1)
        monotonicity = (nxt.q % st.q == 0) and (st.q < nxt.q)
        isomorphism = (nxt.a - st.a) % st.q == 0
        b_div = (nxt.b - st.b) % st.q == 0
        # |p'/q' - p/q| = |p' q - p q'| / (q q')
        dnum = abs(nxt.p * st.q - st.p * nxt.q)
        nonzero = dnum > 0
        convergence = None
        if policy.certified:
            r = st.r if st.r is not None else policy.r_exponent(
                st.n, list(stages[: st.n + 1]), nxt.b)
            bound_base = (nxt.b * st.q) ** r
            # dnum/(q q') <= 1/base  <=>  dnum * base <= q q'
            convergence = nonzero and (dnum * bound_base <= st.q * nxt.q)
        out.append(PairCheck(
            n=st.n, primality=primality, monotonicity=monotonicity,
            isomorphism=isomorphism, convergence=convergence,
            convergence_nonzero=nonzero, b_divisibility=b_div))
    return out


# ---------------------------------------------------------------------------
# limit angles
# ---------------------------------------------------------------------------

@dataclass
class LimitAngles:
    """Enclosures [lo, hi] containing the limit angles mod 1.

    lo is reduced into [0, 1); hi = lo + width may exceed 1, meaning the
    arc wraps.  In certified runs the width includes a rigorous tail bound
    (geometric, from the convergence inequality), and enclosures shrink
    and nest as stages are appended.  Relaxed runs report only the finite
    telescoping width and are flagged uncertified.
    """

    alpha_lo: ExactRatio
    alpha_hi: ExactRatio
    beta_lo: ExactRatio
    beta_hi: ExactRatio
    certified_tail: bool

    def alpha_width(self) -> ExactRatio:
        return self.alpha_hi - self.alpha_lo

    def beta_width(self) -> ExactRatio:
        return self.beta_hi - self.beta_lo

    def alpha_contains(self, x) -> bool:
        d = (ExactRatio.of(x) - self.alpha_lo).mod1()
        return d <= self.alpha_width() or d == 0

    def beta_contains(self, x) -> bool:
        d = (ExactRatio.of(x) - self.beta_lo).mod1()
        return d <= self.beta_width() or d == 0

    def to_json(self) -> dict:
        return {
            "alpha_lo": self.alpha_lo.serialize(),
            "alpha_hi": self.alpha_hi.serialize(),
            "beta_lo": self.beta_lo.serialize(),
            "beta_hi": self.beta_hi.serialize(),
            "alpha_approx": self.alpha_lo.approx_float(),
            "beta_approx": self.beta_lo.approx_float(),
            "certified_tail": self.certified_tail,
        }


def beta_partial(stages: Sequence[Stage], upto: Optional[int] = None) -> ExactRatio:
    """Telescoped value of p_n b_n / q_n mod 1 at stage `upto` (default last).

    Uses the exact telescoping identity: the increment from stage k to k+1
    equals b_{k+1}/q_{k+1} mod 1, because q_k divides both b_{k+1} - b_k
    and a_{k+1} - a_k.
    """
    if upto is None:
        upto = len(stages) - 1
    v = ExactRatio(stages[0].p * stages[0].b, stages[0].q)
    for k in range(upto):
        v = v + ExactRatio(stages[k + 1].b, stages[k + 1].q)
    return v


def _tail_bounds(stages: Sequence[Stage], policy: ConstructionPolicy
                 ) -> Tuple[ExactRatio, ExactRatio]:
    """Certified bounds for sum_{k>=N} 1/q_{k+1} and sum_{k>=N} b_{k+1}/q_{k+1}.

    The first omitted term is at most 1/(b_{N+1} q_N)^R(N) and successive
    terms at least halve, so twice the first-term bound encloses the whole
    tail.  The exponent is capped at 2 to keep the bound representable even
    when R(N) would produce numbers of billions of bits; any smaller
    exponent only weakens (never invalidates) the bound.
    """
    last = stages[-1]
    if policy.mode == DEPENDENT:
        b_next = last.b
    else:
        b_next = last.b + last.q
    r = policy.r_exponent(last.n, stages, b_next)
    huge = b_next.bit_length() + last.q.bit_length() > 150_000
    e = 1 if huge else min(r, 2)
    if e == 1:
        # 2b/(bq) = 2/q and 2/(bq): no giant powers needed
        return ExactRatio(2, b_next * last.q), ExactRatio(2, last.q)
    tail_alpha = ExactRatio(2, b_next * b_next * last.q * last.q)
    tail_beta = ExactRatio(2, b_next * last.q * last.q)
    return tail_alpha, tail_beta


def limit_angles(stages: Sequence[Stage], policy: ConstructionPolicy) -> LimitAngles:
    """Exact enclosures for alpha = lim p/q and beta = lim p*b/q mod 1."""
    if len(stages) < 2:
        raise ValueError("need at least 2 stages")
    prev, last = stages[-2], stages[-1]
    alpha_lo = ExactRatio(prev.p, prev.q).mod1()
    alpha_inc = ExactRatio(last.p, last.q) - ExactRatio(prev.p, prev.q)

    if policy.certified:
        tail_alpha, tail_beta = _tail_bounds(stages, policy)
    else:
        tail_alpha = tail_beta = ExactRatio(0)

    alpha_hi = alpha_lo + alpha_inc + tail_alpha

    if policy.mode == DEPENDENT:
        # beta = b0 * alpha exactly: scale the alpha enclosure
        b0 = stages[0].b
        beta_lo = (alpha_lo * b0).mod1()
        beta_hi = beta_lo + (alpha_inc + tail_alpha) * b0
    else:
        beta_lo = beta_partial(stages, upto=len(stages) - 2).mod1()
        beta_inc = ExactRatio(last.b, last.q)
        beta_hi = beta_lo + beta_inc + tail_beta
    return LimitAngles(alpha_lo=alpha_lo, alpha_hi=alpha_hi,
                       beta_lo=beta_lo, beta_hi=beta_hi,
                       certified_tail=policy.certified)


# ---------------------------------------------------------------------------
# Katok-Stepin style ergodicity certificate (independent mode)
# ---------------------------------------------------------------------------

@dataclass
class ErgodicityRow:
    n: int
    g: int                       # gcd(p_n, q_n)
    identity_ok: Optional[bool]  # p_{n+1} - (q_{n+1}/q_n) p_n = 1
    g_divides_prev_q: Optional[bool]   # g_{n+1} | q_n  (None at n = 0)
    ratio: ExactRatio            # (q_n/g_n) * [sum 4 b_{k+1}/q_{k+1} + tail]
    diam_bound: ExactRatio       # max(1/b_n, q_{n-1} b_n / q_n)
    boundary_area_ok: Optional[bool]   # 2(1/b_n + g_n b_n/q_n) <= 4

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "g": str(self.g),
            "identity_ok": self.identity_ok,
            "g_divides_prev_q": self.g_divides_prev_q,
            "ratio": self.ratio.serialize(),
            "ratio_approx": self.ratio.approx_float(),
            "diam_bound": self.diam_bound.serialize(),
            "diam_bound_approx": self.diam_bound.approx_float(),
            "boundary_area_ok": self.boundary_area_ok,
        }


@dataclass
class ErgodicityCertificate:
    rows: List[ErgodicityRow]
    tail: ExactRatio
    certified_tail: bool

    def ratios_strictly_decreasing(self) -> bool:
        return all(a.ratio > b.ratio for a, b in zip(self.rows, self.rows[1:]))

    def final_ratio_below(self, threshold) -> bool:
        return self.rows[-1].ratio < ExactRatio.of(threshold)

    def all_divisibility_ok(self) -> bool:
        return all(r.g_divides_prev_q for r in self.rows[1:])

    def to_json(self) -> dict:
        return {
            "rows": [r.to_json() for r in self.rows],
            "tail": self.tail.serialize(),
            "certified_tail": self.certified_tail,
            "ratios_strictly_decreasing": self.ratios_strictly_decreasing(),
        }


def _structural_gcd(p: int, q: int, q_prev: Optional[int], identity_ok: bool) -> int:
    """gcd(p, q), using gcd(p, q/q_prev) = 1 to stay in small integers."""
    if q_prev is not None and identity_ok:
        # p = 1 mod (q/q_prev), so gcd(p, q) = gcd(p, q_prev)
        return math.gcd(p % q_prev, q_prev)
    return math.gcd(p, q)


def torus_ergodicity_certificate(stages: Sequence[Stage],
                                 policy: ConstructionPolicy) -> ErgodicityCertificate:
    """Cyclic-approximation speed certificate for the independent case.

    For each n: g_n = gcd(p_n, q_n), the exact identity
    p_{n+1} - (q_{n+1}/q_n) p_n = 1 (whence g_{n+1} | q_n), and the ratio
    r_n = (q_n / g_n) * sum_{k >= n} 4 b_{k+1}/q_{k+1}, the total measure
    moved at approximation stage n relative to the partition mesh q_n/g_n.
    Ergodicity of the limit translation needs r_n -> 0; the certificate
    reports the exact finite sums (plus a geometric tail bound on
    certified runs).
    """
    if policy.mode != INDEPENDENT:
        raise ValueError("certificate applies to independent-mode stages only")
    if len(stages) < 2:
        raise ValueError("need at least 2 stages")

    n_stages = len(stages)
    identity = [None] * n_stages
    for k in range(n_stages - 1):
        big_q = stages[k + 1].q // stages[k].q
        identity[k + 1] = (stages[k + 1].p - big_q * stages[k].p == 1)

    gs: List[int] = []
    for k, st in enumerate(stages):
        q_prev = stages[k - 1].q if k else None
        gs.append(_structural_gcd(st.p, st.q, q_prev, bool(identity[k])))

    if policy.certified:
        # sum_{k >= N} 4 b_{k+1}/q_{k+1} <= 8 b_{N+1}/(b_{N+1} q_N)^min(R,2);
        # the exponent must be >= 2 here because the ratio multiplies by
        # q_N/g_N.  The default R(N) is always >= 4.
        last = stages[-1]
        b_next = last.b + last.q
        r = policy.r_exponent(last.n, stages, b_next)
        if r < 2:
            raise ValueError("certificate tail needs R(N) >= 2")
        huge = b_next.bit_length() + last.q.bit_length() > 150_000
        den = last.q * last.q if huge else b_next * last.q * last.q
        tail = ExactRatio(8, den)
    else:
        tail = ExactRatio(0)

    # suffix sums of 4 b_{k+1}/q_{k+1} for k = n .. N-2, plus tail
    suffix = tail
    suffixes = [tail] * n_stages
    for k in range(n_stages - 2, -1, -1):
        suffix = suffix + ExactRatio(4 * stages[k + 1].b, stages[k + 1].q)
        suffixes[k] = suffix

    rows = []
    for k, st in enumerate(stages):
        ratio = suffixes[k] * ExactRatio(st.q, gs[k])
        if k == 0:
            diam = max(ExactRatio(1, st.b), ExactRatio(gs[0] * st.b, st.q))
            boundary_ok = None
        else:
            diam = max(ExactRatio(1, st.b),
                       ExactRatio(stages[k - 1].q * st.b, st.q))
            boundary_ok = (ExactRatio(2, st.b)
                           + ExactRatio(2 * gs[k] * st.b, st.q)) <= 4
        rows.append(ErgodicityRow(
            n=k, g=gs[k], identity_ok=identity[k],
            g_divides_prev_q=(stages[k - 1].q % gs[k] == 0) if k else None,
            ratio=ratio, diam_bound=diam, boundary_area_ok=boundary_ok))
    return ErgodicityCertificate(rows=rows, tail=tail,
                                 certified_tail=policy.certified)
