"""Exact multivariate polynomial and rational-function arithmetic.

Small and self-contained: polynomials are dicts of exponent tuples over
`fractions.Fraction`, rational functions are numerator/denominator pairs
compared by cross-multiplication, and linear algebra is fraction-free
(Bareiss/Montante), so every derived coefficient is exact.
"""

from __future__ import annotations

from fractions import Fraction

__all__ = ["Poly", "RatFunc", "bareiss_inverse", "solve_linear"]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"coefficients must be exact (int/Fraction), got {type(c)!r}")


class Poly:
    """Polynomial in named variables with Fraction coefficients."""

    __slots__ = ("vars", "terms")

    def __init__(self, vars, terms=None):
        self.vars = tuple(vars)
        clean = {}
        for mono, c in (terms or {}).items():
            c = _as_fraction(c)
            if c != 0:
                clean[tuple(mono)] = c
        self.terms = clean

    # ---- constructors -------------------------------------------------
    @classmethod
    def const(cls, vars, c):
        return cls(vars, {(0,) * len(vars): _as_fraction(c)})

    @classmethod
    def var(cls, vars, name):
        vars = tuple(vars)
        i = vars.index(name)
        mono = tuple(1 if j == i else 0 for j in range(len(vars)))
        return cls(vars, {mono: Fraction(1)})

    # ---- predicates ---------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(all(e == 0 for e in m) for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError("not a constant polynomial")
        return next(iter(self.terms.values()), Fraction(0))

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    # ---- arithmetic ---------------------------------------------------
    def _check(self, other: "Poly"):
        if self.vars != other.vars:
            raise ValueError("mixed variable sets")

    def _coerce(self, other):
        if isinstance(other, Poly):
            self._check(other)
            return other
        return Poly.const(self.vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Poly(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return Poly(self.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = Poly.const(self.vars, 1)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Poly.const(self.vars, other)
        return isinstance(other, Poly) and self.vars == other.vars \
            and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # ---- division -----------------------------------------------------
    def _leading(self):
        """Lex-largest monomial and its coefficient."""
        m = max(self.terms)
        return m, self.terms[m]

    def exact_div(self, other: "Poly") -> "Poly":
        """Quotient self / other when it divides exactly; ValueError otherwise."""
        other = self._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = self
        quot = Poly(self.vars, {})
        lm, lc = other._leading()
        while not rem.is_zero:
            rm, rc = rem._leading()
            dm = tuple(a - b for a, b in zip(rm, lm))
            if any(e < 0 for e in dm):
                raise ValueError("not exactly divisible")
            t = Poly(self.vars, {dm: rc / lc})
            quot = quot + t
            rem = rem - t * other
        return quot

    def divides(self, other: "Poly") -> bool:
        try:
            other.exact_div(self)
            return True
        except ValueError:
            return False

    def content(self) -> Fraction:
        """Positive rational content (gcd of coefficients, sign of leading term)."""
        if self.is_zero:
            return Fraction(1)
        from math import gcd
        num = 0
        den = 1
        for c in self.terms.values():
            num = gcd(num, abs(c.numerator))
            den = den * c.denominator // gcd(den, c.denominator)
        cont = Fraction(num, den)
        _, lc = self._leading()
        return cont if lc > 0 else -cont

    # ---- evaluation / display -----------------------------------------
    def evaluate(self, env: dict):
        out = 0
        for m, c in self.terms.items():
            term = c
            for name, e in zip(self.vars, m):
                if e:
                    term = term * env[name] ** e
            out = out + term
        return out

    def subs(self, mapping: dict) -> "Poly":
        """Substitute variables by polynomials (possibly over other variables).

        Every variable must appear in `mapping`; the result lives in the
        variable set of the substituted polynomials.
        """
        polys = [mapping[name] for name in self.vars]
        new_vars = polys[0].vars if polys else ()
        out = Poly(new_vars, {})
        for m, c in self.terms.items():
            term = Poly.const(new_vars, c)
            for p, e in zip(polys, m):
                term = term * p ** e
            out = out + term
        return out

    def __str__(self):
        if self.is_zero:
            return "0"
        parts = []
        for m in sorted(self.terms, reverse=True):
            c = self.terms[m]
            factors = [f"{name}^{e}" if e > 1 else name
                       for name, e in zip(self.vars, m) if e]
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        text = " + ".join(parts)
        return text.replace("+ -", "- ")

    __repr__ = __str__


class RatFunc:
    """Ratio of two polynomials; equality by cross-multiplication."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.const(num.vars, 1)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        self.num, self.den = _reduce(num, den)

    @classmethod
    def const(cls, vars, c):
        return cls(Poly.const(vars, c))

    @property
    def vars(self):
        return self.num.vars

    @property
    def is_zero(self):
        return self.num.is_zero

    def _coerce(self, other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, Poly):
            return RatFunc(other)
        return RatFunc(Poly.const(self.vars, other))

    def __add__(self, other):
        o = self._coerce(other)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            return RatFunc(self.den ** -n, self.num ** -n)
        return RatFunc(self.num ** n, self.den ** n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.num.is_zero:
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, Poly)):
            other = self._coerce(other)
        return isinstance(other, RatFunc) and \
            (self.num * other.den - other.num * self.den).is_zero

    def __hash__(self):  # canonical enough after _reduce for our use
        return hash((self.num, self.den))

    def evaluate(self, env: dict):
        return self.num.evaluate(env) / self.den.evaluate(env)

    def __str__(self):
        if self.den == Poly.const(self.vars, 1):
            return str(self.num)
        n, d = str(self.num), str(self.den)
        if " " in n:
            n = f"({n})"
        if " " in d:
            d = f"({d})"
        return f"{n}/{d}"

    __repr__ = __str__


def _reduce(num: Poly, den: Poly):
    """Light normalization: pull rational content, cancel exact divisors and
    common single-variable factors.  Not a full gcd, but enough to keep the
    small systems here readable."""
    if num.is_zero:
        return num, Poly.const(num.vars, 1)
    cn, cd = num.content(), den.content()
    num = num.exact_div(Poly.const(num.vars, cn))
    den = den.exact_div(Poly.const(den.vars, cd))
    scale = cn / cd
    # cancel whole-polynomial divisibility either way
    try:
        q = num.exact_div(den)
        num, den = q, Poly.const(num.vars, 1)
    except ValueError:
        try:
            q = den.exact_div(num)
            num, den = Poly.const(num.vars, 1), q
        except ValueError:
            pass
    # cancel shared single-variable factors (covers monomial content)
    changed = True
    while changed:
        changed = False
        for name in num.vars:
            v = Poly.var(num.vars, name)
            while v.divides(num) and v.divides(den):
                num = num.exact_div(v)
                den = den.exact_div(v)
                changed = True
    num = num * scale
    return num, den


def bareiss_inverse(M: list[list[Poly]]):
    """Exact inverse of a square Poly matrix via the fraction-free
    Gauss-Jordan (Montante) scheme.

    Returns (inv, det) where inv is a matrix of RatFunc and det a Poly.
    Raises ValueError if the matrix is singular as a polynomial matrix.
    """
    n = len(M)
    vars = M[0][0].vars
    one = Poly.const(vars, 1)
    zero = Poly(vars, {})
    A = [[M[i][j] for j in range(n)] + [one if i == j else zero for j in range(n)]
         for i in range(n)]
    prev = one
    sign = 1
    for k in range(n):
        if A[k][k].is_zero:
            for r in range(k + 1, n):
                if not A[r][k].is_zero:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                raise ValueError("singular matrix")
        piv = A[k][k]
        for i in range(n):
            if i == k:
                continue
            for j in range(2 * n):
                if j == k:
                    continue
                A[i][j] = (piv * A[i][j] - A[i][k] * A[k][j]).exact_div(prev)
            A[i][k] = zero
        prev = piv
    det = sign * prev
    adj_sign = Poly.const(vars, sign)
    inv = [[RatFunc(adj_sign * A[i][n + j], det) for j in range(n)] for i in range(n)]
    return inv, det


def solve_linear(A: list[list[RatFunc]], b: list[RatFunc]):
    """General solve of A x = b over the rational-function field.

    Returns (particular, nullspace_basis); raises ValueError("inconsistent
    system") when no solution exists.
    """
    m, n = len(A), len(A[0])
    vars = A[0][0].vars
    zero = RatFunc.const(vars, 0)
    aug = [[A[i][j] for j in range(n)] + [b[i]] for i in range(m)]
    pivots = []
    row = 0
    for col in range(n):
        pr = next((r for r in range(row, m) if not aug[r][col].is_zero), None)
        if pr is None:
            continue
        aug[row], aug[pr] = aug[pr], aug[row]
        piv = aug[row][col]
        aug[row] = [e / piv for e in aug[row]]
        for r in range(m):
            if r != row and not aug[r][col].is_zero:
                f = aug[r][col]
                aug[r] = [er - f * ep for er, ep in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    for r in range(row, m):
        if not aug[r][n].is_zero:
            raise ValueError("inconsistent system")
    particular = [zero] * n
    for r, col in enumerate(pivots):
        particular[col] = aug[r][n]
    free = [c for c in range(n) if c not in pivots]
    null_basis = []
    for fc in free:
        vec = [zero] * n
        vec[fc] = RatFunc.const(vars, 1)
        for r, col in enumerate(pivots):
            vec[col] = -aug[r][fc]
        null_basis.append(vec)
    return particular, null_basis
