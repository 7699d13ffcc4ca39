"""Loop homology rings of spheres with the Chas-Sullivan product, Delta and bracket.

Two presentations are used.

* odd type (n odd, or coefficients mod 2): basis A^e U^m with e in {0, 1},
  deg A = 0, deg U = 2n - 1.
* even type (n even, coefficients Z, Q or F_p with p odd): basis
  A^e W^d Theta^m with relations A^2 = A W = 0 and 2 A Theta = 0,
  deg W = n - 1, deg Theta = 3n - 2.

The unit E = A^0 U^0 sits in degree n, and a product of k generators has
degree sum(deg) - (k - 1) n. Scalars live in R[k], R = Z, Q or F_p, with k
an indeterminate for the unknown integer in the even-type Delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal

from sympy import QQ, ZZ, GF, isprime
from sympy.polys.rings import PolyElement, ring

Monomial = tuple[int, int, int]  # (power of A, power of W, power of U or Theta)

UNIT: Monomial = (0, 0, 0)


class RingMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientSpec:
    kind: Literal["integers", "rationals", "mod-p"] = "integers"
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("integers", "rationals", "mod-p"):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.kind == "mod-p":
            if self.p is None or not isprime(self.p):
                raise ValueError(f"mod-p coefficients need a prime p, got {self.p!r}")
        elif self.p is not None:
            raise ValueError("p is only meaningful for mod-p coefficients")

    @classmethod
    def parse(cls, text: str) -> "CoefficientSpec":
        text = text.strip().lower()
        if text in ("z", "integers", "int"):
            return cls("integers")
        if text in ("q", "rationals"):
            return cls("rationals")
        for prefix in ("mod-", "mod", "f", "z/"):
            if text.startswith(prefix) and text[len(prefix):].isdigit():
                return cls("mod-p", int(text[len(prefix):]))
        raise ValueError(f"cannot parse coefficients {text!r}")

    @property
    def characteristic(self) -> int:
        return self.p if self.kind == "mod-p" else 0

    @property
    def domain(self):
        if self.kind == "integers":
            return ZZ
        if self.kind == "rationals":
            return QQ
        return GF(self.p)

    def __str__(self) -> str:
        return f"mod-{self.p}" if self.kind == "mod-p" else self.kind


INTEGERS = CoefficientSpec("integers")


@lru_cache(maxsize=None)
def _poly_ring(coeffs: CoefficientSpec):
    R, k = ring("k", coeffs.domain)
    return R, k


class LoopRing:
    """H_*(Lambda S^n; G) as a graded ring with BV operator."""

    def __init__(self, n: int, coefficients: CoefficientSpec = INTEGERS):
        if int(n) != n or n < 2:
            raise ValueError("sphere dimension must be an integer >= 2")
        self.n = int(n)
        self.coefficients = coefficients
        self.parity: Literal["odd", "even"] = "odd" if (n % 2 or coefficients.characteristic == 2) else "even"
        self.K, self.k = _poly_ring(coefficients)
        self.has_torsion = self.parity == "even" and coefficients.kind == "integers"
        self._delta_memo: dict[Monomial, RingElement] = {}
        self._gbr_memo: dict[tuple[str, tuple[str, ...]], RingElement] = {}
        self._word_memo: dict[tuple[str, ...], RingElement] = {}

    def __eq__(self, other) -> bool:
        return isinstance(other, LoopRing) and (self.n, self.coefficients) == (other.n, other.coefficients)

    def __hash__(self) -> int:
        return hash((self.n, self.coefficients))

    def __repr__(self) -> str:
        return f"LoopRing(n={self.n}, {self.coefficients}, {self.parity} type)"

    # monomials ---------------------------------------------------------

    @property
    def top_name(self) -> str:
        return "U" if self.parity == "odd" else "Theta"

    def degree(self, mon: Monomial) -> int:
        e, d, m = mon
        n = self.n
        if self.parity == "odd":
            return m * (n - 1) + n - e * n
        return n + m * (2 * n - 2) - d - e * n

    def shifted(self, mon: Monomial) -> int:
        return self.degree(mon) - self.n

    def is_torsion(self, mon: Monomial) -> bool:
        return self.has_torsion and mon[0] == 1 and mon[2] >= 1

    def valid(self, mon: Monomial) -> bool:
        e, d, m = mon
        if e not in (0, 1) or d not in (0, 1) or m < 0:
            return False
        if self.parity == "odd":
            return d == 0
        if e and d:
            return False
        if e and m >= 1 and not self.has_torsion:
            return False
        return True

    def name(self, mon: Monomial) -> str:
        e, d, m = mon
        parts = (["A"] if e else []) + (["W"] if d else [])
        if m:
            parts.append(self.top_name + (f"^{m}" if m > 1 else ""))
        return "*".join(parts) or "E"

    def word(self, mon: Monomial) -> list[str]:
        e, d, m = mon
        g = "U" if self.parity == "odd" else "T"
        return ["A"] * e + ["W"] * d + [g] * m

    def generator_monomial(self, g: str) -> Monomial:
        return {"A": (1, 0, 0), "W": (0, 1, 0), "U": (0, 0, 1), "T": (0, 0, 1)}[g]

    def basis(self, max_degree: int) -> list[Monomial]:
        """All nonzero basis monomials of degree <= max_degree, ordered by degree."""
        out = []
        m = 0
        step = self.n - 1 if self.parity == "odd" else 2 * self.n - 2
        while m * step <= max_degree + self.n:
            for e in (0, 1):
                for d in (0, 1):
                    mon = (e, d, m)
                    if self.valid(mon) and self.degree(mon) <= max_degree:
                        out.append(mon)
            m += 1
        out.sort(key=lambda x: (self.degree(x), x))
        return out

    # scalars -----------------------------------------------------------

    def scalar(self, c) -> PolyElement:
        return c if isinstance(c, PolyElement) and c.ring == self.K else self.K(c)

    def _normalize(self, mon: Monomial, c: PolyElement) -> PolyElement:
        if self.is_torsion(mon):
            return self.K.from_dict({exp: cf % 2 for exp, cf in c.items() if cf % 2})
        return c

    # elements ----------------------------------------------------------

    def element(self, terms: dict) -> "RingElement":
        clean = {}
        for mon, c in terms.items():
            mon = tuple(mon)
            if not self.valid(mon):
                if self.parity == "even" and mon[0] == 1 and mon[2] >= 1 and mon[1] == 0:
                    continue  # A Theta^m vanishes without 2-torsion
                raise ValueError(f"{mon} is not a basis monomial of {self}")
            c = self._normalize(mon, self.scalar(c))
            if c:
                clean[mon] = c
        return RingElement(self, clean)

    def monomial(self, mon: Monomial, c=1) -> "RingElement":
        return self.element({mon: c})

    @property
    def zero(self) -> "RingElement":
        return RingElement(self, {})

    @property
    def E(self) -> "RingElement":
        return self.monomial(UNIT)

    @property
    def A(self) -> "RingElement":
        return self.monomial((1, 0, 0))

    @property
    def U(self) -> "RingElement":
        if self.parity != "odd":
            raise AttributeError("U is a generator of the odd-type ring only")
        return self.monomial((0, 0, 1))

    @property
    def W(self) -> "RingElement":
        """A*U in the odd-type ring, the degree n - 1 generator in the even type."""
        return self.monomial((1, 0, 1) if self.parity == "odd" else (0, 1, 0))

    @property
    def Theta(self) -> "RingElement":
        """U^2 in the odd-type ring."""
        return self.monomial((0, 0, 2) if self.parity == "odd" else (0, 0, 1))

    # product -----------------------------------------------------------

    def monomial_product(self, x: Monomial, y: Monomial) -> tuple[int, Monomial] | None:
        """Sign and normal form of x*y, or None if the product vanishes."""
        e1, d1, m1 = x
        e2, d2, m2 = y
        e, d, m = e1 + e2, d1 + d2, m1 + m2
        if e > 1 or d > 1 or (e and d):
            return None
        if self.parity == "even" and e and m >= 1 and not self.has_torsion:
            return None
        # Koszul sign for moving A^e2 past W^d1 T^m1 and W^d2 past T^m1
        par = self._gen_parity
        flips = e2 * par["A"] * (d1 * par["W"] + m1 * par["G"]) + d2 * par["W"] * m1 * par["G"]
        return (-1 if flips % 2 else 1), (e, d, m)

    @property
    def _gen_parity(self) -> dict[str, int]:
        n = self.n
        if self.parity == "odd":
            return {"A": (-n) % 2, "W": 0, "G": (n - 1) % 2}
        return {"A": (-n) % 2, "W": 1, "G": (2 * n - 2) % 2}

    def product(self, x: "RingElement", y: "RingElement") -> "RingElement":
        self._check(x)
        self._check(y)
        out: dict[Monomial, PolyElement] = {}
        for mx, cx in x.terms.items():
            for my, cy in y.terms.items():
                res = self.monomial_product(mx, my)
                if res is None:
                    continue
                sign, mon = res
                out[mon] = out.get(mon, self.K.zero) + sign * cx * cy
        return self.element(out)

    def _check(self, x: "RingElement") -> None:
        if x.ring != self:
            raise RingMismatchError(f"element of {x.ring} used in {self}")

    # Delta -------------------------------------------------------------

    def delta_monomial(self, mon: Monomial) -> "RingElement":
        """Closed-form Delta on a basis monomial."""
        e, d, m = mon
        if self.parity == "odd":
            if e == 1 and m >= 1:
                return self.monomial((0, 0, m - 1), m)
            return self.zero
        if d == 1:
            return self.monomial((0, 0, m), m * self.k + 1)
        return self.zero

    def delta(self, x: "RingElement") -> "RingElement":
        self._check(x)
        out = self.zero
        for mon, c in x.terms.items():
            out = out + self.delta_monomial(mon) * c
        return out

    def bracket(self, x: "RingElement", y: "RingElement") -> "RingElement":
        """Bracket from Delta: {X,Y} = (-1)^|X| (Delta(XY) - Delta(X) Y - (-1)^|X| X Delta(Y))."""
        self._check(x)
        self._check(y)
        out = self.zero
        for mx, cx in x.terms.items():
            X = self.monomial(mx)
            sx = -1 if self.shifted(mx) % 2 else 1
            for my, cy in y.terms.items():
                Y = self.monomial(my)
                b = self.delta(X * Y) - self.delta(X) * Y - sx * (X * self.delta(Y))
                out = out + (sx * b) * (cx * cy)
        return out

    # recursive route ---------------------------------------------------

    def generator_bracket(self, g: str, h: str) -> "RingElement":
        """Brackets of generators, the input data of the recursion."""
        k = self.k
        if self.parity == "odd":
            table = {("A", "U"): -self.E}
        else:
            table = {("W", "T"): self.monomial((0, 0, 1), -k), ("A", "W"): -self.A}
        if (g, h) in table:
            return table[(g, h)]
        if (h, g) in table:
            sg = self.shifted(self.generator_monomial(g))
            sh = self.shifted(self.generator_monomial(h))
            sign = -1 if ((sg + 1) * (sh + 1)) % 2 else 1
            return table[(h, g)] * (-sign)
        return self.zero

    def generator_delta(self, g: str) -> "RingElement":
        return self.E if (g == "W" and self.parity == "even") else self.zero

    def _word_element(self, word: list[str]) -> "RingElement":
        key = tuple(word)
        hit = self._word_memo.get(key)
        if hit is None:
            hit = self.E
            for g in word:
                hit = hit * self.monomial(self.generator_monomial(g))
            self._word_memo[key] = hit
        return hit

    def _gbr_word(self, g: str, word: tuple[str, ...]) -> "RingElement":
        """{g, w1 w2 ... wr} by the Leibniz rule in the second slot."""
        if not word:
            return self.zero
        key = (g, word)
        if key in self._gbr_memo:
            return self._gbr_memo[key]
        h, rest = word[0], word[1:]
        sg = self.shifted(self.generator_monomial(g))
        sh = self.shifted(self.generator_monomial(h))
        sign = -1 if (sh * (sg + 1)) % 2 else 1
        H = self.monomial(self.generator_monomial(h))
        res = self.generator_bracket(g, h) * self._word_element(list(rest)) + (H * self._gbr_word(g, rest)) * sign
        self._gbr_memo[key] = res
        return res

    def _bracket_words(self, x: tuple[str, ...], y: tuple[str, ...]) -> "RingElement":
        if not x or not y:
            return self.zero
        if len(x) == 1:
            return self._gbr_word(x[0], y)
        # Leibniz in the second slot, then antisymmetry to put a generator first
        h, rest = y[0], y[1:]
        sx = sum(self.shifted(self.generator_monomial(g)) for g in x)
        sh = self.shifted(self.generator_monomial(h))
        sign = -1 if (sh * (sx + 1)) % 2 else 1
        anti = -1 if ((sx + 1) * (sh + 1)) % 2 else 1
        first = self._gbr_word(h, x) * (-anti)
        H = self.monomial(self.generator_monomial(h))
        return first * self._word_element(list(rest)) + (H * self._bracket_words(x, rest)) * sign

    def bracket_recursive(self, x: "RingElement", y: "RingElement") -> "RingElement":
        """Bracket from generator brackets via Leibniz and antisymmetry only."""
        out = self.zero
        for mx, cx in x.terms.items():
            for my, cy in y.terms.items():
                out = out + self._bracket_words(tuple(self.word(mx)), tuple(self.word(my))) * (cx * cy)
        return out

    def delta_recursive(self, x: "RingElement") -> "RingElement":
        """Delta by peeling generators with Delta(gY) = Dg Y + (-1)^|g| g DY + (-1)^|g| {g, Y}."""
        out = self.zero
        for mon, c in x.terms.items():
            out = out + self._delta_word(tuple(self.word(mon))) * c
        return out

    def _delta_word(self, word: tuple[str, ...]) -> "RingElement":
        if not word:
            return self.zero
        mon = self._word_element(list(word))
        key = next(iter(mon.terms), None)
        if key is not None and key in self._delta_memo and len(word) > 1:
            return self._delta_memo[key]
        g, rest = word[0], word[1:]
        G = self.monomial(self.generator_monomial(g))
        sg = -1 if self.shifted(self.generator_monomial(g)) % 2 else 1
        Y = self._word_element(list(rest))
        res = self.generator_delta(g) * Y + (G * self._delta_word(rest)) * sg + self._gbr_word(g, rest) * sg
        if key is not None and len(word) > 1:
            self._delta_memo[key] = res
        return res

    # k specialisation ----------------------------------------------------

    def with_even_k(self, x: "RingElement") -> "RingElement":
        """Reduce torsion coefficients under the constraint that k is even."""
        out = {}
        for mon, c in x.terms.items():
            if self.is_torsion(mon):
                c = self.K(c.coeff(1) % 2)
            out[mon] = c
        return self.element(out)


class RingElement:
    __slots__ = ("ring", "terms")

    def __init__(self, ring_: LoopRing, terms: dict[Monomial, PolyElement]):
        self.ring = ring_
        self.terms = terms

    # arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "RingElement":
        if isinstance(other, RingElement):
            self.ring._check(other)
            return other
        return self.ring.monomial(UNIT, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for mon, c in other.terms.items():
            out[mon] = out.get(mon, self.ring.K.zero) + c
        return self.ring.element(out)

    __radd__ = __add__

    def __neg__(self):
        return RingElement(self.ring, {mon: -c for mon, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, RingElement):
            return self.ring.product(self, other)
        c = self.ring.scalar(other)
        return self.ring.element({mon: v * c for mon, v in self.terms.items()})

    def __rmul__(self, other):
        if isinstance(other, RingElement):
            return other.ring.product(other, self)
        return self * other

    def __pow__(self, m: int):
        if m < 0:
            raise ValueError("negative powers are undefined")
        out = self.ring.E
        for _ in range(m):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, RingElement):
            try:
                other = self._coerce(other)
            except Exception:
                return NotImplemented
        return self.ring == other.ring and self.terms == other.terms

    def __hash__(self):
        return hash((self.ring, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    # structure -----------------------------------------------------------

    def monomials(self) -> Iterator[Monomial]:
        return iter(sorted(self.terms))

    @property
    def degree(self) -> int | None:
        degs = {self.ring.degree(m) for m in self.terms}
        if len(degs) > 1:
            raise ValueError("element is not homogeneous")
        return degs.pop() if degs else None

    @property
    def leading(self) -> Monomial:
        if len(self.terms) != 1:
            raise ValueError("element is not a single monomial")
        return next(iter(self.terms))

    def coefficient(self, mon: Monomial) -> PolyElement:
        return self.terms.get(tuple(mon), self.ring.K.zero)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for mon in sorted(self.terms, key=lambda x: (self.ring.degree(x), x)):
            c = self.terms[mon]
            name = self.ring.name(mon)
            if c == 1:
                parts.append(name)
            elif c == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"({c})*{name}")
        return " + ".join(parts)
