"""Metric models with closed-form curvature and frequency data.

Three families are supported: the round sphere, ellipsoids with arbitrary
semi-axes, and the Katok reference metrics (data only).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Callable, Union

import numpy as np
from scipy.integrate import quad


class InvalidModelError(ValueError):
    """Raised when model parameters violate their invariants."""


class UnsupportedModelError(TypeError):
    """Raised when an operation has no closed form for the given model."""


class RationalParameterWarning(UserWarning):
    """Katok parameter is rational, so closed geodesics are not isolated."""


def _check_positive(values, what: str) -> None:
    for v in values:
        if not (isinstance(v, (int, float, Fraction)) or np.isscalar(v)):
            raise InvalidModelError(f"{what} must be numeric, got {v!r}")
        if not math.isfinite(float(v)) or float(v) <= 0.0:
            raise InvalidModelError(f"{what} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class RoundSphereModel:
    n: int
    K: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidModelError(f"dimension must be an integer >= 2, got {self.n!r}")
        _check_positive([self.K], "curvature K")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "K", float(self.K))

    @property
    def L(self) -> float:
        return 2.0 * math.pi / math.sqrt(self.K)


@dataclass(frozen=True)
class EllipsoidModel:
    """Ellipsoid sum (x_i/a_i)^2 = 1 in R^{n+1}; axes are stored sorted."""

    axes: tuple[float, ...]

    def __post_init__(self):
        axes = tuple(float(a) for a in self.axes)
        if len(axes) < 3:
            raise InvalidModelError("an ellipsoid needs at least three semi-axes (n >= 2)")
        _check_positive(axes, "semi-axis")
        object.__setattr__(self, "axes", tuple(sorted(axes)))

    @property
    def n(self) -> int:
        return len(self.axes) - 1

    @classmethod
    def graded(cls, mu: float, lam: float, m: int, odd: bool = False) -> "EllipsoidModel":
        """Axes a_{2i} = mu^i, a_{2i+1} = lam*mu^i.

        Gives dimension n = 2m, or n = 2m - 1 when ``odd`` is set.
        """
        if mu <= 1.0 or lam <= 1.0:
            raise InvalidModelError("graded family needs mu > 1 and lam > 1")
        if int(m) != m or m < 2:
            raise InvalidModelError("graded family needs an integer m >= 2")
        count = 2 * m if odd else 2 * m + 1
        axes = [mu ** (i // 2) * (lam if i % 2 else 1.0) for i in range(count)]
        return cls(tuple(axes))

    def scaled(self, s: float) -> "EllipsoidModel":
        return EllipsoidModel(tuple(s * a for a in self.axes))


@dataclass(frozen=True)
class KatokModel:
    """Katok Finsler metric on S^n.

    ``epsilon`` given as a float is treated as a generic (irrational)
    parameter. Pass a ``Fraction`` or an int to mark it rational.
    """

    n: int
    epsilon: Union[float, Fraction] = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3 or self.n % 2 == 0:
            raise InvalidModelError(f"Katok reference data needs odd n >= 3, got {self.n!r}")
        eps = self.epsilon
        if isinstance(eps, bool) or not isinstance(eps, (int, float, Fraction)):
            raise InvalidModelError(f"epsilon must be numeric, got {eps!r}")
        if not (0 <= eps < 1):
            raise InvalidModelError(f"epsilon must lie in [0, 1), got {eps!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def is_rational(self) -> bool:
        return isinstance(self.epsilon, (int, Fraction))

    @property
    def reversibility(self) -> float:
        e = float(self.epsilon)
        return (1.0 + e) / (1.0 - e)


@dataclass(frozen=True)
class PlaneSection:
    """Two-dimensional section with distinguished ellipse in the (a, b) plane and normal axis c."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        _check_positive([self.a, self.b, self.c], "section axis")

    def curvature(self, t):
        a2, b2 = self.a ** 2, self.b ** 2
        ct, st = np.cos(t), np.sin(t)
        return a2 * b2 / (self.c ** 2 * (b2 * ct * ct + a2 * st * st) ** 2)

    def speed(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def curvature_bounds(self) -> tuple[float, float]:
        lo, hi = sorted((self.a, self.b))
        c2 = self.c ** 2
        return lo * lo / (hi * hi * c2), hi * hi / (lo * lo * c2)


Model = Union[RoundSphereModel, EllipsoidModel, KatokModel]


def gauss_curvature(model: EllipsoidModel, u, v):
    """Gauss curvature of a 2-dimensional ellipsoid at angular coordinates (u, v)."""
    if not isinstance(model, EllipsoidModel) or model.n != 2:
        raise InvalidModelError("gauss_curvature needs an ellipsoid with exactly three axes")
    a0, a1, a2 = (a * a for a in model.axes)
    cu, su = np.cos(u), np.sin(u)
    cv, sv = np.cos(v), np.sin(v)
    denom = a0 * a1 * cv * cv + a2 * (a1 * cu * cu + a0 * su * su) * sv * sv
    return a0 * a1 * a2 / denom ** 2


def section_curvature_profile(section: PlaneSection) -> Callable[[Any], tuple[Any, Any]]:
    """Return ``t -> (K(t), ds/dt)`` along the distinguished ellipse of ``section``."""

    def profile(t):
        return section.curvature(t), section.speed(t)

    return profile


def ellipse_length(a: float, b: float) -> float:
    _check_positive([a, b], "ellipse axis")
    if a == b:
        return 2.0 * math.pi * a
    speed = lambda t: math.sqrt((a * math.sin(t)) ** 2 + (b * math.cos(t)) ** 2)
    # quarter symmetry keeps quad well inside its subdivision limit
    val, _ = quad(speed, 0.0, 0.5 * math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return 4.0 * val


@dataclass(frozen=True)
class ShortGeodesic:
    pair: tuple[int, int]
    length: float


def short_geodesics(model: EllipsoidModel) -> list[ShortGeodesic]:
    """All coordinate-plane ellipses of ``model``, with their lengths."""
    return [
        ShortGeodesic((i, j), ellipse_length(model.axes[i], model.axes[j]))
        for i, j in combinations(range(model.n + 1), 2)
    ]


def _check_pair(model: EllipsoidModel, pair) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in pair)
    except (TypeError, ValueError):
        raise InvalidModelError(f"ellipse must be a pair of axis indices, got {pair!r}") from None
    if not (0 <= i < j <= model.n):
        raise InvalidModelError(f"invalid ellipse {pair!r} for n = {model.n}")
    return i, j


def section_decomposition(model: EllipsoidModel, ellipse) -> list[PlaneSection]:
    i, j = _check_pair(model, ellipse)
    a = model.axes
    return [PlaneSection(a[i], a[j], a[k]) for k in range(model.n + 1) if k not in (i, j)]


@dataclass(frozen=True)
class ReferenceData:
    prime_length: float | None
    mean_frequency: float
    iterate_index: Callable[[int], int] | None = field(default=None, compare=False)
    geodesic_count: int | None = None
    rational_warning: bool = False


def reference_data(model: Model) -> ReferenceData:
    if isinstance(model, RoundSphereModel):
        n = model.n
        return ReferenceData(
            prime_length=model.L,
            mean_frequency=math.sqrt(model.K) * (n - 1) / math.pi,
            iterate_index=lambda m: (2 * m - 1) * (n - 1),
        )
    if isinstance(model, KatokModel):
        if model.is_rational:
            warnings.warn(
                "rational Katok parameter: infinitely many closed geodesics",
                RationalParameterWarning,
                stacklevel=2,
            )
        return ReferenceData(
            prime_length=None,
            mean_frequency=(model.n - 1) / math.pi,
            geodesic_count=None if model.is_rational else model.n + 1,
            rational_warning=model.is_rational,
        )
    raise UnsupportedModelError(f"no closed-form reference data for {type(model).__name__}")


def _parse_epsilon(raw) -> Union[float, Fraction]:
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise InvalidModelError(f"cannot parse epsilon {raw!r}") from None
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise InvalidModelError(f"epsilon must be a number or a fraction string, got {raw!r}")
    return Fraction(raw) if isinstance(raw, int) else float(raw)


def model_from_dict(obj: dict) -> Model:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidModelError("model must be a JSON object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "ellipsoid":
            axes = obj["axes"]
            if not isinstance(axes, list):
                raise InvalidModelError("'axes' must be a list")
            return EllipsoidModel(tuple(axes))
        if kind == "round":
            return RoundSphereModel(obj["n"], obj.get("K", 1.0))
        if kind == "katok":
            return KatokModel(obj["n"], _parse_epsilon(obj.get("epsilon", 0.0)))
    except KeyError as exc:
        raise InvalidModelError(f"missing field {exc.args[0]!r} for model kind {kind!r}") from None
    except TypeError as exc:
        raise InvalidModelError(str(exc)) from None
    raise InvalidModelError(f"unknown model kind {kind!r}")


def load_model(source: str) -> Model:
    """Parse a model from inline JSON or from a path to a JSON file."""
    text = source
    if not source.lstrip().startswith("{"):
        path = Path(source)
        if not path.is_file():
            raise InvalidModelError(f"model is neither inline JSON nor a readable file: {source!r}")
        text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidModelError(f"invalid model JSON: {exc}") from None
    return model_from_dict(obj)
