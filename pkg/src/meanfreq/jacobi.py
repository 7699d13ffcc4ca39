"""Linearized geodesic flow along a closed geodesic.

Conventions. With a parallel orthonormal frame along the geodesic the
Jacobi equation reads y'' + R(t) y = 0. The phase-space matrix solution
X(t) of X' = A X, A = [[0, I], [-R, 0]], X(0) = I, is symplectic for
J = [[0, -I], [I, 0]]. Transporting the frame once around the geodesic
returns it twisted by an orthogonal Q, so R(t + L) = Q^T R(t) Q and the
Poincare map is P = Qhat X(L) with Qhat = blockdiag(Q, Q).

Conjugate points are zeros of det B(t), B the upper-right block of X.
They are located by counting eigenphases of the unitary frame
U = B + iD of the Lagrangian plane spanned by the right block column.
An eigenphase of W = U U^T passes through -pi exactly at a conjugate
point, and the count is insensitive to multiplicity. A plain sign change
of det B would miss roots of even multiplicity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

RTOL = 1e-11
ATOL = 1e-11
ROOT_TOL = 1e-10
MULTIPLICITY_TOL = 1e-7
UNIT_CIRCLE_TOL = 1e-8


class IntegrationError(RuntimeError):
    """The ODE solver failed (for example step size underflow)."""


class ConjugateClusterWarning(UserWarning):
    """Distinct conjugate points closer than the root tolerance were merged."""


def symplectic_J(d: int) -> np.ndarray:
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, -eye], [eye, zero]])


def symplectic_inverse(P: np.ndarray) -> np.ndarray:
    d = P.shape[0] // 2
    J = symplectic_J(d)
    return -J @ P.T @ J


@dataclass(frozen=True)
class CurvatureProfile:
    """Periodic curvature matrix R(t) along a closed geodesic of length ``period``.

    ``R`` must accept a float and return a symmetric (dim, dim) array; it is
    expected to be defined on the whole real line.
    """

    dim: int
    period: float
    R: Callable[[float], np.ndarray]
    holonomy: np.ndarray | None = None
    label: str = ""
    _kbounds: tuple[float, float] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("profile dimension must be positive")
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period!r}")
        if self.holonomy is not None:
            Q = np.asarray(self.holonomy, dtype=float)
            if Q.shape != (self.dim, self.dim) or not np.allclose(Q.T @ Q, np.eye(self.dim), atol=1e-12):
                raise ValueError("holonomy must be an orthogonal (dim, dim) matrix")
            object.__setattr__(self, "holonomy", Q)

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.R(t), dtype=float).reshape(self.dim, self.dim)

    @property
    def Q(self) -> np.ndarray:
        return np.eye(self.dim) if self.holonomy is None else self.holonomy

    @property
    def Qhat(self) -> np.ndarray:
        Q = self.Q
        return np.kron(np.eye(2), Q)

    # constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, dim: int = 1, period: float = 2 * math.pi, label: str = "") -> "CurvatureProfile":
        M = np.asarray(value, dtype=float)
        if M.ndim == 0:
            M = float(M) * np.eye(dim)
        M = M.reshape(dim, dim)
        ev = np.linalg.eigvalsh(0.5 * (M + M.T))
        return cls(dim, period, lambda t, M=M: M, label=label or "constant", _kbounds=(float(ev[0]), float(ev[-1])))

    @classmethod
    def scalar(cls, K: Callable[[float], float], period: float, label: str = "") -> "CurvatureProfile":
        return cls(1, period, lambda t: np.array([[K(t)]], dtype=float), label=label)

    @classmethod
    def diagonal(cls, funcs: Sequence[Callable[[float], float]], period: float, label: str = "") -> "CurvatureProfile":
        funcs = tuple(funcs)
        return cls(len(funcs), period, lambda t: np.diag([f(t) for f in funcs]), label=label)

    # diagnostics ------------------------------------------------------

    def eigen_range(self, samples: int = 1024) -> tuple[float, float]:
        """Min and max eigenvalue of R over one period (sampled)."""
        if self._kbounds is not None:
            return self._kbounds
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        stack = np.array([self(t) for t in ts])
        if self.dim == 1:
            vals = stack[:, 0, 0]
            return float(vals.min()), float(vals.max())
        ev = np.linalg.eigvalsh(0.5 * (stack + stack.transpose(0, 2, 1)))
        return float(ev[:, 0].min()), float(ev[:, -1].max())

    def symmetry_defect(self, samples: int = 64) -> float:
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return max(float(np.max(np.abs(self(t) - self(t).T))) for t in ts)

    def holonomy_defect(self, samples: int = 64) -> float:
        """max |R(t + L) - Q^T R(t) Q| on sampled t."""
        Q = self.Q
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return max(float(np.max(np.abs(self(t + self.period) - Q.T @ self(t) @ Q))) for t in ts)


@dataclass
class FundamentalSolution:
    """Dense-output matrix solution X(t) on [0, T]."""

    dim: int
    T: float
    _sol: Callable = field(repr=False)
    nfev: int = 0
    nsteps: int = 0
    rtol: float = RTOL

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        n = 2 * self.dim
        flat = self._sol(np.atleast_1d(t_arr))
        mats = flat.T.reshape(-1, n, n)
        return mats[0] if t_arr.ndim == 0 else mats

    @property
    def end(self) -> np.ndarray:
        return self(self.T)

    def symplectic_defect(self, ts=None) -> float:
        if ts is None:
            ts = np.linspace(0.0, self.T, 257)
        J = symplectic_J(self.dim)
        X = self(np.asarray(ts, dtype=float))
        D = np.transpose(X, (0, 2, 1)) @ J @ X - J
        return float(np.max(np.abs(D)))


def integrate_fundamental(
    profile: CurvatureProfile,
    T: float,
    rtol: float = RTOL,
    atol: float = ATOL,
    X0: np.ndarray | None = None,
) -> FundamentalSolution:
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"integration horizon must be positive, got {T!r}")
    d = profile.dim
    n = 2 * d
    y0 = (np.eye(n) if X0 is None else np.asarray(X0, dtype=float)).reshape(-1)

    def rhs(t, y):
        X = y.reshape(n, n)
        out = np.empty_like(X)
        out[:d] = X[d:]
        out[d:] = -profile(t) @ X[:d]
        return out.reshape(-1)

    try:
        res = solve_ivp(rhs, (0.0, T), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
    except (ValueError, FloatingPointError) as exc:
        raise IntegrationError(f"solver raised: {exc}") from exc
    if res.status != 0 or not np.all(np.isfinite(res.y[:, -1])):
        raise IntegrationError(f"integration to T={T} failed at t={res.t[-1]:.6g}: {res.message}")
    return FundamentalSolution(d, float(T), res.sol, int(res.nfev), len(res.t) - 1, rtol)


# conjugate points ----------------------------------------------------------


@dataclass(frozen=True)
class ConjugateReport:
    times: tuple[float, ...]
    multiplicities: tuple[int, ...]
    T: float
    dim: int
    tolerance: float = ROOT_TOL
    warnings: tuple[str, ...] = ()

    def count(self, t: float | None = None) -> int:
        """Number of conjugate points in (0, t], counted with multiplicity."""
        if t is None:
            return int(sum(self.multiplicities))
        k = int(np.searchsorted(np.asarray(self.times), t + self.tolerance, side="right"))
        return int(sum(self.multiplicities[:k]))

    @property
    def first(self) -> float | None:
        return self.times[0] if self.times else None

    def cumulative(self) -> list[tuple[float, int]]:
        out, acc = [], 0
        for t, m in zip(self.times, self.multiplicities):
            acc += m
            out.append((t, acc))
        return out


class _PhaseCounter:
    """Evaluates the conjugate count N(t) from the Lagrangian frame phases."""

    def __init__(self, fund: FundamentalSolution):
        self.fund = fund
        self.d = fund.dim

    def frames(self, ts: np.ndarray):
        d = self.d
        X = self.fund(ts)
        F = X[:, :, d:]
        Qf, Rf = np.linalg.qr(F)
        sgn = np.sign(np.diagonal(Rf, axis1=1, axis2=2))
        sgn[sgn == 0] = 1.0
        Qf = Qf * sgn[:, None, :]
        B = Qf[:, :d, :]
        U = B + 1j * Qf[:, d:, :]
        W = U @ np.transpose(U, (0, 2, 1))
        psi = np.angle(np.linalg.eigvals(W)).sum(axis=1)
        arg = np.angle(np.linalg.det(U))
        return B, psi, arg

    def counts(self, ts: np.ndarray):
        """N on an increasing grid starting at 0 (N(0) = 0 by definition)."""
        B, psi, arg = self.frames(ts)
        phi = 2.0 * (np.unwrap(arg) - arg[0]) + self.d * math.pi
        raw = (psi - phi) / (2.0 * math.pi)
        raw[0] = 0.0
        return raw, phi, arg, B

    def count_at(self, t: float, arg_ref: float, phi_ref: float) -> float:
        """N(t) for t within one grid cell of a point with known arg and phase."""
        _, psi, arg = self.frames(np.array([t]))
        dphi = 2.0 * (((arg[0] - arg_ref) + math.pi) % (2.0 * math.pi) - math.pi)
        return float((psi[0] - (phi_ref + dphi)) / (2.0 * math.pi))

    def crossing_phase(self, t: float) -> float:
        """arg(-w) for the eigenvalue w of W closest to -1; decreases through 0 at a conjugate point."""
        d = self.d
        X = self.fund(np.array([t]))[0]
        Qf, Rf = np.linalg.qr(X[:, d:])
        Qf = Qf * np.where(np.diag(Rf) < 0, -1.0, 1.0)
        U = Qf[:d] + 1j * Qf[d:]
        w = np.linalg.eigvals(U @ U.T)
        return float(np.angle(-w[np.argmin(np.abs(w + 1.0))]))

    def det_b(self, t: float) -> float:
        B, _, _ = self.frames(np.array([t]))
        return float(np.linalg.det(B[0]))

    def small_singular(self, t: float, thresh: float = MULTIPLICITY_TOL) -> int:
        B, _, _ = self.frames(np.array([t]))
        return int(np.sum(np.linalg.svd(B[0], compute_uv=False) < thresh))


def _grid_step(profile: CurvatureProfile, samples_per_spacing: int) -> float:
    lo, hi = profile.eigen_range()
    kabs = max(abs(lo), abs(hi), 1.0)
    h = profile.period / samples_per_spacing
    if hi > 0:
        h = min(h, math.pi / (samples_per_spacing * math.sqrt(hi)))
    h = min(h, math.pi / (16.0 * profile.dim * kabs), 0.5)
    return h


def conjugate_points(
    profile: CurvatureProfile,
    T: float,
    *,
    fundamental: FundamentalSolution | None = None,
    samples_per_spacing: int = 64,
    tol: float = ROOT_TOL,
    multiplicity_tol: float = MULTIPLICITY_TOL,
) -> ConjugateReport:
    """Conjugate points of t = 0 along the geodesic in (0, T]."""
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"T must be positive, got {T!r}")
    slack = 1e-9 * max(1.0, T)
    T_end = T + 4 * slack
    if fundamental is None or fundamental.T < T_end:
        fundamental = integrate_fundamental(profile, T_end)
    counter = _PhaseCounter(fundamental)
    h = _grid_step(profile, samples_per_spacing)

    for _ in range(6):
        npts = int(math.ceil(T_end / h)) + 1
        ts = np.linspace(0.0, T_end, npts)
        raw, phi, args, B = counter.counts(ts)
        N = np.rint(raw)
        if np.max(np.abs(raw - N)) < 1e-3 and np.all(np.diff(N) >= 0):
            break
        h /= 4.0
    else:
        raise IntegrationError("conjugate count did not stabilise under grid refinement")

    dets = np.linalg.det(B)
    roots: list[tuple[float, int]] = []
    notes: list[str] = []

    def n_at(t: float, k: int) -> int:
        return int(round(counter.count_at(t, args[k], phi[k])))

    def refine(a: float, b: float, na: int, nb: int, k: int, da: float, db: float) -> None:
        jump = nb - na
        if jump <= 0:
            return
        if jump == 1 and da * db < 0:
            r = brentq(counter.det_b, a, b, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
            roots.append((r, 1))
            return
        if b - a <= tol:
            roots.append((0.5 * (a + b), jump))
            return
        ga, gb = counter.crossing_phase(a), counter.crossing_phase(b)
        if ga > 0 > gb:
            # fast path for a single root of higher multiplicity; verified by the count
            r = brentq(counter.crossing_phase, a, b, xtol=tol * 1e-2, rtol=4 * np.finfo(float).eps)
            lo, hi = max(a, r - tol), min(b, r + tol)
            if n_at(lo, k) == na and n_at(hi, k) == nb:
                roots.append((r, jump))
                return
        m = 0.5 * (a + b)
        nm = n_at(m, k)
        nm = min(max(nm, na), nb)
        dm = counter.det_b(m)
        refine(a, m, na, nm, k, da, dm)
        refine(m, b, nm, nb, k, dm, db)

    for k in np.nonzero(np.diff(N) > 0)[0]:
        refine(ts[k], ts[k + 1], int(N[k]), int(N[k + 1]), int(k), dets[k], dets[k + 1])

    roots.sort()
    times: list[float] = []
    mults: list[int] = []
    for r, m in roots:
        if r > T + slack:
            continue
        sv = counter.small_singular(r, multiplicity_tol)
        if sv < m:
            msg = f"conjugate cluster near t={r:.12g}: count jump {m}, near-singular directions {sv}"
            notes.append(msg)
            warnings.warn(msg, ConjugateClusterWarning, stacklevel=2)
        if times and r - times[-1] <= tol:
            mults[-1] += m
            continue
        times.append(float(r))
        mults.append(int(m))
    return ConjugateReport(tuple(times), tuple(mults), float(T), profile.dim, tol, tuple(notes))


# Poincare map --------------------------------------------------------------


@dataclass(frozen=True)
class PoincareData:
    P: np.ndarray
    spectrum: np.ndarray
    unit_circle_flag: bool
    nullity: int
    tolerance: float = UNIT_CIRCLE_TOL

    @property
    def symplectic_defect(self) -> float:
        J = symplectic_J(self.P.shape[0] // 2)
        return float(np.max(np.abs(self.P.T @ J @ self.P - J)))


def poincare_map(
    profile: CurvatureProfile,
    fundamental: FundamentalSolution | None = None,
    tol: float = UNIT_CIRCLE_TOL,
) -> PoincareData:
    L = profile.period
    if fundamental is None or fundamental.T < L:
        fundamental = integrate_fundamental(profile, L)
    P = profile.Qhat @ fundamental(L)
    return classify_symplectic(P, tol)


def classify_symplectic(P: np.ndarray, tol: float = UNIT_CIRCLE_TOL) -> PoincareData:
    """Spectral data of a symplectic matrix.

    An eigenvalue lies on the unit circle iff w = lam + 1/lam is real with
    |w| <= 2; the w are the eigenvalues of P + P^{-1}, which stay well
    conditioned at Jordan blocks where the eigenvalues of P do not.
    """
    P = np.asarray(P, dtype=float)
    spectrum = np.linalg.eigvals(P)
    w = np.linalg.eigvals(P + symplectic_inverse(P))
    on_circle = bool(np.any((np.abs(w.imag) <= tol) & (np.abs(w.real) <= 2.0 + tol)))
    scale = max(1.0, float(np.linalg.norm(P, 2)))
    sv = np.linalg.svd(P - np.eye(P.shape[0]), compute_uv=False)
    nullity = int(np.sum(sv <= MULTIPLICITY_TOL * scale))
    return PoincareData(P, spectrum, on_circle, nullity, tol)


# index form ----------------------------------------------------------------


def _derivative(f: Callable[[float], float], h: float = 1e-3) -> Callable[[float], float]:
    def df(t):
        return (f(t - 2 * h) - 8 * f(t - h) + 8 * f(t + h) - f(t + 2 * h)) / (12 * h)

    return df


def index_form_value(
    profile: CurvatureProfile,
    T: float,
    y: Callable[[float], float],
    z: Callable[[float], float],
    dy: Callable[[float], float] | None = None,
    dz: Callable[[float], float] | None = None,
    breakpoints: Sequence[float] = (),
    boundary_tol: float = 1e-9,
) -> float:
    """I(y, z) = integral over [0, T] of y'z' - K y z for a surface profile."""
    if profile.dim != 1:
        raise ValueError("index form is implemented for one-dimensional fibres")
    for f, name in ((y, "y"), (z, "z")):
        if abs(f(0.0)) > boundary_tol or abs(f(T)) > boundary_tol:
            raise ValueError(f"{name} must vanish at both endpoints")
    dy = dy or _derivative(y)
    dz = dz or _derivative(z)

    def integrand(t):
        return dy(t) * dz(t) - profile(t)[0, 0] * y(t) * z(t)

    pts = sorted(p for p in breakpoints if 0.0 < p < T) or None
    val, _ = quad(integrand, 0.0, T, points=pts, epsabs=1e-13, epsrel=1e-11, limit=400)
    return float(val)
