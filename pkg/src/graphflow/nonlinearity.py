"""Admissible nonlinearities and the scalar maps behind the implicit solver.

Two classes are supported.  Class F1 holds continuous monotone decreasing
functions with f(0) = 0 (no growth restriction); class F2 holds Lipschitz
functions with f(0) = 0 and constant L (no monotonicity).  Every implicit
step reduces, node by node, to inverting

    psi(s) = s - lam * f(s)

which is strictly increasing and onto for any lam > 0 in class F1 and for
0 < lam < 1/L in class F2.  Class membership is spot-checked on random
samples at construction time; violations are hard errors rather than wrong
answers later.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonlinearityError, SolverError
from . import _kernels

__all__ = [
    "Nonlinearity",
    "PsiMap",
    "zero",
    "linear",
    "power_absorption",
    "lipschitz",
    "from_spec",
    "monotone_root",
    "solve_increment_scalar",
]

_SPOT_CHECK_SEED = 20260819
_SPOT_CHECK_PAIRS = 1000


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar nonlinearity f with its declared class.

    ``kernel_kind`` >= 0 marks a built-in shape the compiled kernels can
    evaluate without a Python callback (0 zero, 1 linear, 2 power with
    exponent ``kernel_param``); -1 means generic Python evaluation.
    """

    name: str
    f: callable
    cls: str
    L: float = None
    df: callable = None
    kernel_kind: int = -1
    kernel_param: float = 0.0

    def __post_init__(self):
        if self.cls not in ("F1", "F2"):
            raise NonlinearityError(f"unknown class {self.cls!r}")
        if self.cls == "F2" and (self.L is None or not self.L > 0):
            raise NonlinearityError("class F2 requires a positive Lipschitz constant")
        _spot_check(self)

    def __call__(self, s):
        return self.f(s)

    def max_lambda(self):
        """Largest admissible implicit step: inf for F1, 1/L for F2."""
        return math.inf if self.cls == "F1" else 1.0 / self.L

    def admissible_lambda(self, lam):
        return 0 < lam < self.max_lambda()


def _sample_points(rng):
    xs = np.concatenate([
        rng.normal(0.0, 1.0, 400),
        rng.normal(0.0, 10.0, 300),
        rng.uniform(-1e-3, 1e-3, _SPOT_CHECK_PAIRS - 700),
    ])
    return xs


def _spot_check(nl):
    fv = nl.f(0.0)
    if fv != 0.0:
        raise NonlinearityError(f"{nl.name}: f(0) = {fv}, must be exactly 0")
    rng = np.random.default_rng(_SPOT_CHECK_SEED)
    xs = _sample_points(rng)
    for x in xs:
        a, b = float(x), float(x) + 1e-6
        fa, fb = nl.f(a), nl.f(b)
        if not (np.isfinite(fa) and np.isfinite(fb)):
            raise NonlinearityError(f"{nl.name}: nonfinite value near s = {a}")
        if nl.cls == "F1":
            if fb > fa + 1e-12:
                raise NonlinearityError(
                    f"{nl.name}: not monotone decreasing between {a} and {b}")
        else:
            if abs(fb - fa) > nl.L * (b - a) * (1 + 1e-9) + 1e-12:
                raise NonlinearityError(
                    f"{nl.name}: Lipschitz constant {nl.L} violated between {a} and {b}")
    if nl.cls == "F1":
        # wider-gap monotonicity, catches shapes that only wiggle locally
        ys = np.sort(xs)
        fys = [nl.f(float(y)) for y in ys]
        for i in range(1, len(fys)):
            if fys[i] > fys[i - 1] + 1e-12:
                raise NonlinearityError(
                    f"{nl.name}: not monotone decreasing between "
                    f"{ys[i-1]} and {ys[i]}")


# -- built-in shapes --------------------------------------------------------

def zero():
    """f = 0; plain diffusion."""
    return Nonlinearity(name="zero", f=lambda s: 0.0, cls="F1", L=0.0,
                        df=lambda s: 0.0, kernel_kind=_kernels.KIND_ZERO)


def linear():
    """f(s) = -s; linear absorption (class F1, Lipschitz with L = 1)."""
    return Nonlinearity(name="linear", f=lambda s: -s, cls="F1", L=1.0,
                        df=lambda s: -1.0, kernel_kind=_kernels.KIND_LINEAR)


def power_absorption(q):
    """f(s) = -s |s|^(q-1) for q > 0; strong absorption for q < 1."""
    q = float(q)
    if not q > 0:
        raise NonlinearityError(f"power exponent must be positive, got {q}")

    def f(s, _q=q):
        return -math.copysign(abs(s) ** _q, s) if s != 0.0 else 0.0

    def df(s, _q=q):
        if s == 0.0:
            return -math.inf if _q < 1 else (-1.0 if _q == 1 else 0.0)
        return -_q * abs(s) ** (_q - 1.0)

    return Nonlinearity(name=f"power:q={q:g}", f=f, cls="F1",
                        L=1.0 if q == 1.0 else None, df=df,
                        kernel_kind=_kernels.KIND_POWER, kernel_param=q)


def lipschitz(name, f, L, df=None):
    """Wrap a Lipschitz f with f(0) = 0 and declared constant L (class F2)."""
    return Nonlinearity(name=f"lipschitz:{name}:L={float(L):g}", f=f,
                        cls="F2", L=float(L), df=df)


_LIPSCHITZ_REGISTRY = {
    "sin": (math.sin, math.cos),
    "arctan": (math.atan, lambda s: 1.0 / (1.0 + s * s)),
    "tanh": (math.tanh, lambda s: 1.0 / math.cosh(s) ** 2),
}


def from_spec(spec: str) -> Nonlinearity:
    """Parse a nonlinearity spec string.

    Accepted forms: ``zero``, ``linear``, ``power:q=<real>`` and
    ``lipschitz:<name>:L=<real>`` where name is one of
    sin, arctan, tanh.
    """
    s = spec.strip()
    if s == "zero":
        return zero()
    if s == "linear":
        return linear()
    if s.startswith("power:"):
        arg = s[len("power:"):]
        if not arg.startswith("q="):
            raise NonlinearityError(f"malformed power spec {spec!r}, want power:q=<real>")
        try:
            q = float(arg[2:])
        except ValueError:
            raise NonlinearityError(f"bad exponent in {spec!r}") from None
        return power_absorption(q)
    if s.startswith("lipschitz:"):
        parts = s.split(":")
        if len(parts) != 3 or not parts[2].startswith("L="):
            raise NonlinearityError(
                f"malformed lipschitz spec {spec!r}, want lipschitz:<name>:L=<real>")
        name = parts[1]
        if name not in _LIPSCHITZ_REGISTRY:
            known = ", ".join(sorted(_LIPSCHITZ_REGISTRY))
            raise NonlinearityError(f"unknown lipschitz shape {name!r}; known: {known}")
        try:
            L = float(parts[2][2:])
        except ValueError:
            raise NonlinearityError(f"bad constant in {spec!r}") from None
        if not L > 0:
            raise NonlinearityError(f"Lipschitz constant must be positive, got {L}")
        f, df = _LIPSCHITZ_REGISTRY[name]
        return lipschitz(name, f, L, df)
    raise NonlinearityError(f"unknown nonlinearity spec {spec!r}")


# -- scalar root machinery ---------------------------------------------------

def monotone_root(fn, lo, hi, ftol, dfn=None, max_iter=256):
    """Root of a nondecreasing fn on a bracket, bisection with Newton polish.

    Requires fn(lo) <= 0 <= fn(hi).  Newton steps are taken when a finite
    positive derivative is available and the step stays inside the current
    bracket; otherwise the bracket is bisected.  Stops when |fn| <= ftol.
    """
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = fn(lo), fn(hi)
    if flo > 0 or fhi < 0:
        raise SolverError(f"root not bracketed: f({lo}) = {flo}, f({hi}) = {fhi}")
    if abs(flo) <= ftol:
        return lo
    if abs(fhi) <= ftol:
        return hi
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        ft = fn(t)
        if abs(ft) <= ftol:
            return t
        if ft > 0:
            hi = t
        else:
            lo = t
        width = hi - lo
        if width <= 4e-16 * max(abs(lo), abs(hi)) + 5e-324:
            t = 0.5 * (lo + hi)
            if abs(fn(t)) <= ftol:
                return t
            raise SolverError(
                f"bracket collapsed at {t} with residual {fn(t)} > {ftol}")
        moved = False
        if dfn is not None:
            d = dfn(t)
            if np.isfinite(d) and d > 0:
                tn = t - ft / d
                if lo < tn < hi:
                    t = tn
                    moved = True
        if not moved:
            t = 0.5 * (lo + hi)
    raise SolverError(f"scalar solve did not converge within {max_iter} iterations")


_MAX_BRACKET_DOUBLINGS = 64


def solve_increment_scalar(nl, lam, a, rhs, tol=1e-12):
    """Solve psi(s) + a*s = rhs for the unique s (generic Python path).

    a >= 0 is the diagonal diffusion weight of the node; a = 0 recovers the
    plain psi inverse.  Built-in shapes take the compiled closed-form /
    Newton route; everything else brackets by class and bisects.

    The root lies between 0 and rhs/slope where slope is the guaranteed
    growth of the left side: 1 + a for F1, 1 - lam L + a for F2.  The far
    endpoint is doubled (at most 64 times) if the declared class constants
    underestimate the reach.
    """
    if rhs == 0.0:
        return 0.0
    if nl.kernel_kind >= 0:
        return float(_kernels.solve_scalar(
            nl.kernel_kind, nl.kernel_param, lam, a, rhs))

    def fn(s):
        return s - lam * nl.f(s) + a * s - rhs

    slope = 1.0 + a if nl.cls == "F1" else 1.0 - lam * nl.L + a
    end = rhs / slope  # carries the sign of rhs
    grow = 0
    while (fn(end) < 0 if rhs > 0 else fn(end) > 0):
        end *= 2.0
        grow += 1
        if grow > _MAX_BRACKET_DOUBLINGS:
            raise NonlinearityError(
                f"{nl.name}: bracket expansion exceeded 2^{_MAX_BRACKET_DOUBLINGS}; "
                "declared class constants appear violated")
    lo, hi = (0.0, end) if rhs > 0 else (end, 0.0)
    dfn = None
    if nl.df is not None:
        dfn = lambda s: 1.0 - lam * nl.df(s) + a
    ftol = tol * max(1.0, abs(rhs))
    return monotone_root(fn, lo, hi, ftol, dfn=dfn)


@dataclass(frozen=True)
class PsiMap:
    """The scalar map psi(s) = s - lam * f(s) and its inverse.

    lam must be admissible for the class of f (any positive lam for F1,
    lam < 1/L for F2); inadmissible values are rejected at construction.
    """

    nl: Nonlinearity
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise NonlinearityError(f"lam must be positive, got {self.lam}")
        if not self.nl.admissible_lambda(self.lam):
            raise NonlinearityError(
                f"lam = {self.lam} not admissible for {self.nl.name} "
                f"(requires lam < {self.nl.max_lambda():g})")

    def __call__(self, s):
        return s - self.lam * self.nl.f(s)

    def inverse(self, y, tol=1e-12):
        """The unique s with |psi(s) - y| <= tol * max(1, |y|)."""
        if not tol > 0:
            raise ValueError(f"tol must be positive, got {tol}")
        return solve_increment_scalar(self.nl, self.lam, 0.0, y, tol=tol)
