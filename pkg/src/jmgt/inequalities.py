"""Empirical checks of the interpolation inequalities used by the energy estimates.

Three inequality shapes, each with a parameter relation validated in exact
rational arithmetic before any number is computed:

``GN``
    ``||grad^j u||_p <= C ||grad^m u||_r**alpha ||u||_q**(1 - alpha)`` with
    ``1/p = j/n + alpha (1/r - m/n) + (1 - alpha)/q`` and ``j/m <= alpha <= 1``.
``SGN``
    ``||grad^a f||_p <= C ||grad^l f||_2**theta ||grad^m f||_2**(1 - theta)`` with
    ``1/p = a/n + (1/2 - l/n) theta + (1/2 - m/n)(1 - theta)``.
``NEG``
    ``||grad^l f||_2 <= C ||grad^(l+1) f||_2**(1 - theta) ||Lambda^(-gamma) f||_2**theta``
    with ``theta = 1/(l + gamma + 1)``.

A ratio is LHS / RHS with ``C = 1``; the maximum over a family is the
empirical constant.  Infinite exponents are written ``math.inf``.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import spectral
from .exceptions import ConfigurationError
from .experiments import exponent_value
from .spectral import GridSpec

__all__ = ["InequalitySpec", "validate", "check_inequality", "FieldNorms", "dilation_scan",
           "empirical_constant", "gaussian_family", "log_family", "band_family",
           "single_mode_family", "preregistered_suites", "adversarial_specs",
           "DEFAULT_GRID", "DILATIONS", "run_suite"]

DEFAULT_GRID = GridSpec(3, 64, 24.0)
DILATIONS = (0.5, 1.0, 2.0)
WIDTHS = (1.0, 1.125, 1.25, 1.375, 1.5)


def _frac(x):
    if x == math.inf:
        return math.inf
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 6)
    return Fraction(x)


def _inv(p):
    return Fraction(0) if p == math.inf else 1 / p


@dataclass(frozen=True)
class InequalitySpec:
    """One inequality instance.  ``params`` keys:

    GN: ``j, m, p, q, r, alpha``; SGN: ``a, l, m, p, theta``; NEG: ``l, gamma, theta``.
    ``n`` is the space dimension.  Construction validates; see :func:`validate`.
    """
    kind: str
    params: tuple
    n: int = 3
    name: str = ""
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(validate(self.kind, dict(self.params), self.n)))

    @classmethod
    def make(cls, kind, n=3, name="", **params):
        return cls(kind, tuple(sorted((k, _frac(v)) for k, v in params.items())), n, name)

    @property
    def p(self):
        return dict(self.params)


def _need(params, keys, kind):
    missing = [k for k in keys if k not in params]
    extra = [k for k in params if k not in keys]
    if missing or extra:
        raise ConfigurationError(f"{kind} needs parameters {keys}; missing {missing}, unexpected {extra}")
    return [_frac(params[k]) for k in keys]


def validate(kind, params, n=3):
    """Check admissibility; returns a list of notes, raises ``ConfigurationError``."""
    notes = []
    if n not in (1, 2, 3):
        raise ConfigurationError(f"dimension must be 1, 2 or 3, got {n}")
    if kind == "GN":
        j, m, p, q, r, alpha = _need(params, ["j", "m", "p", "q", "r", "alpha"], kind)
        if m == math.inf or m.denominator != 1 or m < 1:
            raise ConfigurationError(f"GN: m must be a positive integer, got {m}")
        if j == math.inf or j.denominator != 1 or not 0 <= j < m:
            raise ConfigurationError(f"GN: j must be an integer with 0 <= j < m, got j={j}, m={m}")
        for name, v in (("p", p), ("q", q), ("r", r)):
            if v != math.inf and v < 1:
                raise ConfigurationError(f"GN: need 1 <= {name} <= inf, got {name}={v}")
        if alpha == math.inf or not Fraction(j, m) <= alpha <= 1:
            raise ConfigurationError(f"GN: need j/m <= alpha <= 1, got alpha={alpha}")
        lhs = _inv(p)
        rhs = Fraction(j, n) + alpha * (_inv(r) - Fraction(m, n)) + (1 - alpha) * _inv(q)
        if lhs != rhs:
            raise ConfigurationError(
                f"GN: 1/p = j/n + alpha (1/r - m/n) + (1 - alpha)/q violated: {lhs} != {rhs}")
        if r != math.inf and 1 < r:
            gap = m - j - Fraction(n) / r
            if gap >= 0 and gap.denominator == 1 and alpha == 1:
                raise ConfigurationError(
                    f"GN: m - j - n/r = {gap} is a nonnegative integer, so alpha must be < 1")
        if j == 0 and r != math.inf and r * m < n and q == math.inf:
            notes.append("decay at infinity or finite-q integrability assumed; "
                         "continuum-only condition, automatic on the torus")
    elif kind == "SGN":
        a, l, m, p, theta = _need(params, ["a", "l", "m", "p", "theta"], kind)
        if any(v == math.inf for v in (a, l, m, theta)):
            raise ConfigurationError("SGN: a, l, m, theta must be finite")
        if not 0 <= theta <= 1:
            raise ConfigurationError(f"SGN: need 0 <= theta <= 1, got {theta}")
        if p != math.inf and p < 2:
            raise ConfigurationError(f"SGN: need 2 <= p <= inf, got p={p}")
        hi, lo = (l, m) if l >= m else (m, l)
        if lo < 0 or a < 0 or a > hi:
            raise ConfigurationError(
                f"SGN: need 0 <= m, a <= l (orders sorted), got a={a}, orders {lo}, {hi}")
        if p == math.inf and not (lo <= a + 1 and hi >= a + 2):
            raise ConfigurationError("SGN with p = inf needs lower order <= a + 1 and upper >= a + 2")
        half = Fraction(1, 2)
        lhs = _inv(p)
        rhs = a / n + (half - l / n) * theta + (half - m / n) * (1 - theta)
        if lhs != rhs:
            raise ConfigurationError(
                f"SGN: 1/p = a/n + (1/2 - l/n) theta + (1/2 - m/n)(1 - theta) violated: {lhs} != {rhs}")
    elif kind == "NEG":
        l, gamma, theta = _need(params, ["l", "gamma", "theta"], kind)
        if any(v == math.inf for v in (l, gamma, theta)) or l < 0 or gamma < 0:
            raise ConfigurationError(f"NEG: need finite l >= 0 and gamma >= 0, got l={l}, gamma={gamma}")
        if theta != 1 / (l + gamma + 1):
            raise ConfigurationError(f"NEG: theta = 1/(l + gamma + 1) violated: {theta} != {1 / (l + gamma + 1)}")
    else:
        raise ConfigurationError(f"unknown inequality kind {kind!r}")
    return notes


# ---------------------------------------------------------------- norms

class FieldNorms:
    """Memoized norms of one sampled field; reused across inequality instances."""

    def __init__(self, f, grid):
        self.f, self.grid = f, grid
        self.F = spectral.forward_transform(f, grid)
        self._mag, self._lp, self._l2 = {}, {}, {}

    def deriv_lp(self, order, p):
        """``||grad^order f||_p`` from the pointwise tensor magnitude."""
        order = float(order)
        p = math.inf if p == math.inf else float(p)
        key = (order, p)
        if key not in self._lp:
            if order not in self._mag:
                o = int(order) if order.is_integer() else order
                self._mag[order] = spectral.derivative_magnitude(self.F, self.grid, o)
            self._lp[key] = spectral.lp_norm(self._mag[order], p, self.grid)
        return self._lp[key]

    def l2(self, order):
        order = float(order)
        if order not in self._l2:
            self._l2[order] = math.sqrt(spectral.spectral_sq_norm(self.F, self.grid, order))
        return self._l2[order]


def check_inequality(spec, f, grid, norms=None):
    """``LHS / RHS`` with unit constant for the real field ``f``.

    Pass a :class:`FieldNorms` for ``f`` to share norm evaluations.
    """
    nm = norms or FieldNorms(f, grid)
    q = spec.p
    if spec.kind == "GN":
        lhs = nm.deriv_lp(q["j"], q["p"])
        a = float(q["alpha"])
        rhs = nm.deriv_lp(q["m"], q["r"]) ** a * nm.deriv_lp(0, q["q"]) ** (1 - a)
    elif spec.kind == "SGN":
        lhs = nm.deriv_lp(q["a"], q["p"])
        th = float(q["theta"])
        rhs = nm.l2(q["l"]) ** th * nm.l2(q["m"]) ** (1 - th)
    else:
        l = float(q["l"])
        th = float(q["theta"])
        lhs = nm.l2(l)
        rhs = nm.l2(l + 1) ** (1 - th) * nm.l2(-float(q["gamma"])) ** th
    if rhs == 0:
        return math.inf if lhs > 0 else float("nan")
    return lhs / rhs


# ---------------------------------------------------------------- families

@dataclass(frozen=True)
class FamilyMember:
    """A named test function ``make(grid, lam)`` returning ``f(lam x)`` sampled on ``grid``.

    ``dilatable`` marks functions for which ``f(lam x)`` is the same function
    class on the torus (Gaussians and their Laplacians, well inside the box).
    """
    name: str
    make: object
    dilatable: bool = True


def _gauss_hat(sigma, grid):
    """Spectral coefficients of the periodized Gaussian centred in the box.

    Built from the continuum transform, so the field is smooth on the torus
    (sampling ``exp(-r**2 / 2 s**2)`` on one cell leaves a kink at the edge
    once ``s`` is a sizeable fraction of ``L``).
    """
    sign = sum(grid.mode_numbers) % 2
    F = np.exp(-0.5 * sigma * sigma * grid.xi2) * np.where(sign, -1.0, 1.0)
    return F.astype(complex)


def _gauss(sigma):
    def make(grid, lam=1.0):
        f = spectral.inverse_transform(_gauss_hat(sigma / lam, grid), grid)
        return f / np.max(np.abs(f))
    return make


def _log(sigma):
    def make(grid, lam=1.0):
        f = spectral.inverse_transform(-grid.xi2 * _gauss_hat(sigma / lam, grid), grid)
        return f / np.max(np.abs(f))
    return make


def gaussian_family(widths=WIDTHS):
    return [FamilyMember(f"gaussian(sigma={w:g})", _gauss(w)) for w in widths]


def log_family(widths=WIDTHS):
    """Laplacians of Gaussians: exactly zero mean, as negative-order norms need."""
    return [FamilyMember(f"laplacian-gaussian(sigma={w:g})", _log(w)) for w in widths]


def _band_field(k1, k2, seed):
    def make(grid, lam=1.0):
        rng = np.random.default_rng(seed)
        xi = grid.xi * lam
        keep = (xi >= k1) & (xi < k2)
        F = (rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)) * keep
        f = np.fft.ifftn(F).real
        return f / np.sqrt(np.mean(f ** 2))
    return make


BANDS = ((1.0, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0))


def band_family(bands=BANDS, seed=7):
    return [FamilyMember(f"band[{a:g},{b:g})", _band_field(a, b, seed + i), dilatable=False)
            for i, (a, b) in enumerate(bands)]


def single_mode_family(grid, modes=((1, 0, 0), (2, 0, 0), (1, 1, 0), (2, 1, 1)), amplitude=1.0):
    return [FamilyMember(f"mode{m}", (lambda m: lambda g, lam=1.0: g.single_mode(m, amplitude))(m),
                         dilatable=False) for m in modes]


def _resolved(f, grid, frac=1e-6):
    """Spectral energy in the outer third of the lattice below ``frac``."""
    F = spectral.forward_transform(f, grid)
    outer = ~grid.dealias_mask
    tot = np.sum(np.abs(F) ** 2)
    return tot == 0 or np.sum(np.abs(F[outer]) ** 2) <= frac * tot


def dilation_scan(spec, member, grid, lams=DILATIONS):
    """Ratios for ``f(lam x)``; a member that cannot be dilated or is
    under-resolved at some ``lam`` is flagged (its ratio is still reported)."""
    out = []
    for lam in lams:
        f = member.make(grid, lam)
        flagged = (not member.dilatable) and lam != 1.0
        if not _resolved(f, grid):
            flagged = True
        out.append((lam, check_inequality(spec, f, grid), flagged))
    return out


def empirical_constant(spec, family, grid):
    """``(C_hat, argmax member name)`` over the family at ``lam = 1``."""
    if not family:
        raise ConfigurationError("empty test family")
    best, who = -math.inf, None
    for member in family:
        r = check_inequality(spec, member.make(grid, 1.0), grid)
        if r > best:
            best, who = r, member.name
    return best, who


# ---------------------------------------------------------------- pre-registered suites

def _sgn(name, a, upper, lower, theta_lower, p=3):
    """SGN instance with ``theta_lower`` on the lower-order factor."""
    return InequalitySpec.make("SGN", name=name, a=a, l=lower, m=upper, p=p, theta=theta_lower)


def energy_estimate_instances(ks=(2, 3)):
    """The interpolation steps of the nonlinear estimates at small ``k``."""
    out = []
    for k in ks:
        for l in range(0, k):
            th = Fraction(1 + l, k)
            out.append(_sgn(f"w-L6 k={k} l={l}", l, k, 0, 1 - th, p=6))
            out.append(_sgn(f"m0 k={k} l={l}", k - 1 - l, k, exponent_value("m0", k, l), th))
            th1 = Fraction(l + 2, k + 1)
            out.append(_sgn(f"m1 k={k} l={l}", k - l, k + 2, exponent_value("m1", k, l) + 1, th1))
        for l in range(0, k + 1):
            th = Fraction(1 + l, 1 + k)
            out.append(_sgn(f"m2 k={k} l={l}", k + 1 - l, k + 2, exponent_value("m2", k, l) + 1, th))
            out.append(_sgn(f"m4 k={k} l={l}", k - l, k + 1, exponent_value("m4", k, l), th))
        for l in range(1, k + 1):
            th = Fraction(2 * l + 1, 2 * k + 1)
            out.append(_sgn(f"m3 k={k} l={l}", k + 2 - l, k + 2, exponent_value("m3", k, l) + 1, th))
        for l in range(1, k):
            th = Fraction(2 + l, 1 + k)
            out.append(_sgn(f"m5 k={k} l={l}", k + 1 - l, k + 2, exponent_value("m5", k, l) + 1, th))
    return out


def preregistered_suites():
    """Named ``(specs, family, dilate)`` triples.  ``dilate`` says whether the
    dilation-drift check applies (Gaussian-type families only)."""
    gn = [InequalitySpec.make("GN", name="GN j=1 m=2 p=q=r=2", j=1, m=2, p=2, q=2, r=2,
                              alpha=Fraction(1, 2)),
          InequalitySpec.make("GN", name="GN j=1 m=2 p=4 q=inf r=2", j=1, m=2, p=4,
                              q=math.inf, r=2, alpha=Fraction(1, 2))]
    sgn = [InequalitySpec.make("SGN", name="SGN a=1 l=2 m=0 p=2", a=1, l=2, m=0, p=2,
                               theta=Fraction(1, 2))]
    neg = [InequalitySpec.make("NEG", name=f"NEG l={l} gamma={g}", l=l, gamma=g,
                               theta=Fraction(1, l + g + 1))
           for l, g in ((0, 1), (1, 1), (0, Fraction(1, 2)))]
    return {
        "gn-gaussian": (gn, gaussian_family(), True),
        "gn-band": (gn, band_family(), False),
        "sgn-gaussian": (sgn, gaussian_family(), True),
        "neg-laplacian-gaussian": (neg, log_family(), True),
        "energy-estimates": (energy_estimate_instances(), gaussian_family(), True),
    }


def run_suite(specs, family, grid, dilate):
    """Rows ``(spec, member, lam, ratio, flagged)`` and a summary per spec:
    ``(C_hat, argmax, max dilation drift)``.

    Each dilated field is sampled once and its norms shared by all specs.
    """
    lams = DILATIONS if dilate else (1.0,)
    ratios = {}
    for member in family:
        for lam in lams:
            f = member.make(grid, lam)
            flagged = ((not member.dilatable) and lam != 1.0) or not _resolved(f, grid)
            nm = FieldNorms(f, grid)
            for i, spec in enumerate(specs):
                ratios[i, member.name, lam] = (check_inequality(spec, f, grid, nm), flagged)
    rows, summary = [], {}
    for i, spec in enumerate(specs):
        best, who, drift = -math.inf, None, 0.0
        for member in family:
            base = ratios[i, member.name, 1.0][0]
            for lam in lams:
                r, fl = ratios[i, member.name, lam]
                rows.append((spec, member.name, lam, r, fl))
                if lam != 1.0 and not fl:
                    drift = max(drift, abs(r / base - 1))
            if base > best:
                best, who = base, member.name
        summary[spec.name] = (best, who, drift)
    return rows, summary


def adversarial_specs():
    """Twenty parameter sets that must each be rejected by validation."""
    h = Fraction(1, 2)
    return [
        ("GN", dict(j=1, m=2, p=2, q=2, r=2, alpha=Fraction(1, 3))),       # relation off
        ("GN", dict(j=1, m=2, p=3, q=2, r=2, alpha=h)),                     # relation off
        ("GN", dict(j=2, m=2, p=2, q=2, r=2, alpha=1)),                     # j = m
        ("GN", dict(j=3, m=2, p=2, q=2, r=2, alpha=1)),                     # j > m
        ("GN", dict(j=0, m=0, p=2, q=2, r=2, alpha=0)),                     # m not positive
        ("GN", dict(j=1, m=2, p=Fraction(1, 2), q=2, r=2, alpha=h)),        # p < 1
        ("GN", dict(j=1, m=2, p=2, q=2, r=2, alpha=Fraction(1, 4))),        # alpha < j/m
        ("GN", dict(j=0, m=1, p=2, q=2, r=2, alpha=Fraction(3, 2))),        # alpha > 1
        ("GN", dict(j=0, m=2, p=math.inf, q=2, r=2, alpha=1)),              # relation off
        ("GN", dict(j=0, m=1, p=math.inf, q=2, r=3, alpha=1)),              # exceptional case 2
        ("GN", dict(j=Fraction(1, 2), m=2, p=2, q=2, r=2, alpha=h)),        # j not integer
        ("SGN", dict(a=1, l=2, m=0, p=2, theta=Fraction(1, 3))),            # relation off
        ("SGN", dict(a=1, l=2, m=0, p=Fraction(3, 2), theta=h)),            # p < 2
        ("SGN", dict(a=3, l=2, m=0, p=2, theta=h)),                         # a above both orders
        ("SGN", dict(a=1, l=2, m=0, p=2, theta=Fraction(3, 2))),            # theta > 1
        ("SGN", dict(a=1, l=2, m=-1, p=2, theta=h)),                        # negative order
        ("SGN", dict(a=0, l=2, m=Fraction(3, 2), p=math.inf, theta=0)),      # p = inf extras
        ("NEG", dict(l=0, gamma=1, theta=Fraction(1, 3))),                  # theta off
        ("NEG", dict(l=-1, gamma=1, theta=1)),                              # l < 0
        ("NEG", dict(l=0, gamma=-1, theta=1)),                              # gamma < 0
    ]
