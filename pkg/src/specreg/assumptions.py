"""Finite-n verification of the spectral/tuple conditions behind the
contraction guarantees, plus the canonical example tuples and a Lambert-W
solver.

The conditions are asymptotic "lhs is of smaller order than rhs"
statements; here each is operationalized at a concrete n as
``lhs <= c * rhs`` with a caller-supplied constant c (default 1).  Reports
carry lhs, rhs and the margin ``c * rhs - lhs`` so sensitivity to c is
visible.

The five condition ids:

``i``     n^{-1/2} <= c rho_n and rho_n <= c eps_n^2 (combined record)
``ii``    eps^2 (1 - n k (rho+l_k) l_k) / (k (rho+l_k) l_k)
          <= c (k/2) log(eps^2 / (k (rho+l_k) l_k)), each k in [L:U]
``iii``   sum_{k>L} l_k <= c n eps^4 / H^2
``iv-a``  U log(H U / eps) <= c n eps^2
``iv-b``  n eps^2 <= c (H^2 + L^2)

Condition (ii)'s logarithm has no positivity guard as printed; whenever
its argument is <= 1 the record is reported as failed and flagged, since
the bound is then vacuous-or-undefined rather than satisfied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

# Residual tolerance of the Lambert-W solver, relative to 1 + |x|.
LAMBERT_RTOL = 1e-12

CONDITION_IDS = ("i", "ii", "iii", "iv-a", "iv-b")


@dataclass(frozen=True)
class AssumptionTuple:
    """The tuple (eps_n, L_kappa, U_kappa, H_n, rho_n) under test."""

    epsilon_n: float
    L_kappa: int
    U_kappa: int
    H_n: float
    rho_n: float

    def __post_init__(self):
        if not 1 <= self.L_kappa <= self.U_kappa:
            raise ValueError(
                f"need 1 <= L_kappa <= U_kappa, got ({self.L_kappa}, {self.U_kappa})"
            )
        if min(self.epsilon_n, self.H_n, self.rho_n) <= 0:
            raise ValueError("epsilon_n, H_n and rho_n must all be positive")


@dataclass(frozen=True)
class ConditionRecord:
    condition_id: str
    lhs: float
    rhs: float
    passed: bool
    margin: float
    log_flagged: bool = False
    details: tuple = ()

    def as_dict(self) -> dict:
        out = {
            "condition_id": self.condition_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "pass": self.passed,
            "margin": self.margin,
        }
        if self.log_flagged:
            out["log_flagged"] = True
        if self.details:
            out["details"] = [dict(d) for d in self.details]
        return out


@dataclass(frozen=True)
class CheckReport:
    conditions: tuple
    constants_used: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.conditions)

    def condition(self, condition_id: str) -> ConditionRecord:
        for record in self.conditions:
            if record.condition_id == condition_id:
                return record
        raise KeyError(condition_id)

    def as_dict(self) -> dict:
        return {
            "pass": self.passed,
            "conditions": [r.as_dict() for r in self.conditions],
            "constants_used": dict(self.constants_used),
        }


class FiniteEigens:
    """A concrete descending positive eigenvalue array."""

    def __init__(self, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("eigenvalues must form a nonempty 1-D sequence")
        if np.any(values <= 0) or np.any(np.diff(values) > 0):
            raise ValueError("eigenvalues must be positive and non-increasing")
        self.values = values

    def value(self, k: int) -> float:
        if not 1 <= k <= self.values.size:
            raise ValueError(f"eigenvalue index {k} beyond the sequence length {self.values.size}")
        return float(self.values[k - 1])

    def tail_sum(self, L: int) -> float:
        return float(math.fsum(self.values[L:]))


@dataclass(frozen=True)
class ExponentialEigens:
    """lambda_k = exp(-k/tau) + nu, with a closed-form geometric tail.

    ``p = None`` means the sequence is conceptually unbounded; the tail is
    then the full geometric series, which requires nu = 0.
    """

    tau: float
    nu: float = 0.0
    p: int | None = None

    def __post_init__(self):
        if self.tau <= 0 or self.nu < 0:
            raise ValueError("need tau > 0 and nu >= 0")
        if self.p is None and self.nu > 0:
            raise ValueError("an unbounded sequence with nu > 0 has a divergent tail")

    def value(self, k: int) -> float:
        if k < 1 or (self.p is not None and k > self.p):
            raise ValueError(f"eigenvalue index {k} out of range")
        return math.exp(-k / self.tau) + self.nu

    def tail_sum(self, L: int) -> float:
        ratio = math.exp(-1.0 / self.tau)
        head = math.exp(-(L + 1) / self.tau)
        if self.p is None:
            return head / (1.0 - ratio)
        if L >= self.p:
            return 0.0
        geometric = head * (1.0 - ratio ** (self.p - L)) / (1.0 - ratio)
        return geometric + self.nu * (self.p - L)


@dataclass(frozen=True)
class PolynomialEigens:
    """lambda_k = 1/k with the harmonic tail in digamma closed form."""

    p: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("need p >= 1")

    def value(self, k: int) -> float:
        if not 1 <= k <= self.p:
            raise ValueError(f"eigenvalue index {k} out of range [1:{self.p}]")
        return 1.0 / k

    def tail_sum(self, L: int) -> float:
        if L >= self.p:
            return 0.0
        return float(scipy.special.digamma(self.p + 1.0) - scipy.special.digamma(L + 1.0))


def _as_sequence(eigs, U_kappa: int):
    if hasattr(eigs, "value") and hasattr(eigs, "tail_sum"):
        seq = eigs
        length = getattr(seq, "p", None)
        if isinstance(seq, FiniteEigens):
            length = seq.values.size
    else:
        seq = FiniteEigens(eigs)
        length = seq.values.size
    if length is not None and length < U_kappa:
        raise ValueError(f"eigenvalue sequence of length {length} does not reach U_kappa={U_kappa}")
    return seq


def check_precomb(eigs, n: int, t: AssumptionTuple, c: float = 1.0) -> CheckReport:
    """Evaluate the five finite-n condition records for a tuple.

    ``eigs`` is a descending positive array, or any object exposing
    ``value(k)`` (1-based) and ``tail_sum(L)``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if c <= 0:
        raise ValueError("the comparison constant c must be positive")
    seq = _as_sequence(eigs, t.U_kappa)
    eps2 = t.epsilon_n**2
    records = []

    # (i): both bounds folded into one record via the larger ratio.
    lhs_i = max(n**-0.5 / t.rho_n, t.rho_n / eps2)
    records.append(ConditionRecord("i", lhs_i, 1.0, lhs_i <= c, c - lhs_i))

    details = []
    worst = None
    flagged = False
    for k in range(t.L_kappa, t.U_kappa + 1):
        lam = seq.value(k)
        denom = k * (t.rho_n + lam) * lam
        log_arg = eps2 / denom
        lhs_k = eps2 * (1.0 - n * denom) / denom
        if log_arg <= 1.0:
            rhs_k = -math.inf if log_arg <= 0 else (k / 2.0) * math.log(log_arg)
            ok = False
            flagged = True
        else:
            rhs_k = (k / 2.0) * math.log(log_arg)
            ok = lhs_k <= c * rhs_k
        margin = c * rhs_k - lhs_k
        details.append(
            {"k": k, "lhs": lhs_k, "rhs": rhs_k, "pass": ok, "margin": margin,
             "log_arg": log_arg}
        )
        if worst is None or margin < worst["margin"]:
            worst = details[-1]
    records.append(
        ConditionRecord(
            "ii", worst["lhs"], worst["rhs"], all(d["pass"] for d in details),
            worst["margin"], log_flagged=flagged, details=tuple(details),
        )
    )

    lhs_iii = seq.tail_sum(t.L_kappa)
    rhs_iii = n * eps2**2 / t.H_n**2
    records.append(
        ConditionRecord("iii", lhs_iii, rhs_iii, lhs_iii <= c * rhs_iii, c * rhs_iii - lhs_iii)
    )

    lhs_iva = t.U_kappa * math.log(t.H_n * t.U_kappa / t.epsilon_n)
    rhs_iva = n * eps2
    records.append(
        ConditionRecord("iv-a", lhs_iva, rhs_iva, lhs_iva <= c * rhs_iva, c * rhs_iva - lhs_iva)
    )

    lhs_ivb = n * eps2
    rhs_ivb = t.H_n**2 + t.L_kappa**2
    records.append(
        ConditionRecord("iv-b", lhs_ivb, rhs_ivb, lhs_ivb <= c * rhs_ivb, c * rhs_ivb - lhs_ivb)
    )
    return CheckReport(tuple(records), constants_used={"c": c, "n": n})


def example_exponential_tuple(
    n: int, tau: float, m: float, nu_n: float = 0.0
) -> tuple[AssumptionTuple, ExponentialEigens]:
    """The exponential-decay example tuple.

    H = sqrt(n), L = floor(m log n), U = ceil((tau/2) log n),
    eps = n^{-1/(6 tau)}, rho = n^{-1/(2 tau)}; eigenvalues
    exp(-k/tau) + nu_n.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if tau <= 1:
        raise ValueError(f"need tau > 1, got {tau}")
    if not 1.0 / 6.0 < m < tau / 2.0:
        raise ValueError(f"need m in (1/6, tau/2), got m={m} with tau={tau}")
    log_n = math.log(n)
    t = AssumptionTuple(
        epsilon_n=n ** (-1.0 / (6.0 * tau)),
        L_kappa=max(1, math.floor(m * log_n)),
        U_kappa=math.ceil((tau / 2.0) * log_n),
        H_n=math.sqrt(n),
        rho_n=n ** (-1.0 / (2.0 * tau)),
    )
    return t, ExponentialEigens(tau=tau, nu=nu_n, p=None if nu_n == 0 else 8 * n * n)


def lambert_truncation_level(n: int, tau: float, theta_const: float = 1.0) -> int:
    """The alternative single-level choice ``-2 tau W0(-1/(2 tau n^{1/4}))``.

    The hidden proportionality constant defaults to 1 and the result is
    rounded to the nearest positive integer.
    """
    if n < 1 or tau <= 0 or theta_const <= 0:
        raise ValueError("need n >= 1, tau > 0, theta_const > 0")
    level = -2.0 * tau * lambert_w0(-1.0 / (2.0 * tau * n**0.25))
    return max(1, round(theta_const * level))


def example_polynomial_tuple(
    n: int, alpha: float, beta: float | None = None
) -> tuple[AssumptionTuple, PolynomialEigens]:
    """The polynomial-decay example tuples, lambda_k = 1/k.

    With ``beta`` given the dimension is exp(n^beta) and
    H = n^{(alpha-4)/(2 alpha) - beta/2}, rho = n^{-2/(alpha-1)}; with
    ``beta=None`` the polynomial-dimension variant uses
    H = n^{(alpha-5)/(2 alpha)}, rho = n^{-1/2} and p = n^2.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if alpha <= 6:
        raise ValueError(f"need alpha > 6, got {alpha}")
    if beta is None:
        H = n ** ((alpha - 5.0) / (2.0 * alpha))
        rho = n**-0.5
        p = float(n) ** 2
    else:
        if not 0.0 < beta < (alpha - 4.0) / alpha:
            raise ValueError(f"need 0 < beta < (alpha-4)/alpha, got beta={beta}")
        H = n ** ((alpha - 4.0) / (2.0 * alpha) - beta / 2.0)
        rho = n ** (-2.0 / (alpha - 1.0))
        p = math.exp(n**beta)
    t = AssumptionTuple(
        epsilon_n=n ** (-1.0 / alpha),
        L_kappa=max(1, math.floor(n ** ((alpha - 1.0) / (2.0 * alpha)))),
        U_kappa=math.ceil(n ** ((alpha - 3.0) / alpha)),
        H_n=H,
        rho_n=rho,
    )
    return t, PolynomialEigens(p=p)


def lambert_w0(x: float) -> float:
    """Principal branch of w e^w = x, Halley-polished.

    The library value is refined until |w e^w - x| <= 1e-12 (1 + |x|).
    """
    if x < -1.0 / math.e:
        raise ValueError(f"lambert_w0 requires x >= -1/e, got {x}")
    w = float(scipy.special.lambertw(x, 0).real)
    if not math.isfinite(w):
        # Only the branch point maps to a non-finite intermediate.
        return -1.0
    for _ in range(8):
        ew = math.exp(w)
        resid = w * ew - x
        if abs(resid) <= LAMBERT_RTOL * (1.0 + abs(x)):
            return w
        denom = ew * (w + 1.0) - (w + 2.0) * resid / (2.0 * w + 2.0) if w != -1.0 else ew
        w -= resid / denom
    return w
