"""
The extremal problem: tuning of T, optimal weights, least-favorable profiles
and separation rates.

With r_l = (T q_l - c_l)_+ and J = sum c_l r_l the saddle point is
w_l = r_l / ||r||_2 and v_l = r_l / J, with separation r^2 = <q, v>.
"""

import logging
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from quadtest.core import conditions, spectra
from quadtest.core.basis import default_grid_size, sup_sum_squares
from quadtest.core.quantile import two_sided_critical_value
from quadtest.errors import (
    DomainError,
    InfeasibleSeparationError,
    NumericalError,
    TuningError,
)
from quadtest.models.basis_spec import BasisSpec
from quadtest.models.coefficients import CoefficientSpec, FiniteList, SobolevDerivative
from quadtest.models.solution import (
    ExtremalSolution,
    NonasymptoticBound,
    RegimeRate,
    SaddleOracleResult,
)
from quadtest.models.spectral import ActiveSet
from quadtest.models.testing import IndefiniteThresholdConfig

logger = logging.getLogger(__name__)

TUNING_TOL = 1e-7
RHO_TOL = 1e-8
MAX_DOUBLINGS = 200
MAX_BISECTIONS = 300
# Grid-sup evaluations above this many (points x indices) entries are skipped.
SUP_SUM_BUDGET = 5e7
# KKT residual above which the brute-force oracle falls back to enumerating supports.
ORACLE_TOL = 1e-9


def require_nonnegative(spec: CoefficientSpec) -> None:
    if spec.signed or (isinstance(spec, FiniteList) and np.any(spec.q < 0)):
        raise DomainError("this operation needs a nonnegative functional, q_l >= 0 for every index")


def sample_split_size(n: int) -> int:
    """m = n - floor(sqrt(n)), the part of the sample feeding the U-statistic."""
    return n - math.isqrt(n)


def optimal_profile(active: ActiveSet, T: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Optimal weights and least-favorable profile on N(T).

    Args:
        active (ActiveSet): N(T)
        T (Optional[float]): Truncation level, defaults to the set's threshold

    Returns:
        Tuple[np.ndarray, np.ndarray, float]: (w*, v*, J)
    """
    T = active.threshold if T is None else T
    r = np.clip(T * np.abs(active.q) - active.c, 0.0, None)
    J = float(active.c @ r)
    norm = float(np.linalg.norm(r))
    if J <= 0 or norm <= 0:
        raise NumericalError(f"N(T) is empty at T = {T:.6g}", {"T": T})
    return r / norm, r / J, J


def _bisect_log(f: Callable[[float], float], lo: float, hi: float, tol: float) -> Tuple[float, float]:
    """
    Root of a nonincreasing f on [lo, hi] with f(lo) > 0 >= f(hi), bisecting log T.

    Returns the first midpoint with |f| <= tol, or the best midpoint seen.
    """
    best = (math.inf, hi)
    for _ in range(MAX_BISECTIONS):
        mid = math.sqrt(lo * hi)
        value = f(mid)
        if abs(value) < best[0]:
            best = (abs(value), mid)
        if abs(value) <= tol:
            return mid, abs(value)
        if value > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    return best[1], best[0]


def _expand_bracket(spec: CoefficientSpec, lo: float, still_above: Callable[[ActiveSet], bool],
                    max_box_side: int) -> ActiveSet:
    """Double T from 2 lo until the predicate fails; returns the active set at the bracket top."""
    hi = 2.0 * lo
    for _ in range(MAX_DOUBLINGS):
        top = spectra.active_set(spec, hi, max_box_side)
        if not still_above(top):
            return top
        logger.debug("bracket expanded to T = %.6g (|N| = %d)", hi, len(top))
        hi *= 2.0
    raise TuningError(f"no sign change found up to T = {hi:.6g}", {"T_max": hi})


def _ratio(active: ActiveSet, T: float) -> float:
    sums = spectra.spectral_sums(active.restrict(T), T)
    return sums.I1 / (T * sums.I2) if sums.I2 > 0 else math.inf


def solve_T_rho(spec: CoefficientSpec, rho: float, max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    The level T_rho at which <q, v*> = rho^2.

    The ratio R(T) = sum q (Tq - c)_+ / sum c (Tq - c)_+ is nonincreasing in T
    and starts at max q/c just above the entry threshold.

    Args:
        spec (CoefficientSpec): Nonnegative coefficient family
        rho (float): Target separation
        max_box_side (int): Cap on the enumeration box side

    Returns:
        float: T with |R(T) - rho^2| <= 1e-8 rho^2
    """
    require_nonnegative(spec)
    if not rho > 0:
        raise DomainError(f"rho > 0 is required, got {rho}")
    target = rho * rho
    T0 = spectra.smallest_entry_threshold(spec, max_box_side)
    top = 1.0 / T0
    if target > top * (1.0 + 1e-12):
        raise InfeasibleSeparationError(
            f"rho^2 = {target:.6g} exceeds the attainable maximum max q/c = {top:.6g}", endpoint=top)
    if isinstance(spec, FiniteList):
        support = spec.q > 0
        floor = float(np.sum(spec.q[support] ** 2) / np.sum(spec.c[support] * spec.q[support]))
        if target <= floor * (1.0 + 1e-12):
            raise InfeasibleSeparationError(
                f"rho^2 = {target:.6g} is at or below the attainable infimum {floor:.6g}", endpoint=floor)
    lo = T0 * (1.0 + 1e-9)
    top_set = _expand_bracket(spec, lo, lambda s: _ratio(s, s.threshold) > target, max_box_side)
    if abs(_ratio(top_set, lo) - target) <= RHO_TOL * target:
        return lo
    T, residual = _bisect_log(lambda t: (_ratio(top_set, t) - target) / target, lo, top_set.threshold, RHO_TOL)
    if residual > RHO_TOL:
        raise TuningError(f"rho equation residual {residual:.3g} above tolerance", {"T": T, "rho": rho})
    return T


def tuning_ratio(active: ActiveSet, T: float, m: int, z: float) -> float:
    """
    g(T) = sqrt(m(m-1)/2) ||(Tq - c)_+||_2 / (2 z sum c (Tq - c)_+); the tuned level solves g = 1.
    """
    sums = spectra.spectral_sums(active.restrict(T), T)
    if sums.I2 <= 0:
        return math.inf
    return math.sqrt(m * (m - 1) / 2.0) * math.sqrt(sums.I0) / (2.0 * z * T * sums.I2)


def _minimum_n(g_entry: float, n: int) -> int:
    """Smallest n' with g at the entry threshold above one, g scaling like sqrt(m(m-1))."""
    def scale(k: int) -> float:
        m = sample_split_size(k)
        return math.sqrt(m * (m - 1))

    base = scale(n)
    lo, hi = n, max(n + 1, 4)
    while g_entry * scale(hi) / base <= 1.0:
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if g_entry * scale(mid) / base > 1.0:
            hi = mid
        else:
            lo = mid
    return hi


def solve_T_n_gamma(spec: CoefficientSpec, n: int, gamma: float,
                    max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    Tuned truncation level: sqrt(m(m-1)/2) ||(Tq-c)_+||_2 = 2 z_{1-gamma/2} sum c (Tq-c)_+.

    Args:
        spec (CoefficientSpec): Nonnegative coefficient family
        n (int): Sample size, at least 4
        gamma (float): Significance level
        max_box_side (int): Cap on the enumeration box side

    Returns:
        float: T with relative residual below 1e-7
    """
    require_nonnegative(spec)
    if n < 4:
        raise DomainError(f"n >= 4 is required, got {n}")
    m = sample_split_size(n)
    z = two_sided_critical_value(gamma)
    T0 = spectra.smallest_entry_threshold(spec, max_box_side)
    lo = T0 * (1.0 + 1e-9)
    entry = spectra.active_set(spec, 2.0 * T0, max_box_side)
    g_lo = tuning_ratio(entry, lo, m, z)
    if g_lo <= 1.0:
        raise TuningError(
            f"the tuning equation has no root for n = {n}: the first indices already over-smooth",
            {"n": n, "gamma": gamma, "T_entry": T0, "g_entry": g_lo},
            minimum_n=_minimum_n(g_lo, n),
        )
    top = _expand_bracket(spec, lo, lambda s: tuning_ratio(s, s.threshold, m, z) > 1.0, max_box_side)
    g = lambda t: tuning_ratio(top, t, m, z) - 1.0  # noqa: E731
    T, residual = _bisect_log(g, lo, top.threshold, TUNING_TOL)
    if residual > TUNING_TOL:
        logger.warning("bisection on the tuning equation stalled at residual %.3g, falling back to a scan", residual)
        T, residual = _scan_fallback(g, lo, top.threshold)
    if residual > TUNING_TOL:
        raise TuningError(f"tuning residual {residual:.3g} above tolerance", {"T": T, "n": n, "gamma": gamma})
    logger.info("tuned T = %.6g for n = %d, gamma = %g", T, n, gamma)
    return T


def _scan_fallback(f: Callable[[float], float], lo: float, hi: float, points: int = 512) -> Tuple[float, float]:
    grid = np.geomspace(lo, hi, points)
    values = np.array([f(t) for t in grid])
    crossings = np.flatnonzero((values[:-1] > 0) & (values[1:] <= 0))
    if crossings.size == 0:
        best = int(np.argmin(np.abs(values)))
        return float(grid[best]), float(abs(values[best]))
    k = int(crossings[0])
    return _bisect_log(f, float(grid[k]), float(grid[k + 1]), TUNING_TOL)


def separation_rate(spec: CoefficientSpec, n: int, gamma: float, basis: Optional[BasisSpec] = None,
                    pilot_branch: Optional[str] = None, check_branch: bool = False,
                    max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> ExtremalSolution:
    """
    Tuned extremal solution with rate, weights and condition diagnostics.

    Args:
        spec (CoefficientSpec): Nonnegative coefficient family
        n (int): Sample size
        gamma (float): Significance level
        basis (Optional[BasisSpec]): Basis for the C3 check
        pilot_branch (Optional[str]): Pilot branch for the C6 check
        check_branch (bool): Whether to report C6
        max_box_side (int): Cap on the enumeration box side

    Returns:
        ExtremalSolution: The assembled solution
    """
    T = solve_T_n_gamma(spec, n, gamma, max_box_side)
    active = spectra.active_set(spec, T, max_box_side)
    sums = spectra.spectral_sums(active)
    weights, v, _ = optimal_profile(active)
    rate = math.sqrt(sums.I1 / (T * sums.I2))
    sup_sum = None
    if basis is not None:
        points = default_grid_size(basis, active) ** basis.dimension
        if points * len(active) <= SUP_SUM_BUDGET:
            sup_sum = sup_sum_squares(basis, active)
    checks = conditions.sharp_conditions(active, sums, weights, n, sup_sum, basis, pilot_branch, check_branch)
    logger.info("separation rate %.6g at T = %.6g with |N(T)| = %d", rate, T, len(active))
    return ExtremalSolution(T, n, gamma, active, weights, v, rate, sums, checks)


def kkt_residual(solution: ExtremalSolution, spec: CoefficientSpec,
                 max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    Scaled KKT residual of (v*, lambda, mu, nu) over N(T) and the shell N(2T) minus N(T).

    With lambda = 2/J, mu = 2T/J and nu_l = 2(c_l - T q_l)_+/J the stationarity
    residual is 2v + lambda c - mu q - nu, reported relative to max(lambda c + mu |q|).

    Args:
        solution (ExtremalSolution): Output of separation_rate
        spec (CoefficientSpec): The family it was computed for

    Returns:
        float: max_l |residual_l| / max_l (lambda c_l + mu |q_l|)
    """
    T = solution.T
    _, _, J = optimal_profile(solution.active, T)
    wide = spectra.active_set(spec, 2.0 * T, max_box_side)
    lookup = dict(zip(solution.active.keys(), solution.least_favorable.tolist()))
    v = np.array([lookup.get(key, 0.0) for key in wide.keys()])
    lam = 2.0 / J
    mu = 2.0 * T / J
    nu = 2.0 * np.clip(wide.c - T * wide.q, 0.0, None) / J
    residual = 2.0 * v + lam * wide.c - mu * wide.q - nu
    scale = float(np.max(lam * wide.c + mu * np.abs(wide.q)))
    return float(np.max(np.abs(residual))) / scale


def _polish(c: np.ndarray, q: np.ndarray, rho2: float, lam: float, mu: float) -> Tuple[float, float]:
    """Exact multipliers on the support identified by the dual iterate."""
    for _ in range(50):
        support = (mu * q - lam * c) > 0
        if not np.any(support):
            break
        cs, qs = c[support], q[support]
        system = np.array([[cs @ qs, -(cs @ cs)], [qs @ qs, -(qs @ cs)]])
        try:
            new_mu, new_lam = np.linalg.solve(system, np.array([1.0, rho2]))
        except np.linalg.LinAlgError:
            new_mu, new_lam = mu, -1.0
        if new_lam < 0 or new_mu < 0:
            positive = q > 0
            new_lam, new_mu = 0.0, rho2 / float(q[positive] @ q[positive])
            new_support = (new_mu * q) > 0
        else:
            new_support = (new_mu * q - new_lam * c) > 0
        converged = np.array_equal(new_support, support)
        lam, mu = float(new_lam), float(new_mu)
        if converged:
            break
    return lam, mu


def saddle_value_bruteforce(c_list: Sequence[float], q_list: Sequence[float], rho: float,
                            restarts: int = 8, iterations: int = 5000, seed: int = 0) -> SaddleOracleResult:
    """
    Minimal ||v||_2 over v >= 0, <v, c> <= 1, <v, q> >= rho^2 for small index sets.

    Projected gradient ascent on the dual multipliers (lambda, mu) >= 0 with
    v = (mu q - lambda c)_+, from random restarts, then an exact solve on the
    identified support.

    Args:
        c_list (Sequence[float]): Positive ellipsoid coefficients
        q_list (Sequence[float]): Functional coefficients
        rho (float): Target separation
        restarts (int): Random restarts of the dual ascent
        iterations (int): Ascent steps per restart
        seed (int): Seed for the restart points

    Returns:
        SaddleOracleResult: Minimal norm, minimiser and achieved KKT residual
    """
    c = np.asarray(c_list, dtype=float)
    q = np.asarray(q_list, dtype=float)
    if c.size > 12:
        raise DomainError(f"the brute-force oracle handles at most 12 indices, got {c.size}")
    rho2 = rho * rho
    attainable = float(np.max(q / c))
    if rho2 > attainable * (1.0 + 1e-12):
        return SaddleOracleResult(math.inf, None, 0.0, feasible=False, multipliers={"attainable": attainable})

    step = 1.0 / float(c @ c + q @ q)
    rng = np.random.default_rng(seed)
    best: Dict[str, float] = {}
    best_value = -math.inf
    for _ in range(restarts):
        lam, mu = rng.exponential(1.0, size=2)
        for _ in range(iterations):
            v = np.clip(mu * q - lam * c, 0.0, None)
            new_lam = max(0.0, lam + step * (c @ v - 1.0))
            new_mu = max(0.0, mu + step * (rho2 - q @ v))
            if abs(new_lam - lam) + abs(new_mu - mu) < 1e-15 * (1.0 + lam + mu):
                lam, mu = new_lam, new_mu
                break
            lam, mu = new_lam, new_mu
        v = np.clip(mu * q - lam * c, 0.0, None)
        dual = -0.5 * float(v @ v) - lam + mu * rho2
        if dual > best_value:
            best_value = dual
            best = {"lambda": lam, "mu": mu}

    lam, mu = _polish(c, q, rho2, best["lambda"], best["mu"])
    v = np.clip(mu * q - lam * c, 0.0, None)
    residual = _oracle_residual(c, q, rho2, v, lam, mu)
    if residual > ORACLE_TOL:
        logger.debug("dual ascent ended at KKT residual %.3g, enumerating supports", residual)
        v = _enumerate_supports(c, q, rho2)
        residual = _oracle_residual(c, q, rho2, v, 0.0, 0.0)
        lam = mu = math.nan
    return SaddleOracleResult(float(np.linalg.norm(v)), v, residual, feasible=True,
                              multipliers={"lambda": lam, "mu": mu})


def _oracle_residual(c: np.ndarray, q: np.ndarray, rho2: float, v: np.ndarray, lam: float, mu: float) -> float:
    return max(
        max(float(c @ v) - 1.0, 0.0),
        max(rho2 - float(q @ v), 0.0) / rho2,
        lam * abs(float(c @ v) - 1.0),
        mu * abs(float(q @ v) - rho2) / rho2,
    )


def _enumerate_supports(c: np.ndarray, q: np.ndarray, rho2: float) -> np.ndarray:
    """
    Smallest-norm feasible candidate over every support.

    On a support S the minimiser is v_S = mu q_S - lambda c_S with both
    constraints active, or v_S proportional to q_S when only the functional
    constraint is active; the optimum is among these candidates.
    """
    best_norm, best_v = math.inf, np.zeros_like(c)
    for mask in range(1, 1 << c.size):
        support = np.array([(mask >> k) & 1 for k in range(c.size)], dtype=bool)
        cs, qs = c[support], q[support]
        candidates = []
        if qs @ qs > 0:
            candidates.append(rho2 * qs / float(qs @ qs))
        system = np.array([[cs @ qs, -(cs @ cs)], [qs @ qs, -(qs @ cs)]])
        if abs(np.linalg.det(system)) > 1e-14 * float(cs @ cs) * float(qs @ qs):
            mu, lam = np.linalg.solve(system, np.array([1.0, rho2]))
            if mu >= 0 and lam >= 0:
                candidates.append(mu * qs - lam * cs)
        for values in candidates:
            if np.any(values < -1e-12):
                continue
            v = np.zeros_like(c)
            v[support] = np.clip(values, 0.0, None)
            if c @ v <= 1.0 + 1e-10 and q @ v >= rho2 * (1.0 - 1e-10):
                norm = float(np.linalg.norm(v))
                if norm < best_norm:
                    best_norm, best_v = norm, v
    return best_v


def balance_threshold(spec: CoefficientSpec, n: float, max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    The level T at which T sqrt(M(T)) first reaches n.

    Args:
        spec (CoefficientSpec): Coefficient family
        n (float): Sample size
        max_box_side (int): Cap on the enumeration box side

    Returns:
        float: The balance level T_n^0
    """
    if not n > 0:
        raise DomainError(f"n > 0 is required, got {n}")
    T0 = spectra.smallest_entry_threshold(spec, max_box_side)
    lo = T0 * (1.0 + 1e-9)

    def balance(active: ActiveSet, T: float) -> float:
        restricted = active.restrict(T)
        return T * math.sqrt(float(restricted.q @ restricted.q))

    top = _expand_bracket(spec, lo, lambda s: balance(s, s.threshold) < n, max_box_side)
    lo_T, hi_T = lo, top.threshold
    for _ in range(MAX_BISECTIONS):
        if hi_T / lo_T - 1.0 < 1e-13:
            break
        mid = math.sqrt(lo_T * hi_T)
        if balance(top, mid) < n:
            lo_T = mid
        else:
            hi_T = mid
    return hi_T


def indefinite_regime(spec: CoefficientSpec, n: float,
                      max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> Tuple[float, float, str]:
    """
    T_n = min(T_n^0, sqrt(n)) with the regime tag, refusing levels where N(T_n) is empty.

    T_n^0 always lies above the entry threshold min c_l/|q_l|, so N(T_n) is
    empty exactly when sqrt(n) does not exceed it.

    Args:
        spec (CoefficientSpec): Coefficient family
        n (float): Sample size
        max_box_side (int): Cap on the enumeration box side

    Returns:
        Tuple[float, float, str]: (T_n, T_n^0, regime tag)
    """
    if not n > 0:
        raise DomainError(f"n > 0 is required, got {n}")
    entry = spectra.smallest_entry_threshold(spec, max_box_side)
    root_n = math.sqrt(n)
    if root_n <= entry:
        raise TuningError(
            f"no index enters N(T) at T_n = sqrt(n) = {root_n:.6g} for n = {n:g}; "
            f"the first index needs T > {entry:.6g}",
            {"n": n, "T_entry": entry},
            minimum_n=int(math.floor(entry * entry)) + 1,
        )
    T0 = balance_threshold(spec, n, max_box_side)
    regime = RegimeRate.REGULAR if root_n <= T0 else RegimeRate.IRREGULAR
    return min(T0, root_n), T0, regime


def two_regime_rate(spec: CoefficientSpec, n: float,
                    max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> RegimeRate:
    """
    Rate for an indefinite functional, T_n = min(T_n^0, sqrt(n)) and rate T_n^{-1/2}.

    Args:
        spec (CoefficientSpec): Family with both sign classes present
        n (float): Sample size

    Returns:
        RegimeRate: T_n, T_n^0, the rate and the regime tag
    """
    if not spec.signed:
        raise DomainError("the two-regime rate needs both sign classes of q to be nonempty")
    T_n, T0, regime = indefinite_regime(spec, n, max_box_side)
    exponent = None
    if isinstance(spec, SobolevDerivative):
        exponent = min(2.0 * (1.0 - spec.delta) * spec.sigma_bar / (4.0 * spec.sigma_bar + spec.dimension), 0.25)
    logger.info("two-regime rate: T_n = %.6g (%s)", T_n, regime)
    return RegimeRate(T_n, T0, T_n ** -0.5, regime, exponent)


def rate_from_balance(spec: CoefficientSpec, n: float, max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> float:
    """
    r solving n r^2 = M(r^{-2})^{1/2}.

    Args:
        spec (CoefficientSpec): Coefficient family
        n (float): Sample size

    Returns:
        float: The balance rate
    """
    return balance_threshold(spec, n, max_box_side) ** -0.5


def guaranteed_rho2(n: int, gamma: float, B1: float, B2: float, M: float, T: float) -> float:
    """Squared separation guaranteed by the indefinite test: 2 sqrt2 gamma^{-1/2} (B1 M + B2 n)^{1/2} / n + 2/T."""
    return 2.0 * math.sqrt(2.0) * (B1 * M + B2 * n) ** 0.5 / (n * math.sqrt(gamma)) + 2.0 / T


def nonasymptotic_bound(spec: CoefficientSpec, basis: BasisSpec, n: int, gamma: float, D3: float, D4: float,
                        points: int = 64, max_box_side: int = spectra.DEFAULT_MAX_BOX_SIDE) -> NonasymptoticBound:
    """
    Infimum over a log grid of T of the guaranteed squared separation.

    D1 is computed at each T; D2 is replaced by the basis bound, which holds
    for every T.

    Args:
        spec (CoefficientSpec): Coefficient family
        basis (BasisSpec): Fourier system
        n (int): Sample size
        gamma (float): Significance level
        D3 (float): Class bound on ||f||_4
        D4 (float): Class bound on ||f T_Q f||_2
        points (int): Grid size

    Returns:
        NonasymptoticBound: Minimising T and the bound there
    """
    T0 = spectra.smallest_entry_threshold(spec, max_box_side)
    T_hi = 100.0 * max(math.sqrt(n), T0)
    top = spectra.active_set(spec, T_hi, max_box_side)
    best: Optional[NonasymptoticBound] = None
    for T in np.geomspace(T0 * (1.0 + 1e-6), T_hi, points):
        active = top.restrict(float(T))
        M = float(active.q @ active.q)
        if M <= 0:
            continue
        D1 = len(active) * float(np.max(active.q ** 2)) / M
        config = IndefiniteThresholdConfig(D3, D4, D1, basis.c3_bound)
        rho2 = guaranteed_rho2(n, gamma, config.B1, config.B2, M, float(T))
        if best is None or rho2 < best.rho2:
            best = NonasymptoticBound(float(T), rho2, config.B1, config.B2, M)
    if best is None:
        raise NumericalError("no admissible truncation level on the grid", {"T_min": T0, "T_max": T_hi})
    return best
