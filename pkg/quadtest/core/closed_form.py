"""
Closed-form rates and sharp constants for the two Sobolev examples.

Both examples share the same structure: the exact sums behave like
I0 ~ C0 T^p, I1 ~ C1 T^p, and the tuned solution then gives
r* = C* n^{-1/(2+p)} with C* = sqrt(C1/C2) (8 z^2 C2^2 / C0)^{1/(2(2+p))},
C2 = C1 - C0.
"""

import heapq
import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln

from quadtest.core.quantile import two_sided_critical_value
from quadtest.errors import DomainError, QuadratureError
from quadtest.models.coefficients import TWO_PI, SingleIndex, SobolevDerivative
from quadtest.models.solution import ClosedFormRate, SingleIndexConstants

logger = logging.getLogger(__name__)

GAUSS_ORDER = 6
MAX_CELLS = 200000
SCAN_DIRECTIONS = 4096


def sharp_constant(C0: float, C1: float, p: float, z: float) -> float:
    """
    C* from the leading constants of I0 and I1 and the growth exponent p.

    Args:
        C0 (float): Leading constant of I0(T)
        C1 (float): Leading constant of I1(T)
        p (float): Growth exponent of the sums
        z (float): The quantile z_{1-gamma/2}

    Returns:
        float: The sharp constant C*
    """
    C2 = C1 - C0
    return math.sqrt(C1 / C2) * (8.0 * z * z * C2 * C2 / C0) ** (1.0 / (2.0 * (2.0 + p)))


def derivative_constants(spec: SobolevDerivative) -> Tuple[np.ndarray, float, float, float]:
    """
    kappa_j, kappa, C(d, sigma, alpha) and the growth exponent p for the derivative family.

    Returns:
        Tuple[np.ndarray, float, float, float]: (kappa_parts, kappa, C_dsa, p)
    """
    d = spec.dimension
    delta = spec.delta
    sigma_bar = spec.sigma_bar
    kappa_parts = 1.0 / (2.0 * spec.sigma) + (spec.alpha / spec.sigma) * (4.0 * sigma_bar + d) / (
        2.0 * sigma_bar * (1.0 - delta))
    kappa = float(np.sum(kappa_parts))
    log_C = (float(np.sum(gammaln(kappa_parts))) - d * math.log(TWO_PI) - float(np.sum(np.log(spec.sigma)))
             - math.log(1.0 - delta) - float(gammaln(kappa + 2.0)))
    p = (4.0 * delta * sigma_bar + d) / (2.0 * (1.0 - delta) * sigma_bar)
    return kappa_parts, kappa, math.exp(log_C), p


def closed_form_rate_derivative(sigma: Sequence[float], alpha: Sequence[float], d: int, n: float,
                                gamma: float) -> ClosedFormRate:
    """
    Exact asymptotic rate for the Sobolev ellipsoid with a partial-derivative functional.

    Args:
        sigma (Sequence[float]): Smoothness per axis
        alpha (Sequence[float]): Derivative order per axis
        d (int): Dimension
        n (float): Sample size
        gamma (float): Significance level

    Returns:
        ClosedFormRate: delta, sigma_bar, kappa's, C(d, sigma, alpha), C*, r_n and T
    """
    spec = SobolevDerivative(sigma, alpha)
    if spec.dimension != d:
        raise DomainError(f"sigma and alpha have length {spec.dimension}, expected d = {d}")
    kappa_parts, kappa, C_dsa, p = derivative_constants(spec)
    z = two_sided_critical_value(gamma)
    sigma_bar = spec.sigma_bar
    exponent = 2.0 * sigma_bar * (1.0 - spec.delta) / (4.0 * sigma_bar + d)
    C_star = (4.0 * z * z * kappa * C_dsa) ** (sigma_bar * (1.0 - spec.delta) / (4.0 * sigma_bar + d)) * (
        1.0 + 2.0 / kappa) ** ((2.0 * (1.0 + spec.delta) * sigma_bar + d) / (2.0 * (4.0 * sigma_bar + d)))
    r_n = n ** -exponent
    T = (C_star * r_n) ** -2 * (1.0 + 2.0 / kappa)
    return ClosedFormRate(
        rate_exponent=exponent,
        C_star=C_star,
        r_n=r_n,
        T_asymptotic=T,
        delta=spec.delta,
        sigma_bar=sigma_bar,
        kappa_parts=kappa_parts.tolist(),
        kappa=kappa,
        C_dsa=C_dsa,
        constants={"I0_constant": 2.0 * C_dsa / (kappa + 2.0), "I1_constant": C_dsa, "sum_exponent": p},
    )


def _single_index_terms(points: np.ndarray, beta: np.ndarray, sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """(A - B)_+^2 and A (A - B)_+ at points u, with A = ||u||^2 - (beta.u)^2 and B = sum |u_i|^{2 sigma}."""
    proj = points @ beta
    A = np.sum(points * points, axis=1) - proj * proj
    B = np.sum(np.abs(points) ** (2.0 * sigma), axis=1)
    bracket = np.clip(A - B, 0.0, None)
    return bracket * bracket, A * bracket


def support_half_widths(beta: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """
    Per-axis half-widths of a box holding {A > B}.

    Along a unit direction e the set ends at (A(e)/B(e))^{1/(2 sigma - 2)}; the
    scan over directions is inflated by 10% and capped at sqrt(d), which
    bounds the support for every direction.
    """
    d = beta.size
    rng = np.random.default_rng(seed)
    directions = np.vstack([np.eye(d), rng.standard_normal((SCAN_DIRECTIONS, d))])
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    proj = directions @ beta
    a = 1.0 - proj * proj
    b = np.sum(np.abs(directions) ** (2.0 * sigma), axis=1)
    radius = np.where(a > 0, (np.clip(a, 0.0, None) / b) ** (1.0 / (2.0 * sigma - 2.0)), 0.0)
    reach = np.max(radius[:, None] * np.abs(directions), axis=0)
    return np.minimum(math.sqrt(d), 1.1 * reach)


class _GaussRule:
    """Tensor Gauss-Legendre rule on a box, applied to a vector of integrands."""

    def __init__(self, dimension: int, order: int = GAUSS_ORDER):
        nodes, weights = leggauss(order)
        mesh = np.meshgrid(*([nodes] * dimension), indexing="ij")
        self.nodes = np.stack([m.reshape(-1) for m in mesh], axis=1)
        wmesh = np.meshgrid(*([weights] * dimension), indexing="ij")
        self.weights = np.prod(np.stack([w.reshape(-1) for w in wmesh], axis=1), axis=1)
        self.dimension = dimension
        corners = np.meshgrid(*([np.array([0, 1])] * dimension), indexing="ij")
        self.corners = np.stack([cc.reshape(-1) for cc in corners], axis=1)

    def apply(self, func, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        half = (hi - lo) / 2.0
        points = (lo + hi) / 2.0 + self.nodes * half
        values = np.stack(func(points), axis=1)
        return np.prod(half) * (self.weights @ values)

    def children(self, lo: np.ndarray, hi: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        mid = (lo + hi) / 2.0
        return [(np.where(corner == 0, lo, mid), np.where(corner == 0, mid, hi)) for corner in self.corners]


def adaptive_cubature(func, lo: np.ndarray, hi: np.ndarray, tol: float,
                      max_cells: int = MAX_CELLS) -> Tuple[np.ndarray, float, int]:
    """
    Adaptive tensor Gauss-Legendre cubature of a vector-valued integrand.

    Each leaf carries the refined estimate from its 2^d children and the error
    |coarse - refined|. The leaf with the largest error is split until the
    summed error falls below tol times the smallest component magnitude.

    Args:
        func: Maps points (K, d) to a tuple of arrays of shape (K,)
        lo (np.ndarray): Lower box corner
        hi (np.ndarray): Upper box corner
        tol (float): Relative tolerance
        max_cells (int): Leaf budget

    Returns:
        Tuple[np.ndarray, float, int]: (integrals, absolute error estimate, leaves)
    """
    rule = _GaussRule(lo.size)

    def leaf(cell_lo, cell_hi, coarse):
        parts = [rule.apply(func, a, b) for a, b in rule.children(cell_lo, cell_hi)]
        refined = np.sum(parts, axis=0)
        return float(np.max(np.abs(refined - coarse))), refined, parts

    counter = 0
    error, refined, parts = leaf(lo, hi, rule.apply(func, lo, hi))
    heap = [(-error, counter, lo, hi, refined, parts)]
    total = refined.copy()
    total_error = error
    while True:
        scale = float(np.min(np.abs(total)))
        if total_error <= tol * scale:
            break
        if len(heap) >= max_cells:
            raise QuadratureError(
                f"cubature stopped at {len(heap)} cells with error {total_error:.3g} above tolerance",
                error_estimate=total_error)
        neg_error, _, cell_lo, cell_hi, cell_refined, cell_parts = heapq.heappop(heap)
        total -= cell_refined
        total_error += neg_error
        for (child_lo, child_hi), coarse in zip(rule.children(cell_lo, cell_hi), cell_parts):
            child_error, child_refined, child_parts = leaf(child_lo, child_hi, coarse)
            counter += 1
            heapq.heappush(heap, (-child_error, counter, child_lo, child_hi, child_refined, child_parts))
            total += child_refined
            total_error += child_error
    logger.debug("cubature converged with %d cells, error %.3g", len(heap), total_error)
    return total, total_error, len(heap)


def single_index_constants(beta: Sequence[float], sigma: float, d: int, tol: float = 1e-4) -> SingleIndexConstants:
    """
    The normalised integrals C0_bar and C1_bar of the single-index example.

    C0_bar = (2 pi)^{-d} int (A - B)_+^2 and C1_bar = (2 pi)^{-d} int A (A - B)_+.

    Args:
        beta (Sequence[float]): Unit direction
        sigma (float): Smoothness, must exceed max(1, d/4)
        d (int): Dimension
        tol (float): Relative cubature tolerance

    Returns:
        SingleIndexConstants: C0_bar, C1_bar and the error estimate
    """
    spec = SingleIndex(sigma, beta)
    if spec.dimension != d:
        raise DomainError(f"beta has length {spec.dimension}, expected d = {d}")
    spec.require_finite()
    widths = support_half_widths(spec.beta, spec.sigma)
    integrals, error, cells = adaptive_cubature(
        lambda u: _single_index_terms(u, spec.beta, spec.sigma), -widths, widths, tol)
    norm = TWO_PI ** -d
    return SingleIndexConstants(float(integrals[0]) * norm, float(integrals[1]) * norm, error * norm, cells)


def closed_form_rate_single_index(beta: Sequence[float], sigma: float, d: int, n: float, gamma: float,
                                  tol: float = 1e-4) -> ClosedFormRate:
    """
    Exact asymptotic rate for the single-index goodness-of-fit problem.

    The single-index constant C* = (C1_bar/C2_bar)^{1/2} (8 z^2 C2_bar^2 / C0_bar)^{(sigma-1)/(4 sigma+d)}
    is sharp_constant with p = (d+4)/(2(sigma-1)), because 1/(2(2+p)) = (sigma-1)/(4 sigma+d).

    Args:
        beta (Sequence[float]): Unit direction
        sigma (float): Smoothness
        d (int): Dimension
        n (float): Sample size
        gamma (float): Significance level
        tol (float): Relative cubature tolerance

    Returns:
        ClosedFormRate: Exponent, C*, r_n and T, with the integrals in ``constants``
    """
    consts = single_index_constants(beta, sigma, d, tol)
    p = (d + 4.0) / (2.0 * (sigma - 1.0))
    z = two_sided_critical_value(gamma)
    exponent = 2.0 * (sigma - 1.0) / (4.0 * sigma + d)
    C_star = sharp_constant(consts.C0_bar, consts.C1_bar, p, z)
    r_n = n ** -exponent
    T = (C_star * r_n) ** -2 * consts.C1_bar / consts.C2_bar
    constants = consts.to_dict()
    constants["sum_exponent"] = p
    return ClosedFormRate(rate_exponent=exponent, C_star=C_star, r_n=r_n, T_asymptotic=T, constants=constants)
