"""
Solution models for the extremal problem and the closed-form examples.
"""

import json
from typing import Any, Dict, List, Optional

import numpy as np

from quadtest.models.spectral import ActiveSet, SpectralSums


class ConditionCheck:
    """
    A computed diagnostic for one of the asymptotic conditions.

    Args:
        name (str): Condition label, e.g. "C1"
        value (float): Computed constant or ratio
        rating (str): "comfortable", "marginal", "violated" or "n/a"
        holds (bool): Whether the finite-n reading supports the condition
        note (str): What the value measures
    """
    def __init__(self, name: str, value: Optional[float], rating: str, holds: bool, note: str = ""):
        self.name = name
        self.value = value
        self.rating = rating
        self.holds = holds
        self.note = note

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "rating": self.rating,
            "holds": self.holds,
            "note": self.note,
        }

    def __repr__(self) -> str:
        return f"ConditionCheck({self.name}={self.value!r}, {self.rating})"


class ExtremalSolution:
    """
    Tuned truncation level with the optimal weights and least-favorable profile.

    Args:
        T (float): Tuned truncation level
        n (int): Sample size
        gamma (float): Significance level
        active (ActiveSet): N(T)
        weights (np.ndarray): Optimal weights w*, unit Euclidean norm
        least_favorable (np.ndarray): Least-favorable profile v*
        rate (float): Separation rate r*
        sums (SpectralSums): Spectral sums at T
        conditions (List[ConditionCheck]): Diagnostics for the sharp-rate conditions
    """
    def __init__(self, T: float, n: int, gamma: float, active: ActiveSet, weights: np.ndarray,
                 least_favorable: np.ndarray, rate: float, sums: SpectralSums,
                 conditions: Optional[List[ConditionCheck]] = None):
        self.T = T
        self.n = n
        self.gamma = gamma
        self.active = active
        self.weights = weights
        self.least_favorable = least_favorable
        self.rate = rate
        self.sums = sums
        self.conditions = conditions or []

    @property
    def v_norm(self) -> float:
        return float(np.linalg.norm(self.least_favorable))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "n": self.n,
            "gamma": self.gamma,
            "rate": self.rate,
            "count": len(self.active),
            "v_norm": self.v_norm,
            "sums": self.sums.to_dict(),
            "conditions": [check.to_dict() for check in self.conditions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __repr__(self) -> str:
        return f"ExtremalSolution(T={self.T:.6g}, rate={self.rate:.6g}, count={len(self.active)})"


class ClosedFormRate:
    """
    Asymptotic rate and sharp constant in closed form.

    For the derivative family the exponents and kappa quantities are set;
    the single-index family fills only the fields it defines.
    """
    def __init__(self, rate_exponent: float, C_star: float, r_n: float, T_asymptotic: float,
                 delta: Optional[float] = None, sigma_bar: Optional[float] = None,
                 kappa_parts: Optional[List[float]] = None, kappa: Optional[float] = None,
                 C_dsa: Optional[float] = None, constants: Optional[Dict[str, float]] = None):
        self.rate_exponent = rate_exponent
        self.C_star = C_star
        self.r_n = r_n
        self.T_asymptotic = T_asymptotic
        self.delta = delta
        self.sigma_bar = sigma_bar
        self.kappa_parts = kappa_parts
        self.kappa = kappa
        self.C_dsa = C_dsa
        self.constants = constants or {}

    @property
    def r_star(self) -> float:
        """The exact rate C*_gamma r_n*."""
        return self.C_star * self.r_n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rate_exponent": self.rate_exponent,
            "C_star": self.C_star,
            "r_n": self.r_n,
            "r_star": self.r_star,
            "T_asymptotic": self.T_asymptotic,
            "delta": self.delta,
            "sigma_bar": self.sigma_bar,
            "kappa_parts": self.kappa_parts,
            "kappa": self.kappa,
            "C_dsa": self.C_dsa,
            "constants": self.constants,
        }


class SingleIndexConstants:
    """
    The integrals C0_bar, C1_bar and C2_bar = C1_bar - C0_bar.

    Args:
        C0_bar (float): Normalised integral of the squared positive bracket
        C1_bar (float): Normalised integral of the functional times the bracket
        quadrature_error (float): Combined absolute error estimate
        cells (int): Number of cubature cells used
    """
    def __init__(self, C0_bar: float, C1_bar: float, quadrature_error: float, cells: int = 0):
        self.C0_bar = C0_bar
        self.C1_bar = C1_bar
        self.quadrature_error = quadrature_error
        self.cells = cells

    @property
    def C2_bar(self) -> float:
        return self.C1_bar - self.C0_bar

    def to_dict(self) -> Dict[str, Any]:
        return {
            "C0_bar": self.C0_bar,
            "C1_bar": self.C1_bar,
            "C2_bar": self.C2_bar,
            "quadrature_error": self.quadrature_error,
            "cells": self.cells,
        }


class RegimeRate:
    """
    Rate for an indefinite functional: T_n = min(T0, sqrt(n)) and rate T_n^{-1/2}.
    """
    REGULAR = "regular"
    IRREGULAR = "irregular"

    def __init__(self, T_n: float, T0: float, rate: float, regime: str, exponent: Optional[float] = None):
        self.T_n = T_n
        self.T0 = T0
        self.rate = rate
        self.regime = regime
        self.exponent = exponent

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T_n": self.T_n,
            "T0": self.T0,
            "rate": self.rate,
            "regime": self.regime,
            "rate_exponent": self.exponent,
        }


class SaddleOracleResult:
    """
    Brute-force solution of the inner minimisation of the saddle problem.

    Args:
        value (float): Minimal ||v||_2, infinity when infeasible
        v (Optional[np.ndarray]): Minimiser
        kkt_residual (float): Achieved KKT residual
        feasible (bool): False when rho^2 exceeds the attainable max of <q, v>
    """
    def __init__(self, value: float, v: Optional[np.ndarray], kkt_residual: float, feasible: bool,
                 multipliers: Optional[Dict[str, float]] = None):
        self.value = value
        self.v = v
        self.kkt_residual = kkt_residual
        self.feasible = feasible
        self.multipliers = multipliers or {}

    def __iter__(self):
        yield self.value
        yield self.v

    def __repr__(self) -> str:
        return f"SaddleOracleResult(value={self.value!r}, feasible={self.feasible})"


class NonasymptoticBound:
    """Minimiser over T of the nonasymptotic upper bound on the squared rate."""
    def __init__(self, T: float, rho2: float, B1: float, B2: float, M: float):
        self.T = T
        self.rho2 = rho2
        self.B1 = B1
        self.B2 = B2
        self.M = M

    def to_dict(self) -> Dict[str, Any]:
        return {"T": self.T, "rho2": self.rho2, "B1": self.B1, "B2": self.B2, "M": self.M}
