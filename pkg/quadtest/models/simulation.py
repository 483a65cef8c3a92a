"""
Monte Carlo result models.
"""

import json
import math
from typing import Any, Dict, List, Optional

NULL = "null"
ALTERNATIVE = "alternative"


class ReplicationRecord:
    """
    Outcome of one replication.

    Args:
        rep (int): Replication index within its campaign
        statistic (float): Test statistic
        threshold (float): Threshold it was compared with
        reject (bool): Test decision
        hypothesis (str): "null" or "alternative"
    """
    COLUMNS = ["rep", "statistic", "threshold", "reject", "hypothesis"]

    def __init__(self, rep: int, statistic: float, threshold: float, reject: bool, hypothesis: str):
        self.rep = rep
        self.statistic = statistic
        self.threshold = threshold
        self.reject = reject
        self.hypothesis = hypothesis

    def to_row(self) -> List[Any]:
        return [self.rep, self.statistic, self.threshold, self.reject, self.hypothesis]

    def __repr__(self) -> str:
        return f"ReplicationRecord({self.hypothesis} #{self.rep}, reject={self.reject})"


def _rate(records: List[ReplicationRecord], erroneous: bool) -> Optional[float]:
    if not records:
        return None
    return sum(1 for r in records if r.reject == erroneous) / len(records)


def binomial_se(rate: Optional[float], reps: int) -> Optional[float]:
    if rate is None or reps <= 0:
        return None
    return math.sqrt(rate * (1.0 - rate) / reps)


class ErrorEstimates:
    """
    Empirical error rates of a test with binomial standard errors.

    Type I counts rejections under the null, type II acceptances under the
    alternative. Without an alternative campaign only type I is set.

    Args:
        records (List[ReplicationRecord]): All replications, null campaign first
        replications (int): Replications per campaign
        seed (int): Master seed
    """
    def __init__(self, records: List[ReplicationRecord], replications: int, seed: int):
        self.records = records
        self.replications = replications
        self.seed = seed
        null = [r for r in records if r.hypothesis == NULL]
        alternative = [r for r in records if r.hypothesis == ALTERNATIVE]
        self.type1 = _rate(null, True)
        self.type2 = _rate(alternative, False)
        self.type1_se = binomial_se(self.type1, len(null))
        self.type2_se = binomial_se(self.type2, len(alternative))

    @property
    def cumulative(self) -> Optional[float]:
        if self.type1 is None or self.type2 is None:
            return None
        return self.type1 + self.type2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type1": self.type1,
            "type1_se": self.type1_se,
            "type2": self.type2,
            "type2_se": self.type2_se,
            "cumulative": self.cumulative,
            "replications": self.replications,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def __repr__(self) -> str:
        return f"ErrorEstimates(type1={self.type1!r}, type2={self.type2!r}, reps={self.replications})"


class WilksDiagnostic:
    """
    Null distribution of the statistic against the standard normal.

    Args:
        ks (float): Kolmogorov-Smirnov distance
        pvalue (float): KS p-value
        statistics (List[float]): Replicate statistics under f = 0
        reject_rate (float): Fraction of null replications that rejected
    """
    def __init__(self, ks: float, pvalue: float, statistics: List[float], reject_rate: float):
        self.ks = ks
        self.pvalue = pvalue
        self.statistics = statistics
        self.reject_rate = reject_rate

    @property
    def mean(self) -> float:
        return sum(self.statistics) / len(self.statistics)

    @property
    def variance(self) -> float:
        mean = self.mean
        return sum((s - mean) ** 2 for s in self.statistics) / (len(self.statistics) - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ks": self.ks,
            "pvalue": self.pvalue,
            "mean": self.mean,
            "variance": self.variance,
            "reject_rate": self.reject_rate,
            "replications": len(self.statistics),
        }
