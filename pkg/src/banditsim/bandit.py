"""Beta-Bernoulli arms with Thompson sampling and greedy MAP extraction.

Every tunable setting (a simulator fidelity knob or a scenario parameter)
is modelled as its own small independent bandit: one Beta posterior per
discrete value, or one per bin when a continuous range is discretized.
All operations are pure; updates return a new ``Bandit``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import SchemaError

Value = Union[bool, int, float, str]


@dataclass(frozen=True)
class BetaBelief:
    """Posterior over one arm's success probability.

    ``alpha`` and ``beta`` carry prior pseudo-counts plus observed success
    and loss counts; both stay >= 1 for any prior count >= 1.
    """

    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha >= 1.0 and self.beta >= 1.0):
            raise ValueError(
                f"belief counts must be >= 1, got ({self.alpha}, {self.beta})"
            )

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def map_score(self) -> float:
        """Posterior mode (alpha-1)/(alpha+beta-2); 0.5 at the flat prior.

        The formula is 0/0 at alpha = beta = 1; scoring that case as the
        Beta(1,1) mean keeps untouched arms comparable to informed ones.
        """
        denom = self.alpha + self.beta - 2.0
        if denom == 0.0:
            return 0.5
        return (self.alpha - 1.0) / denom

    def observe(self, success: bool) -> BetaBelief:
        if success:
            return BetaBelief(self.alpha + 1.0, self.beta)
        return BetaBelief(self.alpha, self.beta + 1.0)


@dataclass(frozen=True)
class DiscreteDomain:
    """A finite set of labeled values, one arm per value."""

    values: tuple[Value, ...]

    def __post_init__(self) -> None:
        if len(self.values) < 1:
            raise ValueError("discrete domain needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"duplicate values in domain: {self.values}")

    @property
    def n_arms(self) -> int:
        return len(self.values)

    def value_at(self, index: int) -> Value:
        return self.values[index]

    def locate(self, value: Value) -> int:
        """Index of ``value`` in the domain; ValueError if absent."""
        return self.values.index(value)

    def contains(self, value: Value) -> bool:
        return value in self.values

    def to_dict(self) -> dict:
        return {"kind": "discrete", "values": list(self.values)}


@dataclass(frozen=True)
class ContinuousDomain:
    """A [lo, hi] range split into bins, one arm per bin.

    ``scale`` controls both the bin edges and the in-bin sampling law:
    "uniform" slices the range evenly and samples uniformly inside a bin,
    "log-uniform" slices evenly in log space and samples log-uniformly.
    """

    lo: float
    hi: float
    bins: int
    scale: str = "uniform"

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.bins < 1:
            raise ValueError("need at least one bin")
        if self.scale not in ("uniform", "log-uniform"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale == "log-uniform" and self.lo <= 0:
            raise ValueError("log-uniform requires lo > 0")

    @property
    def n_arms(self) -> int:
        return self.bins

    def edges(self) -> tuple[float, ...]:
        """Bin edges, lo and hi reproduced exactly at the extremes."""
        if self.scale == "uniform":
            inner = [
                self.lo + i * (self.hi - self.lo) / self.bins
                for i in range(1, self.bins)
            ]
        else:
            ratio = self.hi / self.lo
            inner = [self.lo * ratio ** (i / self.bins) for i in range(1, self.bins)]
        return (self.lo, *inner, self.hi)

    def bin_bounds(self, index: int) -> tuple[float, float]:
        edges = self.edges()
        return edges[index], edges[index + 1]

    def expected_value(self, index: int) -> float:
        """Mean of the in-bin sampling distribution."""
        a, b = self.bin_bounds(index)
        if self.scale == "uniform":
            return (a + b) / 2.0
        return (b - a) / math.log(b / a)

    def sample_in_bin(self, index: int, rng: np.random.Generator) -> float:
        a, b = self.bin_bounds(index)
        if self.scale == "uniform":
            value = rng.uniform(a, b)
        else:
            value = math.exp(rng.uniform(math.log(a), math.log(b)))
        # rng.uniform may graze the upper edge through rounding; keep the
        # half-open [a, b) contract intact.
        if value >= b:
            value = np.nextafter(b, a)
        return float(value)

    def locate(self, value: float) -> int:
        """Index of the bin containing ``value``; ValueError outside [lo, hi]."""
        if not (self.lo <= value <= self.hi):
            raise ValueError(f"{value} outside [{self.lo}, {self.hi}]")
        edges = self.edges()
        idx = int(np.searchsorted(edges, value, side="right")) - 1
        return min(max(idx, 0), self.bins - 1)

    def contains(self, value: Value) -> bool:
        return isinstance(value, (int, float)) and self.lo <= value <= self.hi

    def to_dict(self) -> dict:
        return {
            "kind": "continuous",
            "lo": self.lo,
            "hi": self.hi,
            "bins": self.bins,
            "scale": self.scale,
        }


ArmDomain = Union[DiscreteDomain, ContinuousDomain]


def domain_from_dict(doc: dict) -> ArmDomain:
    kind = doc.get("kind")
    if kind == "discrete":
        return DiscreteDomain(values=tuple(doc["values"]))
    if kind == "continuous":
        return ContinuousDomain(
            lo=float(doc["lo"]),
            hi=float(doc["hi"]),
            bins=int(doc["bins"]),
            scale=str(doc.get("scale", "uniform")),
        )
    raise SchemaError(f"unknown domain kind {kind!r}")


@dataclass(frozen=True)
class Bandit:
    """Independent beliefs over one setting's candidate values."""

    domain: ArmDomain
    beliefs: tuple[BetaBelief, ...]

    def __post_init__(self) -> None:
        if len(self.beliefs) != self.domain.n_arms:
            raise ValueError(
                f"{len(self.beliefs)} beliefs for {self.domain.n_arms} arms"
            )

    @classmethod
    def uniform(
        cls, domain: ArmDomain, prior_success: float = 1.0, prior_loss: float = 1.0
    ) -> Bandit:
        belief = BetaBelief(prior_success, prior_loss)
        return cls(domain=domain, beliefs=(belief,) * domain.n_arms)

    @property
    def n_arms(self) -> int:
        return self.domain.n_arms

    def update(self, arm_index: int, success: bool) -> Bandit:
        """Credit one arm with a success or loss; other arms untouched."""
        if not 0 <= arm_index < self.n_arms:
            raise IndexError(f"arm {arm_index} out of range [0, {self.n_arms})")
        beliefs = list(self.beliefs)
        beliefs[arm_index] = beliefs[arm_index].observe(success)
        return Bandit(domain=self.domain, beliefs=tuple(beliefs))

    def thompson_select(self, rng: np.random.Generator) -> int:
        """Draw one Beta sample per arm, return the argmax (ties: lowest index)."""
        alphas = np.array([b.alpha for b in self.beliefs])
        betas = np.array([b.beta for b in self.beliefs])
        draws = rng.beta(alphas, betas)
        return int(np.argmax(draws))

    def sample_value(self, rng: np.random.Generator) -> tuple[int, Value]:
        """Thompson-select an arm, then realize a concrete value for it.

        Discrete domains return the arm's label directly; continuous domains
        sample within the selected bin (stratified sampling).
        """
        index = self.thompson_select(rng)
        if isinstance(self.domain, DiscreteDomain):
            return index, self.domain.value_at(index)
        return index, self.domain.sample_in_bin(index, rng)

    def map_value(self) -> tuple[int, Value]:
        """Greedy posterior-mode arm and its value; deterministic.

        Continuous arms report the bin's expected value under the in-bin
        sampling distribution.
        """
        scores = [b.map_score for b in self.beliefs]
        index = int(np.argmax(scores))
        if isinstance(self.domain, DiscreteDomain):
            return index, self.domain.value_at(index)
        return index, self.domain.expected_value(index)

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "alpha": [b.alpha for b in self.beliefs],
            "beta": [b.beta for b in self.beliefs],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> Bandit:
        domain = domain_from_dict(doc["domain"])
        alphas = doc["alpha"]
        betas = doc["beta"]
        if len(alphas) != len(betas) or len(alphas) != domain.n_arms:
            raise SchemaError("belief counts do not match the domain's arm count")
        try:
            beliefs = tuple(
                BetaBelief(float(a), float(b)) for a, b in zip(alphas, betas)
            )
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        return cls(domain=domain, beliefs=beliefs)
