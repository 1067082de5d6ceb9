"""Seeded generators for the synthetic benchmark families (Map, Noisy Common, Binary)."""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_seed
from .core import AssignmentInstance

FAMILIES = ("map", "noisy_common", "binary")


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int
    sigma: float = 0.1
    p_one: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.family == "noisy_common" and not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.family == "binary" and not 0 < self.p_one < 1:
            raise ValueError("p_one must lie in (0, 1)")

    def build(self):
        return generate(self)


def map_utility(distance):
    """Inverse Manhattan distance, capped at 1 for distances 0 and 1."""
    d = np.asarray(distance, dtype=np.float64)
    return 1.0 / np.maximum(d, 1.0)


def gen_map(n, seed=None):
    """Agents and resources on an integer grid of side ``ceil(sqrt(4n))``; ``u = 1/d``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(check_seed(seed))
    side = math.ceil(math.sqrt(4 * n))
    agents = rng.integers(0, side, size=(n, 2))
    resources = rng.integers(0, side, size=(n, 2))
    d = np.abs(agents[:, None, :] - resources[None, :, :]).sum(axis=2)
    return AssignmentInstance(map_utility(d))


def gen_noisy_common(n, sigma=0.1, seed=None, return_base=False):
    """Common base utility per resource plus independent Gaussian noise, clipped to [0, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    rng = np.random.default_rng(check_seed(seed))
    base = rng.uniform(0.0, 1.0, size=n)
    noise = rng.normal(0.0, sigma, size=(n, n))
    inst = AssignmentInstance(np.clip(base[None, :] + noise, 0.0, 1.0))
    return (inst, base) if return_base else inst


def gen_binary(n, p_one=0.5, seed=None):
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= p_one <= 1:
        raise ValueError("p_one must lie in [0, 1]")
    rng = np.random.default_rng(check_seed(seed))
    return AssignmentInstance((rng.random((n, n)) < p_one).astype(np.float64))


def generate(spec):
    if spec.family == "map":
        return gen_map(spec.n, spec.seed)
    if spec.family == "noisy_common":
        return gen_noisy_common(spec.n, spec.sigma, spec.seed)
    return gen_binary(spec.n, spec.p_one, spec.seed)
