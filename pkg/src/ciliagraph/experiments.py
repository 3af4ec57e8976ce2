"""Seeded trial loops shared by the command line and the acceptance suite.

A trial is one stratified holdout split followed by training and evaluation,
with the split seed and the model seed both equal to the trial seed.
"""

import time
from dataclasses import dataclass

import numpy as np

from ciliagraph.baselines import GRAPHHD_DEFAULT_DIM, graphhd_train_eval
from ciliagraph.classifier import EvalReport, ModelConfig, evaluate, train
from ciliagraph.datasets import GraphDataset, SplitSpec, split
from ciliagraph.encoder import DEFAULT_DIM, DEFAULT_LEVELS

ALL_VARIANTS = ("full", "p1", "p2", "p3", "uniform-quant", "record", "graphhd")


def default_dim(variant: str) -> int:
    return GRAPHHD_DEFAULT_DIM if variant == "graphhd" else DEFAULT_DIM


def run_trial(
    dataset: GraphDataset,
    seed: int,
    dim: int | None = None,
    levels: int = DEFAULT_LEVELS,
    variant: str = "full",
    test_fraction: float = 0.1,
    stratified: bool = True,
    weight_mode: str = "hadamard",
) -> EvalReport:
    spec = SplitSpec(mode="holdout", test_fraction=test_fraction, seed=seed, stratified=stratified)
    train_set, test_set = split(dataset, spec)
    dim = default_dim(variant) if dim is None else dim
    if variant == "graphhd":
        return graphhd_train_eval(train_set, test_set, dim=dim, seed=seed)
    config = ModelConfig(dim=dim, levels=levels, seed=seed, variant=variant, weight_mode=weight_mode)
    return evaluate(train(train_set, config), test_set)


@dataclass
class SeedSummary:
    seeds: list[int]
    accuracies: list[float]
    reports: list[EvalReport]
    runtime_s: float

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def to_dict(self, with_reports: bool = True) -> dict:
        out = {
            "seeds": list(self.seeds),
            "accuracies": list(self.accuracies),
            "mean": self.mean,
            "std": self.std,
            "runtime_s": self.runtime_s,
        }
        if with_reports:
            out["reports"] = [r.to_dict() for r in self.reports]
        return out


def seed_list(base: int, count: int) -> list[int]:
    return [base + i for i in range(count)]


def run_seeds(dataset: GraphDataset, seeds, **trial_kw) -> SeedSummary:
    """One trial per seed; the runtime covers every trial end to end."""
    seeds = list(seeds)
    start = time.perf_counter()
    reports = [run_trial(dataset, s, **trial_kw) for s in seeds]
    elapsed = time.perf_counter() - start
    return SeedSummary(seeds, [r.accuracy for r in reports], reports, elapsed)
