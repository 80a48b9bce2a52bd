"""Aggregation rule registry: eleven baselines plus the probe-based defense."""

from dataclasses import dataclass

from .base import AggregationResult, Aggregator
from .bucketing import Bucket, bucketize
from .coordinatewise import FedAvg, Median, TrimmedMean, coordinate_median, trimmed_mean
from .dnc import Dnc, dnc
from .fedcpa import FedCpa, fedcpa_weights, jaccard
from .fltrust import FlTrust, fltrust_combine
from .foolsgold import FoolsGold, foolsgold_weights
from .krum import MultiKrum, krum_scores, multi_krum
from .midout import (
    MidOutputDefense,
    anomaly_scores,
    minmax_normalize,
    normality_scores,
    positive_count_weights,
    weights_from_normality,
)
from .residual import ResidualBase, residual_base
from .rfa import Rfa, geometric_median


@dataclass
class AggregatorResources:
    """Run-level context the rules may need at construction time."""

    model_template: object = None
    master_seed: int = 0
    attacker_ratio: float = 0.2
    n_clients: int = 20
    n_threads: int = 1


def _expected_attackers(resources):
    return int(round(resources.n_clients * resources.attacker_ratio))


_FACTORIES = {
    "fedavg": lambda cfg, res: FedAvg(size_weighted=cfg.get("size_weighted", True)),
    "median": lambda cfg, res: Median(),
    "trimmed_mean": lambda cfg, res: TrimmedMean(
        trim_k=cfg.get("trim_k"), attacker_ratio=res.attacker_ratio
    ),
    "multi_krum": lambda cfg, res: MultiKrum(
        f=cfg.get("krum_f"), m=cfg.get("krum_m"), attacker_ratio=res.attacker_ratio
    ),
    "foolsgold": lambda cfg, res: FoolsGold(),
    "residual_base": lambda cfg, res: ResidualBase(
        confidence=cfg.get("residual_confidence", 2.0),
        clip_threshold=cfg.get("residual_clip", 0.05),
    ),
    "rfa": lambda cfg, res: Rfa(
        smoothing=cfg.get("rfa_smoothing", 1e-6), max_iter=cfg.get("rfa_max_iter", 100)
    ),
    "dnc": lambda cfg, res: Dnc(
        n_mal=cfg.get("dnc_n_mal") or _expected_attackers(res),
        n_iters=cfg.get("dnc_iters", 1),
        c=cfg.get("dnc_c", 1.0),
        sub_dim=cfg.get("dnc_sub_dim", 10_000),
        master_seed=res.master_seed,
    ),
    "bucket": lambda cfg, res: Bucket(s=cfg.get("bucket_s", 2), master_seed=res.master_seed),
    "fltrust": lambda cfg, res: FlTrust(),
    "fedcpa": lambda cfg, res: FedCpa(k_frac=cfg.get("fedcpa_k_frac", 0.01)),
    "fedmid": lambda cfg, res: MidOutputDefense(
        model_template=res.model_template,
        m_probe=cfg.get("m_probe", 200),
        master_seed=res.master_seed,
        n_threads=res.n_threads,
    ),
}


def registered_names():
    return tuple(sorted(_FACTORIES))


def make_aggregator(name, config=None, resources=None):
    if name not in _FACTORIES:
        raise ValueError(
            f"unknown aggregator {name!r}; registered: {', '.join(registered_names())}"
        )
    return _FACTORIES[name](config or {}, resources or AggregatorResources())


__all__ = [
    "AggregationResult",
    "Aggregator",
    "AggregatorResources",
    "Bucket",
    "Dnc",
    "FedAvg",
    "FedCpa",
    "FlTrust",
    "FoolsGold",
    "Median",
    "MidOutputDefense",
    "MultiKrum",
    "ResidualBase",
    "Rfa",
    "TrimmedMean",
    "anomaly_scores",
    "bucketize",
    "coordinate_median",
    "dnc",
    "fedcpa_weights",
    "fltrust_combine",
    "foolsgold_weights",
    "geometric_median",
    "jaccard",
    "krum_scores",
    "make_aggregator",
    "minmax_normalize",
    "multi_krum",
    "normality_scores",
    "positive_count_weights",
    "registered_names",
    "residual_base",
    "trimmed_mean",
    "weights_from_normality",
]
