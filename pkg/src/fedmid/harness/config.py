"""Experiment configuration: flat key/value files, validation, hashing."""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import yaml

from ..aggregators import registered_names
from ..attacks import SCENARIOS
from ..engine import VARIANTS


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass
class ExperimentConfig:
    # federation
    master_seed: int = 0
    n_clients: int = 20
    rounds: int = 100
    participation: float = 0.5
    beta: float = 0.5
    local_epochs: int = 1
    variant: str = "fedavg"  # fedavg | fedprox
    fedprox_mu: float = 0.01
    # optimizer
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-5
    batch_size: int = 64
    # attack
    attacker_ratio: float = 0.2
    scenario: str = "none"  # none | 1u | 1t | 2u | 2t | 3u | 3t
    gamma_p: float | None = None  # defaults: 0.5 targeted, 0.8 untargeted
    lie_z: float = 1.5
    lie_negate: bool = False
    target_class: int = 0
    trigger_size: int = 4
    # aggregation
    aggregator: str = "fedavg"
    size_weighted: bool | None = None  # None: sizes for fedavg, uniform otherwise
    m_probe: int = 200
    trim_k: int | None = None
    krum_f: int | None = None
    krum_m: int | None = None
    dnc_iters: int = 1
    dnc_c: float = 1.0
    dnc_sub_dim: int = 10_000
    dnc_n_mal: int | None = None
    bucket_s: int = 2
    fltrust_root_samples: int = 100
    fedcpa_k_frac: float = 0.01
    rfa_smoothing: float = 1e-6
    rfa_max_iter: int = 100
    residual_confidence: float = 2.0
    residual_clip: float = 0.05
    # model / data
    model: str = "tinyblock"
    dataset: str = "desk"  # desk | csv
    dataset_train_csv: str | None = None
    dataset_test_csv: str | None = None
    n_classes: int = 4
    image_size: int = 16
    channels: int = 1
    train_size: int = 2000
    test_size: int = 400
    noise_sigma: float = 0.05
    data_seed: int | None = None
    # evaluation / output
    window: int = 10
    eval_asr: bool | None = None  # None: on for targeted scenarios
    out: str | None = None
    threads: int | None = None  # None: FEDMID_THREADS env (0 = auto)

    @classmethod
    def desk(cls, **overrides):
        """Desk-scale preset: 10 clients, 20 rounds, window 10."""
        base = dict(n_clients=10, rounds=20)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, mapping):
        known = {f.name for f in dataclasses.fields(cls)}
        for key in mapping:
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        try:
            cfg = cls(**mapping)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a flat key/value mapping")
        return cls.from_dict(raw)

    def validate(self):
        def fail(key, why):
            raise ConfigError(f"config key {key!r} invalid: {why}")

        if self.n_clients < 2:
            fail("n_clients", "need at least 2 clients")
        if self.rounds < 1:
            fail("rounds", "need at least 1 round")
        if not 0 < self.participation <= 1:
            fail("participation", "must be in (0, 1]")
        if self.beta <= 0:
            fail("beta", "must be positive")
        if not 0 <= self.attacker_ratio < 0.5:
            fail("attacker_ratio", "must be in [0, 0.5): attackers may not be a majority")
        if self.scenario != "none" and self.scenario not in SCENARIOS:
            fail("scenario", f"must be 'none' or one of {SCENARIOS}")
        if self.gamma_p is not None and not 0 < self.gamma_p <= 1:
            fail("gamma_p", "must be in (0, 1]")
        if self.lie_z < 0:
            fail("lie_z", "must be non-negative; use lie_negate for the negative sign")
        if self.aggregator not in registered_names():
            fail("aggregator", f"unknown; registered: {', '.join(registered_names())}")
        if self.model not in VARIANTS:
            fail("model", f"must be one of {VARIANTS}")
        if self.variant not in ("fedavg", "fedprox"):
            fail("variant", "must be 'fedavg' or 'fedprox'")
        if self.local_epochs < 1:
            fail("local_epochs", "must be >= 1")
        if self.batch_size < 1:
            fail("batch_size", "must be >= 1")
        if self.lr < 0:
            fail("lr", "must be non-negative")
        if not 0 <= self.momentum < 1:
            fail("momentum", "must be in [0, 1)")
        if self.m_probe < 2:
            fail("m_probe", "probe needs at least 2 samples")
        if self.window < 1:
            fail("window", "must be >= 1")
        if self.dataset not in ("desk", "csv"):
            fail("dataset", "must be 'desk' or 'csv'")
        if self.dataset == "csv" and not (self.dataset_train_csv and self.dataset_test_csv):
            fail("dataset_train_csv", "csv dataset needs train and test csv paths")
        if self.n_classes < 2:
            fail("n_classes", "need at least 2 classes")
        if not 0 <= self.target_class < self.n_classes:
            fail("target_class", "must be a valid class index")
        if self.trigger_size < 1 or self.trigger_size > self.image_size:
            fail("trigger_size", "must fit inside the image")
        return self

    # derived knobs -------------------------------------------------------

    @property
    def targeted(self):
        return self.scenario.endswith("t")

    @property
    def effective_gamma_p(self):
        if self.gamma_p is not None:
            return self.gamma_p
        return 0.5 if self.targeted else 0.8

    @property
    def effective_size_weighted(self):
        if self.size_weighted is not None:
            return self.size_weighted
        return self.aggregator == "fedavg"

    @property
    def effective_eval_asr(self):
        if self.eval_asr is not None:
            return self.eval_asr
        return self.targeted

    @property
    def effective_data_seed(self):
        return self.master_seed if self.data_seed is None else self.data_seed

    @property
    def n_attackers(self):
        return int(round(self.n_clients * self.attacker_ratio)) if self.scenario != "none" else 0

    def resolve_threads(self):
        value = self.threads
        if value is None:
            value = int(os.environ.get("FEDMID_THREADS", "0") or 0)
        if value == 0:
            value = os.cpu_count() or 1
        return max(1, value)

    def to_dict(self):
        return dataclasses.asdict(self)

    def config_hash(self):
        payload = {k: v for k, v in self.to_dict().items() if k not in ("out", "threads")}
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]
