"""Simulation runner: wires data, clients, attacks, and aggregation rules."""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from pathlib import Path

import numpy as np

from ..aggregators import AggregatorResources, make_aggregator
from ..attacks import (
    AttackConfig,
    TriggerPatch,
    benign_statistics,
    lie_calibrate,
    poison_targeted,
    poison_untargeted,
    probe_activations,
    regularizer_backward,
)
from ..engine import build_model, flatten_params, unflatten_params
from ..federation import (
    ClientState,
    Hyperparams,
    RoundContext,
    local_train,
    sample_participants,
    weighted_aggregate,
)
from ..rng import (
    STREAM_ATTACK,
    STREAM_INIT,
    STREAM_SAMPLING,
    STREAM_SERVER,
    STREAM_TRAIN,
    child_rng,
)
from .config import ExperimentConfig
from .data import load_csv_dataset, make_desk_data
from .metrics import (
    RoundRecord,
    evaluate_acc,
    evaluate_asr,
    final_metrics,
    write_json,
    write_round_csv,
    write_scoreboards,
)

log = logging.getLogger("fedmid")


class Simulation:
    def __init__(self, cfg: ExperimentConfig):
        cfg.validate()
        self.cfg = cfg
        self.n_threads = cfg.resolve_threads()
        self.hp = Hyperparams(cfg.lr, cfg.momentum, cfg.weight_decay, cfg.batch_size)
        self._build_data()
        self._build_clients()
        self._build_model_and_aggregator()
        self.records = []

    # ------------------------------ setup ------------------------------ #

    def _build_data(self):
        cfg = self.cfg
        if cfg.dataset == "csv":
            self.train = load_csv_dataset(
                cfg.dataset_train_csv, cfg.image_size, cfg.channels, cfg.n_classes
            )
            self.test = load_csv_dataset(
                cfg.dataset_test_csv, cfg.image_size, cfg.channels, cfg.n_classes
            )
        else:
            self.train, self.test = make_desk_data(
                cfg.n_classes,
                cfg.image_size,
                cfg.channels,
                cfg.train_size,
                cfg.test_size,
                cfg.noise_sigma,
                cfg.effective_data_seed,
            )
        self.trigger = None
        if cfg.targeted or cfg.effective_eval_asr:
            self.trigger = TriggerPatch(
                height=cfg.trigger_size, width=cfg.trigger_size, target_class=cfg.target_class
            )
        # fltrust trains on a held-out root sample each round
        self.root_data = None
        client_pool = np.arange(len(self.train))
        if cfg.aggregator == "fltrust":
            rng = child_rng(cfg.master_seed, STREAM_SERVER)
            root_idx = np.sort(rng.choice(len(self.train), cfg.fltrust_root_samples, replace=False))
            self.root_data = self.train.subset(root_idx)
            client_pool = np.setdiff1d(client_pool, root_idx)
        self.client_pool = client_pool

    def _build_clients(self):
        cfg = self.cfg
        from ..federation import PartitionSpec, dirichlet_partition

        pool_labels = self.train.labels[self.client_pool]
        parts = dirichlet_partition(
            pool_labels,
            PartitionSpec(cfg.n_clients, cfg.beta, self.train.n_classes, cfg.master_seed),
        )
        attackers = set()
        if cfg.n_attackers:
            rng = child_rng(cfg.master_seed, STREAM_ATTACK)
            attackers = set(
                int(c) for c in rng.choice(cfg.n_clients, cfg.n_attackers, replace=False)
            )
        attack = None
        if cfg.scenario != "none":
            attack = AttackConfig(
                scenario=cfg.scenario,
                gamma_p=cfg.effective_gamma_p,
                z=cfg.lie_z,
                lie_negate=cfg.lie_negate,
                trigger=self.trigger if cfg.targeted else None,
            )
        self.attack = attack
        self.clients = []
        self.client_arrays = {}
        for cid, part in enumerate(parts):
            indices = self.client_pool[part]
            state = ClientState(cid, indices, malicious=cid in attackers)
            state.attack = attack if state.malicious else None
            images = self.train.images[indices]
            labels = self.train.labels[indices]
            if state.malicious and attack is not None and not attack.omniscient:
                rng = child_rng(cfg.master_seed, STREAM_ATTACK, cid)
                if attack.targeted:
                    images, labels = poison_targeted(
                        images, labels, attack.gamma_p, attack.trigger, rng
                    )
                else:
                    images, labels = poison_untargeted(
                        images, labels, attack.gamma_p, self.train.n_classes, rng
                    )
            self.client_arrays[cid] = (images, labels)
            self.clients.append(state)
        self.attacker_ids = attackers

    def _build_model_and_aggregator(self):
        cfg = self.cfg
        input_shape = (cfg.channels, cfg.image_size, cfg.image_size)
        self.template = build_model(
            cfg.model, input_shape, self.train.n_classes, child_rng(cfg.master_seed, STREAM_INIT)
        )
        self.global_params = flatten_params(self.template)
        resources = AggregatorResources(
            model_template=self.template,
            master_seed=cfg.master_seed,
            attacker_ratio=cfg.attacker_ratio,
            n_clients=cfg.n_clients,
            n_threads=self.n_threads,
        )
        self.aggregator = make_aggregator(cfg.aggregator, cfg.to_dict(), resources)
        self.eval_model = self.template.copy()

    # ------------------------------ rounds ------------------------------ #

    def _train_client(self, cid, round_index):
        cfg = self.cfg
        state = self.clients[cid]
        images, labels = self.client_arrays[cid]
        model = self.template.copy()
        rng = child_rng(cfg.master_seed, STREAM_TRAIN, round_index, cid)
        regularizer = None
        if state.malicious and self.attack is not None and self.attack.adaptive:
            # one probe per round; each step regularizes a rotating slice so
            # the cost stays proportional to the training step
            probe_rng = child_rng(cfg.master_seed, STREAM_ATTACK, round_index, cid)
            probe = probe_rng.standard_normal(
                size=(cfg.m_probe,) + self.template.input_shape
            ).astype(np.float32)
            global_model = self.template.copy()
            unflatten_params(global_model, self.global_params)
            slice_size = min(16, cfg.m_probe)
            slices = []
            for start in range(0, cfg.m_probe - slice_size + 1, slice_size):
                part = probe[start : start + slice_size]
                slices.append(
                    (part, probe_activations(global_model, part, self.attack.adaptive_taps))
                )
            counter = {"step": 0}

            def regularizer(local_model):
                part, ref = slices[counter["step"] % len(slices)]
                counter["step"] += 1
                return regularizer_backward(local_model, part, ref, self.attack.adaptive_taps)

        delta, loss = local_train(
            model,
            images,
            labels,
            self.global_params,
            cfg.local_epochs,
            self.hp,
            rng,
            variant=cfg.variant,
            prox_mu=cfg.fedprox_mu,
            regularizer=regularizer,
        )
        return cid, delta, loss

    def _server_update(self, round_index):
        cfg = self.cfg
        model = self.template.copy()
        rng = child_rng(cfg.master_seed, STREAM_SERVER, round_index)
        delta, _ = local_train(
            model,
            self.root_data.images,
            self.root_data.labels,
            self.global_params,
            cfg.local_epochs,
            self.hp,
            rng,
            variant=cfg.variant,
            prox_mu=cfg.fedprox_mu,
        )
        return delta

    def run_round(self, round_index):
        cfg = self.cfg
        t_start = time.perf_counter()
        participants = sample_participants(
            cfg.n_clients, cfg.participation, child_rng(cfg.master_seed, STREAM_SAMPLING, round_index)
        )
        omniscient_ids = [
            cid
            for cid in participants
            if self.clients[cid].malicious and self.attack is not None and self.attack.omniscient
        ]
        to_train = [cid for cid in participants if cid not in omniscient_ids]
        updates = {}
        if self.n_threads > 1 and len(to_train) > 1:
            with ThreadPoolExecutor(max_workers=self.n_threads) as pool:
                for cid, delta, _ in pool.map(
                    lambda c: self._train_client(c, round_index), to_train
                ):
                    updates[cid] = delta
        else:
            for cid in to_train:
                cid, delta, _ = self._train_client(cid, round_index)
                updates[cid] = delta
        if omniscient_ids:
            benign_updates = [
                updates[cid] for cid in participants if not self.clients[cid].malicious
            ]
            mean, std = benign_statistics(benign_updates)
            calibrated = lie_calibrate(mean, std, self.attack.signed_z)
            for cid in omniscient_ids:
                updates[cid] = calibrated

        ctx = RoundContext(
            round_index=round_index,
            participants=participants,
            global_params=self.global_params,
            updates=updates,
            data_sizes={cid: self.clients[cid].data_size for cid in participants},
        )
        if cfg.aggregator == "fltrust":
            ctx.server_update = self._server_update(round_index)

        t_agg = time.perf_counter()
        result = self.aggregator.aggregate(ctx)
        agg_time_ms = (time.perf_counter() - t_agg) * 1000.0

        if result.weights is not None:
            applied = result.weights
            self.global_params = weighted_aggregate(self.global_params, updates, applied)
        else:
            applied = result.diagnostics.get("weights")
            self.global_params = self.global_params + result.delta

        unflatten_params(self.eval_model, self.global_params)
        acc = evaluate_acc(self.eval_model, self.test)
        asr = None
        if cfg.effective_eval_asr and self.trigger is not None:
            asr = evaluate_asr(self.eval_model, self.test, self.trigger)
        round_time_ms = (time.perf_counter() - t_start) * 1000.0

        attacker_w = [applied[c] for c in participants if c in self.attacker_ids] if applied else []
        benign_w = [applied[c] for c in participants if c not in self.attacker_ids] if applied else []
        cum = (self.records[-1].cum_time_ms if self.records else 0.0) + round_time_ms
        record = RoundRecord(
            round_index=round_index,
            acc=acc,
            asr=asr,
            agg_time_ms=agg_time_ms,
            round_time_ms=round_time_ms,
            cum_time_ms=cum,
            participants=participants,
            weights=dict(applied) if applied else None,
            attacker_mean_weight=float(np.mean(attacker_w)) if attacker_w else float("nan"),
            benign_mean_weight=float(np.mean(benign_w)) if benign_w else float("nan"),
            scoreboard=result.diagnostics if cfg.aggregator == "fedmid" else None,
        )
        self.records.append(record)
        return record

    def run(self):
        for t in range(self.cfg.rounds):
            record = self.run_round(t)
            log.info(
                "round %d acc=%.4f asr=%s agg=%.1fms",
                t,
                record.acc,
                "-" if record.asr is None else f"{record.asr:.4f}",
                record.agg_time_ms,
            )
        return self.records

    def summary(self):
        window = min(self.cfg.window, len(self.records))
        payload = final_metrics(self.records, window)
        payload.update(
            {
                "config_hash": self.cfg.config_hash(),
                "aggregator": self.cfg.aggregator,
                "scenario": self.cfg.scenario,
                "rounds": len(self.records),
                "mean_round_time_ms": round(
                    float(np.mean([r.round_time_ms for r in self.records])), 3
                ),
                "mean_agg_time_ms": round(
                    float(np.mean([r.agg_time_ms for r in self.records])), 3
                ),
            }
        )
        return payload


def resolve_out_dir(cfg):
    if cfg.out:
        return Path(cfg.out)
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{stamp}-{cfg.config_hash()}"


def run_experiment(cfg, out_dir=None):
    """Run a full simulation and write csv/json outputs; returns (records, summary)."""
    sim = Simulation(cfg)
    records = sim.run()
    summary = sim.summary()
    target = Path(out_dir) if out_dir is not None else resolve_out_dir(cfg)
    target.mkdir(parents=True, exist_ok=True)
    write_round_csv(target / "rounds.csv", records, cfg.n_clients)
    write_json(target / "summary.json", summary)
    write_json(target / "config.json", cfg.to_dict())
    if cfg.aggregator == "fedmid":
        write_scoreboards(target / "scoreboard.jsonl", records)
    return records, summary
