"""Round records, accuracy / attack-success evaluation, file outputs."""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..attacks import stamp_trigger
from ..engine import BnMode


@dataclass
class RoundRecord:
    round_index: int
    acc: float
    asr: float | None
    agg_time_ms: float
    round_time_ms: float
    cum_time_ms: float
    participants: tuple
    weights: dict | None  # client id -> applied aggregation weight
    attacker_mean_weight: float
    benign_mean_weight: float
    scoreboard: dict | None = field(default=None, repr=False)


def predict_labels(model, images, batch=512):
    out = []
    for start in range(0, images.shape[0], batch):
        logits = model.forward(images[start : start + batch], bn_mode=BnMode.RUNNING_STATS)
        out.append(np.argmax(logits, axis=1))
    return np.concatenate(out)


def evaluate_acc(model, dataset):
    """Top-1 accuracy under stored (inference) batchnorm statistics."""
    if len(dataset) == 0:
        raise ValueError("empty evaluation set")
    predictions = predict_labels(model, dataset.images)
    return float((predictions == dataset.labels).mean())


def evaluate_asr(model, dataset, trigger):
    """Fraction of trigger-stamped, non-target-class samples predicted as the target.

    Samples originally of the target class are excluded so a model that just
    recognizes them does not inflate the rate.
    """
    keep = dataset.labels != trigger.target_class
    if not np.any(keep):
        raise ValueError("no non-target samples to stamp")
    stamped = stamp_trigger(dataset.images[keep], trigger)
    predictions = predict_labels(model, stamped)
    return float((predictions == trigger.target_class).mean())


def final_metrics(records, window=10):
    """Mean and population std of ACC/ASR over the last ``window`` rounds,
    as percentages rounded to 2 decimals."""
    if len(records) < window:
        raise ValueError(f"run of {len(records)} rounds is shorter than window {window}")
    tail = records[-window:]

    def stats(values):
        if any(v is None for v in values):
            return None, None
        arr = np.asarray(values, dtype=np.float64) * 100.0
        return round(float(arr.mean()), 2), round(float(arr.std()), 2)

    acc_mean, acc_std = stats([r.acc for r in tail])
    asr_mean, asr_std = stats([r.asr for r in tail])
    return {
        "acc_mean": acc_mean,
        "acc_std": acc_std,
        "asr_mean": asr_mean,
        "asr_std": asr_std,
        "window": window,
    }


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "nan"
    return f"{value:.6f}"


def write_round_csv(path, records, n_clients):
    header = ["round", "acc", "asr", "agg_time_ms", "attacker_mean_weight", "benign_mean_weight"]
    header += [f"w_{i}" for i in range(n_clients)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in records:
            row = [
                rec.round_index,
                _fmt(rec.acc),
                _fmt(rec.asr),
                _fmt(rec.agg_time_ms),
                _fmt(rec.attacker_mean_weight),
                _fmt(rec.benign_mean_weight),
            ]
            weights = rec.weights or {}
            for i in range(n_clients):
                row.append(_fmt(weights.get(i)))
            writer.writerow(row)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_json_safe(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_scoreboards(path, records):
    with open(path, "w") as fh:
        for rec in records:
            if rec.scoreboard is None:
                continue
            entry = {"round": rec.round_index}
            entry.update(_json_safe(rec.scoreboard))
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
