"""Seed derivation for reproducible, schedule-independent randomness.

Every random decision in a run draws from a generator keyed by the master
seed, a fixed stream id, and contextual indices (round, client). Results are
therefore independent of thread scheduling and execution order.
"""

import numpy as np

STREAM_DATA = 1
STREAM_PARTITION = 2
STREAM_INIT = 3
STREAM_SAMPLING = 4
STREAM_TRAIN = 5
STREAM_ATTACK = 6
STREAM_PROBE = 7
STREAM_AGGREGATOR = 8
STREAM_SERVER = 9


def child_rng(master_seed, *keys):
    """Generator for stream (master_seed, *keys); identical keys, identical stream."""
    entropy = [int(master_seed)] + [int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))
