"""Data poisoning: random label flips and trigger-stamped targeted flips."""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class TriggerPatch:
    """Checkerboard backdoor marker stamped into the bottom-right corner."""

    height: int = 5
    width: int = 5
    target_class: int = 0
    hi: float = 1.0
    lo: float = 0.0
    values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.values is None:
            ys, xs = np.mgrid[0 : self.height, 0 : self.width]
            self.values = np.where((ys + xs) % 2 == 0, self.hi, self.lo).astype(np.float32)
        if self.values.shape != (self.height, self.width):
            raise ValueError("trigger values shape does not match height/width")


def stamp_trigger(images, patch):
    """Return a copy of (n, c, h, w) images with the patch in the corner."""
    n, c, h, w = images.shape
    if patch.height > h or patch.width > w:
        raise ValueError(f"trigger {patch.height}x{patch.width} does not fit in {h}x{w} images")
    out = images.copy()
    out[:, :, h - patch.height :, w - patch.width :] = patch.values
    return out


def poison_count(n_samples, gamma_p):
    if not 0 < gamma_p <= 1:
        raise ValueError(f"pollution ratio must be in (0, 1], got {gamma_p}")
    return max(1, math.floor(gamma_p * n_samples))


def poison_untargeted(images, labels, gamma_p, n_classes, rng):
    """Flip a gamma_p fraction of labels to uniformly random other labels."""
    if labels.size == 0:
        raise ValueError("cannot poison an empty dataset")
    if n_classes < 2:
        raise ValueError("label flipping needs at least 2 classes")
    count = poison_count(labels.size, gamma_p)
    chosen = rng.choice(labels.size, size=count, replace=False)
    flipped = labels.copy()
    draws = rng.integers(0, n_classes - 1, size=count)
    draws += draws >= labels[chosen]  # skip the original label
    flipped[chosen] = draws
    return images.copy(), flipped


def poison_targeted(images, labels, gamma_p, trigger, rng):
    """Stamp the trigger on a gamma_p fraction of samples and retarget them."""
    if labels.size == 0:
        raise ValueError("cannot poison an empty dataset")
    count = poison_count(labels.size, gamma_p)
    chosen = rng.choice(labels.size, size=count, replace=False)
    out_images = images.copy()
    out_images[chosen] = stamp_trigger(images[chosen], trigger)
    out_labels = labels.copy()
    out_labels[chosen] = trigger.target_class
    return out_images, out_labels
