"""Desk-scale synthetic image data and the optional CSV loader."""

from dataclasses import dataclass

import numpy as np

from ..rng import STREAM_DATA, child_rng


@dataclass
class Dataset:
    images: np.ndarray  # (n, c, h, w) float32
    labels: np.ndarray  # (n,) int64
    n_classes: int

    def __len__(self):
        return self.labels.size

    def subset(self, indices):
        return Dataset(self.images[indices], self.labels[indices], self.n_classes)


def make_desk_data(
    n_classes=4,
    image_size=16,
    channels=1,
    train_size=2000,
    test_size=400,
    noise_sigma=0.05,
    seed=0,
):
    """Class-template images plus Gaussian pixel noise, split train/test.

    Templates share a two-level random background and differ only inside a
    small class-specific pixel region, so class evidence is localized
    rather than spread over every pixel (margins stay moderate). The
    region size is chosen so the pairwise template separation is at least
    4 * sigma * sqrt(dim), keeping the classes separable under the noise.
    """
    dim = channels * image_size * image_size
    required = 4.0 * noise_sigma * np.sqrt(dim)
    contrast = 0.35
    levels = np.array([0.5 - contrast, 0.5 + contrast], dtype=np.float32)
    # disjoint class regions of k pixels; expected pairwise separation is
    # 2 * contrast * sqrt(k), so k tracks the noise level (30% slack for
    # the binomial spread of differing pixels)
    k_region = max(24, int(np.ceil(1.3 * (2.0 * noise_sigma * np.sqrt(dim) / contrast) ** 2)))
    if k_region * n_classes > dim:
        raise ValueError(
            f"no room for {n_classes} class regions of {k_region} pixels; lower noise_sigma"
        )
    rng = child_rng(seed, STREAM_DATA)
    templates = None
    for _ in range(100):
        background = rng.choice(levels, size=(channels, image_size, image_size))
        positions = rng.permutation(dim)[: k_region * n_classes]
        candidate = np.tile(background, (n_classes, 1, 1, 1))
        flat = candidate.reshape(n_classes, dim)
        for cls in range(n_classes):
            region = positions[cls * k_region : (cls + 1) * k_region]
            flat[cls, region] = rng.choice(levels, size=k_region)
        candidate = flat.reshape(n_classes, channels, image_size, image_size)
        pair_gaps = [
            np.linalg.norm(flat[i].astype(np.float64) - flat[j].astype(np.float64))
            for i in range(n_classes)
            for j in range(i + 1, n_classes)
        ]
        if min(pair_gaps) >= required:
            templates = candidate.astype(np.float32)
            break
    if templates is None:
        raise ValueError(
            f"could not draw templates {required:.2f} apart; lower noise_sigma or image size"
        )

    def sample(count):
        per_class = np.full(n_classes, count // n_classes)
        per_class[: count % n_classes] += 1
        labels = rng.permutation(np.repeat(np.arange(n_classes), per_class))
        noise = rng.standard_normal(size=(count, channels, image_size, image_size))
        images = templates[labels] + noise_sigma * noise
        return Dataset(images.astype(np.float32), labels.astype(np.int64), n_classes)

    return sample(train_size), sample(test_size)


def load_csv_dataset(path, image_size, channels, n_classes=None):
    """Rows of ``label,p0,...,p(d-1)`` into a Dataset; pixels row-major."""
    raw = np.loadtxt(path, delimiter=",", ndmin=2)
    labels = raw[:, 0].astype(np.int64)
    pixels = raw[:, 1:].astype(np.float32)
    expected = channels * image_size * image_size
    if pixels.shape[1] != expected:
        raise ValueError(
            f"{path}: rows carry {pixels.shape[1]} pixels, expected {expected}"
        )
    images = pixels.reshape(-1, channels, image_size, image_size)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    return Dataset(images, labels, n_classes)
