"""Plain-text grid images and dataset manifests.

One image per file: first line ``H W``, then H rows of W space-separated
decimal values.  Values are written with ``repr`` so files round-trip
bit-exactly and identical runs produce byte-identical output.  Labels live
either in a sidecar manifest (lines ``name,label``) or as a trailing
``_<label>`` filename suffix.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import DomainError
from .schedule import NoiseSchedule
from .score import EmpiricalDataset

MANIFEST_NAME = "manifest.csv"


def write_grid(path, values) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise DomainError("grid files hold 2-D arrays")
    h, w = values.shape
    with open(path, "w") as fh:
        fh.write(f"{h} {w}\n")
        for row in values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_grid(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DomainError(f"{path}: malformed grid header")
        h, w = int(header[0]), int(header[1])
        values = np.loadtxt(fh, dtype=np.float64, ndmin=2)
    if values.shape != (h, w):
        raise DomainError(f"{path}: expected {h}x{w}, found {values.shape}")
    return values


def write_manifest(path, entries) -> None:
    """Write ``(name, label)`` pairs, one ``name,label`` line each."""
    with open(path, "w") as fh:
        for name, label in entries:
            fh.write(f"{name},{label}\n")


def read_manifest(path) -> dict:
    labels = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            name, _, label = line.partition(",")
            labels[name] = label
    return labels


def _label_from_name(name: str) -> str | None:
    stem = os.path.splitext(name)[0]
    if "_" in stem:
        return stem.rsplit("_", 1)[1]
    return None


def load_dataset(directory, schedule: NoiseSchedule) -> tuple[EmpiricalDataset, tuple]:
    """Load all grid files in a directory as a labelled empirical dataset.

    Returns the dataset and the image shape.  Labels come from the manifest
    when present, otherwise from filename suffixes; a dataset with no label
    source anywhere is unconditional.
    """
    names = sorted(f for f in os.listdir(directory) if f.endswith(".txt"))
    if not names:
        raise DomainError(f"no grid files found in {directory}")
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    manifest = read_manifest(manifest_path) if os.path.exists(manifest_path) else {}
    images, labels = [], []
    shape = None
    for name in names:
        img = read_grid(os.path.join(directory, name))
        if shape is None:
            shape = img.shape
        elif img.shape != shape:
            raise DomainError("all dataset images must share one shape")
        images.append(img.reshape(-1))
        labels.append(manifest.get(name) or _label_from_name(name))
    have_labels = all(lab is not None for lab in labels)
    dataset = EmpiricalDataset(np.asarray(images), schedule,
                               labels=labels if have_labels else None)
    return dataset, shape
