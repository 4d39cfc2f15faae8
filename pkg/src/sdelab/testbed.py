"""Synthetic bump dataset for verifiable editing experiments.

A finite image family: one Gaussian bump per image, centred on an interior
lattice of a small canvas.  Because the dataset is finite, its diffused
score is exact, so dragging / inpainting / translation outcomes can be
judged by nearest-dataset-neighbour classification instead of perception.
Images whose bump centre lies in the left half of the canvas are labelled
``left``, the rest ``right``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import gridio
from .errors import DomainError
from .schedule import NoiseSchedule
from .score import EmpiricalDataset


@dataclass(frozen=True)
class BumpTestbed:
    """Deterministic bump-image family parameters."""

    size: int = 16
    kernel_scale: float = 1.5
    peak: float = 1.0
    margin: int = 3
    lattice: int = 10

    def __post_init__(self) -> None:
        if self.margin + self.lattice > self.size:
            raise DomainError("lattice does not fit inside the canvas")

    def centers(self):
        """Lattice of interior bump centres, row-major."""
        coords = range(self.margin, self.margin + self.lattice)
        return [(y, x) for y in coords for x in coords]

    def label_of(self, center) -> str:
        return "left" if center[1] < self.size // 2 else "right"

    def image(self, center) -> np.ndarray:
        cy, cx = center
        if not (0 <= cy < self.size and 0 <= cx < self.size):
            raise DomainError("bump centre outside the canvas")
        yy, xx = np.mgrid[0:self.size, 0:self.size]
        d2 = (yy - cy) ** 2 + (xx - cx) ** 2
        return self.peak * np.exp(-d2 / (2.0 * self.kernel_scale ** 2))

    def build(self, schedule: NoiseSchedule) -> EmpiricalDataset:
        centers = self.centers()
        images = np.asarray([self.image(c).reshape(-1) for c in centers])
        labels = [self.label_of(c) for c in centers]
        return EmpiricalDataset(images, schedule, labels=labels)

    def index_of(self, center) -> int:
        return self.centers().index(tuple(center))

    def write(self, directory) -> list:
        """Emit grid files plus a label manifest; byte-identical per params."""
        os.makedirs(directory, exist_ok=True)
        entries = []
        for i, center in enumerate(self.centers()):
            label = self.label_of(center)
            name = f"bump_{i:03d}_{label}.txt"
            gridio.write_grid(os.path.join(directory, name), self.image(center))
            entries.append((name, label))
        gridio.write_manifest(os.path.join(directory, gridio.MANIFEST_NAME),
                              entries)
        return entries
