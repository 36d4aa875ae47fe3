"""Unit-box pose normalization anchored at the neck.

Removes position, camera distance, and body proportion effects: keypoints are
translated so the neck sits at the origin, then x and y are scaled
independently so the bounding box of the present upper-body keypoints
measures exactly 1 by 1. The scale factors are the reciprocals of the
horizontal and vertical extents.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateExtent, MissingNeck
from .skeleton import Body25, Pose

N_UPPER = 9


@dataclass(frozen=True, eq=False)
class NormalizedPose:
    """Upper-body keypoints 0..8 after neck centering and 1x1 box scaling.

    ``points`` is a (9, 2) array; ``present`` flags which rows carry real
    data. Rows for missing keypoints are zeroed and must not be read.
    """

    points: np.ndarray
    present: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        pres = np.asarray(self.present, dtype=bool)
        if pts.shape != (N_UPPER, 2) or pres.shape != (N_UPPER,):
            raise ValueError("normalized pose must hold 9 points and 9 flags")
        pts = pts.copy()
        pts.setflags(write=False)
        pres = pres.copy()
        pres.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "present", pres)


def normalize_1x1(pose: Pose) -> NormalizedPose:
    """Translate the neck to the origin and scale extents to exactly 1x1.

    Extents are measured over the present upper-body keypoints only, so lower
    body detection noise can never rescale arm geometry. Raises MissingNeck
    when keypoint 1 is absent and DegenerateExtent when the present points
    have zero width or height.
    """
    upper = pose.kp[:N_UPPER]
    present = upper[:, 2] > 0.0
    if not present[Body25.NECK]:
        raise MissingNeck("neck (keypoint 1) is required for normalization")
    shifted = upper[:, :2] - upper[Body25.NECK, :2]
    pts = shifted[present]
    width = pts[:, 0].max() - pts[:, 0].min()
    height = pts[:, 1].max() - pts[:, 1].min()
    if width == 0.0 or height == 0.0:
        raise DegenerateExtent(f"upper-body extent is degenerate (width={width}, height={height})")
    out = np.zeros((N_UPPER, 2))
    out[present, 0] = shifted[present, 0] * (1.0 / width)
    out[present, 1] = shifted[present, 1] * (1.0 / height)
    return NormalizedPose(out, present)
