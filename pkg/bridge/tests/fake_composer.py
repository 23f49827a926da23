"""Test stand-in for a real diffusion composer."""
import numpy as np


def flat_frames(conditions, job):
    return np.full((len(conditions), job.height, job.width, 3), 127,
                   dtype=np.uint8)
