import numpy as np
import pytest

from beamctl.arrays import ula
from beamctl.covariance import BlockAssignment, VirtualCovariance, apply_block_update
from beamctl.errors import BeamctlError


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_vcm(geom, rng, max_entries=4, inr_low=0.05, inr_high=3.0):
    """Small random ledger-built covariance for property tests."""
    vcm = VirtualCovariance.identity(geom.size)
    count = rng.integers(0, max_entries + 1)
    for _ in range(count):
        angle = rng.uniform(-80.0, 80.0)
        inr = rng.uniform(inr_low, inr_high)
        vcm = apply_block_update(vcm, BlockAssignment.build(geom, [angle], [inr]))
    return vcm


def random_mixed_update(geom, rng, vcm, block_size):
    """Try a mixed-sign block update, shrinking negatives until it is admissible."""
    angles = rng.uniform(-85.0, 85.0, size=block_size)
    while len(set(np.round(angles, 6))) != block_size:
        angles = rng.uniform(-85.0, 85.0, size=block_size)
    inrs = rng.uniform(-0.2, 3.0, size=block_size)
    for _ in range(8):
        try:
            assign = BlockAssignment.build(geom, angles, inrs)
            return apply_block_update(vcm, assign), assign
        except BeamctlError:
            inrs = np.where(inrs < 0, 0.5 * inrs, inrs)
    assign = BlockAssignment.build(geom, angles, np.abs(inrs))
    return apply_block_update(vcm, assign), assign
