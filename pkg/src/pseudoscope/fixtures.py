"""Frozen calibration constants for the automatic region width.

The values are the 99.9th percentile of the per-eigenvalue deviation
measured by the dense-solver pilot at d=100, eps=2, N=1000 trials,
seed 20250809, rounded up to two decimals.  Regenerate with::

    python tools/pilot.py

and update this file if the pilot setup changes.  The diagonal value is
additionally capped by the disk-disjointness constraint at construction
time.
"""

PILOT_SEED = 20250809
PILOT_DIM = 100
PILOT_EPS = 2.0
PILOT_TRIALS = 1000

# 99.9th percentile of per-eigenvalue deviation, by structure kind.
AUTO_DELTA = {
    "jordan": 0.79,
    "jordan-corner": 0.79,
    "toeplitz": 0.79,
    "diagonal": 0.26,
    "scalar": 0.31,
    "zero": 0.31,
}
