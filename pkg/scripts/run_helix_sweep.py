"""Helix sweep: 1-10-3 networks, 20 noisy training points per restart.

Missing-data validation should pick an intermediate nu, while test-set
validation keeps improving as nu shrinks.
"""

from _sweep_common import run

if __name__ == "__main__":
    run("helix", __doc__)
