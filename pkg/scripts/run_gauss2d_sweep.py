"""Gaussian sweep: 1-4-2 networks on structureless 2-D noise.

The best model under missing-data validation is the collapsed point
solution at large nu; test-set validation prefers the smallest nu.
"""

from _sweep_common import run

if __name__ == "__main__":
    run("gauss2d", __doc__)
