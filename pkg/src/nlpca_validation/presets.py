"""Experiment presets: quadratic, helix and gauss2d setups."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .datagen import GeneratorConfig
from .optimizer import CgConfig
from .validation import SweepConfig

DEFAULT_NU_GRID = tuple(float(v) for v in np.logspace(-5, 0, 11))
DEFAULT_RESTARTS = 11


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    generator: GeneratorConfig
    sweep: SweepConfig
    paper_restarts: int


def _preset(name, family, sigma, n_train, n_valid, layers, fresh, paper_restarts):
    gen = GeneratorConfig(family, n_train, sigma)
    sweep = SweepConfig(
        name=name,
        nu_grid=DEFAULT_NU_GRID,
        n_restarts=DEFAULT_RESTARTS,
        train_data=gen,
        validation_data=GeneratorConfig(family, n_valid, sigma),
        layer_sizes=layers,
        cg=CgConfig(max_iterations=5000),
        fresh_data=fresh,
    )
    return ExperimentPreset(name, gen, sweep, paper_restarts)


PRESETS = {
    "quadratic": _preset("quadratic", "quadratic", 0.4, 10, 200, (1, 8, 2), True, 20),
    "helix": _preset("helix", "helix", 0.4, 20, 1000, (1, 10, 3), True, 100),
    "gauss2d": _preset("gauss2d", "gauss2d", 1.0, 50, 1000, (1, 4, 2), False, 500),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def sweep_for(name: str, *, restarts: int | None = None, paper_scale: bool = False,
              nu_grid=None, base_seed: int | None = None, iterations: int | None = None) -> SweepConfig:
    """The preset's sweep with command-line style overrides applied."""
    preset = get_preset(name)
    cfg = preset.sweep
    changes = {}
    if paper_scale:
        changes["n_restarts"] = preset.paper_restarts
    if restarts is not None:
        changes["n_restarts"] = restarts
    if nu_grid is not None:
        changes["nu_grid"] = tuple(nu_grid)
    if base_seed is not None:
        changes["base_seed"] = base_seed
    if iterations is not None:
        changes["cg"] = replace(cfg.cg, max_iterations=iterations)
    return replace(cfg, **changes)
