"""Spectra, gap certificates and breathers on the necklace graph."""

from ._necklace import *  # noqa: F401,F403
from ._necklace import __version__  # noqa: F401


def solve(k0=1, kappa=5, alpha=0.0, p=3.0, harmonics=4, cells=24, points=24,
          boundary="periodic_cells", sign="focusing", method="nehari", options=None):
    """Seed and solve one breather problem; returns a BreatherState."""
    config = FrequencyConfig(k0=k0, kappa=kappa, alpha=alpha, p=p, harmonics=harmonics)
    problem = BreatherProblem(config, NecklaceGrid(cells, points, boundary), sign,
                              options if options is not None else SolverOptions())
    start = problem.seed()
    if method == "nehari":
        return problem.nehari_minimize(start)
    if method == "newton":
        return problem.newton_solve(start)
    raise ValueError(f"unknown method {method!r}")
