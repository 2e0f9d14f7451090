"""Random walks on giant components of random geometric graphs.

Modules
-------
geometry      Poisson points, radius graphs, graph files
structure     components, the giant, stationary measure, censuses
lattice       site lattices, boundaries, percolation, lattice animals
tiling        tessellations, set decompositions, good and useful tiles
spectral      second eigenvalue and relaxation time
conductance   conductance profiles and integral bounds
walk          heat kernel, total variation, mixing times
experiments   sweeps, fits and campaigns
"""

from .kernels import BACKEND
from .errors import (ConfigError, DimensionMismatch, Disconnected, EmptyGraph, EmptyOrFull,
                     EmptySet, GeomixError, NoConvergence, NoEdges, TooLarge)
from .geometry import RggConfig, SpatialGraph, build_rgg, read_graph, sample_ppp, write_graph
from .structure import connected_components, extract_giant, stationary_distribution
from .spectral import lambda2, relaxation_time
from .conductance import exact_profile, heuristic_profile, lk_bound
from .walk import heat_kernel_row, simulate_ctrw, tau_mix_exact, tv_distance

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "DimensionMismatch", "Disconnected", "EmptyGraph",
    "EmptyOrFull", "EmptySet", "GeomixError", "NoConvergence", "NoEdges", "TooLarge",
    "RggConfig", "SpatialGraph", "build_rgg", "read_graph", "sample_ppp", "write_graph",
    "connected_components", "extract_giant", "stationary_distribution",
    "lambda2", "relaxation_time", "exact_profile", "heuristic_profile", "lk_bound",
    "heat_kernel_row", "simulate_ctrw", "tau_mix_exact", "tv_distance",
]
