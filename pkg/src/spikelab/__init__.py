"""Lattices and grids under diagonal flows: shortest vectors, excursions, bad targets,
anisotropic dimension estimates and the continued-fraction Cantor construction."""

from .diophantine import (AffineSubspace, BadTestConfig, bad_set_scan, bad_subspace_test,
                          bad_target_test, minkowski_solutions, spike_correspondence)
from .dimension import (ProductSet, QuasiMetric, box_count, covering_count_experiment,
                        dim_estimate, fit_slope, separated_count)
from .errors import (BudgetExceeded, ConfigError, DegenerateFit, SpikelabError)
from .flow import excursions, heaviness_profile, lambda1_series
from .fractal import (bad_interval_sets, build_cf_lattice, excursion_data,
                      mass_distribution_check, spike_witness, verify_claim_cla)
from .geometry import (BoxRegion, FlowedLattice, FlowSpec, Grid, Lattice, grid_spike_points,
                       lambda1, sigma, x_v)

__version__ = "0.1.0"
