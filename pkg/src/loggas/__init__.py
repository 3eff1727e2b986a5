"""Numerical laboratory for repulsive log gases on the torus and free space.

Interaction kernels with heat-flow regularization, fluctuation-field
energies, partition-function sweeps, pair-moment combinatorics, particle
SDE / mean-field PDE dynamics, and Gibbs-measure entropy rates.
"""

__version__ = "0.1.0"

from .kernel import (Domain, Kernel, free_log_kernel, torus_log_kernel,
                     zero_kernel, eval_kernel, eval_regularized, eval_gradient,
                     verify_besov, verify_log_bound, verify_superharmonicity)
from .measure import (BaseMeasure, atomic_measure, grid_measure,
                      single_mode_measure, two_bump_measure, uniform_measure,
                      convolve, convolve_at)
from .energy import (Configuration, EnergyBreakdown, interaction_energy,
                     mean_energy, probe_lower_bound)
from .partition import (PartitionEstimate, estimate_partition,
                        enumerate_partition, sweep_partition)
from .streams import root_stream, substream, generator
