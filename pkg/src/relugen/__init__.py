"""Generative ReLU networks for histogram targets on the unit square.

The pipeline quantizes a Lipschitz density into a histogram, builds an exact
piecewise-linear transport map from 1-D uniform noise, and lowers the map to
an explicit ReLU network whose connectivity, depth, per-cell masses, and
Wasserstein error all satisfy closed-form bounds that this package checks.
"""

from .histogram import (
    BUILTIN_DENSITIES,
    Cell,
    DensitySpec,
    GeneralHistogram1D,
    HistogramD,
    cell_mass_histogram,
    conditional_y,
    marginal_x,
    quantize_density,
    tv_distance,
)
from .metrics import (
    AtomicMeasure,
    GibbsReport,
    OTResult,
    empirical_wasserstein,
    gibbs_bound_check,
    solve_discrete_ot,
    wasserstein_1d,
)
from .pwl import (
    Interval,
    PwlCurve,
    PwlFunction,
    affine_pushforward,
    build_inverse_cdf_pwl,
    eval_pwl,
    preimage_intervals,
    pushforward_pwl,
)
from .relunet import (
    AffineLayer,
    ReluNetwork,
    compose,
    connectivity,
    depth,
    eval_network,
    extend_depth,
    load_network,
    make_g_network,
    make_gs_network,
    make_identity_network,
    make_pwl_network,
    network_from_dict,
    network_to_dict,
    parallelize,
    save_network,
    sum_networks,
    width,
)
from .sampler import NoiseSource, sample_histogram, sample_pushforward
from .sawtooth import (
    eval_g,
    eval_g_delta,
    eval_gs,
    eval_h_delta,
    gs_decomposition_term,
    h_delta_split,
)
from .transport import (
    TransportMap1to2,
    alt_fine_deviation,
    build_2d_map,
    build_alt_2d_map,
    build_linewise_map,
    build_map,
    check_cell_masses,
    claimed_depth,
    connectivity_bound,
    fine_grid_masses,
    histogram_grid_masses,
    lower_to_network,
    map_cell_mass,
    max_forward_error,
    snake_cells,
    snake_rank,
    wasserstein_upper_bound,
)

__version__ = "0.1.0"
