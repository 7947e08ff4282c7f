"""Scale-free overlay topologies with hard degree cutoffs and P2P search on them."""
from ._jit import backend
from .analysis import (
    DegreeHistogram,
    ExponentFit,
    FitError,
    classify_distribution,
    cutoff_spike_fraction,
    default_fit_range,
    degree_histogram,
    fit_powerlaw_exponent,
    log_bin_histogram,
    measure_natural_cutoff,
)
from .generators import (
    GenerationError,
    GeneratorConfig,
    Model,
    SubstrateConfig,
    generate,
    generate_cm,
    generate_dapa,
    generate_grn,
    generate_hapa,
    generate_pa,
)
from .graph import Graph, GraphError, bfs_distances, giant_component, read_edgelist, write_edgelist
from .harness import ExperimentSpec, SpecError, emit_outputs, parse_spec, run_experiment
from .search import (
    Algorithm,
    SearchConfig,
    flood_search,
    measure_search_curve,
    normalized_flood_search,
    random_walk_search,
)

__version__ = "0.1.0"
