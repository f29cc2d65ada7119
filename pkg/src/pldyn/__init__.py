"""pldyn: desk-scale dynamics on piecewise-linear interval maps.

Orbit tracing through exact interval refinement, chain classes on grid
transition graphs, Birkhoff statistics, irregular-point construction by
cyclic block schedules, entropy estimators with a lap-count oracle, and
large-deviation rate sequences for super-level regions.
"""

__version__ = "0.1.0"

from .birkhoff import (
    BirkhoffReport,
    EmpiricalMeasure,
    Observable,
    birkhoff_average,
    bl_distance,
    constant,
    coordinate,
    cosine,
    empirical_measure,
    empirical_measure_from_states,
    irregularity_report,
    level_set_member,
    pl_observable,
    uniform_measure,
)
from .chains import (
    ChainClassSet,
    GridPartition,
    TransitionGraph,
    build_transition_graph,
    chain_classes,
    chain_recurrent_cells,
    chain_related,
    containing_class,
    omega_limit_cells,
    visited_cells,
)
from .construction import (
    BlockLibrary,
    Schedule,
    build_pseudo_orbit,
    plan_schedule,
    run_irregular_pipeline,
    select_blocks,
    shadow_point_family,
    verify_irregular,
)
from .entropy import (
    EntropyEstimate,
    bowen_ball_measure,
    check_v_minus,
    grid_pool,
    katok_entropy,
    katok_entropy_estimate,
    lap_entropy,
    local_reference_entropy,
    separated_entropy,
    separated_set,
    spanning_number,
)
from .errors import (
    ConstructionImpossible,
    DomainError,
    NotShadowed,
    ParameterError,
    ResolutionError,
    ScheduleError,
    ToolkitError,
)
from .levelsets import (
    RateReport,
    check_theorem_vminus,
    dn_measure_exact,
    dn_measure_mc,
    rate_lower_bound,
    rate_series,
)
from .maps import (
    MapSpec,
    Orbit,
    ShiftSystem,
    bowen_dist,
    evaluate,
    example_exv,
    example_exv_cores,
    identity_map,
    lap_counts,
    lipschitz_constant,
    load_map_json,
    orbit,
    periodic_cycles,
    periodic_points,
    pl_iterate,
    save_map_json,
    tent,
)
from .shadowing import (
    PseudoOrbit,
    TraceResult,
    is_pseudo_orbit,
    perturbed_orbit,
    refine,
    shadowing_modulus,
    trace,
)
