class Config:
    """Configuration class defining common numerical parameters"""
    # \/\/ General parameters \/\/
    SCHEMA_VERSION: int = 1
    TOOL_VERSION: str = 'fracpot 0.1.0'
    SEED: int = 42

    # \/\/ Quadrature \/\/
    QUAD_TOL: float = 1e-10
    # DIVERGENCE_THRESHOLD: partial sums above this are numeric-divergent
    DIVERGENCE_THRESHOLD: float = 1e12
    MAX_WINDOWS: int = 20000
    # QUAD_LIMIT: subinterval limit handed to scipy.integrate.quad
    QUAD_LIMIT: int = 500
    # TAIL_FIT_WINDOWS: window increments used to fit the decay exponent of an undeclared tail
    TAIL_FIT_WINDOWS: int = 16
    # Fixed composite rule used by vectorized sweeps
    SWEEP_PANELS: int = 12
    PANEL_NODES: int = 15
    SWEEP_SPAN_DECADES: float = 8.

    # \/\/ Criteria \/\/
    R0: float = 1.
    X_GRID_MIN: float = 1e-3
    X_GRID_MAX: float = 1e6
    R_GRID_MAX: float = 1e6
    POINTS_PER_DECADE: int = 4
    # DECADE_STABILITY: allowed growth of the running sup over the last two r-decades
    DECADE_STABILITY: float = 0.05
    EDGE_SLOPE_FLOOR: float = 0.05
    EDGE_SLOPE_DECAY: float = 0.8
    ELEMENTARY_TAIL_SHARE: float = 1e-2

    # \/\/ Discrete kernel spaces \/\/
    # WMP_TRUNCATION_FACTOR: N = factor * max off-diagonal entry
    WMP_TRUNCATION_FACTOR: float = 1e6
    EXACT_SUBSET_LIMIT: int = 10
    EXACT_LP_VARIABLES: int = 6
    LP_FEASIBILITY_TOL: float = 1e-9
    SAMPLED_SUBSETS: int = 2000
    CHECK_RTOL: float = 1e-9

    # \/\/ Iteration \/\/
    MAX_PSI_DEPTH: int = 8
    PSI_POINTS_PER_DECADE: int = 16
    ITERATION_OVERFLOW: float = 1e300
    ITERATION_RTOL: float = 1e-8

    # \/\/ Picard iteration on grids \/\/
    PICARD_TOL: float = 1e-8
    PICARD_MAX_ITERS: int = 10_000
    BLOWUP_GUARD: float = 1e6
    GROWING_INCREMENTS: int = 5
    MAX_FORCING_HALVINGS: int = 40
    MAX_CELLS: int = 100_000
    ETA_AMPLITUDE: float = 1.
    ETA_RADIUS: float = 0.25
    # TREND_GROWTH: per-doubling growth of a measured constant read as "not bounded"
    TREND_GROWTH: float = 1.3
    APPROACH_LEVELS: int = 7
    KERNEL_CACHE_MAGIC: bytes = b'FPKC'
    KERNEL_CACHE_VERSION: int = 1
