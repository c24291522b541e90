"""tiersim: trace-driven simulation of two-tier memory systems.

Models a fast tier used as an OS-transparent page cache over a large slow
tier, and reproduces the efficiency methodology of hybrid-memory
benchmarking: time-to-solution ratios against an all-fast baseline as a
function of memory-footprint ratio and arithmetic intensity.
"""

from ._backend import available_backends, backend_name
from .analysis import (
    EfficiencyPoint,
    SweepFeatures,
    SweepGrid,
    SweepTable,
    ai_threshold,
    efficiency,
    knee_ai,
    run_sweep,
    theoretical_floor,
)
from .engine import (
    EngineError,
    SimResult,
    simulate,
    simulate_reference,
    warmup,
)
from .prefetch import (
    AccessEvent,
    PrefetchPolicy,
    PrefetchRequest,
    RegionSpan,
    SequentialPolicy,
    StridePolicy,
    make_policy,
)
from .tiers import (
    CacheFullError,
    CacheState,
    NumaSpec,
    SpecError,
    SystemSpec,
    TierSpec,
    default_system,
)
from .trace_io import load_trace, save_trace
from .workloads import (
    AccessKind,
    AccessRun,
    Region,
    Trace,
    TraceMeta,
    WorkBlock,
    gemm_tile_ai,
    gen_fft3d,
    gen_gemm_tiled,
    gen_lu,
    gen_polynomial,
    gen_random,
    gen_stream,
    iter_page_touches,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
