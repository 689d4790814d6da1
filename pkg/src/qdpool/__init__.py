"""Quality-diversity optimization with a scheduled pool of heterogeneous
emitters, plus closed-form benchmark tasks and run tooling."""

from qdpool.archive import (
    AddResult,
    AddStatus,
    Archive,
    Elite,
    EmptyArchiveError,
    GridSpec,
    cell_index,
    cell_indices,
)
from qdpool.cmaes import CmaesParams, CmaesState, EmitterExhaustedError, StopToggles
from qdpool.emitters import (
    EMITTER_CLASSES,
    Emitter,
    EmitterKind,
    ImprovementEmitter,
    LineOperatorParams,
    OptimisingEmitter,
    RandomDirectionEmitter,
    RandomEmitter,
)
from qdpool.engine import (
    VARIANT_NAMES,
    Engine,
    RunConfig,
    RunResult,
    build_pool,
    run,
    variant_composition,
)
from qdpool.metrics import (
    GenerationRecord,
    InsufficientDataError,
    holm_adjust,
    qd_score,
    rank_sum_compare,
    snapshot,
    triangular_smooth,
)
from qdpool.scheduler import BanditStats, UcbScheduler, UniformScheduler
from qdpool.tasks import TASK_NAMES, Evaluation, TaskSpec, evaluate_batch, make_task

__all__ = [
    "AddResult",
    "AddStatus",
    "Archive",
    "BanditStats",
    "CmaesParams",
    "CmaesState",
    "EMITTER_CLASSES",
    "Elite",
    "Emitter",
    "EmitterExhaustedError",
    "EmitterKind",
    "EmptyArchiveError",
    "Engine",
    "Evaluation",
    "GenerationRecord",
    "GridSpec",
    "ImprovementEmitter",
    "InsufficientDataError",
    "LineOperatorParams",
    "OptimisingEmitter",
    "RandomDirectionEmitter",
    "RandomEmitter",
    "RunConfig",
    "RunResult",
    "StopToggles",
    "TASK_NAMES",
    "TaskSpec",
    "UcbScheduler",
    "UniformScheduler",
    "VARIANT_NAMES",
    "build_pool",
    "cell_index",
    "cell_indices",
    "evaluate_batch",
    "holm_adjust",
    "make_task",
    "qd_score",
    "rank_sum_compare",
    "run",
    "snapshot",
    "triangular_smooth",
    "variant_composition",
]

__version__ = "0.1.0"
