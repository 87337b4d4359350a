"""Local community detection by candidate-list agreement."""
from .detection import (
    Assignment,
    CandidateList,
    CandidateLists,
    DetectionParams,
    Provenance,
    UnionFind,
    agreement,
    assign,
    compile_all,
    compile_candidates,
    detect,
    edge_agreements,
    select_preferred,
    uncover,
)
from .generators import (
    ConfigError,
    LfrLikeConfig,
    PlantedConfig,
    gen_lfr_like,
    gen_planted,
    load_lfr_files,
)
from .graph import (
    Graph,
    GraphError,
    IdRemap,
    ParseError,
    Partition,
    ValidationError,
    karate,
    load_edge_list,
    read_partition,
    validate,
    write_edge_list,
    write_partition,
)
from .metrics import CarrierMismatch, ari, contingency, nmi
from .runtime import CoverError, MessageBus, PollerPlan, poll_and_merge, run_rounds

__all__ = [name for name in dir() if not name.startswith("_")]
