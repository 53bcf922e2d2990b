//! Multiplierless multiplication by very large constants.
//!
//! The flow splits each target into small odd patterns ([`decompose`]),
//! builds a shared adder graph for the distinct patterns and glues the
//! shifted patterns back into the targets ([`mcm_engine`]). [`pipeline`]
//! wires the steps together.

pub mod addergraph;
pub mod benchmark;
pub mod decompose;
pub mod dlx;
pub mod mcm_engine;
pub mod numrep;
pub mod pipeline;
pub mod satcore;

pub use addergraph::{merge, AddOp, AdderGraph, AdderNode, GraphError, Operand, OutputBinding};
pub use benchmark::{export_design_space, gen_default_benchmark, gen_random_benchmark, rows_to_csv, InstanceError, ProblemInstance, ResultRow};
pub use decompose::{
    build_xc_instance, chunk_divide_binary, chunk_divide_csd, enumerate_pattern_sets, solve_pattern_decomposition,
    DecomposeError, Decomposition, Encoding, PatternSearch, PatternSearchOptions, PlacedPattern, XcInstance,
};
pub use mcm_engine::{
    mcm_oracle, reconstruct_naive, reconstruct_optimal, solve_mcm_heuristic, solve_mcm_optimal, McmError, McmInstance,
    McmOptions, McmSolution, OracleResult,
};
pub use numrep::{parse_nat, to_csd, BigNat, NumError, Pattern, SdDigitString};
pub use pipeline::{
    run_baseline_chunk, run_best_of, run_enumerate_optimal, run_flow, run_heuristic_csd, run_sat_flow, DecompositionMode,
    FlowConfig, FlowError, FlowResult, PatternMcm, ReconstructionMode,
};
pub use satcore::{Backend, CnfFormula, Deadline, SatError, SatOutcome, SatStatus};
