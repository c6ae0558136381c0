//! Exact-arithmetic toolkit for arithmetic-progression-free subset
//! problems: structure-preserving compression of integer sets into short
//! intervals, replayable compression certificates, and exact extremal
//! solvers with witnesses.
//!
//! Everything is integer- or rational-exact; there is no floating point
//! on any correctness path.

pub mod certificate;
pub mod error;
pub mod extremal;
pub mod kernel;
pub mod modular;
pub mod pipeline;
pub mod set;

pub use certificate::{
    ChainVerificationReport, CompressionChain, CompressionStep, HalfChoice, StepKind,
    StepParams, ValueMap, VerificationReport,
};
pub use error::{Error, Result};
pub use extremal::{
    behrend_set, density, g_table, g_value, greedy_apfree, max_apfree_subset,
    naive_max_apfree, phi_upper_search, product_construct, ExtremalResult, GEntry, GTable,
    Method, PhiSearch,
};
pub use kernel::{
    compress_exponential, find_distinct_point, hadamard_bound, kernel_parametrize,
    KernelParametrization,
};
pub use modular::{
    compress_almost_linear, compress_cubic, find_nondividing_prime, primes_in_window,
    reduce_mod_half, NondividingPrime, PrimeWindow,
};
pub use pipeline::{
    best_shift, compress_full, extract_apfree, pull_back, CompressOutcome, CompressReport,
    ExtractOutcome, ExtractReport, PipelineConfig, StageReport, TargetMethod,
};
pub use set::{
    enumerate_progressions, is_progression_free, second_difference_matrix, ConstraintMatrix,
    IntSet, Progression,
};
