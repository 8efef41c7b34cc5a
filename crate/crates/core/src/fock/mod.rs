//! Truncated Fock-space realization of the generator, Kraus channels and their tree compilation.

mod generator;
mod kraus;
pub mod linalg;
mod rank;
mod space;
mod stencil;
mod tree;
mod verify;

pub use generator::{assemble_generator, assemble_terms, GeneratorMatrix, Term};
pub use kraus::{kraus_pair, kraus_set, psd_shift, KrausSet, COMPLETENESS_TOL, PSD_CLIP};
pub use rank::{binomial, ceil_log2, rank_analytics, write_rank_csv, RankReport, RANK_CSV_HEADER};
pub use space::{build_fock, build_fock_with_cap, FockSpace, DEFAULT_DIM_CAP};
pub use stencil::{min_radius, moment_residual, stencil_coefficients, MOMENT_TOL};
pub use tree::{compile_tree, read_node, ChannelTree};
pub use verify::{
    is_density, maximally_mixed, pure_density, random_density, verify_channel, ChannelReport, PROBABILITY_TOL,
    TRACE_TOL, UNITARITY_TOL, ZERO_PATH_TOL,
};
