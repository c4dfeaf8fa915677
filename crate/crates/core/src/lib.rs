//! Contracting subspaces, divergence and Morse profiles on finite weighted graphs.
//!
//! Spaces are connected weighted graphs with a marked subspace Y and, usually,
//! a parameterized path γ along Y. Profiles are window-relative: every verdict
//! refers to the radii actually sampled.

pub mod asymptotics;
pub mod divergence;
pub mod document;
pub mod error;
pub mod function;
pub mod graph;
pub mod morse;
pub mod profile;
pub mod projection;
pub mod report;
pub mod sampling;
pub mod search;
pub mod spaces;

pub use asymptotics::{
    abel_steps, classify_growth, is_sublinear_window, preceq_fit, ConstantBox, FitReport, FunctionSamples, GrowthClass,
    PreorderFit, SublinearVerdict,
};
pub use divergence::{
    completely_superlinear_test, divergence_profile, lambda_divergence, parameter_robustness_check, DivergenceParams,
    DivergenceProfile, SGrid, SuperlinearVerdict,
};
pub use document::{load_space, save_space, SpaceDocument};
pub use error::{Error, Result};
pub use function::FunctionSpec;
pub use graph::{Length, MetricGraph, ParamPath, PointId, PointSet, QGParams};
pub use morse::{
    contraction_bound_from_morse, detour_bound, morse_bound_from_contraction, morse_profile, shortcut_quasigeodesify,
    DetourWitness, GeodesicChain, MorseBoundReport, MorseFunctionSpec, MorseProfile, MorseVerdict, PairPlan,
};
pub use profile::{Profile, ProfileKind, ProfileParams, ProfileSample};
pub use projection::{
    check_contracting, check_geodesic_image, contraction_profile, geodesic_image_profile, pair_projection_diameter,
    project, subspace_projection_diameter, ContractionHypothesis, ProjectionParams,
};
pub use sampling::SamplingPlan;
pub use spaces::{generate, Family, FamilyParams, MarkedSpace};

/// Runs `f` on a dedicated pool of `jobs` worker threads (0 means rayon's default).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
