//! Gibbs partitions `F ∘ G` up to symmetry: Boltzmann sampling, exact-size conditioning,
//! the remainder after removing a largest component, and its limit law.

pub mod boltzmann;
pub mod hat;
pub mod limit;
pub mod model;
pub mod pgf;
pub mod remainder;
pub mod sampler;

pub use boltzmann::{boltzmann_size_distribution, sample_general_symmetry, sample_set_symmetry, SizeDistribution};
pub use hat::{sample_hat_s_n, HatSample, HatSampler};
pub use limit::{boltzmann_remainder_law, limit_remainder_distribution, ComponentLaw, LimitEntry, LimitLaw};
pub use model::{has_composite_root, GibbsModel, OuterKind};
pub use pgf::{cycle_statistics_pgf_check, PgfReport};
pub use remainder::{attach_component, extract_remainder, FragmentRecord};
pub use sampler::{sample_composite, sample_s_n, Attachment, CompositeSampler, Method, SnSampler, SymmetryDraw};
