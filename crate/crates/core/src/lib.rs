//! Quasi-uniform scatterings of lattice points on the boundary of `A_n`
//! weight polytopes, with exact nearest-center search.
//!
//! A Young diagram `λ` defines the permutohedron `P_λ`. Level `k` of the
//! scattering holds the points of `∂P_λ ∩ 𝔛/2^k` not present at coarser
//! levels; within a level, centers are listed in descending lexicographic
//! order. [`build_scattering`] concatenates levels `0..=K`,
//! [`nearest_center`] answers exact `k`-nearest queries and
//! [`verify_scattering`] measures how uniformly every prefix covers the
//! boundary.

pub mod boundary;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod scattering;
pub mod search;

pub use boundary::{enumerate_dominant_boundary, enumerate_level, LevelSet};
pub use error::{Error, Result};
pub use model::{
    distance, dominant_sort, membership, polytope_center, Membership, Metric, Permutation,
    ScaledPoint, YoungDiagram,
};
pub use scattering::{
    build_scattering, build_scattering_with, embed_scattering, iota_embed, verify_scattering,
    weyl_orbit, Scattering, Truncation, UniformityReport,
};
pub use search::{cosine_nearest, nearest_center, Neighbor, QueryResult};
