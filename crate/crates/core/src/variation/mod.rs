//! Offspring generation operators.

mod de;
mod regularity;
mod sbx;

pub use de::{de_generate, DePool, DeStrategy};
pub use regularity::{build_regularity_model, sample_regularity_model, Cluster, RegularityModel, RegularityParams};
pub use sbx::{polynomial_mutation, sbx_polynomial, PolynomialMutation, SbxParams};
