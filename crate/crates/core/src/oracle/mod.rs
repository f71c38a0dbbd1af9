//! Brute-force reference implementations, seeded random samplers and
//! manufactured problems.

mod brute;
mod identities;
mod manufactured;
mod sample;

pub use brute::{newton_delta, sigma_eig, subset_sum, DELTA_LIMIT};
pub use identities::{
    check_identities, derivative_check, run_family, Family, FamilyResult, IdentityReport,
    DEFAULT_SEED,
};
pub use manufactured::{make_manufactured, make_manufactured_analytic, ManufacturedProblem};
pub use sample::{
    random_negative_cone, random_orthogonal, random_positive_cone, random_psd, random_rotated,
    random_symmetric,
};
