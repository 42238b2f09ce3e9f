//! Proof strategies with their certificates.

pub mod adversarial;
pub mod certificate;
pub mod constants;
pub mod elementary;
pub mod lemmas;

pub use certificate::{Certificate, Certified, CertifiedEvent, PathCheck};
pub use constants::ConstantsTable;
pub use elementary::{
    boundedness_strategy, epsilon_crossing_strategy, qv_budget_strategy, Boundedness, Crossing,
    QvBudget,
};
pub use lemmas::{
    boundedness_certified, crossing_pair, grid_levels, levy_modulus_strategy,
    levy_super_modulus_strategy, levy_transfer, modulus_certificate_strategy, qv_bound_strategy,
    super_modulus_strategy,
};
