pub mod quadrature;
pub mod search;
pub mod special;

pub use quadrature::{integrate_adaptive, AdaptiveOptions, GaussLegendre, QuadResult};
pub use search::{bisect, golden_section_max};
pub use special::{gamma, ln_gamma, student_t_quantile};
