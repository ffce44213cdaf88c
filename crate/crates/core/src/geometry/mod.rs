//! Ambient linear algebra, exact jets, and first/second fundamental data.

pub mod ambient;
pub mod cubic;
pub mod expr;
pub mod fundamental;
pub mod holo;
pub mod immersion;
pub mod jet;

pub use ambient::{apply_j, hermitian_product, AmbientSpace, CVector, LiftMode, Signature};
pub use cubic::{canonicalize_cubic, symmetry_residual, CanonicalFrame, SymmetryGenerators};
pub use expr::Expr;
pub use fundamental::{
    induced_metric, kahler_form_restriction, minimality_residual, second_fundamental_a, CubicTensor, MetricMatrix,
};
pub use holo::HolomorphicFn;
pub use immersion::{evaluate_jet, evaluate_jet_fd, Immersion, Jet2, ParamBox};
