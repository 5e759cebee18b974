//! Torsion points on theta divisors of principally polarized abelian
//! varieties over the complex numbers.
//!
//! The crate counts `Θ(n) = #A[n] ∩ Θ` on explicit period matrices using a
//! Riemann theta evaluator with certified error bounds, computes numerical
//! ranks of the multiplication maps `M(x, y)` of second-order theta
//! functions, and checks those ranks against the number of two-torsion
//! translates of `Θ` avoiding `y - x`.

pub mod characteristics;
pub mod cli;
pub mod error;
pub mod exec;
pub mod multmap;
pub mod ppav;
pub mod theta;

pub use characteristics::{
    enumerate_characteristics, parity, product_characteristic, Characteristic, CountReport, Parity,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use multmap::{numerical_rank, verify_kempf, RankReport, RankSettings};
pub use ppav::{product_ppav, random_ppav, theta2_count, theta_n_count, TorsionPoint};
pub use theta::{theta, theta_batch, RiemannMatrix, ThetaEvaluator, ThetaResult};
