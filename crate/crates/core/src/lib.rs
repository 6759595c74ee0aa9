//! Kernel SVM training with least-squares-type difference-of-convex (LS-DC) losses.
//!
//! Every supported loss `psi` admits a decomposition `psi(u) = A u^2 - (A u^2 - psi(u))`
//! with a convex second part. Linearising that part turns each iteration of the
//! difference-of-convex algorithm into a ridge-regularised linear solve whose
//! matrix never changes, so it is factorised once and reused. Convex and
//! nonconvex, classification and regression losses all run through the same loop;
//! only the working vector `v` differs between them.
//!
//! Three linear-solve strategies are provided:
//!
//! * `full`: Cholesky factor of `(lambda m / A) I + K` on the dense Gram matrix,
//! * `smw`: Sherman-Morrison-Woodbury on a low-rank factor `K ~ P P^T`,
//! * `sparse`: coefficients supported on the pivot set of a pivoted Cholesky factor.
//!
//! ```
//! use unisvm::data::gen_checkerboard;
//! use unisvm::kernel_approx::KernelSpec;
//! use unisvm::losses::{LossKind, LossSpec};
//! use unisvm::solver::{train, Strategy, TrainConfig};
//! use unisvm::Task;
//!
//! let data = gen_checkerboard(200, 2, 7).unwrap();
//! let loss = LossSpec::new(LossKind::TruncatedSqHinge { a: 2.0 }, Task::Classification).unwrap();
//! let config = TrainConfig { lambda: 1e-5, strategy: Strategy::Sparse, rank_budget: Some(10), ..Default::default() };
//! let (model, report) = train(&config, &data, &loss, &KernelSpec::gaussian(0.5).unwrap()).unwrap();
//! assert!(report.iterations >= 1);
//! assert_eq!(Some(model.coefficients().len()), report.rank);
//! assert!(model.coefficients().len() <= 10);
//! ```

pub mod data;
pub mod error;
pub mod kernel_approx;
pub mod losses;
pub mod solver;

pub use data::{Dataset, Metrics, SparseVector, Task};
pub use error::{Error, Result};
