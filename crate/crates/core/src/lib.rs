//! Estimation of the distribution of random coefficients in the linear model
//! `Y = <beta, X>` from observations of `(X, Y)` alone.
//!
//! The estimator projects the data onto random directions on the unit sphere,
//! forms for each direction the empirical measure of pseudo-projections of the
//! k nearest covariates, and finds the discrete measure of k point masses in a
//! ball that minimizes the average one-dimensional squared Wasserstein distance
//! to those slices. Three solvers are provided:
//!
//! * [`estimator::fit_bcd`] — block coordinate descent; each block update is a
//!   ball-constrained least-squares problem solved exactly, so the objective
//!   trace is non-increasing.
//! * [`estimator::fit_abcd`] — a cheaper projected update that replaces the
//!   block solve with its large-`m` closed form.
//! * [`flow::run_flow`] — a diffusion particle system whose drift matches
//!   projected particle quantiles to slice quantiles, with optional entropic
//!   noise.
//!
//! [`simbench`] generates synthetic benchmark data (von Mises–Fisher
//! covariates, three coefficient laws) and runs repeated experiments;
//! [`causal`] applies the machinery to treatment-effect estimation through a
//! Cauchy-regularized design.
//!
//! All randomness is drawn from counter-based streams keyed by `(seed,
//! stream id)`, so results are bit-identical regardless of thread count.
//!
//! ```
//! use swrc::{estimator, simbench, sphere};
//!
//! let law = simbench::CoefficientLaw::new(simbench::LawKind::Sph, 10.0, 2).unwrap();
//! let (dataset, _betas) = simbench::generate_dataset(&law, 200, 0.1, 7).unwrap();
//! let nd = swrc::data::normalize(&dataset).unwrap();
//! let dirs = sphere::sample_haar_directions(2, 50, 7).unwrap();
//! let (particles, report) = estimator::fit_abcd(&nd, &dirs, 35, 10.0, 7, 20).unwrap();
//! assert_eq!(particles.points().len(), 35);
//! assert!(report.final_objective.is_finite());
//! ```

pub mod causal;
pub mod data;
pub mod error;
pub mod estimator;
pub mod flow;
pub mod rng;
pub mod simbench;
pub mod slicing;
pub mod sphere;
pub mod transport;

pub use error::{Error, Result};
