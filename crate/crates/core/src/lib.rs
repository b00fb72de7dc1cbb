//! Structured-output transfer learning over linear label chains.
//!
//! A linear-chain predictor is trained on a fully labeled source domain,
//! then adapted to a label-scarce target domain whose inputs are
//! distributed differently: a frozen copy of the source scorer gains an
//! additive delta `w . psi(x, y)`, and `w` is learned by a cutting-plane
//! loop over averaged margin constraints with a small certified QP at its
//! core.
//!
//! Modules:
//!
//! * [`chain_model`] — samples, datasets, the joint feature map, scorers;
//! * [`inference`] — Viterbi decoding, loss-augmented separation, Hamming
//!   loss, and an exhaustive decoding oracle;
//! * [`qp`] — the working-set dual solver with KKT certificates;
//! * [`trainer`] — the cutting-plane loop, plus source training as its
//!   zero-base special case;
//! * [`datagen`] — seeded synthetic domains with covariate shift;
//! * [`io`] — dataset/model/prediction/metric file formats;
//! * [`oracle`] — brute-force enumeration oracles for verification.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below pin the common choice.

// index arithmetic is the clearest form for these kernels, and the
// negated comparisons reject NaN where `<=` would accept it
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain_model;
pub mod datagen;
pub mod error;
pub mod inference;
pub mod io;
pub mod oracle;
pub mod qp;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Sample64 = chain_model::Sample<f64>;
pub type Dataset64 = chain_model::Dataset<f64>;
pub type LinearScorer64 = chain_model::LinearScorer<f64>;
pub type TransferScorer64 = chain_model::TransferScorer<f64>;
pub type ConstraintRecord64 = qp::ConstraintRecord<f64>;
pub type WorkingSet64 = qp::WorkingSet<f64>;
pub type DualState64 = qp::DualState<f64>;
pub type PrimalSolution64 = qp::PrimalSolution<f64>;
pub type TrainConfig64 = trainer::TrainConfig<f64>;
pub type TrainReport64 = trainer::TrainReport<f64>;
pub type DomainParams64 = datagen::DomainParams<f64>;
pub type ModelFile64 = io::ModelFile<f64>;
pub type Metrics64 = io::Metrics<f64>;
