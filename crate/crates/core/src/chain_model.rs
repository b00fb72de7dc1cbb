//! Linear-chain sequence model: samples, datasets, the joint feature map,
//! and linear/transfer scoring.
//!
//! The joint feature vector of an input sequence `x` and label sequence `y`
//! has dimension `m = d*K + K*K` with a fixed layout:
//!
//! * emission block, label-major: entry `k*d + j` sums `x[t][j]` over all
//!   positions `t` with `y[t] == k`;
//! * transition block, row-major: entry `d*K + p*K + q` counts adjacent
//!   pairs with `y[t-1] == p, y[t] == q`.
//!
//! The layout is fixed so serialized weight vectors are stable across runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Which population a dataset was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

/// One sequence-labeled instance: `T` input vectors of dimension `d`, and
/// optionally a label per position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample<F> {
    pub x: Vec<Vec<F>>,
    pub y: Option<Vec<usize>>,
}

impl<F: Real> Sample<F> {
    pub fn new(x: Vec<Vec<F>>, y: Option<Vec<usize>>) -> Self {
        Sample { x, y }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        self.y.is_some()
    }

    /// Checks the sample against an input dimension and label alphabet.
    pub fn validate(&self, d: usize, k: usize) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::EmptySequence);
        }
        for xt in &self.x {
            if xt.len() != d {
                return Err(Error::Dimension(format!(
                    "input vector has {} components, expected {}",
                    xt.len(),
                    d
                )));
            }
        }
        if let Some(y) = &self.y {
            if y.len() != self.x.len() {
                return Err(Error::LengthMismatch {
                    left: y.len(),
                    right: self.x.len(),
                });
            }
            for &label in y {
                if label >= k {
                    return Err(Error::LabelOutOfRange { label, k });
                }
            }
        }
        Ok(())
    }
}

/// A collection of samples sharing input dimension `d` and label alphabet
/// size `k`. Labeled samples precede unlabeled ones in datasets written by
/// this toolkit.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    pub samples: Vec<Sample<F>>,
    pub d: usize,
    pub k: usize,
    pub domain: Domain,
}

impl<F: Real> Dataset<F> {
    pub fn new(samples: Vec<Sample<F>>, d: usize, k: usize, domain: Domain) -> Result<Self> {
        let ds = Dataset {
            samples,
            d,
            k,
            domain,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidParam(
                "dataset needs d >= 1 and K >= 1".into(),
            ));
        }
        for sample in &self.samples {
            sample.validate(self.d, self.k)?;
        }
        Ok(())
    }

    /// Total number of samples (`n`).
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of labeled samples (`l`).
    pub fn labeled_count(&self) -> usize {
        self.samples.iter().filter(|s| s.is_labeled()).count()
    }

    /// Iterator over the labeled samples, in dataset order.
    pub fn labeled(&self) -> impl Iterator<Item = &Sample<F>> {
        self.samples.iter().filter(|s| s.is_labeled())
    }

    pub fn feature_map(&self) -> ChainFeatureMap {
        ChainFeatureMap::new(self.d, self.k)
    }
}

/// Joint feature map of a first-order label chain over `d`-dimensional
/// inputs and `K` labels; output dimension is `m = d*K + K*K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFeatureMap {
    d: usize,
    k: usize,
}

impl ChainFeatureMap {
    pub fn new(d: usize, k: usize) -> Self {
        assert!(d >= 1 && k >= 1, "feature map needs d >= 1 and K >= 1");
        ChainFeatureMap { d, k }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Feature dimension `m = d*K + K*K`.
    pub fn m(&self) -> usize {
        self.d * self.k + self.k * self.k
    }

    /// Index of emission feature (label `k`, input coordinate `j`).
    pub fn emission_index(&self, label: usize, coord: usize) -> usize {
        label * self.d + coord
    }

    /// Index of transition feature `prev -> next`.
    pub fn transition_index(&self, prev: usize, next: usize) -> usize {
        self.d * self.k + prev * self.k + next
    }

    /// Joint feature vector of `(x, y)`.
    ///
    /// Emission entries sum input coordinates per label; transition entries
    /// count adjacent label pairs.
    pub fn joint_features<F: Real>(&self, x: &[Vec<F>], y: &[usize]) -> Result<Vec<F>> {
        self.check_instance(x, Some(y))?;
        let mut phi = vec![F::zero(); self.m()];
        for (xt, &label) in x.iter().zip(y) {
            let base = self.emission_index(label, 0);
            for (j, &v) in xt.iter().enumerate() {
                phi[base + j] += v;
            }
        }
        for t in 1..y.len() {
            phi[self.transition_index(y[t - 1], y[t])] += F::one();
        }
        Ok(phi)
    }

    /// Validates an `(x, y)` instance against this map. `y` may be absent.
    pub fn check_instance<F: Real>(&self, x: &[Vec<F>], y: Option<&[usize]>) -> Result<()> {
        if x.is_empty() {
            return Err(Error::EmptySequence);
        }
        for xt in x {
            if xt.len() != self.d {
                return Err(Error::Dimension(format!(
                    "input vector has {} components, expected {}",
                    xt.len(),
                    self.d
                )));
            }
        }
        if let Some(y) = y {
            if y.len() != x.len() {
                return Err(Error::LengthMismatch {
                    left: y.len(),
                    right: x.len(),
                });
            }
            for &label in y {
                if label >= self.k {
                    return Err(Error::LabelOutOfRange { label, k: self.k });
                }
            }
        }
        Ok(())
    }
}

/// Linear scorer `f(x, y) = theta . psi(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearScorer<F> {
    pub theta: Vec<F>,
    pub map: ChainFeatureMap,
}

impl<F: Real> LinearScorer<F> {
    pub fn new(theta: Vec<F>, map: ChainFeatureMap) -> Result<Self> {
        if theta.len() != map.m() {
            return Err(Error::Dimension(format!(
                "weight vector has {} entries, feature map needs {}",
                theta.len(),
                map.m()
            )));
        }
        Ok(LinearScorer { theta, map })
    }

    /// All-zero scorer for the given map.
    pub fn zeros(map: ChainFeatureMap) -> Self {
        LinearScorer {
            theta: vec![F::zero(); map.m()],
            map,
        }
    }

    pub fn score(&self, x: &[Vec<F>], y: &[usize]) -> Result<F> {
        let phi = self.map.joint_features(x, y)?;
        Ok(dot(&self.theta, &phi))
    }
}

/// Source scorer plus an additive delta `w . psi(x, y)` learned on the
/// target domain. The source weights are frozen; only `w` is trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferScorer<F> {
    pub source: LinearScorer<F>,
    pub w: Vec<F>,
}

impl<F: Real> TransferScorer<F> {
    pub fn new(source: LinearScorer<F>, w: Vec<F>) -> Result<Self> {
        if w.len() != source.map.m() {
            return Err(Error::Dimension(format!(
                "delta vector has {} entries, feature map needs {}",
                w.len(),
                source.map.m()
            )));
        }
        Ok(TransferScorer { source, w })
    }

    pub fn map(&self) -> &ChainFeatureMap {
        &self.source.map
    }

    /// `f(x, y) = source(x, y) + w . psi(x, y)`.
    pub fn score(&self, x: &[Vec<F>], y: &[usize]) -> Result<F> {
        let phi = self.source.map.joint_features(x, y)?;
        Ok(dot(&self.source.theta, &phi) + dot(&self.w, &phi))
    }

    /// `theta + w`, the single weight vector the scorer is equivalent to.
    pub fn combined_weights(&self) -> Vec<F> {
        self.source
            .theta
            .iter()
            .zip(&self.w)
            .map(|(&t, &w)| t + w)
            .collect()
    }
}
