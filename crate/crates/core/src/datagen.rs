//! Seeded synthetic sequence data: Markov label chains with Gaussian
//! emissions, plus affine covariate shift for building a target domain
//! that shares the source's label process but not its input distribution.
//!
//! Generation is a pure function of `(params, n, seed)`. Each sample draws
//! from two dedicated ChaCha streams derived from the seed and the sample
//! index: one for lengths and labels, one for emission noise, so changing
//! `noise_sigma` can never disturb the label process.

use rand::distr::{Distribution, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_model::{Dataset, Domain, Sample};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rotation applied by [`default_target_params`], in degrees.
pub const DEFAULT_SHIFT_DEGREES: f64 = 60.0;
/// Translation applied by [`default_target_params`].
pub const DEFAULT_SHIFT_TRANSLATION: [f64; 2] = [0.5, -0.25];

/// Affine input transform `v -> matrix * v + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap<F> {
    pub matrix: Vec<Vec<F>>,
    pub offset: Vec<F>,
}

impl<F: Real> AffineMap<F> {
    pub fn identity(d: usize) -> Self {
        let mut matrix = vec![vec![F::zero(); d]; d];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = F::one();
        }
        AffineMap {
            matrix,
            offset: vec![F::zero(); d],
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.matrix.len() != d || self.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::Dimension(format!(
                "emission transform matrix is not {d}x{d}"
            )));
        }
        if self.offset.len() != d {
            return Err(Error::Dimension(format!(
                "emission transform offset is not length {d}"
            )));
        }
        let finite = self
            .matrix
            .iter()
            .flatten()
            .chain(self.offset.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParam("non-finite emission transform".into()));
        }
        Ok(())
    }

    pub fn apply(&self, v: &[F]) -> Vec<F> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, &off)| {
                let mut acc = F::zero();
                for (a, b) in row.iter().zip(v) {
                    acc += *a * *b;
                }
                acc + off
            })
            .collect()
    }

    /// `outer_matrix * self + outer_offset`, as one affine map.
    fn composed_with(&self, outer_matrix: &[Vec<F>], outer_offset: &[F]) -> Self {
        let d = self.offset.len();
        let mut matrix = vec![vec![F::zero(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = F::zero();
                for k in 0..d {
                    acc += outer_matrix[i][k] * self.matrix[k][j];
                }
                matrix[i][j] = acc;
            }
        }
        let offset = outer_matrix
            .iter()
            .zip(outer_offset)
            .map(|(row, &off)| {
                let mut acc = F::zero();
                for (a, b) in row.iter().zip(&self.offset) {
                    acc += *a * *b;
                }
                acc + off
            })
            .collect();
        AffineMap { matrix, offset }
    }
}

/// Everything that determines one domain's data distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainParams<F> {
    pub d: usize,
    pub k: usize,
    /// Distribution of the first label; sums to one.
    pub label_prior: Vec<F>,
    /// Row-stochastic label transition matrix.
    pub transition: Vec<Vec<F>>,
    /// Emission mean per label, before the transform.
    pub means: Vec<Vec<F>>,
    /// Per-coordinate standard deviation of the emission noise.
    pub noise_sigma: F,
    /// Affine map applied to every (mean + noise) emission.
    pub emission_transform: AffineMap<F>,
    /// Inclusive range of sequence lengths.
    pub length_range: (usize, usize),
}

impl<F: Real> DomainParams<F> {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidParam("d and K must be positive".into()));
        }
        let tol = F::cast(1e-12);
        if self.label_prior.len() != self.k {
            return Err(Error::Dimension("label prior length != K".into()));
        }
        let prior_sum: F = self.label_prior.iter().copied().sum();
        if (prior_sum - F::one()).abs() > tol || self.label_prior.iter().any(|&p| p < F::zero()) {
            return Err(Error::InvalidParam(
                "label prior is not a distribution".into(),
            ));
        }
        if self.transition.len() != self.k {
            return Err(Error::Dimension("transition matrix is not KxK".into()));
        }
        for row in &self.transition {
            if row.len() != self.k {
                return Err(Error::Dimension("transition matrix is not KxK".into()));
            }
            let sum: F = row.iter().copied().sum();
            if (sum - F::one()).abs() > tol || row.iter().any(|&p| p < F::zero()) {
                return Err(Error::InvalidParam(
                    "transition row is not a distribution".into(),
                ));
            }
        }
        if self.means.len() != self.k || self.means.iter().any(|m| m.len() != self.d) {
            return Err(Error::Dimension(
                "means must be K vectors of length d".into(),
            ));
        }
        if !(self.noise_sigma > F::zero()) {
            return Err(Error::InvalidParam("noise_sigma must be positive".into()));
        }
        self.emission_transform.validate(self.d)?;
        let (lo, hi) = self.length_range;
        if lo < 1 || lo > hi {
            return Err(Error::InvalidParam(format!(
                "length range [{lo}, {hi}] invalid"
            )));
        }
        Ok(())
    }
}

/// Two-dimensional source domain over `k` labels: uniform prior,
/// `self_transition` on the diagonal with the remainder spread evenly,
/// unit-circle means at angles `2*pi*i/k`, identity transform.
pub fn source_params<F: Real>(
    k: usize,
    noise_sigma: F,
    self_transition: F,
    length_range: (usize, usize),
) -> DomainParams<F> {
    assert!(k >= 1, "need at least one label");
    let d = 2;
    let off_p = if k == 1 {
        F::zero()
    } else {
        (F::one() - self_transition) / F::from_usize(k - 1).unwrap()
    };
    let transition = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if k == 1 {
                        F::one()
                    } else if i == j {
                        self_transition
                    } else {
                        off_p
                    }
                })
                .collect()
        })
        .collect();
    let means = (0..k)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            vec![F::cast(angle.cos()), F::cast(angle.sin())]
        })
        .collect();
    DomainParams {
        d,
        k,
        label_prior: vec![F::one() / F::from_usize(k).unwrap(); k],
        transition,
        means,
        noise_sigma,
        emission_transform: AffineMap::identity(d),
        length_range,
    }
}

/// Source-domain defaults: `K = 3`, sigma 0.6, self-transition 0.85,
/// lengths 4..=8. The noise and label persistence are chosen so a handful
/// of labeled sequences is genuinely not enough to train on directly,
/// which is the regime adaptation is for.
pub fn default_source_params<F: Real>() -> DomainParams<F> {
    source_params(3, F::cast(0.6), F::cast(0.85), (4, 8))
}

/// The default covariate-shifted target: source defaults rotated by 60
/// degrees and translated by `[0.5, -0.25]`.
pub fn default_target_params<F: Real>() -> DomainParams<F> {
    let translation = [
        F::cast(DEFAULT_SHIFT_TRANSLATION[0]),
        F::cast(DEFAULT_SHIFT_TRANSLATION[1]),
    ];
    shift(
        &default_source_params(),
        F::cast(DEFAULT_SHIFT_DEGREES),
        &translation,
    )
    .expect("default shift parameters are valid")
}

fn categorical<F: Real>(rng: &mut ChaCha8Rng, probs: &[F]) -> usize
where
    StandardUniform: Distribution<F>,
{
    let u: F = rng.random();
    let mut acc = F::zero();
    for (label, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return label;
        }
    }
    probs.len() - 1
}

/// Draws `n` labeled samples. Deterministic: the same `(params, n, seed)`
/// always produces the same dataset, and samples are independent streams
/// so generation parallelizes without changing the output.
pub fn generate<F: Real>(
    params: &DomainParams<F>,
    n: usize,
    seed: u64,
    domain: Domain,
) -> Result<Dataset<F>>
where
    StandardUniform: Distribution<F>,
    StandardNormal: Distribution<F>,
{
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidParam("n must be at least 1".into()));
    }
    let samples: Vec<Sample<F>> = (0..n)
        .into_par_iter()
        .map(|index| {
            let mut label_rng = ChaCha8Rng::seed_from_u64(seed);
            label_rng.set_stream(2 * index as u64);
            let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
            noise_rng.set_stream(2 * index as u64 + 1);

            let (lo, hi) = params.length_range;
            let t = label_rng.random_range(lo..=hi);
            let mut y = Vec::with_capacity(t);
            y.push(categorical(&mut label_rng, &params.label_prior));
            for pos in 1..t {
                let prev = y[pos - 1];
                y.push(categorical(&mut label_rng, &params.transition[prev]));
            }
            let x = y
                .iter()
                .map(|&label| {
                    let noisy: Vec<F> = params.means[label]
                        .iter()
                        .map(|&mu| {
                            let eps: F = noise_rng.sample(StandardNormal);
                            mu + params.noise_sigma * eps
                        })
                        .collect();
                    params.emission_transform.apply(&noisy)
                })
                .collect();
            Sample::new(x, Some(y))
        })
        .collect();
    Dataset::new(samples, params.d, params.k, domain)
}

/// Covariate shift for two-dimensional inputs: composes the emission
/// transform with a rotation by `rotation_degrees` plus a translation. The
/// label process is untouched.
pub fn shift<F: Real>(
    params: &DomainParams<F>,
    rotation_degrees: F,
    translation: &[F],
) -> Result<DomainParams<F>> {
    if params.d != 2 {
        return Err(Error::Dimension(format!(
            "rotation shift needs d = 2, got d = {}",
            params.d
        )));
    }
    let radians = rotation_degrees.to_radians();
    let (sin, cos) = radians.sin_cos();
    let rotation = vec![vec![cos, -sin], vec![sin, cos]];
    shift_orthogonal(params, &rotation, translation)
}

/// Covariate shift with an explicit orthogonal matrix, any dimension.
pub fn shift_orthogonal<F: Real>(
    params: &DomainParams<F>,
    matrix: &[Vec<F>],
    translation: &[F],
) -> Result<DomainParams<F>> {
    params.validate()?;
    let d = params.d;
    if matrix.len() != d || matrix.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension(format!("shift matrix is not {d}x{d}")));
    }
    if translation.len() != d {
        return Err(Error::Dimension(format!("translation is not length {d}")));
    }
    // Q'Q = I within 1e-8
    let tol = F::cast(1e-8);
    for i in 0..d {
        for j in 0..d {
            let mut acc = F::zero();
            for row in 0..d {
                acc += matrix[row][i] * matrix[row][j];
            }
            let expect = if i == j { F::one() } else { F::zero() };
            if (acc - expect).abs() > tol {
                return Err(Error::InvalidParam("shift matrix is not orthogonal".into()));
            }
        }
    }
    let mut shifted = params.clone();
    shifted.emission_transform = params.emission_transform.composed_with(matrix, translation);
    Ok(shifted)
}

/// Keeps labels on a seeded uniform choice of `l` samples and hides the
/// rest, reordering so labeled samples come first. Returns the masked
/// dataset together with a sealed fully-labeled copy in the same order,
/// for evaluation only. The input must be fully labeled.
pub fn mask_labels<F: Real>(
    ds: &Dataset<F>,
    l: usize,
    seed: u64,
) -> Result<(Dataset<F>, Dataset<F>)> {
    let n = ds.len();
    if l > n {
        return Err(Error::InvalidParam(format!(
            "cannot keep {l} labeled samples out of {n}"
        )));
    }
    for (index, sample) in ds.samples.iter().enumerate() {
        if !sample.is_labeled() {
            return Err(Error::UnlabeledSample { index });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..l {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut keep = vec![false; n];
    for &i in &indices[..l] {
        keep[i] = true;
    }

    let mut masked = Vec::with_capacity(n);
    let mut sealed = Vec::with_capacity(n);
    for (i, sample) in ds.samples.iter().enumerate() {
        if keep[i] {
            masked.push(sample.clone());
            sealed.push(sample.clone());
        }
    }
    for (i, sample) in ds.samples.iter().enumerate() {
        if !keep[i] {
            masked.push(Sample::new(sample.x.clone(), None));
            sealed.push(sample.clone());
        }
    }
    Ok((
        Dataset::new(masked, ds.d, ds.k, ds.domain)?,
        Dataset::new(sealed, ds.d, ds.k, ds.domain)?,
    ))
}
