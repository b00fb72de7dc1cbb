//! Cutting-plane training of the delta weights, and source training as its
//! zero-base special case.
//!
//! [`adapt`] repeats: run the loss-augmented decoder over the labeled
//! target samples to assemble the single most violating joint constraint;
//! stop when its violation exceeds the current slack by at most `eps_cp`;
//! otherwise add it to the working set, re-solve the dual over the set,
//! recover the weights, and tighten the slack. The working set grows by
//! exactly one constraint per iteration, so the dual objective trace is
//! non-decreasing.
//!
//! [`train_source`] runs the same loop with an all-zero frozen base over a
//! fully labeled dataset; the learned delta is then the model itself.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain_model::{Dataset, LinearScorer, Sample, TransferScorer};
use crate::error::{Error, Result};
use crate::inference::{hamming_loss, loss_augmented_decode};
use crate::qp::{
    dual_objective, primal_slack, recover_w, solve_dual_warm, ConstraintRecord, WorkingSet,
    DUAL_LINEAR_TERM_FORM,
};
use crate::scalar::{norm_sq, Real};

/// Knobs of the cutting-plane trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<F> {
    /// Regularization constant of the slack term.
    pub c: F,
    /// Cutting-plane termination threshold, on the normalized-loss scale.
    pub eps_cp: F,
    /// Inner dual solver tolerance (relative KKT residual).
    pub eps_qp: F,
    /// Cap on cutting-plane iterations.
    pub max_cp_iters: usize,
}

impl<F: Real> Default for TrainConfig<F> {
    fn default() -> Self {
        TrainConfig {
            c: F::cast(100.0),
            eps_cp: F::cast(1e-3),
            eps_qp: F::cast(1e-8),
            max_cp_iters: 1000,
        }
    }
}

impl<F: Real> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero()) {
            return Err(Error::InvalidParam("C must be positive".into()));
        }
        if !(self.eps_cp > F::zero()) {
            return Err(Error::InvalidParam("eps_cp must be positive".into()));
        }
        if !(self.eps_qp > F::zero()) {
            return Err(Error::InvalidParam("eps_qp must be positive".into()));
        }
        if !(self.eps_cp > self.eps_qp) {
            return Err(Error::InvalidParam("eps_cp must exceed eps_qp".into()));
        }
        if self.max_cp_iters == 0 {
            return Err(Error::InvalidParam("max_cp_iters must be positive".into()));
        }
        Ok(())
    }
}

/// How a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
}

/// Trace of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport<F> {
    /// Separation passes performed.
    pub iterations: usize,
    /// Dual objective after each solve; non-decreasing.
    pub dual_objective_trace: Vec<F>,
    /// Regularized primal objective after each solve, for gap audits.
    pub primal_objective_trace: Vec<F>,
    pub final_primal_objective: F,
    pub final_xi: F,
    pub terminated_by: Termination,
    pub working_set_size: usize,
    /// Convention used for the dual's linear coefficients.
    pub dual_linear_term: String,
}

impl<F: Real> TrainReport<F> {
    /// Checks the dual trace is non-decreasing within `1e-9` per step.
    pub fn validate(&self) -> Result<()> {
        let slack = F::cast(1e-9);
        for pair in self.dual_objective_trace.windows(2) {
            if pair[1] < pair[0] - slack {
                return Err(Error::InvalidParam(format!(
                    "dual objective decreased: {} -> {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }
}

/// Regularized objective `||w||^2 / 2 + C * xi`.
pub fn objective<F: Real>(w: &[F], xi: F, c: F) -> Result<F> {
    if !(xi >= F::zero()) {
        return Err(Error::InvalidParam(format!("xi = {xi} negative")));
    }
    Ok(F::cast(0.5) * norm_sq(w) + c * xi)
}

/// Builds the averaged constraint record for one joint labeling of the
/// labeled samples: feature difference, loss, and frozen-source margin,
/// each averaged over the samples.
pub fn build_constraint<F: Real>(
    labeled: &[&Sample<F>],
    source: &LinearScorer<F>,
    ybar: &[Vec<usize>],
) -> Result<ConstraintRecord<F>> {
    let l = labeled.len();
    if l == 0 {
        return Err(Error::NoLabeledSamples);
    }
    if ybar.len() != l {
        return Err(Error::LengthMismatch {
            left: ybar.len(),
            right: l,
        });
    }
    let map = &source.map;
    let l_f = F::from_usize(l).unwrap();
    let mut dpsi = vec![F::zero(); map.m()];
    let mut loss_acc = F::zero();
    let mut margin_acc = F::zero();
    for (i, sample) in labeled.iter().enumerate() {
        let y = sample
            .y
            .as_deref()
            .ok_or(Error::UnlabeledSample { index: i })?;
        let phi_true = map.joint_features(&sample.x, y)?;
        let phi_bar = map.joint_features(&sample.x, &ybar[i])?;
        for (acc, (t, b)) in dpsi.iter_mut().zip(phi_true.iter().zip(&phi_bar)) {
            *acc += *t - *b;
        }
        loss_acc += hamming_loss(y, &ybar[i])?;
        margin_acc += source.score(&sample.x, y)? - source.score(&sample.x, &ybar[i])?;
    }
    for v in dpsi.iter_mut() {
        *v /= l_f;
    }
    ConstraintRecord::new(ybar.to_vec(), dpsi, loss_acc / l_f, margin_acc / l_f)
}

/// Learns delta weights for the target domain on top of a frozen source
/// scorer. Only the labeled target samples participate; the source weights
/// are never modified.
pub fn adapt<F: Real>(
    source: &LinearScorer<F>,
    target: &Dataset<F>,
    cfg: &TrainConfig<F>,
) -> Result<(TransferScorer<F>, TrainReport<F>)> {
    cfg.validate()?;
    target.validate()?;
    let map = source.map;
    if target.d != map.d() || target.k != map.k() {
        return Err(Error::Dimension(format!(
            "dataset is d={}, K={} but the scorer expects d={}, K={}",
            target.d,
            target.k,
            map.d(),
            map.k()
        )));
    }
    let labeled: Vec<&Sample<F>> = target.labeled().collect();
    if labeled.is_empty() {
        return Err(Error::NoLabeledSamples);
    }

    let mut w = vec![F::zero(); map.m()];
    let mut ws = WorkingSet::new();
    let mut alpha: Vec<F> = Vec::new();
    let mut xi = F::zero();
    let mut dual_trace = Vec::new();
    let mut primal_trace = Vec::new();
    let mut terminated = Termination::IterationCap;
    let mut iterations = 0usize;

    while iterations < cfg.max_cp_iters {
        iterations += 1;
        let ts = TransferScorer::new(source.clone(), w.clone())?;
        let ybar = labeled
            .par_iter()
            .map(|sample| {
                let y = sample.y.as_deref().expect("labeled sample");
                loss_augmented_decode(&ts, &sample.x, y).map(|(seq, _)| seq)
            })
            .collect::<Result<Vec<_>>>()?;
        let record = build_constraint(&labeled, source, &ybar)?;
        let violation = record.violation(&w) - xi;
        if violation <= cfg.eps_cp {
            terminated = Termination::Converged;
            break;
        }
        ws.push(record)?;
        let h = ws.gram_matrix();
        let b = ws.linear_terms();
        alpha.push(F::zero());
        alpha = solve_dual_warm(&h, &b, cfg.c, cfg.eps_qp, &alpha)?;
        w = recover_w(&ws, &alpha)?;
        xi = primal_slack(&ws, &w)?;
        let dual = dual_objective(&h, &b, &alpha);
        let primal = objective(&w, xi, cfg.c)?;
        dual_trace.push(dual);
        primal_trace.push(primal);
        log::debug!(
            "cutting plane iter {iterations}: |W|={}, violation={violation}, dual={dual}, primal={primal}",
            ws.len()
        );
    }

    let final_primal_objective = objective(&w, xi, cfg.c)?;
    let report = TrainReport {
        iterations,
        dual_objective_trace: dual_trace,
        primal_objective_trace: primal_trace,
        final_primal_objective,
        final_xi: xi,
        terminated_by: terminated,
        working_set_size: ws.len(),
        dual_linear_term: DUAL_LINEAR_TERM_FORM.to_string(),
    };
    Ok((TransferScorer::new(source.clone(), w)?, report))
}

/// Trains a source-domain scorer: the cutting-plane loop over a fully
/// labeled dataset with an all-zero frozen base, whose learned delta
/// becomes the model weights.
pub fn train_source<F: Real>(
    source_data: &Dataset<F>,
    cfg: &TrainConfig<F>,
) -> Result<(LinearScorer<F>, TrainReport<F>)> {
    source_data.validate()?;
    for (index, sample) in source_data.samples.iter().enumerate() {
        if !sample.is_labeled() {
            return Err(Error::UnlabeledSample { index });
        }
    }
    let map = source_data.feature_map();
    let base = LinearScorer::zeros(map);
    let (ts, report) = adapt(&base, source_data, cfg)?;
    Ok((LinearScorer::new(ts.w, map)?, report))
}
