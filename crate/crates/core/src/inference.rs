//! Exact decoding over label sequences.
//!
//! [`decode`] runs first-order Viterbi in `O(T * K^2)`;
//! [`loss_augmented_decode`] runs the same recursion with per-position
//! emission potentials raised by `1/T` at every label disagreeing with the
//! reference, so the returned sequence maximizes loss plus model score.
//! [`brute_force_argmax`] enumerates the whole label space and is the
//! oracle the dynamic programs are tested against.
//!
//! Ties are broken deterministically: at the final position and at every
//! backtracking step the smaller label wins, which selects, among all
//! maximizers, the sequence whose labels are smallest when compared from
//! the last position backwards.

use serde::{Deserialize, Serialize};

use crate::chain_model::{ChainFeatureMap, TransferScorer};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest label-space size `K^T` the exhaustive oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Sequence loss. Normalized Hamming is the only kind: per-position
/// disagreement rate, so every loss lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossFn {
    #[default]
    NormalizedHamming,
}

impl LossFn {
    pub fn eval<F: Real>(&self, y: &[usize], ybar: &[usize]) -> Result<F> {
        match self {
            LossFn::NormalizedHamming => hamming_loss(y, ybar),
        }
    }
}

/// Fraction of positions where the two sequences disagree.
pub fn hamming_loss<F: Real>(y: &[usize], ybar: &[usize]) -> Result<F> {
    if y.is_empty() {
        return Err(Error::EmptySequence);
    }
    if y.len() != ybar.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: ybar.len(),
        });
    }
    let mismatches = y.iter().zip(ybar).filter(|(a, b)| a != b).count();
    Ok(F::from_usize(mismatches).unwrap() / F::from_usize(y.len()).unwrap())
}

/// Highest-scoring label sequence under a linear chain scorer with the
/// given weight vector (`theta` for source decoding, `theta + w` for
/// transfer decoding).
pub fn decode<F: Real>(map: &ChainFeatureMap, weights: &[F], x: &[Vec<F>]) -> Result<Vec<usize>> {
    let (labels, _) = viterbi(map, weights, x, None)?;
    Ok(labels)
}

/// Most violating competitor for a labeled target instance: the sequence
/// maximizing `hamming_loss(y_true, y) + transfer_score(x, y)`, together
/// with that maximum. A violated margin constraint exists iff the returned
/// value exceeds the scorer's value on `y_true` plus the current slack.
pub fn loss_augmented_decode<F: Real>(
    ts: &TransferScorer<F>,
    x: &[Vec<F>],
    y_true: &[usize],
) -> Result<(Vec<usize>, F)> {
    let map = ts.map();
    map.check_instance(x, Some(y_true))?;
    let weights = ts.combined_weights();
    viterbi(map, &weights, x, Some(y_true))
}

/// Shared Viterbi recursion. With `augment = Some(y_true)` each emission
/// potential at position `t` gains `1/T` for labels differing from
/// `y_true[t]`: the per-position decomposition of normalized Hamming loss.
fn viterbi<F: Real>(
    map: &ChainFeatureMap,
    weights: &[F],
    x: &[Vec<F>],
    augment: Option<&[usize]>,
) -> Result<(Vec<usize>, F)> {
    map.check_instance(x, augment)?;
    if weights.len() != map.m() {
        return Err(Error::Dimension(format!(
            "weight vector has {} entries, feature map needs {}",
            weights.len(),
            map.m()
        )));
    }
    let t_len = x.len();
    let k = map.k();
    let per_position = F::one() / F::from_usize(t_len).unwrap();

    // emission potentials, loss-augmented when requested
    let mut emit = vec![vec![F::zero(); k]; t_len];
    for (t, xt) in x.iter().enumerate() {
        for label in 0..k {
            let base = map.emission_index(label, 0);
            let mut s = F::zero();
            for (j, &v) in xt.iter().enumerate() {
                s += weights[base + j] * v;
            }
            if let Some(y_true) = augment {
                if label != y_true[t] {
                    s += per_position;
                }
            }
            emit[t][label] = s;
        }
    }

    let mut delta = vec![vec![F::zero(); k]; t_len];
    let mut back = vec![vec![0usize; k]; t_len];
    delta[0].copy_from_slice(&emit[0]);
    for t in 1..t_len {
        for next in 0..k {
            let mut best_prev = 0usize;
            let mut best = delta[t - 1][0] + weights[map.transition_index(0, next)];
            for prev in 1..k {
                let cand = delta[t - 1][prev] + weights[map.transition_index(prev, next)];
                if cand > best {
                    best = cand;
                    best_prev = prev;
                }
            }
            delta[t][next] = best + emit[t][next];
            back[t][next] = best_prev;
        }
    }

    let mut last = 0usize;
    let mut value = delta[t_len - 1][0];
    for label in 1..k {
        if delta[t_len - 1][label] > value {
            value = delta[t_len - 1][label];
            last = label;
        }
    }
    let mut labels = vec![0usize; t_len];
    labels[t_len - 1] = last;
    for t in (0..t_len - 1).rev() {
        labels[t] = back[t + 1][labels[t + 1]];
    }
    Ok((labels, value))
}

/// Exhaustive search over all `K^T` label sequences; the verification
/// oracle for [`decode`] and [`loss_augmented_decode`].
///
/// Returns the maximizer of the chain score, plus normalized Hamming loss
/// against `y_true` when supplied, with the same tie-break as the dynamic
/// programs. Rejects label spaces larger than [`BRUTE_FORCE_LIMIT`].
pub fn brute_force_argmax<F: Real>(
    map: &ChainFeatureMap,
    weights: &[F],
    x: &[Vec<F>],
    y_true: Option<&[usize]>,
) -> Result<(Vec<usize>, F)> {
    map.check_instance(x, y_true)?;
    if weights.len() != map.m() {
        return Err(Error::Dimension(format!(
            "weight vector has {} entries, feature map needs {}",
            weights.len(),
            map.m()
        )));
    }
    let t_len = x.len();
    let k = map.k();
    let size = (k as u128).checked_pow(t_len as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let per_position = F::one() / F::from_usize(t_len).unwrap();

    // value of one sequence, accumulated in the same per-position order as
    // the Viterbi recursion so ties are bitwise identical
    let value_of = |labels: &[usize]| -> F {
        let mut s = F::zero();
        for (t, &label) in labels.iter().enumerate() {
            if t > 0 {
                s += weights[map.transition_index(labels[t - 1], label)];
            }
            let base = map.emission_index(label, 0);
            let mut e = F::zero();
            for (j, &v) in x[t].iter().enumerate() {
                e += weights[base + j] * v;
            }
            if let Some(y_true) = y_true {
                if label != y_true[t] {
                    e += per_position;
                }
            }
            s += e;
        }
        s
    };

    // prefers the candidate whose labels are smaller scanning from the end
    let later_positions_smaller = |cand: &[usize], best: &[usize]| -> bool {
        for t in (0..cand.len()).rev() {
            if cand[t] != best[t] {
                return cand[t] < best[t];
            }
        }
        false
    };

    let mut current = vec![0usize; t_len];
    let mut best_labels = current.clone();
    let mut best_value = value_of(&current);
    while next_sequence(&mut current, k) {
        let v = value_of(&current);
        if v > best_value || (v == best_value && later_positions_smaller(&current, &best_labels)) {
            best_value = v;
            best_labels = current.clone();
        }
    }
    Ok((best_labels, best_value))
}

/// Odometer step through label sequences; returns false after the last one.
fn next_sequence(labels: &mut [usize], k: usize) -> bool {
    for slot in labels.iter_mut().rev() {
        *slot += 1;
        if *slot < k {
            return true;
        }
        *slot = 0;
    }
    false
}
