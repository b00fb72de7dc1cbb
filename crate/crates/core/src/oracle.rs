//! Brute-force verification oracles.
//!
//! Everything here trades speed for transparency: exhaustive enumeration
//! and direct evaluation of definitions, kept separate from the production
//! code paths so the two can certify each other in tests.

use crate::chain_model::{LinearScorer, Sample};
use crate::error::{Error, Result};
use crate::qp::ConstraintRecord;
use crate::scalar::Real;

/// Solves `a x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot is too small relative to the matrix scale.
fn solve_linear<F: Real>(mut a: Vec<Vec<F>>, mut rhs: Vec<F>) -> Option<Vec<F>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(F::one(), |acc, v| acc.max(v.abs()));
    let pivot_tol = F::cast(1e-12) * scale;
    for col in 0..n {
        let mut pivot_row = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot_row][col].abs() {
                pivot_row = row;
            }
        }
        if a[pivot_row][col].abs() <= pivot_tol {
            return None;
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != F::zero() {
                for k in col..n {
                    let v = a[col][k];
                    a[row][k] -= factor * v;
                }
                let r = rhs[col];
                rhs[row] -= factor * r;
            }
        }
    }
    let mut x = vec![F::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Dual objective `b'a - a'Ha/2`, evaluated directly.
pub fn dual_value<F: Real>(h: &[Vec<F>], b: &[F], alpha: &[F]) -> F {
    let n = b.len();
    let mut linear = F::zero();
    let mut quad = F::zero();
    for i in 0..n {
        linear += b[i] * alpha[i];
        for j in 0..n {
            quad += alpha[i] * h[i][j] * alpha[j];
        }
    }
    linear - F::cast(0.5) * quad
}

/// Exact maximizer of `b'a - a'Ha/2` over `a >= 0, sum(a) <= C`, found by
/// enumerating every candidate active set: for each subset solve the
/// stationarity system with the budget slack either free or exhausted,
/// keep the best feasible candidate. Exponential in `len(b)`.
pub fn active_set_qp<F: Real>(h: &[Vec<F>], b: &[F], c: F) -> (Vec<F>, F) {
    let n = b.len();
    let feas_tol = F::cast(1e-9) * F::one().max(c);
    let mut best_alpha = vec![F::zero(); n];
    let mut best_value = F::zero();

    let mut consider = |alpha: Vec<F>| {
        let mut clamped = alpha;
        for v in clamped.iter_mut() {
            if *v < F::zero() {
                if *v < -feas_tol {
                    return;
                }
                *v = F::zero();
            }
        }
        let sum: F = clamped.iter().copied().sum();
        if sum > c + feas_tol {
            return;
        }
        if sum > c {
            let scale = c / sum;
            for v in clamped.iter_mut() {
                *v *= scale;
            }
        }
        let value = dual_value(h, b, &clamped);
        if value > best_value {
            best_value = value;
            best_alpha = clamped;
        }
    };

    for mask in 1u64..(1u64 << n) {
        let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s = support.len();
        let h_ss: Vec<Vec<F>> = support
            .iter()
            .map(|&i| support.iter().map(|&j| h[i][j]).collect())
            .collect();
        let b_s: Vec<F> = support.iter().map(|&i| b[i]).collect();

        // budget slack free: H_SS a = b_S
        if let Some(a_s) = solve_linear(h_ss.clone(), b_s.clone()) {
            let mut alpha = vec![F::zero(); n];
            for (slot, &i) in support.iter().enumerate() {
                alpha[i] = a_s[slot];
            }
            consider(alpha);
        }

        // budget exhausted: [H_SS 1; 1' 0] [a; mu] = [b_S; C]
        let mut bordered = vec![vec![F::zero(); s + 1]; s + 1];
        for i in 0..s {
            bordered[i][..s].copy_from_slice(&h_ss[i]);
            bordered[i][s] = F::one();
            bordered[s][i] = F::one();
        }
        let mut rhs = b_s;
        rhs.push(c);
        if let Some(solution) = solve_linear(bordered, rhs) {
            let mut alpha = vec![F::zero(); n];
            for (slot, &i) in support.iter().enumerate() {
                alpha[i] = solution[slot];
            }
            consider(alpha);
        }
    }
    (best_alpha, best_value)
}

/// All label sequences of length `t` over `k` labels, in odometer order.
pub fn enumerate_sequences(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; t];
    loop {
        out.push(current.clone());
        let mut carried = false;
        for slot in current.iter_mut().rev() {
            *slot += 1;
            if *slot < k {
                carried = true;
                break;
            }
            *slot = 0;
        }
        if !carried {
            return out;
        }
    }
}

/// Every joint constraint of the averaged training problem: the cartesian
/// product of per-sample label spaces, each turned into a record by a
/// direct evaluation of the definitions. Sizes explode quickly; keep the
/// instances tiny.
pub fn all_joint_constraints<F: Real>(
    labeled: &[&Sample<F>],
    source: &LinearScorer<F>,
) -> Result<Vec<ConstraintRecord<F>>> {
    let l = labeled.len();
    if l == 0 {
        return Err(Error::NoLabeledSamples);
    }
    let map = &source.map;
    let spaces: Vec<Vec<Vec<usize>>> = labeled
        .iter()
        .map(|s| enumerate_sequences(map.k(), s.len()))
        .collect();
    let total: u128 = spaces.iter().map(|s| s.len() as u128).product();
    if total > 1_000_000 {
        return Err(Error::SearchSpaceTooLarge {
            size: total,
            limit: 1_000_000,
        });
    }

    let l_f = F::from_usize(l).unwrap();
    let mut records = Vec::with_capacity(total as usize);
    let mut picks = vec![0usize; l];
    loop {
        let ybar: Vec<Vec<usize>> = picks
            .iter()
            .enumerate()
            .map(|(i, &p)| spaces[i][p].clone())
            .collect();

        let mut dpsi = vec![F::zero(); map.m()];
        let mut loss = F::zero();
        let mut margin = F::zero();
        for (i, sample) in labeled.iter().enumerate() {
            let y = sample
                .y
                .as_deref()
                .ok_or(Error::UnlabeledSample { index: i })?;
            let phi_true = map.joint_features(&sample.x, y)?;
            let phi_bar = map.joint_features(&sample.x, &ybar[i])?;
            for j in 0..map.m() {
                dpsi[j] += phi_true[j] - phi_bar[j];
            }
            let mismatches = y.iter().zip(&ybar[i]).filter(|(a, b)| a != b).count();
            loss += F::from_usize(mismatches).unwrap() / F::from_usize(y.len()).unwrap();
            let mut true_score = F::zero();
            let mut bar_score = F::zero();
            for j in 0..map.m() {
                true_score += source.theta[j] * phi_true[j];
                bar_score += source.theta[j] * phi_bar[j];
            }
            margin += true_score - bar_score;
        }
        for v in dpsi.iter_mut() {
            *v /= l_f;
        }
        records.push(ConstraintRecord::new(ybar, dpsi, loss / l_f, margin / l_f)?);

        let mut carried = false;
        for (slot, space) in picks.iter_mut().zip(&spaces).rev() {
            *slot += 1;
            if *slot < space.len() {
                carried = true;
                break;
            }
            *slot = 0;
        }
        if !carried {
            return Ok(records);
        }
    }
}

/// Regularized objective of `w` against an explicit constraint set:
/// `||w||^2/2 + C * max(0, max_k violation_k)`.
pub fn full_primal_objective<F: Real>(records: &[ConstraintRecord<F>], w: &[F], c: F) -> F {
    let mut worst = F::zero();
    for record in records {
        let mut dot_wd = F::zero();
        for (a, b) in w.iter().zip(&record.dpsi) {
            dot_wd += *a * *b;
        }
        worst = worst.max(record.delta_loss - record.source_margin - dot_wd);
    }
    let mut norm = F::zero();
    for v in w {
        norm += *v * *v;
    }
    F::cast(0.5) * norm + c * worst
}

/// Brackets the optimum of the training objective over an explicit
/// constraint set between a weak-duality lower bound and a feasible-point
/// upper bound, both evaluated by this module. The dual point comes from
/// the production solver, but the bracket is valid for any feasible
/// multipliers; `gap_tol` bounds how far apart the two sides may be.
pub fn certified_full_optimum<F: Real>(
    records: &[ConstraintRecord<F>],
    c: F,
    gap_tol: F,
) -> Result<(F, F)> {
    let n = records.len();
    let m = records.first().map_or(0, |r| r.dpsi.len());
    let mut h = vec![vec![F::zero(); n]; n];
    let mut b = vec![F::zero(); n];
    for i in 0..n {
        b[i] = records[i].delta_loss - records[i].source_margin;
        for j in i..n {
            let mut v = F::zero();
            for t in 0..m {
                v += records[i].dpsi[t] * records[j].dpsi[t];
            }
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    let alpha = crate::qp::solve_dual(&h, &b, c, F::cast(1e-10))?;

    // independent feasibility check
    let feas_tol = F::cast(1e-9) * F::one().max(c);
    let mut sum = F::zero();
    for (k, &a) in alpha.iter().enumerate() {
        if a < F::zero() {
            return Err(Error::InfeasibleAlpha(format!("alpha[{k}] negative")));
        }
        sum += a;
    }
    if sum > c + feas_tol {
        return Err(Error::InfeasibleAlpha("budget exceeded".into()));
    }

    let mut w = vec![F::zero(); m];
    for (record, &a) in records.iter().zip(&alpha) {
        for (slot, &d) in w.iter_mut().zip(&record.dpsi) {
            *slot += a * d;
        }
    }
    let lower = dual_value(&h, &b, &alpha);
    let upper = full_primal_objective(records, &w, c);
    if upper - lower > gap_tol {
        return Err(Error::InvalidParam(format!(
            "certificate gap {} exceeds {gap_tol}",
            upper - lower
        )));
    }
    Ok((lower, upper))
}
