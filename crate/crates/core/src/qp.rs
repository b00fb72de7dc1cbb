//! Working-set dual QP: records, solver, and optimality certificates.
//!
//! Each working-set record caches, for one joint labeling of the labeled
//! target samples, the averaged feature difference `dpsi`, the averaged
//! loss `delta_loss`, and the averaged frozen-source margin
//! `source_margin`. With `H[k][k'] = dpsi_k . dpsi_k'` and
//! `b[k] = delta_loss_k - source_margin_k`, the relaxed training problem's
//! dual is
//!
//! ```text
//!     maximize    b'a - a'Ha / 2
//!     subject to  a >= 0,  sum(a) <= C
//! ```
//!
//! [`solve_dual`] handles it with pairwise coordinate ascent: a virtual
//! coordinate absorbs the unused budget `C - sum(a)`, turning the cap into
//! an equality, and every step moves mass between the most violating KKT
//! pair with an exact one-dimensional line search. The iterate stays
//! feasible at every step and the returned multipliers satisfy
//! [`kkt_residual`]` <= eps_qp`.
//!
//! The linear term uses the loss-minus-margin difference per record
//! (see [`DUAL_LINEAR_TERM_FORM`]); training reports carry that string so
//! runs record which convention produced them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// The convention used for the dual's linear coefficients.
pub const DUAL_LINEAR_TERM_FORM: &str = "b[k] = delta_loss[k] - source_margin[k]";

/// Hard cap on pair updates before the solver reports failure.
pub const MAX_PAIR_UPDATES: usize = 1_000_000;

/// One margin constraint over the labeled target samples: a joint labeling
/// (one competitor sequence per sample) with its cached averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord<F> {
    /// Competitor labeling per labeled sample.
    pub ybar: Vec<Vec<usize>>,
    /// Averaged feature difference between true and competitor labelings.
    pub dpsi: Vec<F>,
    /// Averaged normalized Hamming loss of the competitors; in `[0, 1]`.
    pub delta_loss: F,
    /// Averaged frozen-source score margin over the competitors.
    pub source_margin: F,
}

impl<F: Real> ConstraintRecord<F> {
    pub fn new(
        ybar: Vec<Vec<usize>>,
        dpsi: Vec<F>,
        delta_loss: F,
        source_margin: F,
    ) -> Result<Self> {
        if !(delta_loss >= F::zero() && delta_loss <= F::one()) {
            return Err(Error::InvalidParam(format!(
                "delta_loss {delta_loss} outside [0, 1]"
            )));
        }
        if !source_margin.is_finite() || dpsi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParam(
                "non-finite constraint aggregate".into(),
            ));
        }
        Ok(ConstraintRecord {
            ybar,
            dpsi,
            delta_loss,
            source_margin,
        })
    }

    /// Linear coefficient of this record in the dual.
    pub fn linear_term(&self) -> F {
        self.delta_loss - self.source_margin
    }

    /// Constraint violation `delta_loss - source_margin - w.dpsi` at `w`.
    pub fn violation(&self, w: &[F]) -> F {
        self.linear_term() - dot(w, &self.dpsi)
    }
}

/// Ordered set of constraint records; joint labelings are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkingSet<F> {
    records: Vec<ConstraintRecord<F>>,
}

impl<F: Real> WorkingSet<F> {
    pub fn new() -> Self {
        WorkingSet {
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ConstraintRecord<F>] {
        &self.records
    }

    pub fn contains_labeling(&self, ybar: &[Vec<usize>]) -> bool {
        self.records.iter().any(|r| r.ybar == ybar)
    }

    /// Appends a record; a repeated joint labeling is rejected.
    pub fn push(&mut self, record: ConstraintRecord<F>) -> Result<()> {
        if self.contains_labeling(&record.ybar) {
            return Err(Error::DuplicateConstraint);
        }
        if let Some(first) = self.records.first() {
            if first.dpsi.len() != record.dpsi.len() {
                return Err(Error::Dimension(format!(
                    "record dpsi has {} entries, working set uses {}",
                    record.dpsi.len(),
                    first.dpsi.len()
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Gram matrix `H[i][j] = dpsi_i . dpsi_j`, exactly symmetric.
    pub fn gram_matrix(&self) -> Vec<Vec<F>> {
        let n = self.records.len();
        let mut h = vec![vec![F::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&self.records[i].dpsi, &self.records[j].dpsi);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        h
    }

    /// Dual linear coefficients, one per record.
    pub fn linear_terms(&self) -> Vec<F> {
        self.records.iter().map(|r| r.linear_term()).collect()
    }
}

/// Dual multipliers with their budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualState<F> {
    pub alpha: Vec<F>,
    pub c: F,
}

impl<F: Real> DualState<F> {
    /// Feasibility: every multiplier nonnegative, total at most `C + 1e-9`.
    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero()) {
            return Err(Error::InvalidParam("C must be positive".into()));
        }
        for (k, &a) in self.alpha.iter().enumerate() {
            if !(a >= F::zero()) {
                return Err(Error::InfeasibleAlpha(format!("alpha[{k}] = {a} < 0")));
            }
        }
        let sum: F = self.alpha.iter().copied().sum();
        if sum > self.c + F::cast(1e-9) {
            return Err(Error::InfeasibleAlpha(format!(
                "sum(alpha) = {sum} exceeds C = {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Recovered primal point for a working set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalSolution<F> {
    pub w: Vec<F>,
    pub xi: F,
}

impl<F: Real> PrimalSolution<F> {
    /// `xi >= 0` and every working-set constraint satisfied within `1e-8`.
    pub fn validate(&self, ws: &WorkingSet<F>) -> Result<()> {
        if !(self.xi >= F::zero()) {
            return Err(Error::InvalidParam(format!("xi = {} negative", self.xi)));
        }
        let tol = F::cast(1e-8);
        for (k, record) in ws.records().iter().enumerate() {
            if record.violation(&self.w) > self.xi + tol {
                return Err(Error::InvalidParam(format!(
                    "working-set record {k} violated beyond xi"
                )));
            }
        }
        Ok(())
    }
}

/// Snapshot after one pair update, for monotonicity and feasibility audits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStep<F> {
    pub objective: F,
    pub min_alpha: F,
    pub alpha_sum: F,
}

/// Dual objective `b'a - a'Ha / 2`.
pub fn dual_objective<F: Real>(h: &[Vec<F>], b: &[F], alpha: &[F]) -> F {
    let mut quad = F::zero();
    for (k, row) in h.iter().enumerate() {
        quad += alpha[k] * dot(row, alpha);
    }
    dot(b, alpha) - F::cast(0.5) * quad
}

fn validate_problem<F: Real>(h: &[Vec<F>], b: &[F], c: F, eps_qp: F) -> Result<()> {
    let n = h.len();
    if b.len() != n {
        return Err(Error::Dimension(format!(
            "linear term has {} entries, matrix is {n}x{n}",
            b.len()
        )));
    }
    if !(c > F::zero()) {
        return Err(Error::InvalidParam("C must be positive".into()));
    }
    if !(eps_qp > F::zero()) {
        return Err(Error::InvalidParam("eps_qp must be positive".into()));
    }
    for (i, row) in h.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, matrix is {n}x{n}",
                row.len()
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParam(format!("H[{i}][{j}] not finite")));
            }
            let diff = (v - h[j][i]).abs();
            let scale = F::one().max(v.abs());
            if diff > F::cast(1e-12) * scale {
                return Err(Error::InvalidParam(format!(
                    "H not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("linear term not finite".into()));
    }
    Ok(())
}

struct ResidualParts<F> {
    residual: F,
    gradient: Vec<F>,
    slack: F,
}

/// Gradient, remaining budget, and the normalized KKT residual at `alpha`.
fn residual_parts<F: Real>(h: &[Vec<F>], b: &[F], c: F, alpha: &[F]) -> ResidualParts<F> {
    let n = b.len();
    let mut gradient = Vec::with_capacity(n);
    for (k, row) in h.iter().enumerate() {
        gradient.push(b[k] - dot(row, alpha));
    }
    let sum: F = alpha.iter().copied().sum();
    let slack = (c - sum).max(F::zero());
    let tight = c - sum <= F::cast(1e-9) * F::one().max(c);
    let mu = if tight {
        gradient
            .iter()
            .copied()
            .fold(F::zero(), |acc, g| acc.max(g))
    } else {
        F::zero()
    };
    let mut stationarity = F::zero();
    let mut complementarity = F::zero();
    for k in 0..n {
        stationarity = stationarity.max(gradient[k] - mu);
        complementarity = complementarity.max(alpha[k] * (gradient[k] - mu).abs());
    }
    let scale = b.iter().fold(F::one(), |acc, v| acc.max(v.abs()));
    ResidualParts {
        residual: stationarity.max(complementarity) / scale,
        gradient,
        slack,
    }
}

/// Gaussian elimination with partial pivoting; `None` when a pivot falls
/// below `1e-12` times the matrix scale.
fn solve_linear<F: Real>(mut a: Vec<Vec<F>>, mut rhs: Vec<F>) -> Option<Vec<F>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(F::one(), |acc, v| acc.max(v.abs()));
    let pivot_tol = F::cast(1e-12) * scale;
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() <= pivot_tol {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
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

/// Stationary point of the dual restricted to the current support: with
/// the budget exhausted, solve `[H_SS 1; 1' 0] [a; mu] = [b_S; C]`, else
/// `H_SS a = b_S`. The result is the maximum over that affine set, so
/// jumping to it never lowers the objective; pairwise ascent alone can
/// zigzag for millions of updates when many active gradients must
/// equalize, and this step closes them out in one solve.
///
/// Near-duplicate records make `H_SS` singular; the fallback then takes a
/// proximal step instead, ridging the system toward the current iterate
/// (`H_SS + lambda I`, right-hand side `b_S + lambda a`). That solution
/// maximizes the objective minus `lambda/2 ||a' - a||^2`, so it still
/// never lowers the objective, and repeating it converges to the support
/// optimum.
fn polish_candidate<F: Real>(
    h: &[Vec<F>],
    b: &[F],
    c: F,
    alpha: &[F],
    tight: bool,
) -> Option<Vec<F>> {
    let n = b.len();
    let support: Vec<usize> = (0..n).filter(|&k| alpha[k] > F::zero()).collect();
    if support.is_empty() {
        return None;
    }
    let s = support.len();
    let diag_scale = support
        .iter()
        .fold(F::one(), |acc, &i| acc.max(h[i][i].abs()));

    let solve_with = |lambda: F| -> Option<Vec<F>> {
        if tight {
            let mut bordered = vec![vec![F::zero(); s + 1]; s + 1];
            for (si, &i) in support.iter().enumerate() {
                for (sj, &j) in support.iter().enumerate() {
                    bordered[si][sj] = h[i][j];
                }
                bordered[si][si] += lambda;
                bordered[si][s] = F::one();
                bordered[s][si] = F::one();
            }
            let mut rhs: Vec<F> = support.iter().map(|&i| b[i] + lambda * alpha[i]).collect();
            rhs.push(c);
            let mut sol = solve_linear(bordered, rhs)?;
            sol.truncate(s);
            Some(sol)
        } else {
            let mut h_ss: Vec<Vec<F>> = support
                .iter()
                .map(|&i| support.iter().map(|&j| h[i][j]).collect())
                .collect();
            for (si, row) in h_ss.iter_mut().enumerate() {
                row[si] += lambda;
            }
            let b_s: Vec<F> = support.iter().map(|&i| b[i] + lambda * alpha[i]).collect();
            solve_linear(h_ss, b_s)
        }
    };

    let solution = [F::zero(), F::cast(1e-11), F::cast(1e-7)]
        .into_iter()
        .find_map(|ridge| solve_with(ridge * diag_scale))?;

    let mut candidate = vec![F::zero(); n];
    for (&i, &v) in support.iter().zip(&solution) {
        candidate[i] = v;
    }
    Some(candidate)
}

/// Longest step from `alpha` toward `candidate` that keeps every
/// multiplier nonnegative; the objective is concave and maximal at the
/// candidate, so any partial step still improves it. A coordinate whose
/// bound stops the step leaves the support for the next polish round.
fn step_toward<F: Real>(alpha: &[F], candidate: &[F], c: F) -> Option<Vec<F>> {
    let mut t = F::one();
    for (&a, &cand) in alpha.iter().zip(candidate) {
        if cand < F::zero() && a > F::zero() {
            t = t.min(a / (a - cand));
        }
    }
    if !(t > F::zero()) {
        return None;
    }
    // coordinates whose bound determined t land on exact zero
    let blocker_tol = t * (F::one() + F::cast(1e-12));
    let mut stepped: Vec<F> = alpha
        .iter()
        .zip(candidate)
        .map(|(&a, &cand)| {
            if cand < F::zero() && a > F::zero() && a / (a - cand) <= blocker_tol {
                F::zero()
            } else {
                (a + t * (cand - a)).max(F::zero())
            }
        })
        .collect();
    let sum: F = stepped.iter().copied().sum();
    let slack_tol = F::cast(1e-9) * F::one().max(c);
    if sum > c + slack_tol {
        return None;
    }
    if sum > c {
        let rescale = c / sum;
        for v in stepped.iter_mut() {
            *v *= rescale;
        }
    }
    if stepped == alpha {
        return None;
    }
    Some(stepped)
}

/// Normalized KKT residual of `alpha` for the capped-simplex dual; zero at
/// the exact optimum. Rejects infeasible multipliers.
pub fn kkt_residual<F: Real>(h: &[Vec<F>], b: &[F], c: F, alpha: &[F]) -> Result<F> {
    validate_problem(h, b, c, F::one())?;
    if alpha.len() != b.len() {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, expected {}",
            alpha.len(),
            b.len()
        )));
    }
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::InfeasibleAlpha("non-finite multiplier".into()));
    }
    DualState {
        alpha: alpha.to_vec(),
        c,
    }
    .validate()?;
    Ok(residual_parts(h, b, c, alpha).residual)
}

/// Maximizes `b'a - a'Ha/2` over `a >= 0, sum(a) <= C` from a cold start.
pub fn solve_dual<F: Real>(h: &[Vec<F>], b: &[F], c: F, eps_qp: F) -> Result<Vec<F>> {
    solve_dual_warm(h, b, c, eps_qp, &vec![F::zero(); b.len()])
}

/// As [`solve_dual`], starting from a feasible `alpha0` (a previous
/// solution padded with zeros, typically).
pub fn solve_dual_warm<F: Real>(
    h: &[Vec<F>],
    b: &[F],
    c: F,
    eps_qp: F,
    alpha0: &[F],
) -> Result<Vec<F>> {
    solve_dual_inner(h, b, c, eps_qp, alpha0, None)
}

/// As [`solve_dual_warm`], also recording one [`SolveStep`] per pair update.
pub fn solve_dual_traced<F: Real>(
    h: &[Vec<F>],
    b: &[F],
    c: F,
    eps_qp: F,
    alpha0: &[F],
) -> Result<(Vec<F>, Vec<SolveStep<F>>)> {
    let mut trace = Vec::new();
    let alpha = solve_dual_inner(h, b, c, eps_qp, alpha0, Some(&mut trace))?;
    Ok((alpha, trace))
}

fn solve_dual_inner<F: Real>(
    h: &[Vec<F>],
    b: &[F],
    c: F,
    eps_qp: F,
    alpha0: &[F],
    mut trace: Option<&mut Vec<SolveStep<F>>>,
) -> Result<Vec<F>> {
    validate_problem(h, b, c, eps_qp)?;
    let n = b.len();
    if alpha0.len() != n {
        return Err(Error::Dimension(format!(
            "warm start has {} entries, expected {n}",
            alpha0.len()
        )));
    }
    let mut alpha = alpha0.to_vec();
    DualState {
        alpha: alpha.clone(),
        c,
    }
    .validate()?;
    if n == 0 {
        return Ok(alpha);
    }

    let mut updates = 0usize;
    let polish_interval = 2 * (n + 1);
    loop {
        let parts = residual_parts(h, b, c, &alpha);
        if parts.residual <= eps_qp {
            break;
        }
        if updates >= MAX_PAIR_UPDATES {
            return Err(Error::QpIterationCap { updates });
        }

        // every couple of sweeps, try to close out the current support
        // with one equality-constrained solve (stepping only as far as the
        // nonnegativity bounds allow)
        if (updates + 1).is_multiple_of(polish_interval) {
            let sum: F = alpha.iter().copied().sum();
            let tight = c - sum <= F::cast(1e-9) * F::one().max(c);
            let stepped = polish_candidate(h, b, c, &alpha, tight)
                .and_then(|candidate| step_toward(&alpha, &candidate, c));
            if let Some(stepped) = stepped {
                let current = dual_objective(h, b, &alpha);
                let polished = dual_objective(h, b, &stepped);
                if polished >= current - F::cast(1e-12) * (F::one() + current.abs()) {
                    alpha = stepped;
                    updates += 1;
                    if let Some(trace) = trace.as_deref_mut() {
                        let min_alpha = alpha.iter().copied().fold(F::infinity(), F::min);
                        let alpha_sum = alpha.iter().copied().sum();
                        trace.push(SolveStep {
                            objective: polished,
                            min_alpha,
                            alpha_sum,
                        });
                    }
                    continue;
                }
            }
        }

        // virtual budget coordinate: gradient 0, value = unused budget
        let g = &parts.gradient;
        let mut up = n; // candidate to increase; start at the virtual slot
        let mut g_up = F::zero();
        for k in 0..n {
            if g[k] > g_up {
                g_up = g[k];
                up = k;
            }
        }
        let mut down = usize::MAX;
        let mut g_down = F::infinity();
        for k in 0..n {
            if alpha[k] > F::zero() && g[k] < g_down {
                g_down = g[k];
                down = k;
            }
        }
        if parts.slack > F::zero() && F::zero() < g_down {
            down = n;
            g_down = F::zero();
        }
        if down == usize::MAX || up == down {
            // no transferable mass left in a descent direction; the
            // residual test above should have caught this
            return Err(Error::InfeasibleAlpha(
                "solver stalled without a violating pair".into(),
            ));
        }

        let h_at = |i: usize, j: usize| -> F {
            if i == n || j == n {
                F::zero()
            } else {
                h[i][j]
            }
        };
        let quad = h_at(up, up) + h_at(down, down) - F::cast(2.0) * h_at(up, down);
        let avail = if down == n { parts.slack } else { alpha[down] };
        let step = if quad > F::zero() {
            ((g_up - g_down) / quad).min(avail)
        } else {
            avail
        };
        if up < n {
            alpha[up] += step;
        }
        if down < n {
            alpha[down] = if step == alpha[down] {
                F::zero()
            } else {
                alpha[down] - step
            };
        }
        updates += 1;
        if let Some(trace) = trace.as_deref_mut() {
            let min_alpha = alpha.iter().copied().fold(F::infinity(), F::min);
            let alpha_sum = alpha.iter().copied().sum();
            trace.push(SolveStep {
                objective: dual_objective(h, b, &alpha),
                min_alpha,
                alpha_sum,
            });
        }
    }

    // rounding in the pair transfers can leave the total a few ulps above
    // the budget; rescale so feasibility holds exactly
    let sum: F = alpha.iter().copied().sum();
    if sum > c {
        let scale = c / sum;
        for a in alpha.iter_mut() {
            *a *= scale;
        }
    }
    Ok(alpha)
}

/// Recovers the delta weights from dual multipliers:
/// `w = sum_k alpha_k * dpsi_k`.
pub fn recover_w<F: Real>(records: &WorkingSet<F>, alpha: &[F]) -> Result<Vec<F>> {
    if alpha.len() != records.len() {
        return Err(Error::LengthMismatch {
            left: alpha.len(),
            right: records.len(),
        });
    }
    let m = records.records().first().map_or(0, |r| r.dpsi.len());
    let mut w = vec![F::zero(); m];
    for (record, &a) in records.records().iter().zip(alpha) {
        for (wc, &dc) in w.iter_mut().zip(&record.dpsi) {
            *wc += a * dc;
        }
    }
    Ok(w)
}

/// Tightest feasible slack at `w` over the working set:
/// `max(0, max_k delta_loss_k - source_margin_k - w.dpsi_k)`.
pub fn primal_slack<F: Real>(records: &WorkingSet<F>, w: &[F]) -> Result<F> {
    let mut xi = F::zero();
    for record in records.records() {
        if record.dpsi.len() != w.len() {
            return Err(Error::Dimension(format!(
                "w has {} entries, record dpsi has {}",
                w.len(),
                record.dpsi.len()
            )));
        }
        xi = xi.max(record.violation(w));
    }
    Ok(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        dpsi: Vec<f64>,
        delta_loss: f64,
        source_margin: f64,
        tag: usize,
    ) -> ConstraintRecord<f64> {
        ConstraintRecord::new(vec![vec![tag]], dpsi, delta_loss, source_margin).unwrap()
    }

    #[test]
    fn single_record_interior_solution() {
        let h: Vec<Vec<f64>> = vec![vec![1.0]];
        let b = vec![0.5];
        let alpha = solve_dual(&h, &b, 1.0, 1e-10).unwrap();
        assert!((alpha[0] - 0.5).abs() < 1e-10);
        assert!((dual_objective(&h, &b, &alpha) - 0.125).abs() < 1e-10);
    }

    #[test]
    fn single_record_clamped_at_budget() {
        let h: Vec<Vec<f64>> = vec![vec![1.0]];
        let b = vec![3.0];
        let alpha = solve_dual(&h, &b, 1.0, 1e-10).unwrap();
        assert!((alpha[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_linear_term_keeps_alpha_zero() {
        let h: Vec<Vec<f64>> = vec![vec![2.0]];
        let b = vec![-0.5];
        let alpha = solve_dual(&h, &b, 1.0, 1e-10).unwrap();
        assert_eq!(alpha[0], 0.0);
    }

    #[test]
    fn zero_curvature_pushes_to_budget() {
        // H = 0 makes the dual linear; positive b drives alpha to C
        let h: Vec<Vec<f64>> = vec![vec![0.0]];
        let b = vec![0.25];
        let alpha = solve_dual(&h, &b, 2.0, 1e-10).unwrap();
        assert!((alpha[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_records_share_an_optimal_face() {
        // identical rows make H singular; total mass still matches the
        // single-record optimum
        let h: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let b = vec![0.5, 0.5];
        let alpha = solve_dual(&h, &b, 1.0, 1e-10).unwrap();
        let total: f64 = alpha.iter().sum();
        assert!((total - 0.5).abs() < 1e-9);
        assert!(kkt_residual(&h, &b, 1.0, &alpha).unwrap() <= 1e-10);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(matches!(
            solve_dual(&[vec![1.0, 0.5], vec![0.4, 1.0]], &[0.0, 0.0], 1.0, 1e-8),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            solve_dual(&[vec![f64::NAN]], &[0.0], 1.0, 1e-8),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            solve_dual(&[vec![1.0]], &[0.0], -1.0, 1e-8),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            solve_dual(&[vec![1.0]], &[0.0], 1.0, 0.0),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn kkt_residual_zero_at_closed_form_optimum() {
        let h: Vec<Vec<f64>> = vec![vec![1.0]];
        assert!(kkt_residual(&h, &[0.5], 1.0, &[0.5]).unwrap() <= 1e-12);
        assert!(kkt_residual(&h, &[3.0], 1.0, &[1.0]).unwrap() <= 1e-12);
    }

    #[test]
    fn kkt_residual_flags_violated_stationarity() {
        let h: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let b = vec![4.0, 0.2];
        let r = kkt_residual(&h, &b, 10.0, &[0.0, 0.0]).unwrap();
        assert!(r >= 4.0 / 4.0 - 1e-12);
    }

    #[test]
    fn kkt_residual_rejects_infeasible_alpha() {
        let h: Vec<Vec<f64>> = vec![vec![1.0]];
        assert!(matches!(
            kkt_residual(&h, &[0.5], 1.0, &[-0.1]),
            Err(Error::InfeasibleAlpha(_))
        ));
        assert!(matches!(
            kkt_residual(&h, &[0.5], 1.0, &[1.5]),
            Err(Error::InfeasibleAlpha(_))
        ));
    }

    #[test]
    fn recover_w_zero_alpha_gives_zero() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0, -2.0], 0.5, 0.0, 0)).unwrap();
        assert_eq!(recover_w(&ws, &[0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn recover_w_single_term() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0, 0.0, 0.0], 0.5, 0.0, 0)).unwrap();
        assert_eq!(recover_w(&ws, &[0.5]).unwrap(), vec![0.5, 0.0, 0.0]);
    }

    #[test]
    fn recover_w_rejects_length_mismatch() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0], 0.5, 0.0, 0)).unwrap();
        assert!(matches!(
            recover_w(&ws, &[0.5, 0.5]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn gram_identity_links_recovered_w_to_h_alpha() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![0.3, -0.7, 1.1], 0.4, 0.1, 0)).unwrap();
        ws.push(record(vec![-0.2, 0.5, 0.9], 0.9, -0.3, 1)).unwrap();
        ws.push(record(vec![1.0, 1.0, -1.0], 0.2, 0.6, 2)).unwrap();
        let alpha = vec![0.25, 0.5, 0.125];
        let w = recover_w(&ws, &alpha).unwrap();
        let h = ws.gram_matrix();
        for j in 0..ws.len() {
            let lhs = dot(&w, &ws.records()[j].dpsi);
            let rhs = dot(&h[j], &alpha);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn primal_slack_examples() {
        let ws = WorkingSet::<f64>::new();
        assert_eq!(primal_slack(&ws, &[]).unwrap(), 0.0);

        let mut ws = WorkingSet::new();
        ws.push(record(vec![0.8], 0.4, 0.0, 0)).unwrap();
        let xi = primal_slack(&ws, &[0.5]).unwrap();
        assert!((xi - 0.0).abs() < 1e-12);

        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0], 0.9, 0.1, 0)).unwrap();
        let xi = primal_slack(&ws, &[0.3]).unwrap();
        assert!((xi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn working_set_rejects_duplicate_labelings() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0], 0.5, 0.0, 7)).unwrap();
        assert!(matches!(
            ws.push(record(vec![2.0], 0.25, 0.0, 7)),
            Err(Error::DuplicateConstraint)
        ));
    }

    #[test]
    fn trace_is_monotone_and_feasible() {
        let h: Vec<Vec<f64>> = vec![
            vec![2.0, 0.5, -0.3],
            vec![0.5, 1.0, 0.2],
            vec![-0.3, 0.2, 1.5],
        ];
        let b = vec![0.7, -0.1, 0.9];
        let c = 0.8;
        let (alpha, trace) = solve_dual_traced(&h, &b, c, 1e-10, &[0.0; 3]).unwrap();
        assert!(kkt_residual(&h, &b, c, &alpha).unwrap() <= 1e-10);
        let mut prev = f64::NEG_INFINITY;
        for step in &trace {
            assert!(step.objective >= prev - 1e-9);
            assert!(step.min_alpha >= 0.0);
            assert!(step.alpha_sum <= c + 1e-9);
            prev = step.objective;
        }
    }

    #[test]
    fn empty_problem_is_fine() {
        let alpha = solve_dual::<f64>(&[], &[], 1.0, 1e-8).unwrap();
        assert!(alpha.is_empty());
    }

    #[test]
    fn primal_solution_validation() {
        let mut ws = WorkingSet::new();
        ws.push(record(vec![1.0], 0.9, 0.1, 0)).unwrap();
        let good = PrimalSolution {
            w: vec![0.3],
            xi: 0.5,
        };
        good.validate(&ws).unwrap();
        let negative = PrimalSolution {
            w: vec![0.3],
            xi: -0.1,
        };
        assert!(negative.validate(&ws).is_err());
        let violated = PrimalSolution {
            w: vec![0.3],
            xi: 0.1,
        };
        assert!(violated.validate(&ws).is_err());
    }
}
