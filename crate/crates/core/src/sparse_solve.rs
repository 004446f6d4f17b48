//! Sparse approximate solution of SPD systems by coordinate projection.
//!
//! Each step picks the `m` residual components of largest magnitude, solves
//! the `m x m` principal subsystem on those coordinates and updates the
//! solution there. The residual update is `m` sparse column SAXPYs. Every
//! step reduces the A-norm of the error by at least
//! `sum_J r_k^2 / sum_J a_kk`; the solution never holds more than `lfil`
//! nonzeros.
//!
//! The residual is abstracted behind [`Residual`] so the same loop runs on
//! a dense vector (public API) or on a sparse accumulator whose cost per
//! step is proportional to the touched entries (used by bordering).

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::{BlockView, IndexSet, SparseVector};

/// How the residual-norm threshold `eps` is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// Stop when `||r||_2 <= eps`.
    #[default]
    Absolute,
    /// Stop when `||r||_2 <= eps * ||b||_2`.
    Relative,
}

/// Controls for [`sparse_approx_solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSolveParams {
    /// Indices per projection step.
    pub m: usize,
    /// Residual-norm threshold.
    pub eps: f64,
    /// Maximum nonzeros in the solution.
    pub lfil: usize,
    /// Cap on projection steps; reaching it returns the current iterate.
    pub max_steps: usize,
    pub stop_rule: StopRule,
}

impl Default for SparseSolveParams {
    fn default() -> Self {
        Self::new(2, 0.01, 10)
    }
}

impl SparseSolveParams {
    /// `max_steps` defaults to `10 * lfil`.
    pub fn new(m: usize, eps: f64, lfil: usize) -> Self {
        SparseSolveParams {
            m,
            eps,
            lfil,
            max_steps: 10 * lfil.max(1),
            stop_rule: StopRule::Absolute,
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_stop_rule(mut self, stop_rule: StopRule) -> Self {
        self.stop_rule = stop_rule;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("m must be >= 1".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be >= 0, got {}", self.eps)));
        }
        if self.lfil == 0 {
            return Err(Error::InvalidParameter("lfil must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolveResult {
    pub x: SparseVector,
    /// Final residual `b - A x` maintained by the recurrence.
    pub residual: Vec<f64>,
    pub steps: usize,
    pub residual_norm: f64,
}

/// Data exposed to an observer after each projection step.
#[derive(Debug)]
pub struct ProjectionStep<'a> {
    /// 1-based step counter.
    pub step: usize,
    pub indices: &'a [usize],
    /// Residual on `indices` before the step.
    pub residual_on_indices: &'a [f64],
    /// Correction `y` added to `x` on `indices`.
    pub correction: &'a [f64],
    /// Iterate after the step.
    pub x: &'a SparseVector,
}

/// Indices of the `min(m, budget)` largest `|r_i|`, ties to the smaller
/// index. Exact zeros are never selected, so an all-zero residual gives an
/// empty set.
pub fn select_indices(r: &[f64], m: usize, budget: usize) -> IndexSet {
    let mut out = Vec::new();
    select_largest(r.iter().copied().enumerate(), m.min(budget), &mut out);
    IndexSet::from_sorted_unchecked(out)
}

fn select_largest(entries: impl Iterator<Item = (usize, f64)>, count: usize, out: &mut Vec<usize>) {
    out.clear();
    if count == 0 {
        return;
    }
    // (|r_i|, i), best first.
    let mut top: Vec<(f64, usize)> = Vec::with_capacity(count + 1);
    let beats = |a: f64, i: usize, (b, j): (f64, usize)| a > b || (a == b && i < j);
    for (i, v) in entries {
        let a = v.abs();
        if !(a > 0.0) {
            continue;
        }
        if top.len() == count && !beats(a, i, top[count - 1]) {
            continue;
        }
        let pos = top.iter().position(|&t| beats(a, i, t)).unwrap_or(top.len());
        top.insert(pos, (a, i));
        top.truncate(count);
    }
    out.extend(top.iter().map(|&(_, i)| i));
    out.sort_unstable();
}

/// Solves `S y = rhs` for a small SPD `S` by an LDLᵀ factorization.
pub fn solve_small_spd(s: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = s.dim();
    if rhs.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: rhs.len(),
        });
    }
    let mut work: Vec<f64> = (0..m).flat_map(|i| s.row(i).to_vec()).collect();
    let mut y = rhs.to_vec();
    ldlt_solve_in_place(&mut work, m, &mut y)?;
    Ok(y)
}

/// In-place LDL^T solve on a row-major `m x m` buffer. `b` is overwritten
/// by the solution; the strict lower triangle of `s` by `L` and the
/// diagonal by `D`. Square-root free, so diagonal subsystems give `b_i / s_ii`
/// exactly.
fn ldlt_solve_in_place(s: &mut [f64], m: usize, b: &mut [f64]) -> Result<()> {
    for j in 0..m {
        let mut d = s[j * m + j];
        for k in 0..j {
            d -= s[j * m + k] * s[j * m + k] * s[k * m + k];
        }
        if !(d > 0.0) {
            return Err(Error::NotSpd(format!("nonpositive pivot {d} in projection subsystem")));
        }
        s[j * m + j] = d;
        for i in j + 1..m {
            let mut v = s[i * m + j];
            for k in 0..j {
                v -= s[i * m + k] * s[j * m + k] * s[k * m + k];
            }
            s[i * m + j] = v / d;
        }
    }
    for i in 0..m {
        let mut v = b[i];
        for k in 0..i {
            v -= s[i * m + k] * b[k];
        }
        b[i] = v;
    }
    for i in 0..m {
        b[i] /= s[i * m + i];
    }
    for i in (0..m).rev() {
        let mut v = b[i];
        for k in i + 1..m {
            v -= s[k * m + i] * b[k];
        }
        b[i] = v;
    }
    Ok(())
}

/// Residual storage driven by the projection loop.
pub(crate) trait Residual {
    fn value(&self, i: usize) -> f64;
    /// `r[rows] -= y * vals`.
    fn sub_scaled(&mut self, rows: &[usize], vals: &[f64], y: f64);
    fn norm(&self) -> f64;
    fn select(&self, count: usize, out: &mut Vec<usize>);
}

impl Residual for [f64] {
    fn value(&self, i: usize) -> f64 {
        self[i]
    }

    fn sub_scaled(&mut self, rows: &[usize], vals: &[f64], y: f64) {
        for (&i, &a) in rows.iter().zip(vals) {
            self[i] -= y * a;
        }
    }

    fn norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn select(&self, count: usize, out: &mut Vec<usize>) {
        select_largest(self.iter().copied().enumerate(), count, out);
    }
}

/// Dense value array plus the list of touched positions. Clearing costs
/// only the touched entries, so one accumulator serves many solves.
#[derive(Debug, Clone)]
pub(crate) struct SparseResidual {
    values: Vec<f64>,
    marked: Vec<bool>,
    touched: Vec<usize>,
}

impl SparseResidual {
    pub(crate) fn new(n: usize) -> Self {
        SparseResidual {
            values: vec![0.0; n],
            marked: vec![false; n],
            touched: Vec::new(),
        }
    }

    pub(crate) fn clear(&mut self) {
        for &i in &self.touched {
            self.values[i] = 0.0;
            self.marked[i] = false;
        }
        self.touched.clear();
    }

    pub(crate) fn load(&mut self, rows: &[usize], vals: &[f64]) {
        self.clear();
        for (&i, &v) in rows.iter().zip(vals) {
            self.marked[i] = true;
            self.touched.push(i);
            self.values[i] = v;
        }
    }

    pub(crate) fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut r = vec![0.0; len];
        for &i in &self.touched {
            r[i] = self.values[i];
        }
        r
    }
}

impl Residual for SparseResidual {
    fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn sub_scaled(&mut self, rows: &[usize], vals: &[f64], y: f64) {
        for (&i, &a) in rows.iter().zip(vals) {
            if !self.marked[i] {
                self.marked[i] = true;
                self.touched.push(i);
            }
            self.values[i] -= y * a;
        }
    }

    fn norm(&self) -> f64 {
        self.touched
            .iter()
            .map(|&i| self.values[i] * self.values[i])
            .sum::<f64>()
            .sqrt()
    }

    fn select(&self, count: usize, out: &mut Vec<usize>) {
        select_largest(self.touched.iter().map(|&i| (i, self.values[i])), count, out);
    }
}

/// Per-step scratch buffers.
#[derive(Debug, Default, Clone)]
pub(crate) struct Scratch {
    indices: Vec<usize>,
    subsystem: Vec<f64>,
    rhs: Vec<f64>,
    y: Vec<f64>,
}

/// One projection step on the coordinates in `indices`. Leaves `y` in
/// `scratch.y` and the pre-step residual on `indices` in `scratch.rhs`.
fn project<R: Residual + ?Sized>(
    view: BlockView<'_>,
    x: &mut SparseVector,
    r: &mut R,
    indices: &[usize],
    scratch: &mut Scratch,
) -> Result<()> {
    let m = indices.len();
    scratch.subsystem.clear();
    scratch.subsystem.resize(m * m, 0.0);
    for q in 0..m {
        for p in 0..=q {
            let v = view.get(indices[p], indices[q]);
            scratch.subsystem[p * m + q] = v;
            scratch.subsystem[q * m + p] = v;
        }
    }
    scratch.rhs.clear();
    scratch.rhs.extend(indices.iter().map(|&i| r.value(i)));
    scratch.y.clear();
    scratch.y.extend_from_slice(&scratch.rhs);
    ldlt_solve_in_place(&mut scratch.subsystem, m, &mut scratch.y)?;
    for (&i, &y) in indices.iter().zip(&scratch.y) {
        x.add_at(i, y);
        let (rows, vals) = view.column(i);
        r.sub_scaled(rows, vals, y);
    }
    Ok(())
}

/// One projection step on a dense residual.
///
/// On entry `r` must equal `b - A x` on the block. Returns the correction
/// `y` added to `x` on `set`; afterwards `r` vanishes on `set` up to
/// rounding.
pub fn project_update(
    view: BlockView<'_>,
    x: &mut SparseVector,
    r: &mut [f64],
    set: &IndexSet,
) -> Result<Vec<f64>> {
    if r.len() != view.dim() {
        return Err(Error::DimensionMismatch {
            expected: view.dim(),
            found: r.len(),
        });
    }
    if x.len() != view.dim() {
        return Err(Error::DimensionMismatch {
            expected: view.dim(),
            found: x.len(),
        });
    }
    if let Some(&last) = set.as_slice().last() {
        if last >= view.dim() {
            return Err(Error::IndexOutOfRange {
                index: last,
                bound: view.dim(),
            });
        }
    }
    let mut scratch = Scratch::default();
    project(view, x, r, set.as_slice(), &mut scratch)?;
    Ok(scratch.y)
}

/// Projection loop shared by the dense and sparse residual paths. `x`
/// must be empty and `r` must hold the right-hand side on entry.
pub(crate) fn run_projection<R, F>(
    view: BlockView<'_>,
    r: &mut R,
    rhs_norm: f64,
    params: &SparseSolveParams,
    x: &mut SparseVector,
    scratch: &mut Scratch,
    mut observer: F,
) -> Result<usize>
where
    R: Residual + ?Sized,
    F: FnMut(&ProjectionStep<'_>),
{
    let threshold = match params.stop_rule {
        StopRule::Absolute => params.eps,
        StopRule::Relative => params.eps * rhs_norm,
    };
    // With lfil >= dim the fill cap can never bind, so it does not end the
    // iteration either.
    let capped = params.lfil < view.dim();
    let mut steps = 0;
    let mut indices = std::mem::take(&mut scratch.indices);
    let outcome = loop {
        if r.norm() <= threshold || steps >= params.max_steps {
            break Ok(steps);
        }
        let budget = if capped {
            if x.nnz() >= params.lfil {
                break Ok(steps);
            }
            params.lfil - x.nnz()
        } else {
            params.m
        };
        r.select(params.m.min(budget), &mut indices);
        if indices.is_empty() {
            break Ok(steps);
        }
        if let Err(e) = project(view, x, r, &indices, scratch) {
            break Err(e);
        }
        steps += 1;
        observer(&ProjectionStep {
            step: steps,
            indices: &indices,
            residual_on_indices: &scratch.rhs,
            correction: &scratch.y,
            x,
        });
    };
    scratch.indices = indices;
    outcome
}

/// Sparse approximate solution of `A_view x = b`.
///
/// Starts from `x = 0`, `r = b` and iterates projection steps until
/// `||r||_2 <= eps` (see [`StopRule`]), the fill budget `lfil` is spent,
/// the residual is exactly zero or `max_steps` is reached.
pub fn sparse_approx_solve(
    view: BlockView<'_>,
    b: &[f64],
    params: &SparseSolveParams,
) -> Result<SparseSolveResult> {
    sparse_approx_solve_traced(view, b, params, |_| {})
}

/// [`sparse_approx_solve`] with a callback after every projection step.
pub fn sparse_approx_solve_traced<F>(
    view: BlockView<'_>,
    b: &[f64],
    params: &SparseSolveParams,
    observer: F,
) -> Result<SparseSolveResult>
where
    F: FnMut(&ProjectionStep<'_>),
{
    params.validate()?;
    if b.len() != view.dim() {
        return Err(Error::DimensionMismatch {
            expected: view.dim(),
            found: b.len(),
        });
    }
    let mut r = b.to_vec();
    let mut x = SparseVector::new(view.dim());
    let mut scratch = Scratch::default();
    let b_norm = r.as_slice().norm();
    let steps = run_projection(view, r.as_mut_slice(), b_norm, params, &mut x, &mut scratch, observer)?;
    let residual_norm = r.as_slice().norm();
    Ok(SparseSolveResult {
        x,
        residual: r,
        steps,
        residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SymSparseMatrix;

    fn diag(d: &[f64]) -> SymSparseMatrix {
        SymSparseMatrix::from_triplets(d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v))).unwrap()
    }

    #[test]
    fn select_forced_ordering() {
        assert_eq!(select_indices(&[0.1, -0.5, 0.3], 2, 2).as_slice(), &[1, 2]);
        assert_eq!(select_indices(&[0.1, -0.5, 0.3], 2, 9).as_slice(), &[1, 2]);
    }

    #[test]
    fn select_tie_goes_to_smaller_index() {
        assert_eq!(select_indices(&[0.5, 0.5, 0.1], 1, 5).as_slice(), &[0]);
        assert_eq!(select_indices(&[0.1, -0.5, 0.5], 1, 5).as_slice(), &[1]);
    }

    #[test]
    fn select_skips_zeros() {
        assert_eq!(select_indices(&[0.0, 0.0, 1.0], 2, 2).as_slice(), &[2]);
        assert!(select_indices(&[0.0; 4], 2, 2).is_empty());
    }

    #[test]
    fn select_respects_budget() {
        assert_eq!(select_indices(&[3.0, 2.0, 1.0], 3, 1).as_slice(), &[0]);
    }

    #[test]
    fn small_spd_cases() {
        assert_eq!(solve_small_spd(&DenseMatrix::from_rows(&[&[4.0]]), &[2.0]).unwrap(), vec![0.5]);
        assert_eq!(
            solve_small_spd(&DenseMatrix::identity(2), &[3.0, -7.0]).unwrap(),
            vec![3.0, -7.0]
        );
        let s = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let y = solve_small_spd(&s, &[2.0, 3.0]).unwrap();
        assert!(y[0].abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15, "{y:?}");
    }

    #[test]
    fn small_spd_breakdown() {
        let s = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(solve_small_spd(&s, &[1.0, 1.0]), Err(Error::NotSpd(_))));
    }

    #[test]
    fn project_update_diagonal() {
        let a = diag(&[1.0, 2.0, 3.0]);
        let mut x = SparseVector::new(3);
        let mut r = vec![1.0, 1.0, 1.0];
        let y = project_update(a.full(), &mut x, &mut r, &IndexSet::new(vec![0, 1]).unwrap()).unwrap();
        assert_eq!(y, vec![1.0, 0.5]);
        assert_eq!(x.indices(), &[0, 1]);
        assert_eq!(x.values(), &[1.0, 0.5]);
        assert_eq!(r, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn singleton_projection_is_coordinate_step() {
        let a = SymSparseMatrix::from_triplets(2, [(0, 0, 4.0), (1, 0, 1.0), (1, 1, 5.0)]).unwrap();
        let mut x = SparseVector::new(2);
        let mut r = vec![2.0, 3.0];
        let y = project_update(a.full(), &mut x, &mut r, &IndexSet::new(vec![1]).unwrap()).unwrap();
        assert_eq!(y, vec![3.0 / 5.0]);
        assert_eq!(r, vec![2.0 - 0.6, 0.0]);
    }

    #[test]
    fn diagonal_system_exact_in_three_steps() {
        let d = [2.0, 5.0, 1.0, 4.0, 8.0];
        let b = [1.0, -3.0, 2.0, 0.5, 7.0];
        let a = diag(&d);
        let res = sparse_approx_solve(a.full(), &b, &SparseSolveParams::new(2, 0.0, 5)).unwrap();
        assert_eq!(res.steps, 3);
        for i in 0..5 {
            assert_eq!(res.x.get(i), b[i] / d[i]);
        }
        assert_eq!(res.residual_norm, 0.0);
    }

    #[test]
    fn budget_exhaustion_stops_after_one_step() {
        let a = diag(&[1.0, 2.0, 3.0, 4.0]);
        let res = sparse_approx_solve(a.full(), &[1.0; 4], &SparseSolveParams::new(2, 0.0, 2)).unwrap();
        assert_eq!(res.steps, 1);
        assert_eq!(res.x.nnz(), 2);
    }

    #[test]
    fn relative_stop_rule_scales_with_rhs() {
        let a = diag(&[1.0, 1.0, 1.0, 1.0]);
        let b = [100.0, 50.0, 1.0, 0.5];
        let abs = sparse_approx_solve(a.full(), &b, &SparseSolveParams::new(1, 2.0, 4)).unwrap();
        let rel = sparse_approx_solve(
            a.full(),
            &b,
            &SparseSolveParams::new(1, 0.02, 4).with_stop_rule(StopRule::Relative),
        )
        .unwrap();
        assert_eq!(abs.steps, 2);
        assert_eq!(rel.steps, 2);
    }

    #[test]
    fn zero_rhs_takes_no_steps() {
        let a = diag(&[1.0, 2.0]);
        let res = sparse_approx_solve(a.full(), &[0.0, 0.0], &SparseSolveParams::default()).unwrap();
        assert_eq!(res.steps, 0);
        assert_eq!(res.x.nnz(), 0);
    }

    #[test]
    fn invalid_params_rejected() {
        let a = diag(&[1.0]);
        for p in [
            SparseSolveParams::new(0, 0.1, 1),
            SparseSolveParams::new(1, -1.0, 1),
            SparseSolveParams::new(1, 0.1, 0),
            SparseSolveParams::new(1, 0.1, 1).with_max_steps(0),
        ] {
            assert!(matches!(
                sparse_approx_solve(a.full(), &[1.0], &p),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn sparse_residual_tracks_dense() {
        let mut s = SparseResidual::new(6);
        s.load(&[1, 4], &[2.0, -1.0]);
        s.sub_scaled(&[0, 4], &[1.0, 1.0], 0.5);
        assert_eq!(s.to_dense(6), vec![-0.5, 2.0, 0.0, 0.0, -1.5, 0.0]);
        let mut out = Vec::new();
        s.select(1, &mut out);
        assert_eq!(out, vec![1]);
        s.clear();
        assert_eq!(s.to_dense(6), vec![0.0; 6]);
    }
}
