//! A small dense two-phase simplex solver.
//!
//! The geometry code needs many tiny linear programs (tens of variables,
//! tens of constraints): strict-feasibility certificates for candidate
//! partition regions and Chebyshev centers for representative placement.
//! Both reduce to the same "maximize the worst margin" program solved by
//! [`max_margin_point`].  A hand-rolled tableau solver keeps tolerances
//! under our control and avoids dragging in a general-purpose LP crate for
//! problems this size.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::Result;

/// Reduced-cost / pivot tolerance.
const EPS: f64 = 1e-9;
/// Phase-1 residual above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-6;
/// Iterations of Dantzig pricing before switching to Bland's rule
/// (anti-cycling guarantee).
const BLAND_AFTER: usize = 2_000;
/// Hard iteration cap; the LPs here are tiny, so hitting this is a bug.
const MAX_ITERS: usize = 50_000;

/// Optimal point and objective value of a solved program.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
}

/// Maximizes `c·x` subject to `a·x ≤ b`, `x ≥ 0`.
///
/// `b` entries may be negative (phase 1 constructs a starting vertex).
/// Errors: [`Error::InfeasibleTarget`] when no feasible point exists,
/// [`Error::ConstructionFailure`] when the objective is unbounded or the
/// iteration cap is hit.
pub fn solve_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(
            "LP rows, rhs, and objective lengths disagree".into(),
        ));
    }

    let artificial_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = artificial_rows.len();
    let cols = n + m + k;

    // rows[i] = [structural | slack | artificial | rhs], rhs ≥ 0 after
    // negating rows with b < 0.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut art_index = 0usize;
    for i in 0..m {
        let mut row = vec![0.0; cols + 1];
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = flip * a[i][j];
        }
        row[n + i] = flip; // slack
        row[cols] = flip * b[i];
        if b[i] < 0.0 {
            row[n + m + art_index] = 1.0;
            basis.push(n + m + art_index);
            art_index += 1;
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        basis,
        cols,
        n_art: k,
    };

    if k > 0 {
        // Phase 1: maximize −Σ artificials.
        let mut obj = vec![0.0; cols + 1];
        obj[n + m..cols].fill(-1.0);
        t.price_out(&mut obj);
        let z = t.run(&mut obj, true)?;
        if z < -FEAS_TOL {
            return Err(Error::InfeasibleTarget(format!(
                "linear program infeasible (phase-1 residual {:.3e})",
                -z
            )));
        }
        t.evict_artificials();
    }

    // Phase 2: the real objective (artificial columns barred from entering).
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(c);
    t.price_out(&mut obj);
    let objective = t.run(&mut obj, false)?;

    let mut x = DVector::zeros(n);
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rows[i][cols];
        }
    }
    Ok(LpSolution { x, objective })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    n_art: usize,
}

impl Tableau {
    /// Number of columns eligible to enter the basis (artificials excluded
    /// once phase 1 is over; they are barred from entering in both phases —
    /// in phase 1 they start basic, which is all that phase needs).
    fn enterable(&self) -> usize {
        self.cols - self.n_art
    }

    /// Zeroes the reduced costs of the current basic columns.
    fn price_out(&self, obj: &mut [f64]) {
        for (i, &bj) in self.basis.iter().enumerate() {
            let f = obj[bj];
            if f != 0.0 {
                for (o, v) in obj.iter_mut().zip(&self.rows[i]) {
                    *o -= f * v;
                }
            }
        }
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let piv = self.rows[r][c];
        for v in &mut self.rows[r] {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != 0.0 {
                for j in 0..=self.cols {
                    self.rows[i][j] -= f * self.rows[r][j];
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (o, v) in obj.iter_mut().zip(&self.rows[r]) {
                *o -= f * v;
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations until optimality; returns the objective value.
    fn run(&mut self, obj: &mut [f64], phase1: bool) -> Result<f64> {
        for iter in 0..MAX_ITERS {
            let bland = iter > BLAND_AFTER;
            let enter = if bland {
                (0..self.enterable()).find(|&j| obj[j] > EPS)
            } else {
                let mut best = (EPS, None);
                for (j, &oj) in obj.iter().enumerate().take(self.enterable()) {
                    if oj > best.0 {
                        best = (oj, Some(j));
                    }
                }
                best.1
            };
            let Some(c) = enter else {
                return Ok(-obj[self.cols]);
            };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let coef = self.rows[i][c];
                if coef > EPS {
                    let ratio = self.rows[i][self.cols] / coef;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - EPS || (ratio < lr + EPS && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                if phase1 {
                    // Phase-1 objective is bounded above by 0 by construction.
                    return Err(Error::ConstructionFailure(
                        "phase-1 simplex reported unbounded".into(),
                    ));
                }
                return Err(Error::ConstructionFailure(
                    "linear program unbounded".into(),
                ));
            };
            self.pivot(obj, r, c);
        }
        Err(Error::ConstructionFailure(
            "simplex iteration cap exceeded".into(),
        ))
    }

    /// After phase 1, pivots surviving basic artificials (stuck at value 0)
    /// out of the basis where possible.  A row admitting no pivot is
    /// redundant; its artificial stays basic at zero and is barred from
    /// re-entering, which keeps it harmless.
    fn evict_artificials(&mut self) {
        let first_art = self.cols - self.n_art;
        for r in 0..self.rows.len() {
            if self.basis[r] >= first_art {
                if let Some(c) = (0..first_art).find(|&j| self.rows[r][j].abs() > EPS) {
                    let mut dummy = vec![0.0; self.cols + 1];
                    self.pivot(&mut dummy, r, c);
                }
            }
        }
    }
}

/// Maximizes the worst signed margin over a box.
///
/// Finds `y ∈ [−radius, radius]^d` maximizing `r` subject to
/// `normals[i]·y + offsets[i] ≥ r` for every row and `radius ± y_j ≥ r` for
/// every wall.  With unit-norm rows this is the Chebyshev center of the
/// polyhedron `{normals·y + offsets ≥ 0}` intersected with the box; the
/// optimum `r` is positive exactly when that set has interior points within
/// the box.  Returns `(y*, r*)`; `r*` may be negative for empty regions.
pub fn max_margin_point(
    normals: &DMatrix<f64>,
    offsets: &DVector<f64>,
    radius: f64,
) -> Result<(DVector<f64>, f64)> {
    let m = normals.nrows();
    let d = normals.ncols();
    if offsets.len() != m {
        return Err(Error::DimensionMismatch(
            "normals rows and offsets length disagree".into(),
        ));
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(Error::InvalidArgument("box radius must be positive".into()));
    }

    // Variables: u = y + radius·1 ∈ [0, 2·radius]^d (componentwise), and the
    // free margin r = r⁺ − r⁻.  Constraint layout, all as a·x ≤ b:
    //   region rows:  −normals·u + r⁺ − r⁻ ≤ offsets − radius·(normals·1)
    //   lower walls:  −u_j + r⁺ − r⁻ ≤ 0
    //   upper walls:   u_j + r⁺ − r⁻ ≤ 2·radius
    let n_vars = d + 2;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m + 2 * d);
    let mut b: Vec<f64> = Vec::with_capacity(m + 2 * d);
    for i in 0..m {
        let mut row = vec![0.0; n_vars];
        let mut shift = 0.0;
        for j in 0..d {
            row[j] = -normals[(i, j)];
            shift += normals[(i, j)];
        }
        row[d] = 1.0;
        row[d + 1] = -1.0;
        a.push(row);
        b.push(offsets[i] - radius * shift);
    }
    for j in 0..d {
        let mut low = vec![0.0; n_vars];
        low[j] = -1.0;
        low[d] = 1.0;
        low[d + 1] = -1.0;
        a.push(low);
        b.push(0.0);

        let mut high = vec![0.0; n_vars];
        high[j] = 1.0;
        high[d] = 1.0;
        high[d + 1] = -1.0;
        a.push(high);
        b.push(2.0 * radius);
    }
    let mut c = vec![0.0; n_vars];
    c[d] = 1.0;
    c[d + 1] = -1.0;

    let sol = solve_max(&c, &a, &b)?;
    let y = DVector::from_fn(d, |j, _| sol.x[j] - radius);
    Ok((y, sol.objective))
}

/// Point of minimum L∞ norm satisfying `normals·y + offsets ≥ margin`.
///
/// Returns the minimizing `y` (a strictly interior point of the polyhedron
/// when `margin > 0`), or [`Error::InfeasibleTarget`] when the constraints
/// admit no such point.  Used to find how far from the origin a region's
/// nearest interior point sits — regions wedged between nearly parallel
/// hyperplanes can begin arbitrarily far out even when all thresholds are
/// small.
pub fn min_infinity_norm_point(
    normals: &DMatrix<f64>,
    offsets: &DVector<f64>,
    margin: f64,
) -> Result<DVector<f64>> {
    let m = normals.nrows();
    let d = normals.ncols();
    if offsets.len() != m {
        return Err(Error::DimensionMismatch(
            "normals rows and offsets length disagree".into(),
        ));
    }

    // Variables x = [y⁺ (d) | y⁻ (d) | s], all ≥ 0, with y = y⁺ − y⁻ and
    // |y_j| ≤ s.  Maximize −s.
    let n_vars = 2 * d + 1;
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(m + 2 * d);
    let mut b: Vec<f64> = Vec::with_capacity(m + 2 * d);
    for i in 0..m {
        // −normals_i·y ≤ offsets_i − margin
        let mut row = vec![0.0; n_vars];
        for j in 0..d {
            row[j] = -normals[(i, j)];
            row[d + j] = normals[(i, j)];
        }
        a.push(row);
        b.push(offsets[i] - margin);
    }
    for j in 0..d {
        let mut up = vec![0.0; n_vars];
        up[j] = 1.0;
        up[d + j] = -1.0;
        up[2 * d] = -1.0;
        a.push(up);
        b.push(0.0);

        let mut down = vec![0.0; n_vars];
        down[j] = -1.0;
        down[d + j] = 1.0;
        down[2 * d] = -1.0;
        a.push(down);
        b.push(0.0);
    }
    let mut c = vec![0.0; n_vars];
    c[2 * d] = -1.0;

    let sol = solve_max(&c, &a, &b)?;
    Ok(DVector::from_fn(d, |j, _| sol.x[j] - sol.x[d + j]))
}

#[cfg(test)]
mod test {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn simple_bounded_max() {
        // max x + y s.t. x + y ≤ 1, x ≤ 0.6 → optimum 1.
        let sol = solve_max(&[1.0, 1.0], &[vec![1.0, 1.0], vec![1.0, 0.0]], &[1.0, 0.6]).unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[0] + sol.x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn negative_rhs_needs_phase1() {
        // max −x s.t. −x ≤ −2 (i.e. x ≥ 2) → optimum −2 at x = 2.
        let sol = solve_max(&[-1.0], &[vec![-1.0]], &[-2.0]).unwrap();
        assert_abs_diff_eq!(sol.objective, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.x[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x ≤ 1 and x ≥ 3 cannot hold together.
        let r = solve_max(&[0.0], &[vec![1.0], vec![-1.0]], &[1.0, -3.0]);
        assert!(matches!(r, Err(Error::InfeasibleTarget(_))));
    }

    #[test]
    fn detects_unbounded() {
        let r = solve_max(&[1.0], &[vec![-1.0]], &[0.0]);
        assert!(matches!(r, Err(Error::ConstructionFailure(_))));
    }

    #[test]
    fn degenerate_equality_like_rows() {
        // x ≤ 1 twice plus x ≥ 1: optimum pinned at x = 1.
        let sol = solve_max(
            &[1.0],
            &[vec![1.0], vec![1.0], vec![-1.0]],
            &[1.0, 1.0, -1.0],
        )
        .unwrap();
        assert_abs_diff_eq!(sol.objective, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn margin_of_empty_box_slice_is_negative() {
        // y ≥ 1 and y ≤ −1 simultaneously: empty, margin strictly negative.
        let normals = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let offsets = DVector::from_vec(vec![-1.0, -1.0]);
        let (_, r) = max_margin_point(&normals, &offsets, 10.0).unwrap();
        assert!(r <= -0.9, "margin {r}");
    }

    #[test]
    fn margin_of_halved_box() {
        // Right half of the square [−1,1]²: inscribed ball radius 1/2.
        let normals = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let offsets = DVector::from_vec(vec![0.0]);
        let (y, r) = max_margin_point(&normals, &offsets, 1.0).unwrap();
        assert_abs_diff_eq!(r, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(y[0], 0.5, epsilon = 1e-9);
        assert!(y[1].abs() <= 0.5 + 1e-9);
    }

    #[test]
    fn margin_of_free_box_is_radius() {
        let normals = DMatrix::zeros(0, 3);
        let offsets = DVector::zeros(0);
        let (y, r) = max_margin_point(&normals, &offsets, 2.5).unwrap();
        assert_abs_diff_eq!(r, 2.5, epsilon = 1e-9);
        for j in 0..3 {
            assert_abs_diff_eq!(y[j], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn margin_scales_with_large_boxes() {
        // A single line through the origin in the plane, box radius 1e6:
        // the half-box's inscribed ball has radius 5e5.
        let normals = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let offsets = DVector::zeros(1);
        let (_, r) = max_margin_point(&normals, &offsets, 1e6).unwrap();
        assert_abs_diff_eq!(r, 5e5, epsilon = 1e-3);
    }

    #[test]
    fn min_norm_point_of_shifted_halfplane() {
        // y₁ ≥ 3 (with zero margin): closest L∞ point is (3, 0).
        let normals = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let offsets = DVector::from_vec(vec![-3.0]);
        let y = min_infinity_norm_point(&normals, &offsets, 0.0).unwrap();
        assert_abs_diff_eq!(y[0], 3.0, epsilon = 1e-9);
        assert!(y[1].abs() <= 3.0 + 1e-9);
    }

    #[test]
    fn min_norm_point_respects_margin() {
        // y₁ ≥ 0 with margin 0.25 → y₁ = 0.25.
        let normals = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let offsets = DVector::zeros(1);
        let y = min_infinity_norm_point(&normals, &offsets, 0.25).unwrap();
        assert_abs_diff_eq!(y[0], 0.25, epsilon = 1e-9);
    }

    #[test]
    fn min_norm_point_of_far_wedge() {
        // Wedge opening only past x = 100: between y ≤ x/100 − 1 and y ≥ 0,
        // i.e. {x/100 − y ≥ 1, y ≥ 0}.  Its nearest point is (100, 0).
        let normals = DMatrix::from_row_slice(2, 2, &[0.01, -1.0, 0.0, 1.0]);
        let offsets = DVector::from_vec(vec![-1.0, 0.0]);
        let y = min_infinity_norm_point(&normals, &offsets, 0.0).unwrap();
        assert_abs_diff_eq!(y[0], 100.0, epsilon = 1e-6);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn min_norm_point_reports_infeasible() {
        // y₁ ≥ 1 and y₁ ≤ −1 simultaneously.
        let normals = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let offsets = DVector::from_vec(vec![-1.0, -1.0]);
        assert!(min_infinity_norm_point(&normals, &offsets, 0.0).is_err());
    }
}
