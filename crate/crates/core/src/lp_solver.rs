//! Dense linear-program solver for box-bounded minimization problems:
//!
//! ```text
//! minimize    cᵀx
//! subject to  A·x ≤ b
//!             l ≤ x ≤ u    (l, u finite)
//! ```
//!
//! Problems here are small and wide: up to ~15 variables against up to
//! ~10⁴ inequality rows. The solver is a bounded-variable dual simplex
//! over an active-set core. The basis always consists of the slacks of
//! the inactive rows plus the basic structural variables, so every linear
//! solve collapses to a k×k system in the active-row/basic-variable core
//! (k ≤ variable count) that is refactored from scratch each iteration.
//! The start point (every variable at the bound favored by its cost sign,
//! all slacks basic) is dual feasible by construction, so primal
//! infeasibility surfaces as dual unboundedness: a violated row with no
//! eligible entering column.
//!
//! Pivot selection is Bland's rule on a fixed variable ordering
//! (structural variables first, then row slacks): the leaving variable is
//! the lowest-index bound violator and the entering variable is the
//! lowest-index column attaining the minimum dual ratio, which rules out
//! cycling. An iteration cap converts numerical stalling into a
//! [`crate::Error::NumericalFailure`].
//!
//! Rows are scaled to unit max-abs before solving. Returned optima are
//! clamped onto their bounds and re-verified against the original
//! (unscaled) rows, so an `Optimal` outcome always satisfies `A·x ≤ b +
//! 1e-9` and its bounds exactly.
//!
//! # Text dump format
//!
//! [`LinearProgram::dump_text`] serializes a problem as line-oriented
//! plain text for offline inspection:
//!
//! ```text
//! lp vars=2 rows=1
//! minimize: 2 1
//! bound 0: 0 1
//! bound 1: 0 1
//! row 0: -1 -1 <= -1
//! ```
//!
//! Numbers are printed with enough digits to round-trip f64 exactly.

use crate::{Error, Real, Result};

/// Absolute slack tolerance for accepting a row as satisfied, applied to
/// rows scaled to unit max-abs.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Pivot magnitudes at or below this (on scaled rows) are treated as zero.
const PIVOT_TOL: f64 = 1e-11;
/// Refinement rounds allowed when the final original-scale verification
/// trips on a row that passed in scaled coordinates.
const MAX_REFINEMENTS: usize = 3;

/// A box-bounded linear minimization problem; see the module docs for the
/// exact form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<R> {
    objective: Vec<R>,
    lower: Vec<R>,
    upper: Vec<R>,
    coeffs: Vec<R>,
    rhs: Vec<R>,
}

impl<R: Real> LinearProgram<R> {
    /// Creates a problem with no constraint rows yet.
    ///
    /// Validates that all inputs are finite, dimensions agree, and
    /// `lower[j] ≤ upper[j]` for every variable.
    pub fn new(objective: Vec<R>, lower: Vec<R>, upper: Vec<R>) -> Result<Self> {
        if objective.is_empty() {
            return Err(Error::EmptyInput("linear program with no variables".into()));
        }
        if lower.len() != objective.len() || upper.len() != objective.len() {
            return Err(Error::Config(format!(
                "linear program dimension mismatch: {} objective terms, {} lower bounds, {} upper bounds",
                objective.len(),
                lower.len(),
                upper.len()
            )));
        }
        for (j, c) in objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Config(format!("objective coefficient {j} is not finite")));
            }
        }
        for j in 0..lower.len() {
            if !lower[j].is_finite() || !upper[j].is_finite() {
                return Err(Error::Config(format!("bounds of variable {j} are not finite")));
            }
            if lower[j] > upper[j] {
                return Err(Error::Config(format!(
                    "variable {j} has lower bound {} above upper bound {}",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self {
            objective,
            lower,
            upper,
            coeffs: Vec::new(),
            rhs: Vec::new(),
        })
    }

    /// Appends one inequality row `coeffs·x ≤ rhs`.
    pub fn add_row(&mut self, coeffs: &[R], rhs: R) -> Result<()> {
        if coeffs.len() != self.n_vars() {
            return Err(Error::Config(format!(
                "row has {} coefficients for {} variables",
                coeffs.len(),
                self.n_vars()
            )));
        }
        if coeffs.iter().any(|a| !a.is_finite()) || !rhs.is_finite() {
            return Err(Error::Config("row contains non-finite entries".into()));
        }
        self.coeffs.extend_from_slice(coeffs);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn objective(&self) -> &[R] {
        &self.objective
    }

    pub fn lower(&self) -> &[R] {
        &self.lower
    }

    pub fn upper(&self) -> &[R] {
        &self.upper
    }

    pub fn row(&self, i: usize) -> &[R] {
        let n = self.n_vars();
        &self.coeffs[i * n..(i + 1) * n]
    }

    pub fn rhs(&self, i: usize) -> R {
        self.rhs[i]
    }

    /// Serializes the problem in the plain-text format documented at the
    /// module level.
    pub fn dump_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "lp vars={} rows={}", self.n_vars(), self.n_rows());
        let terms: Vec<String> = self.objective.iter().map(|c| format!("{c:?}")).collect();
        let _ = writeln!(out, "minimize: {}", terms.join(" "));
        for j in 0..self.n_vars() {
            let _ = writeln!(out, "bound {j}: {:?} {:?}", self.lower[j], self.upper[j]);
        }
        for i in 0..self.n_rows() {
            let row: Vec<String> = self.row(i).iter().map(|a| format!("{a:?}")).collect();
            let _ = writeln!(out, "row {i}: {} <= {:?}", row.join(" "), self.rhs[i]);
        }
        out
    }
}

/// Result of [`solve`]; infeasibility is an ordinary outcome, not an error.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<R> {
    Optimal { solution: Vec<R>, objective: R },
    Infeasible,
}

impl<R: Real> LpOutcome<R> {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    /// The optimal point, or `None` when infeasible.
    pub fn solution(&self) -> Option<&[R]> {
        match self {
            LpOutcome::Optimal { solution, .. } => Some(solution),
            LpOutcome::Infeasible => None,
        }
    }

    /// The optimal objective value, or `None` when infeasible.
    pub fn objective(&self) -> Option<R> {
        match self {
            LpOutcome::Optimal { objective, .. } => Some(*objective),
            LpOutcome::Infeasible => None,
        }
    }
}

struct Workspace<R> {
    n: usize,
    scaled_coeffs: Vec<R>,
    scaled_rhs: Vec<R>,
    /// Per scaled row: extra tightening applied by refinement rounds.
    row_tol: Vec<R>,
    /// Map from scaled row back to the original row index.
    origin: Vec<usize>,
}

impl<R: Real> Workspace<R> {
    fn row(&self, i: usize) -> &[R] {
        &self.scaled_coeffs[i * self.n..(i + 1) * self.n]
    }

    fn n_rows(&self) -> usize {
        self.scaled_rhs.len()
    }
}

/// Solves the program; see the module docs for guarantees and tolerances.
///
/// Returns `Err(NumericalFailure)` only when pivoting exceeds the
/// anti-cycling iteration cap or a basis system cannot be factored, which
/// indicates numerically hostile input rather than infeasibility.
pub fn solve<R: Real>(lp: &LinearProgram<R>) -> Result<LpOutcome<R>> {
    let n = lp.n_vars();
    let feas = feas_tol::<R>();

    let mut ws = Workspace {
        n,
        scaled_coeffs: Vec::new(),
        scaled_rhs: Vec::new(),
        row_tol: Vec::new(),
        origin: Vec::new(),
    };
    for i in 0..lp.n_rows() {
        let row = lp.row(i);
        let scale = row.iter().fold(R::zero(), |m, a| m.max(a.abs()));
        if scale == R::zero() {
            if lp.rhs(i) < -feas {
                return Ok(LpOutcome::Infeasible);
            }
            continue;
        }
        for a in row {
            ws.scaled_coeffs.push(*a / scale);
        }
        ws.scaled_rhs.push(lp.rhs(i) / scale);
        ws.row_tol.push(feas);
        ws.origin.push(i);
    }

    for _ in 0..=MAX_REFINEMENTS {
        let point = simplex(lp, &ws)?;
        let point = match point {
            Some(point) => point,
            None => return Ok(LpOutcome::Infeasible),
        };
        let mut clamped = point;
        for j in 0..n {
            clamped[j] = clamped[j].max(lp.lower[j]).min(lp.upper[j]);
        }
        match verify_original(lp, &clamped) {
            None => {
                let objective = dot(&lp.objective, &clamped);
                return Ok(LpOutcome::Optimal {
                    solution: clamped,
                    objective,
                });
            }
            Some(bad_original_row) => {
                for i in 0..ws.n_rows() {
                    if ws.origin[i] == bad_original_row {
                        ws.row_tol[i] = ws.row_tol[i] * R::of(0.25);
                    }
                }
            }
        }
    }
    Err(Error::NumericalFailure(
        "lp solution could not be polished to the feasibility tolerance".into(),
    ))
}

fn feas_tol<R: Real>() -> R {
    R::of(FEASIBILITY_TOL).max(R::epsilon() * R::of(64.0))
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (x, y)| acc + *x * *y)
}

/// First original row violated beyond the documented tolerance, if any.
fn verify_original<R: Real>(lp: &LinearProgram<R>, x: &[R]) -> Option<usize> {
    let feas = feas_tol::<R>();
    (0..lp.n_rows()).find(|&i| dot(lp.row(i), x) > lp.rhs(i) + feas)
}

/// Runs the dual simplex on the scaled rows. Returns the optimal point, or
/// `None` on primal infeasibility.
fn simplex<R: Real>(lp: &LinearProgram<R>, ws: &Workspace<R>) -> Result<Option<Vec<R>>> {
    let n = ws.n;
    let m = ws.n_rows();
    let pivot_tol = R::of(PIVOT_TOL).max(R::epsilon() * R::of(16.0));
    let bound_tol = feas_tol::<R>();

    // Basis state: `basic[j]` marks structural j basic (member of J);
    // `active[i]` marks row i active (its slack nonbasic at zero).
    let mut basic = vec![false; n];
    let mut active = vec![false; m];
    let mut at_upper = vec![false; n];
    let mut j_set: Vec<usize> = Vec::new();
    let mut k_set: Vec<usize> = Vec::new();

    for j in 0..n {
        at_upper[j] = lp.objective[j] < R::zero();
    }

    let mut x = vec![R::zero(); n];
    let mut slack = vec![R::zero(); m];
    let iter_cap = 10_000 + 50 * n.max(m / 4);

    for _ in 0..iter_cap {
        let t = j_set.len();

        // Solve the active core A[K,J]·x_J = b_K − A[K,·]·x_nonbasic.
        for j in 0..n {
            if !basic[j] {
                x[j] = if at_upper[j] { lp.upper[j] } else { lp.lower[j] };
            }
        }
        if t > 0 {
            let mut core = vec![R::zero(); t * t];
            let mut rhs = vec![R::zero(); t];
            for (r, &i) in k_set.iter().enumerate() {
                let row = ws.row(i);
                let mut acc = ws.scaled_rhs[i];
                for j in 0..n {
                    if !basic[j] {
                        acc = acc - row[j] * x[j];
                    }
                }
                rhs[r] = acc;
                for (c, &j) in j_set.iter().enumerate() {
                    core[r * t + c] = row[j];
                }
            }
            let sol = gauss_solve(&mut core, &mut rhs, t).ok_or_else(|| {
                Error::NumericalFailure("singular active-set core in lp basis".into())
            })?;
            for (c, &j) in j_set.iter().enumerate() {
                x[j] = sol[c];
            }
        }
        for i in 0..m {
            slack[i] = if active[i] {
                R::zero()
            } else {
                ws.scaled_rhs[i] - dot(ws.row(i), &x)
            };
        }

        // Leaving variable: lowest-index bound violator (Bland).
        enum Leaving {
            Structural { j: usize, to_upper: bool },
            Slack { i: usize },
        }
        let mut leaving = None;
        for j in 0..n {
            if !basic[j] {
                continue;
            }
            if x[j] < lp.lower[j] - bound_tol {
                leaving = Some(Leaving::Structural { j, to_upper: false });
                break;
            }
            if x[j] > lp.upper[j] + bound_tol {
                leaving = Some(Leaving::Structural { j, to_upper: true });
                break;
            }
        }
        if leaving.is_none() {
            for i in 0..m {
                if !active[i] && slack[i] < -ws.row_tol[i] {
                    leaving = Some(Leaving::Slack { i });
                    break;
                }
            }
        }
        let leaving = match leaving {
            Some(l) => l,
            None => return Ok(Some(x)),
        };

        // Tableau row of the leaving variable over the nonbasic columns:
        // rho solves A[K,J]ᵀ·rho = v with v depending on who leaves.
        let mut v = vec![R::zero(); t];
        let extra_row = match leaving {
            Leaving::Structural { j, .. } => {
                let pos = j_set.iter().position(|&q| q == j).expect("leaving structural is basic");
                v[pos] = R::one();
                None
            }
            Leaving::Slack { i } => {
                let row = ws.row(i);
                for (c, &j) in j_set.iter().enumerate() {
                    v[c] = -row[j];
                }
                Some(i)
            }
        };
        let rho = if t > 0 {
            let mut core_t = vec![R::zero(); t * t];
            for (r, &i) in k_set.iter().enumerate() {
                let row = ws.row(i);
                for (c, &j) in j_set.iter().enumerate() {
                    core_t[c * t + r] = row[j];
                }
            }
            gauss_solve(&mut core_t, &mut v, t).ok_or_else(|| {
                Error::NumericalFailure("singular transposed core in lp pivot".into())
            })?
        } else {
            Vec::new()
        };

        // Reduced costs need y with A[K,J]ᵀ·y = c_J.
        let y = if t > 0 {
            let mut core_t = vec![R::zero(); t * t];
            let mut cj = vec![R::zero(); t];
            for (r, &i) in k_set.iter().enumerate() {
                let row = ws.row(i);
                for (c, &j) in j_set.iter().enumerate() {
                    core_t[c * t + r] = row[j];
                }
            }
            for (c, &j) in j_set.iter().enumerate() {
                cj[c] = lp.objective[j];
            }
            gauss_solve(&mut core_t, &mut cj, t).ok_or_else(|| {
                Error::NumericalFailure("singular transposed core in lp pricing".into())
            })?
        } else {
            Vec::new()
        };

        let alpha_structural = |q: usize| -> R {
            let mut acc = R::zero();
            for (r, &i) in k_set.iter().enumerate() {
                acc = acc + rho[r] * ws.row(i)[q];
            }
            if let Some(i0) = extra_row {
                acc = acc + ws.row(i0)[q];
            }
            acc
        };
        let reduced_structural = |q: usize| -> R {
            let mut acc = lp.objective[q];
            for (r, &i) in k_set.iter().enumerate() {
                acc = acc - y[r] * ws.row(i)[q];
            }
            acc
        };

        // A violation below the lower bound needs the leaving value to
        // increase; above the upper bound, to decrease. `want_increase`
        // fixes the eligible sign pattern for entering columns.
        let want_increase = match leaving {
            Leaving::Structural { to_upper, .. } => !to_upper,
            Leaving::Slack { .. } => true,
        };

        // Entering variable: minimum dual ratio |d|/|alpha| over eligible
        // columns, lowest index on ties (Bland).
        enum Entering {
            Structural { q: usize },
            Slack { i: usize },
        }
        let mut best: Option<(R, Entering)> = None;
        let consider = |ratio: R, cand: Entering, best: &mut Option<(R, Entering)>| {
            let tie = R::of(1e-12) * (R::one() + ratio.abs());
            match best {
                Some((r, _)) if ratio >= *r - tie => {}
                _ => *best = Some((ratio, cand)),
            }
        };
        for q in 0..n {
            if basic[q] || lp.upper[q] - lp.lower[q] <= R::epsilon() * R::of(4.0) {
                continue;
            }
            let a = alpha_structural(q);
            if a.abs() <= pivot_tol {
                continue;
            }
            let eligible = if want_increase {
                (!at_upper[q] && a < R::zero()) || (at_upper[q] && a > R::zero())
            } else {
                (!at_upper[q] && a > R::zero()) || (at_upper[q] && a < R::zero())
            };
            if eligible {
                let ratio = reduced_structural(q).abs() / a.abs();
                consider(ratio, Entering::Structural { q }, &mut best);
            }
        }
        // Nonbasic slacks (of active rows) scan in ascending row order so
        // the Bland tie-break is over a fixed variable ordering.
        let mut k_sorted: Vec<(usize, usize)> =
            k_set.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        k_sorted.sort_unstable();
        for &(i, r) in &k_sorted {
            let a = rho[r];
            if a.abs() <= pivot_tol {
                continue;
            }
            let eligible = if want_increase { a < R::zero() } else { a > R::zero() };
            if eligible {
                let ratio = y[r].abs() / a.abs();
                consider(ratio, Entering::Slack { i }, &mut best);
            }
        }

        let entering = match best {
            Some((_, e)) => e,
            None => return Ok(None),
        };

        match leaving {
            Leaving::Structural { j, to_upper } => {
                basic[j] = false;
                at_upper[j] = to_upper;
                j_set.retain(|&q| q != j);
            }
            Leaving::Slack { i } => {
                active[i] = true;
                k_set.push(i);
            }
        }
        match entering {
            Entering::Structural { q } => {
                basic[q] = true;
                j_set.push(q);
            }
            Entering::Slack { i } => {
                active[i] = false;
                k_set.retain(|&r| r != i);
            }
        }
        if j_set.len() != k_set.len() {
            return Err(Error::NumericalFailure(
                "lp basis bookkeeping lost square active core".into(),
            ));
        }
    }
    Err(Error::NumericalFailure(format!(
        "lp exceeded {iter_cap} simplex iterations"
    )))
}

/// Gaussian elimination with partial pivoting on a t×t system stored
/// row-major in `a`. Returns `None` when the pivot falls below a scaled
/// epsilon threshold.
fn gauss_solve<R: Real>(a: &mut [R], b: &mut [R], t: usize) -> Option<Vec<R>> {
    let scale = a.iter().fold(R::zero(), |m, v| m.max(v.abs())).max(R::one());
    let tiny = R::epsilon() * R::of(32.0) * scale;
    for col in 0..t {
        let mut pivot_row = col;
        let mut pivot_val = a[col * t + col].abs();
        for r in (col + 1)..t {
            let v = a[r * t + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val <= tiny {
            return None;
        }
        if pivot_row != col {
            for c in 0..t {
                a.swap(pivot_row * t + c, col * t + c);
            }
            b.swap(pivot_row, col);
        }
        let inv = a[col * t + col].recip();
        for r in (col + 1)..t {
            let factor = a[r * t + col] * inv;
            if factor == R::zero() {
                continue;
            }
            for c in col..t {
                a[r * t + c] = a[r * t + c] - factor * a[col * t + c];
            }
            b[r] = b[r] - factor * b[col];
        }
    }
    let mut x = vec![R::zero(); t];
    for col in (0..t).rev() {
        let mut acc = b[col];
        for c in (col + 1)..t {
            acc = acc - a[col * t + c] * x[c];
        }
        x[col] = acc / a[col * t + col];
    }
    Some(x)
}
