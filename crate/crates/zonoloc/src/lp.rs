//! Dense bounded-variable simplex for the small LPs behind set queries.
//!
//! Every emptiness, membership, and support query on a constrained zonotope
//! reduces to `max c'x  s.t.  E x = f,  lo <= x <= hi` with at most a few
//! dozen variables and a handful of equality rows. At that size transparency
//! beats sophistication: the basis is refactorized from scratch every
//! iteration (no drift to manage) and Bland's rule keeps pivoting finite.
//!
//! Phase 1 drives artificial variables to zero; feasibility is declared when
//! the residual of the returned point against the original rows is within
//! `Options::tol`. Phase 2 optimizes the caller's objective with artificials
//! pinned to `[0, 0]`. Unboundedness cannot occur because every original
//! variable carries finite bounds.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{cast, Real};

/// Ways a solve can fail without producing a verdict.
///
/// Callers treat any failure conservatively (sets are assumed nonempty,
/// bounds are widened), so failures degrade tightness, never soundness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    /// Pivot count hit `Options::max_iters`.
    IterationLimit,
    /// A basis factorization failed; only reachable through severe
    /// degeneracy in the input data.
    SingularBasis,
    /// An improving ray had no blocking bound. Impossible for finite boxes;
    /// kept as a checked branch rather than a panic.
    Unbounded,
}

#[derive(Debug, Clone)]
pub enum Outcome<T: Real> {
    Optimal(Optimum<T>),
    Infeasible,
    Failed(Failure),
}

impl<T: Real> Outcome<T> {
    pub fn optimal(&self) -> Option<&Optimum<T>> {
        match self {
            Outcome::Optimal(opt) => Some(opt),
            _ => None,
        }
    }
}

/// A certified maximizer: the point, its objective, and the equality-row
/// duals, which let callers re-check KKT optimality without trusting the
/// pivot path that produced it.
#[derive(Debug, Clone)]
pub struct Optimum<T: Real> {
    pub objective: T,
    pub point: DVector<T>,
    pub duals: DVector<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct Options<T> {
    /// Feasibility and optimality tolerance.
    pub tol: T,
    /// Pivot budget across both phases.
    pub max_iters: usize,
}

impl<T: Real> Default for Options<T> {
    fn default() -> Self {
        Self {
            tol: T::default_tol(),
            max_iters: 2000,
        }
    }
}

/// Maximizes `objective . x` over `{x : eq x = rhs, lo <= x <= hi}`.
pub fn maximize<T: Real>(
    objective: &DVector<T>,
    eq: &DMatrix<T>,
    rhs: &DVector<T>,
    lo: &DVector<T>,
    hi: &DVector<T>,
    opts: &Options<T>,
) -> Outcome<T> {
    solve(Some(objective), eq, rhs, lo, hi, opts)
}

/// Finds any point of `{x : eq x = rhs, lo <= x <= hi}`, skipping phase 2.
pub fn feasible_point<T: Real>(
    eq: &DMatrix<T>,
    rhs: &DVector<T>,
    lo: &DVector<T>,
    hi: &DVector<T>,
    opts: &Options<T>,
) -> Outcome<T> {
    solve(None, eq, rhs, lo, hi, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarStatus {
    Basic(usize),
    AtLo,
    AtUp,
}

struct Tableau<T: Real> {
    /// Scaled columns, originals then one artificial per row.
    cols: DMatrix<T>,
    rhs: DVector<T>,
    lo: Vec<T>,
    /// `None` means unbounded above (artificials during phase 1).
    hi: Vec<Option<T>>,
    obj: Vec<T>,
    status: Vec<VarStatus>,
    basis: Vec<usize>,
    n: usize,
    m: usize,
    tol: T,
    /// Pivot significance threshold, well below `tol`.
    ptol: T,
}

fn solve<T: Real>(
    objective: Option<&DVector<T>>,
    eq: &DMatrix<T>,
    rhs: &DVector<T>,
    lo: &DVector<T>,
    hi: &DVector<T>,
    opts: &Options<T>,
) -> Outcome<T> {
    let n = lo.len();
    let m = eq.nrows();
    debug_assert_eq!(eq.ncols(), n);
    debug_assert_eq!(rhs.len(), m);
    debug_assert_eq!(hi.len(), n);
    debug_assert!((0..n).all(|j| lo[j] <= hi[j]), "inverted variable bound");

    if m == 0 {
        return Outcome::Optimal(unconstrained_optimum(objective, lo, hi));
    }

    // Row equilibration. Scale factors fold back into the duals at the end.
    let mut scale = vec![T::one(); m];
    let mut cols = DMatrix::zeros(m, n + m);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let mut mx = T::zero();
        for j in 0..n {
            mx = mx.max(eq[(i, j)].abs());
        }
        mx = mx.max(rhs[i].abs());
        if mx > T::zero() {
            scale[i] = T::one() / mx;
        }
        for j in 0..n {
            cols[(i, j)] = eq[(i, j)] * scale[i];
        }
        b[i] = rhs[i] * scale[i];
    }

    // Nonbasic originals start at the bound of smaller magnitude.
    let mut status = Vec::with_capacity(n + m);
    for j in 0..n {
        if hi[j].abs() < lo[j].abs() {
            status.push(VarStatus::AtUp);
        } else {
            status.push(VarStatus::AtLo);
        }
    }

    // Artificial columns are +/- unit so their start values are nonnegative.
    let mut lo_all: Vec<T> = lo.iter().copied().collect();
    let mut hi_all: Vec<Option<T>> = hi.iter().copied().map(Some).collect();
    let mut residual = b.clone();
    for j in 0..n {
        let v = match status[j] {
            VarStatus::AtUp => hi[j],
            _ => lo[j],
        };
        if v != T::zero() {
            for i in 0..m {
                residual[i] -= cols[(i, j)] * v;
            }
        }
    }
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if residual[i] < T::zero() { -T::one() } else { T::one() };
        cols[(i, n + i)] = sign;
        lo_all.push(T::zero());
        hi_all.push(None);
        status.push(VarStatus::Basic(i));
        basis.push(n + i);
    }

    let phase1_obj: Vec<T> = (0..n + m)
        .map(|j| if j < n { T::zero() } else { -T::one() })
        .collect();

    let mut tab = Tableau {
        cols,
        rhs: b,
        lo: lo_all,
        hi: hi_all,
        obj: phase1_obj,
        status,
        basis,
        n,
        m,
        tol: opts.tol,
        ptol: opts.tol * cast(1e-2),
    };

    let mut iters_left = opts.max_iters;
    if let Err(f) = run(&mut tab, &mut iters_left) {
        return Outcome::Failed(f);
    }

    let point = match extract_point(&tab) {
        Ok(p) => p,
        Err(f) => return Outcome::Failed(f),
    };
    let mut worst = T::zero();
    for i in 0..m {
        let mut r = rhs[i];
        for j in 0..n {
            r -= eq[(i, j)] * point[j];
        }
        worst = worst.max(r.abs());
    }
    if worst > opts.tol {
        return Outcome::Infeasible;
    }

    // Phase 2: pin artificials and swap in the caller's objective.
    for j in n..n + m {
        tab.hi[j] = Some(T::zero());
        tab.obj[j] = T::zero();
    }
    for j in 0..n {
        tab.obj[j] = objective.map_or(T::zero(), |c| c[j]);
    }
    if objective.is_some() {
        if let Err(f) = run(&mut tab, &mut iters_left) {
            return Outcome::Failed(f);
        }
    }

    let point = match extract_point(&tab) {
        Ok(p) => p,
        Err(f) => return Outcome::Failed(f),
    };
    let duals = match equality_duals(&tab, &scale) {
        Ok(d) => d,
        Err(f) => return Outcome::Failed(f),
    };
    let mut value = T::zero();
    if let Some(c) = objective {
        for j in 0..n {
            value += c[j] * point[j];
        }
    }
    Outcome::Optimal(Optimum {
        objective: value,
        point,
        duals,
    })
}

fn unconstrained_optimum<T: Real>(
    objective: Option<&DVector<T>>,
    lo: &DVector<T>,
    hi: &DVector<T>,
) -> Optimum<T> {
    let n = lo.len();
    let mut point = DVector::zeros(n);
    let mut value = T::zero();
    for j in 0..n {
        let c = objective.map_or(T::zero(), |c| c[j]);
        point[j] = if c > T::zero() { hi[j] } else { lo[j] };
        value += c * point[j];
    }
    Optimum {
        objective: value,
        point,
        duals: DVector::zeros(0),
    }
}

/// Runs Bland-rule bounded simplex on the current objective until optimal.
fn run<T: Real>(tab: &mut Tableau<T>, iters_left: &mut usize) -> Result<(), Failure> {
    loop {
        if *iters_left == 0 {
            return Err(Failure::IterationLimit);
        }
        *iters_left -= 1;

        let basis_lu = basis_matrix(tab).lu();
        let x_b = basis_lu
            .solve(&nonbasic_rhs(tab))
            .ok_or(Failure::SingularBasis)?;
        let c_b = DVector::from_fn(tab.m, |i, _| tab.obj[tab.basis[i]]);
        let duals = basis_matrix(tab)
            .transpose()
            .lu()
            .solve(&c_b)
            .ok_or(Failure::SingularBasis)?;

        // Bland: first eligible nonbasic index enters.
        let mut entering = None;
        for j in 0..tab.n + tab.m {
            let stat = tab.status[j];
            if matches!(stat, VarStatus::Basic(_)) {
                continue;
            }
            if tab.hi[j].is_some_and(|h| h - tab.lo[j] <= T::zero()) {
                continue; // fixed variable can never move
            }
            let mut rc = tab.obj[j];
            for i in 0..tab.m {
                rc -= duals[i] * tab.cols[(i, j)];
            }
            let eligible = match stat {
                VarStatus::AtLo => rc > tab.tol,
                VarStatus::AtUp => rc < -tab.tol,
                VarStatus::Basic(_) => false,
            };
            if eligible {
                entering = Some(j);
                break;
            }
        }
        let Some(e) = entering else {
            return Ok(());
        };
        let increasing = matches!(tab.status[e], VarStatus::AtLo);

        let col_e = DVector::from_fn(tab.m, |i, _| tab.cols[(i, e)]);
        let d = basis_lu.solve(&col_e).ok_or(Failure::SingularBasis)?;

        // Ratio test. `None` leaving index means the entering variable flips
        // to its own opposite bound. Ties break on smallest variable index.
        let mut best: Option<(T, Option<usize>)> = tab.hi[e].map(|h| (h - tab.lo[e], None));
        for i in 0..tab.m {
            // Basic value moves at rate `rate` per unit of entering motion.
            let rate = if increasing { -d[i] } else { d[i] };
            if rate.abs() <= tab.ptol {
                continue;
            }
            let v = tab.basis[i];
            let headroom = if rate < T::zero() {
                x_b[i] - tab.lo[v]
            } else {
                match tab.hi[v] {
                    Some(h) => h - x_b[i],
                    None => continue,
                }
            };
            let step = (headroom / rate.abs()).max(T::zero());
            let better = match &best {
                None => true,
                Some((cur, leaving)) => {
                    step < *cur - tab.ptol
                        || (step < *cur + tab.ptol
                            && leaving.map_or(false, |li| v < tab.basis[li]))
                }
            };
            if better {
                best = Some((step, Some(i)));
            }
        }

        match best {
            None => return Err(Failure::Unbounded),
            Some((_, None)) => {
                tab.status[e] = if increasing {
                    VarStatus::AtUp
                } else {
                    VarStatus::AtLo
                };
            }
            Some((_, Some(row))) => {
                let leaving = tab.basis[row];
                let rate = if increasing { -d[row] } else { d[row] };
                tab.status[leaving] = if rate < T::zero() {
                    VarStatus::AtLo
                } else {
                    VarStatus::AtUp
                };
                tab.basis[row] = e;
                tab.status[e] = VarStatus::Basic(row);
            }
        }
    }
}

fn basis_matrix<T: Real>(tab: &Tableau<T>) -> DMatrix<T> {
    DMatrix::from_fn(tab.m, tab.m, |i, k| tab.cols[(i, tab.basis[k])])
}

/// Right-hand side of the basic system: rhs minus nonbasic contributions.
fn nonbasic_rhs<T: Real>(tab: &Tableau<T>) -> DVector<T> {
    let mut r = tab.rhs.clone();
    for j in 0..tab.n + tab.m {
        let v = match tab.status[j] {
            VarStatus::Basic(_) => continue,
            VarStatus::AtLo => tab.lo[j],
            VarStatus::AtUp => tab.hi[j].expect("AtUp implies a finite upper bound"),
        };
        if v != T::zero() {
            for i in 0..tab.m {
                r[i] -= tab.cols[(i, j)] * v;
            }
        }
    }
    r
}

/// Recovers the original-variable point, clamped into its box.
fn extract_point<T: Real>(tab: &Tableau<T>) -> Result<DVector<T>, Failure> {
    let x_b = basis_matrix(tab)
        .lu()
        .solve(&nonbasic_rhs(tab))
        .ok_or(Failure::SingularBasis)?;
    let mut point = DVector::zeros(tab.n);
    for j in 0..tab.n {
        let raw = match tab.status[j] {
            VarStatus::Basic(i) => x_b[i],
            VarStatus::AtLo => tab.lo[j],
            VarStatus::AtUp => tab.hi[j].expect("AtUp implies a finite upper bound"),
        };
        let hi = tab.hi[j].expect("original variables carry finite bounds");
        point[j] = raw.max(tab.lo[j]).min(hi);
    }
    Ok(point)
}

/// Duals for the original (unscaled, unflipped) equality rows.
fn equality_duals<T: Real>(tab: &Tableau<T>, scale: &[T]) -> Result<DVector<T>, Failure> {
    let c_b = DVector::from_fn(tab.m, |i, _| tab.obj[tab.basis[i]]);
    let y = basis_matrix(tab)
        .transpose()
        .lu()
        .solve(&c_b)
        .ok_or(Failure::SingularBasis)?;
    // Scaled system was (diag(scale) * eq); map duals back accordingly. Row
    // sign flips live in the artificial columns, not the rows, so no sign
    // correction is needed here.
    Ok(DVector::from_fn(tab.m, |i, _| y[i] * scale[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    type V = DVector<f64>;
    type M = DMatrix<f64>;

    fn opts() -> Options<f64> {
        Options::default()
    }

    /// Independent optimality check: feasibility plus the KKT sign
    /// conditions recomputed from the returned duals.
    fn assert_kkt(c: &V, eq: &M, rhs: &V, lo: &V, hi: &V, opt: &Optimum<f64>) {
        let tol = 1e-7;
        for j in 0..lo.len() {
            assert!(opt.point[j] >= lo[j] - tol && opt.point[j] <= hi[j] + tol);
        }
        let resid = rhs - eq * &opt.point;
        assert!(resid.amax() <= 1e-7, "residual {}", resid.amax());
        for j in 0..lo.len() {
            let rc = c[j] - (eq.column(j).transpose() * &opt.duals)[(0, 0)];
            let at_lo = opt.point[j] <= lo[j] + tol;
            let at_up = opt.point[j] >= hi[j] - tol;
            if at_lo && at_up {
                continue; // degenerate interval, any rc sign is fine
            } else if at_lo {
                assert!(rc <= tol, "rc {} should be <= 0 at lower bound", rc);
            } else if at_up {
                assert!(rc >= -tol, "rc {} should be >= 0 at upper bound", rc);
            } else {
                assert!(rc.abs() <= tol, "interior variable has rc {}", rc);
            }
        }
    }

    #[test]
    fn unconstrained_box_support() {
        let c = V::from_vec(vec![1.0, -2.0, 0.0]);
        let lo = V::from_vec(vec![-1.0, -3.0, 2.0]);
        let hi = V::from_vec(vec![4.0, 5.0, 2.0]);
        let out = maximize(&c, &M::zeros(0, 3), &V::zeros(0), &lo, &hi, &opts());
        let opt = out.optimal().expect("feasible");
        assert_eq!(opt.objective, 4.0 + 6.0);
        assert_eq!(opt.point[0], 4.0);
        assert_eq!(opt.point[1], -3.0);
    }

    #[test]
    fn hand_checked_simplex_corner() {
        // max x + y  s.t.  x + y + z = 1,  box [0,1]^3  ->  1 at z = 0.
        let c = V::from_vec(vec![1.0, 1.0, 0.0]);
        let eq = M::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let rhs = V::from_vec(vec![1.0]);
        let lo = V::zeros(3);
        let hi = V::from_element(3, 1.0);
        let out = maximize(&c, &eq, &rhs, &lo, &hi, &opts());
        let opt = out.optimal().expect("feasible");
        assert!((opt.objective - 1.0).abs() < 1e-12);
        assert_kkt(&c, &eq, &rhs, &lo, &hi, opt);
    }

    #[test]
    fn asymmetric_bounds_support() {
        // max 2x - y  s.t.  x - y = 0.5,  x in [0, 2], y in [-1, 0.75].
        // x = y + 0.5 with y maximizing x twice minus y once -> y at 0.75.
        let c = V::from_vec(vec![2.0, -1.0]);
        let eq = M::from_row_slice(1, 2, &[1.0, -1.0]);
        let rhs = V::from_vec(vec![0.5]);
        let lo = V::from_vec(vec![0.0, -1.0]);
        let hi = V::from_vec(vec![2.0, 0.75]);
        let out = maximize(&c, &eq, &rhs, &lo, &hi, &opts());
        let opt = out.optimal().expect("feasible");
        assert!((opt.objective - (2.0 * 1.25 - 0.75)).abs() < 1e-12);
        assert_kkt(&c, &eq, &rhs, &lo, &hi, opt);
    }

    #[test]
    fn infeasible_by_margin() {
        // x + y = 5 cannot hold inside [0,1]^2.
        let eq = M::from_row_slice(1, 2, &[1.0, 1.0]);
        let rhs = V::from_vec(vec![5.0]);
        let lo = V::zeros(2);
        let hi = V::from_element(2, 1.0);
        match feasible_point(&eq, &rhs, &lo, &hi, &opts()) {
            Outcome::Infeasible => {}
            other => panic!("expected infeasible, got {:?}", other),
        }
    }

    #[test]
    fn zero_variable_problems() {
        let eq = M::zeros(1, 0);
        let lo = V::zeros(0);
        let hi = V::zeros(0);
        match feasible_point(&eq, &V::from_vec(vec![0.0]), &lo, &hi, &opts()) {
            Outcome::Optimal(_) => {}
            other => panic!("0 = 0 should be feasible, got {:?}", other),
        }
        match feasible_point(&eq, &V::from_vec(vec![3.0]), &lo, &hi, &opts()) {
            Outcome::Infeasible => {}
            other => panic!("0 = 3 should be infeasible, got {:?}", other),
        }
    }

    #[test]
    fn fixed_variables_are_respected() {
        // y is pinned to 0.25 by its bounds; x + y = 1 forces x = 0.75.
        let c = V::from_vec(vec![-1.0, 0.0]);
        let eq = M::from_row_slice(1, 2, &[1.0, 1.0]);
        let rhs = V::from_vec(vec![1.0]);
        let lo = V::from_vec(vec![0.0, 0.25]);
        let hi = V::from_vec(vec![2.0, 0.25]);
        let opt = maximize(&c, &eq, &rhs, &lo, &hi, &opts());
        let opt = opt.optimal().expect("feasible");
        assert!((opt.point[0] - 0.75).abs() < 1e-9);
        assert!((opt.point[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn random_instances_satisfy_kkt() {
        let mut rng = StdRng::seed_from_u64(0x5eed_1);
        for case in 0..200 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(0..=n.min(4));
            let eq = M::from_fn(m, n, |_, _| rng.gen_range(-2.0..2.0));
            let lo = V::from_fn(n, |_, _| rng.gen_range(-2.0..0.0));
            let hi = V::from_fn(n, |j, _| lo[j] + rng.gen_range(0.0..3.0));
            // Interior witness keeps the instance feasible by construction.
            let witness = V::from_fn(n, |j, _| {
                let t: f64 = rng.gen_range(0.05..0.95);
                lo[j] + t * (hi[j] - lo[j])
            });
            let rhs = &eq * &witness;
            let c = V::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            match maximize(&c, &eq, &rhs, &lo, &hi, &opts()) {
                Outcome::Optimal(opt) => {
                    assert!(
                        opt.objective >= c.dot(&witness) - 1e-9,
                        "case {}: optimum below a feasible value",
                        case
                    );
                    assert_kkt(&c, &eq, &rhs, &lo, &hi, &opt);
                }
                other => panic!("case {}: expected optimum, got {:?}", case, other),
            }
        }
    }

    #[test]
    fn random_infeasible_instances_are_rejected() {
        let mut rng = StdRng::seed_from_u64(0x5eed_2);
        for _ in 0..100 {
            let n = rng.gen_range(1..=6);
            let eq_base = M::from_fn(1, n, |_, _| rng.gen_range(0.5..2.0));
            let lo = V::from_fn(n, |_, _| rng.gen_range(-1.0..0.0));
            let hi = V::from_fn(n, |j, _| lo[j] + rng.gen_range(0.1..2.0));
            // Positive coefficients make the row's max over the box explicit;
            // demand strictly more than that.
            let mut max_reach = 0.0;
            for j in 0..n {
                max_reach += eq_base[(0, j)] * hi[j];
            }
            let rhs = V::from_vec(vec![max_reach + 0.5]);
            match feasible_point(&eq_base, &rhs, &lo, &hi, &opts()) {
                Outcome::Infeasible => {}
                other => panic!("expected infeasible, got {:?}", other),
            }
        }
    }
}
