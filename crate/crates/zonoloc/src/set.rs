//! Extended constrained zonotopes and their calculus.
//!
//! A set here is `{ G xi + c : A xi = b, lo_j <= xi_j <= hi_j }`: an affine
//! image of a box sliced by equality constraints. Unlike the classical form,
//! the per-generator intervals may be asymmetric (for example `[0, h]` for
//! cone-shaped sets), which the range geometry relies on. All bounds are
//! finite; unbounded directions are rejected at construction.
//!
//! Linear maps, Minkowski sums, and generalized intersections are exact
//! representation-level identities and never call the LP kernel. Emptiness,
//! membership, support values, and interval hulls reduce to small dense LPs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, Failure, Options, Outcome};
use crate::scalar::{cast, Real};

#[derive(Debug, Error)]
pub enum SetError {
    /// Matrix and vector dimensions do not line up.
    #[error("shape mismatch in {0}: {1}")]
    Shape(&'static str, String),
    /// A generator bound is inverted or non-finite.
    #[error("invalid generator bound at index {0}: {1}")]
    BadBound(usize, String),
    /// The set is empty where a nonempty one is required.
    #[error("operation requires a nonempty set")]
    Empty,
    /// The LP kernel gave up before reaching a verdict.
    #[error("linear program failed: {0:?}")]
    Lp(Failure),
}

/// Three-valued emptiness verdict. `Unknown` means the LP kernel failed;
/// callers that must stay sound treat it as nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    Nonempty,
    Unknown(Failure),
}

/// `{ G xi + c : A xi = b, xi in [lo, hi] }` with finite per-generator bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtConstrainedZonotope<T: Real> {
    generators: DMatrix<T>,
    center: DVector<T>,
    constraints: DMatrix<T>,
    offsets: DVector<T>,
    xi_lo: DVector<T>,
    xi_hi: DVector<T>,
}

impl<T: Real> ExtConstrainedZonotope<T> {
    pub fn new(
        generators: DMatrix<T>,
        center: DVector<T>,
        constraints: DMatrix<T>,
        offsets: DVector<T>,
        xi_lo: DVector<T>,
        xi_hi: DVector<T>,
    ) -> Result<Self, SetError> {
        let n = center.len();
        let ng = generators.ncols();
        if generators.nrows() != n {
            return Err(SetError::Shape(
                "new",
                format!("generator rows {} vs center {}", generators.nrows(), n),
            ));
        }
        if constraints.ncols() != ng {
            return Err(SetError::Shape(
                "new",
                format!("constraint cols {} vs generators {}", constraints.ncols(), ng),
            ));
        }
        if constraints.nrows() != offsets.len() {
            return Err(SetError::Shape(
                "new",
                format!(
                    "constraint rows {} vs offsets {}",
                    constraints.nrows(),
                    offsets.len()
                ),
            ));
        }
        if xi_lo.len() != ng || xi_hi.len() != ng {
            return Err(SetError::Shape(
                "new",
                format!("bound lengths {}/{} vs generators {}", xi_lo.len(), xi_hi.len(), ng),
            ));
        }
        for j in 0..ng {
            if !xi_lo[j].is_finite() || !xi_hi[j].is_finite() {
                return Err(SetError::BadBound(j, "bound is not finite".into()));
            }
            if xi_lo[j] > xi_hi[j] {
                return Err(SetError::BadBound(
                    j,
                    format!("lo {} exceeds hi {}", xi_lo[j], xi_hi[j]),
                ));
            }
        }
        Ok(Self {
            generators,
            center,
            constraints,
            offsets,
            xi_lo,
            xi_hi,
        })
    }

    /// Axis-aligned box `center +/- half_widths` as an unconstrained set.
    pub fn from_box(center: DVector<T>, half_widths: DVector<T>) -> Result<Self, SetError> {
        let n = center.len();
        if half_widths.len() != n {
            return Err(SetError::Shape(
                "from_box",
                format!("half widths {} vs center {}", half_widths.len(), n),
            ));
        }
        for (j, h) in half_widths.iter().enumerate() {
            if !h.is_finite() || *h < T::zero() {
                return Err(SetError::BadBound(j, format!("half width {}", h)));
            }
        }
        let g = DMatrix::from_fn(n, n, |i, j| if i == j { half_widths[i] } else { T::zero() });
        Self::new(
            g,
            center,
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            DVector::from_element(n, -T::one()),
            DVector::from_element(n, T::one()),
        )
    }

    /// Singleton `{center}`.
    pub fn point(center: DVector<T>) -> Self {
        let n = center.len();
        Self {
            generators: DMatrix::zeros(n, 0),
            center,
            constraints: DMatrix::zeros(0, 0),
            offsets: DVector::zeros(0),
            xi_lo: DVector::zeros(0),
            xi_hi: DVector::zeros(0),
        }
    }

    /// Classical zonotope: given generators with symmetric unit bounds.
    pub fn symmetric(generators: DMatrix<T>, center: DVector<T>) -> Result<Self, SetError> {
        let ng = generators.ncols();
        Self::new(
            generators,
            center,
            DMatrix::zeros(0, ng),
            DVector::zeros(0),
            DVector::from_element(ng, -T::one()),
            DVector::from_element(ng, T::one()),
        )
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.ncols()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.nrows()
    }

    pub fn generators(&self) -> &DMatrix<T> {
        &self.generators
    }

    pub fn center(&self) -> &DVector<T> {
        &self.center
    }

    pub fn constraints(&self) -> &DMatrix<T> {
        &self.constraints
    }

    pub fn offsets(&self) -> &DVector<T> {
        &self.offsets
    }

    pub fn xi_lo(&self) -> &DVector<T> {
        &self.xi_lo
    }

    pub fn xi_hi(&self) -> &DVector<T> {
        &self.xi_hi
    }

    /// Image under a linear map: `T Z = (T G, T c, A, b, bounds)`.
    pub fn linear_map(&self, map: &DMatrix<T>) -> Result<Self, SetError> {
        if map.ncols() != self.dim() {
            return Err(SetError::Shape(
                "linear_map",
                format!("map cols {} vs dim {}", map.ncols(), self.dim()),
            ));
        }
        Ok(Self {
            generators: map * &self.generators,
            center: map * &self.center,
            constraints: self.constraints.clone(),
            offsets: self.offsets.clone(),
            xi_lo: self.xi_lo.clone(),
            xi_hi: self.xi_hi.clone(),
        })
    }

    /// Center shift; equivalent to a Minkowski sum with a singleton.
    pub fn translate(&self, v: &DVector<T>) -> Result<Self, SetError> {
        if v.len() != self.dim() {
            return Err(SetError::Shape(
                "translate",
                format!("shift {} vs dim {}", v.len(), self.dim()),
            ));
        }
        let mut out = self.clone();
        out.center += v;
        Ok(out)
    }

    /// Minkowski sum: generators concatenate, constraints stay independent.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self, SetError> {
        if other.dim() != self.dim() {
            return Err(SetError::Shape(
                "minkowski_sum",
                format!("dims {} vs {}", self.dim(), other.dim()),
            ));
        }
        let (n, g1, g2) = (self.dim(), self.generator_count(), other.generator_count());
        let (c1, c2) = (self.constraint_count(), other.constraint_count());
        let generators = DMatrix::from_fn(n, g1 + g2, |i, j| {
            if j < g1 {
                self.generators[(i, j)]
            } else {
                other.generators[(i, j - g1)]
            }
        });
        let constraints = DMatrix::from_fn(c1 + c2, g1 + g2, |i, j| {
            if i < c1 && j < g1 {
                self.constraints[(i, j)]
            } else if i >= c1 && j >= g1 {
                other.constraints[(i - c1, j - g1)]
            } else {
                T::zero()
            }
        });
        Self::new(
            generators,
            &self.center + &other.center,
            constraints,
            stack_vec(&self.offsets, &other.offsets),
            stack_vec(&self.xi_lo, &other.xi_lo),
            stack_vec(&self.xi_hi, &other.xi_hi),
        )
    }

    /// Generalized intersection `{ z in Z : map z in Y }`.
    ///
    /// The result keeps Z's generators and gains Y's as slack columns tied
    /// together by the coupling rows `map G_z xi_z - G_y xi_y = c_y - map c_z`.
    /// This is exact: no approximation is introduced.
    pub fn generalized_intersect(
        &self,
        other: &Self,
        map: &DMatrix<T>,
    ) -> Result<Self, SetError> {
        if map.ncols() != self.dim() || map.nrows() != other.dim() {
            return Err(SetError::Shape(
                "generalized_intersect",
                format!(
                    "map {}x{} vs Z dim {} and Y dim {}",
                    map.nrows(),
                    map.ncols(),
                    self.dim(),
                    other.dim()
                ),
            ));
        }
        let (n, g1, g2) = (self.dim(), self.generator_count(), other.generator_count());
        let (c1, c2) = (self.constraint_count(), other.constraint_count());
        let coupled = map * &self.generators;
        let generators = DMatrix::from_fn(n, g1 + g2, |i, j| {
            if j < g1 {
                self.generators[(i, j)]
            } else {
                T::zero()
            }
        });
        let rows = c1 + c2 + other.dim();
        let constraints = DMatrix::from_fn(rows, g1 + g2, |i, j| {
            if i < c1 {
                if j < g1 {
                    self.constraints[(i, j)]
                } else {
                    T::zero()
                }
            } else if i < c1 + c2 {
                if j >= g1 {
                    other.constraints[(i - c1, j - g1)]
                } else {
                    T::zero()
                }
            } else {
                let r = i - c1 - c2;
                if j < g1 {
                    coupled[(r, j)]
                } else {
                    -other.generators[(r, j - g1)]
                }
            }
        });
        let gap = &other.center - map * &self.center;
        let mut offsets = DVector::zeros(rows);
        for i in 0..c1 {
            offsets[i] = self.offsets[i];
        }
        for i in 0..c2 {
            offsets[c1 + i] = other.offsets[i];
        }
        for i in 0..other.dim() {
            offsets[c1 + c2 + i] = gap[i];
        }
        Self::new(
            generators,
            self.center.clone(),
            constraints,
            offsets,
            stack_vec(&self.xi_lo, &other.xi_lo),
            stack_vec(&self.xi_hi, &other.xi_hi),
        )
    }

    /// Plain intersection in the common space.
    pub fn intersect(&self, other: &Self) -> Result<Self, SetError> {
        let eye = DMatrix::identity(self.dim(), self.dim());
        self.generalized_intersect(other, &eye)
    }

    /// Emptiness via a phase-1 LP on the constraint rows. Sets without
    /// constraints are nonempty by the bound invariant.
    pub fn emptiness(&self) -> Emptiness {
        if self.constraint_count() == 0 {
            return Emptiness::Nonempty;
        }
        match lp::feasible_point(
            &self.constraints,
            &self.offsets,
            &self.xi_lo,
            &self.xi_hi,
            &Options::default(),
        ) {
            Outcome::Optimal(_) => Emptiness::Nonempty,
            Outcome::Infeasible => Emptiness::Empty,
            Outcome::Failed(f) => Emptiness::Unknown(f),
        }
    }

    /// Conservative emptiness: an LP failure counts as nonempty so that
    /// downstream pruning never discards a set it cannot certify empty.
    pub fn is_empty(&self) -> bool {
        matches!(self.emptiness(), Emptiness::Empty)
    }

    /// Membership test at the kernel's feasibility tolerance.
    pub fn contains_point(&self, x: &DVector<T>) -> Result<bool, SetError> {
        if x.len() != self.dim() {
            return Err(SetError::Shape(
                "contains_point",
                format!("point {} vs dim {}", x.len(), self.dim()),
            ));
        }
        let (nc, ng, n) = (self.constraint_count(), self.generator_count(), self.dim());
        let eq = DMatrix::from_fn(nc + n, ng, |i, j| {
            if i < nc {
                self.constraints[(i, j)]
            } else {
                self.generators[(i - nc, j)]
            }
        });
        let rhs = stack_vec(&self.offsets, &(x - &self.center));
        match lp::feasible_point(&eq, &rhs, &self.xi_lo, &self.xi_hi, &Options::default()) {
            Outcome::Optimal(_) => Ok(true),
            Outcome::Infeasible => Ok(false),
            Outcome::Failed(f) => Err(SetError::Lp(f)),
        }
    }

    /// Exact support value `max { d . z : z in Z }`.
    pub fn support_value(&self, direction: &DVector<T>) -> Result<T, SetError> {
        if direction.len() != self.dim() {
            return Err(SetError::Shape(
                "support_value",
                format!("direction {} vs dim {}", direction.len(), self.dim()),
            ));
        }
        let base = direction.dot(&self.center);
        if self.generator_count() == 0 {
            if self.constraint_count() > 0 && self.offsets.amax() > T::default_tol() {
                return Err(SetError::Empty);
            }
            return Ok(base);
        }
        let gd = self.generators.transpose() * direction;
        if self.constraint_count() == 0 {
            let mut v = base;
            for j in 0..gd.len() {
                v += (gd[j] * self.xi_lo[j]).max(gd[j] * self.xi_hi[j]);
            }
            return Ok(v);
        }
        match lp::maximize(
            &gd,
            &self.constraints,
            &self.offsets,
            &self.xi_lo,
            &self.xi_hi,
            &Options::default(),
        ) {
            Outcome::Optimal(opt) => Ok(base + opt.objective),
            Outcome::Infeasible => Err(SetError::Empty),
            Outcome::Failed(f) => Err(SetError::Lp(f)),
        }
    }

    /// Tight axis-aligned bounding box via 2n support LPs.
    pub fn interval_hull(&self) -> Result<IntervalHull<T>, SetError> {
        let n = self.dim();
        let mut lo = DVector::zeros(n);
        let mut hi = DVector::zeros(n);
        for i in 0..n {
            let mut dir = DVector::zeros(n);
            dir[i] = T::one();
            hi[i] = self.support_value(&dir)?;
            dir[i] = -T::one();
            lo[i] = -self.support_value(&dir)?;
            if lo[i] > hi[i] {
                // Opposite supports disagree only within tolerance; split the gap.
                let mid = (lo[i] + hi[i]) * cast(0.5);
                lo[i] = mid;
                hi[i] = mid;
            }
        }
        IntervalHull::new(lo, hi)
    }

    /// Upper bound on `max || z - center ||_2`, ignoring constraints.
    ///
    /// The generator box is re-centered first, so the bound covers the
    /// offset between the stored center and the box midpoint image. Two
    /// standard bounds are evaluated (column-norm sum and the 2-norm of the
    /// per-coordinate radii) and the smaller is returned; the latter is
    /// exact for axis-aligned boxes, the dominant case after hulling.
    pub fn radius_bound(&self) -> T {
        let n = self.dim();
        let ng = self.generator_count();
        let half = cast::<T>(0.5);
        let mut shift = DVector::<T>::zeros(n);
        let mut col_sum = T::zero();
        let mut row_sums = DVector::<T>::zeros(n);
        for j in 0..ng {
            let mid = (self.xi_lo[j] + self.xi_hi[j]) * half;
            let rad = (self.xi_hi[j] - self.xi_lo[j]) * half;
            let mut col_norm_sq = T::zero();
            for i in 0..n {
                let g = self.generators[(i, j)];
                shift[i] += g * mid;
                let scaled = (g * rad).abs();
                col_norm_sq += scaled * scaled;
                row_sums[i] += scaled;
            }
            col_sum += col_norm_sq.sqrt();
        }
        shift.norm() + col_sum.min(row_sums.norm())
    }

    /// Equivalent set with every generator bound normalized to `[-1, 1]`.
    ///
    /// Interchange helper: midpoints fold into the center and offsets,
    /// radii scale the generator and constraint columns.
    pub fn to_symmetric(&self) -> Self {
        let (n, ng, nc) = (self.dim(), self.generator_count(), self.constraint_count());
        let half = cast::<T>(0.5);
        let mut center = self.center.clone();
        let mut offsets = self.offsets.clone();
        let mut generators = self.generators.clone();
        let mut constraints = self.constraints.clone();
        for j in 0..ng {
            let mid = (self.xi_lo[j] + self.xi_hi[j]) * half;
            let rad = (self.xi_hi[j] - self.xi_lo[j]) * half;
            for i in 0..n {
                center[i] += self.generators[(i, j)] * mid;
                generators[(i, j)] *= rad;
            }
            for i in 0..nc {
                offsets[i] -= self.constraints[(i, j)] * mid;
                constraints[(i, j)] *= rad;
            }
        }
        Self {
            generators,
            center,
            constraints,
            offsets,
            xi_lo: DVector::from_element(ng, -T::one()),
            xi_hi: DVector::from_element(ng, T::one()),
        }
    }
}

fn stack_vec<T: Real>(a: &DVector<T>, b: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(a.len() + b.len());
    for i in 0..a.len() {
        out[i] = a[i];
    }
    for i in 0..b.len() {
        out[a.len() + i] = b[i];
    }
    out
}

/// Axis-aligned interval vector `[lo, hi]` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalHull<T: Real> {
    lo: DVector<T>,
    hi: DVector<T>,
}

impl<T: Real> IntervalHull<T> {
    pub fn new(lo: DVector<T>, hi: DVector<T>) -> Result<Self, SetError> {
        if lo.len() != hi.len() {
            return Err(SetError::Shape(
                "IntervalHull::new",
                format!("lo {} vs hi {}", lo.len(), hi.len()),
            ));
        }
        for i in 0..lo.len() {
            if !lo[i].is_finite() || !hi[i].is_finite() {
                return Err(SetError::BadBound(i, "bound is not finite".into()));
            }
            if lo[i] > hi[i] {
                return Err(SetError::BadBound(
                    i,
                    format!("lo {} exceeds hi {}", lo[i], hi[i]),
                ));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &DVector<T> {
        &self.lo
    }

    pub fn hi(&self) -> &DVector<T> {
        &self.hi
    }

    pub fn center(&self) -> DVector<T> {
        (&self.lo + &self.hi) * cast::<T>(0.5)
    }

    pub fn half_widths(&self) -> DVector<T> {
        (&self.hi - &self.lo) * cast::<T>(0.5)
    }

    /// Largest half width; the infinity norm of the box generator matrix.
    pub fn max_half_width(&self) -> T {
        self.half_widths().amax()
    }

    pub fn contains(&self, x: &DVector<T>, tol: T) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        (0..self.dim()).all(|i| x[i] >= self.lo[i] - tol && x[i] <= self.hi[i] + tol)
    }

    /// Box zonotope with this hull's extent.
    pub fn to_zonotope(&self) -> ExtConstrainedZonotope<T> {
        ExtConstrainedZonotope::from_box(self.center(), self.half_widths())
            .expect("hull invariants imply valid box")
    }
}

/// Flat interchange form of a set, used by the CLI step logs. Field order
/// is part of the format: n, n_g, n_c, G (row-major), c, A (row-major),
/// b, lo, hi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonotopeRecord {
    pub n: usize,
    pub n_g: usize,
    pub n_c: usize,
    #[serde(rename = "G")]
    pub g: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl<T: Real> From<&ExtConstrainedZonotope<T>> for ZonotopeRecord {
    fn from(z: &ExtConstrainedZonotope<T>) -> Self {
        let f = |x: T| x.to_f64().expect("scalar converts to f64");
        let (n, ng, nc) = (z.dim(), z.generator_count(), z.constraint_count());
        let mut g = Vec::with_capacity(n * ng);
        for i in 0..n {
            for j in 0..ng {
                g.push(f(z.generators[(i, j)]));
            }
        }
        let mut a = Vec::with_capacity(nc * ng);
        for i in 0..nc {
            for j in 0..ng {
                a.push(f(z.constraints[(i, j)]));
            }
        }
        ZonotopeRecord {
            n,
            n_g: ng,
            n_c: nc,
            g,
            c: z.center.iter().map(|x| f(*x)).collect(),
            a,
            b: z.offsets.iter().map(|x| f(*x)).collect(),
            lo: z.xi_lo.iter().map(|x| f(*x)).collect(),
            hi: z.xi_hi.iter().map(|x| f(*x)).collect(),
        }
    }
}

impl ZonotopeRecord {
    /// Rebuilds the set, revalidating every invariant.
    pub fn to_set<T: Real>(&self) -> Result<ExtConstrainedZonotope<T>, SetError> {
        if self.g.len() != self.n * self.n_g
            || self.c.len() != self.n
            || self.a.len() != self.n_c * self.n_g
            || self.b.len() != self.n_c
            || self.lo.len() != self.n_g
            || self.hi.len() != self.n_g
        {
            return Err(SetError::Shape("ZonotopeRecord", "field lengths".into()));
        }
        let g = DMatrix::from_fn(self.n, self.n_g, |i, j| cast(self.g[i * self.n_g + j]));
        let a = DMatrix::from_fn(self.n_c, self.n_g, |i, j| cast(self.a[i * self.n_g + j]));
        ExtConstrainedZonotope::new(
            g,
            DVector::from_iterator(self.n, self.c.iter().map(|x| cast(*x))),
            a,
            DVector::from_iterator(self.n_c, self.b.iter().map(|x| cast(*x))),
            DVector::from_iterator(self.n_g, self.lo.iter().map(|x| cast(*x))),
            DVector::from_iterator(self.n_g, self.hi.iter().map(|x| cast(*x))),
        )
    }
}
