//! Range-measurement geometry in the plane.
//!
//! A range reading to a neighbor confines the agent to an annulus (a ring)
//! around the neighbor's position estimate. Rings are not convex, so the
//! pipeline over-approximates them piecewise: split the ring into `m` equal
//! sectors, keep the sectors that can intersect the prior, and merge the
//! surviving span into one trapezoidal constrained zonotope (a wedge).
//!
//! Soundness direction everywhere is outward: every construction may only
//! grow the represented region, never shrink it. The sector trapezoid
//! contains its annulus sector exactly when the bearing span stays within a
//! quarter turn, which segmentation (`m >= 8`) guarantees per sector and the
//! wedge constructor re-checks after merging.

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::scalar::{cast, Real};
use crate::set::{Emptiness, ExtConstrainedZonotope, SetError};

#[derive(Debug, Error)]
pub enum GeomError {
    /// Range interval or measurement produced an impossible ring.
    #[error("invalid range data: {0}")]
    BadRange(String),
    /// Bearing span exceeds the quarter-turn representability limit.
    #[error("bearing span {0} rad exceeds the quarter-turn limit")]
    SpanTooWide(f64),
    /// Fewer than the minimum number of ring sectors.
    #[error("sector count {0} is below the minimum of 8")]
    TooFewSectors(usize),
    /// Every sector pruned: the prior cannot see the ring at all.
    #[error("no ring sector intersects the prior")]
    NoActiveSector,
    #[error(transparent)]
    Set(#[from] SetError),
}

/// Annulus `{ s : r_lo <= || s - anchor ||_2 <= r_hi }`.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeRing<T: Real> {
    anchor: Vector2<T>,
    r_lo: T,
    r_hi: T,
}

impl<T: Real> RangeRing<T> {
    pub fn anchor(&self) -> Vector2<T> {
        self.anchor
    }

    pub fn r_lo(&self) -> T {
        self.r_lo
    }

    pub fn r_hi(&self) -> T {
        self.r_hi
    }

    /// Exact membership, used by sampling audits.
    pub fn contains(&self, p: Vector2<T>, tol: T) -> bool {
        let d = (p - self.anchor).norm();
        d >= self.r_lo - tol && d <= self.r_hi + tol
    }
}

/// Bearing interval `[lo, hi]` with `hi - lo` within a quarter turn.
/// Angles are not reduced modulo a full turn, so an interval straddling the
/// positive x axis is written with `hi` beyond two pi.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingInterval<T: Real> {
    lo: T,
    hi: T,
}

impl<T: Real> BearingInterval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self, GeomError> {
        if !lo.is_finite() || !hi.is_finite() || hi < lo {
            return Err(GeomError::BadRange(format!("bearing interval [{}, {}]", lo, hi)));
        }
        let span = hi - lo;
        let limit = T::frac_pi_2() * (T::one() + cast(1e-9));
        if span > limit {
            return Err(GeomError::SpanTooWide(span.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn span(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) * cast(0.5)
    }
}

/// Contiguous run of ring sectors `q_lo ..= q_hi` modulo `m`.
/// `wrap` marks runs that cross the seam between sector `m - 1` and 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectorWindow {
    pub q_lo: usize,
    pub q_hi: usize,
    pub m: usize,
    pub wrap: bool,
}

impl SectorWindow {
    pub fn new(q_lo: usize, q_hi: usize, m: usize) -> Result<Self, GeomError> {
        if m < 8 {
            return Err(GeomError::TooFewSectors(m));
        }
        if q_lo >= m || q_hi >= m {
            return Err(GeomError::BadRange(format!(
                "window [{}, {}] outside 0..{}",
                q_lo, q_hi, m
            )));
        }
        Ok(Self {
            q_lo,
            q_hi,
            m,
            wrap: q_lo > q_hi,
        })
    }

    /// Number of sectors covered, counting both endpoints.
    pub fn span_sectors(&self) -> usize {
        if self.wrap {
            self.m - self.q_lo + self.q_hi + 1
        } else {
            self.q_hi - self.q_lo + 1
        }
    }

    /// Total covered arc, `span_sectors * 2 pi / m`.
    pub fn angular_span<T: Real>(&self) -> T {
        T::two_pi() * cast::<T>(self.span_sectors() as f64) / cast::<T>(self.m as f64)
    }

    /// Bearing interval of the covered arc; `hi` may exceed two pi when the
    /// window wraps.
    pub fn bearings<T: Real>(&self) -> Result<BearingInterval<T>, GeomError> {
        let step = T::two_pi() / cast::<T>(self.m as f64);
        let lo = step * cast::<T>(self.q_lo as f64);
        let hi = lo + self.angular_span();
        BearingInterval::new(lo, hi)
    }

    pub fn is_active(&self, q: usize) -> bool {
        if self.wrap {
            q >= self.q_lo || q <= self.q_hi
        } else {
            q >= self.q_lo && q <= self.q_hi
        }
    }
}

/// Outcome of pruning ring sectors against a prior.
#[derive(Debug, Clone)]
pub struct WindowSelection {
    pub window: SectorWindow,
    /// False when the active set had holes and the window is the smallest
    /// covering run; a hole signals the contiguity assumption failed.
    pub contiguous: bool,
    /// Sectors whose emptiness LP failed and were kept conservatively.
    pub lp_failures: usize,
}

/// Ring from a range measurement `y = true_range + r`, `r in [r_lo, r_hi]`.
/// The inner radius clamps at zero when the noise interval allows the
/// target to be arbitrarily close.
pub fn ring_from_range<T: Real>(
    measured: T,
    r_lo: T,
    r_hi: T,
    anchor: Vector2<T>,
) -> Result<RangeRing<T>, GeomError> {
    if !measured.is_finite() || !r_lo.is_finite() || !r_hi.is_finite() || r_lo > r_hi {
        return Err(GeomError::BadRange(format!(
            "measurement {} with noise [{}, {}]",
            measured, r_lo, r_hi
        )));
    }
    let hi = measured - r_lo;
    if hi < T::zero() {
        return Err(GeomError::BadRange(format!(
            "measurement {} below the noise floor",
            measured
        )));
    }
    Ok(RangeRing {
        anchor,
        r_lo: (measured - r_hi).max(T::zero()),
        r_hi: hi,
    })
}

/// Widens a ring by `pad` on both sides; used to absorb the neighbor's own
/// position uncertainty around its center.
pub fn inflate_ring<T: Real>(ring: &RangeRing<T>, pad: T) -> RangeRing<T> {
    debug_assert!(pad >= T::zero());
    RangeRing {
        anchor: ring.anchor,
        r_lo: (ring.r_lo - pad).max(T::zero()),
        r_hi: ring.r_hi + pad,
    }
}

/// Trapezoidal over-approximation of the annulus sector cut by `theta`.
///
/// Two generators sit on the sector's boundary rays with one-sided bounds
/// `[0, r_hi / cos(span / 2)]`, forming a cone from the anchor; a third
/// slack generator encodes the band between the inner chord and the outer
/// tangent along the bisector direction.
pub fn sector_zonotope<T: Real>(
    ring: &RangeRing<T>,
    theta: &BearingInterval<T>,
) -> Result<ExtConstrainedZonotope<T>, GeomError> {
    if ring.r_lo < T::zero() || ring.r_hi < ring.r_lo || !ring.r_hi.is_finite() {
        return Err(GeomError::BadRange(format!(
            "ring radii [{}, {}]",
            ring.r_lo, ring.r_hi
        )));
    }
    let half = theta.span() * cast(0.5);
    let cos_half = half.cos();
    debug_assert!(cos_half > T::zero());
    let u_hi = Vector2::new(theta.hi().cos(), theta.hi().sin());
    let u_lo = Vector2::new(theta.lo().cos(), theta.lo().sin());
    let bisect = theta.mid();
    let h_dir = Vector2::new(bisect.cos(), bisect.sin());
    let reach = ring.r_hi / cos_half;
    let sigma_lo = ring.r_lo * cos_half + h_dir.dot(&ring.anchor);
    let sigma_hi = ring.r_hi + h_dir.dot(&ring.anchor);

    let generators = DMatrix::from_fn(2, 3, |i, j| match j {
        0 => u_hi[i],
        1 => u_lo[i],
        _ => T::zero(),
    });
    let row = [h_dir.dot(&u_hi), h_dir.dot(&u_lo), sigma_lo - sigma_hi];
    let constraints = DMatrix::from_fn(1, 3, |_, j| row[j]);
    let offsets = DVector::from_element(1, sigma_lo - h_dir.dot(&ring.anchor));
    let xi_lo = DVector::from_vec(vec![T::zero(), T::zero(), T::zero()]);
    let xi_hi = DVector::from_vec(vec![reach, reach, T::one()]);
    let center = DVector::from_vec(vec![ring.anchor[0], ring.anchor[1]]);
    Ok(ExtConstrainedZonotope::new(
        generators,
        center,
        constraints,
        offsets,
        xi_lo,
        xi_hi,
    )?)
}

/// Splits a ring into `m` equal sectors, `q` covering bearings
/// `[2 pi q / m, 2 pi (q + 1) / m]`.
pub fn segment_ring<T: Real>(
    ring: &RangeRing<T>,
    m: usize,
) -> Result<Vec<ExtConstrainedZonotope<T>>, GeomError> {
    if m < 8 {
        return Err(GeomError::TooFewSectors(m));
    }
    let step = T::two_pi() / cast::<T>(m as f64);
    (0..m)
        .map(|q| {
            let lo = step * cast::<T>(q as f64);
            let theta = BearingInterval::new(lo, lo + step)?;
            sector_zonotope(ring, &theta)
        })
        .collect()
}

/// Keeps the sectors whose trapezoid can meet the prior (through `selector`,
/// mapping prior space onto the ring plane) and returns the smallest
/// contiguous window covering them.
///
/// The window's origin is rotated to the largest inactive gap, so a run
/// straddling the bearing seam is recognized instead of spanning the whole
/// circle. Sectors with failed emptiness LPs stay active (conservative).
pub fn select_active_window<T: Real>(
    sectors: &[ExtConstrainedZonotope<T>],
    prior: &ExtConstrainedZonotope<T>,
    selector: &DMatrix<T>,
) -> Result<WindowSelection, GeomError> {
    let m = sectors.len();
    if m < 8 {
        return Err(GeomError::TooFewSectors(m));
    }
    let mut active = Vec::new();
    let mut lp_failures = 0usize;
    for (q, sector) in sectors.iter().enumerate() {
        let meet = prior.generalized_intersect(sector, selector)?;
        match meet.emptiness() {
            Emptiness::Empty => {}
            Emptiness::Nonempty => active.push(q),
            Emptiness::Unknown(f) => {
                log::warn!("sector {} emptiness LP failed ({:?}); keeping it", q, f);
                lp_failures += 1;
                active.push(q);
            }
        }
    }
    if active.is_empty() {
        return Err(GeomError::NoActiveSector);
    }
    if active.len() == m {
        return Ok(WindowSelection {
            window: SectorWindow::new(0, m - 1, m)?,
            contiguous: true,
            lp_failures,
        });
    }
    // Largest cyclic run of inactive sectors; the window is its complement.
    let k = active.len();
    let mut best_gap = 0usize;
    let mut best_i = 0usize;
    for i in 0..k {
        let next = active[(i + 1) % k];
        let gap = (next + m - active[i]) % m;
        let holes = gap.saturating_sub(1);
        if holes > best_gap {
            best_gap = holes;
            best_i = i;
        }
    }
    let window = SectorWindow::new(active[(best_i + 1) % k], active[best_i], m)?;
    Ok(WindowSelection {
        window,
        contiguous: window.span_sectors() == k,
        lp_failures,
    })
}

/// Single trapezoid covering every sector in the window, per the merged
/// parameters: bearings `[2 pi q_lo / m, 2 pi (q_hi + 1) / m]` with the
/// inner chord at `r_lo cos(half span)` and the outer tangent at `r_hi`.
pub fn merged_wedge<T: Real>(
    ring: &RangeRing<T>,
    window: &SectorWindow,
) -> Result<ExtConstrainedZonotope<T>, GeomError> {
    let theta = window.bearings::<T>()?;
    sector_zonotope(ring, &theta)
}

/// Largest window arc compatible with the separation condition: a third of
/// a turn from the chord-length argument, plus one sector of quantization
/// slack at each end.
pub fn contiguous_span_bound(m: usize) -> f64 {
    std::f64::consts::FRAC_PI_3 + 4.0 * std::f64::consts::PI / m as f64
}

/// Diagnostics accompanying a relative-measurement wedge.
#[derive(Debug, Clone)]
pub struct RelativeDiagnostics {
    pub window: SectorWindow,
    pub contiguous: bool,
    pub lp_failures: usize,
    /// Numeric check of the separation condition backing the contiguity
    /// guarantee: prior diameter below the inflated inner radius, which in
    /// turn is below the anchor-to-prior distance. Evaluated with outer
    /// bounds, so `false` may be a false alarm; `true` is trustworthy.
    pub separation_ok: bool,
    /// Pad added to the ring, i.e. the neighbor position uncertainty
    /// radius. Reported as f64 to keep the struct scalar-independent.
    pub inflation: f64,
}

/// Full relative-measurement pipeline: anchor the ring at the neighbor's
/// center, widen it by the neighbor's radius bound, segment, prune against
/// the prior, and merge the surviving window into one wedge.
///
/// The wedge is guaranteed to contain every point of
/// `(neighbor + ring) intersected with the prior`, which is what the filter
/// intersects away.
pub fn relative_measurement_set<T: Real>(
    neighbor_posterior: &ExtConstrainedZonotope<T>,
    prior: &ExtConstrainedZonotope<T>,
    measured: T,
    r_lo: T,
    r_hi: T,
    selector: &DMatrix<T>,
    m: usize,
) -> Result<(ExtConstrainedZonotope<T>, RelativeDiagnostics), GeomError> {
    let mapped = neighbor_posterior.linear_map(selector)?;
    if mapped.dim() != 2 {
        return Err(GeomError::BadRange(format!(
            "selector must map into the plane, got dim {}",
            mapped.dim()
        )));
    }
    let anchor = Vector2::new(mapped.center()[0], mapped.center()[1]);
    let pad = mapped.radius_bound();
    let ring = inflate_ring(&ring_from_range(measured, r_lo, r_hi, anchor)?, pad);

    let sectors = segment_ring(&ring, m)?;
    let selection = select_active_window(&sectors, prior, selector)?;
    let wedge = merged_wedge(&ring, &selection.window)?;

    let prior_pos = prior.linear_map(selector)?;
    let prior_center = Vector2::new(prior_pos.center()[0], prior_pos.center()[1]);
    let prior_rad = prior_pos.radius_bound();
    let two = cast::<T>(2.0);
    let dist_lb = (anchor - prior_center).norm() - prior_rad;
    let separation_ok = two * prior_rad < ring.r_lo && ring.r_lo < dist_lb;

    Ok((
        wedge,
        RelativeDiagnostics {
            window: selection.window,
            contiguous: selection.contiguous,
            lp_failures: selection.lp_failures,
            separation_ok,
            inflation: pad.to_f64().unwrap_or(f64::NAN),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    type Z = ExtConstrainedZonotope<f64>;
    type V = DVector<f64>;

    fn v2(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn v(x: &[f64]) -> V {
        V::from_row_slice(x)
    }

    fn eye2() -> DMatrix<f64> {
        DMatrix::identity(2, 2)
    }

    #[test]
    fn ring_from_range_clamps_and_rejects() {
        let ring = ring_from_range(1.0, -0.1, 0.1, v2(0.0, 0.0)).unwrap();
        assert!((ring.r_lo() - 0.9).abs() < 1e-12);
        assert!((ring.r_hi() - 1.1).abs() < 1e-12);

        // Noise wider than the reading: the inner radius clamps to zero.
        let disk = ring_from_range(0.05, -0.1, 0.1, v2(0.0, 0.0)).unwrap();
        assert_eq!(disk.r_lo(), 0.0);

        // Reading below the lowest representable range is contradictory.
        assert!(ring_from_range(-0.2, -0.1, 0.1, v2(0.0, 0.0)).is_err());
    }

    #[test]
    fn bearing_interval_rejects_wide_spans() {
        assert!(BearingInterval::new(0.0, FRAC_PI_2).is_ok());
        assert!(BearingInterval::new(0.0, FRAC_PI_2 + 0.01).is_err());
        assert!(BearingInterval::new(1.0, 0.5).is_err());
    }

    #[test]
    fn quarter_sector_contains_its_arc_corners() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 1.0,
            r_hi: 2.0,
        };
        let theta = BearingInterval::new(0.0, FRAC_PI_2).unwrap();
        let wedge = sector_zonotope(&ring, &theta).unwrap();
        for p in [[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]] {
            assert!(
                wedge.contains_point(&v(&p)).unwrap(),
                "corner {:?} must be inside",
                p
            );
        }
        // Apex is cut away by the inner chord, far points by the tangent.
        assert!(!wedge.contains_point(&v(&[0.0, 0.0])).unwrap());
        assert!(!wedge.contains_point(&v(&[3.0, 0.0])).unwrap());
        assert!(!wedge.contains_point(&v(&[-0.1, 0.5])).unwrap());
        let hull = wedge.interval_hull().unwrap();
        for p in [[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]] {
            assert!(hull.contains(&v(&p), 1e-9));
        }
    }

    #[test]
    fn degenerate_sector_is_a_point() {
        let ring = RangeRing {
            anchor: v2(0.5, -0.5),
            r_lo: 1.0,
            r_hi: 1.0,
        };
        let theta = BearingInterval::new(0.0, 0.0).unwrap();
        let z = sector_zonotope(&ring, &theta).unwrap();
        assert!(z.contains_point(&v(&[1.5, -0.5])).unwrap());
        assert!(!z.contains_point(&v(&[1.51, -0.5])).unwrap());
        assert!(!z.contains_point(&v(&[0.5, -0.5])).unwrap());
    }

    #[test]
    fn sector_contains_annulus_samples() {
        let ring = RangeRing {
            anchor: v2(1.0, 2.0),
            r_lo: 3.0,
            r_hi: 4.0,
        };
        let theta = BearingInterval::new(0.3, 0.3 + PI / 5.0).unwrap();
        let z = sector_zonotope(&ring, &theta).unwrap();
        let steps = 17;
        for i in 0..=steps {
            for j in 0..=steps {
                let ang = theta.lo() + theta.span() * (i as f64) / (steps as f64);
                let rad = ring.r_lo() + (ring.r_hi() - ring.r_lo()) * (j as f64) / (steps as f64);
                let p = v(&[1.0 + rad * ang.cos(), 2.0 + rad * ang.sin()]);
                assert!(z.contains_point(&p).unwrap(), "miss at angle {} radius {}", ang, rad);
            }
        }
    }

    #[test]
    fn segmentation_covers_the_ring() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 2.0,
            r_hi: 2.5,
        };
        assert!(segment_ring(&ring, 7).is_err());
        let sectors = segment_ring(&ring, 16).unwrap();
        assert_eq!(sectors.len(), 16);
        for i in 0..64 {
            let ang = 2.0 * PI * (i as f64 + 0.5) / 64.0;
            let rad = 2.0 + 0.5 * ((i * 7 % 10) as f64) / 10.0;
            let q = ((ang / (2.0 * PI / 16.0)) as usize).min(15);
            let p = v(&[rad * ang.cos(), rad * ang.sin()]);
            assert!(
                sectors[q].contains_point(&p).unwrap(),
                "sector {} misses its own arc point at angle {}",
                q,
                ang
            );
        }
    }

    #[test]
    fn window_selection_finds_contiguous_run() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 4.5,
            r_hi: 5.5,
        };
        let sectors = segment_ring(&ring, 32).unwrap();
        // Prior box sits around bearing pi/4 at radius 5.
        let c = 5.0 / std::f64::consts::SQRT_2;
        let prior = Z::from_box(v(&[c, c]), v(&[0.4, 0.4])).unwrap();
        let sel = select_active_window(&sectors, &prior, &eye2()).unwrap();
        assert!(sel.contiguous);
        assert_eq!(sel.lp_failures, 0);
        assert!(sel.window.is_active(4), "bearing pi/4 is sector 4 of 32");
        assert!(sel.window.span_sectors() < 8, "small prior, small window");
    }

    #[test]
    fn window_selection_handles_seam_wrap() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 4.5,
            r_hi: 5.5,
        };
        let sectors = segment_ring(&ring, 32).unwrap();
        // Prior straddles the positive x axis, hitting sectors on both
        // sides of the seam.
        let prior = Z::from_box(v(&[5.0, 0.0]), v(&[0.3, 0.8])).unwrap();
        let sel = select_active_window(&sectors, &prior, &eye2()).unwrap();
        assert!(sel.window.wrap, "window should cross the seam");
        assert!(sel.contiguous);
        assert!(sel.window.is_active(0));
        assert!(sel.window.is_active(31));
        let wedge = merged_wedge(&ring, &sel.window).unwrap();
        assert!(wedge.contains_point(&v(&[5.0, 0.2])).unwrap());
        assert!(wedge.contains_point(&v(&[5.0, -0.2])).unwrap());
    }

    #[test]
    fn no_active_sector_is_an_error() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 4.5,
            r_hi: 5.5,
        };
        let sectors = segment_ring(&ring, 16).unwrap();
        let prior = Z::from_box(v(&[0.0, 0.0]), v(&[0.5, 0.5])).unwrap();
        match select_active_window(&sectors, &prior, &eye2()) {
            Err(GeomError::NoActiveSector) => {}
            other => panic!("expected NoActiveSector, got {:?}", other.map(|s| s.window)),
        }
    }

    #[test]
    fn oversized_merge_is_rejected() {
        let ring = RangeRing {
            anchor: v2(0.0, 0.0),
            r_lo: 1.0,
            r_hi: 1.5,
        };
        // A prior that surrounds the whole ring keeps every sector active;
        // merging a full turn must fail rather than fabricate a wedge.
        let sectors = segment_ring(&ring, 16).unwrap();
        let prior = Z::from_box(v(&[0.0, 0.0]), v(&[3.0, 3.0])).unwrap();
        let sel = select_active_window(&sectors, &prior, &eye2()).unwrap();
        assert_eq!(sel.window.span_sectors(), 16);
        match merged_wedge(&ring, &sel.window) {
            Err(GeomError::SpanTooWide(_)) => {}
            other => panic!("expected SpanTooWide, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn relative_set_covers_truth() {
        // Tight neighbor estimate near the origin; the agent truly sits at
        // bearing 60 degrees, radius 6 from the estimate center. The prior
        // is thin enough for the separation condition to hold.
        let anchor = v(&[0.1, -0.1]);
        let neighbor = Z::from_box(anchor.clone(), v(&[0.02, 0.02])).unwrap();
        let truth = &anchor + v(&[6.0 * 0.5, 6.0 * (0.75f64).sqrt()]);
        let prior = Z::from_box(&truth + v(&[0.02, 0.03]), v(&[0.1, 0.1])).unwrap();
        let range = (&truth - &anchor).norm();
        let (wedge, diag) =
            relative_measurement_set(&neighbor, &prior, range - 0.05, -0.1, 0.1, &eye2(), 64)
                .unwrap();
        assert!(wedge.contains_point(&truth).unwrap());
        assert!(diag.contiguous);
        assert!(diag.separation_ok);
        assert!(diag.inflation > 0.0);
        // Window obeys the contiguity span bound with one sector of slack
        // on each side.
        let bound = std::f64::consts::FRAC_PI_3 + 4.0 * PI / 64.0;
        assert!(diag.window.angular_span::<f64>() < bound);
    }

    #[test]
    fn fat_prior_fails_the_separation_check() {
        // Same geometry with a prior radius above the noise scale: the
        // wedge still covers the truth, but the diagnostic must flag that
        // the contiguity guarantee does not apply.
        let anchor = v(&[0.1, -0.1]);
        let neighbor = Z::from_box(anchor.clone(), v(&[0.2, 0.2])).unwrap();
        let truth = &anchor + v(&[6.0 * 0.5, 6.0 * (0.75f64).sqrt()]);
        let prior = Z::from_box(&truth + v(&[0.3, -0.2]), v(&[1.0, 1.0])).unwrap();
        let range = (&truth - &anchor).norm();
        let (wedge, diag) =
            relative_measurement_set(&neighbor, &prior, range + 0.05, -0.1, 0.1, &eye2(), 64)
                .unwrap();
        assert!(wedge.contains_point(&truth).unwrap());
        assert!(!diag.separation_ok);
    }
}
