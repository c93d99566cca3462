//! Abstract pattern spaces: objects supporting restriction to a closed set
//! (`wedge`), translation, and a support notion, satisfying
//!
//! * composition: `P ∧ (C1 ∩ C2) = (P ∧ C1) ∧ C2`
//! * support: `P ∧ C = P` iff `C ⊇ supp(P)`
//! * equivariance: `(P ∧ C) + x = (P + x) ∧ (C + x)`
//!
//! Four concrete implementations live here: bare point sets, labeled point
//! sets, patches of axis-aligned tiles, and weighted Dirac combs. All carry
//! either exact quadratic-field coordinates or floats with a tolerance; a
//! region records the window on which the object is fully known, and patch
//! queries outside that window are errors, never silent truncations.

pub mod axioms;
mod metric;
mod patch;
mod pointset;

pub use metric::{
    derivability_samples, entourage_align, entourage_test, flc_census, flc_census_on_points,
    local_derivability_check, local_match_dist, match_dist_detail, repetitivity_radius,
    CensusClass, CensusReport, DerivabilityReport, Falsifier, MatchDistResult, MATCH_DIST_CAP,
};
pub use patch::{Atom, Patch, Tile, Weight, WeightedComb};
pub use pointset::{
    default_anchors, matched_set, patch_at, patch_eq, LabeledPointSet, MatchEngine, PointSet,
};

use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use num_rational::BigRational;
use std::cmp::Ordering;

/// Relative float slack under which comparisons escalate to exact
/// arithmetic. Float images of exact coordinates are accurate to a few ulps,
/// so anything farther apart than `delta_for(scale)` is decided in floats.
pub(crate) fn delta_for(scale: f64) -> f64 {
    1e-9 * scale.abs().max(1.0)
}

/// A point in either the exact or the float coordinate universe.
#[derive(Clone, Debug, PartialEq)]
pub enum Vecd {
    Exact(Vec<QuadReal>),
    Float(Vec<f64>),
}

impl Vecd {
    pub fn dim(&self) -> usize {
        match self {
            Vecd::Exact(v) => v.len(),
            Vecd::Float(v) => v.len(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Vecd::Exact(_))
    }

    pub fn zero_like(&self) -> Vecd {
        match self {
            Vecd::Exact(v) => Vecd::Exact(vec![QuadReal::zero(); v.len()]),
            Vecd::Float(v) => Vecd::Float(vec![0.0; v.len()]),
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self {
            Vecd::Exact(v) => v.iter().map(|c| c.to_f64()).collect(),
            Vecd::Float(v) => v.clone(),
        }
    }

    pub fn exact_coords(&self) -> Option<&[QuadReal]> {
        match self {
            Vecd::Exact(v) => Some(v),
            Vecd::Float(_) => None,
        }
    }

    pub fn add(&self, other: &Vecd) -> Result<Vecd> {
        self.zip(other, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub(&self, other: &Vecd) -> Result<Vecd> {
        self.zip(other, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    fn zip(
        &self,
        other: &Vecd,
        fe: impl Fn(&QuadReal, &QuadReal) -> Result<QuadReal>,
        ff: impl Fn(f64, f64) -> f64,
    ) -> Result<Vecd> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(self.dim(), other.dim()));
        }
        match (self, other) {
            (Vecd::Exact(a), Vecd::Exact(b)) => {
                let mut out = Vec::with_capacity(a.len());
                for (x, y) in a.iter().zip(b) {
                    out.push(fe(x, y)?);
                }
                Ok(Vecd::Exact(out))
            }
            (Vecd::Float(a), Vecd::Float(b)) => {
                Ok(Vecd::Float(a.iter().zip(b).map(|(x, y)| ff(*x, *y)).collect()))
            }
            _ => Err(Error::ArithMismatch),
        }
    }

    pub fn neg(&self) -> Vecd {
        match self {
            Vecd::Exact(v) => Vecd::Exact(v.iter().map(|c| -c).collect()),
            Vecd::Float(v) => Vecd::Float(v.iter().map(|c| -c).collect()),
        }
    }

    pub fn from_f64s(coords: &[f64], exact: bool) -> Result<Vecd> {
        if exact {
            let mut v = Vec::with_capacity(coords.len());
            for c in coords {
                v.push(QuadReal::from_f64_exact(*c)?);
            }
            Ok(Vecd::Exact(v))
        } else {
            Ok(Vecd::Float(coords.to_vec()))
        }
    }
}

pub(crate) fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Exact comparison of an exact value against a float constant (every finite
/// f64 is an exact rational).
pub(crate) fn cmp_exact_f64(v: &QuadReal, x: f64) -> Ordering {
    let approx = v.to_f64();
    if (approx - x).abs() > delta_for(approx.abs().max(x.abs())) {
        return if approx < x { Ordering::Less } else { Ordering::Greater };
    }
    v.checked_cmp(&QuadReal::rational(rational_from_f64(x))).expect("rational comparison")
}

/// Axis-aligned box window on which a pattern is fully known.
///
/// `margin` documents the extra slack a generator enumerated beyond the
/// requested box; coverage of query balls is judged against `[lo, hi]` only.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub margin: f64,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, margin: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidRegion("lo/hi dimension mismatch".into()));
        }
        if !(margin >= 0.0) || !margin.is_finite() {
            return Err(Error::InvalidRegion(format!("margin {margin} must be finite and >= 0")));
        }
        for (l, h) in lo.iter().zip(&hi) {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::InvalidRegion(format!("need lo < hi, got [{l}, {h}]")));
            }
        }
        Ok(Region { lo, hi, margin })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Region::new(vec![lo], vec![hi], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn span(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    /// Is the closed ball B(x, r) inside [lo, hi]^d? Exact for exact anchors.
    pub fn covers_ball(&self, x: &Vecd, r: f64) -> bool {
        if x.dim() != self.dim() {
            return false;
        }
        match x {
            Vecd::Float(v) => {
                v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| c - r >= *l && c + r <= *h)
            }
            Vecd::Exact(v) => v.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| {
                cmp_exact_f64(c, l + r) != Ordering::Less && cmp_exact_f64(c, h - r) != Ordering::Greater
            }),
        }
    }

    pub fn require_covered(&self, x: &Vecd, r: f64) -> Result<()> {
        if self.covers_ball(x, r) {
            Ok(())
        } else {
            Err(Error::InsufficientWindow {
                center: format!("{:?}", x.to_f64_vec()),
                radius: r,
            })
        }
    }

    pub fn contains_f64(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (l, h))| *c >= *l && *c <= *h)
    }

    pub fn translated(&self, x: &[f64]) -> Region {
        Region {
            lo: self.lo.iter().zip(x).map(|(l, t)| l + t).collect(),
            hi: self.hi.iter().zip(x).map(|(h, t)| h + t).collect(),
            margin: self.margin,
        }
    }
}

/// Scalar band bound. Exact bounds keep membership decidable after
/// translations whose shift is irrational or not a dyadic rational.
#[derive(Clone, Debug)]
pub enum Bound {
    Float(f64),
    Exact(QuadReal),
}

impl Bound {
    pub fn to_f64(&self) -> f64 {
        match self {
            Bound::Float(v) => *v,
            Bound::Exact(q) => q.to_f64(),
        }
    }

    /// Where `v` sits relative to this bound.
    fn position(&self, v: &QuadReal) -> Result<Ordering> {
        match self {
            Bound::Float(b) => Ok(cmp_exact_f64(v, *b)),
            Bound::Exact(b) => v.checked_cmp(b),
        }
    }

    /// Shift by an exact amount, promoting a float bound to its exact
    /// dyadic value first so nothing is rounded.
    fn shifted_exact(&self, by: &QuadReal) -> Result<Bound> {
        let base = match self {
            Bound::Float(v) => QuadReal::from_f64_exact(*v)?,
            Bound::Exact(q) => q.clone(),
        };
        Ok(Bound::Exact(base.checked_add(by)?))
    }
}

/// Closed-set descriptor with decidable membership.
#[derive(Clone, Debug)]
pub enum ClosedSet {
    Ball { center: Vecd, radius: f64 },
    Box { lo: Vecd, hi: Vecd },
    /// { x : lo <= <normal, x> <= hi }
    HalfspaceBand { normal: Vecd, lo: Bound, hi: Bound },
    Union(Vec<ClosedSet>),
    Intersection(Vec<ClosedSet>),
}

impl ClosedSet {
    pub fn ball_at_origin(dim: usize, radius: f64, exact: bool) -> ClosedSet {
        let center = if exact {
            Vecd::Exact(vec![QuadReal::zero(); dim])
        } else {
            Vecd::Float(vec![0.0; dim])
        };
        ClosedSet::Ball { center, radius }
    }

    pub fn translate(&self, x: &Vecd) -> Result<ClosedSet> {
        Ok(match self {
            ClosedSet::Ball { center, radius } => {
                ClosedSet::Ball { center: center.add(x)?, radius: *radius }
            }
            ClosedSet::Box { lo, hi } => ClosedSet::Box { lo: lo.add(x)?, hi: hi.add(x)? },
            ClosedSet::HalfspaceBand { normal, lo, hi } => {
                // <n, p> in [lo, hi] shifts by <n, x>, exactly when possible.
                let (lo, hi) = match (normal, x) {
                    (Vecd::Exact(n), Vecd::Exact(t)) => {
                        let shift = dot_exact(n, t)?;
                        (lo.shifted_exact(&shift)?, hi.shifted_exact(&shift)?)
                    }
                    _ => {
                        let shift = dot_mixed(normal, x)?;
                        (Bound::Float(lo.to_f64() + shift), Bound::Float(hi.to_f64() + shift))
                    }
                };
                ClosedSet::HalfspaceBand { normal: normal.clone(), lo, hi }
            }
            ClosedSet::Union(parts) => {
                ClosedSet::Union(parts.iter().map(|c| c.translate(x)).collect::<Result<_>>()?)
            }
            ClosedSet::Intersection(parts) => {
                ClosedSet::Intersection(parts.iter().map(|c| c.translate(x)).collect::<Result<_>>()?)
            }
        })
    }

    /// Membership; exact whenever the queried point is exact.
    pub fn contains_point(&self, p: &Vecd) -> Result<bool> {
        match self {
            ClosedSet::Ball { center, radius } => ball_contains(center, *radius, p),
            ClosedSet::Box { lo, hi } => {
                let ge = cmp_vec_le(lo, p)?;
                let le = cmp_vec_le(p, hi)?;
                Ok(ge && le)
            }
            ClosedSet::HalfspaceBand { normal, lo, hi } => match (normal, p) {
                (Vecd::Exact(n), Vecd::Exact(q)) => {
                    let acc = dot_exact(n, q)?;
                    Ok(lo.position(&acc)? != Ordering::Less
                        && hi.position(&acc)? != Ordering::Greater)
                }
                _ => {
                    let v: f64 = normal
                        .to_f64_vec()
                        .iter()
                        .zip(p.to_f64_vec())
                        .map(|(a, b)| a * b)
                        .sum();
                    Ok(v >= lo.to_f64() && v <= hi.to_f64())
                }
            },
            ClosedSet::Union(parts) => {
                for c in parts {
                    if c.contains_point(p)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            ClosedSet::Intersection(parts) => {
                for c in parts {
                    if !c.contains_point(p)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Box containment used for tiles. Exact for ball/box/band/intersection;
    /// for unions it checks containment in a single member, which is the
    /// consistent per-element rule the axioms are stated over.
    pub fn contains_box(&self, lo: &Vecd, hi: &Vecd) -> Result<bool> {
        match self {
            ClosedSet::Ball { center, radius } => {
                // Farthest corner of the box from the center must be inside.
                let corners = box_corners(lo, hi)?;
                for c in &corners {
                    if !ball_contains(center, *radius, c)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ClosedSet::Box { lo: blo, hi: bhi } => {
                Ok(cmp_vec_le(blo, lo)? && cmp_vec_le(hi, bhi)?)
            }
            ClosedSet::HalfspaceBand { .. } => {
                // Linear form attains extremes at corners.
                let corners = box_corners(lo, hi)?;
                for c in &corners {
                    if !self.contains_point(c)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            ClosedSet::Union(parts) => {
                for c in parts {
                    if c.contains_box(lo, hi)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            ClosedSet::Intersection(parts) => {
                for c in parts {
                    if !c.contains_box(lo, hi)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Float bounding box, or None when the descriptor is unbounded
    /// (halfspace bands, and intersections are bounded only if some member
    /// is). Used to check window coverage before alignment searches.
    pub fn bbox(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ClosedSet::Ball { center, radius } => {
                let c = center.to_f64_vec();
                Some((c.iter().map(|x| x - radius).collect(), c.iter().map(|x| x + radius).collect()))
            }
            ClosedSet::Box { lo, hi } => Some((lo.to_f64_vec(), hi.to_f64_vec())),
            ClosedSet::HalfspaceBand { .. } => None,
            ClosedSet::Union(parts) => {
                let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
                for p in parts {
                    let (lo, hi) = p.bbox()?;
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((alo, ahi)) => (
                            alo.iter().zip(&lo).map(|(a, b)| a.min(*b)).collect(),
                            ahi.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect(),
                        ),
                    });
                }
                acc
            }
            ClosedSet::Intersection(parts) => {
                let mut acc: Option<(Vec<f64>, Vec<f64>)> = None;
                for p in parts {
                    if let Some((lo, hi)) = p.bbox() {
                        acc = Some(match acc {
                            None => (lo, hi),
                            Some((alo, ahi)) => (
                                alo.iter().zip(&lo).map(|(a, b)| a.max(*b)).collect(),
                                ahi.iter().zip(&hi).map(|(a, b)| a.min(*b)).collect(),
                            ),
                        });
                    }
                }
                acc
            }
        }
    }
}

fn box_corners(lo: &Vecd, hi: &Vecd) -> Result<Vec<Vecd>> {
    let d = lo.dim();
    if d != hi.dim() {
        return Err(Error::DimMismatch(d, hi.dim()));
    }
    let mut out = Vec::with_capacity(1 << d);
    for mask in 0..(1u32 << d) {
        let corner = match (lo, hi) {
            (Vecd::Exact(l), Vecd::Exact(h)) => Vecd::Exact(
                (0..d).map(|i| if mask >> i & 1 == 1 { h[i].clone() } else { l[i].clone() }).collect(),
            ),
            (Vecd::Float(l), Vecd::Float(h)) => {
                Vecd::Float((0..d).map(|i| if mask >> i & 1 == 1 { h[i] } else { l[i] }).collect())
            }
            _ => return Err(Error::ArithMismatch),
        };
        out.push(corner);
    }
    Ok(out)
}

/// Componentwise a <= b; exact when both sides exact.
fn cmp_vec_le(a: &Vecd, b: &Vecd) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    match (a, b) {
        (Vecd::Exact(x), Vecd::Exact(y)) => {
            for (u, v) in x.iter().zip(y) {
                if u.checked_cmp(v)? == Ordering::Greater {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(a.to_f64_vec().iter().zip(b.to_f64_vec()).all(|(u, v)| *u <= v)),
    }
}

/// ||p - center|| <= radius; exact whenever the point and center are exact.
pub(crate) fn ball_contains(center: &Vecd, radius: f64, p: &Vecd) -> Result<bool> {
    if center.dim() != p.dim() {
        return Err(Error::DimMismatch(center.dim(), p.dim()));
    }
    match (center, p) {
        (Vecd::Exact(c), Vecd::Exact(q)) => {
            // Float prefilter, exact confirmation near the boundary.
            let dist2: f64 = c
                .iter()
                .zip(q)
                .map(|(a, b)| {
                    let d = a.to_f64() - b.to_f64();
                    d * d
                })
                .sum();
            let r2 = radius * radius;
            let slack = delta_for(r2.max(dist2));
            if dist2 > r2 + slack {
                return Ok(false);
            }
            if dist2 < r2 - slack {
                return Ok(true);
            }
            let mut acc = QuadReal::zero();
            for (a, b) in c.iter().zip(q) {
                let d = b.checked_sub(a)?;
                acc = acc.checked_add(&d.checked_mul(&d)?)?;
            }
            let rr = QuadReal::rational(rational_from_f64(radius));
            let rr2 = rr.checked_mul(&rr)?;
            Ok(acc.checked_cmp(&rr2)? != Ordering::Greater)
        }
        _ => {
            let cf = center.to_f64_vec();
            let pf = p.to_f64_vec();
            let dist2: f64 = cf.iter().zip(&pf).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(dist2 <= radius * radius)
        }
    }
}

fn dot_mixed(a: &Vecd, b: &Vecd) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    Ok(a.to_f64_vec().iter().zip(b.to_f64_vec()).map(|(x, y)| x * y).sum())
}

fn dot_exact(a: &[QuadReal], b: &[QuadReal]) -> Result<QuadReal> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch(a.len(), b.len()));
    }
    let mut acc = QuadReal::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc.checked_add(&x.checked_mul(y)?)?;
    }
    Ok(acc)
}

/// Common interface for the four pattern implementations.
pub trait Pattern: Sized + Clone {
    fn dim(&self) -> usize;
    fn is_empty(&self) -> bool;
    fn region(&self) -> &Region;

    /// Restriction P ∧ C. Region bookkeeping is unchanged: the restriction
    /// is still known on the same window.
    fn wedge(&self, c: &ClosedSet) -> Result<Self>;

    fn translate(&self, x: &Vecd) -> Result<Self>;

    /// Is every element of the pattern inside C? This is the per-element
    /// reading of `C ⊇ supp(P)` and the exact complement of `wedge`.
    fn supported_by(&self, c: &ClosedSet) -> Result<bool>;

    /// Content equality. `tol = 0` requires exact coordinates and decides
    /// exactly; `tol > 0` compares float views pairwise after lexicographic
    /// sort (deterministic, symmetric; an equivalence only at tol = 0).
    fn pattern_eq(&self, other: &Self, tol: f64) -> Result<bool>;

    /// Minimal closed descriptor containing every element: a union of
    /// zero-radius balls for point-supported patterns, a union of tile boxes
    /// for patches. `supported_by(support())` is always true, and
    /// `wedge(c) == self` iff `supported_by(c)` under the per-element
    /// containment rule.
    fn support(&self) -> ClosedSet;

    /// The pattern seen from x: (P - x) ∧ B(0, r). Errors with
    /// InsufficientWindow when B(x, r) is not covered by the region.
    fn patch_of(&self, x: &Vecd, r: f64) -> Result<Self> {
        self.region().require_covered(x, r)?;
        let moved = self.translate(&x.neg())?;
        moved.wedge(&ClosedSet::ball_at_origin(self.dim(), r, x.is_exact()))
    }
}
