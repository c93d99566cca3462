//! Point sets with exact or tolerance-based coordinates, patch extraction,
//! exact patch equality, and the matched-set engine behind stripe
//! verification.
//!
//! Exact sets keep three aligned views of their points: the quadratic-field
//! coordinates (source of truth), f64 approximations for fast filtering, and
//! when representable a packed integer form `(a + b*sqrt(disc)) / den` used
//! for O(1) membership probes. Every yes/no decision is float-prefiltered
//! and escalated to exact arithmetic inside a small uncertainty band, so
//! answers are always exact while hot loops stay in machine integers.

use super::{ball_contains, cmp_exact_f64, delta_for, ClosedSet, Pattern, Region, Vecd};
use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use std::cmp::Ordering;
use std::collections::HashMap;

const MAX_PACK_DEN: i64 = 1 << 16;
const MAX_PACK_NUM: i64 = 1 << 42;
/// Consecutive right-side gaps entering the local-pattern key of the match
/// engine. Only gaps to the right of a patch's lowest point are determined
/// by the patch itself, so a sound candidate filter may use nothing else.
const SIG_GAPS: usize = 4;

#[derive(Clone, Debug)]
pub struct PointSet {
    region: Region,
    data: Coords,
}

#[derive(Clone, Debug)]
enum Coords {
    Exact(ExactCoords),
    Float(FloatCoords),
}

#[derive(Clone, Debug)]
struct ExactCoords {
    disc: u64,
    pts: Vec<Vec<QuadReal>>,
    /// Flat n*d f64 images aligned with `pts`.
    approx: Vec<f64>,
    packed: Option<Packed>,
}

#[derive(Clone, Debug)]
struct Packed {
    den: i64,
    /// Flat n*d*2: per point, per axis, the pair (a, b) with
    /// coordinate = (a + b*sqrt(disc)) / den.
    nums: Vec<i64>,
    index: HashMap<[i64; 4], u32>,
}

#[derive(Clone, Debug)]
struct FloatCoords {
    tol: f64,
    /// Flat n*d, lexicographically sorted.
    pts: Vec<f64>,
}

fn cmp_f64_slice(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).expect("finite coordinates") {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Lexicographic order on exact points, float-prefiltered.
fn cmp_exact_pts(a: &[QuadReal], fa: &[f64], b: &[QuadReal], fb: &[f64]) -> Ordering {
    for i in 0..a.len() {
        let d = fa[i] - fb[i];
        if d.abs() > delta_for(fa[i].abs().max(fb[i].abs())) {
            return if d < 0.0 { Ordering::Less } else { Ordering::Greater };
        }
        match a[i].checked_cmp(&b[i]).expect("points of one set share a field") {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn try_pack(_disc: u64, pts: &[Vec<QuadReal>], dim: usize) -> Option<Packed> {
    if dim > 2 {
        return None;
    }
    // Common denominator of every p and q across all coordinates.
    let mut den = BigInt::from(1);
    for p in pts {
        for c in p {
            den = num_integer::lcm(den.clone(), c.p().denom().clone());
            den = num_integer::lcm(den, c.q().denom().clone());
            if den > BigInt::from(MAX_PACK_DEN) {
                return None;
            }
        }
    }
    let den_i = den.to_i64()?;
    let mut nums = Vec::with_capacity(pts.len() * dim * 2);
    for p in pts {
        for c in p {
            let a = (c.p() * BigRational::from_integer(den.clone())).to_integer().to_i64()?;
            let b = (c.q() * BigRational::from_integer(den.clone())).to_integer().to_i64()?;
            if a.abs() > MAX_PACK_NUM || b.abs() > MAX_PACK_NUM {
                return None;
            }
            nums.push(a);
            nums.push(b);
        }
    }
    let mut index = HashMap::with_capacity(pts.len() * 2);
    for i in 0..pts.len() {
        index.insert(pack_key(&nums[i * dim * 2..(i + 1) * dim * 2]), i as u32);
    }
    Some(Packed { den: den_i, nums, index })
}

fn pack_key(coords: &[i64]) -> [i64; 4] {
    let mut k = [0i64; 4];
    k[..coords.len()].copy_from_slice(coords);
    k
}

impl PointSet {
    /// Exact point set; coordinates must all live in Q(sqrt(disc)) (or be
    /// rational). Points are sorted and duplicates removed.
    pub fn exact(disc: u64, points: Vec<Vec<QuadReal>>, region: Region) -> Result<Self> {
        let dim = region.dim();
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimMismatch(p.len(), dim));
            }
            for c in p {
                if c.disc() != 0 && c.disc() != disc {
                    return Err(Error::DiscMismatch(c.disc(), disc));
                }
            }
        }
        let mut tagged: Vec<(Vec<QuadReal>, Vec<f64>)> = points
            .into_iter()
            .map(|p| {
                let f: Vec<f64> = p.iter().map(|c| c.to_f64()).collect();
                (p, f)
            })
            .collect();
        tagged.sort_by(|(a, fa), (b, fb)| cmp_exact_pts(a, fa, b, fb));
        tagged.dedup_by(|(a, fa), (b, fb)| cmp_exact_pts(a, fa, b, fb) == Ordering::Equal);
        let mut pts = Vec::with_capacity(tagged.len());
        let mut approx = Vec::with_capacity(tagged.len() * dim);
        for (p, f) in tagged {
            approx.extend_from_slice(&f);
            pts.push(p);
        }
        let packed = try_pack(disc, &pts, dim);
        Ok(PointSet { region, data: Coords::Exact(ExactCoords { disc, pts, approx, packed }) })
    }

    /// Float point set with identity tolerance `tol`.
    pub fn float_mode(tol: f64, points: Vec<Vec<f64>>, region: Region) -> Result<Self> {
        let dim = region.dim();
        if !(tol >= 0.0) || !tol.is_finite() {
            return Err(Error::InvalidRegion(format!("tolerance {tol} must be finite and >= 0")));
        }
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimMismatch(p.len(), dim));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::Parse("non-finite coordinate".into()));
            }
            rows.push(p);
        }
        rows.sort_by(|a, b| cmp_f64_slice(a, b));
        rows.dedup_by(|a, b| cmp_f64_slice(a, b) == Ordering::Equal);
        let mut pts = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            pts.extend_from_slice(&r);
        }
        Ok(PointSet { region, data: Coords::Float(FloatCoords { tol, pts }) })
    }

    /// The integer lattice restricted to an interval; test helper and
    /// degenerate control case.
    pub fn integer_lattice(lo: i64, hi: i64) -> Self {
        let pts = (lo..=hi).map(|n| vec![QuadReal::from_i64(n)]).collect();
        PointSet::exact(0, pts, Region::interval(lo as f64, hi as f64).unwrap()).unwrap()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        match &self.data {
            Coords::Exact(e) => e.pts.len(),
            Coords::Float(f) => f.pts.len() / self.region.dim(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.data, Coords::Exact(_))
    }

    pub fn disc(&self) -> Option<u64> {
        match &self.data {
            Coords::Exact(e) => Some(e.disc),
            Coords::Float(_) => None,
        }
    }

    pub fn tol(&self) -> f64 {
        match &self.data {
            Coords::Exact(_) => 0.0,
            Coords::Float(f) => f.tol,
        }
    }

    pub fn approx_point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        match &self.data {
            Coords::Exact(e) => &e.approx[i * d..(i + 1) * d],
            Coords::Float(f) => &f.pts[i * d..(i + 1) * d],
        }
    }

    pub fn point(&self, i: usize) -> Vecd {
        match &self.data {
            Coords::Exact(e) => Vecd::Exact(e.pts[i].clone()),
            Coords::Float(_) => Vecd::Float(self.approx_point(i).to_vec()),
        }
    }

    pub fn exact_points(&self) -> Option<&[Vec<QuadReal>]> {
        match &self.data {
            Coords::Exact(e) => Some(&e.pts),
            Coords::Float(_) => None,
        }
    }

    /// Explicit escape hatch out of exact arithmetic.
    pub fn to_float(&self, tol: f64) -> Result<PointSet> {
        let pts = (0..self.len()).map(|i| self.approx_point(i).to_vec()).collect();
        PointSet::float_mode(tol, pts, self.region.clone())
    }

    pub fn with_region(&self, region: Region) -> Result<PointSet> {
        if region.dim() != self.dim() {
            return Err(Error::DimMismatch(region.dim(), self.dim()));
        }
        let mut out = self.clone();
        out.region = region;
        Ok(out)
    }

    fn check_anchor(&self, x: &Vecd) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimMismatch(x.dim(), self.dim()));
        }
        if x.is_exact() != self.is_exact() {
            return Err(Error::ArithMismatch);
        }
        if let (Vecd::Exact(v), Coords::Exact(e)) = (x, &self.data) {
            for c in v {
                if c.disc() != 0 && c.disc() != e.disc {
                    return Err(Error::DiscMismatch(c.disc(), e.disc));
                }
            }
        }
        Ok(())
    }

    /// Indices of points with ||p - x|| <= r, boundary decided exactly.
    fn ball_indices(&self, x: &Vecd, r: f64) -> Result<Vec<usize>> {
        let xf = x.to_f64_vec();
        let d = self.dim();
        let n = self.len();
        let mut out = Vec::new();
        if d == 1 {
            let (lo, hi) = self.index_window_1d(xf[0], r);
            for i in lo..hi {
                if self.point_in_ball(i, x, &xf, r)? {
                    out.push(i);
                }
            }
        } else {
            for i in 0..n {
                if self.point_in_ball(i, x, &xf, r)? {
                    out.push(i);
                }
            }
        }
        Ok(out)
    }

    /// Conservative index window [lo, hi) of points whose first coordinate
    /// could lie within [x - r, x + r].
    fn index_window_1d(&self, x: f64, r: f64) -> (usize, usize) {
        let slack = delta_for(x.abs() + r);
        let n = self.len();
        let key_lo = x - r - slack;
        let key_hi = x + r + slack;
        let lo = self.partition_by_first(key_lo);
        let mut hi = lo;
        while hi < n && self.approx_point(hi)[0] <= key_hi {
            hi += 1;
        }
        (lo, hi)
    }

    fn partition_by_first(&self, key: f64) -> usize {
        let mut lo = 0usize;
        let mut hi = self.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.approx_point(mid)[0] < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn point_in_ball(&self, i: usize, x: &Vecd, xf: &[f64], r: f64) -> Result<bool> {
        let pf = self.approx_point(i);
        let dist2: f64 = pf.iter().zip(xf).map(|(a, b)| (a - b) * (a - b)).sum();
        let r2 = r * r;
        let slack = delta_for(r2.max(dist2));
        if dist2 > r2 + slack {
            return Ok(false);
        }
        if dist2 < r2 - slack {
            return Ok(true);
        }
        match (&self.data, x) {
            (Coords::Exact(_), Vecd::Exact(_)) => ball_contains(x, r, &self.point(i)),
            _ => Ok(dist2 <= r2),
        }
    }

    /// Exact membership of an exact point (same field).
    pub(crate) fn contains_exact(&self, p: &[QuadReal], pf: &[f64]) -> bool {
        let Coords::Exact(e) = &self.data else { return false };
        let d = self.dim();
        let n = self.len();
        if d == 1 {
            let (lo, hi) = self.index_window_1d(pf[0], 0.0);
            for i in lo..hi {
                if cmp_exact_pts(p, pf, &e.pts[i], self.approx_point(i)) == Ordering::Equal {
                    return true;
                }
            }
            false
        } else {
            let slack = delta_for(pf.iter().fold(1.0f64, |m, c| m.max(c.abs())));
            (0..n).any(|i| {
                let qf = self.approx_point(i);
                pf.iter().zip(qf).all(|(a, b)| (a - b).abs() <= slack)
                    && cmp_exact_pts(p, pf, &e.pts[i], qf) == Ordering::Equal
            })
        }
    }

    /// Packed integer row (numerators, denominator) for point i, when the
    /// whole set packs; used for exact canonical census keys.
    pub(crate) fn packed_row(&self, i: usize) -> Option<(&[i64], i64)> {
        let d = self.dim();
        match &self.data {
            Coords::Exact(e) => e
                .packed
                .as_ref()
                .map(|p| (&p.nums[i * d * 2..(i + 1) * d * 2], p.den)),
            Coords::Float(_) => None,
        }
    }

    /// Smallest pairwise distance (uniform discreteness radius witness).
    pub fn min_gap(&self) -> Option<f64> {
        let n = self.len();
        if n < 2 {
            return None;
        }
        let d = self.dim();
        let mut best = f64::INFINITY;
        if d == 1 {
            for i in 1..n {
                best = best.min(self.approx_point(i)[0] - self.approx_point(i - 1)[0]);
            }
        } else {
            // Points are sorted by first coordinate: sliding window.
            for i in 0..n {
                let pi = self.approx_point(i);
                for j in (i + 1)..n {
                    let pj = self.approx_point(j);
                    if pj[0] - pi[0] >= best {
                        break;
                    }
                    let dist2: f64 = pi.iter().zip(pj).map(|(a, b)| (a - b) * (a - b)).sum();
                    best = best.min(dist2.sqrt());
                }
            }
        }
        Some(best)
    }

    /// Covering radius over the region shrunk by `shrink` on every side;
    /// None when no points land in the shrunk window.
    pub fn covering_radius(&self, shrink: f64) -> Option<f64> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        let d = self.dim();
        let lo: Vec<f64> = self.region.lo.iter().map(|l| l + shrink).collect();
        let hi: Vec<f64> = self.region.hi.iter().map(|h| h - shrink).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return None;
        }
        if d == 1 {
            let xs: Vec<f64> = (0..n).map(|i| self.approx_point(i)[0]).collect();
            let mut worst: f64 = 0.0;
            let probe = |x: f64| {
                let idx = xs.partition_point(|v| *v < x);
                let mut best = f64::INFINITY;
                if idx < n {
                    best = best.min((xs[idx] - x).abs());
                }
                if idx > 0 {
                    best = best.min((x - xs[idx - 1]).abs());
                }
                best
            };
            worst = worst.max(probe(lo[0])).max(probe(hi[0]));
            for i in 0..n.saturating_sub(1) {
                let mid = 0.5 * (xs[i] + xs[i + 1]);
                if mid >= lo[0] && mid <= hi[0] {
                    worst = worst.max(0.5 * (xs[i + 1] - xs[i]));
                }
            }
            Some(worst)
        } else {
            // Grid scan; resolution tied to the window size.
            let steps = 64usize;
            let mut worst: f64 = 0.0;
            let mut g = vec![0usize; d];
            loop {
                let x: Vec<f64> = (0..d)
                    .map(|k| lo[k] + (hi[k] - lo[k]) * g[k] as f64 / (steps - 1) as f64)
                    .collect();
                let mut best = f64::INFINITY;
                for i in 0..n {
                    let p = self.approx_point(i);
                    let dist2: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
                    best = best.min(dist2);
                }
                worst = worst.max(best.sqrt());
                let mut k = 0;
                loop {
                    g[k] += 1;
                    if g[k] < steps {
                        break;
                    }
                    g[k] = 0;
                    k += 1;
                    if k == d {
                        return Some(worst);
                    }
                }
            }
        }
    }
}

/// The patch (D - x) ∩ B(0, R), centered at the origin.
/// Errors with InsufficientWindow when B(x, R) is not covered by the region.
pub fn patch_at(set: &PointSet, x: &Vecd, r: f64) -> Result<PointSet> {
    set.check_anchor(x)?;
    set.region.require_covered(x, r)?;
    let idx = set.ball_indices(x, r)?;
    let d = set.dim();
    let region = Region::new(vec![-r; d], vec![r; d], 0.0)?;
    match &set.data {
        Coords::Exact(e) => {
            let xe = x.exact_coords().expect("checked");
            let mut pts = Vec::with_capacity(idx.len());
            for i in idx {
                let p = &e.pts[i];
                let mut row = Vec::with_capacity(d);
                for (c, xc) in p.iter().zip(xe) {
                    row.push(c.checked_sub(xc)?);
                }
                pts.push(row);
            }
            PointSet::exact(e.disc, pts, region)
        }
        Coords::Float(f) => {
            let xf = x.to_f64_vec();
            let pts = idx
                .into_iter()
                .map(|i| set.approx_point(i).iter().zip(&xf).map(|(a, b)| a - b).collect())
                .collect();
            PointSet::float_mode(f.tol, pts, region)
        }
    }
}

/// Set equality of two patches. `tol = 0` demands exact mode on both sides
/// and decides exactly. `tol > 0` pairs i-th with i-th after lexicographic
/// sort and accepts when every pair is within `tol`; for sets that are
/// uniformly discrete at scale > 2 tol this is the unique nearest-neighbor
/// matching, and the test is symmetric and deterministic by construction.
pub fn patch_eq(a: &PointSet, b: &PointSet, tol: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    if a.len() != b.len() {
        return Ok(false);
    }
    if tol == 0.0 {
        match (&a.data, &b.data) {
            (Coords::Exact(ea), Coords::Exact(eb)) => {
                for i in 0..a.len() {
                    if cmp_exact_pts(&ea.pts[i], a.approx_point(i), &eb.pts[i], b.approx_point(i))
                        != Ordering::Equal
                    {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::ArithMismatch),
        }
    } else {
        for i in 0..a.len() {
            let pa = a.approx_point(i);
            let pb = b.approx_point(i);
            let dist2: f64 = pa.iter().zip(pb).map(|(u, v)| (u - v) * (u - v)).sum();
            if dist2 > tol * tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Positions y with (D - y) ∩ B(0,R) = (D - x) ∩ B(0,R) and |y - x| <=
/// search_radius, restricted to y whose ball is covered by the region.
/// Always contains x. Errors with EmptyPatch when the anchor patch is empty.
pub fn matched_set(set: &PointSet, x: &Vecd, r: f64, search_radius: f64) -> Result<PointSet> {
    let engine = MatchEngine::new(set);
    let m = engine.matches(x, r, search_radius)?;
    let region = Region::new(set.region.lo.clone(), set.region.hi.clone(), 0.0)?;
    match &set.data {
        Coords::Exact(e) => {
            let pts = m.ys.iter().map(|y| y.exact_coords().expect("exact mode").to_vec()).collect();
            PointSet::exact(e.disc, pts, region)
        }
        Coords::Float(f) => {
            let pts = m.ys.iter().map(|y| y.to_f64_vec()).collect();
            PointSet::float_mode(f.tol, pts, region)
        }
    }
}

pub(crate) struct MatchList {
    /// Matched positions, ascending; always includes the anchor itself.
    pub ys: Vec<Vecd>,
    /// Shift vectors y - x as floats, aligned with `ys`.
    pub shifts: Vec<Vec<f64>>,
}

/// Reusable matcher over one point set: builds the local-pattern signature
/// index once, then answers matched-set queries for many anchors.
pub struct MatchEngine<'a> {
    set: &'a PointSet,
    /// 1D packed sets: quantization-free right-gap key -> ascending indices.
    sig: Option<HashMap<[i64; 2 * SIG_GAPS], Vec<u32>>>,
}

fn right_gap_key(nums: &[i64], i: usize) -> [i64; 2 * SIG_GAPS] {
    let mut key = [0i64; 2 * SIG_GAPS];
    for k in 0..SIG_GAPS {
        key[k * 2] = nums[(i + k + 1) * 2] - nums[(i + k) * 2];
        key[k * 2 + 1] = nums[(i + k + 1) * 2 + 1] - nums[(i + k) * 2 + 1];
    }
    key
}

impl<'a> MatchEngine<'a> {
    pub fn new(set: &'a PointSet) -> Self {
        let sig = match &set.data {
            Coords::Exact(e) if set.dim() == 1 && e.packed.is_some() && set.len() > 64 => {
                let packed = e.packed.as_ref().expect("checked");
                let n = set.len();
                let mut map: HashMap<[i64; 2 * SIG_GAPS], Vec<u32>> = HashMap::new();
                for i in 0..n.saturating_sub(SIG_GAPS) {
                    map.entry(right_gap_key(&packed.nums, i)).or_default().push(i as u32);
                }
                Some(map)
            }
            _ => None,
        };
        MatchEngine { set, sig }
    }

    pub(crate) fn matches(&self, x: &Vecd, r: f64, search_radius: f64) -> Result<MatchList> {
        let set = self.set;
        set.check_anchor(x)?;
        set.region.require_covered(x, r)?;
        let patch = set.ball_indices(x, r)?;
        if patch.is_empty() {
            return Err(Error::EmptyPatch(format!("{:?}", x.to_f64_vec())));
        }
        let i0 = patch[0];
        let xf = x.to_f64_vec();
        let fast = set.dim() == 1
            && x.is_exact()
            && matches!(&set.data, Coords::Exact(e) if e.packed.is_some());
        // In one dimension a ball is an index interval.
        debug_assert!(!fast || patch.windows(2).all(|w| w[1] == w[0] + 1));

        // Candidate partner indices for the lowest patch point. The key uses
        // the first SIG_GAPS gaps of the patch, so it is only a valid filter
        // when the patch extends past them.
        let candidates: Vec<usize> = match (&self.sig, &set.data) {
            (Some(map), Coords::Exact(e)) if patch.len() > SIG_GAPS => {
                let packed = e.packed.as_ref().expect("sig implies packed");
                match map.get(&right_gap_key(&packed.nums, i0)) {
                    None => vec![i0],
                    Some(list) => {
                        let p0 = set.approx_point(i0)[0];
                        let slack = delta_for(p0.abs() + search_radius);
                        let lo = p0 - search_radius - slack;
                        let hi = p0 + search_radius + slack;
                        let a = list.partition_point(|&j| set.approx_point(j as usize)[0] < lo);
                        let b = list.partition_point(|&j| set.approx_point(j as usize)[0] <= hi);
                        list[a..b].iter().map(|&j| j as usize).collect()
                    }
                }
            }
            _ => self.brute_candidates(i0, search_radius),
        };

        let mut ys = Vec::new();
        let mut shifts = Vec::new();
        for j in candidates {
            let verdict = if fast {
                self.verify_fast_1d(x, &xf, r, search_radius, patch.len(), i0, j)?
            } else {
                self.verify_candidate(x, &xf, r, search_radius, &patch, i0, j)?
            };
            if let Some((y, t)) = verdict {
                ys.push(y);
                shifts.push(t);
            }
        }
        debug_assert!(shifts.iter().any(|t| t.iter().all(|c| *c == 0.0)), "anchor matches itself");
        Ok(MatchList { ys, shifts })
    }

    /// 1D packed verify: the target patch must be the aligned index block
    /// [j, j+L), which holds iff the L-1 consecutive gaps agree (exact
    /// integers) and the block is flush against the ball boundary on both
    /// sides. Boundary comparisons are float-prefiltered and decided exactly
    /// inside the uncertainty band.
    fn verify_fast_1d(
        &self,
        x: &Vecd,
        xf: &[f64],
        r: f64,
        search_radius: f64,
        patch_len: usize,
        i0: usize,
        j: usize,
    ) -> Result<Option<(Vecd, Vec<f64>)>> {
        let set = self.set;
        let Coords::Exact(e) = &set.data else { unreachable!("fast path is packed exact") };
        let packed = e.packed.as_ref().expect("fast path");
        let xe = &x.exact_coords().expect("fast path")[0];
        if j == i0 {
            return Ok(Some((x.clone(), vec![0.0])));
        }
        let n = set.len();
        if j + patch_len > n {
            return Ok(None);
        }

        let tf = set.approx_point(j)[0] - set.approx_point(i0)[0];
        let slack = delta_for(search_radius.max(tf.abs()));
        if tf.abs() > search_radius + slack {
            return Ok(None);
        }
        if tf.abs() > search_radius - slack {
            // Borderline shift length; decide |t| <= search_radius exactly.
            let t = e.pts[j][0].checked_sub(&e.pts[i0][0])?;
            if cmp_exact_f64(&t, search_radius) == Ordering::Greater
                || cmp_exact_f64(&t, -search_radius) == Ordering::Less
            {
                return Ok(None);
            }
        }
        let yf = xf[0] + tf;

        // Region must cover B(y, r); exact on the borderline.
        let mut y_cache: Option<QuadReal> = None;
        let fetch = |cache: &mut Option<QuadReal>| -> Result<QuadReal> {
            if cache.is_none() {
                let t = e.pts[j][0].checked_sub(&e.pts[i0][0])?;
                *cache = Some(xe.checked_add(&t)?);
            }
            Ok(cache.as_ref().expect("just filled").clone())
        };
        let (rlo, rhi) = (set.region.lo[0], set.region.hi[0]);
        let rs = delta_for(yf.abs() + r);
        if yf - r < rlo - rs || yf + r > rhi + rs {
            return Ok(None);
        }
        if (yf - r < rlo + rs || yf + r > rhi - rs)
            && !set.region.covers_ball(&Vecd::Exact(vec![fetch(&mut y_cache)?]), r)
        {
            return Ok(None);
        }

        // Gap sequences must agree exactly; first mismatch exits early.
        // Once they agree, the positions of the block relative to y equal
        // those of the anchor patch relative to x, so the in-ball conditions
        // are inherited and only the outside neighbors need checking.
        for k in 0..patch_len - 1 {
            let (ja, ia) = ((j + k) * 2, (i0 + k) * 2);
            if packed.nums[ja + 2] - packed.nums[ja] != packed.nums[ia + 2] - packed.nums[ia]
                || packed.nums[ja + 3] - packed.nums[ja + 1]
                    != packed.nums[ia + 3] - packed.nums[ia + 1]
            {
                return Ok(None);
            }
        }

        // Nearest neighbors on each side must lie strictly outside B(y, r).
        let band = delta_for(yf.abs() + r);
        let outside = |idx: usize, off: f64, need: Ordering,
                           cache: &mut Option<QuadReal>|
         -> Result<bool> {
            let pf = set.approx_point(idx)[0];
            let target = yf + off;
            let o = if (pf - target).abs() <= band {
                let y = fetch(cache)?;
                let diff = e.pts[idx][0].checked_sub(&y)?;
                cmp_exact_f64(&diff, off)
            } else if pf < target {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            Ok(o == need)
        };
        if j > 0 && !outside(j - 1, -r, Ordering::Less, &mut y_cache)? {
            return Ok(None);
        }
        if j + patch_len < n && !outside(j + patch_len, r, Ordering::Greater, &mut y_cache)? {
            return Ok(None);
        }

        let y = fetch(&mut y_cache)?;
        Ok(Some((Vecd::Exact(vec![y]), vec![tf])))
    }

    fn brute_candidates(&self, i0: usize, search_radius: f64) -> Vec<usize> {
        let set = self.set;
        let p0 = set.approx_point(i0).to_vec();
        let n = set.len();
        let slack = delta_for(p0[0].abs() + search_radius);
        if set.dim() == 1 {
            let lo = set.partition_by_first(p0[0] - search_radius - slack);
            let mut out = Vec::new();
            let mut i = lo;
            while i < n && set.approx_point(i)[0] <= p0[0] + search_radius + slack {
                out.push(i);
                i += 1;
            }
            out
        } else {
            (0..n)
                .filter(|&i| {
                    let p = set.approx_point(i);
                    let d2: f64 = p.iter().zip(&p0).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2 <= (search_radius + slack) * (search_radius + slack)
                })
                .collect()
        }
    }

    /// Check whether y = x + (p_j - p_i0) has the same R-patch as x.
    fn verify_candidate(
        &self,
        x: &Vecd,
        xf: &[f64],
        r: f64,
        search_radius: f64,
        patch: &[usize],
        i0: usize,
        j: usize,
    ) -> Result<Option<(Vecd, Vec<f64>)>> {
        let set = self.set;
        let d = set.dim();
        let tf: Vec<f64> = (0..d)
            .map(|k| set.approx_point(j)[k] - set.approx_point(i0)[k])
            .collect();
        let shift_norm2: f64 = tf.iter().map(|c| c * c).sum();
        let slack = delta_for(search_radius);
        if shift_norm2 > (search_radius + slack) * (search_radius + slack) {
            return Ok(None);
        }
        if shift_norm2 > (search_radius - slack).max(0.0).powi(2) {
            // Borderline shift length; decide exactly when possible.
            if let Coords::Exact(e) = &set.data {
                let mut acc = QuadReal::zero();
                for k in 0..d {
                    let t = e.pts[j][k].checked_sub(&e.pts[i0][k])?;
                    acc = acc.checked_add(&t.checked_mul(&t)?)?;
                }
                let s = QuadReal::rational(super::rational_from_f64(search_radius));
                if acc.checked_cmp(&s.checked_mul(&s)?)? == Ordering::Greater {
                    return Ok(None);
                }
            }
        }
        let yf: Vec<f64> = xf.iter().zip(&tf).map(|(a, b)| a + b).collect();

        // Region coverage of B(y, r), float prefilter then exact.
        let mut borderline = false;
        for k in 0..d {
            let (l, h) = (set.region.lo[k], set.region.hi[k]);
            let s = delta_for(yf[k].abs() + r);
            if yf[k] - r < l - s || yf[k] + r > h + s {
                return Ok(None);
            }
            if yf[k] - r < l + s || yf[k] + r > h - s {
                borderline = true;
            }
        }

        let (y, t): (Vecd, Option<Vec<QuadReal>>) = match (&set.data, x) {
            (Coords::Exact(e), Vecd::Exact(xe)) => {
                let mut te = Vec::with_capacity(d);
                for k in 0..d {
                    te.push(e.pts[j][k].checked_sub(&e.pts[i0][k])?);
                }
                let mut ye = Vec::with_capacity(d);
                for k in 0..d {
                    ye.push(xe[k].checked_add(&te[k])?);
                }
                (Vecd::Exact(ye), Some(te))
            }
            _ => (Vecd::Float(yf.clone()), None),
        };
        if borderline && !set.region.covers_ball(&y, r) {
            return Ok(None);
        }

        if j != i0 {
            // All anchor-patch points must translate into the set.
            match (&set.data, &t) {
                (Coords::Exact(e), Some(te)) => {
                    if let Some(packed) = &e.packed {
                        // Integer path: p + t keyed into the index.
                        let dt: Vec<i64> = (0..d * 2)
                            .map(|k| packed.nums[j * d * 2 + k] - packed.nums[i0 * d * 2 + k])
                            .collect();
                        for &pi in patch {
                            let base = &packed.nums[pi * d * 2..(pi + 1) * d * 2];
                            let probe: Vec<i64> =
                                base.iter().zip(&dt).map(|(a, b)| a + b).collect();
                            if !packed.index.contains_key(&pack_key(&probe)) {
                                return Ok(None);
                            }
                        }
                    } else {
                        for &pi in patch {
                            let mut q = Vec::with_capacity(d);
                            for k in 0..d {
                                q.push(e.pts[pi][k].checked_add(&te[k])?);
                            }
                            let qf: Vec<f64> = q.iter().map(|c| c.to_f64()).collect();
                            if !set.contains_exact(&q, &qf) {
                                return Ok(None);
                            }
                        }
                    }
                }
                _ => {
                    // Float sets: tolerance membership of each translate.
                    let tol = set.tol().max(1e-12);
                    for &pi in patch {
                        let q: Vec<f64> = (0..d).map(|k| set.approx_point(pi)[k] + tf[k]).collect();
                        if !self.float_member(&q, tol) {
                            return Ok(None);
                        }
                    }
                }
            }
            // Same cardinality rules out extra points in the target patch.
            let count = set.ball_indices(&y, r)?.len();
            if count != patch.len() {
                return Ok(None);
            }
        }
        Ok(Some((y, tf)))
    }

    fn float_member(&self, q: &[f64], tol: f64) -> bool {
        let set = self.set;
        let n = set.len();
        if set.dim() == 1 {
            let lo = set.partition_by_first(q[0] - tol);
            let mut i = lo;
            while i < n && set.approx_point(i)[0] <= q[0] + tol {
                if (set.approx_point(i)[0] - q[0]).abs() <= tol {
                    return true;
                }
                i += 1;
            }
            false
        } else {
            (0..n).any(|i| {
                let p = set.approx_point(i);
                let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 <= tol * tol
            })
        }
    }
}

/// Default verification anchors: every point whose clearance ball fits the
/// region, plus `n_off` off-point positions from a rational Kronecker
/// sequence (exact coordinates in exact mode).
pub fn default_anchors(set: &PointSet, clearance: f64, n_off: usize) -> Vec<Vecd> {
    let d = set.dim();
    let mut out = Vec::new();
    for i in 0..set.len() {
        let p = set.point(i);
        if set.region.covers_ball(&p, clearance) {
            out.push(p);
        }
    }
    // Fibonacci- and Pell-convergent steps: low-discrepancy yet exactly
    // rational, so exact-mode anchors stay exact.
    const STEPS: [(i64, i64); 2] = [(6765, 10946), (5741, 8119)];
    let lo: Vec<f64> = set.region.lo.iter().map(|l| l + clearance).collect();
    let hi: Vec<f64> = set.region.hi.iter().map(|h| h - clearance).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
        return out;
    }
    for k in 0..n_off {
        let mut coords_f = Vec::with_capacity(d);
        let mut coords_e = Vec::with_capacity(d);
        for axis in 0..d {
            let (num, den) = STEPS[axis % STEPS.len()];
            let pos = ((k as i64 + 1) * num).rem_euclid(den);
            let frac = BigRational::new(BigInt::from(pos), BigInt::from(den));
            let lo_r = BigRational::from_float(lo[axis]).expect("finite");
            let span_r = BigRational::from_float(hi[axis] - lo[axis]).expect("finite");
            let coord = lo_r + &span_r * &frac;
            coords_f.push(coord.to_f64().unwrap_or(f64::NAN));
            coords_e.push(QuadReal::rational(coord));
        }
        out.push(if set.is_exact() { Vecd::Exact(coords_e) } else { Vecd::Float(coords_f) });
    }
    out
}

impl Pattern for PointSet {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn is_empty(&self) -> bool {
        self.is_empty()
    }

    fn region(&self) -> &Region {
        &self.region
    }

    fn wedge(&self, c: &ClosedSet) -> Result<Self> {
        let keep = self.filter_indices(c)?;
        self.subset(&keep)
    }

    fn translate(&self, x: &Vecd) -> Result<Self> {
        self.check_anchor(x)?;
        let region = self.region.translated(&x.to_f64_vec());
        match (&self.data, x) {
            (Coords::Exact(e), Vecd::Exact(xe)) => {
                let mut pts = Vec::with_capacity(e.pts.len());
                for p in &e.pts {
                    let mut row = Vec::with_capacity(p.len());
                    for (c, xc) in p.iter().zip(xe) {
                        row.push(c.checked_add(xc)?);
                    }
                    pts.push(row);
                }
                PointSet::exact(e.disc, pts, region)
            }
            (Coords::Float(f), Vecd::Float(xf)) => {
                let d = self.dim();
                let pts = (0..self.len())
                    .map(|i| {
                        f.pts[i * d..(i + 1) * d].iter().zip(xf).map(|(a, b)| a + b).collect()
                    })
                    .collect();
                PointSet::float_mode(f.tol, pts, region)
            }
            _ => Err(Error::ArithMismatch),
        }
    }

    fn supported_by(&self, c: &ClosedSet) -> Result<bool> {
        for i in 0..self.len() {
            if !c.contains_point(&self.point(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn pattern_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        patch_eq(self, other, tol)
    }

    fn support(&self) -> ClosedSet {
        ClosedSet::Union(
            (0..self.len())
                .map(|i| ClosedSet::Ball { center: self.point(i), radius: 0.0 })
                .collect(),
        )
    }

    fn patch_of(&self, x: &Vecd, r: f64) -> Result<Self> {
        patch_at(self, x, r)
    }
}

impl PointSet {
    fn filter_indices(&self, c: &ClosedSet) -> Result<Vec<usize>> {
        let mut keep = Vec::new();
        for i in 0..self.len() {
            if c.contains_point(&self.point(i))? {
                keep.push(i);
            }
        }
        Ok(keep)
    }

    pub(crate) fn subset(&self, keep: &[usize]) -> Result<PointSet> {
        match &self.data {
            Coords::Exact(e) => {
                let pts = keep.iter().map(|&i| e.pts[i].clone()).collect();
                PointSet::exact(e.disc, pts, self.region.clone())
            }
            Coords::Float(f) => {
                let pts = keep.iter().map(|&i| self.approx_point(i).to_vec()).collect();
                PointSet::float_mode(f.tol, pts, self.region.clone())
            }
        }
    }
}

/// Point set with a label per point; wedge and equality respect labels.
#[derive(Clone, Debug)]
pub struct LabeledPointSet {
    set: PointSet,
    labels: Vec<u32>,
    pub label_names: Vec<String>,
}

impl LabeledPointSet {
    pub fn new(
        disc: u64,
        points: Vec<(Vec<QuadReal>, u32)>,
        label_names: Vec<String>,
        region: Region,
    ) -> Result<Self> {
        // Sort points together with labels by building the set first, then
        // locating each original point in the sorted order.
        let coords: Vec<Vec<QuadReal>> = points.iter().map(|(p, _)| p.clone()).collect();
        let set = PointSet::exact(disc, coords, region)?;
        if set.len() != points.len() {
            return Err(Error::InvalidRegion("duplicate points in labeled set".into()));
        }
        let mut labels = vec![0u32; set.len()];
        for (p, lab) in &points {
            let pf: Vec<f64> = p.iter().map(|c| c.to_f64()).collect();
            let mut placed = false;
            for i in 0..set.len() {
                let e = set.exact_points().expect("exact");
                if cmp_exact_pts(p, &pf, &e[i], set.approx_point(i)) == Ordering::Equal {
                    labels[i] = *lab;
                    placed = true;
                    break;
                }
            }
            debug_assert!(placed);
        }
        for l in &labels {
            if *l as usize >= label_names.len() {
                return Err(Error::Parse(format!("label {l} has no name")));
            }
        }
        Ok(LabeledPointSet { set, labels, label_names })
    }

    pub fn points(&self) -> &PointSet {
        &self.set
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

impl Pattern for LabeledPointSet {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    fn region(&self) -> &Region {
        self.set.region()
    }

    fn wedge(&self, c: &ClosedSet) -> Result<Self> {
        let keep = self.set.filter_indices(c)?;
        let set = self.set.subset(&keep)?;
        let labels = keep.iter().map(|&i| self.labels[i]).collect();
        Ok(LabeledPointSet { set, labels, label_names: self.label_names.clone() })
    }

    fn translate(&self, x: &Vecd) -> Result<Self> {
        // Translation preserves sorted order, so labels stay aligned.
        let set = self.set.translate(x)?;
        Ok(LabeledPointSet { set, labels: self.labels.clone(), label_names: self.label_names.clone() })
    }

    fn supported_by(&self, c: &ClosedSet) -> Result<bool> {
        self.set.supported_by(c)
    }

    fn pattern_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.labels == other.labels && self.set.pattern_eq(&other.set, tol)?)
    }

    fn support(&self) -> ClosedSet {
        self.set.support()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rational_vec(vals: &[(i64, i64)]) -> Vecd {
        Vecd::Exact(
            vals.iter()
                .map(|(n, d)| QuadReal::rational(BigRational::new(BigInt::from(*n), BigInt::from(*d))))
                .collect(),
        )
    }

    #[test]
    fn lattice_patch_examples() {
        let z = PointSet::integer_lattice(-100, 100);
        let p = patch_at(&z, &rational_vec(&[(0, 1)]), 2.5).unwrap();
        assert_eq!(p.len(), 5);
        // Boundary point included at exact radius.
        let p2 = patch_at(&z, &rational_vec(&[(0, 1)]), 2.0).unwrap();
        assert_eq!(p2.len(), 5);
        let p3 = patch_at(&z, &rational_vec(&[(1, 2)]), 2.0).unwrap();
        assert_eq!(p3.len(), 4);
    }

    #[test]
    fn uncovered_patch_query_errors() {
        let z = PointSet::integer_lattice(-100, 100);
        let err = patch_at(&z, &rational_vec(&[(999, 10)]), 5.0).unwrap_err();
        assert!(matches!(err, Error::InsufficientWindow { .. }));
    }

    #[test]
    fn matched_set_of_lattice_is_lattice() {
        let z = PointSet::integer_lattice(-50, 50);
        let m = matched_set(&z, &rational_vec(&[(0, 1)]), 3.0, 10.0).unwrap();
        // y in {-10..10} with ball coverage; all integers match.
        assert_eq!(m.len(), 21);
        let m2 = matched_set(&z, &rational_vec(&[(1, 2)]), 3.0, 5.5).unwrap();
        assert_eq!(m2.len(), 11);
    }

    #[test]
    fn matched_set_empty_patch_errors() {
        let z = PointSet::integer_lattice(-50, 50);
        let err = matched_set(&z, &rational_vec(&[(1, 2)]), 0.25, 5.0).unwrap_err();
        assert!(matches!(err, Error::EmptyPatch(_)));
    }

    #[test]
    fn patch_eq_modes() {
        let z = PointSet::integer_lattice(-10, 10);
        let p = patch_at(&z, &rational_vec(&[(0, 1)]), 3.0).unwrap();
        let q = patch_at(&z, &rational_vec(&[(2, 1)]), 3.0).unwrap();
        assert!(patch_eq(&p, &q, 0.0).unwrap());
        let pf = p.to_float(1e-9).unwrap();
        let qf = q.to_float(1e-9).unwrap();
        assert!(patch_eq(&pf, &qf, 1e-6).unwrap());
        assert!(matches!(patch_eq(&pf, &qf, 0.0), Err(Error::ArithMismatch)));
        // Perturbation below tol accepted, above rejected.
        let shifted = PointSet::float_mode(
            1e-9,
            (0..pf.len()).map(|i| vec![pf.approx_point(i)[0] + 5e-7]).collect(),
            pf.region().clone(),
        )
        .unwrap();
        assert!(patch_eq(&pf, &shifted, 1e-6).unwrap());
        assert!(!patch_eq(&pf, &shifted, 1e-8).unwrap());
    }

    #[test]
    fn anchor_mode_mismatch_rejected() {
        let z = PointSet::integer_lattice(-10, 10);
        let err = patch_at(&z, &Vecd::Float(vec![0.0]), 2.0).unwrap_err();
        assert!(matches!(err, Error::ArithMismatch));
    }

    #[test]
    fn wedge_translate_support_roundtrip() {
        let z = PointSet::integer_lattice(-10, 10);
        let ball = ClosedSet::ball_at_origin(1, 4.0, true);
        let w = z.wedge(&ball).unwrap();
        assert_eq!(w.len(), 9);
        assert!(w.supported_by(&ball).unwrap());
        assert!(!z.supported_by(&ball).unwrap());
        let t = rational_vec(&[(3, 1)]);
        let moved = w.translate(&t).unwrap();
        assert_eq!(moved.approx_point(0)[0], -1.0);
    }

    #[test]
    fn labeled_set_wedge_keeps_labels() {
        let pts = vec![
            (vec![QuadReal::from_i64(0)], 0u32),
            (vec![QuadReal::from_i64(1)], 1u32),
            (vec![QuadReal::from_i64(2)], 0u32),
        ];
        let l = LabeledPointSet::new(
            0,
            pts,
            vec!["a".into(), "b".into()],
            Region::interval(-1.0, 3.0).unwrap(),
        )
        .unwrap();
        let ball = ClosedSet::ball_at_origin(1, 1.25, true);
        let w = l.wedge(&ball).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.labels(), &[0, 1]);
    }

    #[test]
    fn min_gap_and_covering() {
        let z = PointSet::integer_lattice(-10, 10);
        assert_eq!(z.min_gap().unwrap(), 1.0);
        let cov = z.covering_radius(0.0).unwrap();
        assert!((cov - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_anchors_are_covered() {
        let z = PointSet::integer_lattice(-20, 20);
        let anchors = default_anchors(&z, 5.0, 50);
        assert!(anchors.len() > 50);
        for a in &anchors {
            assert!(z.region().covers_ball(a, 5.0));
            assert!(a.is_exact());
        }
    }

    #[test]
    fn packed_path_matches_big_path() {
        // Same set with packing disabled via huge denominator: results agree.
        let z = PointSet::integer_lattice(-30, 30);
        let m1 = matched_set(&z, &rational_vec(&[(0, 1)]), 2.0, 8.0).unwrap();
        // Build an equivalent set whose coordinates defeat the packer.
        let big_den = BigInt::from(1i64 << 40);
        let pts: Vec<Vec<QuadReal>> = (-30..=30)
            .map(|n| {
                vec![QuadReal::rational(BigRational::new(
                    BigInt::from(n) * &big_den,
                    big_den.clone(),
                ))]
            })
            .collect();
        let z2 = PointSet::exact(0, pts, Region::interval(-30.0, 30.0).unwrap()).unwrap();
        let m2 = matched_set(&z2, &rational_vec(&[(0, 1)]), 2.0, 8.0).unwrap();
        assert!(patch_eq(&m1, &m2, 0.0).unwrap());
    }
}
