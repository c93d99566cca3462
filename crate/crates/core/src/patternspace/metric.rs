//! Local matching distance between patterns, entourage alignment built on
//! it, and the census-style statistics (patch classes, repetitivity,
//! local derivability) used by the verification pipeline.
//!
//! The distance between two patterns is the smallest eps such that, after
//! moving each pattern by at most eps, they agree on the closed ball of
//! radius 1/eps. Values are truncated at 1/sqrt(2), which keeps the
//! triangle inequality when patterns share no structure at all. Candidate
//! alignments always include the zero shift plus every difference vector
//! between nearby points of the two patterns; an optimal alignment either
//! matches some pair of points exactly or is dominated by one that does.

use super::pointset::{patch_at, MatchEngine, PointSet};
use super::{ClosedSet, Pattern, Region, Vecd};
use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::rng::SplitMix64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::FRAC_1_SQRT_2;

/// Metric values above this are truncated; two patterns with nothing in
/// common are exactly this far apart.
pub const MATCH_DIST_CAP: f64 = FRAC_1_SQRT_2;

#[derive(Clone, Debug, Serialize)]
pub struct MatchDistResult {
    /// Certified distance, truncated at the cap.
    pub dist: f64,
    /// Relative alignment shift achieving it (split evenly between sides).
    pub shift: Vec<f64>,
    /// Agreement holds strictly inside this radius under the best shift.
    pub agree_radius: f64,
    /// True when agreement ran into the known-region boundary rather than
    /// an actual mismatch, so the true distance could be smaller.
    pub window_limited: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Largest r with B(c, r) inside the region box.
fn avail_radius(region: &Region, c: &[f64]) -> f64 {
    region
        .lo
        .iter()
        .zip(&region.hi)
        .zip(c)
        .map(|((l, h), x)| (x - l).min(h - x))
        .fold(f64::INFINITY, f64::min)
}

struct ShiftOutcome {
    /// Smallest norm (measured from the split center) of a point present on
    /// one side but not the other; INFINITY when none found in range.
    first_mismatch: f64,
    avail: f64,
}

/// Evaluate one relative alignment s: compare A + s/2 against B - s/2.
fn eval_shift(
    a: &PointSet,
    b: &PointSet,
    s_exact: Option<&[QuadReal]>,
    s_f: &[f64],
) -> Result<ShiftOutcome> {
    let d = a.dim();
    let half: Vec<f64> = s_f.iter().map(|c| 0.5 * c).collect();
    let neg_half: Vec<f64> = half.iter().map(|c| -c).collect();
    let avail = avail_radius(a.region(), &neg_half).min(avail_radius(b.region(), &half));
    let mut first = f64::INFINITY;

    let probe_pairs: [(&PointSet, &PointSet, f64); 2] = [(a, b, 1.0), (b, a, -1.0)];
    for (src, dst, sign) in probe_pairs {
        for i in 0..src.len() {
            let pf = src.approx_point(i);
            // Position of this point after the split shift.
            let shifted: Vec<f64> =
                (0..d).map(|k| pf[k] + sign * half[k]).collect();
            let nm = norm(&shifted);
            if nm > avail + 1e-12 || nm >= first {
                continue;
            }
            let matched = match (src.exact_points(), s_exact) {
                (Some(pts), Some(se)) => {
                    let mut q = Vec::with_capacity(d);
                    for k in 0..d {
                        let t = if sign > 0.0 {
                            pts[i][k].checked_add(&se[k])?
                        } else {
                            pts[i][k].checked_sub(&se[k])?
                        };
                        q.push(t);
                    }
                    let qf: Vec<f64> = q.iter().map(|c| c.to_f64()).collect();
                    dst.contains_exact(&q, &qf)
                }
                _ => {
                    let q: Vec<f64> = (0..d).map(|k| pf[k] + sign * s_f[k]).collect();
                    let tol = dst.tol().max(src.tol()).max(1e-12);
                    float_member(dst, &q, tol)
                }
            };
            if !matched {
                first = nm;
            }
        }
    }
    Ok(ShiftOutcome { first_mismatch: first, avail })
}

fn float_member(set: &PointSet, q: &[f64], tol: f64) -> bool {
    let n = set.len();
    let d = set.dim();
    (0..n).any(|i| {
        let p = set.approx_point(i);
        let d2: f64 = (0..d).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum();
        d2 <= tol * tol
    })
}

/// Continuous matching distance between two finite patterns, with the
/// certifying shift and agreement radius.
pub fn match_dist_detail(a: &PointSet, b: &PointSet) -> Result<MatchDistResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    if a.is_exact() != b.is_exact() {
        return Err(Error::ArithMismatch);
    }
    let d = a.dim();

    // Candidate relative shifts: zero plus b_j - a_i for nearby pairs.
    // Shifts of norm >= 2 * cap cannot beat the cap.
    let max_s = 2.0 * MATCH_DIST_CAP + 1e-9;
    let mut cands: Vec<(f64, Option<Vec<QuadReal>>, Vec<f64>)> = Vec::new();
    cands.push((0.0, a.exact_points().map(|_| vec![QuadReal::zero(); d]), vec![0.0; d]));
    for i in 0..a.len() {
        let pa = a.approx_point(i);
        for j in 0..b.len() {
            let pb = b.approx_point(j);
            let sf: Vec<f64> = (0..d).map(|k| pb[k] - pa[k]).collect();
            let nm = norm(&sf);
            if nm == 0.0 || nm > max_s {
                continue;
            }
            let se = match (a.exact_points(), b.exact_points()) {
                (Some(ap), Some(bp)) => {
                    let mut v = Vec::with_capacity(d);
                    for k in 0..d {
                        v.push(bp[j][k].checked_sub(&ap[i][k])?);
                    }
                    Some(v)
                }
                _ => None,
            };
            cands.push((nm, se, sf));
        }
    }
    cands.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite norms"));

    let mut best = MatchDistResult {
        dist: f64::INFINITY,
        shift: vec![0.0; d],
        agree_radius: 0.0,
        window_limited: false,
    };
    for (nm, se, sf) in &cands {
        if nm * 0.5 >= best.dist {
            break;
        }
        let out = eval_shift(a, b, se.as_deref(), sf)?;
        let (agree, limited) = if out.first_mismatch.is_finite() {
            (out.first_mismatch, false)
        } else {
            (out.avail, true)
        };
        if agree <= 0.0 {
            continue;
        }
        let cand = (nm * 0.5).max(1.0 / agree);
        if cand < best.dist {
            best = MatchDistResult {
                dist: cand,
                shift: sf.clone(),
                agree_radius: agree,
                window_limited: limited,
            };
        }
    }
    if best.dist > MATCH_DIST_CAP {
        best.dist = MATCH_DIST_CAP;
    }
    Ok(best)
}

/// Matching distance resolved against a radius grid: the smallest grid r
/// such that some shift of size <= r makes the patterns agree on B(0, 1/r).
/// None when even the largest grid radius cannot be certified. Both regions
/// must cover B(0, 1/min(r_grid)).
pub fn local_match_dist(d1: &PointSet, d2: &PointSet, r_grid: &[f64]) -> Result<Option<f64>> {
    if r_grid.is_empty() {
        return Err(Error::Parse("empty radius grid".into()));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    if !(grid[0] > 0.0) {
        return Err(Error::Parse("grid radii must be positive".into()));
    }
    let need = 1.0 / grid[0];
    for set in [d1, d2] {
        let zero = vec![0.0; set.dim()];
        if avail_radius(set.region(), &zero) + 1e-9 < need {
            return Err(Error::InsufficientWindow { center: "origin".into(), radius: need });
        }
    }
    // The continuous distance is the infimum over shifts of
    // max(|s|/2, 1/agreement), so a grid radius is certifiable iff it is at
    // least that value.
    let detail = match_dist_detail(d1, d2)?;
    Ok(grid.into_iter().find(|r| *r + 1e-12 >= detail.dist))
}

fn in_box(p: &[f64], lo: &[f64], hi: &[f64], slack: f64) -> bool {
    p.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| *c >= l - slack && *c <= h + slack)
}

/// Find a shift x in V with P ∧ K = (Q + x) ∧ K. Exact sets are compared
/// exactly; float sets within their identity tolerance. Candidates are the
/// zero shift, every difference p - q of points near the test window, and a
/// coarse grid over V (which covers alignments of empty restrictions).
/// Returns the first witness in (norm, lex) order, or None.
pub fn entourage_align(
    p: &PointSet,
    q: &PointSet,
    k: &ClosedSet,
    v: &ClosedSet,
) -> Result<Option<Vecd>> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch(p.dim(), q.dim()));
    }
    if p.is_exact() != q.is_exact() {
        return Err(Error::ArithMismatch);
    }
    let d = p.dim();
    let (klo, khi) = k
        .bbox()
        .ok_or_else(|| Error::InvalidRegion("entourage window K must be bounded".into()))?;
    let (vlo, vhi) = v
        .bbox()
        .ok_or_else(|| Error::InvalidRegion("shift set V must be bounded".into()))?;
    // P must be known on K, and Q on K shifted backwards by anything in V.
    for i in 0..d {
        let pr = p.region();
        let qr = q.region();
        if pr.lo[i] > klo[i] + 1e-9 || pr.hi[i] < khi[i] - 1e-9 {
            return Err(Error::InsufficientWindow {
                center: "entourage window K".into(),
                radius: khi[i] - klo[i],
            });
        }
        if qr.lo[i] > klo[i] - vhi[i] + 1e-9 || qr.hi[i] < khi[i] - vlo[i] - 1e-9 {
            return Err(Error::InsufficientWindow {
                center: "entourage window K shifted over V".into(),
                radius: khi[i] - klo[i] + (vhi[i] - vlo[i]),
            });
        }
    }

    let pk = p.wedge(k)?;
    let tol = if p.is_exact() { 0.0 } else { p.tol().max(q.tol()).max(1e-12) };
    // Restrict Q to the points that could enter K under some shift in V;
    // (Q + x) ∧ K only ever sees these.
    let qlo: Vec<f64> = (0..d).map(|i| klo[i] - vhi[i] - 1e-9).collect();
    let qhi: Vec<f64> = (0..d).map(|i| khi[i] - vlo[i] + 1e-9).collect();
    let q_near = q.wedge(&ClosedSet::Box {
        lo: Vecd::from_f64s(&qlo, q.is_exact())?,
        hi: Vecd::from_f64s(&qhi, q.is_exact())?,
    })?;

    let mut cands: Vec<(f64, Vec<f64>, Vecd)> = Vec::new();
    let push = |x: Vecd, cands: &mut Vec<(f64, Vec<f64>, Vecd)>| -> Result<()> {
        if v.contains_point(&x)? {
            let xf = x.to_f64_vec();
            cands.push((norm(&xf), xf, x));
        }
        Ok(())
    };
    push(
        if p.is_exact() {
            Vecd::Exact(vec![QuadReal::zero(); d])
        } else {
            Vecd::Float(vec![0.0; d])
        },
        &mut cands,
    )?;
    for i in 0..p.len() {
        let pf = p.approx_point(i);
        if !in_box(pf, &klo, &khi, 1e-9) {
            continue;
        }
        for j in 0..q_near.len() {
            let qf = q_near.approx_point(j);
            let xf: Vec<f64> = pf.iter().zip(qf).map(|(a, b)| a - b).collect();
            if !in_box(&xf, &vlo, &vhi, 1e-9) {
                continue;
            }
            let x = p.point(i).sub(&q_near.point(j))?;
            push(x, &mut cands)?;
        }
    }
    // Grid over V's bounding box, 5 samples per axis.
    let mut g = vec![0usize; d];
    loop {
        let xf: Vec<f64> =
            (0..d).map(|i| vlo[i] + (vhi[i] - vlo[i]) * g[i] as f64 / 4.0).collect();
        push(Vecd::from_f64s(&xf, p.is_exact())?, &mut cands)?;
        let mut axis = 0;
        loop {
            g[axis] += 1;
            if g[axis] < 5 {
                break;
            }
            g[axis] = 0;
            axis += 1;
            if axis == d {
                break;
            }
        }
        if g.iter().all(|&c| c == 0) {
            break;
        }
    }
    cands.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite")
            .then_with(|| a.1.partial_cmp(&b.1).expect("finite"))
    });

    for (_, _, x) in cands {
        let moved = q_near.translate(&x)?;
        if moved.wedge(k)?.pattern_eq(&pk, tol)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Does some shift in V align Q with P on the window K?
pub fn entourage_test(p: &PointSet, q: &PointSet, k: &ClosedSet, v: &ClosedSet) -> Result<bool> {
    Ok(entourage_align(p, q, k, v)?.is_some())
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusClass {
    pub count: usize,
    pub patch_len: usize,
    pub representative: Vec<f64>,
}

/// Patch-class census over the supplied anchors.
#[derive(Clone, Debug, Serialize)]
pub struct CensusReport {
    pub radius: f64,
    pub anchors_used: usize,
    pub n_classes: usize,
    pub classes: Vec<CensusClass>,
}

#[derive(Hash, PartialEq, Eq)]
enum PatchKey {
    Packed { den: i64, nums: Vec<i64> },
    Exact(Vec<String>),
    Float(Vec<i64>),
}

/// Canonical form of a patch up to translation: subtract the first
/// (lexicographically minimal) point, then encode exactly.
fn patch_key(patch: &PointSet) -> PatchKey {
    if patch.is_empty() {
        return PatchKey::Packed { den: 1, nums: Vec::new() };
    }
    if patch.is_exact() {
        if patch.packed_row(0).is_some() {
            let (first, den) = patch.packed_row(0).expect("checked");
            let first = first.to_vec();
            let mut nums = Vec::new();
            for i in 0..patch.len() {
                let (row, _) = patch.packed_row(i).expect("uniform packing");
                for (a, b) in row.iter().zip(&first) {
                    nums.push(a - b);
                }
            }
            // Shared factors of the denominator drop out so that equal
            // classes anchored at different offsets get equal keys.
            let mut g = den;
            for v in &nums {
                g = num_integer::gcd(g, v.abs());
                if g == 1 {
                    break;
                }
            }
            return PatchKey::Packed {
                den: den / g,
                nums: nums.iter().map(|v| v / g).collect(),
            };
        }
        let pts = patch.exact_points().expect("exact");
        let p0 = pts[0].clone();
        PatchKey::Exact(
            pts.iter()
                .map(|p| {
                    p.iter()
                        .zip(&p0)
                        .map(|(c, c0)| format!("{}", c.checked_sub(c0).expect("same field")))
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect(),
        )
    } else {
        let q = patch.tol().max(1e-9);
        let base = patch.approx_point(0).to_vec();
        let mut out = Vec::new();
        for i in 0..patch.len() {
            for (c, b) in patch.approx_point(i).iter().zip(&base) {
                out.push(((c - b) / q).round() as i64);
            }
        }
        PatchKey::Float(out)
    }
}

/// Count translation-equivalence classes among the r-patches at the given
/// anchors. Exact sets are classified exactly; float sets by quantized
/// coordinates. Every anchor ball must be covered by the region.
pub fn flc_census(set: &PointSet, r: f64, xs: &[Vecd]) -> Result<CensusReport> {
    let mut map: HashMap<PatchKey, (usize, Vec<f64>, usize)> = HashMap::new();
    for x in xs {
        let patch = patch_at(set, x, r)?;
        let e = map.entry(patch_key(&patch)).or_insert((0, x.to_f64_vec(), patch.len()));
        e.0 += 1;
    }
    let mut classes: Vec<CensusClass> = map
        .into_values()
        .map(|(count, rep, patch_len)| CensusClass { count, patch_len, representative: rep })
        .collect();
    classes.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.representative.partial_cmp(&b.representative).expect("finite"))
    });
    Ok(CensusReport { radius: r, anchors_used: xs.len(), n_classes: classes.len(), classes })
}

/// Census anchored at every point whose r-ball the region covers.
pub fn flc_census_on_points(set: &PointSet, r: f64) -> Result<CensusReport> {
    let xs: Vec<Vecd> = (0..set.len())
        .map(|i| set.point(i))
        .filter(|p| set.region().covers_ball(p, r))
        .collect();
    flc_census(set, r, &xs)
}

/// Empirical covering radius of the positions that repeat the r0-patch of
/// x0, measured over the region shrunk by r0. None when the patch never
/// recurs (repetitivity unwitnessed at this radius).
pub fn repetitivity_radius(set: &PointSet, x0: &Vecd, r0: f64) -> Result<Option<f64>> {
    let span: f64 = set
        .region()
        .lo
        .iter()
        .zip(&set.region().hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt();
    let engine = MatchEngine::new(set);
    let m = engine.matches(x0, r0, span)?;
    if m.ys.len() <= 1 {
        return Ok(None);
    }
    let region = Region::new(set.region().lo.clone(), set.region().hi.clone(), 0.0)?;
    let centers = match set.exact_points() {
        Some(_) => PointSet::exact(
            set.disc().expect("exact"),
            m.ys.iter().map(|y| y.exact_coords().expect("exact").to_vec()).collect(),
            region,
        )?,
        None => PointSet::float_mode(
            set.tol(),
            m.ys.iter().map(|y| y.to_f64_vec()).collect(),
            region,
        )?,
    };
    Ok(centers.covering_radius(r0))
}

#[derive(Clone, Debug, Serialize)]
pub struct Falsifier {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivabilityReport {
    pub radius: f64,
    pub samples_checked: usize,
    /// Samples whose hypothesis (equal source patches at R + R0) held.
    pub hypothesis_held: usize,
    pub falsifiers: Vec<Falsifier>,
}

impl DerivabilityReport {
    pub fn ok(&self) -> bool {
        self.falsifiers.is_empty()
    }
}

/// Sampled local-derivability check from p1 to p2 at radius r0: whenever
/// the p1 patterns at x and y agree out to R + r0, the p2 patterns at x and
/// y must agree out to R. Samples are (x, y, R) triples; comparisons are
/// exact.
pub fn local_derivability_check<A: Pattern, B: Pattern>(
    p1: &A,
    p2: &B,
    r0: f64,
    samples: &[(Vecd, Vecd, f64)],
) -> Result<DerivabilityReport> {
    let mut hypothesis_held = 0usize;
    let mut falsifiers = Vec::new();
    for (x, y, r) in samples {
        let hx = p1.patch_of(x, r + r0)?;
        let hy = p1.patch_of(y, r + r0)?;
        if !hx.pattern_eq(&hy, 0.0)? {
            continue;
        }
        hypothesis_held += 1;
        let cx = p2.patch_of(x, *r)?;
        let cy = p2.patch_of(y, *r)?;
        if !cx.pattern_eq(&cy, 0.0)? {
            falsifiers.push(Falsifier { x: x.to_f64_vec(), y: y.to_f64_vec() });
        }
    }
    Ok(DerivabilityReport {
        radius: r0,
        samples_checked: samples.len(),
        hypothesis_held,
        falsifiers,
    })
}

/// Sample (x, y, R) triples whose hypothesis holds by construction: x runs
/// over points of d in random order, y over positions matching x's
/// (R + r0)-patch. Useful for exercising a derivability claim with a
/// guaranteed number of non-vacuous samples.
pub fn derivability_samples(
    d: &PointSet,
    r0: f64,
    r: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<(Vecd, Vecd, f64)>> {
    let need = r + r0;
    let mut eligible: Vec<usize> =
        (0..d.len()).filter(|&i| d.region().covers_ball(&d.point(i), need)).collect();
    let mut rng = SplitMix64::new(seed);
    let n = eligible.len();
    for i in 0..n.saturating_sub(1) {
        let j = i + rng.next_below((n - i) as u64) as usize;
        eligible.swap(i, j);
    }
    let span: f64 = d
        .region()
        .lo
        .iter()
        .zip(&d.region().hi)
        .map(|(l, h)| (h - l) * (h - l))
        .sum::<f64>()
        .sqrt();
    let engine = MatchEngine::new(d);
    let mut out = Vec::new();
    'outer: for &i in &eligible {
        let x = d.point(i);
        let xf = x.to_f64_vec();
        let m = engine.matches(&x, need, span)?;
        for y in &m.ys {
            if y.to_f64_vec() == xf {
                continue;
            }
            out.push((x.clone(), y.clone(), r));
            if out.len() >= count {
                break 'outer;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn rat(n: i64, d: i64) -> QuadReal {
        QuadReal::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    fn shifted_lattice(num: i64, den: i64, lo: i64, hi: i64) -> PointSet {
        let pts = (lo..=hi).map(|n| vec![rat(n * den + num, den)]).collect();
        PointSet::exact(0, pts, Region::interval(lo as f64, hi as f64).unwrap()).unwrap()
    }

    #[test]
    fn self_distance_is_window_limited() {
        let z = PointSet::integer_lattice(-100, 100);
        let p = patch_at(&z, &Vecd::Exact(vec![QuadReal::zero()]), 50.0).unwrap();
        let d = match_dist_detail(&p, &p).unwrap();
        assert!(d.window_limited);
        assert!((d.dist - 1.0 / 50.0).abs() < 1e-12);
        assert_eq!(d.shift, vec![0.0]);
    }

    #[test]
    fn shifted_lattice_distance_is_half_shift() {
        let a = PointSet::integer_lattice(-50, 50);
        let b = shifted_lattice(1, 5, -50, 50);
        let d = match_dist_detail(&a, &b).unwrap();
        assert!((d.dist - 0.1).abs() < 1e-9, "dist {}", d.dist);
        assert!((d.shift[0] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn nothing_in_common_hits_the_cap() {
        let a = PointSet::exact(
            0,
            vec![vec![QuadReal::zero()]],
            Region::interval(-10.0, 10.0).unwrap(),
        )
        .unwrap();
        let b =
            PointSet::exact(0, vec![], Region::interval(-10.0, 10.0).unwrap()).unwrap();
        let d = match_dist_detail(&a, &b).unwrap();
        assert_eq!(d.dist, MATCH_DIST_CAP);
    }

    #[test]
    fn grid_distance_buckets() {
        let a = PointSet::integer_lattice(-50, 50);
        let grid = [0.05, 0.15, 0.25, 0.5];
        // Identical sets certify the smallest bucket.
        assert_eq!(local_match_dist(&a, &a, &grid).unwrap(), Some(0.05));
        // A 0.3 offset splits into 0.15 per side.
        let b = shifted_lattice(3, 10, -50, 50);
        assert_eq!(local_match_dist(&a, &b, &grid).unwrap(), Some(0.15));
        // Too-small windows are rejected up front.
        let tiny = patch_at(&a, &Vecd::Exact(vec![QuadReal::zero()]), 3.0).unwrap();
        assert!(matches!(
            local_match_dist(&tiny, &tiny, &grid),
            Err(Error::InsufficientWindow { .. })
        ));
    }

    #[test]
    fn entourage_alignment_on_lattice() {
        let p = PointSet::integer_lattice(-50, 50);
        let q = shifted_lattice(2, 5, -50, 50);
        let k = ClosedSet::ball_at_origin(1, 3.0, true);
        let wide = ClosedSet::ball_at_origin(1, 0.5, true);
        let narrow = ClosedSet::ball_at_origin(1, 0.1, true);
        let x = entourage_align(&p, &q, &k, &wide).unwrap().expect("alignment exists");
        assert!((x.to_f64_vec()[0].abs() - 0.4).abs() < 1e-12);
        assert!(entourage_test(&p, &q, &k, &wide).unwrap());
        assert!(!entourage_test(&p, &q, &k, &narrow).unwrap());
    }

    #[test]
    fn census_counts_lattice_and_two_species() {
        let z = PointSet::integer_lattice(-100, 100);
        let c = flc_census_on_points(&z, 2.5).unwrap();
        assert_eq!(c.n_classes, 1);
        assert_eq!(c.anchors_used, 195);
        assert_eq!(c.classes[0].patch_len, 5);

        // Integers plus third-integers. Every small patch is a translate of
        // {0, 1/3}, so one class; at a radius seeing both neighbors the two
        // environments {0, 2/3, 1} and {0, 1/3, 1} separate.
        let mut pts: Vec<Vec<QuadReal>> = Vec::new();
        for n in -30..=30 {
            pts.push(vec![rat(n, 1)]);
            pts.push(vec![rat(3 * n + 1, 3)]);
        }
        let s = PointSet::exact(0, pts, Region::interval(-30.0, 31.0).unwrap()).unwrap();
        let c2 = flc_census_on_points(&s, 0.34).unwrap();
        assert_eq!(c2.n_classes, 1);
        let c3 = flc_census_on_points(&s, 0.75).unwrap();
        assert_eq!(c3.n_classes, 2);
    }

    #[test]
    fn repetitivity_of_lattice() {
        let z = PointSet::integer_lattice(-100, 100);
        let zero = Vecd::Exact(vec![QuadReal::zero()]);
        let m = repetitivity_radius(&z, &zero, 2.5).unwrap().unwrap();
        assert!((m - 0.5).abs() < 1e-9, "M {m}");
    }

    #[test]
    fn derivability_detects_parity_failure() {
        let d = PointSet::integer_lattice(-50, 50);
        let evens: Vec<Vec<QuadReal>> =
            (-25..=25).map(|n| vec![QuadReal::from_i64(2 * n)]).collect();
        let e =
            PointSet::exact(0, evens, Region::interval(-50.0, 50.0).unwrap()).unwrap();
        let samples = derivability_samples(&d, 1.0, 0.5, 200, 7).unwrap();
        assert_eq!(samples.len(), 200);
        let rep = local_derivability_check(&d, &e, 1.0, &samples).unwrap();
        assert_eq!(rep.hypothesis_held, 200);
        assert!(!rep.ok());

        // A set is trivially derivable from itself.
        let rep2 = local_derivability_check(&d, &d, 1.0, &samples).unwrap();
        assert!(rep2.ok());
    }
}
