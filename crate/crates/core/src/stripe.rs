//! Forbidden-band stripes: membership in S(a, b, L1, L2), certificate
//! verification over matched patch pairs, the eigenvalue-driven stripe
//! search, and the constructive converse chain (locator sets, level-set
//! refinement, band-to-character recovery).
//!
//! A certificate never claims more than it checked: it records the sample
//! count and every violation found on the window, in deterministic order.

use crate::cps::{find_small_eigenvalue, CutProjectScheme};
use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::patternspace::{
    default_anchors, matched_set, patch_at, MatchEngine, PointSet, Region, Vecd,
};
use crate::rng::SplitMix64;
use crate::spectra::{equivariance_modulus, rho_t, Character, EquivarianceReport, Provenance};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Band-edge tolerance for membership decisions.
pub const BAND_TOL: f64 = 1e-12;

/// Upper bound on stored violations; the total count is always reported.
const VIOLATION_CAP: usize = 1_000;

/// Default refinement grid for the converse chain.
pub const DEFAULT_EPS_GRID: [f64; 4] = [0.2, 0.1, 0.05, 0.02];

/// The stripe family S(a, b, L1, L2): points whose projection onto the
/// unit direction `a`, measured from an anchor b, lies within L2 of the
/// lattice L1 Z.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripeSpec {
    /// Unit direction.
    pub a: Vec<f64>,
    /// Band period along the direction.
    pub l1: f64,
    /// Band half-width.
    pub l2: f64,
    /// Patch radius at which the stripe property is asserted.
    pub r: f64,
}

impl StripeSpec {
    pub fn new(a: Vec<f64>, l1: f64, l2: f64, r: f64) -> Result<Self> {
        let norm = a.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Parse(format!("direction must be unit, |a| = {norm}")));
        }
        if !(l1 > 0.0) {
            return Err(Error::Parse(format!("period {l1} must be positive")));
        }
        if !(l2 >= 0.0) || l2 >= l1 / 2.0 {
            return Err(Error::Parse(format!("half-width {l2} must lie in [0, {}/2)", l1)));
        }
        if !(r > 0.0) {
            return Err(Error::Parse(format!("patch radius {r} must be positive")));
        }
        Ok(StripeSpec { a, l1, l2, r })
    }

    /// Normalize a direction first, then validate.
    pub fn from_direction(a: Vec<f64>, l1: f64, l2: f64, r: f64) -> Result<Self> {
        let norm = a.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Parse("direction must be nonzero".into()));
        }
        StripeSpec::new(a.into_iter().map(|c| c / norm).collect(), l1, l2, r)
    }
}

/// Distance from <x - b, a> to the nearest multiple of L1. Ties at the
/// half-period round to even, so band-edge decisions are deterministic.
pub fn band_distance(spec: &StripeSpec, b: &[f64], x: &[f64]) -> Result<f64> {
    if b.len() != spec.a.len() || x.len() != spec.a.len() {
        return Err(Error::DimMismatch(x.len(), spec.a.len()));
    }
    let u: f64 = x.iter().zip(b).zip(&spec.a).map(|((xc, bc), ac)| (xc - bc) * ac).sum();
    let k = round_half_even(u / spec.l1);
    Ok((u - k * spec.l1).abs())
}

fn round_half_even(v: f64) -> f64 {
    let r = v.round();
    if (v - v.trunc()).abs() == 0.5 && r % 2.0 != 0.0 {
        r - v.signum()
    } else {
        r
    }
}

/// Is x inside the stripe family anchored at b?
pub fn stripe_membership(spec: &StripeSpec, b: &[f64], x: &[f64]) -> Result<bool> {
    Ok(band_distance(spec, b, x)? <= spec.l2 + BAND_TOL)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub band_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripeCertificate {
    pub spec: StripeSpec,
    pub source_character: Character,
    /// Anchors actually verified (anchors whose patch ball the window
    /// cannot cover are skipped and counted separately).
    pub samples_checked: usize,
    pub anchors_skipped: usize,
    /// Total violating pairs; `violations` stores at most the first
    /// thousand in lexicographic (x, y) order.
    pub violations_total: usize,
    pub violations: Vec<Violation>,
}

impl StripeCertificate {
    pub fn holds(&self) -> bool {
        self.violations_total == 0
    }
}

fn cmp_f64s(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    Ordering::Equal
}

fn verify_with_character(
    d: &PointSet,
    spec: &StripeSpec,
    source: Character,
    sample_xs: &[Vecd],
    search_radius: f64,
) -> Result<StripeCertificate> {
    if d.dim() != spec.a.len() {
        return Err(Error::DimMismatch(d.dim(), spec.a.len()));
    }
    let engine = MatchEngine::new(d);
    let per_anchor: Vec<Result<Option<Vec<Violation>>>> = sample_xs
        .par_iter()
        .map(|x| {
            if !d.region().covers_ball(x, spec.r) {
                return Ok(None);
            }
            let xf = x.to_f64_vec();
            let m = engine.matches(x, spec.r, search_radius)?;
            let mut bad = Vec::new();
            for (y, t) in m.ys.iter().zip(&m.shifts) {
                // <y - x, a> is exactly the shift's projection.
                let u: f64 = t.iter().zip(&spec.a).map(|(tc, ac)| tc * ac).sum();
                let k = round_half_even(u / spec.l1);
                let dist = (u - k * spec.l1).abs();
                if dist > spec.l2 + BAND_TOL {
                    bad.push(Violation {
                        x: xf.clone(),
                        y: y.to_f64_vec(),
                        band_distance: dist,
                    });
                }
            }
            Ok(Some(bad))
        })
        .collect();

    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut violations: Vec<Violation> = Vec::new();
    for r in per_anchor {
        match r? {
            None => skipped += 1,
            Some(bad) => {
                checked += 1;
                violations.extend(bad);
            }
        }
    }
    if checked == 0 {
        return Err(Error::InsufficientWindow {
            center: "every stripe anchor".into(),
            radius: spec.r,
        });
    }
    violations.sort_by(|a, b| cmp_f64s(&a.x, &b.x).then_with(|| cmp_f64s(&a.y, &b.y)));
    let total = violations.len();
    violations.truncate(VIOLATION_CAP);
    Ok(StripeCertificate {
        spec: spec.clone(),
        source_character: source,
        samples_checked: checked,
        anchors_skipped: skipped,
        violations_total: total,
        violations,
    })
}

/// Verify the stripe property of `spec` on `d`: every y matched to a
/// sampled anchor x at patch radius spec.r must fall in S(a, x, L1, L2).
/// The implied character a / L1 is recorded as the certificate's source.
pub fn stripe_verify(
    d: &PointSet,
    spec: &StripeSpec,
    sample_xs: &[Vecd],
    search_radius: f64,
) -> Result<StripeCertificate> {
    let implied = Character::from_f64(spec.a.iter().map(|c| c / spec.l1).collect());
    verify_with_character(d, spec, implied, sample_xs, search_radius)
}

/// Where stripe_search draws its candidate characters from.
pub enum CharacterSource<'a> {
    Scheme(&'a CutProjectScheme),
    Explicit(&'a [Character]),
}

/// Forward direction: pick a character with 1/|a| near the target period,
/// then find the smallest patch radius in the grid at which the sampled
/// equivariance modulus fits inside the band, and verify the stripe there.
/// Escalates through the grid past radii where verification still finds
/// violations.
pub fn stripe_search(
    d: &PointSet,
    source: CharacterSource<'_>,
    t1: f64,
    t2: f64,
    eps: f64,
    r_grid: &[f64],
    sample_xs: &[Vecd],
) -> Result<StripeCertificate> {
    let chr = match source {
        CharacterSource::Scheme(s) => find_small_eigenvalue(s, t1, eps)?,
        CharacterSource::Explicit(list) => list
            .iter()
            .filter(|c| c.norm() > 0.0 && (1.0 / c.norm() - t1).abs() < eps)
            .min_by(|a, b| {
                let da = (1.0 / a.norm() - t1).abs();
                let db = (1.0 / b.norm() - t1).abs();
                da.partial_cmp(&db).unwrap_or(Ordering::Equal)
            })
            .cloned()
            .ok_or(Error::NotFound { target: t1, eps, bound: 0 })?,
    };
    let l1 = 1.0 / chr.norm();
    let l2 = t2;
    // Band half-width in turns; omega must fit inside it.
    let band = l2 / l1;
    let unit: Vec<f64> = chr.a.iter().map(|c| c * l1).collect();

    let mut grid: Vec<f64> = r_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let span = d
        .region()
        .span()
        .into_iter()
        .fold(0.0f64, f64::max);

    // Thinned anchor set for the modulus scan; full set for verification.
    let stride = (sample_xs.len() / 256).max(1);
    let thin: Vec<Vecd> = sample_xs.iter().step_by(stride).cloned().collect();
    let mut min_omega = f64::INFINITY;
    for &r in &grid {
        let rep = match equivariance_modulus(d, &chr, &[r], &thin, span) {
            Ok(rep) => rep,
            Err(Error::InsufficientWindow { .. }) => break,
            Err(e) => return Err(e),
        };
        let omega = rep.omega[0];
        min_omega = min_omega.min(omega);
        if omega > band {
            continue;
        }
        let spec = StripeSpec::new(unit.clone(), l1, l2, r)?;
        let cert = verify_with_character(d, &spec, chr.clone(), sample_xs, span)?;
        if cert.holds() {
            return Ok(cert);
        }
    }
    Err(Error::NoDecay { band, min_omega })
}

/// A locator set with its Delone evidence.
#[derive(Clone, Debug)]
pub struct LocatorSet {
    pub points: PointSet,
    /// Smallest pairwise distance observed (infinite for fewer than two
    /// points).
    pub r_e: f64,
    /// Empirical covering radius over the region interior, when defined.
    pub covering: Option<f64>,
    /// Covering radius at most a quarter of the region span with at least
    /// two points.
    pub relatively_dense: bool,
}

/// All positions whose R0-patch equals the patch at x0, restricted to
/// `region`. R0 must exceed the covering radius of D, otherwise patches
/// can be empty and the matched set meaningless.
pub fn locator_set(d: &PointSet, x0: &Vecd, r0: f64, region: &Region) -> Result<LocatorSet> {
    let cov_d = d.covering_radius(0.0).unwrap_or(f64::INFINITY);
    if r0 <= cov_d && r0 > 0.0 {
        return Err(Error::R0TooSmall { r0, covering: cov_d });
    }
    let span = d.region().span().into_iter().fold(0.0f64, f64::max);
    let all = matched_set(d, x0, r0, span)?;
    // Clamp to the caller's focus region.
    let lo: Vec<f64> = region.lo.iter().zip(&d.region().lo).map(|(a, b)| a.max(*b)).collect();
    let hi: Vec<f64> = region.hi.iter().zip(&d.region().hi).map(|(a, b)| a.min(*b)).collect();
    let clamped = Region::new(lo, hi, 0.0)?;
    let keep: Vec<usize> = (0..all.len())
        .filter(|&i| clamped.contains_f64(all.approx_point(i)))
        .collect();
    let points = if all.is_exact() {
        let pts = keep
            .iter()
            .map(|&i| all.exact_points().expect("exact")[i].clone())
            .collect();
        PointSet::exact(all.disc().unwrap_or(0), pts, clamped.clone())?
    } else {
        let pts = keep.iter().map(|&i| all.approx_point(i).to_vec()).collect();
        PointSet::float_mode(all.tol(), pts, clamped.clone())?
    };
    let r_e = points.min_gap().unwrap_or(f64::INFINITY);
    let covering = points.covering_radius(r0);
    let min_span = clamped.span().into_iter().fold(f64::INFINITY, f64::min);
    let relatively_dense =
        points.len() >= 2 && covering.map_or(false, |c| c <= min_span / 4.0);
    Ok(LocatorSet { points, r_e, covering, relatively_dense })
}

/// Outcome of refining level sets of a sampled function.
#[derive(Clone, Debug)]
pub struct LevelSetReport {
    /// The refined locator set D_eps.
    pub points: PointSet,
    /// Function values carried onto the refined set.
    pub theta: Vec<f64>,
    /// Largest pairwise value difference on the refined set.
    pub spread: f64,
    /// Witness near the supremum.
    pub witness_hi: Vec<f64>,
    /// Witness near the infimum.
    pub witness_lo: Vec<f64>,
    /// Ball center containing both witnesses.
    pub c0: Vec<f64>,
    pub r0: f64,
    pub quadruples_checked: usize,
}

fn index_near(set: &PointSet, q: &[f64], tol: f64) -> Option<usize> {
    let n = set.len();
    let mut lo = 0usize;
    let mut hi = n;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if set.approx_point(mid)[0] < q[0] - tol {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let mut i = lo;
    while i < n && set.approx_point(i)[0] <= q[0] + tol {
        let p = set.approx_point(i);
        let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2.sqrt() <= tol {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Shrink a point set to a level set of a sampled function: verify the
/// difference-cocycle hypothesis on random quadruples, then locate the
/// patch of a ball containing witnesses of the extreme values. Values on
/// the result spread by less than eps once eps is small enough for the
/// input; the spread is reported, not assumed.
///
/// `theta` is indexed like the points of `d`, in turns on the principal
/// branch [-1/2, 1/2); differences are taken unwrapped.
pub fn level_set_refine(d: &PointSet, theta: &[f64], eps: f64) -> Result<LevelSetReport> {
    let n = d.len();
    if theta.len() != n {
        return Err(Error::DimMismatch(theta.len(), n));
    }
    if n == 0 {
        return Err(Error::EmptyPatch("level-set refinement of an empty set".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::Parse(format!("eps {eps} must be positive")));
    }

    // Cocycle hypothesis a - b = c - d => f(a) - f(b) = f(c) - f(d),
    // sampled: draw (a, b, c), solve for d in the set, compare modulo one.
    let mut rng = SplitMix64::new(0x1e7e15e7);
    let mut quadruples = 0usize;
    let dim = d.dim();
    let mut attempts = 0usize;
    while quadruples < 300 && attempts < 2_000 && n >= 2 {
        attempts += 1;
        let i = rng.next_below(n as u64) as usize;
        let j = rng.next_below(n as u64) as usize;
        let k = rng.next_below(n as u64) as usize;
        if i == j {
            continue;
        }
        let (pi, pj, pk) = (d.approx_point(i), d.approx_point(j), d.approx_point(k));
        let target: Vec<f64> = (0..dim).map(|ax| pk[ax] + (pj[ax] - pi[ax])).collect();
        let Some(l) = index_near(d, &target, 1e-9) else { continue };
        quadruples += 1;
        let dev = rho_t(theta[j] - theta[i], theta[l] - theta[k]);
        if dev > 1e-6 {
            return Err(Error::CocycleViolation {
                a: pj[0],
                b: pi[0],
                c: d.approx_point(l)[0],
                d: pk[0],
                dev,
            });
        }
    }

    let m_hi = theta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let m_lo = theta.iter().cloned().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (m_hi + m_lo);
    let sup = m_hi - mid;
    // Among near-extremal witnesses prefer the ones closest to the region
    // center, so the witness ball has the best chance of fitting inside.
    let center = d.region().center();
    let dist2 = |i: usize| -> f64 {
        d.approx_point(i).iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum()
    };
    let pick = |ok: &dyn Fn(usize) -> bool| -> usize {
        (0..n)
            .filter(|&i| ok(i))
            .min_by(|&i, &j| dist2(i).partial_cmp(&dist2(j)).unwrap_or(Ordering::Equal))
            .expect("extremum exists")
    };
    let hi_idx = pick(&|i| theta[i] - mid >= sup - eps / 2.0);
    let lo_idx = pick(&|i| theta[i] - mid <= -sup + eps / 2.0);
    let a0 = d.approx_point(hi_idx).to_vec();
    let b0 = d.approx_point(lo_idx).to_vec();
    let mut r0 = a0
        .iter()
        .zip(&b0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
        / 2.0;
    if r0 == 0.0 {
        // Coincident witnesses: any radius below the packing gap yields the
        // singleton patch at c0.
        r0 = 0.5 * d.min_gap().unwrap_or(1.0);
    }
    let c0 = match (d.exact_points(), ()) {
        (Some(pts), ()) => {
            let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
            let mut mid_pt = Vec::with_capacity(dim);
            for ax in 0..dim {
                let s = pts[hi_idx][ax].checked_add(&pts[lo_idx][ax])?;
                mid_pt.push(s.checked_mul(&half)?);
            }
            Vecd::Exact(mid_pt)
        }
        _ => Vecd::Float((0..dim).map(|ax| 0.5 * (a0[ax] + b0[ax])).collect()),
    };
    let c0_f = c0.to_f64_vec();
    let avail = c0_f
        .iter()
        .zip(d.region().lo.iter().zip(&d.region().hi))
        .map(|(c, (l, h))| (c - l).min(h - c))
        .fold(f64::INFINITY, f64::min);
    if r0 > avail {
        return Err(Error::R0ExceedsWindow { r0, max: avail });
    }

    let span = d.region().span().into_iter().fold(0.0f64, f64::max);
    let refined = matched_set(d, &c0, r0, span)?;
    // Values transfer along the common patch offset: the patch point that
    // realizes the ball around c0 reappears at every matched position.
    let anchor_patch = patch_at(d, &c0, r0)?;
    if anchor_patch.is_empty() {
        return Err(Error::EmptyPatch(format!("patch at the witness midpoint, radius {r0}")));
    }
    let u0 = anchor_patch.approx_point(0).to_vec();
    let mut theta_out = Vec::with_capacity(refined.len());
    let mut keep = Vec::with_capacity(refined.len());
    for i in 0..refined.len() {
        let y = refined.approx_point(i);
        let probe: Vec<f64> = (0..dim).map(|ax| y[ax] + u0[ax]).collect();
        if let Some(idx) = index_near(d, &probe, 1e-9) {
            theta_out.push(theta[idx]);
            keep.push(i);
        }
    }
    let points = if refined.is_exact() {
        let pts = keep
            .iter()
            .map(|&i| refined.exact_points().expect("exact")[i].clone())
            .collect();
        PointSet::exact(refined.disc().unwrap_or(0), pts, refined.region().clone())?
    } else {
        let pts = keep.iter().map(|&i| refined.approx_point(i).to_vec()).collect();
        PointSet::float_mode(refined.tol(), pts, refined.region().clone())?
    };
    let t_hi = theta_out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let t_lo = theta_out.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if theta_out.is_empty() { 0.0 } else { t_hi - t_lo };
    Ok(LevelSetReport {
        points,
        theta: theta_out,
        spread,
        witness_hi: a0,
        witness_lo: b0,
        c0: c0_f,
        r0,
        quadruples_checked: quadruples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSetOutcome {
    pub eps: f64,
    pub points: usize,
    pub spread: Option<f64>,
    pub error: Option<String>,
}

/// Character recovered from a stripe certificate, with its evidence.
#[derive(Debug)]
pub struct RecoveredCharacter {
    pub character: Character,
    pub locator: LocatorSet,
    /// Worst distance of a locator point's phase from the integers, in
    /// turns; the band-to-character hypothesis requires < 1/4.
    pub band_max: f64,
    pub on_d: EquivarianceReport,
    pub on_e: EquivarianceReport,
    pub level_sets: Vec<LevelSetOutcome>,
}

/// Converse direction: from a holding certificate, rebuild the character
/// (1/L1) a, check the quarter-band hypothesis on the locator set of the
/// certificate's patch radius, refine level sets of the wrapped phase, and
/// measure equivariance on both the locator set and the original set.
pub fn eigen_from_stripe(
    d: &PointSet,
    cert: &StripeCertificate,
    eps_grid: &[f64],
) -> Result<RecoveredCharacter> {
    let spec = &cert.spec;
    if spec.l1 <= 4.0 * spec.l2 {
        return Err(Error::InfeasibleParams(format!(
            "band-to-character needs L1 > 4 L2, got L1 = {}, L2 = {}",
            spec.l1, spec.l2
        )));
    }

    // Anchor: the covered on-point closest to the region center.
    let center = d.region().center();
    let mut b0_idx: Option<usize> = None;
    let mut best = f64::INFINITY;
    for i in 0..d.len() {
        let p = d.point(i);
        if !d.region().covers_ball(&p, spec.r) {
            continue;
        }
        let dist: f64 = d
            .approx_point(i)
            .iter()
            .zip(&center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if dist < best {
            best = dist;
            b0_idx = Some(i);
        }
    }
    let b0_idx = b0_idx.ok_or(Error::InsufficientWindow {
        center: "certificate anchor near the region center".into(),
        radius: spec.r,
    })?;
    let b0 = d.point(b0_idx);
    let b0_f = b0.to_f64_vec();

    // Recovered frequency (1/L1) a; reuse the exact form when the source
    // character agrees with it numerically.
    let a_rec: Vec<f64> = spec.a.iter().map(|c| c / spec.l1).collect();
    let src = &cert.source_character;
    let exact_match = src
        .a
        .iter()
        .zip(&a_rec)
        .all(|(s, r)| (s - r).abs() <= 1e-9 * r.abs().max(1.0));
    let character = Character {
        a: a_rec.clone(),
        a_exact: if exact_match { src.a_exact.clone() } else { None },
        a_star: if exact_match { src.a_star.clone() } else { None },
        a_star_exact: if exact_match { src.a_star_exact.clone() } else { None },
        coeffs: if exact_match { src.coeffs.clone() } else { None },
        provenance: if exact_match { src.provenance } else { Provenance::User },
    };

    let locator = locator_set(d, &b0, spec.r, d.region())?;
    let e = &locator.points;

    // Quarter-band hypothesis: every locator point's phase relative to b0
    // sits within 1/4 turn of the integers.
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let mut theta_e = Vec::with_capacity(e.len());
    for i in 0..e.len() {
        let y = e.approx_point(i);
        let u: f64 = y.iter().zip(&b0_f).zip(&a_rec).map(|((yc, bc), ac)| (yc - bc) * ac).sum();
        let mut ph = u - u.round();
        if ph >= 0.5 {
            ph -= 1.0;
        }
        let dist = ph.abs();
        worst = worst.max(dist);
        if dist >= 0.25 {
            failures += 1;
        }
        theta_e.push(ph);
    }
    if failures > 0 {
        return Err(Error::BandHypothesisFails { count: failures, worst });
    }

    // Level-set refinement of the wrapped phase at each eps.
    let grid: &[f64] = if eps_grid.is_empty() { &DEFAULT_EPS_GRID } else { eps_grid };
    let mut level_sets = Vec::with_capacity(grid.len());
    for &eps in grid {
        match level_set_refine(e, &theta_e, eps) {
            Ok(rep) => level_sets.push(LevelSetOutcome {
                eps,
                points: rep.points.len(),
                spread: Some(rep.spread),
                error: None,
            }),
            Err(err) => level_sets.push(LevelSetOutcome {
                eps,
                points: 0,
                spread: None,
                error: Some(err.kind().to_string()),
            }),
        }
    }

    // Equivariance of the recovered character on D and on E; the grid
    // includes the certificate's own radius, where the certificate itself
    // bounds the modulus.
    let span_min = d.region().span().into_iter().fold(f64::INFINITY, f64::min);
    let span_max = d.region().span().into_iter().fold(0.0f64, f64::max);
    let mut r_grid: Vec<f64> = [5.0, 10.0, 20.0, 35.0, 50.0, spec.r]
        .into_iter()
        .filter(|r| *r <= 0.45 * span_min)
        .collect();
    r_grid.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    r_grid.dedup();
    if r_grid.is_empty() {
        r_grid.push(0.25 * span_min);
    }
    let max_r = r_grid.last().copied().expect("nonempty");
    let on_d = equivariance_modulus(d, &character, &r_grid, &thin_anchors(d, max_r), span_max)?;
    let on_e = match equivariance_modulus(e, &character, &r_grid, &thin_anchors(e, max_r), span_max)
    {
        Ok(rep) => rep,
        // Locator sets can be too sparse for the small grid radii: retry
        // on the radii that can pair.
        Err(Error::NoPairs { .. }) | Err(Error::InsufficientWindow { .. }) => {
            let coarse: Vec<f64> =
                r_grid.iter().copied().filter(|r| *r >= spec.r.min(max_r)).collect();
            equivariance_modulus(e, &character, &coarse, &thin_anchors(e, max_r), span_max)?
        }
        Err(e) => return Err(e),
    };

    let min_omega = on_d
        .omega
        .iter()
        .chain(&on_e.omega)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_omega > 0.45 {
        return Err(Error::NoDecay { band: spec.l2 / spec.l1, min_omega });
    }

    Ok(RecoveredCharacter { character, locator, band_max: worst, on_d, on_e, level_sets })
}

fn thin_anchors(set: &PointSet, clearance: f64) -> Vec<Vecd> {
    let all = default_anchors(set, clearance, 0);
    let stride = (all.len() / 512).max(1);
    all.into_iter().step_by(stride).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cps::fibonacci_scheme;
    use crate::cps::{fibonacci_window, model_set};

    fn zset(lo: i64, hi: i64) -> PointSet {
        PointSet::integer_lattice(lo, hi)
    }

    #[test]
    fn membership_basics() {
        let spec = StripeSpec::new(vec![1.0, 0.0], 1.0, 0.1, 1.0).unwrap();
        let b = vec![0.0, 0.0];
        assert!(stripe_membership(&spec, &b, &b).unwrap());
        assert!(stripe_membership(&spec, &b, &[2.05, 7.0]).unwrap());
        assert!(!stripe_membership(&spec, &b, &[0.5, 0.0]).unwrap());
    }

    #[test]
    fn band_periodicity() {
        let spec = StripeSpec::new(vec![0.6, 0.8], 2.5, 0.3, 1.0).unwrap();
        let b = vec![0.25, -1.5];
        for k in 0..20 {
            let x = vec![0.1 * k as f64, 0.05 * k as f64 - 0.4];
            let d0 = band_distance(&spec, &b, &x).unwrap();
            let shifted: Vec<f64> =
                x.iter().zip(&spec.a).map(|(xc, ac)| xc + spec.l1 * ac).collect();
            let d1 = band_distance(&spec, &b, &shifted).unwrap();
            assert!((d0 - d1).abs() < 1e-12, "{d0} vs {d1}");
            let b2: Vec<f64> = b.iter().zip(&spec.a).map(|(bc, ac)| bc + spec.l1 * ac).collect();
            let d2 = band_distance(&spec, &b2, &x).unwrap();
            assert!((d0 - d2).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_lattice_holds_unit_bands() {
        let d = zset(-50, 50);
        let spec = StripeSpec::new(vec![1.0], 1.0, 0.01, 1.5).unwrap();
        let anchors = default_anchors(&d, 1.5, 20);
        let cert = stripe_verify(&d, &spec, &anchors, 100.0).unwrap();
        assert!(cert.holds(), "{} violations", cert.violations_total);
        assert!(cert.samples_checked > 90);
    }

    #[test]
    fn integer_lattice_breaks_irrational_bands() {
        let d = zset(-50, 50);
        let spec =
            StripeSpec::new(vec![1.0], std::f64::consts::SQRT_2, 0.1, 1.5).unwrap();
        let anchors = default_anchors(&d, 1.5, 20);
        let cert = stripe_verify(&d, &spec, &anchors, 100.0).unwrap();
        assert!(!cert.holds());
        let expect = std::f64::consts::SQRT_2 - 1.0;
        assert!(
            cert.violations.iter().any(|v| (v.band_distance - expect).abs() < 1e-9),
            "no violation at distance {expect}"
        );
    }

    #[test]
    fn search_rejects_discrete_spectrum() {
        let d = zset(-50, 50);
        let s = crate::cps::lattice_scheme(1);
        let anchors = default_anchors(&d, 2.0, 10);
        let err = stripe_search(
            &d,
            CharacterSource::Scheme(&s),
            std::f64::consts::SQRT_2,
            0.1,
            0.01,
            &[2.0, 5.0],
            &anchors,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotFound { .. }), "{err:?}");
    }

    #[test]
    fn search_with_explicit_character_on_lattice() {
        let d = zset(-50, 50);
        let good = Character::from_f64(vec![1.0]);
        let anchors = default_anchors(&d, 2.0, 10);
        let cert = stripe_search(
            &d,
            CharacterSource::Explicit(std::slice::from_ref(&good)),
            1.0,
            0.1,
            0.01,
            &[1.5, 3.0],
            &anchors,
        )
        .unwrap();
        assert!(cert.holds());
        assert!((cert.spec.l1 - 1.0).abs() < 1e-12);
        assert!((cert.spec.l2 - 0.1).abs() < 1e-12);

        // A frequency whose phase jumps by a half turn on matched shifts
        // can never fit a narrow band.
        let bad = Character::from_f64(vec![0.5]);
        let err = stripe_search(
            &d,
            CharacterSource::Explicit(std::slice::from_ref(&bad)),
            2.0,
            0.01,
            0.01,
            &[1.5, 3.0],
            &anchors,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoDecay { .. }), "{err:?}");
    }

    #[test]
    fn forward_pipeline_on_fibonacci_window() {
        let region = Region::interval(-300.0, 300.0).unwrap();
        let d = model_set(&fibonacci_scheme(), &fibonacci_window(), &region, 500, false)
            .unwrap();
        let anchors = default_anchors(&d, 80.0, 50);
        let cert = stripe_search(
            &d,
            CharacterSource::Scheme(&fibonacci_scheme()),
            3.618,
            0.3,
            0.01,
            &[10.0, 20.0, 40.0, 80.0],
            &anchors,
        )
        .unwrap();
        assert!(cert.holds(), "{} violations", cert.violations_total);
        assert!((cert.spec.l1 - 3.618).abs() < 0.01, "L1 = {}", cert.spec.l1);
        assert_eq!(cert.spec.l2, 0.3);
        assert!(cert.samples_checked > 300);
    }

    #[test]
    fn locator_set_on_lattice_is_the_lattice() {
        let d = zset(-100, 100);
        let x0 = d.point(100);
        let loc = locator_set(&d, &x0, 2.0, d.region()).unwrap();
        assert!((loc.r_e - 1.0).abs() < 1e-12);
        assert!(loc.relatively_dense);
        assert!(loc.covering.unwrap() <= 1.0);
        // Everything except the two uncoverable edge points comes back.
        assert_eq!(loc.points.len(), 197);
    }

    #[test]
    fn locator_rejects_radius_below_covering() {
        let d = zset(-100, 100);
        let x0 = d.point(100);
        let err = locator_set(&d, &x0, 0.2, d.region()).unwrap_err();
        assert!(matches!(err, Error::R0TooSmall { .. }), "{err:?}");
    }

    #[test]
    fn constant_theta_refines_with_zero_spread() {
        let d = zset(-40, 40);
        let theta = vec![0.125; d.len()];
        let rep = level_set_refine(&d, &theta, 0.05).unwrap();
        assert_eq!(rep.spread, 0.0);
        // All of Z except the two points whose bumped ball leaves the region.
        assert_eq!(rep.points.len(), 79);
        assert!(rep.r0 > 0.0 && rep.r0 < 1.0);
    }

    #[test]
    fn inconsistent_theta_fails_the_cocycle_check() {
        let d = zset(-40, 40);
        // Values that depend on parity cannot be difference-consistent
        // against shift-by-one quadruples.
        let theta: Vec<f64> =
            (0..d.len()).map(|i| if i % 2 == 0 { 0.0 } else { 0.21 }).collect();
        let err = level_set_refine(&d, &theta, 0.05).unwrap_err();
        assert!(matches!(err, Error::CocycleViolation { .. }), "{err:?}");
    }

    #[test]
    fn irrational_phase_on_lattice_keeps_large_spread() {
        let d = zset(-40, 40);
        let theta: Vec<f64> = (0..d.len())
            .map(|i| {
                let x = d.approx_point(i)[0];
                let v = x * std::f64::consts::SQRT_2;
                let mut f = v - v.round();
                if f >= 0.5 {
                    f -= 1.0;
                }
                f
            })
            .collect();
        // The cocycle holds modulo one, so refinement proceeds, but no
        // patch can pin the phase: the spread stays macroscopic.
        match level_set_refine(&d, &theta, 0.05) {
            Ok(rep) => assert!(rep.spread >= 0.05, "spread {}", rep.spread),
            Err(Error::R0ExceedsWindow { .. }) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn recover_character_from_lattice_certificate() {
        let d = zset(-60, 60);
        let spec = StripeSpec::new(vec![1.0], 1.0, 0.1, 2.0).unwrap();
        let anchors = default_anchors(&d, 2.0, 20);
        let cert = stripe_verify(&d, &spec, &anchors, 150.0).unwrap();
        assert!(cert.holds());
        let rec = eigen_from_stripe(&d, &cert, &[]).unwrap();
        assert!((rec.character.a[0] - 1.0).abs() < 1e-12);
        assert!(rec.band_max < 1e-9, "band max {}", rec.band_max);
        for om in &rec.on_d.omega {
            assert!(*om < 1e-9);
        }
        for ls in &rec.level_sets {
            assert_eq!(ls.spread, Some(0.0), "{ls:?}");
        }
    }

    #[test]
    fn recovery_requires_the_band_regime() {
        let d = zset(-60, 60);
        let spec = StripeSpec::new(vec![1.0], 1.0, 0.3, 2.0).unwrap();
        let anchors = default_anchors(&d, 2.0, 0);
        let cert = stripe_verify(&d, &spec, &anchors, 150.0).unwrap();
        let err = eigen_from_stripe(&d, &cert, &[]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleParams(_)), "{err:?}");
    }
}
