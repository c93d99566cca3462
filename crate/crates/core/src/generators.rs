//! Built-in point-set families with known ground truth: periodic lattices,
//! one- and two-dimensional model sets, the Fibonacci substitution as an
//! independent oracle, a seeded random Delone control, and conversions from
//! richer patterns (tilings, labeled sets, combs) to plain Delone sets.

use crate::cps::{
    ammann_beenker_scheme, ammann_beenker_window, fibonacci_scheme, fibonacci_window, model_set,
    silver_scheme, silver_window, CutProjectScheme, WindowSpec,
};
use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::patternspace::{LabeledPointSet, Patch, Pattern, PointSet, Region, WeightedComb};
use crate::rng::SplitMix64;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::HashMap;

/// Hard cap on lattice/filler enumeration so bad configs fail fast.
const MAX_CELLS: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Lattice,
    FibonacciCps,
    FibonacciSubstitution,
    SilverMean,
    AmmannBeenker,
    PoissonControl,
}

/// Declarative generator input, the JSON shape accepted by the CLI.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub family: Family,
    /// Region bounds; optional only for the substitution family, which
    /// carries its own natural region.
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Lattice rows; identity when omitted.
    #[serde(default)]
    pub basis: Option<Vec<Vec<f64>>>,
    /// Fixed global offset length along the first axis (lattice family).
    #[serde(default)]
    pub perturbation: Option<f64>,
    #[serde(default)]
    pub iterations: Option<u32>,
    #[serde(default)]
    pub seed_tile: Option<char>,
    /// Interval window override for the 1D model-set families.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    /// Packing radius (poisson-control).
    #[serde(default)]
    pub r: Option<f64>,
    /// Covering radius (poisson-control).
    #[serde(default, rename = "R")]
    pub big_r: Option<f64>,
}

impl GeneratorConfig {
    pub fn region(&self) -> Result<Region> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => Region::new(lo.clone(), hi.clone(), 0.0),
            _ => Err(Error::Parse("generator config needs lo and hi bounds".into())),
        }
    }

    fn interval_window(&self, default: WindowSpec) -> Result<WindowSpec> {
        match self.window {
            None => Ok(default),
            Some((lo, hi)) => Ok(WindowSpec::Interval {
                lo: QuadReal::from_f64_exact(lo)?,
                hi: QuadReal::from_f64_exact(hi)?,
            }),
        }
    }
}

/// Dispatch a config to its family generator.
pub fn generate(cfg: &GeneratorConfig) -> Result<PointSet> {
    match cfg.family {
        Family::Lattice => {
            let region = cfg.region()?;
            let d = region.dim();
            let identity: Vec<Vec<f64>> =
                (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
            let basis = cfg.basis.as_deref().unwrap_or(&identity);
            gen_lattice(d, basis, &region, cfg.perturbation.unwrap_or(0.0))
        }
        Family::FibonacciCps => {
            gen_fibonacci_cps(&cfg.region()?, &cfg.interval_window(fibonacci_window())?)
        }
        Family::FibonacciSubstitution => {
            gen_fibonacci_substitution(cfg.iterations.unwrap_or(12), cfg.seed_tile.unwrap_or('a'))
        }
        Family::SilverMean => {
            gen_silver_cps(&cfg.region()?, &cfg.interval_window(silver_window())?)
        }
        Family::AmmannBeenker => gen_ammann_beenker(&cfg.region()?),
        Family::PoissonControl => {
            let seed = cfg
                .seed
                .ok_or_else(|| Error::Parse("seed is mandatory for poisson-control".into()))?;
            gen_poisson_delone(
                &cfg.region()?,
                cfg.r.unwrap_or(0.5),
                cfg.big_r.unwrap_or(3.0),
                seed,
            )
        }
    }
}

/// Model set with the coefficient bound sized automatically: retry once
/// with the bound the corner method reports as needed.
pub fn model_set_auto(s: &CutProjectScheme, w: &WindowSpec, region: &Region) -> Result<PointSet> {
    match model_set(s, w, region, 64, false) {
        Err(Error::EnumerationTooSmall { needed, .. }) => model_set(s, w, region, needed, false),
        other => other,
    }
}

/// Periodic control: B Z^d clipped to the region, shifted by a fixed global
/// offset of the given length along the first axis. Exact arithmetic when
/// every basis entry is an integer.
pub fn gen_lattice(
    d: usize,
    basis: &[Vec<f64>],
    region: &Region,
    perturbation: f64,
) -> Result<PointSet> {
    if region.dim() != d || basis.len() != d || basis.iter().any(|r| r.len() != d) {
        return Err(Error::DimMismatch(basis.len(), d));
    }
    let inv = invert_f64(basis).ok_or(Error::SingularBasis)?;
    let min_norm = basis
        .iter()
        .map(|r| r.iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    if perturbation.abs() >= 0.5 * min_norm {
        return Err(Error::InfeasibleParams(format!(
            "offset {perturbation} must stay below half the shortest basis vector {min_norm}"
        )));
    }

    // Corner method: coefficient bounds from the region corners pulled back
    // through the inverse basis.
    let mut lo = vec![i64::MAX; d];
    let mut hi = vec![i64::MIN; d];
    for corner in 0..(1usize << d) {
        let p: Vec<f64> = (0..d)
            .map(|i| {
                let c = if corner >> i & 1 == 1 { region.hi[i] } else { region.lo[i] };
                c - if i == 0 { perturbation } else { 0.0 }
            })
            .collect();
        for i in 0..d {
            let k: f64 = (0..d).map(|j| p[j] * inv[j][i]).sum();
            lo[i] = lo[i].min(k.floor() as i64 - 1);
            hi[i] = hi[i].max(k.ceil() as i64 + 1);
        }
    }
    let cells: usize = (0..d)
        .map(|i| (hi[i] - lo[i] + 1).max(0) as usize)
        .try_fold(1usize, |acc, n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if cells > MAX_CELLS {
        return Err(Error::InfeasibleParams(format!(
            "lattice enumeration of {cells} cells exceeds the guard"
        )));
    }

    let exact = basis.iter().flatten().all(|c| c.fract() == 0.0 && c.abs() < 9e15);
    let mut coeff = lo.clone();
    let mut float_pts: Vec<Vec<f64>> = Vec::new();
    let mut exact_pts: Vec<Vec<QuadReal>> = Vec::new();
    let off_exact = QuadReal::from_f64_exact(perturbation)?;
    loop {
        let p: Vec<f64> = (0..d)
            .map(|i| {
                (0..d).map(|j| coeff[j] as f64 * basis[j][i]).sum::<f64>()
                    + if i == 0 { perturbation } else { 0.0 }
            })
            .collect();
        if region.contains_f64(&p) {
            if exact {
                let row: Vec<QuadReal> = (0..d)
                    .map(|i| {
                        let mut acc = QuadReal::zero();
                        for j in 0..d {
                            let term = QuadReal::from_i64(coeff[j])
                                .checked_mul(&QuadReal::from_i64(basis[j][i] as i64))
                                .expect("integer product");
                            acc = acc.checked_add(&term).expect("integer sum");
                        }
                        if i == 0 {
                            acc = acc.checked_add(&off_exact).expect("rational sum");
                        }
                        acc
                    })
                    .collect();
                exact_pts.push(row);
            } else {
                float_pts.push(p);
            }
        }
        let mut axis = 0;
        loop {
            coeff[axis] += 1;
            if coeff[axis] <= hi[axis] {
                break;
            }
            coeff[axis] = lo[axis];
            axis += 1;
            if axis == d {
                return if exact {
                    PointSet::exact(0, exact_pts, region.clone())
                } else {
                    PointSet::float_mode(1e-9, float_pts, region.clone())
                };
            }
        }
    }
}

fn invert_f64(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(Ordering::Equal)
        })?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col];
        for j in 0..d {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..d {
            if i == col {
                continue;
            }
            let f = a[i][col];
            for j in 0..d {
                a[i][j] -= f * a[col][j];
                inv[i][j] -= f * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Golden-ratio model set on the region, exact arithmetic throughout.
pub fn gen_fibonacci_cps(region: &Region, window: &WindowSpec) -> Result<PointSet> {
    model_set_auto(&fibonacci_scheme(), window, region)
}

/// Silver-mean model set on the region.
pub fn gen_silver_cps(region: &Region, window: &WindowSpec) -> Result<PointSet> {
    model_set_auto(&silver_scheme(), window, region)
}

/// Octagonal model set from Z^4 with the regular octagon window.
pub fn gen_ammann_beenker(region: &Region) -> Result<PointSet> {
    model_set_auto(&ammann_beenker_scheme(), &ammann_beenker_window(), region)
}

/// Left endpoints of the tile sequence obtained by iterating a -> ab,
/// b -> a from the seed tile, with exact lengths tau and 1. Independent of
/// the cut-and-project pipeline, which makes it a cross-check oracle.
pub fn gen_fibonacci_substitution(iterations: u32, seed_tile: char) -> Result<PointSet> {
    if iterations == 0 {
        return Err(Error::Parse("need at least one substitution step".into()));
    }
    let start = match seed_tile {
        'a' | 'b' => seed_tile,
        other => return Err(Error::Parse(format!("seed tile must be a or b, got {other}"))),
    };
    let mut word = vec![start];
    for _ in 0..iterations {
        let mut next = Vec::with_capacity(word.len() * 2);
        for &t in &word {
            match t {
                'a' => next.extend(['a', 'b']),
                _ => next.push('a'),
            }
        }
        word = next;
    }
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let tau = QuadReal::new(half.clone(), half, 5)?;
    let one = QuadReal::one();
    let mut left = QuadReal::zero();
    let mut pts = Vec::with_capacity(word.len());
    for &t in &word {
        pts.push(vec![left.clone()]);
        let len = if t == 'a' { &tau } else { &one };
        left = left.checked_add(len)?;
    }
    let total = left.to_f64();
    PointSet::exact(5, pts, Region::interval(0.0, total)?)
}

/// Random Delone control: uniform candidates thinned to r-separation, then
/// deep holes filled until the covering radius drops to R. Integer-state
/// RNG, so output is identical across platforms for a fixed seed.
pub fn gen_poisson_delone(region: &Region, r: f64, big_r: f64, seed: u64) -> Result<PointSet> {
    if !(r > 0.0) || r >= big_r {
        return Err(Error::InfeasibleParams(format!(
            "need 0 < r < R, got r = {r}, R = {big_r}"
        )));
    }
    let d = region.dim();
    let span = region.span();
    let volume: f64 = span.iter().product();
    let target = (volume / r.powi(d as i32) * 2.0).ceil() as usize;
    if target > 200_000 {
        return Err(Error::InfeasibleParams(format!(
            "candidate budget {target} exceeds the guard; raise r or shrink the region"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    let min_d2 = |accepted: &[Vec<f64>], p: &[f64]| -> f64 {
        accepted
            .iter()
            .map(|q| q.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    };
    for _ in 0..target.max(16) {
        let p: Vec<f64> = (0..d).map(|i| region.lo[i] + span[i] * rng.next_f64()).collect();
        if min_d2(&accepted, &p) >= r * r {
            accepted.push(p);
        }
    }

    // Deterministic deep-hole filler on a probe mesh of step R/2: a probe
    // farther than R from every accepted point is itself r-separated, so
    // insertion always succeeds while holes remain.
    let steps: Vec<usize> =
        span.iter().map(|s| ((s / (big_r / 2.0)).ceil() as usize + 1).max(2)).collect();
    let cells: usize = steps.iter().try_fold(1usize, |a, &n| a.checked_mul(n)).unwrap_or(usize::MAX);
    if cells > MAX_CELLS {
        return Err(Error::InfeasibleParams(format!(
            "hole-probe mesh of {cells} cells exceeds the guard"
        )));
    }
    for _round in 0..100_000 {
        let mut worst = -1.0f64;
        let mut hole: Vec<f64> = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let p: Vec<f64> = (0..d)
                .map(|i| region.lo[i] + span[i] * idx[i] as f64 / (steps[i] - 1) as f64)
                .collect();
            let dist = min_d2(&accepted, &p).sqrt();
            if dist > worst {
                worst = dist;
                hole = p;
            }
            let mut axis = 0;
            loop {
                idx[axis] += 1;
                if idx[axis] < steps[axis] {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
                if axis == d {
                    break;
                }
            }
            if idx.iter().all(|&c| c == 0) {
                break;
            }
        }
        if worst <= big_r {
            accepted.sort_by(|a, b| {
                a.iter()
                    .zip(b)
                    .find_map(|(x, y)| x.partial_cmp(y).filter(|o| *o != Ordering::Equal))
                    .unwrap_or(Ordering::Equal)
            });
            return PointSet::float_mode(1e-9, accepted, region.clone());
        }
        accepted.push(hole);
    }
    Err(Error::InfeasibleParams(
        "hole filler did not converge; r is too close to R for this region".into(),
    ))
}

/// Class offsets k r / (4 (K - 1)) along the first axis, largest r/4, as
/// exact dyadic rationals. Encoding stays uniformly discrete because every
/// offset moves a point by at most a quarter of the separation.
fn class_offsets(k: usize, r: f64, tol: f64) -> Result<Vec<QuadReal>> {
    if k > 256 {
        return Err(Error::TooManyClasses(k));
    }
    if k <= 1 {
        return Ok(vec![QuadReal::zero(); k.max(1)]);
    }
    let spacing = r / (4.0 * (k as f64 - 1.0));
    if spacing <= 4.0 * tol {
        return Err(Error::TooManyClasses(k));
    }
    (0..k).map(|i| QuadReal::from_f64_exact(i as f64 * spacing)).collect()
}

/// Tiling to Delone set: one reference point per tile (the lower corner),
/// with distinct (shape, label) classes separated by first-axis offsets.
pub fn to_delone_patch(p: &Patch) -> Result<PointSet> {
    if p.is_empty() {
        return Err(Error::NotDeloneSupport("empty tiling".into()));
    }
    let exact = p.tiles()[0].lo.is_exact();
    if !exact {
        return Err(Error::NotDeloneSupport(
            "tiling reference points must be exact for class encoding".into(),
        ));
    }
    // Class = quantized shape vector plus label; tile shapes are finitely
    // many by precondition, so quantization at 1e-9 separates them.
    let mut classes: HashMap<(Vec<i64>, u32), u32> = HashMap::new();
    let mut tile_class = Vec::with_capacity(p.len());
    let mut keys: Vec<(Vec<i64>, u32)> = Vec::new();
    for t in p.tiles() {
        let shape: Vec<i64> = t
            .lo
            .to_f64_vec()
            .iter()
            .zip(&t.hi.to_f64_vec())
            .map(|(l, h)| ((h - l) / 1e-9).round() as i64)
            .collect();
        keys.push((shape.clone(), t.label));
        tile_class.push((shape, t.label));
    }
    keys.sort();
    keys.dedup();
    for (i, k) in keys.iter().enumerate() {
        classes.insert(k.clone(), i as u32);
    }

    let corners: Vec<Vec<QuadReal>> = p
        .tiles()
        .iter()
        .map(|t| t.lo.exact_coords().expect("exact tiles").to_vec())
        .collect();
    let disc = corners
        .iter()
        .flatten()
        .map(|c| c.disc())
        .find(|&x| x != 0)
        .unwrap_or(0);
    let probe = PointSet::exact(disc, corners.clone(), p.region().clone())?;
    if probe.len() != corners.len() {
        return Err(Error::NotDeloneSupport("tiles share a reference corner".into()));
    }
    let r = probe.min_gap().unwrap_or(1.0);
    if !(r > 0.0) {
        return Err(Error::NotDeloneSupport("reference points are not separated".into()));
    }
    let offsets = class_offsets(keys.len(), r, 0.0)?;
    let mut pts = Vec::with_capacity(corners.len());
    for (corner, key) in corners.into_iter().zip(&tile_class) {
        let class = classes[key] as usize;
        let mut row = corner;
        row[0] = row[0].checked_add(&offsets[class])?;
        pts.push(row);
    }
    PointSet::exact(disc, pts, p.region().clone())
}

/// Labeled points to Delone set: underlying points shifted per label class.
pub fn to_delone_labeled(l: &LabeledPointSet) -> Result<PointSet> {
    if l.is_empty() {
        return Err(Error::NotDeloneSupport("empty labeled set".into()));
    }
    let base = l.points();
    let mut present: Vec<u32> = l.labels().to_vec();
    present.sort_unstable();
    present.dedup();
    let class_of: HashMap<u32, usize> =
        present.iter().enumerate().map(|(i, &lab)| (lab, i)).collect();
    let r = base.min_gap().unwrap_or(1.0);
    let offsets = class_offsets(present.len(), r, 0.0)?;
    let pts: Vec<Vec<QuadReal>> = (0..base.len())
        .map(|i| {
            let mut row = base.exact_points().expect("labeled sets are exact")[i].to_vec();
            let class = class_of[&l.labels()[i]];
            row[0] = row[0].checked_add(&offsets[class])?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let out = PointSet::exact(base.disc().unwrap_or(0), pts, base.region().clone())?;
    if out.len() != base.len() {
        return Err(Error::NotDeloneSupport("class offsets collided with a point".into()));
    }
    Ok(out)
}

/// Dirac comb to Delone set: the support, weights dropped. The atoms must
/// already be separated.
pub fn to_delone_comb(c: &WeightedComb) -> Result<PointSet> {
    if c.is_empty() {
        return Err(Error::NotDeloneSupport("empty comb".into()));
    }
    let exact = c.atoms()[0].pos.is_exact();
    let set = if exact {
        let disc = c
            .atoms()
            .iter()
            .flat_map(|a| a.pos.exact_coords().expect("exact").iter())
            .map(|q| q.disc())
            .find(|&x| x != 0)
            .unwrap_or(0);
        let pts = c.atoms().iter().map(|a| a.pos.exact_coords().expect("exact").to_vec()).collect();
        PointSet::exact(disc, pts, c.region().clone())?
    } else {
        let pts = c.atoms().iter().map(|a| a.pos.to_f64_vec()).collect();
        PointSet::float_mode(1e-9, pts, c.region().clone())?
    };
    if set.len() != c.len() {
        return Err(Error::NotDeloneSupport("duplicate atom positions".into()));
    }
    Ok(set)
}
