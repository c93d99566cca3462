//! Spectral side: the circle metric, character phases, the empirical
//! equivariance modulus over matched pairs, the rank of small integer
//! combinations of frequency generators, and character shrinking along an
//! expansive linear map.
//!
//! Phases are measured in turns (full revolutions), so a character a sends
//! x to <x, a> mod 1 and all tolerances stay unit-free.

use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::patternspace::{MatchEngine, PointSet, Vecd};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

/// Distance on R/Z in turns; range [0, 1/2].
pub fn rho_t(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    DualLattice,
    User,
    PisotShrink,
}

/// A frequency vector, optionally exact and optionally paired with its
/// internal-space partner (dual-lattice characters carry both).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Character {
    pub a: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_exact: Option<Vec<QuadReal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_star_exact: Option<Vec<QuadReal>>,
    /// Integer coordinates in the dual basis, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<Vec<i64>>,
    pub provenance: Provenance,
}

impl Character {
    pub fn from_f64(a: Vec<f64>) -> Self {
        Character {
            a,
            a_exact: None,
            a_star: None,
            a_star_exact: None,
            coeffs: None,
            provenance: Provenance::User,
        }
    }

    pub fn from_exact(a: Vec<QuadReal>) -> Self {
        Character {
            a: a.iter().map(|c| c.to_f64()).collect(),
            a_exact: Some(a),
            a_star: None,
            a_star_exact: None,
            coeffs: None,
            provenance: Provenance::User,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn norm(&self) -> f64 {
        self.a.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn internal_norm(&self) -> Option<f64> {
        self.a_star.as_ref().map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
    }

    /// <x, a> in turns, wrapped to [-1/2, 1/2). Exact anchors against exact
    /// characters reduce modulo 1 exactly before the final float conversion,
    /// so the wrap never loses precision to a large integer part.
    pub fn phase(&self, x: &Vecd) -> Result<f64> {
        match (x, &self.a_exact) {
            (Vecd::Exact(xs), Some(ae)) => {
                if xs.len() != ae.len() {
                    return Err(Error::DimMismatch(xs.len(), ae.len()));
                }
                let mut acc = QuadReal::zero();
                for (xc, ac) in xs.iter().zip(ae) {
                    acc = acc.checked_add(&xc.checked_mul(ac)?)?;
                }
                let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
                let nearest = acc.checked_add(&half)?.floor_int();
                let frac = acc.checked_sub(&QuadReal::rational(BigRational::from_integer(nearest)))?;
                Ok(frac.to_f64())
            }
            _ => {
                let xf = x.to_f64_vec();
                if xf.len() != self.a.len() {
                    return Err(Error::DimMismatch(xf.len(), self.a.len()));
                }
                let v: f64 = xf.iter().zip(&self.a).map(|(p, q)| p * q).sum();
                let mut f = v - v.round();
                if f >= 0.5 {
                    f -= 1.0;
                }
                Ok(f)
            }
        }
    }
}

/// Phase of x under a, in turns.
pub fn character_phase(a: &Character, x: &Vecd) -> Result<f64> {
    a.phase(x)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivarianceReport {
    pub r_grid: Vec<f64>,
    /// Nonincreasing envelope of the raw per-radius moduli.
    pub omega: Vec<f64>,
    pub omega_raw: Vec<f64>,
    pub pair_counts: Vec<usize>,
}

impl EquivarianceReport {
    /// Smallest grid radius whose envelope value is at most `band`.
    pub fn first_radius_below(&self, band: f64) -> Option<f64> {
        self.r_grid
            .iter()
            .zip(&self.omega)
            .find(|(_, om)| **om <= band)
            .map(|(r, _)| *r)
    }
}

/// Empirical equivariance modulus of a character over a point set: for each
/// radius R, the largest phase disagreement rho_T(phase x, phase y) among
/// sampled pairs with equal R-patches. Anchors whose R-ball the region
/// cannot cover are skipped; a radius where every anchor is skipped is an
/// InsufficientWindow error, and one with anchors but no nontrivial pairs
/// is NoPairs.
pub fn equivariance_modulus(
    d: &PointSet,
    a: &Character,
    r_grid: &[f64],
    sample_xs: &[Vecd],
    search_radius: f64,
) -> Result<EquivarianceReport> {
    if r_grid.is_empty() {
        return Err(Error::Parse("empty radius grid".into()));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(|x, y| x.partial_cmp(y).expect("finite grid"));
    let engine = MatchEngine::new(d);
    let mut omega_raw = Vec::with_capacity(grid.len());
    let mut pair_counts = Vec::with_capacity(grid.len());
    for &r in &grid {
        let mut worst: f64 = 0.0;
        let mut pairs = 0usize;
        let mut anchors = 0usize;
        for x in sample_xs {
            if !d.region().covers_ball(x, r) {
                continue;
            }
            anchors += 1;
            let m = engine.matches(x, r, search_radius)?;
            for t in &m.shifts {
                if t.iter().all(|c| *c == 0.0) {
                    continue;
                }
                // Phase difference of the pair equals the phase of the
                // shift, so the anchor's own phase cancels.
                let v: f64 = t.iter().zip(&a.a).map(|(p, q)| p * q).sum();
                worst = worst.max(rho_t(v, 0.0));
                pairs += 1;
            }
        }
        if anchors == 0 {
            return Err(Error::InsufficientWindow {
                center: "every equivariance anchor".into(),
                radius: r,
            });
        }
        if pairs == 0 {
            return Err(Error::NoPairs { radius: r });
        }
        omega_raw.push(worst);
        pair_counts.push(pairs);
    }
    let mut omega = omega_raw.clone();
    for i in 1..omega.len() {
        omega[i] = omega[i].min(omega[i - 1]);
    }
    Ok(EquivarianceReport { r_grid: grid, omega, omega_raw, pair_counts })
}

/// Exactly-zero test for an integer combination of exact generators.
fn combo_is_zero(generators: &[Vec<QuadReal>], coeffs: &[i64]) -> Result<bool> {
    let d = generators[0].len();
    for axis in 0..d {
        let mut acc = QuadReal::zero();
        for (g, c) in generators.iter().zip(coeffs) {
            if *c != 0 {
                acc = acc.checked_add(&g[axis].checked_mul(&QuadReal::from_i64(*c))?)?;
            }
        }
        if !acc.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Jacobi eigenvalues of a small symmetric matrix.
fn sym_eigenvalues(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for _ in 0..64 {
        let mut off = 0.0f64;
        let (mut p, mut q) = (0, 1);
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i][j].abs() > off {
                    off = m[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if n < 2 || off < 1e-300 {
            break;
        }
        let theta = 0.5 * (m[q][q] - m[p][p]) / m[p][q];
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..n {
            let (mkp, mkq) = (m[k][p], m[k][q]);
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
        }
        for k in 0..n {
            let (mpk, mqk) = (m[p][k], m[q][k]);
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
        }
    }
    (0..n).map(|i| m[i][i]).collect()
}

fn rank_with_tol(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let d = rows[0].len();
    let mut gram = vec![vec![0.0f64; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                gram[i][j] += r[i] * r[j];
            }
        }
    }
    let eig = sym_eigenvalues(gram);
    let smax = eig.iter().fold(0.0f64, |m, &e| m.max(e.max(0.0))).sqrt();
    if smax == 0.0 {
        return 0;
    }
    let tol = 1e-8 * smax;
    eig.iter().filter(|&&e| e.max(0.0).sqrt() > tol).count()
}

/// Rank of the space spanned by integer combinations (coefficients bounded
/// by coeff_bound) of the generators that land in B(0, r), minimized over
/// the radius grid. Small coefficient sets are enumerated outright; larger
/// ones go through pairwise size reduction with exact zero tests on the
/// collected combinations.
pub fn vspace_rank(
    generators: &[Vec<QuadReal>],
    r_grid: &[f64],
    coeff_bound: i64,
) -> Result<usize> {
    if generators.is_empty() || r_grid.is_empty() {
        return Ok(0);
    }
    let d = generators[0].len();
    for g in generators {
        if g.len() != d {
            return Err(Error::DimMismatch(g.len(), d));
        }
    }
    let k = generators.len();
    let gf: Vec<Vec<f64>> = generators
        .iter()
        .map(|g| g.iter().map(|c| c.to_f64()).collect())
        .collect();

    // Collected (coeffs, value) pairs; coefficients always within bound.
    let mut pool: Vec<(Vec<i64>, Vec<f64>)> = Vec::new();
    let full_box = (0..k).try_fold(1usize, |acc, _| {
        acc.checked_mul((2 * coeff_bound + 1) as usize).filter(|v| *v <= 200_000)
    });
    if full_box.is_some() {
        let mut coeffs = vec![-coeff_bound; k];
        loop {
            if coeffs.iter().any(|&c| c != 0) {
                let v: Vec<f64> = (0..d)
                    .map(|axis| coeffs.iter().zip(&gf).map(|(&c, g)| c as f64 * g[axis]).sum())
                    .collect();
                pool.push((coeffs.clone(), v));
            }
            let mut axis = 0;
            loop {
                coeffs[axis] += 1;
                if coeffs[axis] <= coeff_bound {
                    break;
                }
                coeffs[axis] = -coeff_bound;
                axis += 1;
                if axis == k {
                    break;
                }
            }
            if coeffs.iter().all(|&c| c == -coeff_bound) {
                break;
            }
        }
    } else {
        // Start from unit combinations and size-reduce pairwise, keeping
        // every intermediate (they are the interesting small vectors).
        let mut work: Vec<(Vec<i64>, Vec<f64>)> = (0..k)
            .map(|i| {
                let mut c = vec![0i64; k];
                c[i] = 1;
                (c, gf[i].clone())
            })
            .collect();
        pool.extend(work.iter().cloned());
        for _ in 0..200 {
            let mut changed = false;
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    let denom: f64 = work[j].1.iter().map(|c| c * c).sum();
                    if denom < 1e-300 {
                        continue;
                    }
                    let num: f64 =
                        work[i].1.iter().zip(&work[j].1).map(|(a, b)| a * b).sum();
                    let mu = (num / denom).round();
                    if mu == 0.0 || !mu.is_finite() || mu.abs() > coeff_bound as f64 {
                        continue;
                    }
                    let mu_i = mu as i64;
                    let nc: Vec<i64> = work[i]
                        .0
                        .iter()
                        .zip(&work[j].0)
                        .map(|(a, b)| a - mu_i * b)
                        .collect();
                    if nc.iter().any(|c| c.abs() > coeff_bound) {
                        continue;
                    }
                    let nv: Vec<f64> = work[i]
                        .1
                        .iter()
                        .zip(&work[j].1)
                        .map(|(a, b)| a - mu * b)
                        .collect();
                    let old: f64 = work[i].1.iter().map(|c| c * c).sum();
                    let new: f64 = nv.iter().map(|c| c * c).sum();
                    if new < old * (1.0 - 1e-12) {
                        work[i] = (nc.clone(), nv.clone());
                        pool.push((nc, nv));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Small combinations of the reduced vectors, mapped back to
        // original coefficients.
        let reach = 3i64;
        let mut sel = vec![-reach; k];
        loop {
            if sel.iter().any(|&c| c != 0) {
                let mut c = vec![0i64; k];
                let mut v = vec![0.0f64; d];
                for (s, w) in sel.iter().zip(&work) {
                    for (cc, wc) in c.iter_mut().zip(&w.0) {
                        *cc += s * wc;
                    }
                    for (vc, wv) in v.iter_mut().zip(&w.1) {
                        *vc += *s as f64 * wv;
                    }
                }
                if c.iter().all(|cc| cc.abs() <= coeff_bound) {
                    pool.push((c, v));
                }
            }
            let mut axis = 0;
            loop {
                sel[axis] += 1;
                if sel[axis] <= reach {
                    break;
                }
                sel[axis] = -reach;
                axis += 1;
                if axis == k {
                    break;
                }
            }
            if sel.iter().all(|&c| c == -reach) {
                break;
            }
        }
    }

    let mut best = usize::MAX;
    for &r in r_grid {
        let mut rows = Vec::new();
        for (coeffs, v) in &pool {
            let nm: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if nm <= r + 1e-12 && !combo_is_zero(generators, coeffs)? {
                rows.push(v.clone());
            }
        }
        best = best.min(rank_with_tol(&rows));
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

fn mat_vec_f64(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Pull a character back through k applications of an expansive linear map:
/// a -> (phi^T)^{-k} a. Exact when both the map and the character are.
pub fn pisot_shrink(phi: &[Vec<QuadReal>], a: &Character, k: u32) -> Result<Character> {
    let d = phi.len();
    if d == 0 || phi.iter().any(|r| r.len() != d) {
        return Err(Error::DimMismatch(d, phi.first().map_or(0, |r| r.len())));
    }
    if a.dim() != d {
        return Err(Error::DimMismatch(a.dim(), d));
    }
    let inv = crate::cps::invert_exact(phi).map_err(|_| Error::SingularMap)?;
    let invf: Vec<Vec<f64>> =
        inv.iter().map(|r| r.iter().map(|c| c.to_f64()).collect()).collect();
    // Expansive iff the spectral radius of the inverse is below one;
    // estimate it from the growth of repeated squarings.
    let mut pow = invf.clone();
    for _ in 0..6 {
        let mut next = vec![vec![0.0f64; d]; d];
        for i in 0..d {
            for j in 0..d {
                for l in 0..d {
                    next[i][j] += pow[i][l] * pow[l][j];
                }
            }
        }
        pow = next;
    }
    let frob: f64 = pow.iter().flatten().map(|c| c * c).sum::<f64>().sqrt();
    let rho = frob.powf(1.0 / 64.0);
    if rho >= 1.0 - 1e-9 {
        return Err(Error::NotExpansive(rho));
    }

    // (phi^T)^{-1} = (phi^{-1})^T; apply it k times.
    let mut out_exact = a.a_exact.clone();
    let mut out_f = a.a.clone();
    for _ in 0..k {
        if let Some(v) = out_exact {
            let mut next = Vec::with_capacity(d);
            for i in 0..d {
                let mut acc = QuadReal::zero();
                for j in 0..d {
                    // Transposed entry: column i of the inverse.
                    acc = acc.checked_add(&inv[j][i].checked_mul(&v[j])?)?;
                }
                next.push(acc);
            }
            out_f = next.iter().map(|c| c.to_f64()).collect();
            out_exact = Some(next);
        } else {
            let invt: Vec<Vec<f64>> =
                (0..d).map(|i| (0..d).map(|j| invf[j][i]).collect()).collect();
            out_f = mat_vec_f64(&invt, &out_f);
        }
    }
    Ok(Character {
        a: out_f,
        a_exact: out_exact,
        a_star: None,
        a_star_exact: None,
        coeffs: None,
        provenance: Provenance::PisotShrink,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patternspace::default_anchors;

    #[test]
    fn circle_distance_basics() {
        assert!((rho_t(0.9, 0.1) - 0.2).abs() < 1e-12);
        assert!((rho_t(0.25, 0.75) - 0.5).abs() < 1e-12);
        assert_eq!(rho_t(0.3, 0.3), 0.0);
        assert!((rho_t(-0.45, 0.45) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn exact_phase_reduces_mod_one() {
        let third = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(3)));
        let a = Character::from_exact(vec![third]);
        let x = Vecd::Exact(vec![QuadReal::from_i64(2)]);
        let ph = a.phase(&x).unwrap();
        assert!((ph + 1.0 / 3.0).abs() < 1e-15, "phase {ph}");
        // Large anchor: reduction happens before float conversion.
        let y = Vecd::Exact(vec![QuadReal::from_i64(3_000_000_001)]);
        let ph2 = a.phase(&y).unwrap();
        assert!((ph2 - 1.0 / 3.0).abs() < 1e-15, "phase {ph2}");
    }

    #[test]
    fn lattice_with_irrational_frequency_never_decays() {
        let z = PointSet::integer_lattice(-200, 200);
        let a = Character::from_f64(vec![std::f64::consts::SQRT_2]);
        let anchors = default_anchors(&z, 20.0, 0);
        let rep =
            equivariance_modulus(&z, &a, &[1.0, 5.0, 10.0, 20.0], &anchors, 400.0).unwrap();
        for (om, n) in rep.omega.iter().zip(&rep.pair_counts) {
            assert!(*om >= 0.2, "omega {om}");
            assert!(*n > 0);
        }
        for w in rep.omega.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn rank_of_single_generator_is_zero() {
        let gens = vec![vec![QuadReal::from_i64(1)]];
        let rank = vspace_rank(&gens, &[1.0, 0.5, 0.1, 0.02], 10_000).unwrap();
        assert_eq!(rank, 0);
    }

    #[test]
    fn rank_of_golden_pair_is_one() {
        let gens = vec![vec![QuadReal::from_i64(1)], vec![QuadReal::tau()]];
        let rank = vspace_rank(&gens, &[1.0, 0.5, 0.1, 0.02], 10_000).unwrap();
        assert_eq!(rank, 1);
    }

    #[test]
    fn shrink_by_golden_cube() {
        let phi = vec![vec![QuadReal::tau()]];
        let a = Character::from_exact(vec![QuadReal::from_i64(1)]);
        let out = pisot_shrink(&phi, &a, 3).unwrap();
        assert!((out.a[0] - 0.236_067_977_499_79).abs() < 1e-9, "{}", out.a[0]);
        assert_eq!(out.provenance, Provenance::PisotShrink);
    }

    #[test]
    fn shrink_rejects_non_expansive_and_singular() {
        let a = Character::from_f64(vec![1.0]);
        let id = vec![vec![QuadReal::from_i64(1)]];
        assert!(matches!(pisot_shrink(&id, &a, 1), Err(Error::NotExpansive(_))));
        let zero = vec![vec![QuadReal::zero()]];
        assert!(matches!(pisot_shrink(&zero, &a, 1), Err(Error::SingularMap)));
    }
}
