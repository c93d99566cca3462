//! Cut-and-project machinery: an exact embedding lattice split into a
//! physical and an internal factor, the dual lattice, window admissibility
//! checks, model-set enumeration, and the dual-lattice character search.
//!
//! The lattice is given by a square generator matrix over a fixed real
//! quadratic field; every membership and boundary decision is made in exact
//! arithmetic, with floats only prefiltering clearly-inside/outside cases.

use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::patternspace::{PointSet, Region};
use crate::spectra::{Character, Provenance};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use std::cmp::Ordering;

/// Leaf-visit guard for the recursive enumerations.
const MAX_ENUM_CELLS: usize = 30_000_000;

/// A cut-and-project scheme: rows of `basis` generate the embedding
/// lattice, with the first `dim_phys` columns physical and the remaining
/// `dim_internal` columns internal.
#[derive(Clone, Debug)]
pub struct CutProjectScheme {
    dim_phys: usize,
    dim_internal: usize,
    disc: u64,
    basis: Vec<Vec<QuadReal>>,
}

impl CutProjectScheme {
    pub fn dim_phys(&self) -> usize {
        self.dim_phys
    }

    pub fn dim_internal(&self) -> usize {
        self.dim_internal
    }

    pub fn rank(&self) -> usize {
        self.dim_phys + self.dim_internal
    }

    pub fn disc(&self) -> u64 {
        self.disc
    }

    pub fn basis(&self) -> &[Vec<QuadReal>] {
        &self.basis
    }

    /// Integer combination of the generators.
    pub fn lattice_point(&self, coeffs: &[i64]) -> Result<Vec<QuadReal>> {
        let n = self.rank();
        if coeffs.len() != n {
            return Err(Error::DimMismatch(coeffs.len(), n));
        }
        let mut out = vec![QuadReal::zero(); n];
        for (c, row) in coeffs.iter().zip(&self.basis) {
            if *c == 0 {
                continue;
            }
            let cq = QuadReal::from_i64(*c);
            for (acc, entry) in out.iter_mut().zip(row) {
                *acc = acc.checked_add(&cq.checked_mul(entry)?)?;
            }
        }
        Ok(out)
    }

    pub fn split<'a>(&self, v: &'a [QuadReal]) -> (&'a [QuadReal], &'a [QuadReal]) {
        v.split_at(self.dim_phys)
    }

    /// Exact membership test for a full-rank embedded vector: solves for the
    /// integer coefficients and checks they are integers.
    pub fn contains_embedded(&self, v: &[QuadReal]) -> Result<bool> {
        if v.len() != self.rank() {
            return Err(Error::DimMismatch(v.len(), self.rank()));
        }
        let inv = invert_exact(&self.basis)?;
        // coeffs = v . B^{-1}; entry i is sum_j v_j * inv[j][i].
        for i in 0..self.rank() {
            let mut acc = QuadReal::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc.checked_add(&vj.checked_mul(&inv[j][i])?)?;
            }
            if !acc.is_integer() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Exact Gauss-Jordan inverse. Errors with SingularBasis when the matrix
/// has no inverse.
pub(crate) fn invert_exact(m: &[Vec<QuadReal>]) -> Result<Vec<Vec<QuadReal>>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::DimMismatch(m.first().map_or(0, |r| r.len()), n));
    }
    let mut a: Vec<Vec<QuadReal>> = m.to_vec();
    let mut inv: Vec<Vec<QuadReal>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { QuadReal::one() } else { QuadReal::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).ok_or(Error::SingularBasis)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = a[col][j].checked_div(&p)?;
            inv[col][j] = inv[col][j].checked_div(&p)?;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                a[r][j] = a[r][j].checked_sub(&f.checked_mul(&a[col][j])?)?;
                inv[r][j] = inv[r][j].checked_sub(&f.checked_mul(&inv[col][j])?)?;
            }
        }
    }
    Ok(inv)
}

fn transpose(m: &[Vec<QuadReal>]) -> Vec<Vec<QuadReal>> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i].clone()).collect()).collect()
}

fn dot_exact(a: &[QuadReal], b: &[QuadReal]) -> Result<QuadReal> {
    let mut acc = QuadReal::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc.checked_add(&x.checked_mul(y)?)?;
    }
    Ok(acc)
}

fn max_disc(basis: &[Vec<QuadReal>]) -> u64 {
    basis.iter().flatten().map(|e| e.disc()).max().unwrap_or(0)
}

/// Validate a generator matrix as a cut-and-project scheme. Checks, in
/// order: shape, nonsingularity, injectivity of the physical projection on
/// coefficient boxes up to `enum_bound`, and an eps-net witness that the
/// internal projection is dense (skipped when the internal factor is
/// trivial).
pub fn build_scheme(
    basis: Vec<Vec<QuadReal>>,
    dim_phys: usize,
    dim_internal: usize,
    enum_bound: i64,
) -> Result<CutProjectScheme> {
    let n = dim_phys + dim_internal;
    if dim_phys == 0 || basis.len() != n || basis.iter().any(|r| r.len() != n) {
        return Err(Error::DimMismatch(basis.len(), n));
    }
    invert_exact(&basis)?;
    let scheme = CutProjectScheme { dim_phys, dim_internal, disc: max_disc(&basis), basis };
    check_injectivity(&scheme, enum_bound)?;
    if dim_internal > 0 {
        check_density(&scheme)?;
    }
    Ok(scheme)
}

/// No nonzero coefficient vector in the box may project to physical zero.
fn check_injectivity(s: &CutProjectScheme, enum_bound: i64) -> Result<()> {
    let n = s.rank();
    let bound = enum_bound.max(1);
    let cells = ((2 * bound + 1) as usize).checked_pow(n as u32);
    let bound = match cells {
        Some(c) if c <= 2_000_000 => bound,
        _ => 3,
    };
    let rows_f: Vec<Vec<f64>> = s
        .basis
        .iter()
        .map(|r| r[..s.dim_phys].iter().map(|c| c.to_f64()).collect())
        .collect();
    let mut coeffs = vec![-bound; n];
    loop {
        if coeffs.iter().any(|&c| c != 0) {
            let mut near_zero = true;
            for axis in 0..s.dim_phys {
                let v: f64 =
                    coeffs.iter().zip(&rows_f).map(|(&c, r)| c as f64 * r[axis]).sum();
                if v.abs() > 1e-6 {
                    near_zero = false;
                    break;
                }
            }
            if near_zero {
                let pt = s.lattice_point(&coeffs)?;
                if pt[..s.dim_phys].iter().all(|c| c.is_zero()) {
                    return Err(Error::InjectivityViolation { coeffs });
                }
            }
        }
        let mut axis = 0;
        loop {
            coeffs[axis] += 1;
            if coeffs[axis] <= bound {
                break;
            }
            coeffs[axis] = -bound;
            axis += 1;
            if axis == n {
                return Ok(());
            }
        }
    }
}

/// Witness density of the internal projection: the points from a fixed
/// coefficient box must leave no gap wider than eps across a reference
/// cell. Purely a float computation; it only ever vouches for a witness.
fn check_density(s: &CutProjectScheme) -> Result<()> {
    let (eps, bound) = match s.dim_internal {
        1 => (0.05f64, 34i64),
        _ => (0.25f64, 8i64),
    };
    let n = s.rank();
    let cells = ((2 * bound + 1) as usize).pow(n as u32);
    if cells > 8_000_000 {
        return Err(Error::DensityNotWitnessed { eps, bound });
    }
    let rows_f: Vec<Vec<f64>> = s
        .basis
        .iter()
        .map(|r| r[s.dim_phys..].iter().map(|c| c.to_f64()).collect())
        .collect();
    let m = s.dim_internal;
    let mut pts: Vec<Vec<f64>> = Vec::new();
    let mut coeffs = vec![-bound; n];
    loop {
        let v: Vec<f64> = (0..m)
            .map(|axis| coeffs.iter().zip(&rows_f).map(|(&c, r)| c as f64 * r[axis]).sum())
            .collect();
        if v.iter().all(|c| c.abs() <= 1.0) {
            pts.push(v);
        }
        let mut axis = 0;
        loop {
            coeffs[axis] += 1;
            if coeffs[axis] <= bound {
                break;
            }
            coeffs[axis] = -bound;
            axis += 1;
            if axis == n {
                // Probe a grid over [-1/2, 1/2]^m for uncovered cells.
                let steps = (1.0 / eps).ceil() as i64 * 2;
                let mut probe = vec![0i64; m];
                loop {
                    let q: Vec<f64> =
                        probe.iter().map(|&i| i as f64 / steps as f64 - 0.5).collect();
                    let covered = pts.iter().any(|p| {
                        p.iter()
                            .zip(&q)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                            <= eps
                    });
                    if !covered {
                        return Err(Error::DensityNotWitnessed { eps, bound });
                    }
                    let mut ax = 0;
                    loop {
                        probe[ax] += 1;
                        if probe[ax] <= steps {
                            break;
                        }
                        probe[ax] = 0;
                        ax += 1;
                        if ax == m {
                            return Ok(());
                        }
                    }
                }
            }
        }
    }
}

/// Dual scheme: rows are the inverse-transpose of the primal generators,
/// with the same physical/internal split. The generator pairing
/// <b_i, b*_j> = delta_ij is verified exactly, which extends to all of
/// both lattices by bilinearity.
pub fn dual_scheme(s: &CutProjectScheme) -> Result<CutProjectScheme> {
    let inv = invert_exact(&s.basis)?;
    let dual = transpose(&inv);
    for (i, row) in s.basis.iter().enumerate() {
        for (j, drow) in dual.iter().enumerate() {
            let pairing = dot_exact(row, drow)?;
            let expect = if i == j { QuadReal::one() } else { QuadReal::zero() };
            if pairing.checked_cmp(&expect)? != Ordering::Equal {
                return Err(Error::SingularBasis);
            }
        }
    }
    Ok(CutProjectScheme {
        dim_phys: s.dim_phys,
        dim_internal: s.dim_internal,
        disc: max_disc(&dual).max(s.disc),
        basis: dual,
    })
}

/// Acceptance window in internal space.
#[derive(Clone, Debug)]
pub enum WindowSpec {
    /// No internal constraint; only valid when the internal factor is
    /// trivial.
    Full,
    /// Closed interval, internal dimension one.
    Interval { lo: QuadReal, hi: QuadReal },
    /// Closed convex polygon with counterclockwise vertices, internal
    /// dimension two.
    Polygon { verts: Vec<Vec<QuadReal>> },
}

impl WindowSpec {
    pub fn dim(&self) -> usize {
        match self {
            WindowSpec::Full => 0,
            WindowSpec::Interval { .. } => 1,
            WindowSpec::Polygon { .. } => 2,
        }
    }

    /// Axis-aligned bounds, exact endpoints converted at the end.
    pub fn bbox(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            WindowSpec::Full => None,
            WindowSpec::Interval { lo, hi } => Some((vec![lo.to_f64()], vec![hi.to_f64()])),
            WindowSpec::Polygon { verts } => {
                let xs: Vec<f64> = verts.iter().map(|v| v[0].to_f64()).collect();
                let ys: Vec<f64> = verts.iter().map(|v| v[1].to_f64()).collect();
                let min = |s: &[f64]| s.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = |s: &[f64]| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Some((vec![min(&xs), min(&ys)], vec![max(&xs), max(&ys)]))
            }
        }
    }

    /// Exact closed membership.
    pub fn contains(&self, h: &[QuadReal]) -> Result<bool> {
        match self {
            WindowSpec::Full => Ok(true),
            WindowSpec::Interval { lo, hi } => {
                if h.len() != 1 {
                    return Err(Error::DimMismatch(h.len(), 1));
                }
                Ok(lo.checked_cmp(&h[0])? != Ordering::Greater
                    && h[0].checked_cmp(hi)? != Ordering::Greater)
            }
            WindowSpec::Polygon { verts } => {
                if h.len() != 2 {
                    return Err(Error::DimMismatch(h.len(), 2));
                }
                for i in 0..verts.len() {
                    let v0 = &verts[i];
                    let v1 = &verts[(i + 1) % verts.len()];
                    if edge_cross(v0, v1, h)?.signum() < 0 {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Exact test for a point on the boundary.
    pub fn on_boundary(&self, h: &[QuadReal]) -> Result<bool> {
        match self {
            WindowSpec::Full => Ok(false),
            WindowSpec::Interval { lo, hi } => {
                if h.len() != 1 {
                    return Err(Error::DimMismatch(h.len(), 1));
                }
                Ok(h[0].checked_cmp(lo)? == Ordering::Equal
                    || h[0].checked_cmp(hi)? == Ordering::Equal)
            }
            WindowSpec::Polygon { verts } => {
                if !self.contains(h)? {
                    return Ok(false);
                }
                for i in 0..verts.len() {
                    let v0 = &verts[i];
                    let v1 = &verts[(i + 1) % verts.len()];
                    if edge_cross(v0, v1, h)?.is_zero() {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }
}

/// Cross product (v1 - v0) x (h - v0); positive means h lies left of the
/// directed edge.
fn edge_cross(v0: &[QuadReal], v1: &[QuadReal], h: &[QuadReal]) -> Result<QuadReal> {
    let ex = v1[0].checked_sub(&v0[0])?;
    let ey = v1[1].checked_sub(&v0[1])?;
    let px = h[0].checked_sub(&v0[0])?;
    let py = h[1].checked_sub(&v0[1])?;
    ex.checked_mul(&py)?.checked_sub(&ey.checked_mul(&px)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    /// Compact with nonempty interior.
    pub compact_with_interior: bool,
    /// Equal to the closure of its interior.
    pub closure_of_interior: bool,
    /// Boundary has measure zero.
    pub boundary_null: bool,
    /// No enumerated lattice point projects onto the boundary.
    pub generic_to_bound: bool,
    pub enum_bound: i64,
    /// Coefficient vectors whose internal projection hit the boundary.
    pub boundary_hits: Vec<Vec<i64>>,
}

impl WindowReport {
    pub fn all_pass(&self) -> bool {
        self.compact_with_interior
            && self.closure_of_interior
            && self.boundary_null
            && self.generic_to_bound
    }
}

/// Check the window conditions for a scheme. The first three are decided
/// structurally from the window shape; genericity is verified for every
/// lattice point with coefficients up to `enum_bound`.
pub fn window_checks(
    s: &CutProjectScheme,
    w: &WindowSpec,
    enum_bound: i64,
) -> Result<WindowReport> {
    if w.dim() != s.dim_internal {
        return Err(Error::DimMismatch(w.dim(), s.dim_internal));
    }
    let (c1, c2, c3) = match w {
        WindowSpec::Full => (true, true, true),
        WindowSpec::Interval { lo, hi } => {
            let proper = lo.checked_cmp(hi)? == Ordering::Less;
            (proper, proper, true)
        }
        WindowSpec::Polygon { verts } => {
            let mut convex = verts.len() >= 3;
            if convex {
                for i in 0..verts.len() {
                    let v0 = &verts[i];
                    let v1 = &verts[(i + 1) % verts.len()];
                    let v2 = &verts[(i + 2) % verts.len()];
                    if edge_cross(v0, v1, v2)?.signum() <= 0 {
                        convex = false;
                        break;
                    }
                }
            }
            (convex, convex, convex)
        }
    };

    let n = s.rank();
    let bound = enum_bound.max(0);
    let mut hits: Vec<Vec<i64>> = Vec::new();
    if s.dim_internal > 0 && bound > 0 {
        let cells = ((2 * bound + 1) as usize).checked_pow(n as u32);
        if !matches!(cells, Some(c) if c <= MAX_ENUM_CELLS) {
            return Err(Error::InfeasibleParams(format!(
                "genericity box (2*{bound}+1)^{n} exceeds the enumeration guard"
            )));
        }
        let rows_f: Vec<Vec<f64>> = s
            .basis
            .iter()
            .map(|r| r[s.dim_phys..].iter().map(|c| c.to_f64()).collect())
            .collect();
        let wf = boundary_prefilter(w);
        let mut coeffs = vec![-bound; n];
        'outer: loop {
            let hf: Vec<f64> = (0..s.dim_internal)
                .map(|axis| {
                    coeffs.iter().zip(&rows_f).map(|(&c, r)| c as f64 * r[axis]).sum()
                })
                .collect();
            if wf(&hf) {
                let pt = s.lattice_point(&coeffs)?;
                let (_, h) = s.split(&pt);
                if w.on_boundary(h)? && hits.len() < 16 {
                    hits.push(coeffs.clone());
                }
            }
            let mut axis = 0;
            loop {
                coeffs[axis] += 1;
                if coeffs[axis] <= bound {
                    break;
                }
                coeffs[axis] = -bound;
                axis += 1;
                if axis == n {
                    break 'outer;
                }
            }
        }
    }
    Ok(WindowReport {
        compact_with_interior: c1,
        closure_of_interior: c2,
        boundary_null: c3,
        generic_to_bound: hits.is_empty(),
        enum_bound: bound,
        boundary_hits: hits,
    })
}

/// Float predicate that is true whenever the point could be within 1e-6 of
/// the window boundary; exact arithmetic settles the survivors.
fn boundary_prefilter(w: &WindowSpec) -> Box<dyn Fn(&[f64]) -> bool + '_> {
    const SLACK: f64 = 1e-6;
    match w {
        WindowSpec::Full => Box::new(|_| false),
        WindowSpec::Interval { lo, hi } => {
            let (lof, hif) = (lo.to_f64(), hi.to_f64());
            Box::new(move |h| (h[0] - lof).abs() < SLACK || (h[0] - hif).abs() < SLACK)
        }
        WindowSpec::Polygon { verts } => {
            let vf: Vec<[f64; 2]> =
                verts.iter().map(|v| [v[0].to_f64(), v[1].to_f64()]).collect();
            Box::new(move |h| {
                for i in 0..vf.len() {
                    let v0 = vf[i];
                    let v1 = vf[(i + 1) % vf.len()];
                    let e = [v1[0] - v0[0], v1[1] - v0[1]];
                    let len = (e[0] * e[0] + e[1] * e[1]).sqrt().max(1e-300);
                    let cross = e[0] * (h[1] - v0[1]) - e[1] * (h[0] - v0[0]);
                    if (cross / len).abs() < SLACK {
                        return true;
                    }
                }
                false
            })
        }
    }
}

/// Enumerate the model set: physical projections of lattice points whose
/// internal projection lands in the window and whose physical projection
/// lands in the region. `assume_checked` skips the window admissibility
/// gate for callers that already ran `window_checks`.
pub fn model_set(
    s: &CutProjectScheme,
    w: &WindowSpec,
    region: &Region,
    coeff_bound: i64,
    assume_checked: bool,
) -> Result<PointSet> {
    if region.dim() != s.dim_phys {
        return Err(Error::DimMismatch(region.dim(), s.dim_phys));
    }
    if w.dim() != s.dim_internal {
        return Err(Error::DimMismatch(w.dim(), s.dim_internal));
    }
    if !assume_checked {
        let rep = window_checks(s, w, 8)?;
        if !rep.all_pass() {
            return Err(Error::WindowCheckFailed(format!(
                "compact_with_interior={} closure_of_interior={} boundary_null={} generic_to_bound={}",
                rep.compact_with_interior,
                rep.closure_of_interior,
                rep.boundary_null,
                rep.generic_to_bound,
            )));
        }
    }

    let n = s.rank();
    // Embedded target box: the region in the physical factor, the window
    // bounds in the internal factor.
    let mut lo = region.lo.clone();
    let mut hi = region.hi.clone();
    if let Some((wlo, whi)) = w.bbox() {
        lo.extend(wlo);
        hi.extend(whi);
    }
    if lo.len() != n {
        return Err(Error::InvalidRegion("window bounds unavailable".into()));
    }

    // Corner method: coeffs = v . B^{-1}, so each |c_i| is bounded by the
    // absolute row sums of the inverse against the box extents.
    let inv = invert_exact(&s.basis)?;
    let mut needed = 0i64;
    let mut bounds = vec![0i64; n];
    for i in 0..n {
        let mut acc = 0.0f64;
        for j in 0..n {
            let vmax = lo[j].abs().max(hi[j].abs());
            acc += inv[j][i].to_f64().abs() * vmax;
        }
        let b = acc.ceil() as i64 + 1;
        bounds[i] = b;
        needed = needed.max(b);
    }
    if needed > coeff_bound {
        return Err(Error::EnumerationTooSmall { bound: coeff_bound, needed });
    }

    let rows_f: Vec<Vec<f64>> =
        s.basis.iter().map(|r| r.iter().map(|c| c.to_f64()).collect()).collect();
    // Remaining-contribution extents for depth k: sum over rows > k.
    let mut rem = vec![vec![0.0f64; n]; n + 1];
    for k in (0..n).rev() {
        for j in 0..n {
            rem[k][j] = rem[k + 1][j] + bounds[k] as f64 * rows_f[k][j].abs();
        }
    }
    let slack: Vec<f64> =
        (0..n).map(|j| 1e-6 * lo[j].abs().max(hi[j].abs()).max(1.0)).collect();

    let mut accepted: Vec<Vec<QuadReal>> = Vec::new();
    let mut coeffs = vec![0i64; n];
    let mut partial = vec![0.0f64; n];
    let mut visits = 0usize;
    enum_rec(
        s, w, region, &rows_f, &bounds, &rem, &lo, &hi, &slack, 0, &mut coeffs,
        &mut partial, &mut accepted, &mut visits,
    )?;
    PointSet::exact(s.disc, accepted, region.clone())
}

/// Closed membership in the region box, decided exactly.
fn region_contains_exact(region: &Region, g: &[QuadReal]) -> bool {
    use crate::patternspace::cmp_exact_f64;
    g.iter().zip(region.lo.iter().zip(&region.hi)).all(|(c, (l, h))| {
        cmp_exact_f64(c, *l) != Ordering::Less && cmp_exact_f64(c, *h) != Ordering::Greater
    })
}

#[allow(clippy::too_many_arguments)]
fn enum_rec(
    s: &CutProjectScheme,
    w: &WindowSpec,
    region: &Region,
    rows_f: &[Vec<f64>],
    bounds: &[i64],
    rem: &[Vec<f64>],
    lo: &[f64],
    hi: &[f64],
    slack: &[f64],
    depth: usize,
    coeffs: &mut Vec<i64>,
    partial: &mut Vec<f64>,
    accepted: &mut Vec<Vec<QuadReal>>,
    visits: &mut usize,
) -> Result<()> {
    let n = s.rank();
    if depth == n {
        *visits += 1;
        if *visits > MAX_ENUM_CELLS {
            return Err(Error::InfeasibleParams(
                "model-set enumeration exceeded the cell guard".into(),
            ));
        }
        // Float prefilter with slack; survivors get the exact test.
        for j in 0..n {
            if partial[j] < lo[j] - slack[j] || partial[j] > hi[j] + slack[j] {
                return Ok(());
            }
        }
        let pt = s.lattice_point(coeffs)?;
        let (g, h) = s.split(&pt);
        if region_contains_exact(region, g) && w.contains(h)? {
            accepted.push(g.to_vec());
        }
        return Ok(());
    }

    // Feasible integer range for this coefficient: every coordinate must
    // stay reachable given the remaining rows' maximum contribution.
    let mut clo = -(bounds[depth] as f64);
    let mut chi = bounds[depth] as f64;
    for j in 0..s.rank() {
        let r = rows_f[depth][j];
        let tgt_lo = lo[j] - slack[j] - partial[j] - rem[depth + 1][j];
        let tgt_hi = hi[j] + slack[j] - partial[j] + rem[depth + 1][j];
        if r.abs() < 1e-12 {
            if tgt_lo > 0.0 || tgt_hi < 0.0 {
                return Ok(());
            }
            continue;
        }
        let (a, b) = if r > 0.0 { (tgt_lo / r, tgt_hi / r) } else { (tgt_hi / r, tgt_lo / r) };
        clo = clo.max(a);
        chi = chi.min(b);
    }
    if clo > chi {
        return Ok(());
    }
    let from = clo.ceil() as i64;
    let to = chi.floor() as i64;
    for c in from..=to {
        coeffs[depth] = c;
        for j in 0..s.rank() {
            partial[j] += c as f64 * rows_f[depth][j];
        }
        enum_rec(
            s, w, region, rows_f, bounds, rem, lo, hi, slack, depth + 1, coeffs, partial,
            accepted, visits,
        )?;
        for j in 0..s.rank() {
            partial[j] -= c as f64 * rows_f[depth][j];
        }
    }
    coeffs[depth] = 0;
    Ok(())
}

/// A dual-lattice vector with its physical/internal split.
#[derive(Clone, Debug)]
pub struct DualVector {
    pub coeffs: Vec<i64>,
    pub phys: Vec<QuadReal>,
    pub internal: Vec<QuadReal>,
    pub phys_norm: f64,
    pub internal_norm: f64,
}

/// Enumerate nonzero dual-lattice vectors with physical norm at most
/// `phys_max` and internal norm at most `internal_max`, as characters.
/// Sorted by internal norm, then physical norm, then coefficients.
pub fn eigen_enumerate(
    s: &CutProjectScheme,
    phys_max: f64,
    internal_max: f64,
) -> Result<Vec<Character>> {
    let vectors = dual_vectors_in_box(s, phys_max, internal_max)?;
    Ok(vectors.into_iter().map(character_from_dual).collect())
}

fn character_from_dual(v: DualVector) -> Character {
    Character {
        a: v.phys.iter().map(|c| c.to_f64()).collect(),
        a_exact: Some(v.phys),
        a_star: Some(v.internal.iter().map(|c| c.to_f64()).collect()),
        a_star_exact: Some(v.internal),
        coeffs: Some(v.coeffs),
        provenance: Provenance::DualLattice,
    }
}

fn dual_vectors_in_box(
    s: &CutProjectScheme,
    phys_max: f64,
    internal_max: f64,
) -> Result<Vec<DualVector>> {
    if !(phys_max > 0.0) || phys_max.is_infinite() {
        return Err(Error::Parse(format!("invalid physical norm cap {phys_max}")));
    }
    if internal_max < 0.0 || internal_max.is_infinite() {
        return Err(Error::Parse(format!("invalid internal norm cap {internal_max}")));
    }
    let dual = dual_scheme(s)?;
    let n = s.rank();
    let d = s.dim_phys;
    // Dual coefficients recover as e = v . B^T, so the primal basis rows
    // bound the coefficient box via the norm caps.
    let mut bounds = vec![0i64; n];
    let mut cells = 1usize;
    for i in 0..n {
        let mut acc = 0.0f64;
        for j in 0..n {
            let cap = if j < d { phys_max } else { internal_max };
            acc += s.basis[i][j].to_f64().abs() * cap;
        }
        bounds[i] = acc.ceil() as i64 + 1;
        cells = cells
            .checked_mul((2 * bounds[i] + 1) as usize)
            .filter(|c| *c <= MAX_ENUM_CELLS)
            .ok_or_else(|| {
                Error::InfeasibleParams(format!(
                    "dual enumeration box for caps ({phys_max}, {internal_max}) is too large"
                ))
            })?;
    }

    let rows_f: Vec<Vec<f64>> =
        dual.basis.iter().map(|r| r.iter().map(|c| c.to_f64()).collect()).collect();
    let mut out = Vec::new();
    let mut coeffs: Vec<i64> = bounds.iter().map(|b| -b).collect();
    'outer: loop {
        if coeffs.iter().any(|&c| c != 0) {
            let mut pf = 0.0f64;
            let mut inf = 0.0f64;
            for j in 0..n {
                let v: f64 = coeffs.iter().zip(&rows_f).map(|(&c, r)| c as f64 * r[j]).sum();
                if j < d {
                    pf += v * v;
                } else {
                    inf += v * v;
                }
            }
            let pf = pf.sqrt();
            let inf = inf.sqrt();
            // Borderline cases go exact so the cut is made at the true
            // value of the caps.
            let keep = if pf <= phys_max - 1e-9 && inf <= internal_max - 1e-9 {
                true
            } else if pf > phys_max + 1e-9 || inf > internal_max + 1e-9 {
                false
            } else {
                let pt = dual.lattice_point(&coeffs)?;
                let (g, h) = dual.split(&pt);
                norm2_le(g, phys_max)? && norm2_le(h, internal_max)?
            };
            if keep {
                let pt = dual.lattice_point(&coeffs)?;
                let (g, h) = dual.split(&pt);
                out.push(DualVector {
                    coeffs: coeffs.clone(),
                    phys: g.to_vec(),
                    internal: h.to_vec(),
                    phys_norm: pf,
                    internal_norm: inf,
                });
            }
        }
        let mut axis = 0;
        loop {
            coeffs[axis] += 1;
            if coeffs[axis] <= bounds[axis] {
                break;
            }
            coeffs[axis] = -bounds[axis];
            axis += 1;
            if axis == n {
                break 'outer;
            }
        }
    }
    out.sort_by(|a, b| {
        a.internal_norm
            .partial_cmp(&b.internal_norm)
            .unwrap_or(Ordering::Equal)
            .then(a.phys_norm.partial_cmp(&b.phys_norm).unwrap_or(Ordering::Equal))
            .then_with(|| a.coeffs.cmp(&b.coeffs))
    });
    Ok(out)
}

/// Exact |v|^2 <= cap^2 with cap taken at its exact binary-float value.
fn norm2_le(v: &[QuadReal], cap: f64) -> Result<bool> {
    let mut acc = QuadReal::zero();
    for c in v {
        acc = acc.checked_add(&c.checked_mul(c)?)?;
    }
    let capr = BigRational::from_float(cap).ok_or(Error::Parse(format!("cap {cap}")))?;
    let cap2 = QuadReal::rational(&capr * &capr);
    Ok(acc.checked_cmp(&cap2)? != Ordering::Greater)
}

/// Find the dual-lattice character minimizing the internal norm among
/// those whose physical norm inverts to within eps of `target`. The
/// internal cap doubles until a candidate appears; once one does, anything
/// outside the cap has a larger internal norm, so the minimum is global.
pub fn find_small_eigenvalue(
    s: &CutProjectScheme,
    target: f64,
    eps: f64,
) -> Result<Character> {
    if !(target > 0.0) || !(eps > 0.0) || eps >= target {
        return Err(Error::Parse(format!("invalid eigenvalue target {target} eps {eps}")));
    }
    let phys_lo = 1.0 / (target + eps);
    let phys_hi = 1.0 / (target - eps);
    let mut internal_cap = 1.0f64;
    let cap_limit = 4096.0f64;
    loop {
        let cand = match dual_vectors_in_box(s, phys_hi, internal_cap) {
            Ok(v) => v,
            Err(Error::InfeasibleParams(_)) => {
                return Err(Error::NotFound { target, eps, bound: internal_cap as i64 })
            }
            Err(e) => return Err(e),
        };
        let hit = cand.into_iter().find(|v| {
            let inv = 1.0 / v.phys_norm;
            v.phys_norm >= phys_lo - 1e-12 && (inv - target).abs() < eps
        });
        if let Some(v) = hit {
            return Ok(character_from_dual(v));
        }
        if s.dim_internal == 0 || internal_cap >= cap_limit {
            return Err(Error::NotFound { target, eps, bound: internal_cap as i64 });
        }
        internal_cap *= 2.0;
    }
}

/// Scheme for the golden-mean chain: disc 5, physical line slope tau.
pub fn fibonacci_scheme() -> CutProjectScheme {
    let tau = QuadReal::tau();
    let one = QuadReal::one();
    let one_minus_tau = one.checked_sub(&tau).expect("same field");
    CutProjectScheme {
        dim_phys: 1,
        dim_internal: 1,
        disc: 5,
        basis: vec![vec![one.clone(), one], vec![tau, one_minus_tau]],
    }
}

/// Generic window for the golden-mean chain: [-tau/2, tau/2].
pub fn fibonacci_window() -> WindowSpec {
    let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
    let hi = QuadReal::tau().checked_mul(&half).expect("same field");
    let lo = QuadReal::zero().checked_sub(&hi).expect("same field");
    WindowSpec::Interval { lo, hi }
}

/// Scheme for the silver-mean chain: disc 2.
pub fn silver_scheme() -> CutProjectScheme {
    let one = QuadReal::one();
    let sqrt2 = QuadReal::sqrt_disc(2).expect("valid disc");
    let neg_sqrt2 = QuadReal::zero().checked_sub(&sqrt2).expect("same field");
    CutProjectScheme {
        dim_phys: 1,
        dim_internal: 1,
        disc: 2,
        basis: vec![vec![one.clone(), one], vec![sqrt2, neg_sqrt2]],
    }
}

/// Window for the silver-mean chain: [-sqrt2/2, sqrt2/2].
pub fn silver_window() -> WindowSpec {
    let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
    let hi = QuadReal::sqrt_disc(2)
        .expect("valid disc")
        .checked_mul(&half)
        .expect("same field");
    let lo = QuadReal::zero().checked_sub(&hi).expect("same field");
    WindowSpec::Interval { lo, hi }
}

/// Eightfold planar scheme over Z^4: orthogonal generator rows of squared
/// norm two, so the dual basis is exactly half the primal one.
pub fn ammann_beenker_scheme() -> CutProjectScheme {
    let one = QuadReal::one();
    let zero = QuadReal::zero();
    let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
    let s = QuadReal::sqrt_disc(2)
        .expect("valid disc")
        .checked_mul(&half)
        .expect("same field");
    let neg = |v: &QuadReal| QuadReal::zero().checked_sub(v).expect("same field");
    CutProjectScheme {
        dim_phys: 2,
        dim_internal: 2,
        disc: 2,
        basis: vec![
            vec![one.clone(), zero.clone(), one.clone(), zero.clone()],
            vec![s.clone(), s.clone(), neg(&s), s.clone()],
            vec![zero.clone(), one.clone(), zero, neg(&one)],
            vec![neg(&s), s.clone(), s.clone(), s],
        ],
    }
}

/// Regular octagon window for the eightfold scheme, vertices
/// (+-(1+sqrt2)/2, +-1/2) and (+-1/2, +-(1+sqrt2)/2), counterclockwise.
pub fn ammann_beenker_window() -> WindowSpec {
    let half = QuadReal::rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
    let big = QuadReal::silver().checked_mul(&half).expect("same field");
    let neg = |v: &QuadReal| QuadReal::zero().checked_sub(v).expect("same field");
    let verts = vec![
        vec![big.clone(), neg(&half)],
        vec![big.clone(), half.clone()],
        vec![half.clone(), big.clone()],
        vec![neg(&half), big.clone()],
        vec![neg(&big), half.clone()],
        vec![neg(&big), neg(&half)],
        vec![neg(&half), neg(&big)],
        vec![half, neg(&big)],
    ];
    WindowSpec::Polygon { verts }
}

/// Degenerate scheme for the integer lattice Z^d: trivial internal factor.
pub fn lattice_scheme(d: usize) -> CutProjectScheme {
    let basis = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { QuadReal::one() } else { QuadReal::zero() })
                .collect()
        })
        .collect();
    CutProjectScheme { dim_phys: d, dim_internal: 0, disc: 0, basis }
}
