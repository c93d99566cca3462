//! Randomized axiom suite over the four pattern implementations.
//!
//! Each case draws a pattern P, two closed-set descriptors C1 and C2, and a
//! translation x, all with exact coordinates, then checks
//!
//! * composition: `P ∧ (C1 ∩ C2) = (P ∧ C1) ∧ C2`
//! * support: `P ∧ C1 = P` iff `C1 ⊇ supp(P)`, and `P ∧ supp(P) = P`
//! * equivariance: `(P ∧ C1) + x = (P + x) ∧ (C1 + x)`
//!
//! with exact equality throughout. Ball radii and band bounds are drawn
//! from quarter-integers so their float representations are exact.

use super::{Bound, ClosedSet, LabeledPointSet, Patch, Pattern, PointSet, Region, Tile, Vecd};
use super::{Atom, Weight, WeightedComb};
use crate::error::Result;
use crate::exactnum::QuadReal;
use crate::rng::SplitMix64;
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

pub const IMPLEMENTATIONS: [&str; 4] =
    ["point-set", "labeled-point-set", "tile-patch", "weighted-comb"];

#[derive(Clone, Debug, Serialize)]
pub struct AxiomFailure {
    pub implementation: &'static str,
    pub case: usize,
    pub axiom: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub cases: usize,
    pub seed: u64,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rand_rat(rng: &mut SplitMix64, span: i64) -> BigRational {
    let den = [1i64, 2, 3, 4, 5][rng.next_below(5) as usize];
    let num = rng.next_i64_in(-span * den, span * den);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Element of Q(sqrt(5)); the quadratic part is present in half the draws.
fn rand_quad(rng: &mut SplitMix64, span: i64) -> QuadReal {
    let p = rand_rat(rng, span);
    if rng.next_below(2) == 0 {
        QuadReal::rational(p)
    } else {
        let q = rand_rat(rng, span / 4 + 1);
        QuadReal::new(p, q, 5).expect("valid discriminant")
    }
}

fn rand_point(rng: &mut SplitMix64, d: usize) -> Vec<QuadReal> {
    (0..d).map(|_| rand_quad(rng, 8)).collect()
}

/// Quarter-integer in [lo, hi]; exact as a float.
fn rand_quarter(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) * 4.0) as u64;
    lo + rng.next_below(steps + 1) as f64 * 0.25
}

fn rand_closed(rng: &mut SplitMix64, d: usize, depth: usize) -> ClosedSet {
    let kind = rng.next_below(if depth == 0 { 5 } else { 3 });
    match kind {
        0 => ClosedSet::Ball {
            center: Vecd::Exact(rand_point(rng, d)),
            radius: rand_quarter(rng, 0.25, 9.0),
        },
        1 => {
            let lo: Vec<QuadReal> = rand_point(rng, d);
            let hi: Vec<QuadReal> = lo
                .iter()
                .map(|c| {
                    c.checked_add(&QuadReal::from_i64(1 + rng.next_below(8) as i64))
                        .expect("small add")
                })
                .collect();
            ClosedSet::Box { lo: Vecd::Exact(lo), hi: Vecd::Exact(hi) }
        }
        2 => {
            let normal: Vec<QuadReal> =
                (0..d).map(|_| QuadReal::from_i64(rng.next_i64_in(-3, 3))).collect();
            let lo = rand_quarter(rng, -8.0, 4.0);
            let hi = lo + rand_quarter(rng, 0.25, 8.0);
            ClosedSet::HalfspaceBand {
                normal: Vecd::Exact(normal),
                lo: Bound::Float(lo),
                hi: Bound::Float(hi),
            }
        }
        3 => ClosedSet::Union(vec![rand_closed(rng, d, 1), rand_closed(rng, d, 1)]),
        _ => ClosedSet::Intersection(vec![rand_closed(rng, d, 1), rand_closed(rng, d, 1)]),
    }
}

fn big_region(d: usize) -> Region {
    Region::new(vec![-64.0; d], vec![64.0; d], 0.0).expect("static region")
}

fn check_axioms<P: Pattern>(
    name: &'static str,
    case: usize,
    p: &P,
    c1: &ClosedSet,
    c2: &ClosedSet,
    x: &Vecd,
    failures: &mut Vec<AxiomFailure>,
) -> Result<()> {
    let both = ClosedSet::Intersection(vec![c1.clone(), c2.clone()]);
    let lhs = p.wedge(&both)?;
    let rhs = p.wedge(c1)?.wedge(c2)?;
    if !lhs.pattern_eq(&rhs, 0.0)? {
        failures.push(AxiomFailure { implementation: name, case, axiom: "composition" });
    }

    let fixed = p.wedge(c1)?.pattern_eq(p, 0.0)?;
    let supported = p.supported_by(c1)?;
    let own = p.wedge(&p.support())?.pattern_eq(p, 0.0)?;
    if fixed != supported || !own {
        failures.push(AxiomFailure { implementation: name, case, axiom: "support" });
    }

    let lhs = p.wedge(c1)?.translate(x)?;
    let rhs = p.translate(x)?.wedge(&c1.translate(x)?)?;
    if !lhs.pattern_eq(&rhs, 0.0)? {
        failures.push(AxiomFailure { implementation: name, case, axiom: "equivariance" });
    }
    Ok(())
}

/// Run `cases` randomized axiom cases against each implementation.
pub fn run_axiom_suite(cases: usize, seed: u64) -> Result<AxiomReport> {
    let mut rng = SplitMix64::new(seed);
    let mut failures = Vec::new();
    for case in 0..cases {
        let d = 1 + (case % 2);
        let c1 = rand_closed(&mut rng, d, 0);
        let c2 = rand_closed(&mut rng, d, 0);
        let x = Vecd::Exact(rand_point(&mut rng, d));
        let region = big_region(d);

        let n_pts = 3 + rng.next_below(9) as usize;
        let mut pts = Vec::with_capacity(n_pts);
        for _ in 0..n_pts {
            pts.push(rand_point(&mut rng, d));
        }

        let set = PointSet::exact(5, pts.clone(), region.clone())?;
        check_axioms("point-set", case, &set, &c1, &c2, &x, &mut failures)?;

        // Deduplicate before labeling; the labeled constructor rejects
        // coincident points.
        let mut labeled_pts: Vec<(Vec<QuadReal>, u32)> = Vec::new();
        for i in 0..set.len() {
            let p = set.point(i);
            labeled_pts
                .push((p.exact_coords().expect("exact").to_vec(), rng.next_below(2) as u32));
        }
        let labeled =
            LabeledPointSet::new(5, labeled_pts, vec!["a".into(), "b".into()], region.clone())?;
        check_axioms("labeled-point-set", case, &labeled, &c1, &c2, &x, &mut failures)?;

        let n_tiles = 2 + rng.next_below(5) as usize;
        let mut tiles = Vec::with_capacity(n_tiles);
        for _ in 0..n_tiles {
            let lo = rand_point(&mut rng, d);
            let hi: Vec<QuadReal> = lo
                .iter()
                .map(|c| {
                    c.checked_add(&rand_quad(&mut rng, 2).abs())
                        .and_then(|v| v.checked_add(&QuadReal::rational(BigRational::new(
                            BigInt::from(1),
                            BigInt::from(4),
                        ))))
                        .expect("small add")
                })
                .collect();
            tiles.push(Tile {
                lo: Vecd::Exact(lo),
                hi: Vecd::Exact(hi),
                label: rng.next_below(2) as u32,
            });
        }
        let patch = Patch::new(tiles, vec!["a".into(), "b".into()], region.clone())?;
        check_axioms("tile-patch", case, &patch, &c1, &c2, &x, &mut failures)?;

        let atoms: Vec<Atom> = (0..n_pts)
            .map(|_| Atom {
                pos: Vecd::Exact(rand_point(&mut rng, d)),
                weight: Weight::Exact(rand_rat(&mut rng, 3)),
            })
            .collect();
        let comb = WeightedComb::new(atoms, region.clone())?;
        check_axioms("weighted-comb", case, &comb, &c1, &c2, &x, &mut failures)?;
    }
    Ok(AxiomReport { cases, seed, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axiom_suite_clean_on_small_run() {
        let report = run_axiom_suite(60, 11).unwrap();
        assert!(report.ok(), "failures: {:?}", report.failures);
    }
}
