//! Pattern instances beyond bare point sets: labeled tile packings and
//! weighted Dirac combs. Both carry a bounding region and satisfy the same
//! wedge / translation / support axioms as point sets, with the per-element
//! rule applied to whole tiles (box containment) or single atoms.

use super::{ClosedSet, Pattern, Region, Vecd};
use crate::error::{Error, Result};
use num_rational::BigRational;
use std::cmp::Ordering;

fn cmp_vecd(a: &Vecd, b: &Vecd) -> Ordering {
    match (a, b) {
        (Vecd::Exact(x), Vecd::Exact(y)) => {
            for (u, v) in x.iter().zip(y) {
                match u.checked_cmp(v).expect("uniform field") {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        }
        _ => {
            let (x, y) = (a.to_f64_vec(), b.to_f64_vec());
            for (u, v) in x.iter().zip(&y) {
                match u.partial_cmp(v).expect("finite") {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        }
    }
}

fn eq_vecd(a: &Vecd, b: &Vecd, tol: f64) -> Result<bool> {
    if tol == 0.0 {
        if a.is_exact() != b.is_exact() || !a.is_exact() {
            return Err(Error::ArithMismatch);
        }
        Ok(cmp_vecd(a, b) == Ordering::Equal)
    } else {
        let (x, y) = (a.to_f64_vec(), b.to_f64_vec());
        let d2: f64 = x.iter().zip(&y).map(|(u, v)| (u - v) * (u - v)).sum();
        Ok(d2 <= tol * tol)
    }
}

/// Axis-aligned labeled tile.
#[derive(Clone, Debug)]
pub struct Tile {
    pub lo: Vecd,
    pub hi: Vecd,
    pub label: u32,
}

/// Finite packing of labeled tiles inside a region.
#[derive(Clone, Debug)]
pub struct Patch {
    region: Region,
    tiles: Vec<Tile>,
    pub label_names: Vec<String>,
}

impl Patch {
    pub fn new(tiles: Vec<Tile>, label_names: Vec<String>, region: Region) -> Result<Self> {
        let d = region.dim();
        let exact = tiles.first().map(|t| t.lo.is_exact()).unwrap_or(true);
        for t in &tiles {
            if t.lo.dim() != d || t.hi.dim() != d {
                return Err(Error::DimMismatch(t.lo.dim(), d));
            }
            if t.lo.is_exact() != exact || t.hi.is_exact() != exact {
                return Err(Error::ArithMismatch);
            }
            let (lf, hf) = (t.lo.to_f64_vec(), t.hi.to_f64_vec());
            if lf.iter().zip(&hf).any(|(l, h)| l >= h) {
                return Err(Error::InvalidRegion("degenerate tile".into()));
            }
            if t.label as usize >= label_names.len() {
                return Err(Error::Parse(format!("tile label {} has no name", t.label)));
            }
        }
        let mut tiles = tiles;
        tiles.sort_by(|a, b| cmp_vecd(&a.lo, &b.lo).then_with(|| cmp_vecd(&a.hi, &b.hi)));
        Ok(Patch { region, tiles, label_names })
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

impl Pattern for Patch {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    fn region(&self) -> &Region {
        &self.region
    }

    fn wedge(&self, c: &ClosedSet) -> Result<Self> {
        let mut keep = Vec::new();
        for t in &self.tiles {
            if c.contains_box(&t.lo, &t.hi)? {
                keep.push(t.clone());
            }
        }
        Ok(Patch { region: self.region.clone(), tiles: keep, label_names: self.label_names.clone() })
    }

    fn translate(&self, x: &Vecd) -> Result<Self> {
        let mut tiles = Vec::with_capacity(self.tiles.len());
        for t in &self.tiles {
            tiles.push(Tile { lo: t.lo.add(x)?, hi: t.hi.add(x)?, label: t.label });
        }
        Ok(Patch {
            region: self.region.translated(&x.to_f64_vec()),
            tiles,
            label_names: self.label_names.clone(),
        })
    }

    fn supported_by(&self, c: &ClosedSet) -> Result<bool> {
        for t in &self.tiles {
            if !c.contains_box(&t.lo, &t.hi)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn pattern_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.tiles.len() != other.tiles.len() {
            return Ok(false);
        }
        for (a, b) in self.tiles.iter().zip(&other.tiles) {
            if a.label != b.label
                || !eq_vecd(&a.lo, &b.lo, tol)?
                || !eq_vecd(&a.hi, &b.hi, tol)?
            {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn support(&self) -> ClosedSet {
        ClosedSet::Union(
            self.tiles
                .iter()
                .map(|t| ClosedSet::Box { lo: t.lo.clone(), hi: t.hi.clone() })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Exact(BigRational),
    Float(f64),
}

impl Weight {
    pub fn to_f64(&self) -> f64 {
        match self {
            Weight::Exact(r) => {
                use num_traits::ToPrimitive;
                r.to_f64().unwrap_or(f64::NAN)
            }
            Weight::Float(f) => *f,
        }
    }
}

/// Weighted atom of a Dirac comb.
#[derive(Clone, Debug)]
pub struct Atom {
    pub pos: Vecd,
    pub weight: Weight,
}

/// Finite weighted Dirac comb.
#[derive(Clone, Debug)]
pub struct WeightedComb {
    region: Region,
    atoms: Vec<Atom>,
}

impl WeightedComb {
    pub fn new(atoms: Vec<Atom>, region: Region) -> Result<Self> {
        let d = region.dim();
        let exact = atoms.first().map(|a| a.pos.is_exact()).unwrap_or(true);
        for a in &atoms {
            if a.pos.dim() != d {
                return Err(Error::DimMismatch(a.pos.dim(), d));
            }
            if a.pos.is_exact() != exact {
                return Err(Error::ArithMismatch);
            }
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| cmp_vecd(&a.pos, &b.pos));
        Ok(WeightedComb { region, atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

impl Pattern for WeightedComb {
    fn dim(&self) -> usize {
        self.region.dim()
    }

    fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    fn region(&self) -> &Region {
        &self.region
    }

    fn wedge(&self, c: &ClosedSet) -> Result<Self> {
        let mut keep = Vec::new();
        for a in &self.atoms {
            if c.contains_point(&a.pos)? {
                keep.push(a.clone());
            }
        }
        Ok(WeightedComb { region: self.region.clone(), atoms: keep })
    }

    fn translate(&self, x: &Vecd) -> Result<Self> {
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            atoms.push(Atom { pos: a.pos.add(x)?, weight: a.weight.clone() });
        }
        Ok(WeightedComb { region: self.region.translated(&x.to_f64_vec()), atoms })
    }

    fn supported_by(&self, c: &ClosedSet) -> Result<bool> {
        for a in &self.atoms {
            if !c.contains_point(&a.pos)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn pattern_eq(&self, other: &Self, tol: f64) -> Result<bool> {
        if self.atoms.len() != other.atoms.len() {
            return Ok(false);
        }
        for (a, b) in self.atoms.iter().zip(&other.atoms) {
            if !eq_vecd(&a.pos, &b.pos, tol)? {
                return Ok(false);
            }
            let wdiff_ok = match (&a.weight, &b.weight, tol) {
                (Weight::Exact(x), Weight::Exact(y), t) if t == 0.0 => x == y,
                (x, y, t) => (x.to_f64() - y.to_f64()).abs() <= t,
            };
            if !wdiff_ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn support(&self) -> ClosedSet {
        ClosedSet::Union(
            self.atoms
                .iter()
                .map(|a| ClosedSet::Ball { center: a.pos.clone(), radius: 0.0 })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::QuadReal;

    fn iv(a: i64, b: i64, label: u32) -> Tile {
        Tile {
            lo: Vecd::Exact(vec![QuadReal::from_i64(a)]),
            hi: Vecd::Exact(vec![QuadReal::from_i64(b)]),
            label,
        }
    }

    #[test]
    fn wedge_keeps_only_contained_tiles() {
        let p = Patch::new(
            vec![iv(0, 1, 0), iv(1, 3, 1), iv(3, 4, 0)],
            vec!["a".into(), "b".into()],
            Region::interval(0.0, 4.0).unwrap(),
        )
        .unwrap();
        let c = ClosedSet::Box {
            lo: Vecd::Exact(vec![QuadReal::from_i64(0)]),
            hi: Vecd::Exact(vec![QuadReal::from_i64(3)]),
        };
        let w = p.wedge(&c).unwrap();
        // Tile [3,4] sticks out; tiles [0,1] and [1,3] are inside.
        assert_eq!(w.len(), 2);
        assert!(w.supported_by(&c).unwrap());
    }

    #[test]
    fn translate_then_compare() {
        let p = Patch::new(
            vec![iv(0, 1, 0), iv(1, 3, 1)],
            vec!["a".into(), "b".into()],
            Region::interval(0.0, 3.0).unwrap(),
        )
        .unwrap();
        let q = Patch::new(
            vec![iv(5, 6, 0), iv(6, 8, 1)],
            vec!["a".into(), "b".into()],
            Region::interval(5.0, 8.0).unwrap(),
        )
        .unwrap();
        let x = Vecd::Exact(vec![QuadReal::from_i64(5)]);
        let moved = p.translate(&x).unwrap();
        assert!(moved.pattern_eq(&q, 0.0).unwrap());
        assert!(!p.pattern_eq(&q, 0.0).unwrap());
    }

    #[test]
    fn comb_weight_comparison() {
        let mk = |w: BigRational| {
            WeightedComb::new(
                vec![Atom {
                    pos: Vecd::Exact(vec![QuadReal::from_i64(0)]),
                    weight: Weight::Exact(w),
                }],
                Region::interval(-1.0, 1.0).unwrap(),
            )
            .unwrap()
        };
        let a = mk(BigRational::new(1.into(), 2.into()));
        let b = mk(BigRational::new(1.into(), 2.into()));
        let c = mk(BigRational::new(1.into(), 3.into()));
        assert!(a.pattern_eq(&b, 0.0).unwrap());
        assert!(!a.pattern_eq(&c, 0.0).unwrap());
        assert!(a.pattern_eq(&c, 0.2).unwrap());
    }
}
