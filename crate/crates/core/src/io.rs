//! JSON file formats: point sets, cut-and-project schemes, windows, stripe
//! certificates, tilings and combs, plus the run manifest the CLI emits
//! with every invocation. All writers are deterministic (sorted object
//! keys, no timestamps in the payload), so identical inputs produce
//! identical bytes.

use crate::cps::{build_scheme, CutProjectScheme, WindowSpec};
use crate::error::{Error, Result};
use crate::exactnum::QuadReal;
use crate::patternspace::{Atom, Patch, Pattern, PointSet, Region, Tile, Vecd, Weight, WeightedComb};
use crate::stripe::StripeCertificate;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const POINTSET_FORMAT: &str = "apk-pointset-v1";
pub const SCHEME_FORMAT: &str = "apk-cps-v1";
pub const WINDOW_FORMAT: &str = "apk-window-v1";
pub const CERT_FORMAT: &str = "apk-stripe-cert-v1";
pub const PATCH_FORMAT: &str = "apk-patch-v1";
pub const COMB_FORMAT: &str = "apk-comb-v1";

fn expect_format(v: &Value, want: &str) -> Result<()> {
    match v.get("format").and_then(Value::as_str) {
        Some(f) if f == want => Ok(()),
        Some(f) => Err(Error::Parse(format!("expected format {want}, found {f}"))),
        None => Err(Error::Parse(format!("missing format tag (expected {want})"))),
    }
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Parse(format!("missing field {name}")))
}

fn as_f64_vec(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected an array of numbers".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::Parse("expected a number".into())))
        .collect()
}

fn quad(v: &Value) -> Result<QuadReal> {
    serde_json::from_value(v.clone()).map_err(Error::from)
}

fn quad_rows(v: &Value) -> Result<Vec<Vec<QuadReal>>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected an array of coordinate rows".into()))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::Parse("expected a coordinate row".into()))?
                .iter()
                .map(quad)
                .collect()
        })
        .collect()
}

pub fn region_to_json(r: &Region) -> Value {
    json!({ "lo": r.lo, "hi": r.hi, "margin": r.margin })
}

pub fn region_from_json(v: &Value) -> Result<Region> {
    Region::new(
        as_f64_vec(field(v, "lo")?)?,
        as_f64_vec(field(v, "hi")?)?,
        field(v, "margin")?.as_f64().unwrap_or(0.0),
    )
}

pub fn scheme_to_json(s: &CutProjectScheme) -> Value {
    json!({
        "format": SCHEME_FORMAT,
        "d": s.dim_phys(),
        "m": s.dim_internal(),
        "arith": "exact",
        "disc": s.disc(),
        "basis": s.basis(),
    })
}

/// Rebuild a scheme from its JSON form; the usual construction checks
/// (invertibility, injectivity, density witness) run again.
pub fn scheme_from_json(v: &Value) -> Result<CutProjectScheme> {
    expect_format(v, SCHEME_FORMAT)?;
    let d = field(v, "d")?.as_u64().ok_or_else(|| Error::Parse("d must be an integer".into()))?;
    let m = field(v, "m")?.as_u64().ok_or_else(|| Error::Parse("m must be an integer".into()))?;
    let basis = quad_rows(field(v, "basis")?)?;
    build_scheme(basis, d as usize, m as usize, 8)
}

pub fn window_to_json(w: &WindowSpec) -> Value {
    match w {
        WindowSpec::Full => json!({ "format": WINDOW_FORMAT, "kind": "full" }),
        WindowSpec::Interval { lo, hi } => {
            json!({ "format": WINDOW_FORMAT, "kind": "interval", "lo": lo, "hi": hi })
        }
        WindowSpec::Polygon { verts } => {
            json!({ "format": WINDOW_FORMAT, "kind": "polygon", "verts": verts })
        }
    }
}

pub fn window_from_json(v: &Value) -> Result<WindowSpec> {
    expect_format(v, WINDOW_FORMAT)?;
    match field(v, "kind")?.as_str() {
        Some("full") => Ok(WindowSpec::Full),
        Some("interval") => Ok(WindowSpec::Interval {
            lo: quad(field(v, "lo")?)?,
            hi: quad(field(v, "hi")?)?,
        }),
        Some("polygon") => Ok(WindowSpec::Polygon { verts: quad_rows(field(v, "verts")?)? }),
        other => Err(Error::Parse(format!("unknown window kind {other:?}"))),
    }
}

/// Point set to JSON, optionally carrying the scheme it came from so later
/// pipeline stages can enumerate its dual lattice.
pub fn pointset_to_json(set: &PointSet, scheme: Option<&CutProjectScheme>) -> Value {
    let mut obj = Map::new();
    obj.insert("format".into(), json!(POINTSET_FORMAT));
    obj.insert("dim".into(), json!(set.dim()));
    obj.insert("region".into(), region_to_json(set.region()));
    if set.is_exact() {
        obj.insert("arith".into(), json!("exact"));
        obj.insert("disc".into(), json!(set.disc().unwrap_or(0)));
        obj.insert("points".into(), json!(set.exact_points().expect("exact")));
    } else {
        obj.insert("arith".into(), json!("float"));
        obj.insert("tol".into(), json!(set.tol()));
        let pts: Vec<&[f64]> = (0..set.len()).map(|i| set.approx_point(i)).collect();
        obj.insert("points".into(), json!(pts));
    }
    if let Some(s) = scheme {
        obj.insert("scheme".into(), scheme_to_json(s));
    }
    Value::Object(obj)
}

pub fn pointset_from_json(v: &Value) -> Result<(PointSet, Option<CutProjectScheme>)> {
    expect_format(v, POINTSET_FORMAT)?;
    let region = region_from_json(field(v, "region")?)?;
    let set = match field(v, "arith")?.as_str() {
        Some("exact") => {
            let disc = field(v, "disc")?
                .as_u64()
                .ok_or_else(|| Error::Parse("disc must be an integer".into()))?;
            PointSet::exact(disc, quad_rows(field(v, "points")?)?, region)?
        }
        Some("float") => {
            let tol = field(v, "tol")?.as_f64().unwrap_or(1e-9);
            let pts = field(v, "points")?
                .as_array()
                .ok_or_else(|| Error::Parse("points must be an array".into()))?
                .iter()
                .map(as_f64_vec)
                .collect::<Result<Vec<_>>>()?;
            PointSet::float_mode(tol, pts, region)?
        }
        other => return Err(Error::Parse(format!("unknown arith mode {other:?}"))),
    };
    let scheme = match v.get("scheme") {
        Some(s) if !s.is_null() => Some(scheme_from_json(s)?),
        _ => None,
    };
    Ok((set, scheme))
}

fn vecd_to_json(x: &Vecd) -> Value {
    match x.exact_coords() {
        Some(coords) => json!(coords),
        None => json!(x.to_f64_vec()),
    }
}

fn vecd_from_json(v: &Value, exact: bool) -> Result<Vecd> {
    if exact {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Parse("expected a coordinate row".into()))?;
        Ok(Vecd::Exact(arr.iter().map(quad).collect::<Result<_>>()?))
    } else {
        Ok(Vecd::Float(as_f64_vec(v)?))
    }
}

pub fn patch_to_json(p: &Patch) -> Value {
    let exact = p.tiles().first().map(|t| t.lo.is_exact()).unwrap_or(true);
    let tiles: Vec<Value> = p
        .tiles()
        .iter()
        .map(|t| json!({ "lo": vecd_to_json(&t.lo), "hi": vecd_to_json(&t.hi), "label": t.label }))
        .collect();
    json!({
        "format": PATCH_FORMAT,
        "dim": p.dim(),
        "arith": if exact { "exact" } else { "float" },
        "region": region_to_json(p.region()),
        "label_names": p.label_names,
        "tiles": tiles,
    })
}

pub fn patch_from_json(v: &Value) -> Result<Patch> {
    expect_format(v, PATCH_FORMAT)?;
    let exact = field(v, "arith")?.as_str() == Some("exact");
    let region = region_from_json(field(v, "region")?)?;
    let names: Vec<String> =
        serde_json::from_value(field(v, "label_names")?.clone()).map_err(Error::from)?;
    let tiles = field(v, "tiles")?
        .as_array()
        .ok_or_else(|| Error::Parse("tiles must be an array".into()))?
        .iter()
        .map(|t| {
            Ok(Tile {
                lo: vecd_from_json(field(t, "lo")?, exact)?,
                hi: vecd_from_json(field(t, "hi")?, exact)?,
                label: field(t, "label")?
                    .as_u64()
                    .ok_or_else(|| Error::Parse("label must be an integer".into()))?
                    as u32,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Patch::new(tiles, names, region)
}

pub fn comb_to_json(c: &WeightedComb) -> Value {
    let exact = c.atoms().first().map(|a| a.pos.is_exact()).unwrap_or(true);
    let atoms: Vec<Value> = c
        .atoms()
        .iter()
        .map(|a| {
            let w = match &a.weight {
                Weight::Exact(r) => json!({ "exact": r.to_string() }),
                Weight::Float(f) => json!(f),
            };
            json!({ "pos": vecd_to_json(&a.pos), "weight": w })
        })
        .collect();
    json!({
        "format": COMB_FORMAT,
        "dim": c.dim(),
        "arith": if exact { "exact" } else { "float" },
        "region": region_to_json(c.region()),
        "atoms": atoms,
    })
}

pub fn comb_from_json(v: &Value) -> Result<WeightedComb> {
    expect_format(v, COMB_FORMAT)?;
    let exact = field(v, "arith")?.as_str() == Some("exact");
    let region = region_from_json(field(v, "region")?)?;
    let atoms = field(v, "atoms")?
        .as_array()
        .ok_or_else(|| Error::Parse("atoms must be an array".into()))?
        .iter()
        .map(|a| {
            let w = field(a, "weight")?;
            let weight = if let Some(f) = w.as_f64() {
                Weight::Float(f)
            } else {
                let s = field(w, "exact")?
                    .as_str()
                    .ok_or_else(|| Error::Parse("exact weight must be a string".into()))?;
                Weight::Exact(
                    s.parse().map_err(|_| Error::Parse(format!("bad rational weight {s}")))?,
                )
            };
            Ok(Atom { pos: vecd_from_json(field(a, "pos")?, exact)?, weight })
        })
        .collect::<Result<Vec<_>>>()?;
    WeightedComb::new(atoms, region)
}

pub fn certificate_to_json(c: &StripeCertificate) -> Result<Value> {
    let mut v = serde_json::to_value(c)?;
    v.as_object_mut()
        .expect("certificate serializes to an object")
        .insert("format".into(), json!(CERT_FORMAT));
    Ok(v)
}

pub fn certificate_from_json(v: &Value) -> Result<StripeCertificate> {
    expect_format(v, CERT_FORMAT)?;
    let mut obj = v.as_object().cloned().unwrap_or_default();
    obj.remove("format");
    serde_json::from_value(Value::Object(obj)).map_err(Error::from)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Provenance record emitted with every CLI run: what ran, with which
/// resolved configuration, against which input bytes.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: Value,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Value) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            config,
            version: env!("CARGO_PKG_VERSION").into(),
            inputs: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }
}

pub fn read_json_file(path: &Path) -> Result<Value> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(Error::from)
}

/// Pretty JSON with a trailing newline; object keys are sorted by the
/// serializer, so output bytes are a function of content alone.
pub fn write_json_file(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
