//! Command-line front end: generation, stripe verification and search,
//! eigenvalue enumeration, equivariance and metric reports, locator sets,
//! axiom checks, and the certificate round trip. Every subcommand is a thin
//! composition of library calls; results are JSON on stdout or --out, with
//! an optional SVG figure and a run manifest for provenance.

use apk_core::cps::{
    eigen_enumerate, find_small_eigenvalue, lattice_scheme, CutProjectScheme,
};
use apk_core::error::{Error, ExitClass};
use apk_core::exactnum::QuadReal;
use apk_core::generators::{self, Family, GeneratorConfig};
use apk_core::io;
use apk_core::patternspace::{
    axioms, default_anchors, flc_census, local_match_dist, match_dist_detail, repetitivity_radius,
    PointSet, Vecd,
};
use apk_core::spectra::{equivariance_modulus, Character};
use apk_core::stripe::{
    eigen_from_stripe, locator_set, stripe_search, stripe_verify, CharacterSource,
    StripeCertificate, StripeSpec,
};
use apk_core::svg;
use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "apk", version, about = "Aperiodic point-set toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write an SVG figure (gen, stripe-verify, stripe-search, locator).
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
    /// Write the run manifest here instead of stderr.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct AnchorOpts {
    /// Off-lattice anchors added to the covered on-point anchors.
    #[arg(long, default_value_t = 1000)]
    off_anchors: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a built-in family as a point-set JSON file.
    Gen {
        #[arg(long)]
        family: String,
        /// lo hi (1D) or lo_x lo_y hi_x hi_y (2D).
        #[arg(long, num_args = 1..=4, value_delimiter = ',', allow_negative_numbers = true)]
        region: Vec<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Interval window override: lo hi.
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        window: Option<Vec<String>>,
        #[arg(long)]
        iterations: Option<u32>,
        #[arg(long)]
        seed_tile: Option<char>,
        #[arg(long, allow_hyphen_values = true)]
        perturbation: Option<String>,
        /// Packing radius (poisson-control).
        #[arg(long)]
        r: Option<f64>,
        /// Covering radius (poisson-control).
        #[arg(long = "R")]
        big_r: Option<f64>,
        /// Lattice rows, e.g. "1,0;0,1".
        #[arg(long, allow_hyphen_values = true)]
        basis: Option<String>,
    },
    /// Verify the stripe property of an explicit band spec on a point set.
    StripeVerify {
        set: PathBuf,
        /// Band direction (normalized automatically).
        #[arg(long, num_args = 1..=2, value_delimiter = ',', allow_negative_numbers = true)]
        a: Vec<String>,
        #[arg(long = "L1", allow_hyphen_values = true)]
        l1: String,
        #[arg(long = "L2", allow_hyphen_values = true)]
        l2: String,
        #[arg(long = "R")]
        r: String,
        #[command(flatten)]
        anchors: AnchorOpts,
    },
    /// Search for a certified stripe structure from the dual lattice.
    StripeSearch {
        set: PathBuf,
        #[arg(long)]
        target_period: String,
        #[arg(long)]
        target_halfwidth: String,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Patch radii to escalate through.
        #[arg(long, value_delimiter = ',')]
        r_grid: Option<Vec<f64>>,
        #[command(flatten)]
        anchors: AnchorOpts,
    },
    /// Enumerate dual-lattice characters, or pick one near a target period.
    Eigenvalues {
        /// Scheme JSON, or point-set JSON with an embedded scheme.
        input: PathBuf,
        #[arg(long, default_value_t = 40.0)]
        phys_max: f64,
        #[arg(long, default_value_t = 40.0)]
        internal_max: f64,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Cap on listed characters; the total count is always reported.
        #[arg(long, default_value_t = 100)]
        limit: usize,
    },
    /// Empirical equivariance modulus of a frequency over a radius grid.
    Equivariance {
        set: PathBuf,
        #[arg(long, num_args = 1..=2, value_delimiter = ',', allow_negative_numbers = true)]
        a: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,50")]
        r_grid: Vec<f64>,
        #[command(flatten)]
        anchors: AnchorOpts,
    },
    /// Local matching distance between two point sets.
    Metric {
        set1: PathBuf,
        set2: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5")]
        r_grid: Vec<f64>,
    },
    /// Locator set: positions repeating the R0-patch at x0.
    Locator {
        set: PathBuf,
        #[arg(long, num_args = 1..=2, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Vec<String>,
        #[arg(long = "R0")]
        r0: String,
    },
    /// Randomized pattern-space axiom suite over all four implementations.
    AxiomsTest {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 2718281828)]
        seed: u64,
    },
    /// Recover the character behind a stripe certificate and re-measure it.
    RoundTrip {
        set: PathBuf,
        cert: PathBuf,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
    },
    /// Structural summary: gaps, covering, patch census, repetitivity.
    Report {
        set: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
    },
}

/// Numeric CLI inputs: decimal strings or the exact expressions "tau",
/// "sqrt2", "sqrt5", and "p/q", optionally negated.
fn parse_quad(s: &str) -> Result<QuadReal, Error> {
    let t = s.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t),
    };
    let half = || BigRational::new(BigInt::from(1), BigInt::from(2));
    let v = match body {
        "tau" => QuadReal::new(half(), half(), 5)?,
        "sqrt2" => QuadReal::sqrt_disc(2)?,
        "sqrt5" => QuadReal::sqrt_disc(5)?,
        _ if body.contains('/') => {
            let mut it = body.splitn(2, '/');
            let p: BigInt = it
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational {body}")))?;
            let q: BigInt = it
                .next()
                .unwrap()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rational {body}")))?;
            if q == BigInt::from(0) {
                return Err(Error::DivisionByZero);
            }
            QuadReal::rational(BigRational::new(p, q))
        }
        _ => {
            let f: f64 =
                body.parse().map_err(|_| Error::Parse(format!("bad number {body}")))?;
            QuadReal::from_f64_exact(f)?
        }
    };
    if neg {
        QuadReal::zero().checked_sub(&v)
    } else {
        Ok(v)
    }
}

fn parse_f64(s: &str) -> Result<f64, Error> {
    Ok(parse_quad(s)?.to_f64())
}

struct Outcome {
    result: Value,
    exit: i32,
    svg: Option<String>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, exit: 0, svg: None }
    }
}

fn load_pointset(
    path: &Path,
    manifest: &mut io::RunManifest,
) -> Result<(PointSet, Option<CutProjectScheme>), Error> {
    let bytes = std::fs::read(path)?;
    manifest.record_input(path, &bytes);
    io::pointset_from_json(&serde_json::from_slice(&bytes)?)
}

fn span_of(set: &PointSet) -> f64 {
    set.region().span().into_iter().fold(0.0f64, f64::max)
}

fn to_float_mode(set: &PointSet) -> Result<PointSet, Error> {
    let pts = (0..set.len()).map(|i| set.approx_point(i).to_vec()).collect();
    PointSet::float_mode(1e-9, pts, set.region().clone())
}

/// Covered on-point nearest the region center; used to anchor figures.
fn center_anchor(set: &PointSet, r: f64) -> Vec<f64> {
    let center = set.region().center();
    let mut best = center.clone();
    let mut best_d = f64::INFINITY;
    for i in 0..set.len() {
        let p = set.point(i);
        if !set.region().covers_ball(&p, r) {
            continue;
        }
        let pf = set.approx_point(i);
        let d: f64 = pf.iter().zip(&center).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = pf.to_vec();
        }
    }
    best
}

fn direction_character(parts: &[String]) -> Result<Character, Error> {
    let exact: Vec<QuadReal> =
        parts.iter().map(|s| parse_quad(s)).collect::<Result<_, _>>()?;
    Ok(Character::from_exact(exact))
}

fn scheme_for_family(family: Family, dim: usize) -> Option<CutProjectScheme> {
    match family {
        Family::Lattice => Some(lattice_scheme(dim)),
        Family::FibonacciCps | Family::FibonacciSubstitution => {
            Some(apk_core::cps::fibonacci_scheme())
        }
        Family::SilverMean => Some(apk_core::cps::silver_scheme()),
        Family::AmmannBeenker => Some(apk_core::cps::ammann_beenker_scheme()),
        Family::PoissonControl => None,
    }
}

fn run(cli: &Cli, manifest: &mut io::RunManifest) -> Result<Outcome, Error> {
    match &cli.cmd {
        Cmd::Gen {
            family,
            region,
            seed,
            window,
            iterations,
            seed_tile,
            perturbation,
            r,
            big_r,
            basis,
        } => {
            let fam: Family = serde_json::from_value(json!(family))
                .map_err(|_| Error::Parse(format!("unknown family {family}")))?;
            let (lo, hi) = match region.len() {
                0 if fam == Family::FibonacciSubstitution => (None, None),
                2 => (Some(vec![region[0]]), Some(vec![region[1]])),
                4 => (Some(vec![region[0], region[1]]), Some(vec![region[2], region[3]])),
                n => {
                    return Err(Error::Parse(format!(
                        "--region takes 2 values (1D) or 4 (2D), got {n}"
                    )))
                }
            };
            let window = match window {
                None => None,
                Some(w) => Some((parse_f64(&w[0])?, parse_f64(&w[1])?)),
            };
            let basis = match basis {
                None => None,
                Some(b) => Some(
                    b.split(';')
                        .map(|row| {
                            row.split(',')
                                .map(|c| parse_f64(c.trim()))
                                .collect::<Result<Vec<f64>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                ),
            };
            let cfg = GeneratorConfig {
                family: fam,
                lo,
                hi,
                seed: *seed,
                basis,
                perturbation: perturbation.as_deref().map(parse_f64).transpose()?,
                iterations: *iterations,
                seed_tile: *seed_tile,
                window,
                r: *r,
                big_r: *big_r,
            };
            manifest.config = serde_json::to_value(&cfg)?;
            let set = generators::generate(&cfg)?;
            let scheme = scheme_for_family(fam, set.dim());
            let result = io::pointset_to_json(&set, scheme.as_ref());
            Ok(Outcome { svg: Some(svg::pointset_svg(&set)), ..Outcome::ok(result) })
        }

        Cmd::StripeVerify { set, a, l1, l2, r, anchors } => {
            let (d, _) = load_pointset(set, manifest)?;
            let dir: Vec<f64> = a.iter().map(|s| parse_f64(s)).collect::<Result<_, _>>()?;
            let spec = StripeSpec::from_direction(
                dir,
                parse_f64(l1)?,
                parse_f64(l2)?,
                parse_f64(r)?,
            )?;
            let xs = default_anchors(&d, spec.r, anchors.off_anchors);
            let cert = stripe_verify(&d, &spec, &xs, span_of(&d))?;
            certificate_outcome(&d, cert)
        }

        Cmd::StripeSearch { set, target_period, target_halfwidth, eps, r_grid, anchors } => {
            let (d, scheme) = load_pointset(set, manifest)?;
            let scheme = scheme.ok_or_else(|| {
                Error::Parse("stripe-search needs a point set with an embedded scheme".into())
            })?;
            let grid = r_grid
                .clone()
                .unwrap_or_else(|| vec![50.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0]);
            let xs = default_anchors(&d, 2.0, anchors.off_anchors);
            let cert = stripe_search(
                &d,
                CharacterSource::Scheme(&scheme),
                parse_f64(target_period)?,
                parse_f64(target_halfwidth)?,
                *eps,
                &grid,
                &xs,
            )?;
            certificate_outcome(&d, cert)
        }

        Cmd::Eigenvalues { input, phys_max, internal_max, target, eps, limit } => {
            let bytes = std::fs::read(input)?;
            manifest.record_input(input, &bytes);
            let v: Value = serde_json::from_slice(&bytes)?;
            let scheme = match io::scheme_from_json(&v) {
                Ok(s) => s,
                Err(_) => io::pointset_from_json(&v)?.1.ok_or_else(|| {
                    Error::Parse("input carries no scheme".into())
                })?,
            };
            if let Some(t) = target {
                let chr = find_small_eigenvalue(&scheme, parse_f64(t)?, *eps)?;
                return Ok(Outcome::ok(json!({
                    "character": chr,
                    "period": 1.0 / chr.norm(),
                })));
            }
            let all = eigen_enumerate(&scheme, *phys_max, *internal_max)?;
            let listed: Vec<&Character> = all.iter().take(*limit).collect();
            Ok(Outcome::ok(json!({
                "total": all.len(),
                "characters": listed,
            })))
        }

        Cmd::Equivariance { set, a, r_grid, anchors } => {
            let (d, _) = load_pointset(set, manifest)?;
            let chr = direction_character(a)?;
            let min_r = r_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            let xs = default_anchors(&d, min_r, anchors.off_anchors);
            let rep = equivariance_modulus(&d, &chr, r_grid, &xs, span_of(&d))?;
            Ok(Outcome::ok(json!({
                "character": chr,
                "report": rep,
            })))
        }

        Cmd::Metric { set1, set2, r_grid } => {
            let (mut d1, _) = load_pointset(set1, manifest)?;
            let (mut d2, _) = load_pointset(set2, manifest)?;
            // Sets from different quadratic fields cannot share exact
            // arithmetic; compare them in float mode instead.
            let mixed = match (d1.disc(), d2.disc()) {
                (Some(a), Some(b)) => a != b && a != 0 && b != 0,
                _ => false,
            };
            if mixed {
                d1 = to_float_mode(&d1)?;
                d2 = to_float_mode(&d2)?;
            }
            let detail = match_dist_detail(&d1, &d2)?;
            let resolved = local_match_dist(&d1, &d2, r_grid)?;
            Ok(Outcome::ok(json!({
                "detail": detail,
                "grid": r_grid,
                "resolved": resolved,
            })))
        }

        Cmd::Locator { set, x0, r0 } => {
            let (d, _) = load_pointset(set, manifest)?;
            let coords: Vec<QuadReal> =
                x0.iter().map(|s| parse_quad(s)).collect::<Result<_, _>>()?;
            let anchor = if d.is_exact() {
                Vecd::Exact(coords)
            } else {
                Vecd::Float(coords.iter().map(|c| c.to_f64()).collect())
            };
            let loc = locator_set(&d, &anchor, parse_f64(r0)?, d.region())?;
            let result = json!({
                "points": io::pointset_to_json(&loc.points, None),
                "r_e": loc.r_e,
                "covering": loc.covering,
                "relatively_dense": loc.relatively_dense,
            });
            Ok(Outcome { svg: Some(svg::pointset_svg(&loc.points)), ..Outcome::ok(result) })
        }

        Cmd::AxiomsTest { cases, seed } => {
            let report = axioms::run_axiom_suite(*cases, *seed)?;
            let exit = if report.ok() { 0 } else { 1 };
            Ok(Outcome { result: serde_json::to_value(&report)?, exit, svg: None })
        }

        Cmd::RoundTrip { set, cert, eps_grid } => {
            let (d, _) = load_pointset(set, manifest)?;
            let bytes = std::fs::read(cert)?;
            manifest.record_input(cert, &bytes);
            let cert: StripeCertificate =
                io::certificate_from_json(&serde_json::from_slice(&bytes)?)?;
            let grid = eps_grid.clone().unwrap_or_default();
            let rec = eigen_from_stripe(&d, &cert, &grid)?;
            Ok(Outcome::ok(json!({
                "character": rec.character,
                "band_max": rec.band_max,
                "locator": {
                    "points": rec.locator.points.len(),
                    "r_e": rec.locator.r_e,
                    "covering": rec.locator.covering,
                    "relatively_dense": rec.locator.relatively_dense,
                },
                "on_d": rec.on_d,
                "on_e": rec.on_e,
                "level_sets": rec.level_sets,
            })))
        }

        Cmd::Report { set, radius } => {
            let (d, _) = load_pointset(set, manifest)?;
            let census = flc_census(
                &d,
                *radius,
                &default_anchors(&d, *radius, 0),
            )?;
            let x0 = center_anchor(&d, *radius);
            let x0 = if d.is_exact() {
                // Census anchors are on-points, so the exact coordinate
                // exists in the set; find it.
                let idx = (0..d.len())
                    .find(|&i| d.approx_point(i) == x0.as_slice())
                    .ok_or_else(|| Error::Parse("no covered anchor".into()))?;
                d.point(idx)
            } else {
                Vecd::Float(x0)
            };
            let rep = repetitivity_radius(&d, &x0, *radius)?;
            Ok(Outcome::ok(json!({
                "dim": d.dim(),
                "arith": if d.is_exact() { "exact" } else { "float" },
                "points": d.len(),
                "min_gap": d.min_gap(),
                "covering_radius": d.covering_radius(0.0),
                "census": {
                    "radius": census.radius,
                    "anchors": census.anchors_used,
                    "classes": census.n_classes,
                },
                "repetitivity_radius": rep,
            })))
        }
    }
}

fn certificate_outcome(d: &PointSet, cert: StripeCertificate) -> Result<Outcome, Error> {
    let exit = if cert.holds() { 0 } else { 1 };
    let b = center_anchor(d, cert.spec.r);
    let figure = svg::stripe_svg(d, &cert, &b);
    let result = io::certificate_to_json(&cert)?;
    Ok(Outcome { result, exit, svg: Some(figure) })
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), Error> {
    match &cli.out {
        Some(path) => io::write_json_file(path, &outcome.result)?,
        None => println!("{}", serde_json::to_string_pretty(&outcome.result)?),
    }
    if let Some(path) = &cli.svg {
        match &outcome.svg {
            Some(s) => std::fs::write(path, s)?,
            None => {
                return Err(Error::Parse(
                    "this subcommand does not produce a figure".into(),
                ))
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Ok(threads) = std::env::var("APK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }

    let sub = match &cli.cmd {
        Cmd::Gen { .. } => "gen",
        Cmd::StripeVerify { .. } => "stripe-verify",
        Cmd::StripeSearch { .. } => "stripe-search",
        Cmd::Eigenvalues { .. } => "eigenvalues",
        Cmd::Equivariance { .. } => "equivariance",
        Cmd::Metric { .. } => "metric",
        Cmd::Locator { .. } => "locator",
        Cmd::AxiomsTest { .. } => "axioms-test",
        Cmd::RoundTrip { .. } => "round-trip",
        Cmd::Report { .. } => "report",
    };
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let mut manifest = io::RunManifest::new(sub, json!({ "argv": argv }));

    let start = Instant::now();
    let outcome = run(&cli, &mut manifest);
    manifest.wall_ms = start.elapsed().as_millis() as u64;

    match &cli.manifest {
        Some(path) => {
            if let Err(e) = io::write_json_file(path, &serde_json::to_value(&manifest).unwrap()) {
                eprintln!("apk: cannot write manifest: {e}");
            }
        }
        None => eprintln!("{}", serde_json::to_string(&manifest).unwrap()),
    }

    match outcome {
        Ok(out) => {
            if let Err(e) = emit(&cli, &out) {
                eprintln!("apk: {e}");
                std::process::exit(2);
            }
            std::process::exit(out.exit);
        }
        Err(e) => {
            let payload = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            match &cli.out {
                Some(path) => {
                    let _ = io::write_json_file(path, &payload);
                }
                None => println!("{}", serde_json::to_string_pretty(&payload).unwrap()),
            }
            eprintln!("apk: {e}");
            let code = match e.exit_class() {
                ExitClass::Usage => 2,
                ExitClass::WindowOrEnumeration => 3,
            };
            std::process::exit(code);
        }
    }
}
