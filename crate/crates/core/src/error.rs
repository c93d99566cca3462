use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes callers are
/// expected to branch on; `kind` gives a stable machine-readable tag and
/// `exit_class` the CLI exit-code family.
#[derive(Error, Debug)]
pub enum Error {
    #[error("discriminant mismatch: {0} vs {1}")]
    DiscMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid discriminant {0}: must be square-free and >= 2")]
    InvalidDisc(u64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("mixed exact/float arithmetic; convert explicitly with to_float")]
    ArithMismatch,
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("query ball B({center}, {radius}) not covered by region")]
    InsufficientWindow { center: String, radius: f64 },
    #[error("patch at {0} is empty")]
    EmptyPatch(String),

    #[error("singular basis (zero determinant)")]
    SingularBasis,
    #[error("projection to physical space not injective on enumerated box: lattice point with coefficients {coeffs:?} has zero physical part")]
    InjectivityViolation { coeffs: Vec<i64> },
    #[error("internal projection not observed {eps}-dense within bound {bound}")]
    DensityNotWitnessed { eps: f64, bound: i64 },
    #[error("enumeration bound {bound} too small: region requires coefficient range {needed}")]
    EnumerationTooSmall { bound: i64, needed: i64 },
    #[error("window check failed: {0}")]
    WindowCheckFailed(String),

    #[error("no eigenvalue candidate with |1/|a| - {target}| < {eps} within coefficient bound {bound}; raise the bound or conclude discreteness at this scale")]
    NotFound { target: f64, eps: f64, bound: i64 },
    #[error("equivariance modulus never reaches the band half-width {band} over the radius grid (min omega {min_omega})")]
    NoDecay { band: f64, min_omega: f64 },
    #[error("no nontrivial matched pairs at radius {radius}")]
    NoPairs { radius: f64 },

    #[error("singular map")]
    SingularMap,
    #[error("map is not expansive (spectral radius of inverse {0} >= 1)")]
    NotExpansive(f64),

    #[error("R0 = {r0} does not exceed the covering radius {covering} of the source set")]
    R0TooSmall { r0: f64, covering: f64 },
    #[error("locator construction needs radius {r0} but the region only supports {max}")]
    R0ExceedsWindow { r0: f64, max: f64 },
    #[error("cocycle hypothesis violated: |({a} - {b}) - ({c} - {d})| = {dev}")]
    CocycleViolation { a: f64, b: f64, c: f64, d: f64, dev: f64 },
    #[error("quarter-band hypothesis fails at {count} point(s); worst |theta| = {worst}")]
    BandHypothesisFails { count: usize, worst: f64 },

    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("support is not Delone: {0}")]
    NotDeloneSupport(String),
    #[error("too many tile classes for offset encoding: {0}")]
    TooManyClasses(usize),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exit-code family for the CLI: usage/input errors exit 2, window and
/// enumeration-scale conditions exit 3.
pub enum ExitClass {
    Usage,
    WindowOrEnumeration,
}

impl Error {
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            DiscMismatch(..) => "disc_mismatch",
            DivisionByZero => "division_by_zero",
            InvalidDisc(..) => "invalid_disc",
            DimMismatch(..) => "dim_mismatch",
            ArithMismatch => "arith_mismatch",
            Parse(..) => "parse",
            InvalidRegion(..) => "invalid_region",
            InsufficientWindow { .. } => "insufficient_window",
            EmptyPatch(..) => "empty_patch",
            SingularBasis => "singular_basis",
            InjectivityViolation { .. } => "injectivity_violation",
            DensityNotWitnessed { .. } => "density_not_witnessed",
            EnumerationTooSmall { .. } => "enumeration_too_small",
            WindowCheckFailed(..) => "window_check_failed",
            NotFound { .. } => "not_found",
            NoDecay { .. } => "no_decay",
            NoPairs { .. } => "no_pairs",
            SingularMap => "singular_map",
            NotExpansive(..) => "not_expansive",
            R0TooSmall { .. } => "r0_too_small",
            R0ExceedsWindow { .. } => "r0_exceeds_window",
            CocycleViolation { .. } => "cocycle_violation",
            BandHypothesisFails { .. } => "band_hypothesis_fails",
            InfeasibleParams(..) => "infeasible_params",
            NotDeloneSupport(..) => "not_delone_support",
            TooManyClasses(..) => "too_many_classes",
            Io(..) => "io",
            Json(..) => "json",
        }
    }

    pub fn exit_class(&self) -> ExitClass {
        use Error::*;
        match self {
            InsufficientWindow { .. }
            | EmptyPatch(..)
            | EnumerationTooSmall { .. }
            | DensityNotWitnessed { .. }
            | NotFound { .. }
            | NoDecay { .. }
            | NoPairs { .. }
            | R0TooSmall { .. }
            | R0ExceedsWindow { .. }
            | BandHypothesisFails { .. }
            | WindowCheckFailed(..) => ExitClass::WindowOrEnumeration,
            _ => ExitClass::Usage,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
