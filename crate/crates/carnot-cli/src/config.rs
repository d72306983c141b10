//! The run configuration: one plain-text file per run, `key = value` lines.
//!
//! Grammar. `#` starts a comment, blank lines are skipped, and every other
//! line must read `key = value`. Repeatable keys keep their order; all
//! others may appear once. Lists are space-separated.
//!
//! Group (exactly one form):
//! - `group = <name>` — a catalog group: `heisenberg<N>`, `engel4`, `e5`.
//! - `layers = n1 n2 ...` with any number of
//!   `bracket = i j : k c[, k c]...` lines — inline structure constants,
//!   1-based basis indices, rational coefficients (`2`, `-1`, `1/2`).
//!
//! Submanifold (at most one form):
//! - `manifold = <name>` — a named submanifold of the catalog group.
//! - `parameters = x y` with one `component = <expression>` line per group
//!   coordinate and one `domain = lo hi` line per parameter. Expressions
//!   use the usual grammar: rationals, `+ - * / ^`, parentheses, and the
//!   functions `exp`, `ln`, `sin`, `cos`, `sqrt`.
//!
//! Scalars (defaults in parentheses):
//! - `count` (2000): cloud size for blow-up sampling.
//! - `degree`: degree override for `measure`; defaults to the grid degree.
//! - `epsilons`: layer constants of the homogeneous norm, first entry 1;
//!   defaults to seeded calibration.
//! - `format` (json): `json` or `csv`.
//! - `grid`: samples per parameter axis for `degree` and `strata`.
//! - `lambda`: curve coefficients for `curves`, one per parameter.
//! - `limit` (pi-sigma): blow-up limit set, `pi-sigma` or
//!   `half-plane i j` (the span of axes i and j with the j half nonneg).
//! - `margin` (1.3), `method` (grid: `grid` or `mc`), `nodes` (64),
//!   `output`, `point`, `quiet` (false), `radii`, `region` (repeatable
//!   `lo hi`, one per parameter), `samples` (1000000), `seed` (0),
//!   `steps` (10000), `t-max` (0.1), `tolerance` (1e-9), `window` (1).
//!
//! [`RunConfig::canonical`] renders the configuration in a fixed key order
//! with normalized number formatting; parsing the canonical text
//! reproduces the configuration and re-rendering reproduces the bytes.

use carnot::poly::{rat, Rational};

pub const DEFAULT_COUNT: usize = 2000;
pub const DEFAULT_MARGIN: f64 = 1.3;
pub const DEFAULT_NODES: usize = 64;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_STEPS: usize = 10_000;
pub const DEFAULT_T_MAX: f64 = 0.1;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_WINDOW: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    Grid,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::MonteCarlo => "mc",
        }
    }
}

/// The blow-up limit set selector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitSpec {
    PiSigma,
    /// 1-based coordinate axes; the second spans only its nonnegative half.
    HalfPlane(usize, usize),
}

impl LimitSpec {
    pub fn as_text(&self) -> String {
        match self {
            LimitSpec::PiSigma => "pi-sigma".to_string(),
            LimitSpec::HalfPlane(i, j) => format!("half-plane {i} {j}"),
        }
    }
}

/// One inline bracket line: 0-based indices internally, 1-based in text.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketLine {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<(usize, Rational)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub group: Option<String>,
    pub layers: Vec<usize>,
    pub brackets: Vec<BracketLine>,
    pub manifold: Option<String>,
    pub parameters: Vec<String>,
    pub components: Vec<String>,
    pub domain: Vec<(f64, f64)>,
    pub count: usize,
    pub degree: Option<u64>,
    pub epsilons: Option<Vec<f64>>,
    pub format: Format,
    pub grid: Vec<usize>,
    pub lambda: Vec<f64>,
    pub limit: LimitSpec,
    pub margin: f64,
    pub method: Method,
    pub nodes: usize,
    pub output: Option<String>,
    pub point: Option<Vec<f64>>,
    pub quiet: bool,
    pub radii: Vec<f64>,
    pub region: Vec<(f64, f64)>,
    pub samples: usize,
    pub seed: u64,
    pub steps: usize,
    pub t_max: f64,
    pub tolerance: f64,
    pub window: f64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            group: None,
            layers: Vec::new(),
            brackets: Vec::new(),
            manifold: None,
            parameters: Vec::new(),
            components: Vec::new(),
            domain: Vec::new(),
            count: DEFAULT_COUNT,
            degree: None,
            epsilons: None,
            format: Format::Json,
            grid: Vec::new(),
            lambda: Vec::new(),
            limit: LimitSpec::PiSigma,
            margin: DEFAULT_MARGIN,
            method: Method::Grid,
            nodes: DEFAULT_NODES,
            output: None,
            point: None,
            quiet: false,
            radii: Vec::new(),
            region: Vec::new(),
            samples: DEFAULT_SAMPLES,
            seed: 0,
            steps: DEFAULT_STEPS,
            t_max: DEFAULT_T_MAX,
            tolerance: DEFAULT_TOLERANCE,
            window: DEFAULT_WINDOW,
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("key {key:?}: cannot parse {value:?}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value
        .split_whitespace()
        .map(|w| {
            w.parse::<T>()
                .map_err(|_| format!("key {key:?}: cannot parse {w:?}"))
        })
        .collect()
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64), String> {
    let parts: Vec<f64> = parse_list(key, value)?;
    if parts.len() != 2 {
        return Err(format!("key {key:?}: expected two numbers, got {value:?}"));
    }
    Ok((parts[0], parts[1]))
}

fn parse_rational(key: &str, text: &str) -> Result<Rational, String> {
    let bad = || format!("key {key:?}: cannot parse rational {text:?}");
    match text.split_once('/') {
        Some((num, den)) => {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            Ok(rat(num, den))
        }
        None => {
            let num: i64 = text.trim().parse().map_err(|_| bad())?;
            Ok(rat(num, 1))
        }
    }
}

fn parse_bracket(value: &str) -> Result<BracketLine, String> {
    let (pair, terms) = value
        .split_once(':')
        .ok_or_else(|| format!("key \"bracket\": missing ':' in {value:?}"))?;
    let indices: Vec<usize> = parse_list("bracket", pair)?;
    if indices.len() != 2 || indices.contains(&0) {
        return Err(format!(
            "key \"bracket\": expected two 1-based indices before ':', got {pair:?}"
        ));
    }
    let mut parsed = Vec::new();
    for term in terms.split(',') {
        let words: Vec<&str> = term.split_whitespace().collect();
        if words.len() != 2 {
            return Err(format!(
                "key \"bracket\": each term is \"k c\", got {term:?}"
            ));
        }
        let k: usize = parse_scalar("bracket", words[0])?;
        if k == 0 {
            return Err("key \"bracket\": component indices are 1-based".to_string());
        }
        parsed.push((k - 1, parse_rational("bracket", words[1])?));
    }
    Ok(BracketLine {
        i: indices[0] - 1,
        j: indices[1] - 1,
        terms: parsed,
    })
}

fn parse_limit(value: &str) -> Result<LimitSpec, String> {
    if value == "pi-sigma" {
        return Ok(LimitSpec::PiSigma);
    }
    if let Some(rest) = value.strip_prefix("half-plane") {
        let axes: Vec<usize> = parse_list("limit", rest)?;
        if axes.len() == 2 && !axes.contains(&0) {
            return Ok(LimitSpec::HalfPlane(axes[0], axes[1]));
        }
    }
    Err(format!(
        "key \"limit\": expected \"pi-sigma\" or \"half-plane i j\", got {value:?}"
    ))
}

impl RunConfig {
    /// Parses a configuration file. Errors carry the offending line.
    pub fn parse(text: &str) -> Result<RunConfig, String> {
        let mut config = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = match raw.split_once('#') {
                Some((before, _)) => before.trim(),
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected \"key = value\"", index + 1))?;
            let key = key.trim();
            let value = value.trim();
            let repeatable = matches!(key, "bracket" | "component" | "domain" | "region");
            if !repeatable {
                if seen.iter().any(|s| s == key) {
                    return Err(format!("line {}: duplicate key {key:?}", index + 1));
                }
                seen.push(key.to_string());
            }
            match key {
                "group" => config.group = Some(value.to_string()),
                "layers" => config.layers = parse_list(key, value)?,
                "bracket" => config.brackets.push(parse_bracket(value)?),
                "manifold" => config.manifold = Some(value.to_string()),
                "parameters" => {
                    config.parameters = value.split_whitespace().map(String::from).collect()
                }
                "component" => config.components.push(value.to_string()),
                "domain" => config.domain.push(parse_pair(key, value)?),
                "count" => config.count = parse_scalar(key, value)?,
                "degree" => config.degree = Some(parse_scalar(key, value)?),
                "epsilons" => config.epsilons = Some(parse_list(key, value)?),
                "format" => {
                    config.format = match value {
                        "json" => Format::Json,
                        "csv" => Format::Csv,
                        _ => return Err(format!("key \"format\": json or csv, got {value:?}")),
                    }
                }
                "grid" => config.grid = parse_list(key, value)?,
                "lambda" => config.lambda = parse_list(key, value)?,
                "limit" => config.limit = parse_limit(value)?,
                "margin" => config.margin = parse_scalar(key, value)?,
                "method" => {
                    config.method = match value {
                        "grid" => Method::Grid,
                        "mc" => Method::MonteCarlo,
                        _ => return Err(format!("key \"method\": grid or mc, got {value:?}")),
                    }
                }
                "nodes" => config.nodes = parse_scalar(key, value)?,
                "output" => config.output = Some(value.to_string()),
                "point" => config.point = Some(parse_list(key, value)?),
                "quiet" => config.quiet = parse_scalar(key, value)?,
                "radii" => config.radii = parse_list(key, value)?,
                "region" => config.region.push(parse_pair(key, value)?),
                "samples" => config.samples = parse_scalar(key, value)?,
                "seed" => config.seed = parse_scalar(key, value)?,
                "steps" => config.steps = parse_scalar(key, value)?,
                "t-max" => config.t_max = parse_scalar(key, value)?,
                "tolerance" => config.tolerance = parse_scalar(key, value)?,
                "window" => config.window = parse_scalar(key, value)?,
                _ => return Err(format!("line {}: unknown key {key:?}", index + 1)),
            }
        }
        Ok(config)
    }

    /// The canonical text form: fixed key order, normalized numbers.
    /// Parsing it reproduces the configuration byte-stably.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        if let Some(group) = &self.group {
            push("group", group.clone());
        }
        if !self.layers.is_empty() {
            push("layers", join(&self.layers));
        }
        for bracket in &self.brackets {
            let terms: Vec<String> = bracket
                .terms
                .iter()
                .map(|(k, c)| format!("{} {}", k + 1, c))
                .collect();
            push(
                "bracket",
                format!("{} {} : {}", bracket.i + 1, bracket.j + 1, terms.join(", ")),
            );
        }
        if let Some(manifold) = &self.manifold {
            push("manifold", manifold.clone());
        }
        if !self.parameters.is_empty() {
            push("parameters", self.parameters.join(" "));
        }
        for component in &self.components {
            push("component", component.clone());
        }
        for &(lo, hi) in &self.domain {
            push("domain", format!("{lo} {hi}"));
        }
        push("count", self.count.to_string());
        if let Some(degree) = self.degree {
            push("degree", degree.to_string());
        }
        if let Some(epsilons) = &self.epsilons {
            push("epsilons", join(epsilons));
        }
        push("format", self.format.as_str().to_string());
        if !self.grid.is_empty() {
            push("grid", join(&self.grid));
        }
        if !self.lambda.is_empty() {
            push("lambda", join(&self.lambda));
        }
        push("limit", self.limit.as_text());
        push("margin", self.margin.to_string());
        push("method", self.method.as_str().to_string());
        push("nodes", self.nodes.to_string());
        if let Some(output) = &self.output {
            push("output", output.clone());
        }
        if let Some(point) = &self.point {
            push("point", join(point));
        }
        push("quiet", self.quiet.to_string());
        if !self.radii.is_empty() {
            push("radii", join(&self.radii));
        }
        for &(lo, hi) in &self.region {
            push("region", format!("{lo} {hi}"));
        }
        push("samples", self.samples.to_string());
        push("seed", self.seed.to_string());
        push("steps", self.steps.to_string());
        push("t-max", self.t_max.to_string());
        push("tolerance", self.tolerance.to_string());
        push("window", self.window.to_string());
        out
    }

    /// The canonical text with the presentation keys (`format`, `output`,
    /// `quiet`) reset to defaults. Reports hash this form, so the same
    /// computation gets the same identity wherever its output goes.
    pub fn canonical_for_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.format = Format::Json;
        stripped.output = None;
        stripped.quiet = false;
        stripped.canonical()
    }

    /// Resolves catalog references into a self-contained configuration:
    /// a named group becomes `layers` + `bracket` lines and a named
    /// submanifold becomes `parameters`/`component`/`domain` lines, so the
    /// result runs anywhere the grammar does. The output path is dropped;
    /// everything else carries over. A configuration that is already inline
    /// comes back unchanged.
    pub fn inlined(&self) -> Result<RunConfig, String> {
        let mut out = self.clone();
        out.output = None;
        let Some(group) = &self.group else {
            return Ok(out);
        };
        let entry = carnot::catalog::entry(group).map_err(|err| err.to_string())?;
        let algebra = entry.algebra();
        out.group = None;
        out.layers = algebra.grading().layer_dims().to_vec();
        out.brackets.clear();
        let q = algebra.grading().dimension();
        for i in 0..q {
            for j in i + 1..q {
                let terms: Vec<(usize, Rational)> = algebra
                    .bracket_basis(i, j)
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != rat(0, 1))
                    .map(|(k, c)| (k, c.clone()))
                    .collect();
                if !terms.is_empty() {
                    out.brackets.push(BracketLine { i, j, terms });
                }
            }
        }
        if let Some(manifold) = &self.manifold {
            let named = entry.submanifold(manifold).map_err(|err| err.to_string())?;
            out.manifold = None;
            out.parameters = named.parameters().to_vec();
            out.components = named.components().to_vec();
            out.domain = named.domain().to_vec();
        }
        out.validate()?;
        Ok(out)
    }

    /// Semantic validation that runs before any computation. Grammar-level
    /// problems are caught by [`RunConfig::parse`]; this rejects
    /// mathematically unusable values.
    pub fn validate(&self) -> Result<(), String> {
        if self.group.is_some() == !self.layers.is_empty() {
            return Err("exactly one of \"group\" and \"layers\" is required".to_string());
        }
        if !self.brackets.is_empty() && self.layers.is_empty() {
            return Err("\"bracket\" lines need an inline \"layers\" group".to_string());
        }
        if self.manifold.is_some() && self.group.is_none() {
            return Err("a named \"manifold\" needs a catalog \"group\"".to_string());
        }
        if self.manifold.is_some() && !self.components.is_empty() {
            return Err("give either \"manifold\" or \"component\" lines, not both".to_string());
        }
        if !self.components.is_empty() {
            if self.parameters.is_empty() {
                return Err("inline components need a \"parameters\" line".to_string());
            }
            if self.domain.len() != self.parameters.len() {
                return Err(format!(
                    "expected one \"domain\" line per parameter: {} parameters, {} domains",
                    self.parameters.len(),
                    self.domain.len()
                ));
            }
        }
        for &(lo, hi) in self.domain.iter().chain(&self.region) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(format!("empty or non-finite interval [{lo}, {hi}]"));
            }
        }
        if let Some(epsilons) = &self.epsilons {
            if epsilons.is_empty() || epsilons[0] != 1.0 {
                return Err("\"epsilons\" must start with 1".to_string());
            }
            if !epsilons.iter().all(|&e| e.is_finite() && e > 0.0) {
                return Err("\"epsilons\" must be positive".to_string());
            }
        }
        if !self.radii.is_empty() {
            let decreasing = self.radii.windows(2).all(|w| w[0] > w[1]);
            if !decreasing || !self.radii.iter().all(|&r| r.is_finite() && r > 0.0) {
                return Err("\"radii\" must be positive and strictly decreasing".to_string());
            }
        }
        for (name, value) in [
            ("margin", self.margin),
            ("t-max", self.t_max),
            ("tolerance", self.tolerance),
            ("window", self.window),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(format!("\"{name}\" must be positive, got {value}"));
            }
        }
        if self.margin < 1.0 {
            return Err("\"margin\" must be at least 1".to_string());
        }
        for (name, value) in [
            ("count", self.count),
            ("nodes", self.nodes),
            ("samples", self.samples),
            ("steps", self.steps),
        ] {
            if value == 0 {
                return Err(format!("\"{name}\" must be at least 1"));
            }
        }
        for list in [&self.lambda] {
            if !list.iter().all(|x| x.is_finite()) {
                return Err("\"lambda\" must be finite".to_string());
            }
        }
        if let Some(point) = &self.point {
            if !point.iter().all(|x| x.is_finite()) {
                return Err("\"point\" must be finite".to_string());
            }
        }
        Ok(())
    }
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# a worked example
group = engel4
manifold = deg3-exp
point = 0 0
radii = 0.4 0.2 0.1
epsilons = 1 0.5 0.3
seed = 42
";

    #[test]
    fn canonical_round_trip_is_byte_stable() {
        let config = RunConfig::parse(SAMPLE).unwrap();
        config.validate().unwrap();
        let canonical = config.canonical();
        let reparsed = RunConfig::parse(&canonical).unwrap();
        assert_eq!(reparsed, config);
        assert_eq!(reparsed.canonical(), canonical);
    }

    #[test]
    fn inline_group_and_manifold_round_trip() {
        let text = "\
layers = 2 1 1
bracket = 1 2 : 3 1
bracket = 1 3 : 4 1/2, 3 -2
parameters = x y
component = x
component = y
component = 0
component = x*y
domain = -1 1
domain = -1 1
";
        let config = RunConfig::parse(text).unwrap();
        config.validate().unwrap();
        assert_eq!(config.brackets.len(), 2);
        assert_eq!(config.brackets[1].terms[0], (3, rat(1, 2)));
        let canonical = config.canonical();
        let reparsed = RunConfig::parse(&canonical).unwrap();
        assert_eq!(reparsed, config);
        assert_eq!(reparsed.canonical(), canonical);
    }

    #[test]
    fn grammar_errors_name_the_line() {
        assert!(RunConfig::parse("group engel4").unwrap_err().contains("line 1"));
        assert!(RunConfig::parse("nope = 3").unwrap_err().contains("unknown key"));
        let dup = "seed = 1\nseed = 2\n";
        assert!(RunConfig::parse(dup).unwrap_err().contains("duplicate"));
    }

    #[test]
    fn validation_rejects_unusable_values() {
        let mut config = RunConfig::parse(SAMPLE).unwrap();
        config.radii = vec![0.1, 0.4];
        assert!(config.validate().is_err());
        let mut config = RunConfig::parse(SAMPLE).unwrap();
        config.epsilons = Some(vec![2.0, 1.0]);
        assert!(config.validate().is_err());
        let config = RunConfig::parse("manifold = deg3-exp\n").unwrap();
        assert!(config.validate().is_err());
        let both = "group = engel4\nlayers = 2 1\n";
        assert!(RunConfig::parse(both).unwrap().validate().is_err());
    }

    #[test]
    fn inlining_resolves_catalog_references() {
        let config = RunConfig::parse(SAMPLE).unwrap();
        let inline = config.inlined().unwrap();
        assert!(inline.group.is_none() && inline.manifold.is_none());
        assert_eq!(inline.layers, vec![2, 1, 1]);
        assert_eq!(inline.brackets.len(), 2);
        assert_eq!(inline.components.len(), 4);
        assert_eq!(inline.seed, 42);
        let text = inline.canonical();
        let reparsed = RunConfig::parse(&text).unwrap();
        assert_eq!(reparsed, inline);
        assert_eq!(reparsed.inlined().unwrap(), inline);
        assert!(RunConfig::parse("group = nowhere\n")
            .unwrap()
            .inlined()
            .is_err());
    }
}
