//! Run configuration: a scenario, its parameters, and where the output goes.
//!
//! The on-disk form is a flat `key = value` file. `scenario`, `format` and
//! `out` are reserved keys; everything else is a scenario parameter. Values
//! are kept as the strings they were given in, validated against the
//! scenario's schema, with defaults filled in.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;

use crate::error::{CliError, Result};

/// Environment variable naming the directory for outputs without `--out`.
pub const OUT_DIR_ENV: &str = "PTLZ_OUT_DIR";

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    SpectrumScan,
    TwoLevelSweep,
    PtrCurve,
    LatticeEvolution,
    DispersionScan,
    LatticeTransmissionScan,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::SpectrumScan,
        Scenario::TwoLevelSweep,
        Scenario::PtrCurve,
        Scenario::LatticeEvolution,
        Scenario::DispersionScan,
        Scenario::LatticeTransmissionScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SpectrumScan => "spectrum_scan",
            Scenario::TwoLevelSweep => "two_level_sweep",
            Scenario::PtrCurve => "ptr_curve",
            Scenario::LatticeEvolution => "lattice_evolution",
            Scenario::DispersionScan => "dispersion_scan",
            Scenario::LatticeTransmissionScan => "lattice_transmission_scan",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| CliError::validation(format!("unknown scenario `{name}`")))
    }

    /// File stem used when no output path is given.
    pub fn default_stem(self) -> &'static str {
        match self {
            Scenario::SpectrumScan => "spectrum",
            Scenario::TwoLevelSweep => "sweep",
            Scenario::PtrCurve => "ptr_curve",
            Scenario::LatticeEvolution => "lattice",
            Scenario::DispersionScan => "dispersion",
            Scenario::LatticeTransmissionScan => "lattice_scan",
        }
    }

    pub fn schema(self) -> &'static [ParamSpec] {
        use Fallback::*;
        use Kind::*;
        const TOLERANCES: [ParamSpec; 2] = [
            ParamSpec { key: "rel_tolerance", kind: Positive, fallback: Value("1e-9") },
            ParamSpec { key: "abs_tolerance", kind: Positive, fallback: Value("1e-12") },
        ];
        const SEED: ParamSpec = ParamSpec { key: "seed", kind: Seed, fallback: Value("42") };
        const BEAM: [ParamSpec; 3] = [
            ParamSpec { key: "q0", kind: Real, fallback: Value("-15") },
            ParamSpec { key: "k0", kind: Real, fallback: Value("3.141592653589793") },
            ParamSpec { key: "sigma_sq", kind: Positive, fallback: Value("20") },
        ];
        match self {
            Scenario::SpectrumScan => &[
                ParamSpec { key: "gamma", kind: Positive, fallback: Required },
                ParamSpec { key: "v_min", kind: Real, fallback: Required },
                ParamSpec { key: "v_max", kind: Real, fallback: Required },
                ParamSpec { key: "n_points", kind: Count(1), fallback: Value("601") },
                ParamSpec { key: "ep_tolerance", kind: Positive, fallback: Value("1e-8") },
                SEED,
            ],
            Scenario::TwoLevelSweep => &[
                ParamSpec { key: "gamma", kind: Positive, fallback: Required },
                ParamSpec { key: "alpha", kind: Positive, fallback: Required },
                ParamSpec { key: "v_initial", kind: Real, fallback: Required },
                ParamSpec { key: "v_final", kind: Real, fallback: Required },
                ParamSpec {
                    key: "initial",
                    kind: Choice(&["eigenstate_plus", "eigenstate_minus", "diabatic_2", "random"]),
                    fallback: Value("eigenstate_minus"),
                },
                ParamSpec { key: "mode", kind: Choice(&["pt_imaginary", "hermitian_real"]), fallback: Value("pt_imaginary") },
                TOLERANCES[0],
                TOLERANCES[1],
                SEED,
            ],
            Scenario::PtrCurve => &[
                ParamSpec { key: "gamma", kind: Positive, fallback: Required },
                ParamSpec { key: "alpha_min", kind: Positive, fallback: Required },
                ParamSpec { key: "alpha_max", kind: Positive, fallback: Required },
                ParamSpec { key: "n_points", kind: Count(2), fallback: Value("20") },
                ParamSpec { key: "mode", kind: Choice(&["analytic", "numeric", "both"]), fallback: Value("both") },
                ParamSpec { key: "range_in_gamma", kind: Positive, fallback: Value("20") },
                TOLERANCES[0],
                TOLERANCES[1],
                SEED,
            ],
            Scenario::LatticeEvolution => &[
                ParamSpec { key: "gamma_lattice", kind: NonNegative, fallback: Required },
                ParamSpec { key: "force", kind: NonNegative, fallback: Required },
                BEAM[0],
                BEAM[1],
                BEAM[2],
                ParamSpec { key: "t_final", kind: Positive, fallback: Absent },
                ParamSpec { key: "n_samples", kind: Count(1), fallback: Value("40") },
                ParamSpec { key: "n_sites", kind: Count(2), fallback: Absent },
                ParamSpec { key: "site_offset", kind: Integer, fallback: Absent },
                TOLERANCES[0],
                TOLERANCES[1],
                SEED,
            ],
            Scenario::DispersionScan => &[
                ParamSpec { key: "gamma_lattice", kind: NonNegative, fallback: Required },
                ParamSpec { key: "n_k", kind: Count(2), fallback: Value("256") },
                SEED,
            ],
            Scenario::LatticeTransmissionScan => &[
                ParamSpec { key: "gamma_lattice", kind: Positive, fallback: Required },
                ParamSpec { key: "f_min", kind: Positive, fallback: Value("0.02") },
                ParamSpec { key: "f_max", kind: Positive, fallback: Value("0.5") },
                ParamSpec { key: "n_points", kind: Count(2), fallback: Value("15") },
                BEAM[0],
                BEAM[1],
                BEAM[2],
                TOLERANCES[0],
                TOLERANCES[1],
                SEED,
            ],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Any finite number.
    Real,
    Positive,
    NonNegative,
    /// Integer at least this large.
    Count(u64),
    Integer,
    Seed,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    Required,
    Value(&'static str),
    /// Optional with no default; the scenario derives a value.
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub key: &'static str,
    pub kind: Kind,
    pub fallback: Fallback,
}

impl ParamSpec {
    fn check(&self, value: &str) -> Result<()> {
        let bad = |what: &str| CliError::validation(format!("{} = `{value}`: {what}", self.key));
        match self.kind {
            Kind::Real | Kind::Positive | Kind::NonNegative => {
                let x: f64 = value.parse().map_err(|_| bad("not a number"))?;
                if !x.is_finite() {
                    return Err(bad("must be finite"));
                }
                if self.kind == Kind::Positive && x <= 0.0 {
                    return Err(bad("must be positive"));
                }
                if self.kind == Kind::NonNegative && x < 0.0 {
                    return Err(bad("must be non-negative"));
                }
            }
            Kind::Count(min) => {
                let n: u64 = value.parse().map_err(|_| bad("not a non-negative integer"))?;
                if n < min {
                    return Err(bad(&format!("must be at least {min}")));
                }
            }
            Kind::Integer => {
                value.parse::<i64>().map_err(|_| bad("not an integer"))?;
            }
            Kind::Seed => {
                value.parse::<u64>().map_err(|_| bad("not a non-negative integer"))?;
            }
            Kind::Choice(options) => {
                if !options.contains(&value) {
                    return Err(bad(&format!("expected one of {}", options.join(", "))));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::validation(format!("unknown format `{other}`"))),
        }
    }
}

/// A validated run with every defaulted parameter filled in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub parameters: BTreeMap<String, String>,
    pub output_path: PathBuf,
    pub format: Format,
}

impl RunConfig {
    /// Validates `parameters` against the scenario schema and applies
    /// defaults. Unknown keys and missing required keys are errors.
    pub fn new(
        scenario: Scenario,
        mut parameters: BTreeMap<String, String>,
        output_path: PathBuf,
        format: Format,
    ) -> Result<Self> {
        let schema = scenario.schema();
        if let Some(unknown) = parameters.keys().find(|k| !schema.iter().any(|p| p.key == k.as_str())) {
            return Err(CliError::validation(format!("unknown parameter `{unknown}` for scenario {scenario}")));
        }
        for spec in schema {
            match (parameters.get(spec.key), spec.fallback) {
                (Some(v), _) => spec.check(v)?,
                (None, Fallback::Value(d)) => {
                    parameters.insert(spec.key.to_string(), d.to_string());
                }
                (None, Fallback::Required) => {
                    return Err(CliError::validation(format!("missing parameter `{}` for scenario {scenario}", spec.key)));
                }
                (None, Fallback::Absent) => {}
            }
        }
        Ok(Self { scenario, parameters, output_path, format })
    }

    /// Parses a complete config file (including `scenario` and `out`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = parse_key_values(text)?;
        let scenario = Scenario::from_name(
            &entries.remove("scenario").ok_or_else(|| CliError::validation("config has no `scenario`"))?,
        )?;
        let format = match entries.remove("format") {
            Some(f) => Format::from_name(&f)?,
            None => Format::Csv,
        };
        let out = entries
            .remove("out")
            .map(PathBuf::from)
            .unwrap_or_else(|| default_output_path(scenario, format));
        Self::new(scenario, entries, out, format)
    }

    /// Merges a config file with command-line values; the command line wins.
    /// `scenario` from the command line must agree with the file if both
    /// name one.
    pub fn from_sources(
        scenario: Option<Scenario>,
        mut file: BTreeMap<String, String>,
        flags: impl IntoIterator<Item = (String, String)>,
        out: Option<PathBuf>,
        format: Option<Format>,
    ) -> Result<Self> {
        let from_file = file.remove("scenario").map(|s| Scenario::from_name(&s)).transpose()?;
        let scenario = match (scenario, from_file) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::validation(format!("config file is for scenario {b}, not {a}")));
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::validation("no scenario given")),
        };
        let file_format = file.remove("format").map(|f| Format::from_name(&f)).transpose()?;
        let format = format.or(file_format).unwrap_or(Format::Csv);
        let file_out = file.remove("out").map(PathBuf::from);
        let out = out.or(file_out).unwrap_or_else(|| default_output_path(scenario, format));
        file.extend(flags);
        Self::new(scenario, file, out, format)
    }

    /// The `key = value` form accepted by [`RunConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let mut s = format!(
            "scenario = {}\nformat = {}\nout = {}\n",
            self.scenario,
            self.format.name(),
            self.output_path.display()
        );
        for (k, v) in &self.parameters {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn number(&self, key: &str) -> f64 {
        self.optional_number(key)
            .unwrap_or_else(|| panic!("`{key}` is not a defaulted parameter of {}", self.scenario))
    }

    pub fn optional_number(&self, key: &str) -> Option<f64> {
        self.parameters.get(key).map(|v| v.parse().expect("validated number"))
    }

    pub fn count(&self, key: &str) -> usize {
        self.parameters[key].parse().expect("validated count")
    }

    pub fn optional_count(&self, key: &str) -> Option<usize> {
        self.parameters.get(key).map(|v| v.parse().expect("validated count"))
    }

    pub fn optional_integer(&self, key: &str) -> Option<i64> {
        self.parameters.get(key).map(|v| v.parse().expect("validated integer"))
    }

    pub fn keyword(&self, key: &str) -> &str {
        &self.parameters[key]
    }

    pub fn seed(&self) -> u64 {
        self.parameters.get("seed").map_or(DEFAULT_SEED, |v| v.parse().expect("validated seed"))
    }
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// skipped; repeated keys are an error.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::validation(format!("line {}: empty key", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(CliError::validation(format!("line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_key_values(&text)
}

/// `$PTLZ_OUT_DIR/<stem>.<ext>`, or the current directory when unset.
pub fn default_output_path(scenario: Scenario, format: Format) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{}.{}", scenario.default_stem(), format.name()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_filled() {
        let c = RunConfig::new(
            Scenario::SpectrumScan,
            params(&[("gamma", "1"), ("v_min", "-3"), ("v_max", "3")]),
            "x.csv".into(),
            Format::Csv,
        )
        .unwrap();
        assert_eq!(c.count("n_points"), 601);
        assert_eq!(c.seed(), 42);
        assert_eq!(c.number("ep_tolerance"), 1e-8);
    }

    #[test]
    fn scientific_notation_accepted() {
        let c = RunConfig::new(
            Scenario::TwoLevelSweep,
            params(&[("gamma", "1e-12"), ("alpha", "5E-1"), ("v_initial", "-5"), ("v_final", "5.0e0")]),
            "x.csv".into(),
            Format::Csv,
        )
        .unwrap();
        assert_eq!(c.number("gamma"), 1e-12);
        assert_eq!(c.number("v_final"), 5.0);
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let unknown = RunConfig::new(
            Scenario::DispersionScan,
            params(&[("gamma_lattice", "0.2"), ("bogus", "1")]),
            "x.csv".into(),
            Format::Csv,
        );
        assert!(matches!(unknown, Err(CliError::Validation(m)) if m.contains("bogus")));
        let missing = RunConfig::new(Scenario::DispersionScan, BTreeMap::new(), "x.csv".into(), Format::Csv);
        assert!(matches!(missing, Err(CliError::Validation(m)) if m.contains("gamma_lattice")));
    }

    #[test]
    fn bad_values_rejected() {
        let cases: [(&str, &str); 4] = [("gamma", "-1"), ("gamma", "nan"), ("n_points", "2.5"), ("gamma", "abc")];
        for (k, v) in cases {
            let mut p = params(&[("gamma", "1"), ("v_min", "-3"), ("v_max", "3")]);
            p.insert(k.into(), v.into());
            let r = RunConfig::new(Scenario::SpectrumScan, p, "x.csv".into(), Format::Csv);
            assert!(r.is_err(), "{k}={v}");
        }
        let r = RunConfig::new(
            Scenario::PtrCurve,
            params(&[("gamma", "1"), ("alpha_min", "0.1"), ("alpha_max", "1"), ("mode", "exact")]),
            "x.csv".into(),
            Format::Csv,
        );
        assert!(r.is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let c = RunConfig::new(
            Scenario::LatticeEvolution,
            params(&[("gamma_lattice", "0.2"), ("force", "0.1"), ("t_final", "31.4")]),
            "out/lattice.json".into(),
            Format::Json,
        )
        .unwrap();
        assert_eq!(RunConfig::parse(&c.to_config_string()).unwrap(), c);
    }

    #[test]
    fn key_value_parsing() {
        let m = parse_key_values("# comment\n\n gamma = 1 \nv_min=-3\n").unwrap();
        assert_eq!(m["gamma"], "1");
        assert_eq!(m["v_min"], "-3");
        assert!(parse_key_values("gamma 1").is_err());
        assert!(parse_key_values("a=1\na=2").is_err());
        assert!(parse_key_values("=1").is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_name(s.name()).unwrap(), s);
        }
        assert!(Scenario::from_name("nope").is_err());
    }
}
