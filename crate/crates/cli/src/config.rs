//! Run configuration.
//!
//! A config is a TOML document with one section per concern. Presets are
//! complete configs; `--set section.key=value` edits the document before
//! it is type-checked, so an override naming an unknown key fails the same
//! way a misspelled config file does.

use std::path::Path;

use kickshift_core::models::HydrogenicLabel;
use kickshift_core::Spin;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::units::{Angle, Energy, Field, Frequency, Intensity, Length, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Design,
    Relax,
    Transport,
    Chain,
    Helium,
    PhaseScan,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Design => "design",
            Pipeline::Relax => "relax",
            Pipeline::Transport => "transport",
            Pipeline::Chain => "chain",
            Pipeline::Helium => "helium",
            Pipeline::PhaseScan => "phase-scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelName {
    #[serde(rename = "hydrogen-rydberg-full")]
    HydrogenRydbergFull,
    #[serde(rename = "hydrogen-surrogate")]
    HydrogenSurrogate,
    #[serde(rename = "chain4")]
    Chain4,
    #[serde(rename = "helium-1d")]
    Helium1d,
}

impl ModelName {
    pub fn is_hydrogen(self) -> bool {
        matches!(
            self,
            ModelName::HydrogenRydbergFull | ModelName::HydrogenSurrogate
        )
    }

    /// Default time step of the model family.
    pub fn default_dt(self) -> f64 {
        match self {
            ModelName::HydrogenRydbergFull | ModelName::HydrogenSurrogate => 0.05,
            ModelName::Chain4 => 0.001,
            ModelName::Helium1d => 2e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    /// Nuclear charge (hydrogen, chain).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
    /// Lower and upper superposition states, e.g. `"2p"` and `"3d"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_spacing: Option<Length>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_extent: Option<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_spacing: Option<Length>,
    pub z_extent: Length,
    pub z_spacing: Length,
    /// Centre of the z window.
    #[serde(default = "zero_length")]
    pub z_center: Length,
    /// Shift the z nodes by half a cell so no node sits on a nucleus.
    #[serde(default)]
    pub offset_nuclei: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default = "quarter_pi")]
    pub theta: Angle,
    #[serde(default = "zero_angle")]
    pub phi: Angle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin: Option<SpinName>,
    /// Chain site holding the electron initially (0 = leftmost).
    #[serde(default)]
    pub site: usize,
}

impl Default for StateConfig {
    fn default() -> Self {
        StateConfig {
            theta: quarter_pi(),
            phi: zero_angle(),
            spin: None,
            site: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinName {
    Singlet,
    Triplet,
}

impl From<SpinName> for Spin {
    fn from(s: SpinName) -> Spin {
        match s {
            SpinName::Singlet => Spin::Singlet,
            SpinName::Triplet => Spin::Triplet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionName {
    #[default]
    Positive,
    Negative,
}

/// Pulse strength is given by exactly one of `displacement` (a list, one
/// pulse per entry), `intensity` or `field`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub omega: Frequency,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub displacement: Vec<Length>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<Intensity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Field>,
    #[serde(default)]
    pub direction: DirectionName,
    #[serde(default = "zero_time")]
    pub t_start: Time,
    /// Field-free interval between consecutive pulses of a train.
    #[serde(default = "zero_time")]
    pub gap: Time,
    /// Level spacing for the distortion criterion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<Energy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Time>,
    /// Field-free time appended after the last pulse.
    #[serde(default = "zero_time")]
    pub settle: Time,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Evenly spaced full-field snapshots, including both ends.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_boundary_limit")]
    pub boundary_limit: f64,
    #[serde(default = "yes")]
    pub boundary_guard: bool,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            dt: None,
            settle: zero_time(),
            record_every: default_record_every(),
            snapshots: default_snapshots(),
            boundary_limit: default_boundary_limit(),
            boundary_guard: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMethod {
    /// Two propagations combined per cell.
    #[default]
    Linearity,
    /// One propagation per cell.
    PerCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub theta: Vec<Angle>,
    pub phi: Vec<Angle>,
    #[serde(default)]
    pub field_free: bool,
    #[serde(default)]
    pub method: ScanMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_ref: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxConfig {
    #[serde(default = "default_dtau")]
    pub dtau: Time,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_check_every")]
    pub check_every: usize,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            dtau: default_dtau(),
            tol: default_tol(),
            max_iterations: default_max_iterations(),
            check_every: default_check_every(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "yes")]
    pub density_csv: bool,
    #[serde(default = "yes")]
    pub snapshots: bool,
    #[serde(default = "yes")]
    pub checkpoint: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            density_csv: true,
            snapshots: true,
            checkpoint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Marks full-scale presets; they refuse to start unless
    /// `allow_long_running` is set.
    #[serde(default)]
    pub long_running: bool,
    #[serde(default)]
    pub allow_long_running: bool,
    /// Upper bound on the bytes a run may write.
    #[serde(default = "default_max_output_bytes")]
    pub max_output_bytes: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            long_running: false,
            allow_long_running: false,
            max_output_bytes: default_max_output_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub plan: PlanConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub relax: RelaxConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl Config {
    /// Parse TOML text, apply `key=value` overrides, type-check, and fill
    /// model defaults.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e| CliError::config(format!("invalid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let mut config: Config = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config(e.message().to_string()))?;
        config.fill_defaults();
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn model(&self) -> Result<&ModelConfig> {
        self.model.as_ref().ok_or_else(|| {
            CliError::config(format!("{} needs a [model] section", self.pipeline.name()))
        })
    }

    pub fn grid(&self) -> Result<&GridConfig> {
        self.grid.as_ref().ok_or_else(|| {
            CliError::config(format!("{} needs a [grid] section", self.pipeline.name()))
        })
    }

    pub fn pulse(&self) -> Result<&PulseConfig> {
        self.pulse.as_ref().ok_or_else(|| {
            CliError::config(format!("{} needs a [pulse] section", self.pipeline.name()))
        })
    }

    pub fn scan(&self) -> Result<&ScanConfig> {
        self.scan
            .as_ref()
            .ok_or_else(|| CliError::config("phase-scan needs a [scan] section"))
    }

    /// Time step in atomic units.
    pub fn dt(&self) -> f64 {
        match (&self.plan.dt, &self.model) {
            (Some(dt), _) => dt.au(),
            (None, Some(m)) => m.name.default_dt(),
            (None, None) => 0.05,
        }
    }

    pub fn labels(&self) -> Result<(HydrogenicLabel, HydrogenicLabel)> {
        let m = self.model()?;
        let read = |s: &Option<String>, what: &str| {
            s.as_deref()
                .ok_or_else(|| CliError::config(format!("model.{what} is required")))
                .and_then(parse_label)
        };
        Ok((read(&m.lower, "lower")?, read(&m.upper, "upper")?))
    }

    fn fill_defaults(&mut self) {
        if let Some(m) = &mut self.model {
            match m.name {
                ModelName::HydrogenRydbergFull => {
                    m.charge.get_or_insert(1.0);
                    m.lower.get_or_insert_with(|| "9l".into());
                    m.upper.get_or_insert_with(|| "10m".into());
                }
                ModelName::HydrogenSurrogate => {
                    m.charge.get_or_insert(1.0);
                    m.lower.get_or_insert_with(|| "2p".into());
                    m.upper.get_or_insert_with(|| "3d".into());
                }
                ModelName::Chain4 => {
                    m.charge.get_or_insert(0.8);
                    m.sites.get_or_insert(4);
                    m.site_spacing.get_or_insert(Length(5.0));
                }
                ModelName::Helium1d => {}
            }
            if self.plan.dt.is_none() {
                self.plan.dt = Some(Time(m.name.default_dt()));
            }
        }
        if self.pipeline == Pipeline::Helium && self.state.spin.is_none() {
            self.state.spin = Some(SpinName::Singlet);
        }
    }

    fn validate(&self) -> Result<()> {
        let needs_model = !matches!(self.pipeline, Pipeline::Design);
        if needs_model {
            let m = self.model()?;
            self.grid()?;
            let ok = match self.pipeline {
                Pipeline::Transport | Pipeline::PhaseScan => m.name.is_hydrogen(),
                Pipeline::Chain => m.name == ModelName::Chain4,
                Pipeline::Helium => m.name == ModelName::Helium1d,
                _ => true,
            };
            if !ok {
                return Err(CliError::config(format!(
                    "pipeline {} cannot run model {:?}",
                    self.pipeline.name(),
                    m.name
                )));
            }
            let g = self.grid()?;
            if m.name != ModelName::Helium1d && (g.rho_extent.is_none() || g.rho_spacing.is_none())
            {
                return Err(CliError::config(
                    "cylindrical models need grid.rho_extent and grid.rho_spacing",
                ));
            }
        }
        if matches!(
            self.pipeline,
            Pipeline::Design | Pipeline::Transport | Pipeline::Chain | Pipeline::Helium
        ) {
            let p = self.pulse()?;
            let given = usize::from(!p.displacement.is_empty())
                + usize::from(p.intensity.is_some())
                + usize::from(p.field.is_some());
            if given != 1 {
                return Err(CliError::config(
                    "pulse needs exactly one of displacement, intensity or field",
                ));
            }
        }
        if self.pipeline == Pipeline::PhaseScan {
            let s = self.scan()?;
            if !s.field_free {
                self.pulse()?;
            }
        }
        if self.plan.record_every == 0 {
            return Err(CliError::config("plan.record_every must be at least 1"));
        }
        if self.dt() <= 0.0 {
            return Err(CliError::config("plan.dt must be positive"));
        }
        Ok(())
    }
}

/// `"2p"`, `"3d"`, `"10m"`: principal number then the spectroscopic letter.
pub fn parse_label(text: &str) -> Result<HydrogenicLabel> {
    const LETTERS: [char; 10] = ['s', 'p', 'd', 'f', 'g', 'h', 'i', 'k', 'l', 'm'];
    let text = text.trim();
    let split = text
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(text.len());
    let (digits, rest) = text.split_at(split);
    let bad = || CliError::config(format!("cannot read a hydrogenic label from {text:?}"));
    let n: u32 = digits.parse().map_err(|_| bad())?;
    let mut chars = rest.chars();
    let (Some(c), None) = (chars.next(), chars.next()) else {
        return Err(bad());
    };
    let l = LETTERS.iter().position(|&x| x == c).ok_or_else(bad)? as u32;
    HydrogenicLabel::new(n, l).map_err(|e| CliError::config(e.to_string()))
}

/// Set `a.b.c = value` in a TOML document. The value is read as a TOML
/// literal when possible and as a bare string otherwise.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override {assignment:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("invalid override path {path:?}")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(format!("override path {path:?} crosses a value")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn zero_length() -> Length {
    Length(0.0)
}

fn zero_time() -> Time {
    Time(0.0)
}

fn zero_angle() -> Angle {
    Angle(0.0)
}

fn quarter_pi() -> Angle {
    Angle(std::f64::consts::FRAC_PI_4)
}

fn yes() -> bool {
    true
}

fn default_record_every() -> usize {
    100
}

fn default_snapshots() -> usize {
    2
}

fn default_boundary_limit() -> f64 {
    kickshift_core::solver::DEFAULT_BOUNDARY_LIMIT
}

fn default_dtau() -> Time {
    Time(0.01)
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iterations() -> usize {
    200_000
}

fn default_check_every() -> usize {
    10
}

fn default_max_output_bytes() -> u64 {
    4_000_000_000
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        pipeline = "chain"
        [model]
        name = "chain4"
        [grid]
        rho_extent = "32 au"
        rho_spacing = "0.125 au"
        z_extent = "64 au"
        z_spacing = "0.125 au"
        offset_nuclei = true
        [pulse]
        omega = "6 au"
        displacement = ["5 au", "-5 au"]
    "#;

    #[test]
    fn defaults_are_filled() {
        let c = Config::from_toml(BASE, &[]).unwrap();
        let m = c.model().unwrap();
        assert_eq!(m.charge, Some(0.8));
        assert_eq!(m.sites, Some(4));
        assert_eq!(c.dt(), 0.001);
        assert_eq!(c.pulse().unwrap().displacement.len(), 2);
    }

    #[test]
    fn overrides_edit_before_type_checking() {
        let c = Config::from_toml(
            BASE,
            &[
                "pulse.omega=24 au".into(),
                "pulse.displacement=[\"5 au\"]".into(),
                "plan.dt = 0.5 as".into(),
                "plan.record_every=7".into(),
            ],
        )
        .unwrap();
        let p = c.pulse().unwrap();
        assert_eq!(p.omega.au(), 24.0);
        assert_eq!(p.displacement.len(), 1);
        assert!((c.dt() - 0.5 / crate::units::ATTOSECONDS_PER_AU).abs() < 1e-15);
        assert_eq!(c.plan.record_every, 7);
    }

    #[test]
    fn bad_overrides_are_config_errors() {
        for o in [
            "pulse.omgea=1 au",
            "plan.dt=0.1",
            "nonsense",
            "grid..z=1",
            "plan.dt.x=1",
        ] {
            let err = Config::from_toml(BASE, &[o.to_string()]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{o}: {err}");
        }
    }

    #[test]
    fn pulse_strength_must_be_unique() {
        let err = Config::from_toml(BASE, &["pulse.intensity=1e22 wpcm2".into()]).unwrap_err();
        assert!(err.to_string().contains("exactly one"));
    }

    #[test]
    fn model_must_fit_pipeline() {
        let err = Config::from_toml(BASE, &["model.name=helium-1d".into()]).unwrap_err();
        assert!(err.to_string().contains("cannot run"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = Config::from_toml(BASE, &[]).unwrap();
        let again = Config::from_toml(&c.to_toml(), &[]).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn labels() {
        let l = parse_label("3d").unwrap();
        assert_eq!((l.n, l.l), (3, 2));
        let l = parse_label("10m").unwrap();
        assert_eq!((l.n, l.l), (10, 9));
        assert!(parse_label("2x").is_err());
        assert!(parse_label("2").is_err());
        assert!(parse_label("2d").is_err());
    }
}
