//! Built-in run presets. Each is a complete config document.

use crate::config::Config;
use crate::error::{CliError, Result};

const HYDROGEN_SURROGATE_GRID: &str = r#"
[model]
name = "hydrogen-surrogate"

# 3d needs 76.6 bohr to reach a 1e-8 tail; the window spans [-80, 176)
[grid]
rho_extent = "80 au"
rho_spacing = "0.3125 au"
z_extent = "256 au"
z_spacing = "0.25 au"
z_center = "48 au"
offset_nuclei = true
"#;

const DESIGN: &str = r#"
pipeline = "design"

[pulse]
omega = "0.057 au"
displacement = ["1000 au"]
delta_e = "0.0012 au"
"#;

const TRANSPORT_SURROGATE: &str = r#"
pipeline = "transport"

# phi = pi/2 starts with zero current, so nothing drifts after the pulse
[state]
theta = "pi/4"
phi = "pi/2"

# omega / delta_e = 58 keeps the state from distorting while it moves
[pulse]
omega = "4 au"
displacement = ["50 au"]
delta_e = "0.0694 au"

[plan]
dt = "0.005 au"
record_every = 20
snapshots = 6
"#;

const TRANSPORT_FULL: &str = r#"
pipeline = "transport"

[model]
name = "hydrogen-rydberg-full"

[grid]
rho_extent = "1024 au"
rho_spacing = "0.25 au"
z_extent = "4096 au"
z_spacing = "0.25 au"
offset_nuclei = true

[state]
theta = "pi/4"
phi = 0.0

[pulse]
omega = "0.057 au"
displacement = ["1000 au"]
delta_e = "0.0012 au"

[plan]
dt = "0.05 au"
record_every = 20
snapshots = 6

[run]
long_running = true
"#;

const CHAIN_GRID: &str = r#"
[model]
name = "chain4"

[grid]
rho_extent = "64 au"
rho_spacing = "0.25 au"
z_extent = "128 au"
z_spacing = "0.25 au"
offset_nuclei = true

[state]
site = 0
"#;

const CHAIN_ROUNDTRIP: &str = r#"
pipeline = "chain"

[pulse]
omega = "6 au"
displacement = ["5 au", "-5 au"]

[plan]
dt = "0.001 au"
record_every = 50
boundary_limit = 1e-8
"#;

const CHAIN_FOURPULSE: &str = r#"
pipeline = "chain"

[pulse]
omega = "6 au"
displacement = ["5 au", "5 au", "5 au", "-15 au"]

[plan]
dt = "0.001 au"
record_every = 50
boundary_limit = 1e-4
"#;

const HELIUM: &str = r#"
pipeline = "helium"

[model]
name = "helium-1d"

[grid]
z_extent = "256 au"
z_spacing = "0.25 au"

[pulse]
omega = "9.2 au"
intensity = "7e23 wpcm2"

# fractional-cell shifts of the barely resolved soft-core orbitals leave a
# band-limited tail near 2e-10 at the edges; the guard sits above it
[plan]
dt = "0.0002 au"
record_every = 100
snapshots = 2
boundary_limit = 1e-8
"#;

const PHASE_SCAN: &str = r#"
pipeline = "phase-scan"

[pulse]
omega = "2 au"
displacement = ["50 au"]
delta_e = "0.0694 au"

[plan]
dt = "0.02 au"

[scan]
theta = ["0", "pi/16", "pi/8", "3pi/16", "pi/4", "5pi/16", "3pi/8", "7pi/16", "pi/2"]
phi = ["pi/6", "pi/4", "pi/3", "pi/2"]
method = "linearity"

[output]
density_csv = false
snapshots = false
checkpoint = false
"#;

const PHASE_SCAN_FIELD_FREE: &str = r#"
pipeline = "phase-scan"

[scan]
theta = ["0", "pi/8", "pi/4", "3pi/8", "pi/2"]
phi = ["0", "pi/4", "pi/2", "pi"]
field_free = true

[output]
density_csv = false
snapshots = false
checkpoint = false
"#;

const PHASE_SCAN_LOW_OMEGA: &str = r#"
pipeline = "phase-scan"

[model]
name = "hydrogen-surrogate"

[grid]
rho_extent = "80 au"
rho_spacing = "0.625 au"
z_extent = "256 au"
z_spacing = "0.5 au"
z_center = "48 au"
offset_nuclei = true

# omega = delta_e / 2 ionizes strongly and there is no absorber
[pulse]
omega = "0.0347 au"
displacement = ["50 au"]
delta_e = "0.0694 au"

[plan]
dt = "0.05 au"
boundary_guard = false

[scan]
theta = ["0", "pi/16", "pi/8", "3pi/16", "pi/4", "5pi/16", "3pi/8", "7pi/16", "pi/2"]
phi = ["pi/6", "pi/4", "pi/3", "pi/2"]

[output]
density_csv = false
snapshots = false
checkpoint = false
"#;

const RELAX_HYDROGEN: &str = r#"
pipeline = "relax"

[model]
name = "hydrogen-surrogate"

[grid]
rho_extent = "32 au"
rho_spacing = "0.25 au"
z_extent = "64 au"
z_spacing = "0.25 au"
offset_nuclei = true
"#;

const RELAX_CHAIN: &str = r#"
pipeline = "relax"

[model]
name = "chain4"

[grid]
rho_extent = "32 au"
rho_spacing = "0.125 au"
z_extent = "64 au"
z_spacing = "0.125 au"
offset_nuclei = true
"#;

const RELAX_HELIUM: &str = r#"
pipeline = "relax"

[model]
name = "helium-1d"

[grid]
z_extent = "32 au"
z_spacing = "0.25 au"
"#;

/// Preset names with a one-line description.
pub const PRESETS: &[(&str, &str)] = &[
    ("design", "pulse parameters for a target displacement"),
    (
        "transport-surrogate",
        "(2p, 3d) superposition moved by 50 bohr at omega = 4",
    ),
    (
        "transport-full",
        "(9l, 10m) superposition moved by 1000 bohr; full scale, long running",
    ),
    (
        "chain4-roundtrip",
        "electron moved one site and back in the four-site chain",
    ),
    (
        "chain4-fourpulse",
        "pulse train (+5, +5, +5, -15) in the four-site chain",
    ),
    (
        "helium-singlet",
        "1s2s singlet of the 1D helium model moved by 15.5 bohr",
    ),
    (
        "helium-triplet",
        "1s2s triplet of the 1D helium model moved by 15.5 bohr",
    ),
    (
        "phase-scan",
        "<p_z> over (theta_R, phi) after the pulse, with the model fit",
    ),
    (
        "phase-scan-field-free",
        "<p_z> over (theta_R, phi) without a pulse",
    ),
    (
        "phase-scan-low-omega",
        "phase scan at omega = delta_e / 2 on a coarse grid",
    ),
    ("relax-hydrogen", "hydrogen ground state by imaginary time"),
    ("relax-chain4", "left-site chain state by imaginary time"),
    (
        "relax-helium",
        "two-electron helium ground state by imaginary time",
    ),
];

/// Model presets addressable as `model.name`.
pub const MODELS: &[&str] = &[
    "hydrogen-rydberg-full",
    "hydrogen-surrogate",
    "chain4",
    "helium-1d",
];

/// Full TOML text of a preset.
pub fn preset_text(name: &str) -> Result<String> {
    let parts: Vec<&str> = match name {
        "design" => vec![DESIGN],
        "transport-surrogate" => vec![TRANSPORT_SURROGATE, HYDROGEN_SURROGATE_GRID],
        "transport-full" => vec![TRANSPORT_FULL],
        "chain4-roundtrip" => vec![CHAIN_ROUNDTRIP, CHAIN_GRID],
        "chain4-fourpulse" => vec![CHAIN_FOURPULSE, CHAIN_GRID],
        "helium-singlet" => vec![HELIUM, "\n[state]\nspin = \"singlet\"\n"],
        "helium-triplet" => vec![HELIUM, "\n[state]\nspin = \"triplet\"\n"],
        "phase-scan" => vec![PHASE_SCAN, HYDROGEN_SURROGATE_GRID],
        "phase-scan-field-free" => vec![PHASE_SCAN_FIELD_FREE, HYDROGEN_SURROGATE_GRID],
        "phase-scan-low-omega" => vec![PHASE_SCAN_LOW_OMEGA],
        "relax-hydrogen" => vec![RELAX_HYDROGEN],
        "relax-chain4" => vec![RELAX_CHAIN],
        "relax-helium" => vec![RELAX_HELIUM],
        _ => {
            let known: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
            return Err(CliError::config(format!(
                "unknown preset {name:?}; known presets: {}",
                known.join(", ")
            )));
        }
    };
    Ok(parts.concat())
}

pub fn load_preset(name: &str, overrides: &[String]) -> Result<Config> {
    Config::from_toml(&preset_text(name)?, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for (name, _) in PRESETS {
            let c = load_preset(name, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
            let again = Config::from_toml(&c.to_toml(), &[]).unwrap();
            assert_eq!(again, c, "{name}");
        }
    }

    #[test]
    fn unknown_preset_lists_choices() {
        let err = load_preset("nope", &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("chain4-roundtrip"));
    }

    #[test]
    fn only_the_full_scale_preset_is_long_running() {
        for (name, _) in PRESETS {
            let c = load_preset(name, &[]).unwrap();
            assert_eq!(c.run.long_running, *name == "transport-full", "{name}");
        }
    }
}
