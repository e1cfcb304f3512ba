#![allow(dead_code)]

use std::path::Path;

use kickshift_cli::{RunManifest, SCHEMA};

/// Schema violations of a written manifest, one line each.
pub fn schema_errors(dir: &Path) -> Vec<String> {
    let schema: serde_json::Value = serde_json::from_str(SCHEMA).expect("schema is JSON");
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let text = std::fs::read_to_string(dir.join(kickshift_cli::MANIFEST_FILE)).expect("manifest");
    let instance: serde_json::Value = serde_json::from_str(&text).expect("manifest is JSON");
    let errors = match compiled.validate(&instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| format!("{} at {}", e, e.instance_path))
            .collect(),
    };
    errors
}

/// Manifest checksums that no longer match the files on disk.
pub fn checksum_errors(manifest: &RunManifest, dir: &Path) -> Vec<String> {
    manifest.verify(dir).expect("outputs readable")
}

/// Run on a single worker thread.
pub fn serial<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("pool")
        .install(f)
}

/// Small transport run: the surrogate pair on a box just large enough for 3d.
pub fn small_transport() -> Vec<String> {
    [
        "grid.rho_extent=\"80 au\"",
        "grid.rho_spacing=\"0.625 au\"",
        "grid.z_spacing=\"0.5 au\"",
        "pulse.displacement=[\"10 au\"]",
        "plan.snapshots=3",
        "plan.boundary_limit=1e-8",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}
