//! Scenarios shipped with the binary.

use std::path::Path;

use crate::config::LoadedScenario;
use crate::CliError;

pub const SHIPPED: &[(&str, &str)] = &[
    ("fdb_identity", include_str!("../scenarios/fdb_identity.toml")),
    (
        "fractional_dilating_certify",
        include_str!("../scenarios/fractional_dilating_certify.toml"),
    ),
    ("heat_cylinders", include_str!("../scenarios/heat_cylinders.toml")),
    (
        "heat_lattice_certify",
        include_str!("../scenarios/heat_lattice_certify.toml"),
    ),
    (
        "heat_lattice_synthesize",
        include_str!("../scenarios/heat_lattice_synthesize.toml"),
    ),
    (
        "kolmogorov_bernstein",
        include_str!("../scenarios/kolmogorov_bernstein.toml"),
    ),
    ("kolmogorov_kalman", include_str!("../scenarios/kolmogorov_kalman.toml")),
    (
        "kolmogorov_rotation_threshold",
        include_str!("../scenarios/kolmogorov_rotation_threshold.toml"),
    ),
    (
        "kolmogorov_translation_certify",
        include_str!("../scenarios/kolmogorov_translation_certify.toml"),
    ),
    (
        "kolmogorov_translation_deny",
        include_str!("../scenarios/kolmogorov_translation_deny.toml"),
    ),
    (
        "kolmogorov_translation_threshold",
        include_str!("../scenarios/kolmogorov_translation_threshold.toml"),
    ),
    (
        "rotation_necessity",
        include_str!("../scenarios/rotation_necessity.toml"),
    ),
];

/// Parses every shipped scenario.
pub fn shipped() -> Result<Vec<LoadedScenario>, CliError> {
    SHIPPED
        .iter()
        .map(|(name, src)| LoadedScenario::parse(&format!("{name}.toml"), src))
        .collect()
}

/// A path to a TOML file, or the name of a shipped scenario.
pub fn load(arg: &str) -> Result<LoadedScenario, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return LoadedScenario::parse(arg, &text);
    }
    let key = arg.strip_suffix(".toml").unwrap_or(arg);
    match SHIPPED.iter().find(|(name, _)| *name == key) {
        Some((name, src)) => LoadedScenario::parse(&format!("{name}.toml"), src),
        None => Err(CliError::Io {
            path: arg.to_string(),
            message: "no such file and no shipped scenario of that name (see `hypoctl list`)".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenarios_parse_and_match_their_names() {
        let all = shipped().unwrap();
        assert_eq!(all.len(), SHIPPED.len());
        for (s, (name, _)) in all.iter().zip(SHIPPED) {
            assert_eq!(&s.scenario.name, name);
        }
    }
}
