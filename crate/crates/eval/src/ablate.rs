//! Ablation toggles mapping onto the adaptation columns: `all` (every
//! adaptation on), `no-inv` (periodicity and mass conservation off), and
//! `no-bc` (geometry conditioning and solid zeroing off; the mask is still
//! part of the encoder input).

use crate::error::{EvalError, Result};
use oilpore_surrogate::{AblationFlags, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationVariant {
    All,
    NoInvariances,
    NoGeometryBc,
}

impl AblationVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            AblationVariant::All => "all",
            AblationVariant::NoInvariances => "no-inv",
            AblationVariant::NoGeometryBc => "no-bc",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "all" => Ok(AblationVariant::All),
            "no-inv" => Ok(AblationVariant::NoInvariances),
            "no-bc" => Ok(AblationVariant::NoGeometryBc),
            other => Err(EvalError::Config(format!(
                "unknown ablation '{other}' (all|no-inv|no-bc)"
            ))),
        }
    }

    pub fn flags(&self) -> AblationFlags {
        match self {
            AblationVariant::All => AblationFlags::default(),
            AblationVariant::NoInvariances => AblationFlags {
                enforce_periodicity: false,
                enforce_mass: false,
                enforce_geometry_bc: true,
            },
            AblationVariant::NoGeometryBc => AblationFlags {
                enforce_periodicity: true,
                enforce_mass: true,
                enforce_geometry_bc: false,
            },
        }
    }
}

/// Apply an ablation to a build description.
pub fn apply_ablation(spec: &ModelSpec, variant: AblationVariant) -> ModelSpec {
    spec.clone().with_flags(variant.flags())
}

/// Summary table: one row per architecture, one column per variant (plus
/// an optional no-obstacle column evaluated on a separate dataset).
pub fn ablation_csv(rows: &[(String, Vec<(String, f64)>)]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for (_, cells) in rows {
        for (name, _) in cells {
            if !columns.contains(name) {
                columns.push(name.clone());
            }
        }
    }
    let mut out = String::from("model");
    for column in &columns {
        out.push_str(&format!(",{column}"));
    }
    out.push('\n');
    for (model, cells) in rows {
        out.push_str(model);
        for column in &columns {
            match cells.iter().find(|(name, _)| name == column) {
                Some((_, value)) => out.push_str(&format!(",{value:.6e}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_variant_is_the_default_spec() {
        let spec = ModelSpec::unet(4, 8, vec![1, 2], 1);
        let all = apply_ablation(&spec, AblationVariant::All);
        assert_eq!(all, spec);
    }

    #[test]
    fn variants_map_to_the_expected_flags() {
        let no_inv = AblationVariant::NoInvariances.flags();
        assert!(!no_inv.enforce_periodicity && !no_inv.enforce_mass);
        assert!(no_inv.enforce_geometry_bc);
        let no_bc = AblationVariant::NoGeometryBc.flags();
        assert!(no_bc.enforce_periodicity && no_bc.enforce_mass);
        assert!(!no_bc.enforce_geometry_bc);
    }

    #[test]
    fn csv_contains_variant_columns() {
        let rows = vec![(
            "unet".to_string(),
            vec![("all".to_string(), 0.04), ("no-inv".to_string(), 0.05)],
        )];
        let csv = ablation_csv(&rows);
        assert!(csv.contains("model,all,no-inv"));
        assert!(csv.contains("unet,4.0"));
    }
}
