//! Config loading with extension sniffing: sectioned `key = value` text by
//! default, or a JSON object of section objects for `.json` files.

use crate::CliError;
use oilpore_core::config::ConfigDoc;
use std::path::Path;

pub fn load_config(path: Option<&str>) -> Result<ConfigDoc, CliError> {
    let Some(path) = path else {
        return Ok(ConfigDoc::new());
    };
    let path = Path::new(path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        from_json(&text)
    } else {
        ConfigDoc::parse(&text).map_err(CliError::from)
    }
}

fn from_json(text: &str) -> Result<ConfigDoc, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("malformed JSON config: {e}")))?;
    let serde_json::Value::Object(sections) = value else {
        return Err(CliError::Config(
            "JSON config must be an object of section objects".into(),
        ));
    };
    let mut doc = ConfigDoc::new();
    for (section, body) in sections {
        let serde_json::Value::Object(keys) = body else {
            return Err(CliError::Config(format!(
                "JSON section '{section}' must be an object"
            )));
        };
        for (key, value) in keys {
            let rendered = match value {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                serde_json::Value::Array(items) => items
                    .into_iter()
                    .map(|item| match item {
                        serde_json::Value::Number(n) => Ok(n.to_string()),
                        serde_json::Value::String(s) => Ok(s),
                        other => Err(CliError::Config(format!(
                            "unsupported array element {other} in {section}.{key}"
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?
                    .join(", "),
                other => {
                    return Err(CliError::Config(format!(
                        "unsupported JSON value {other} in {section}.{key}"
                    )))
                }
            };
            doc.set(&section, &key, &rendered);
        }
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_front_end_matches_text_form() {
        let json = r#"{"solver": {"dt": 0.02, "stride": 5}, "model": {"arch": "unet", "unet_multipliers": [1, 2]}}"#;
        let doc = from_json(json).unwrap();
        assert_eq!(doc.get_f64("solver", "dt").unwrap(), Some(0.02));
        assert_eq!(doc.get("model", "arch"), Some("unet"));
        assert_eq!(
            doc.get_usize_list("model", "unet_multipliers").unwrap(),
            Some(vec![1, 2])
        );
    }
}
