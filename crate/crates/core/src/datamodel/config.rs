//! JSON run configuration with the four required attribute groups
//! `dataset`, `input`, `output` and `pipelines`, plus an optional
//! `evaluation` group.

use super::DataError;
use indexmap::IndexMap;
use serde_json::Value;

/// Pipeline stage names the driver knows how to schedule. Names of
/// model-backed stages (`detect`, `landmark`, `reconstruct`) are accepted
/// and satisfied by file-based providers.
pub const REGISTERED_MODULES: &[&str] = &[
    "detect",
    "landmark",
    "reconstruct",
    "pose",
    "lift",
    "signature",
    "match",
    "evaluate",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetInfo {
    pub name: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputLists {
    pub galleries: Vec<String>,
    pub probes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputDirs {
    pub signatures_dir: String,
    pub results_dir: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub modules: Vec<String>,
    pub model_paths: IndexMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMetric {
    Rank1,
    Cmc,
}

/// Evaluation metric plus free-form options (patch preset, thresholds,
/// worker count, resolution bounds, ...). Option keys beyond the metric are
/// artifact-defined; typed getters fall back to defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationSpec {
    pub metric: EvalMetric,
    pub options: IndexMap<String, Value>,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            metric: EvalMetric::Rank1,
            options: IndexMap::new(),
        }
    }
}

impl EvaluationSpec {
    pub fn option_f64(&self, key: &str, default: f64) -> f64 {
        self.options
            .get(key)
            .and_then(Value::as_f64)
            .unwrap_or(default)
    }

    pub fn option_usize(&self, key: &str, default: usize) -> usize {
        self.options
            .get(key)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .unwrap_or(default)
    }

    pub fn option_str(&self, key: &str) -> Option<&str> {
        self.options.get(key).and_then(Value::as_str)
    }
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset: DatasetInfo,
    pub input: InputLists,
    pub output: OutputDirs,
    pub pipelines: PipelineSpec,
    pub evaluation: EvaluationSpec,
}

/// Parses and validates configuration text.
///
/// The four top-level attributes `dataset`, `input`, `output` and
/// `pipelines` are required; unknown top-level attributes are ignored with
/// a warning; module names must be registered stages.
pub fn parse_config(text: &str) -> Result<PipelineConfig, DataError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| DataError::Parse(e.to_string()))?;
    let root = value
        .as_object()
        .ok_or_else(|| DataError::Config("top level must be a JSON object".into()))?;

    const KNOWN: &[&str] = &["dataset", "input", "output", "pipelines", "evaluation"];
    for key in root.keys() {
        if !KNOWN.contains(&key.as_str()) {
            log::warn!("ignoring unknown configuration attribute '{key}'");
        }
    }

    let section = |name: &str| -> Result<&Value, DataError> {
        root.get(name)
            .ok_or_else(|| DataError::Config(format!("missing required attribute '{name}'")))
    };

    let dataset_v = section("dataset")?;
    let dataset = DatasetInfo {
        name: require_str(dataset_v, "dataset", "name")?,
        path: require_str(dataset_v, "dataset", "path")?,
    };

    let input_v = section("input")?;
    let input = InputLists {
        galleries: string_list(input_v, "input", "galleries")?,
        probes: string_list(input_v, "input", "probes")?,
    };

    let output_v = section("output")?;
    let output = OutputDirs {
        signatures_dir: require_str(output_v, "output", "signatures_dir")?,
        results_dir: require_str(output_v, "output", "results_dir")?,
    };
    if output.signatures_dir.is_empty() || output.results_dir.is_empty() {
        return Err(DataError::Config("output directories must be nonempty".into()));
    }

    let pipelines_v = section("pipelines")?;
    let modules = string_list(pipelines_v, "pipelines", "modules")?;
    for module in &modules {
        if !REGISTERED_MODULES.contains(&module.as_str()) {
            return Err(DataError::Config(format!(
                "unregistered pipeline module '{module}' (known: {})",
                REGISTERED_MODULES.join(", ")
            )));
        }
    }
    let mut model_paths = IndexMap::new();
    if let Some(paths) = pipelines_v.get("model_paths") {
        let obj = paths.as_object().ok_or_else(|| {
            DataError::Config("'pipelines.model_paths' must be an object".into())
        })?;
        for (k, v) in obj {
            let path = v.as_str().ok_or_else(|| {
                DataError::Config(format!("model path '{k}' must be a string"))
            })?;
            model_paths.insert(k.clone(), path.to_owned());
        }
    }
    let pipelines = PipelineSpec {
        modules,
        model_paths,
    };

    let evaluation = match root.get("evaluation") {
        None => EvaluationSpec::default(),
        Some(eval_v) => {
            let metric = match eval_v.get("metric").and_then(Value::as_str) {
                None => EvalMetric::Rank1,
                Some("rank1") => EvalMetric::Rank1,
                Some("cmc") => EvalMetric::Cmc,
                Some(other) => {
                    return Err(DataError::Config(format!(
                        "unknown evaluation metric '{other}' (expected 'rank1' or 'cmc')"
                    )))
                }
            };
            let mut options = IndexMap::new();
            if let Some(opts) = eval_v.get("options") {
                let obj = opts.as_object().ok_or_else(|| {
                    DataError::Config("'evaluation.options' must be an object".into())
                })?;
                for (k, v) in obj {
                    options.insert(k.clone(), v.clone());
                }
            }
            EvaluationSpec { metric, options }
        }
    };

    Ok(PipelineConfig {
        dataset,
        input,
        output,
        pipelines,
        evaluation,
    })
}

fn require_str(section: &Value, section_name: &str, key: &str) -> Result<String, DataError> {
    section
        .get(key)
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| {
            DataError::Config(format!(
                "missing or non-string attribute '{section_name}.{key}'"
            ))
        })
}

fn string_list(section: &Value, section_name: &str, key: &str) -> Result<Vec<String>, DataError> {
    let arr = section
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| {
            DataError::Config(format!("missing or non-array attribute '{section_name}.{key}'"))
        })?;
    arr.iter()
        .map(|v| {
            v.as_str().map(str::to_owned).ok_or_else(|| {
                DataError::Config(format!("'{section_name}.{key}' entries must be strings"))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"{
        "dataset": {"name": "synthetic", "path": "data/synthetic"},
        "input": {"galleries": ["g.csv"], "probes": ["p1.csv", "p2.csv"]},
        "output": {"signatures_dir": "out/sigs", "results_dir": "out/results"},
        "pipelines": {
            "modules": ["landmark", "pose", "lift", "signature", "match", "evaluate"],
            "model_paths": {"afm": "models/mean.obj"}
        },
        "evaluation": {"metric": "rank1", "options": {"preset": "prfs64", "workers": 4}}
    }"#;

    #[test]
    fn full_config_parses() {
        let cfg = parse_config(FULL).unwrap();
        assert_eq!(cfg.dataset.name, "synthetic");
        assert_eq!(cfg.input.probes.len(), 2);
        assert_eq!(cfg.output.results_dir, "out/results");
        assert_eq!(cfg.pipelines.modules.len(), 6);
        assert_eq!(cfg.pipelines.model_paths.get("afm").unwrap(), "models/mean.obj");
        assert_eq!(cfg.evaluation.metric, EvalMetric::Rank1);
        assert_eq!(cfg.evaluation.option_usize("workers", 1), 4);
        assert_eq!(cfg.evaluation.option_str("preset"), Some("prfs64"));
    }

    #[test]
    fn missing_output_names_the_attribute() {
        let text = FULL.replacen("\"output\"", "\"outputs\"", 1);
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("'output'"), "{err}");
    }

    #[test]
    fn empty_string_is_parse_error() {
        assert!(matches!(parse_config(""), Err(DataError::Parse(_))));
    }

    #[test]
    fn unregistered_module_rejected() {
        let text = FULL.replacen("\"pose\"", "\"teleport\"", 1);
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("teleport"));
    }

    #[test]
    fn attribute_order_is_irrelevant() {
        let reordered = r#"{
            "pipelines": {
                "modules": ["landmark", "pose", "lift", "signature", "match", "evaluate"],
                "model_paths": {"afm": "models/mean.obj"}
            },
            "evaluation": {"metric": "rank1", "options": {"workers": 4, "preset": "prfs64"}},
            "output": {"results_dir": "out/results", "signatures_dir": "out/sigs"},
            "input": {"probes": ["p1.csv", "p2.csv"], "galleries": ["g.csv"]},
            "dataset": {"path": "data/synthetic", "name": "synthetic"}
        }"#;
        assert_eq!(parse_config(FULL).unwrap(), parse_config(reordered).unwrap());
    }

    #[test]
    fn evaluation_group_is_optional() {
        let mut v: serde_json::Value = serde_json::from_str(FULL).unwrap();
        v.as_object_mut().unwrap().remove("evaluation");
        let cfg = parse_config(&v.to_string()).unwrap();
        assert_eq!(cfg.evaluation, EvaluationSpec::default());
    }

    #[test]
    fn unknown_metric_rejected() {
        let text = FULL.replacen("\"rank1\"", "\"roc\"", 1);
        assert!(parse_config(&text).is_err());
    }
}
