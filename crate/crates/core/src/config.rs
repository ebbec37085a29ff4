//! Flat `key = value` run configuration (a TOML subset).
//!
//! Values are booleans, integers, floats, double-quoted strings or
//! one-level arrays of those. `#` starts a comment outside strings.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

use crate::featsel::{LassoConfig, ReliefConfig, SelectorKind, ShapleyConfig};
use crate::features::WindowSpec;
use crate::fusion::{FusionMode, FusionTrainConfig};
use crate::learners::{
    AdaBoostParams, ForestParams, GbdtParams, ModelKind, ModelSpec, SvmParams, TreeParams,
};
use crate::pipeline::{
    CalibrationConfig, CompareConfig, CvConfig, FusionVariant, SplitConfig, TabularSynth,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: bad value for '{key}': {reason}")]
    TypeError {
        key: String,
        line: usize,
        reason: String,
    },
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Value>),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Bool(_) => "a boolean",
            Value::Int(_) => "an integer",
            Value::Float(_) => "a float",
            Value::Str(_) => "a string",
            Value::Array(_) => "an array",
        }
    }
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && (self.s[self.pos] == b' ' || self.s[self.pos] == b'\t') {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn value(&mut self) -> Result<Value, String> {
        self.skip_ws();
        match self.peek() {
            None => Err("missing value".into()),
            Some(b'"') => self.string().map(Value::Str),
            Some(b'[') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.peek() == Some(b']') {
                        self.pos += 1;
                        return Ok(Value::Array(items));
                    }
                    let v = self.value()?;
                    if matches!(v, Value::Array(_)) {
                        return Err("nested arrays are not supported".into());
                    }
                    items.push(v);
                    self.skip_ws();
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b']') => {}
                        _ => return Err("expected ',' or ']' in array".into()),
                    }
                }
            }
            Some(_) => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && !matches!(self.s[self.pos], b',' | b']' | b' ' | b'\t' | b'#')
                {
                    self.pos += 1;
                }
                let tok =
                    std::str::from_utf8(&self.s[start..self.pos]).map_err(|e| e.to_string())?;
                match tok {
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    _ => {
                        let clean = tok.replace('_', "");
                        if let Ok(i) = clean.parse::<i64>() {
                            Ok(Value::Int(i))
                        } else if let Ok(f) = clean.parse::<f64>() {
                            Ok(Value::Float(f))
                        } else {
                            Err(format!(
                                "cannot parse '{tok}' (strings must be double-quoted)"
                            ))
                        }
                    }
                }
            }
        }
    }

    fn string(&mut self) -> Result<String, String> {
        self.pos += 1;
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                b'"' => return String::from_utf8(out).map_err(|e| e.to_string()),
                b'\\' => {
                    let esc = self.peek().ok_or("unterminated escape")?;
                    self.pos += 1;
                    out.push(match esc {
                        b'"' => b'"',
                        b'\\' => b'\\',
                        b'n' => b'\n',
                        b't' => b'\t',
                        other => return Err(format!("unknown escape '\\{}'", other as char)),
                    });
                }
                _ => out.push(c),
            }
        }
        Err("unterminated string".into())
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn fmt_f64(v: f64) -> String {
    let s = v.to_string();
    if s.contains(['.', 'e', 'E']) || !v.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn fmt_depth(d: Option<usize>) -> String {
    d.map_or_else(|| quote("none"), |v| v.to_string())
}

fn fmt_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    format!("[{}]", items.iter().map(f).collect::<Vec<_>>().join(", "))
}

/// Every tunable of a run. Defaults match the library defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub window_half_m: usize,
    pub window_half_n: usize,
    pub quantile: f64,
    pub test_fraction: f64,
    pub stratified: bool,
    pub split_seed: u64,
    pub model: ModelKind,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub adaboost_rounds: usize,
    pub gbdt_rounds: usize,
    pub gbdt_lr: f64,
    pub gbdt_max_depth: usize,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub fusion: bool,
    pub fusion_mode: FusionMode,
    pub fusion_epochs: usize,
    pub fusion_lr: f64,
    pub fusion_l2: f64,
    /// 0 disables cross-validation.
    pub cv_folds: usize,
    pub cv_max_depths: Vec<Option<usize>>,
    pub cv_n_trees: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub fusion_variants: Vec<FusionVariant>,
    pub selectors: Vec<SelectorKind>,
    pub selector_model: ModelKind,
    pub k_select: usize,
    pub relieff_neighbors: usize,
    pub relieff_probes: usize,
    pub shapley_permutations: usize,
    pub lasso_lambda_ratio: f64,
    pub region_grids: Vec<String>,
    pub synth_grids: usize,
    pub synth_size: usize,
    pub synth_noise: f64,
    pub synth_tabular: usize,
    pub tabular_samples: usize,
    pub tabular_informative: usize,
    pub tabular_noise: usize,
    pub tabular_quantile: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            window_half_m: 5,
            window_half_n: 5,
            quantile: 0.05,
            test_fraction: 0.25,
            stratified: true,
            split_seed: 42,
            model: ModelKind::Rf,
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            mtry: None,
            bootstrap: true,
            adaboost_rounds: 50,
            gbdt_rounds: 100,
            gbdt_lr: 0.1,
            gbdt_max_depth: 3,
            svm_lambda: 1e-3,
            svm_epochs: 50,
            fusion: false,
            fusion_mode: FusionMode::Reweight,
            fusion_epochs: 500,
            fusion_lr: 0.1,
            fusion_l2: 1e-3,
            cv_folds: 0,
            cv_max_depths: vec![Some(4), Some(8), None],
            cv_n_trees: vec![100],
            models: ModelKind::ALL.to_vec(),
            fusion_variants: vec![FusionVariant::None, FusionVariant::Attn],
            selectors: SelectorKind::ALL.to_vec(),
            selector_model: ModelKind::Rf,
            k_select: 4,
            relieff_neighbors: 10,
            relieff_probes: 200,
            shapley_permutations: 30,
            lasso_lambda_ratio: 0.05,
            region_grids: Vec::new(),
            synth_grids: 2,
            synth_size: 40,
            synth_noise: 0.5,
            synth_tabular: 0,
            tabular_samples: 600,
            tabular_informative: 3,
            tabular_noise: 3,
            tabular_quantile: 0.1,
        }
    }
}

struct Field<'a> {
    key: &'a str,
    line: usize,
    value: Value,
}

impl Field<'_> {
    fn err(&self, reason: impl Into<String>) -> ConfigError {
        ConfigError::TypeError {
            key: self.key.to_string(),
            line: self.line,
            reason: reason.into(),
        }
    }

    fn wrong(&self, want: &str) -> ConfigError {
        self.err(format!("expected {want}, found {}", self.value.describe()))
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        match self.value {
            Value::Bool(b) => Ok(b),
            _ => Err(self.wrong("a boolean")),
        }
    }

    fn int_of(&self, v: &Value) -> Result<i64, ConfigError> {
        match v {
            Value::Int(i) => Ok(*i),
            _ => Err(self.wrong("an integer")),
        }
    }

    fn u64(&self) -> Result<u64, ConfigError> {
        let i = self.int_of(&self.value)?;
        u64::try_from(i).map_err(|_| self.err(format!("{i} must be non-negative")))
    }

    fn count(&self, min: usize) -> Result<usize, ConfigError> {
        let i = self.int_of(&self.value)?;
        let v = usize::try_from(i).map_err(|_| self.err(format!("{i} must be non-negative")))?;
        if v < min {
            return Err(self.err(format!("{v} must be >= {min}")));
        }
        Ok(v)
    }

    fn float(&self) -> Result<f64, ConfigError> {
        match self.value {
            Value::Float(f) if f.is_finite() => Ok(f),
            Value::Int(i) => Ok(i as f64),
            Value::Float(_) => Err(self.err("must be finite")),
            _ => Err(self.wrong("a number")),
        }
    }

    fn open_unit(&self) -> Result<f64, ConfigError> {
        let f = self.float()?;
        if !(f > 0.0 && f < 1.0) {
            return Err(self.err(format!("{f} is out of (0,1)")));
        }
        Ok(f)
    }

    fn positive(&self) -> Result<f64, ConfigError> {
        let f = self.float()?;
        if f <= 0.0 {
            return Err(self.err(format!("{f} must be > 0")));
        }
        Ok(f)
    }

    fn non_negative(&self) -> Result<f64, ConfigError> {
        let f = self.float()?;
        if f < 0.0 {
            return Err(self.err(format!("{f} must be >= 0")));
        }
        Ok(f)
    }

    fn str_of<'v>(&self, v: &'v Value) -> Result<&'v str, ConfigError> {
        match v {
            Value::Str(s) => Ok(s),
            _ => Err(self.wrong("a string")),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, v: &Value) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.str_of(v)?
            .parse()
            .map_err(|e: T::Err| self.err(e.to_string()))
    }

    fn optional_count(&self, v: &Value, none_word: &str) -> Result<Option<usize>, ConfigError> {
        match v {
            Value::Str(s) if s == none_word => Ok(None),
            Value::Int(i) => usize::try_from(*i)
                .map(Some)
                .map_err(|_| self.err(format!("{i} must be non-negative"))),
            _ => Err(self.err(format!("expected an integer or \"{none_word}\""))),
        }
    }

    fn array(&self) -> Result<&[Value], ConfigError> {
        match &self.value {
            Value::Array(a) => Ok(a),
            _ => Err(self.wrong("an array")),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some(eq) = trimmed.find('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    reason: "expected 'key = value'".into(),
                });
            };
            let key = trimmed[..eq].trim();
            if key.is_empty() || !key.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("invalid key '{key}'"),
                });
            }
            let mut cur = Cursor {
                s: &trimmed.as_bytes()[eq + 1..],
                pos: 0,
            };
            let value = cur.value().map_err(|reason| ConfigError::TypeError {
                key: key.into(),
                line,
                reason,
            })?;
            cur.skip_ws();
            if !matches!(cur.peek(), None | Some(b'#')) {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("trailing characters after value of '{key}'"),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Syntax {
                    line,
                    reason: format!("duplicate key '{key}'"),
                });
            }
            cfg.set(&Field { key, line, value })?;
        }
        Ok(cfg)
    }

    fn set(&mut self, f: &Field) -> Result<(), ConfigError> {
        match f.key {
            "seed" => self.seed = f.u64()?,
            "window_half_m" => self.window_half_m = f.count(0)?,
            "window_half_n" => self.window_half_n = f.count(0)?,
            "quantile" => self.quantile = f.open_unit()?,
            "test_fraction" => self.test_fraction = f.open_unit()?,
            "stratified" => self.stratified = f.bool()?,
            "split_seed" => self.split_seed = f.u64()?,
            "model" => self.model = f.parsed(&f.value)?,
            "n_trees" => self.n_trees = f.count(1)?,
            "max_depth" => self.max_depth = f.optional_count(&f.value, "none")?,
            "min_samples_split" => self.min_samples_split = f.count(2)?,
            "mtry" => {
                self.mtry = f.optional_count(&f.value, "auto")?;
                if self.mtry == Some(0) {
                    return Err(f.err("mtry must be >= 1"));
                }
            }
            "bootstrap" => self.bootstrap = f.bool()?,
            "adaboost_rounds" => self.adaboost_rounds = f.count(1)?,
            "gbdt_rounds" => self.gbdt_rounds = f.count(1)?,
            "gbdt_lr" => self.gbdt_lr = f.positive()?,
            "gbdt_max_depth" => self.gbdt_max_depth = f.count(1)?,
            "svm_lambda" => self.svm_lambda = f.positive()?,
            "svm_epochs" => self.svm_epochs = f.count(1)?,
            "fusion" => self.fusion = f.bool()?,
            "fusion_mode" => self.fusion_mode = f.parsed(&f.value)?,
            "fusion_epochs" => self.fusion_epochs = f.count(0)?,
            "fusion_lr" => self.fusion_lr = f.positive()?,
            "fusion_l2" => self.fusion_l2 = f.non_negative()?,
            "cv_folds" => {
                self.cv_folds = f.count(0)?;
                if self.cv_folds == 1 {
                    return Err(f.err("cv_folds must be 0 (off) or >= 2"));
                }
            }
            "cv_max_depths" => {
                self.cv_max_depths = f
                    .array()?
                    .iter()
                    .map(|v| f.optional_count(v, "none"))
                    .collect::<Result<_, _>>()?
            }
            "cv_n_trees" => {
                self.cv_n_trees = f
                    .array()?
                    .iter()
                    .map(|v| match f.int_of(v)? {
                        n if n >= 1 => Ok(n as usize),
                        n => Err(f.err(format!("{n} must be >= 1"))),
                    })
                    .collect::<Result<_, _>>()?
            }
            "models" => {
                self.models = f
                    .array()?
                    .iter()
                    .map(|v| f.parsed(v))
                    .collect::<Result<_, _>>()?
            }
            "fusion_variants" => {
                self.fusion_variants = f
                    .array()?
                    .iter()
                    .map(|v| match f.str_of(v)? {
                        "none" => Ok(FusionVariant::None),
                        "attn" => Ok(FusionVariant::Attn),
                        other => {
                            Err(f.err(format!("unknown fusion variant '{other}' (none|attn)")))
                        }
                    })
                    .collect::<Result<_, _>>()?
            }
            "selectors" => {
                let mut out = Vec::new();
                for v in f.array()? {
                    // "attn" is the fusion column of the selector table
                    if f.str_of(v)? == "attn" {
                        if !self.fusion_variants.contains(&FusionVariant::Attn) {
                            self.fusion_variants.push(FusionVariant::Attn);
                        }
                        continue;
                    }
                    out.push(f.parsed(v)?);
                }
                self.selectors = out;
            }
            "selector_model" => self.selector_model = f.parsed(&f.value)?,
            "k_select" => self.k_select = f.count(1)?,
            "relieff_neighbors" => self.relieff_neighbors = f.count(1)?,
            "relieff_probes" => self.relieff_probes = f.count(1)?,
            "shapley_permutations" => self.shapley_permutations = f.count(1)?,
            "lasso_lambda_ratio" => self.lasso_lambda_ratio = f.non_negative()?,
            "region_grids" => {
                self.region_grids = f
                    .array()?
                    .iter()
                    .map(|v| f.str_of(v).map(str::to_string))
                    .collect::<Result<_, _>>()?
            }
            "synth_grids" => self.synth_grids = f.count(0)?,
            "synth_size" => self.synth_size = f.count(2)?,
            "synth_noise" => self.synth_noise = f.non_negative()?,
            "synth_tabular" => self.synth_tabular = f.count(0)?,
            "tabular_samples" => self.tabular_samples = f.count(8)?,
            "tabular_informative" => self.tabular_informative = f.count(1)?,
            "tabular_noise" => self.tabular_noise = f.count(0)?,
            "tabular_quantile" => self.tabular_quantile = f.open_unit()?,
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                    line: f.line,
                })
            }
        }
        Ok(())
    }

    /// Writes every key; parsing the result gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("window_half_m", self.window_half_m.to_string());
        kv("window_half_n", self.window_half_n.to_string());
        kv("quantile", fmt_f64(self.quantile));
        kv("test_fraction", fmt_f64(self.test_fraction));
        kv("stratified", self.stratified.to_string());
        kv("split_seed", self.split_seed.to_string());
        kv("model", quote(self.model.name()));
        kv("n_trees", self.n_trees.to_string());
        kv("max_depth", fmt_depth(self.max_depth));
        kv("min_samples_split", self.min_samples_split.to_string());
        kv(
            "mtry",
            self.mtry.map_or_else(|| quote("auto"), |v| v.to_string()),
        );
        kv("bootstrap", self.bootstrap.to_string());
        kv("adaboost_rounds", self.adaboost_rounds.to_string());
        kv("gbdt_rounds", self.gbdt_rounds.to_string());
        kv("gbdt_lr", fmt_f64(self.gbdt_lr));
        kv("gbdt_max_depth", self.gbdt_max_depth.to_string());
        kv("svm_lambda", fmt_f64(self.svm_lambda));
        kv("svm_epochs", self.svm_epochs.to_string());
        kv("fusion", self.fusion.to_string());
        kv("fusion_mode", quote(self.fusion_mode.name()));
        kv("fusion_epochs", self.fusion_epochs.to_string());
        kv("fusion_lr", fmt_f64(self.fusion_lr));
        kv("fusion_l2", fmt_f64(self.fusion_l2));
        kv("cv_folds", self.cv_folds.to_string());
        kv(
            "cv_max_depths",
            fmt_list(&self.cv_max_depths, |d| fmt_depth(*d)),
        );
        kv("cv_n_trees", fmt_list(&self.cv_n_trees, |n| n.to_string()));
        kv("models", fmt_list(&self.models, |m| quote(m.name())));
        kv(
            "fusion_variants",
            fmt_list(&self.fusion_variants, |v| quote(v.name())),
        );
        kv("selectors", fmt_list(&self.selectors, |v| quote(v.name())));
        kv("selector_model", quote(self.selector_model.name()));
        kv("k_select", self.k_select.to_string());
        kv("relieff_neighbors", self.relieff_neighbors.to_string());
        kv("relieff_probes", self.relieff_probes.to_string());
        kv(
            "shapley_permutations",
            self.shapley_permutations.to_string(),
        );
        kv("lasso_lambda_ratio", fmt_f64(self.lasso_lambda_ratio));
        kv("region_grids", fmt_list(&self.region_grids, |p| quote(p)));
        kv("synth_grids", self.synth_grids.to_string());
        kv("synth_size", self.synth_size.to_string());
        kv("synth_noise", fmt_f64(self.synth_noise));
        kv("synth_tabular", self.synth_tabular.to_string());
        kv("tabular_samples", self.tabular_samples.to_string());
        kv("tabular_informative", self.tabular_informative.to_string());
        kv("tabular_noise", self.tabular_noise.to_string());
        kv("tabular_quantile", fmt_f64(self.tabular_quantile));
        s
    }

    pub fn window(&self) -> WindowSpec {
        WindowSpec {
            half_m: self.window_half_m,
            half_n: self.window_half_n,
        }
    }

    pub fn split(&self) -> SplitConfig {
        SplitConfig {
            test_fraction: self.test_fraction,
            stratified: self.stratified,
            seed: self.split_seed,
        }
    }

    pub fn forest(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            tree: TreeParams {
                max_depth: self.max_depth,
                min_samples_split: self.min_samples_split,
                mtry: self.mtry,
            },
            bootstrap: self.bootstrap,
        }
    }

    pub fn fusion_train(&self) -> FusionTrainConfig {
        FusionTrainConfig {
            epochs: self.fusion_epochs,
            lr: self.fusion_lr,
            l2_w: self.fusion_l2,
            seed: self.seed,
            mode: self.fusion_mode,
        }
    }

    pub fn model_spec(&self, kind: ModelKind) -> ModelSpec {
        match kind {
            ModelKind::Rf => ModelSpec::Rf(self.forest()),
            ModelKind::AdaBoost => ModelSpec::AdaBoost(AdaBoostParams {
                n_rounds: self.adaboost_rounds,
            }),
            ModelKind::Gbdt => ModelSpec::Gbdt(GbdtParams {
                n_rounds: self.gbdt_rounds,
                lr: self.gbdt_lr,
                max_depth: self.gbdt_max_depth,
            }),
            ModelKind::Svm => ModelSpec::Svm(SvmParams {
                lambda: self.svm_lambda,
                epochs: self.svm_epochs,
            }),
        }
    }

    /// Forest grid `cv_n_trees x cv_max_depths` in declaration order.
    fn cv_grid(&self) -> Vec<ModelSpec> {
        let base = self.forest();
        let mut grid = Vec::new();
        for &n_trees in &self.cv_n_trees {
            for &max_depth in &self.cv_max_depths {
                grid.push(ModelSpec::Rf(ForestParams {
                    n_trees,
                    tree: TreeParams {
                        max_depth,
                        ..base.tree
                    },
                    ..base
                }));
            }
        }
        grid
    }

    pub fn calibration(&self) -> CalibrationConfig {
        let cv = (self.cv_folds >= 2 && self.model == ModelKind::Rf).then(|| CvConfig {
            k_folds: self.cv_folds,
            grid: self.cv_grid(),
        });
        CalibrationConfig {
            window: self.window(),
            quantile: self.quantile,
            split: self.split(),
            fusion: self.fusion.then(|| self.fusion_train()),
            model: self.model_spec(self.model),
            model_seed: self.seed,
            cv,
        }
    }

    pub fn compare(&self) -> CompareConfig {
        let spec = |k| self.model_spec(k);
        let (
            ModelSpec::Rf(rf),
            ModelSpec::AdaBoost(adaboost),
            ModelSpec::Gbdt(gbdt),
            ModelSpec::Svm(svm),
        ) = (
            spec(ModelKind::Rf),
            spec(ModelKind::AdaBoost),
            spec(ModelKind::Gbdt),
            spec(ModelKind::Svm),
        )
        else {
            unreachable!("model_spec maps each kind to its own variant")
        };
        CompareConfig {
            models: self.models.clone(),
            fusion_variants: self.fusion_variants.clone(),
            selectors: self.selectors.clone(),
            selector_model: self.selector_model,
            k_select: self.k_select,
            model_seed: self.seed,
            fusion: self.fusion_train(),
            rf,
            adaboost,
            gbdt,
            svm,
            relieff: ReliefConfig {
                k_neighbors: self.relieff_neighbors,
                n_probes: self.relieff_probes,
                seed: self.seed,
                k_select: self.k_select,
            },
            shapley: ShapleyConfig {
                n_permutations: self.shapley_permutations,
                seed: self.seed,
                validation_folds: 3,
                k_select: self.k_select,
            },
            lasso: LassoConfig {
                lambda_ratio: self.lasso_lambda_ratio,
                lambda: None,
                k_select: self.k_select,
            },
        }
    }

    pub fn tabular(&self) -> TabularSynth {
        TabularSynth {
            n_samples: self.tabular_samples,
            n_informative: self.tabular_informative,
            n_noise: self.tabular_noise,
            quantile: self.tabular_quantile,
            ..TabularSynth::default()
        }
    }
}
