use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use causal_bma::causal::{EngineOptions, InterventionSpec};
use causal_bma::decision::{BadValueModel, ValueFunction, DEFAULT_NAIVE_BAND, DEFAULT_PARETO_EPS};
use causal_bma::mcmc::{DEFAULT_BURN_IN, DEFAULT_STEPS};
use causal_bma::pc::PcConfig;
use causal_bma::prior::PriorSpec;
use causal_bma::score::HyperConfig;
use causal_bma::{ColumnMeta, Dataset, Execution, PriorMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// One JSON document fully describing a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schema: Vec<ColumnMeta>,
    /// Edge-prior file; uninformative when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PathBuf>,
    #[serde(default)]
    pub hyper: HyperConfig,
    #[serde(default)]
    pub pc: PcConfig,
    #[serde(default)]
    pub chains: ChainSettings,
    #[serde(default)]
    pub engine: EngineOptions,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interventions: Vec<InterventionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_function: Option<ValueFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bad_value: Option<BadValueModel>,
    /// Cost per intervention name; unlisted interventions cost nothing.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub costs: BTreeMap<String, f64>,
    /// Previously written `posterior.json`; `decide` samples inline without it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<PathBuf>,
    #[serde(default = "default_band")]
    pub naive_band: f64,
    #[serde(default = "default_eps")]
    pub pareto_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySettings>,
    #[serde(default)]
    pub validate: ValidateSettings,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub execution: Execution,
}

fn default_band() -> f64 {
    DEFAULT_NAIVE_BAND
}

fn default_eps() -> f64 {
    DEFAULT_PARETO_EPS
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitGraph {
    #[default]
    Pc,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSettings {
    pub steps: usize,
    pub chains: usize,
    pub burn_in: f64,
    /// Base toggle probability; `1/(d(d-1))` when absent.
    pub tau: Option<f64>,
    /// Per-chain toggle probabilities, cycled; `[τ, 4τ, 16τ]` when absent.
    pub taus: Option<Vec<f64>>,
    pub thinning: usize,
    pub init: InitGraph,
}

impl Default for ChainSettings {
    fn default() -> Self {
        ChainSettings {
            steps: DEFAULT_STEPS,
            chains: 3,
            burn_in: DEFAULT_BURN_IN,
            tau: None,
            taus: None,
            thinning: 1,
            init: InitGraph::Pc,
        }
    }
}

/// `{"name": "...", "set": {"column": value, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterventionEntry {
    pub name: String,
    pub set: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySettings {
    /// Edge whose prior probability is swept, `[from, to]`.
    pub edge: [String; 2],
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    /// Cause and effect whose coefficient is reported; the swept edge when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<[String; 2]>,
}

pub fn default_grid() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Lucas,
    FiveNode,
    /// Ground-truth model JSON.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryEntry {
    pub set: BTreeMap<String, f64>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSettings {
    pub model: ModelChoice,
    pub n: usize,
    pub seeds: usize,
    pub tolerance: f64,
    /// Required for a model file; the shipped models bring their own.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<QueryEntry>,
}

impl Default for ValidateSettings {
    fn default() -> Self {
        ValidateSettings {
            model: ModelChoice::Lucas,
            n: 10_000,
            seeds: 20,
            tolerance: 0.05,
            queries: Vec::new(),
        }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub chains: Option<usize>,
    pub steps: Option<usize>,
}

impl RunConfig {
    /// Reads the file, resolves relative paths against its directory and
    /// applies overrides.
    pub fn load(path: &Path, ov: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.apply(ov);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.data.as_mut().map(fix);
        self.prior.as_mut().map(fix);
        self.posterior.as_mut().map(fix);
        fix(&mut self.out);
        if let ModelChoice::File(p) = &mut self.validate.model {
            fix(p);
        }
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(s) = ov.seed {
            self.seed = s;
        }
        if let Some(o) = &ov.out {
            self.out = o.clone();
        }
        if let Some(c) = ov.chains {
            self.chains.chains = c;
        }
        if let Some(s) = ov.steps {
            self.chains.steps = s;
        }
    }

    /// Checks that do not need the data.
    pub fn check(&self) -> CliResult<()> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("`{field}`: {msg}")));
        if self.chains.chains == 0 {
            return bad("chains.chains", "need at least one chain".into());
        }
        if self.chains.steps == 0 {
            return bad("chains.steps", "need at least one step".into());
        }
        if !(self.naive_band > 0.0 && self.naive_band <= 1.0) {
            return bad("naive_band", format!("{} outside (0, 1]", self.naive_band));
        }
        if !(self.pareto_eps >= 0.0 && self.pareto_eps.is_finite()) {
            return bad("pareto_eps", format!("{} must be finite and nonnegative", self.pareto_eps));
        }
        if !(self.pc.alpha > 0.0 && self.pc.alpha < 1.0) {
            return bad("pc.alpha", format!("{} outside (0, 1)", self.pc.alpha));
        }
        if let Some(s) = &self.sensitivity {
            if s.grid.is_empty() {
                return bad("sensitivity.grid", "empty grid".into());
            }
            if let Some(p) = s.grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return bad("sensitivity.grid", format!("{p} outside [0, 1]"));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for iv in &self.interventions {
            if !names.insert(iv.name.as_str()) {
                return bad("interventions", format!("duplicate name `{}`", iv.name));
            }
        }
        if let Some(c) = self.costs.keys().find(|c| !names.contains(c.as_str())) {
            return bad("costs", format!("no intervention named `{c}`"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the effective config in canonical JSON. The output
    /// directory and execution mode do not affect results and are left out.
    pub fn digest(&self) -> String {
        let canonical = RunConfig {
            out: PathBuf::new(),
            execution: Execution::default(),
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn data_path(&self) -> CliResult<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Config("`data`: this command needs a data file".into()))
    }

    pub fn load_data(&self) -> CliResult<Dataset> {
        let path = self.data_path()?;
        if self.schema.is_empty() {
            return Err(CliError::Config("`schema`: this command needs a column schema".into()));
        }
        Dataset::load_csv(path, self.schema.clone()).map_err(CliError::from_data)
    }

    pub fn load_prior(&self, ds: &Dataset) -> CliResult<PriorMatrix> {
        let Some(path) = &self.prior else {
            return Ok(PriorMatrix::uninformative(ds.d()));
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("`prior`: cannot read {}: {e}", path.display())))?;
        let spec: PriorSpec =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("`prior`: {e}")))?;
        let names: Vec<String> = ds.schema().iter().map(|c| c.name.clone()).collect();
        PriorMatrix::from_spec(&spec, &names).map_err(|e| CliError::Config(format!("`prior`: {e}")))
    }

    /// Intervention specs with column names resolved and costs attached.
    pub fn specs(&self, ds: &Dataset) -> CliResult<Vec<InterventionSpec>> {
        if self.interventions.is_empty() {
            return Err(CliError::Config("`interventions`: none configured".into()));
        }
        self.interventions
            .iter()
            .map(|iv| {
                let assignments = resolve_set(ds, &iv.set, "interventions")?;
                let mut spec = InterventionSpec::new(&assignments, self.costs.get(&iv.name).copied().unwrap_or(0.0));
                spec.name = iv.name.clone();
                Ok(spec)
            })
            .collect()
    }

    pub fn value_function(&self) -> CliResult<&ValueFunction> {
        self.value_function
            .as_ref()
            .ok_or_else(|| CliError::Config("`value_function`: required by this command".into()))
    }
}

pub fn column(ds: &Dataset, name: &str, field: &str) -> CliResult<usize> {
    ds.index_of(name)
        .ok_or_else(|| CliError::Config(format!("`{field}`: unknown column `{name}`")))
}

pub fn resolve_set(ds: &Dataset, set: &BTreeMap<String, f64>, field: &str) -> CliResult<Vec<(usize, f64)>> {
    if set.is_empty() {
        return Err(CliError::Config(format!("`{field}`: empty assignment")));
    }
    set.iter().map(|(n, &v)| Ok((column(ds, n, field)?, v))).collect()
}
