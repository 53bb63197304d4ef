use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use super::RunArgs;
use crate::aggregation::WeightNormalization;
use crate::baselines::{RandomParams, ShapleyGame, ShapleyMethod, ShapleyParams, StackingParams};
use crate::data::{DataError, DatasetBundle, LearnerCategory};
use crate::error::{Error, Result};
use crate::hec::{HecConfig, SearchRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Hec,
    Wmv,
    Stacking,
    Shapley,
    Bayes,
    Random,
    Majority,
    BestSingle,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Hec,
        Method::Wmv,
        Method::Stacking,
        Method::Shapley,
        Method::Bayes,
        Method::Random,
        Method::Majority,
        Method::BestSingle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hec => "hec",
            Method::Wmv => "wmv",
            Method::Stacking => "stacking",
            Method::Shapley => "shapley",
            Method::Bayes => "bayes",
            Method::Random => "random",
            Method::Majority => "majority",
            Method::BestSingle => "best-single",
        }
    }

    /// Parses a comma-separated list; duplicates are dropped.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m = Method::from_str(part)?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidParameter("--method names no method".into()));
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// Which learners the methods may use.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Pool {
    #[default]
    All,
    Transformers,
    Ids(Vec<String>),
}

impl FromStr for Pool {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Pool::All),
            "transformers" => Ok(Pool::Transformers),
            _ => match s.strip_prefix("ids:") {
                Some(list) => {
                    let ids: Vec<String> = list
                        .split(',')
                        .map(str::trim)
                        .filter(|x| !x.is_empty())
                        .map(String::from)
                        .collect();
                    if ids.is_empty() {
                        return Err(Error::InvalidParameter("--pool ids: lists no learner".into()));
                    }
                    Ok(Pool::Ids(ids))
                }
                None => Err(Error::InvalidParameter(format!(
                    "unknown pool `{s}` (expected all, transformers or ids:a,b,...)"
                ))),
            },
        }
    }
}

impl Pool {
    /// Learner ids of `bundle` admitted by the filter, in column order.
    pub fn select(&self, bundle: &DatasetBundle) -> Result<Vec<String>> {
        let ids = bundle.learner_ids();
        let chosen: Vec<String> = match self {
            Pool::All => ids.to_vec(),
            Pool::Transformers => ids
                .iter()
                .filter(|id| bundle.category(id) == Some(LearnerCategory::Transformer))
                .cloned()
                .collect(),
            Pool::Ids(wanted) => {
                if let Some(bad) = wanted.iter().find(|w| !ids.contains(w)) {
                    return Err(DataError::UnknownLearner(bad.clone()).into());
                }
                ids.iter().filter(|id| wanted.contains(id)).cloned().collect()
            }
        };
        if chosen.is_empty() {
            return Err(Error::EmptyLearnerSet);
        }
        Ok(chosen)
    }
}

/// The JSON config file: every key optional, same names as the flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    val: Option<PathBuf>,
    test: Option<PathBuf>,
    meta: Option<PathBuf>,
    classes: Option<usize>,
    dataset: Option<String>,
    method: Option<String>,
    pool: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    greedy: Option<bool>,
    s_max: Option<usize>,
    t_init: Option<f64>,
    t_min: Option<f64>,
    cooling_rate: Option<f64>,
    wmv_literal_eq3: Option<bool>,
    search_rule: Option<String>,
    shapley_method: Option<String>,
    shapley_samples: Option<usize>,
    shapley_game: Option<String>,
    stack_lr: Option<f64>,
    stack_epochs: Option<usize>,
    stack_l2: Option<f64>,
    bayes_alpha: Option<f64>,
    random_trials: Option<usize>,
    random_p: Option<f64>,
    trace: Option<PathBuf>,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub val: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub meta: Option<PathBuf>,
    pub classes: Option<usize>,
    pub dataset: Option<String>,
    pub methods: Vec<Method>,
    pub pool: Pool,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub threads: usize,
    pub hec: HecConfig,
    pub stacking: StackingParams,
    pub shapley: ShapleyParams,
    pub bayes_alpha: f64,
    pub random: RandomParams,
    pub trace: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            val: None,
            test: None,
            meta: None,
            classes: None,
            dataset: None,
            methods: vec![Method::Hec],
            pool: Pool::All,
            out: None,
            seed: 0,
            threads: 0,
            hec: HecConfig::default(),
            stacking: StackingParams::default(),
            shapley: ShapleyParams::default(),
            bayes_alpha: 1.0,
            random: RandomParams::default(),
            trace: None,
        }
    }
}

fn parse_search_rule(s: &str) -> Result<SearchRule> {
    match s {
        "weighted" => Ok(SearchRule::Weighted),
        "majority" => Ok(SearchRule::Majority),
        _ => Err(Error::InvalidParameter(format!("unknown search rule `{s}`"))),
    }
}

fn parse_game(s: &str) -> Result<ShapleyGame> {
    match s {
        "majority" => Ok(ShapleyGame::Majority),
        "weighted" => Ok(ShapleyGame::Weighted),
        _ => Err(Error::InvalidParameter(format!("unknown shapley game `{s}`"))),
    }
}

impl RunConfig {
    /// Reads `--config` if given, then applies the flags on top.
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                    context: format!("reading config {}", path.display()),
                    source,
                })?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let mut c = RunConfig {
            val: args.val.clone().or(file.val),
            test: args.test.clone().or(file.test),
            meta: args.meta.clone().or(file.meta),
            classes: args.classes.or(file.classes),
            dataset: args.dataset.clone().or(file.dataset),
            out: args.out.clone().or(file.out),
            trace: args.trace.clone().or(file.trace),
            ..RunConfig::default()
        };
        if let Some(m) = args.method.as_deref().or(file.method.as_deref()) {
            c.methods = Method::parse_list(m)?;
        }
        if let Some(p) = args.pool.as_deref().or(file.pool.as_deref()) {
            c.pool = p.parse()?;
        }
        c.seed = args.seed.or(file.seed).unwrap_or(0);
        c.threads = args.threads.or(file.threads).unwrap_or(0);

        let h = &mut c.hec;
        h.greedy = args.greedy || file.greedy.unwrap_or(false);
        if let Some(s) = args.s_max.or(file.s_max) {
            h.max_seed_size = s;
        }
        if let Some(t) = args.t_init.or(file.t_init) {
            h.t_init = t;
        }
        if let Some(t) = args.t_min.or(file.t_min) {
            h.t_min = t;
        }
        if let Some(r) = args.cooling_rate.or(file.cooling_rate) {
            h.cooling_rate = r;
        }
        if args.wmv_literal_eq3 || file.wmv_literal_eq3.unwrap_or(false) {
            h.normalization = WeightNormalization::WithinCategory;
        }
        if let Some(r) = args.search_rule.as_deref().or(file.search_rule.as_deref()) {
            h.search_rule = parse_search_rule(r)?;
        }
        h.validate()?;

        if let Some(m) = args.shapley_method.as_deref().or(file.shapley_method.as_deref()) {
            c.shapley.method = m.parse()?;
        }
        if let Some(n) = args.shapley_samples.or(file.shapley_samples) {
            c.shapley.samples = n;
        }
        if let Some(g) = args.shapley_game.as_deref().or(file.shapley_game.as_deref()) {
            c.shapley.game = parse_game(g)?;
        }
        if c.shapley.samples == 0 && c.shapley.method != ShapleyMethod::Exact {
            return Err(Error::InvalidParameter("--shapley-samples must be >= 1".into()));
        }

        if let Some(x) = args.stack_lr.or(file.stack_lr) {
            c.stacking.learning_rate = x;
        }
        if let Some(x) = args.stack_epochs.or(file.stack_epochs) {
            c.stacking.epochs = x;
        }
        if let Some(x) = args.stack_l2.or(file.stack_l2) {
            c.stacking.l2 = x;
        }
        c.stacking.validate()?;

        c.bayes_alpha = args.bayes_alpha.or(file.bayes_alpha).unwrap_or(1.0);
        if !(c.bayes_alpha.is_finite() && c.bayes_alpha > 0.0) {
            return Err(Error::InvalidParameter("--bayes-alpha must be positive".into()));
        }
        if let Some(x) = args.random_trials.or(file.random_trials) {
            c.random.trials = x;
        }
        if let Some(x) = args.random_p.or(file.random_p) {
            c.random.p = x;
        }
        if c.random.trials < 1 || !(0.0..=1.0).contains(&c.random.p) {
            return Err(Error::InvalidParameter(
                "--random-trials must be >= 1 and --random-p within [0,1]".into(),
            ));
        }
        Ok(c)
    }

    /// `--dataset`, else the validation file's parent directory name.
    pub fn dataset_id(&self) -> String {
        self.dataset.clone().unwrap_or_else(|| {
            self.val
                .as_deref()
                .and_then(|p| p.canonicalize().ok())
                .and_then(|p| p.parent().and_then(|d| d.file_name()).map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_else(|| "dataset".to_string())
        })
    }
}
