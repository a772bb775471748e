//! Experiment runner: flat `key=value` configuration, training per measured
//! qubit count, evaluation on a dense grid, CSV and sidecar output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::circuits::{hea, hva_cluster, identity_circuit, qcnn, Circuit};
use crate::error::{Error, Result};
use crate::fisher::{bound_chain, cfi_mixture_closed, FisherReport, Sample, StateFamily};
use crate::hamiltonians::{cluster, ising, schwinger, FieldTerm, SchwingerParams, CLUSTER_DEFAULT_EPS};
use crate::mixture::{
    optimal_observable_matrix, qfi_closed, validate_closed_forms, variance_full, variance_partial, Measured,
    MixtureModel, QfiClosedForm,
};
use crate::observables::naimark_embed_state;
use crate::states::State;
use crate::training::{equidistant, make_trainset, train, TrainConfig, TrainResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: [&str; 10] = [
    "alpha",
    "prediction",
    "sq_error",
    "variance",
    "inv_cfi",
    "inv_qfi",
    "analytic_variance",
    "adjusted_variance",
    "m",
    "flags",
];

/// Hamiltonian families are defined beyond the label range; widening lets the
/// grid endpoints get finite-difference derivatives too.
const FAMILY_MARGIN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Mixture,
    Ising,
    Schwinger,
    Cluster,
    Analytic,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Mixture => "mixture",
            ExperimentKind::Ising => "ising",
            ExperimentKind::Schwinger => "schwinger",
            ExperimentKind::Cluster => "cluster",
            ExperimentKind::Analytic => "analytic",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mixture" => ExperimentKind::Mixture,
            "ising" => ExperimentKind::Ising,
            "schwinger" => ExperimentKind::Schwinger,
            "cluster" => ExperimentKind::Cluster,
            "analytic" => ExperimentKind::Analytic,
            _ => return Err(Error::Config(format!("unknown experiment '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ansatz {
    Hea,
    /// Open-chain QCNN.
    Qcnn,
    /// QCNN with periodic convolutions.
    QcnnRing,
    Hva,
    Identity,
    /// Circuit read from a text file.
    File(PathBuf),
}

impl Ansatz {
    pub fn name(&self) -> String {
        match self {
            Ansatz::Hea => "hea".into(),
            Ansatz::Qcnn => "qcnn".into(),
            Ansatz::QcnnRing => "qcnn_ring".into(),
            Ansatz::Hva => "hva".into(),
            Ansatz::Identity => "identity".into(),
            Ansatz::File(p) => format!("file:{}", p.display()),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "hea" => Ansatz::Hea,
            "qcnn" => Ansatz::Qcnn,
            "qcnn_ring" => Ansatz::QcnnRing,
            "hva" => Ansatz::Hva,
            "identity" => Ansatz::Identity,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ansatz::File(PathBuf::from(p)),
                _ => return Err(Error::Config(format!("unknown ansatz '{s}'"))),
            },
        })
    }

    /// Circuit on `n` qubits.
    pub fn build(&self, n: usize, layers: usize) -> Result<Circuit> {
        match self {
            Ansatz::Hea => hea(n, layers),
            Ansatz::Qcnn => qcnn(n, false),
            Ansatz::QcnnRing => qcnn(n, true),
            Ansatz::Hva => hva_cluster(n, layers),
            Ansatz::Identity => Ok(identity_circuit(n)),
            Ansatz::File(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let c: Circuit = text.parse()?;
                if c.n() != n {
                    return Err(Error::Config(format!("circuit file has {} qubits, experiment needs {n}", c.n())));
                }
                Ok(c)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub m: Vec<usize>,
    pub ansatz: Ansatz,
    pub layers: usize,
    pub train_points: usize,
    pub eval_points: usize,
    pub lo: f64,
    pub hi: f64,
    pub r: f64,
    pub eps: f64,
    pub schwinger: SchwingerParams,
    pub naimark: Option<usize>,
    pub train: TrainConfig,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            n: 5,
            m: vec![1, 3, 5],
            ansatz: Ansatz::Hea,
            layers: 5,
            train_points: 10,
            eval_points: 101,
            lo: 0.0,
            hi: 1.0,
            r: 0.25,
            eps: CLUSTER_DEFAULT_EPS,
            schwinger: SchwingerParams::default(),
            naimark: None,
            train: TrainConfig::default(),
            out: PathBuf::from(format!("{}.csv", kind.name())),
        };
        match kind {
            ExperimentKind::Mixture => base,
            ExperimentKind::Analytic => Self { m: vec![3], ..base },
            ExperimentKind::Ising => Self { n: 4, m: vec![1, 4], layers: 4, lo: 0.05, hi: 2.0, ..base },
            ExperimentKind::Schwinger => {
                Self { n: 8, m: vec![1, 2], ansatz: Ansatz::Qcnn, lo: -2.0, hi: 1.0, ..base }
            }
            ExperimentKind::Cluster => Self { n: 8, m: vec![1, 3], ansatz: Ansatz::QcnnRing, layers: 10, ..base },
        }
    }

    /// Builds a config from `key=value` pairs applied in order; the
    /// `experiment` key must appear among them.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let pairs: Vec<(&str, &str)> = pairs.into_iter().collect();
        let kind = pairs
            .iter()
            .rev()
            .find(|(k, _)| *k == "experiment")
            .ok_or_else(|| Error::Config("missing 'experiment'".into()))?
            .1
            .parse()?;
        let mut cfg = Self::defaults(kind);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "experiment" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.experiment {
                    return Err(Error::Config(format!(
                        "experiment given as both '{}' and '{}'",
                        self.experiment.name(),
                        kind.name()
                    )));
                }
            }
            "n" => self.n = num(key, value)?,
            "m" => {
                self.m = value.split(',').map(|s| num(key, s.trim())).collect::<Result<_>>()?;
            }
            "ansatz" => self.ansatz = Ansatz::parse(value)?,
            "circuit" => self.ansatz = Ansatz::File(PathBuf::from(value)),
            "layers" => self.layers = num(key, value)?,
            "train_points" => self.train_points = num(key, value)?,
            "eval_points" => self.eval_points = num(key, value)?,
            "lo" => self.lo = num(key, value)?,
            "hi" => self.hi = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "eps" => self.eps = num(key, value)?,
            "w" => self.schwinger.w = num(key, value)?,
            "g" => self.schwinger.g = num(key, value)?,
            "eps0" => self.schwinger.eps0 = num(key, value)?,
            "field" => self.schwinger.field = FieldTerm::parse(value).map_err(|e| Error::Config(e.to_string()))?,
            "naimark" => {
                let a: usize = num(key, value)?;
                self.naimark = (a > 0).then_some(a);
            }
            "seed" => self.train.seed = num(key, value)?,
            "restarts" => self.train.restarts = num(key, value)?,
            "max_iters" => self.train.max_iters = num(key, value)?,
            "w_ls" => self.train.w_ls = num(key, value)?,
            "w_var" => self.train.w_var = num(key, value)?,
            "grad_step" => self.train.grad_step = num(key, value)?,
            "conv_tol" => self.train.conv_tol = num(key, value)?,
            "lambda_jitter" => self.train.lambda_jitter = num(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n == 0 || self.n > 10 {
            return fail(format!("n must be in 1..=10, got {}", self.n));
        }
        let total = self.total_qubits();
        if total > 12 {
            return fail(format!("{total} qubits including ancillas exceeds 12"));
        }
        if self.m.is_empty() {
            return fail("m list is empty".into());
        }
        if let Some(&bad) = self.m.iter().find(|&&m| m == 0 || m > total) {
            return fail(format!("m={bad} outside 1..={total}"));
        }
        if self.train_points < 2 || self.eval_points < 2 {
            return fail("train_points and eval_points must be at least 2".into());
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return fail(format!("empty label range [{}, {}]", self.lo, self.hi));
        }
        match self.experiment {
            ExperimentKind::Mixture | ExperimentKind::Analytic => {
                if self.n < 2 {
                    return fail("mixture experiments need n ≥ 2".into());
                }
                if !(0.0..=1.0).contains(&self.r) {
                    return fail(format!("r must lie in [0, 1], got {}", self.r));
                }
                if self.lo < 0.0 || self.hi > 1.0 {
                    return fail("mixture labels must lie in [0, 1]".into());
                }
            }
            ExperimentKind::Schwinger if self.n % 2 == 1 => {
                return fail("the Schwinger chain needs an even number of sites".into());
            }
            _ => {}
        }
        if self.experiment == ExperimentKind::Analytic {
            if self.naimark.is_some() {
                return fail("naimark does not apply to the analytic experiment".into());
            }
            if let Some(&bad) = self.m.iter().find(|&&m| m > self.n) {
                return fail(format!("m={bad} exceeds n={}", self.n));
            }
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn total_qubits(&self) -> usize {
        self.n + self.naimark.unwrap_or(0)
    }

    /// Canonical `key=value` lines, one per setting, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let t = &self.train;
        let mut v = vec![
            ("experiment", self.experiment.name().to_string()),
            ("n", self.n.to_string()),
            ("m", self.m.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")),
            ("ansatz", self.ansatz.name()),
            ("layers", self.layers.to_string()),
            ("train_points", self.train_points.to_string()),
            ("eval_points", self.eval_points.to_string()),
            ("lo", self.lo.to_string()),
            ("hi", self.hi.to_string()),
        ];
        match self.experiment {
            ExperimentKind::Mixture | ExperimentKind::Analytic => v.push(("r", self.r.to_string())),
            ExperimentKind::Cluster => v.push(("eps", self.eps.to_string())),
            ExperimentKind::Schwinger => {
                let s = &self.schwinger;
                v.push(("w", s.w.to_string()));
                v.push(("g", s.g.to_string()));
                v.push(("eps0", s.eps0.to_string()));
                v.push(("field", s.field.name().to_string()));
            }
            ExperimentKind::Ising => {}
        }
        v.extend([
            ("naimark", self.naimark.unwrap_or(0).to_string()),
            ("seed", t.seed.to_string()),
            ("restarts", t.restarts.to_string()),
            ("max_iters", t.max_iters.to_string()),
            ("w_ls", t.w_ls.to_string()),
            ("w_var", t.w_var.to_string()),
            ("grad_step", t.grad_step.to_string()),
            ("conv_tol", t.conv_tol.to_string()),
            ("lambda_jitter", t.lambda_jitter.to_string()),
            ("out", self.out.display().to_string()),
        ]);
        v.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// The labeled state family on the system qubits, before any embedding.
    pub fn family(&self) -> Result<StateFamily> {
        let n = self.n;
        let (lo, hi) = (self.lo - FAMILY_MARGIN, self.hi + FAMILY_MARGIN);
        match self.experiment {
            ExperimentKind::Mixture | ExperimentKind::Analytic => self.mixture_model()?.family(),
            ExperimentKind::Ising => StateFamily::ground_states(lo, hi, move |h| ising(n, h)),
            ExperimentKind::Schwinger => {
                let p = self.schwinger;
                StateFamily::ground_states(lo, hi, move |mu| schwinger(n, mu, p))
            }
            ExperimentKind::Cluster => {
                let eps = self.eps;
                StateFamily::ground_states(lo, hi, move |x| cluster(n, x, eps))
            }
        }
    }

    pub fn mixture_model(&self) -> Result<MixtureModel> {
        MixtureModel::ghz(self.n, self.r)
    }

    /// [`family`](Self::family) with `naimark` ancillas appended in `|0⟩`.
    pub fn embedded_family(&self) -> Result<StateFamily> {
        let fam = self.family()?;
        let Some(a) = self.naimark else {
            return Ok(fam);
        };
        let (lo, hi) = fam.range();
        StateFamily::new(lo, hi, move |x| {
            let s = fam.sample(x)?;
            Ok(Sample { state: naimark_embed_state(&s.state, a)?, degenerate: s.degenerate })
        })
    }

    pub fn eval_grid(&self) -> Vec<f64> {
        equidistant(self.lo, self.hi, self.eval_points)
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

/// Reads `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub alpha: f64,
    pub prediction: f64,
    pub sq_error: f64,
    pub variance: f64,
    pub inv_cfi: Option<f64>,
    pub inv_qfi: Option<f64>,
    pub analytic_variance: Option<f64>,
    pub adjusted_variance: Option<f64>,
    pub m: usize,
    pub flags: Vec<String>,
}

impl Row {
    fn from_report(r: &FisherReport, m: usize, analytic: Option<f64>, converged: bool) -> Self {
        let mut flags: Vec<String> = r.diagnostics.iter().map(|d| d.tag().to_string()).collect();
        if !converged {
            flags.push("not_converged".into());
        }
        Self {
            alpha: r.alpha,
            prediction: r.expectation,
            sq_error: (r.alpha - r.expectation).powi(2),
            variance: r.variance,
            inv_cfi: r.inv_cfi,
            inv_qfi: r.inv_qfi,
            analytic_variance: analytic,
            adjusted_variance: r.adjusted_variance,
            m,
            flags,
        }
    }

    /// Whether the bound chain holds within slack or the row carries a flag.
    pub fn chain_ok(&self) -> bool {
        if !self.flags.is_empty() {
            return true;
        }
        let slack = |x: f64| crate::fisher::CHAIN_SLACK * x.abs().max(1.0);
        let a = match (self.adjusted_variance, self.inv_cfi) {
            (Some(adj), Some(ic)) => adj >= ic - slack(ic),
            _ => true,
        };
        let b = match (self.inv_cfi, self.inv_qfi) {
            (Some(ic), Some(iq)) => ic >= iq - slack(iq),
            _ => true,
        };
        a && b
    }

    fn fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.alpha.to_string(),
            self.prediction.to_string(),
            self.sq_error.to_string(),
            self.variance.to_string(),
            opt(self.inv_cfi),
            opt(self.inv_qfi),
            opt(self.analytic_variance),
            opt(self.adjusted_variance),
            self.m.to_string(),
            self.flags.join(";"),
        ]
    }
}

/// Training outcome for one measured-qubit count.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredRun {
    pub m: usize,
    pub train: Option<TrainResult>,
    pub rows: Vec<Row>,
}

impl MeasuredRun {
    pub fn mean_sq_error(&self) -> f64 {
        self.rows.iter().map(|r| r.sq_error).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_variance(&self) -> f64 {
        self.rows.iter().map(|r| r.variance).sum::<f64>() / self.rows.len() as f64
    }

    pub fn max_sq_error(&self) -> f64 {
        self.rows.iter().fold(0.0, |a, r| a.max(r.sq_error))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub runs: Vec<MeasuredRun>,
}

/// Runs the experiment without touching the filesystem (except to read a
/// circuit file).
pub fn run(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let runs = match config.experiment {
        ExperimentKind::Analytic => run_analytic(config)?,
        _ => run_trained(config)?,
    };
    Ok(ExperimentOutput { config: config.clone(), runs })
}

fn analytic_variance(config: &ExperimentConfig, alpha: f64, m: usize) -> Option<f64> {
    match config.experiment {
        ExperimentKind::Mixture | ExperimentKind::Analytic => Some(if m >= config.n {
            variance_full(alpha, config.n, config.r)
        } else {
            variance_partial(alpha, m)
        }),
        _ => None,
    }
}

fn run_trained(config: &ExperimentConfig) -> Result<Vec<MeasuredRun>> {
    let family = config.embedded_family()?;
    let set = make_trainset(&family, config.train_points, config.lo, config.hi)?;
    let circuit = config.ansatz.build(config.total_qubits(), config.layers)?;
    let grid = config.eval_grid();
    let mut runs = Vec::with_capacity(config.m.len());
    for &m in &config.m {
        let result = train(&circuit, m, &set, &config.train)?;
        let obs = result.observable(&circuit, m)?;
        let reports = bound_chain(&obs, &result.theta, &family, &grid)?;
        let rows = reports
            .iter()
            .map(|r| Row::from_report(r, m, analytic_variance(config, r.alpha, m), result.converged))
            .collect();
        runs.push(MeasuredRun { m, train: Some(result), rows });
    }
    Ok(runs)
}

fn run_analytic(config: &ExperimentConfig) -> Result<Vec<MeasuredRun>> {
    let check = validate_closed_forms()?;
    if !check.passed() {
        return Err(Error::InvalidArgument(format!("closed-form self-test failed: {check:?}")));
    }
    let model = config.mixture_model()?;
    let grid = config.eval_grid();
    let mut runs = Vec::with_capacity(config.m.len());
    for &m in &config.m {
        let which = if m >= config.n { Measured::Full } else { Measured::Partial(m) };
        let obs = optimal_observable_matrix(&model, which)?;
        let p1 = obs.probabilities(&State::Mixed(model.rho1()));
        let p2 = obs.probabilities(&State::Mixed(model.rho2()));
        let mut rows = Vec::with_capacity(grid.len());
        for &a in &grid {
            let st = State::Mixed(model.state(a)?);
            let prediction = obs.expectation(&st);
            let variance = obs.variance(&st);
            let mut flags = Vec::new();
            let inv_cfi = match cfi_mixture_closed(a, &p1, &p2) {
                Ok(ic) => Some(1.0 / ic),
                Err(Error::ZeroDenominator(_)) | Err(Error::CfiDivergence { .. }) => {
                    flags.push("cfi_divergence".to_string());
                    None
                }
                Err(e) => return Err(e),
            };
            let inv_qfi = if a > 0.0 && a < 1.0 {
                Some(1.0 / qfi_closed(a, config.n, config.r, QfiClosedForm::Corrected))
            } else {
                flags.push("boundary".to_string());
                None
            };
            rows.push(Row {
                alpha: a,
                prediction,
                sq_error: (a - prediction).powi(2),
                variance,
                inv_cfi,
                inv_qfi,
                analytic_variance: analytic_variance(config, a, m),
                // The optimum is unbiased with unit slope.
                adjusted_variance: Some(variance),
                m,
                flags,
            });
        }
        runs.push(MeasuredRun { m, train: None, rows });
    }
    Ok(runs)
}

impl ExperimentOutput {
    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.runs.iter().flat_map(|r| r.rows.iter())
    }

    pub fn run_for(&self, m: usize) -> Option<&MeasuredRun> {
        self.runs.iter().find(|r| r.m == m)
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in self.rows() {
            w.write_record(row.fields()).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn meta_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "qreadout {VERSION}");
        for (k, v) in self.config.to_pairs() {
            let _ = writeln!(s, "{k}={v}");
        }
        for run in &self.runs {
            let _ = write!(s, "[m={}] mean_sq_error={} mean_variance={}", run.m, run.mean_sq_error(), run.mean_variance());
            if let Some(t) = &run.train {
                let losses: Vec<String> = t.restart_losses.iter().map(|l| l.to_string()).collect();
                let _ = write!(
                    s,
                    " loss={} converged={} iterations={} restart_losses={}",
                    t.loss,
                    t.converged,
                    t.iterations,
                    losses.join(",")
                );
            }
            let _ = writeln!(s);
        }
        s
    }

    /// Writes the CSV to `config.out` and the sidecar next to it.
    pub fn write(&self) -> Result<(PathBuf, PathBuf)> {
        let out = self.config.out.clone();
        if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(&out, self.csv_bytes()?)?;
        let meta = sidecar_path(&out);
        fs::write(&meta, self.meta_text())?;
        Ok((out, meta))
    }
}

/// `<out>.meta.txt`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.txt");
    PathBuf::from(s)
}

/// Groups CSV rows by `m`, for consumers that read results back.
pub fn read_csv(bytes: &[u8]) -> Result<BTreeMap<usize, Vec<BTreeMap<String, String>>>> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    let mut out: BTreeMap<usize, Vec<BTreeMap<String, String>>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
        let row: BTreeMap<String, String> =
            headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect();
        let m = row.get("m").and_then(|v| v.parse().ok()).ok_or_else(|| Error::Io("row without m".into()))?;
        out.entry(m).or_default().push(row);
    }
    Ok(out)
}
