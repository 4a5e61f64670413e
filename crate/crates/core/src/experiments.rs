//! Config-driven Monte Carlo experiments: decorrelation curves under the OU
//! process, block resampling and the Poisson-driven block OU process, plus
//! eigenvalue variance, spacing, rigidity and delocalization surveys.
//!
//! Each `n` in a config gets its own trial row, so results are reproducible
//! from `master_seed` regardless of thread count. Every trial computes all
//! `(alpha, control)` cells of its row from the same draws.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{ou_advance, pdbou_ring_counts, PdbouPath, RingCounts};
use crate::eigen::{eigh, eigvalsh, Spectrum};
use crate::ensemble::{Ensemble, EntryLaw, VarianceProfile};
use crate::error::{Error, Result};
use crate::identities::pdbou_time_cap;
use crate::montecarlo::{collect_means, collect_rows};
use crate::parallel::Parallelism;
use crate::partition::{band_partition, entries_partition, AdmissiblePartition};
use crate::paths::{path_sup_m, PathGrid};
use crate::rng::SeedStream;
use crate::spectral::{classical_position, gap_tol, hat_index, max_coordinate, overlap_sq_spectra};
use crate::stats::{frequency, quantile_estimate, MCEstimate};

/// CSV header of result files.
pub const CSV_HEADER: &str = "kind,n,alpha,control_name,control_value,mean,std_error,trials,wall_ms";

pub const MIN_TRIALS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OuDecorrelation,
    PdbouDecorrelation,
    ResamplingDecorrelation,
    EigenvalueVariance,
    SpacingSurvey,
    RigiditySurvey,
    DelocalizationSurvey,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::OuDecorrelation => "ou_decorrelation",
            Self::PdbouDecorrelation => "pdbou_decorrelation",
            Self::ResamplingDecorrelation => "resampling_decorrelation",
            Self::EigenvalueVariance => "eigenvalue_variance",
            Self::SpacingSurvey => "spacing_survey",
            Self::RigiditySurvey => "rigidity_survey",
            Self::DelocalizationSurvey => "delocalization_survey",
        }
    }
}

/// Eigenvalue rank, fixed or as a fraction of `n` (`α = ⌈qn⌉`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Index(usize),
    Quantile(f64),
}

impl AlphaSpec {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let alpha = match self {
            AlphaSpec::Index(a) => a,
            AlphaSpec::Quantile(q) => {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::invalid(format!("alpha quantile must lie in (0, 1], got {q}")));
                }
                ((q * n as f64).ceil() as usize).max(1)
            }
        };
        if alpha == 0 || alpha > n {
            return Err(Error::invalid(format!("alpha = {alpha} out of range for n = {n}")));
        }
        Ok(alpha)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSpec {
    #[default]
    Goe,
    Wigner,
    Checkerboard { lo: f64, hi: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub law: EntryLaw,
}

impl EnsembleSpec {
    pub fn profile(&self, n: usize) -> Result<VarianceProfile> {
        match self.profile {
            ProfileSpec::Goe => VarianceProfile::goe(n),
            ProfileSpec::Wigner => VarianceProfile::wigner(n),
            ProfileSpec::Checkerboard { lo, hi } => VarianceProfile::checkerboard(n, lo, hi),
        }
    }

    pub fn build(&self, n: usize) -> Result<Ensemble> {
        Ensemble::new(self.profile(n)?, self.law)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionSpec {
    #[default]
    Entries,
    Band {
        width: usize,
    },
    File {
        path: PathBuf,
    },
}

impl PartitionSpec {
    pub fn build(&self, n: usize) -> Result<AdmissiblePartition> {
        match self {
            PartitionSpec::Entries => entries_partition(n),
            PartitionSpec::Band { width } => band_partition(n, *width),
            PartitionSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let p = AdmissiblePartition::from_text(&text)?;
                if p.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
                }
                Ok(p)
            }
        }
    }
}

fn default_one() -> f64 {
    1.0
}
fn default_quantiles() -> Vec<f64> {
    vec![0.5]
}
fn default_deltas() -> Vec<f64> {
    vec![0.3]
}
fn default_log_powers() -> Vec<f64> {
    vec![1.0, 2.0]
}
fn default_epsilons() -> Vec<f64> {
    vec![0.25]
}
fn default_path_grid() -> usize {
    33
}
fn default_true() -> bool {
    true
}

/// Kind-specific knobs. Unused fields are ignored by a given kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    #[serde(default = "default_one")]
    pub tau: f64,
    #[serde(default = "default_one")]
    pub eta: f64,
    /// Rescaled controls: `u` for OU, `c` for resampling.
    #[serde(default)]
    pub controls: Vec<f64>,
    /// Resample counts, used instead of `controls` when nonempty.
    #[serde(default)]
    pub k_list: Vec<usize>,
    /// Times for the block OU process.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Add the `k = m` row and the independent-pair baseline.
    #[serde(default = "default_true")]
    pub include_full: bool,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_log_powers")]
    pub log_powers: Vec<f64>,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Points of the one-block resampling path; 0 disables the path rows.
    #[serde(default = "default_path_grid")]
    pub path_grid: usize,
    #[serde(default)]
    pub path_trials: Option<u64>,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        serde_json::from_value(json!({})).expect("all params have defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_list: Vec<usize>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<AlphaSpec>,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub params: ExperimentParams,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_alphas() -> Vec<AlphaSpec> {
    vec![AlphaSpec::Index(1)]
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, n_list: Vec<usize>, alphas: Vec<AlphaSpec>, trials: u64, master_seed: u64) -> Self {
        Self {
            kind,
            n_list,
            alphas,
            ensemble: EnsembleSpec::default(),
            partition: PartitionSpec::default(),
            params: ExperimentParams::default(),
            trials,
            master_seed,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config; a missing file is [`Error::ConfigNotFound`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::ConfigNotFound(path.display().to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.alphas.is_empty() {
            return Err(Error::invalid("n_list and alphas must be nonempty"));
        }
        if self.trials < MIN_TRIALS {
            return Err(Error::invalid(format!("trials must be at least {MIN_TRIALS}, got {}", self.trials)));
        }
        for &n in &self.n_list {
            if n == 0 {
                return Err(Error::invalid("n must be positive"));
            }
            for a in &self.alphas {
                a.resolve(n)?;
            }
        }
        self.ensemble.law.validate()?;
        let p = &self.params;
        if !(p.tau > 0.0) || !(p.eta > 0.0) {
            return Err(Error::invalid("tau and eta must be positive"));
        }
        let gaussian_only = matches!(self.kind, ExperimentKind::OuDecorrelation | ExperimentKind::PdbouDecorrelation);
        if gaussian_only && self.ensemble.law != EntryLaw::Gaussian {
            return Err(Error::invalid("OU dynamics need the gaussian entry law"));
        }
        let nonempty = |v: usize, what: &str| {
            if v == 0 {
                Err(Error::invalid(format!("{what} must be nonempty for {}", self.kind.name())))
            } else {
                Ok(())
            }
        };
        match self.kind {
            ExperimentKind::OuDecorrelation => nonempty(p.controls.len(), "params.controls")?,
            ExperimentKind::ResamplingDecorrelation => nonempty(p.controls.len() + p.k_list.len(), "params.controls or params.k_list")?,
            ExperimentKind::PdbouDecorrelation => nonempty(p.times.len(), "params.times")?,
            ExperimentKind::SpacingSurvey => nonempty(p.quantiles.len(), "params.quantiles")?,
            ExperimentKind::DelocalizationSurvey => nonempty(p.epsilons.len(), "params.epsilons")?,
            _ => {}
        }
        if p.controls.iter().chain(&p.times).any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(Error::invalid("controls and times must be finite and nonnegative"));
        }
        if p.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::invalid("quantiles must lie in [0, 1]"));
        }
        Ok(())
    }

    fn alphas_for(&self, n: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for a in &self.alphas {
            let a = a.resolve(n)?;
            if !out.contains(&a) {
                out.push(a);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: ExperimentKind,
    pub n: usize,
    /// `None` for statistics over the whole spectrum.
    pub alpha: Option<usize>,
    pub control_name: String,
    pub control_value: f64,
    pub estimate: MCEstimate,
    pub wall_ms: f64,
    /// Auxiliary per-row values (times, resample counts, reference curves).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let alpha = self.alpha.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.3}",
            self.kind.name(),
            self.n,
            alpha,
            self.control_name,
            self.control_value,
            self.estimate.mean,
            self.estimate.std_error,
            self.estimate.trials,
            self.wall_ms
        )
    }

    /// Equality on every column except wall time.
    pub fn same_values(&self, other: &ResultRow) -> bool {
        self.kind == other.kind
            && self.n == other.n
            && self.alpha == other.alpha
            && self.control_name == other.control_name
            && self.control_value.to_bits() == other.control_value.to_bits()
            && self.estimate.mean.to_bits() == other.estimate.mean.to_bits()
            && self.estimate.std_error.to_bits() == other.estimate.std_error.to_bits()
            && self.estimate.trials == other.estimate.trials
            && self.extra.len() == other.extra.len()
            && self.extra.iter().zip(&other.extra).all(|(a, b)| a.0 == b.0 && a.1.to_bits() == b.1.to_bits())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub degenerate_redraws: u64,
    /// Requested cells that cannot be realized (e.g. `u` beyond its range).
    pub skipped: Vec<String>,
    pub code_version: String,
}

impl ExperimentResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_line());
            s.push('\n');
        }
        s
    }

    pub fn metadata(&self) -> Value {
        json!({
            "kind": self.config.kind,
            "config": self.config,
            "master_seed": self.config.master_seed,
            "code_version": self.code_version,
            "degenerate_redraws": self.degenerate_redraws,
            "skipped": self.skipped,
            "rows": self.rows,
        })
    }

    /// Rows for one `(n, alpha, control_name)`, in control order.
    pub fn series(&self, n: usize, alpha: Option<usize>, control_name: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.n == n && r.alpha == alpha && r.control_name == control_name).collect()
    }

    pub fn find(&self, n: usize, alpha: Option<usize>, control_name: &str, control_value: f64) -> Option<&ResultRow> {
        self.series(n, alpha, control_name).into_iter().find(|r| (r.control_value - control_value).abs() <= 1e-12 * (1.0 + control_value.abs()))
    }

    pub fn same_values(&self, other: &ExperimentResult) -> bool {
        self.rows.len() == other.rows.len() && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_values(b))
    }

    /// Writes `<path>` (CSV) and its sidecar `<path stem>.meta.json`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let meta = metadata_path(path);
        write_atomic(path, self.to_csv().as_bytes())?;
        write_atomic(&meta, serde_json::to_string_pretty(&self.metadata())?.as_bytes())?;
        Ok(meta)
    }
}

pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// `α̂^{2/3} n^{1/3}`.
pub fn edge_scale(n: usize, alpha: usize) -> Result<f64> {
    Ok((hat_index(alpha, n)? as f64).powf(2.0 / 3.0) * (n as f64).cbrt())
}

/// OU time at which `(1 − e^{−τt})·α̂^{2/3}n^{1/3} = u`, if reachable.
pub fn ou_time_for_control(u: f64, n: usize, alpha: usize, tau: f64) -> Result<Option<f64>> {
    let s = edge_scale(n, alpha)?;
    if u == 0.0 {
        return Ok(Some(0.0));
    }
    Ok((u < s).then(|| -(-u / s).ln_1p() / tau))
}

/// `kν·α̂^{2/3}n^{−5/3}`.
pub fn resampling_control(k: usize, nu: usize, n: usize, alpha: usize) -> Result<f64> {
    Ok((k * nu) as f64 * (hat_index(alpha, n)? as f64).powf(2.0 / 3.0) * (n as f64).powf(-5.0 / 3.0))
}

/// `tη(1∧τ)²α̂^{2/3}n^{1/3}`.
pub fn pdbou_control(t: f64, eta: f64, tau: f64, n: usize, alpha: usize) -> Result<f64> {
    Ok(t * eta * tau.min(1.0).powi(2) * edge_scale(n, alpha)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_with(cfg, &Parallelism::resolve(None))
}

pub fn run_with(cfg: &ExperimentConfig, par: &Parallelism) -> Result<ExperimentResult> {
    cfg.validate()?;
    par.install(|| match cfg.kind {
        ExperimentKind::OuDecorrelation => run_ou_decorrelation(cfg),
        ExperimentKind::PdbouDecorrelation => run_pdbou_decorrelation(cfg),
        ExperimentKind::ResamplingDecorrelation => run_resampling_decorrelation(cfg),
        ExperimentKind::EigenvalueVariance => run_eigenvalue_variance(cfg),
        ExperimentKind::SpacingSurvey => run_spacing_survey(cfg),
        ExperimentKind::RigiditySurvey => run_rigidity_survey(cfg),
        ExperimentKind::DelocalizationSurvey => run_delocalization_survey(cfg),
    })?
}

struct Builder<'a> {
    cfg: &'a ExperimentConfig,
    rows: Vec<ResultRow>,
    redraws: u64,
    skipped: Vec<String>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Self { cfg, rows: Vec::new(), redraws: 0, skipped: Vec::new() }
    }

    fn row(&mut self, n: usize, alpha: Option<usize>, name: &str, value: f64, est: MCEstimate, wall_ms: f64) -> &mut ResultRow {
        self.rows.push(ResultRow {
            kind: self.cfg.kind,
            n,
            alpha,
            control_name: name.into(),
            control_value: value,
            estimate: est,
            wall_ms,
            extra: BTreeMap::new(),
        });
        self.rows.last_mut().expect("just pushed")
    }

    fn finish(self) -> ExperimentResult {
        ExperimentResult {
            config: self.cfg.clone(),
            rows: self.rows,
            degenerate_redraws: self.redraws,
            skipped: self.skipped,
            code_version: crate::version_string(),
        }
    }
}

fn row_id(n_index: usize, sub: u64) -> u64 {
    n_index as u64 * 8 + sub
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn exact_one(trials: u64) -> MCEstimate {
    MCEstimate { mean: 1.0, std_error: 0.0, trials }
}

/// One decorrelation cell: a rank and a position on the control axis.
#[derive(Clone, Copy, Debug)]
struct Cell {
    alpha: usize,
    control: f64,
    /// Index into the sorted list of distinct perturbation levels.
    level: usize,
}

fn distinct_levels<T: PartialOrd + Copy>(values: &mut Vec<T>) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    values.dedup_by(|a, b| a == b);
}

fn level_of<T: PartialEq>(levels: &[T], v: &T) -> usize {
    levels.iter().position(|l| l == v).expect("level registered")
}

/// `m̂(u) = E⟨v_α(G(0)), v_α(G(t))⟩²` on a stationary OU trajectory, with
/// `t` solving `(1 − e^{−τt})α̂^{2/3}n^{1/3} = u`.
pub fn run_ou_decorrelation(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    let tau = cfg.params.tau;
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let mut times = Vec::new();
        let mut raw = Vec::new();
        for alpha in cfg.alphas_for(n)? {
            for &u in &cfg.params.controls {
                match ou_time_for_control(u, n, alpha, tau)? {
                    Some(t) => {
                        times.push(t);
                        raw.push((alpha, u, t));
                    }
                    None => out.skipped.push(format!(
                        "n={n} alpha={alpha} u={u}: beyond the reachable range u < {:.4}",
                        edge_scale(n, alpha)?
                    )),
                }
            }
        }
        distinct_levels(&mut times);
        let cells: Vec<Cell> = raw.iter().map(|&(alpha, control, t)| Cell { alpha, control, level: level_of(&times, &t) }).collect();
        let (means, redraws) = collect_means(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let g0 = ens.sample(rng);
            let s0 = eigh(&g0)?;
            let mut spectra: Vec<Option<Spectrum>> = Vec::with_capacity(times.len());
            let mut g = g0;
            let mut prev = 0.0;
            for &t in &times {
                if t == 0.0 {
                    spectra.push(None);
                    continue;
                }
                g = ou_advance(&g, t - prev, tau, &ens.profile, rng)?;
                prev = t;
                spectra.push(Some(eigh(&g)?));
            }
            cells
                .iter()
                .map(|c| match &spectra[c.level] {
                    None => s0.ensure_simple(c.alpha).map(|_| 1.0),
                    Some(s) => overlap_sq_spectra(&s0, s, c.alpha),
                })
                .collect()
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        for (c, est) in cells.iter().zip(means) {
            let t = times[c.level];
            let est = if t == 0.0 { exact_one(est.trials) } else { est };
            out.row(n, Some(c.alpha), "u", c.control, est, wall).extra.insert("t".into(), t);
        }
    }
    Ok(out.finish())
}

/// Resample counts for one `(n, alpha)`: explicit `k_list`, or `c` values
/// mapped to `k = round(c n^{5/3} / (ν α̂^{2/3}))`.
fn resample_counts(cfg: &ExperimentConfig, p: &AdmissiblePartition, alpha: usize, skipped: &mut Vec<String>) -> Result<Vec<(f64, usize)>> {
    let n = p.dim();
    let m = p.m();
    let unit = resampling_control(1, p.nu(), n, alpha)?;
    let mut out = Vec::new();
    if cfg.params.k_list.is_empty() {
        for &c in &cfg.params.controls {
            let k = (c / unit).round() as usize;
            if k > m {
                skipped.push(format!("n={n} alpha={alpha} c={c}: needs k = {k} > m = {m}"));
            } else {
                out.push((c, k));
            }
        }
    } else {
        for &k in &cfg.params.k_list {
            if k > m {
                skipped.push(format!("n={n} alpha={alpha} k={k}: exceeds m = {m}"));
            } else {
                out.push((k as f64 * unit, k));
            }
        }
    }
    if cfg.params.include_full && !out.iter().any(|&(_, k)| k == m) {
        out.push((m as f64 * unit, m));
    }
    Ok(out)
}

/// `m̂(c) = E⟨v_α(X), v_α(X^A)⟩²` with `A` a uniform union of `k` blocks.
/// Within a trial the unions are nested prefixes of one random block order.
pub fn run_resampling_decorrelation(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let p = cfg.partition.build(n)?;
        let alphas = cfg.alphas_for(n)?;
        let mut ks = Vec::new();
        let mut raw = Vec::new();
        for &alpha in &alphas {
            for (c, k) in resample_counts(cfg, &p, alpha, &mut out.skipped)? {
                ks.push(k);
                raw.push((alpha, c, k));
            }
        }
        distinct_levels(&mut ks);
        let cells: Vec<Cell> = raw.iter().map(|&(alpha, control, k)| Cell { alpha, control, level: level_of(&ks, &k) }).collect();
        let (means, redraws) = collect_means(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let x = ens.sample(rng);
            let y = ens.sample(rng);
            let order = p.random_order(rng);
            let sx = eigh(&x)?;
            let mut xa = x.clone();
            let mut done = 0;
            let mut spectra: Vec<Option<Spectrum>> = Vec::with_capacity(ks.len());
            for &k in &ks {
                for &b in &order[done..k] {
                    for &(i, j) in p.block(b).upper() {
                        xa.set(i, j, y.get(i, j));
                    }
                }
                done = k;
                spectra.push(if k == 0 { None } else { Some(eigh(&xa)?) });
            }
            cells
                .iter()
                .map(|c| match &spectra[c.level] {
                    None => sx.ensure_simple(c.alpha).map(|_| 1.0),
                    Some(s) => overlap_sq_spectra(&sx, s, c.alpha),
                })
                .collect()
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        for (c, est) in cells.iter().zip(means) {
            let k = ks[c.level];
            let est = if k == 0 { exact_one(est.trials) } else { est };
            out.row(n, Some(c.alpha), "c", c.control, est, wall).extra.insert("k".into(), k as f64);
        }
        if cfg.params.include_full {
            let start = Instant::now();
            let (base, redraws) = collect_means(cfg.master_seed, row_id(ni, 1), cfg.trials, |rng| {
                let sx = eigh(&ens.sample(rng))?;
                let sy = eigh(&ens.sample(rng))?;
                alphas.iter().map(|&a| overlap_sq_spectra(&sx, &sy, a)).collect()
            })?;
            out.redraws += redraws;
            let wall = elapsed_ms(start);
            for (&alpha, est) in alphas.iter().zip(base) {
                let c = resampling_control(p.m(), p.nu(), n, alpha)?;
                out.row(n, Some(alpha), "independent_pair", c, est, wall);
            }
        }
    }
    Ok(out.finish())
}

/// `m̂(u) = E⟨v_α(G), v_α(G(K))⟩²` for the block OU process at the
/// configured times, with `u = tη(1∧τ)²α̂^{2/3}n^{1/3}`.
///
/// Rows also carry the matching points of the two limiting regimes: the
/// expected resample count `m(1 − e^{−ηt})` and the OU control at the
/// entrywise-equivalent time `ηt(1 − e^{−τ})`.
pub fn run_pdbou_decorrelation(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    let (tau, eta) = (cfg.params.tau, cfg.params.eta);
    let cap = pdbou_time_cap(tau, eta);
    let mut times = cfg.params.times.clone();
    distinct_levels(&mut times);
    if let Some(&t) = times.iter().find(|&&t| t > cap) {
        return Err(Error::TimeCap { t, cap });
    }
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let p = cfg.partition.build(n)?;
        let alphas = cfg.alphas_for(n)?;
        let (means, redraws) = collect_means(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let g = ens.sample(rng);
            let s0 = eigh(&g)?;
            let mut path = PdbouPath::new(&g, &p, &ens.profile, tau, SeedStream::new(rng.random(), 0).rng())?;
            let mut counts = RingCounts::zeros(&p);
            let mut prev = 0.0;
            let mut row = Vec::with_capacity(times.len() * alphas.len());
            for &t in &times {
                if t == 0.0 {
                    for &a in &alphas {
                        s0.ensure_simple(a)?;
                        row.push(1.0);
                    }
                    continue;
                }
                let inc = pdbou_ring_counts(&p, eta, t - prev, rng)?;
                prev = t;
                let summed = counts.per_block().iter().zip(inc.per_block()).map(|(a, b)| a + b).collect();
                counts = RingCounts::new(&p, summed)?;
                let st = eigh(&path.matrix_at(&counts)?)?;
                for &a in &alphas {
                    row.push(overlap_sq_spectra(&s0, &st, a)?);
                }
            }
            Ok(row)
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        let m = p.m() as f64;
        for (ti, &t) in times.iter().enumerate() {
            for (ai, &alpha) in alphas.iter().enumerate() {
                let est = means[ti * alphas.len() + ai];
                let est = if t == 0.0 { exact_one(est.trials) } else { est };
                let u = pdbou_control(t, eta, tau, n, alpha)?;
                let scale = edge_scale(n, alpha)?;
                let fraction = -(-eta * t).exp_m1();
                let ou_time = eta * t * -(-tau).exp_m1();
                let row = out.row(n, Some(alpha), "u", u, est, wall);
                row.extra.insert("t".into(), t);
                row.extra.insert("time_cap".into(), cap);
                row.extra.insert("matched_k".into(), m * fraction);
                row.extra.insert("matched_ou_time".into(), ou_time);
                row.extra.insert("matched_ou_u".into(), -(-ou_time).exp_m1() * scale);
            }
        }
    }
    Ok(out.finish())
}

/// `Var̂(λ_α)·α̂^{2/3}n^{1/3}`.
pub fn run_eigenvalue_variance(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let alphas = cfg.alphas_for(n)?;
        let (table, redraws) = collect_rows(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let vals = eigvalsh(&ens.sample(rng))?;
            Ok(alphas.iter().map(|&a| vals[a - 1]).collect())
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        for (ai, &alpha) in alphas.iter().enumerate() {
            let scale = edge_scale(n, alpha)?;
            let var = MCEstimate::variance_of(&table.column(ai));
            out.row(n, Some(alpha), "scale", scale, var.scaled(scale), wall).extra.insert("variance".into(), var.mean);
        }
    }
    Ok(out.finish())
}

fn simple_values(vals: Vec<f64>) -> Result<Vec<f64>> {
    let tol = gap_tol(vals[0].abs().max(vals[vals.len() - 1].abs()));
    for (a, w) in vals.windows(2).enumerate() {
        if w[0] - w[1] <= tol {
            return Err(Error::NearDegenerate { alpha: a + 1, gap: w[0] - w[1], tol });
        }
    }
    Ok(vals)
}

fn nearest_gap(vals: &[f64], alpha: usize) -> f64 {
    let a = alpha - 1;
    let above = if a > 0 { vals[a - 1] - vals[a] } else { f64::INFINITY };
    let below = if a + 1 < vals.len() { vals[a] - vals[a + 1] } else { f64::INFINITY };
    above.min(below)
}

/// Quantiles of `Δ_α n^{1/6} α̂^{1/3}` and small-gap frequencies
/// `P(Δ_α < n^{−1/6−δ} α̂^{−1/3})`.
pub fn run_spacing_survey(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        if n < 2 {
            return Err(Error::invalid("spacing survey needs n >= 2"));
        }
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let alphas = cfg.alphas_for(n)?;
        let scales: Vec<f64> =
            alphas.iter().map(|&a| Ok((n as f64).powf(1.0 / 6.0) * (hat_index(a, n)? as f64).cbrt())).collect::<Result<_>>()?;
        let (table, redraws) = collect_rows(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let vals = simple_values(eigvalsh(&ens.sample(rng))?)?;
            Ok(alphas.iter().zip(&scales).map(|(&a, s)| nearest_gap(&vals, a) * s).collect())
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        for (ai, &alpha) in alphas.iter().enumerate() {
            let x = table.column(ai);
            for &q in &cfg.params.quantiles {
                out.row(n, Some(alpha), "quantile", q, quantile_estimate(&x, q), wall);
            }
            for &delta in &cfg.params.deltas {
                let thr = (n as f64).powf(-delta);
                let freq = frequency(x.iter().map(|v| *v < thr));
                out.row(n, Some(alpha), "small_gap_delta", delta, freq, wall).extra.insert("threshold".into(), thr);
            }
            let min = x.iter().copied().fold(f64::INFINITY, f64::min);
            out.row(n, Some(alpha), "min", 0.0, MCEstimate { mean: min, std_error: 0.0, trials: x.len() as u64 }, wall);
        }
    }
    Ok(out.finish())
}

/// 0.99-quantile of `|λ_β − √n γ_β| β̂^{1/3} n^{1/6}` and the mean of `λ_β/√n`.
pub fn run_rigidity_survey(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let alphas = cfg.alphas_for(n)?;
        let sqrt_n = (n as f64).sqrt();
        let mut centers = Vec::new();
        let mut scales = Vec::new();
        for &b in &alphas {
            centers.push(sqrt_n * classical_position(n, b)?);
            scales.push((hat_index(b, n)? as f64).cbrt() * (n as f64).powf(1.0 / 6.0));
        }
        let (table, redraws) = collect_rows(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let vals = eigvalsh(&ens.sample(rng))?;
            let mut row = Vec::with_capacity(2 * alphas.len());
            for (bi, &b) in alphas.iter().enumerate() {
                row.push((vals[b - 1] - centers[bi]).abs() * scales[bi]);
                row.push(vals[b - 1] / sqrt_n);
            }
            Ok(row)
        })?;
        out.redraws += redraws;
        let wall = elapsed_ms(start);
        let ln = (n as f64).ln();
        for (bi, &b) in alphas.iter().enumerate() {
            let dev = table.column(2 * bi);
            let row = out.row(n, Some(b), "quantile", 0.99, quantile_estimate(&dev, 0.99), wall);
            row.extra.insert("classical_position".into(), centers[bi] / sqrt_n);
            for &l in &cfg.params.log_powers {
                row.extra.insert(format!("log_n_pow_{l}"), ln.powf(l));
            }
            out.row(n, Some(b), "mean_scaled_eigenvalue", 0.0, MCEstimate::from_samples(&table.column(2 * bi + 1)), wall);
        }
    }
    Ok(out.finish())
}

/// Distribution of `M·n^{1/2}` with `M = max_β ‖v_β‖_∞`, for single matrices
/// and as a supremum along one-block resampling paths.
pub fn run_delocalization_survey(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut out = Builder::new(cfg);
    let params = &cfg.params;
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        let start = Instant::now();
        let ens = cfg.ensemble.build(n)?;
        let sqrt_n = (n as f64).sqrt();
        let (samples, redraws) = crate::montecarlo::collect_samples(cfg.master_seed, row_id(ni, 0), cfg.trials, |rng| {
            let s = eigh(&ens.sample(rng))?;
            s.ensure_all_simple()?;
            Ok(max_coordinate(&s) * sqrt_n)
        })?;
        out.redraws += redraws;
        delocalization_rows(&mut out, n, "", &samples, elapsed_ms(start));

        if params.path_grid > 0 {
            let start = Instant::now();
            let p = cfg.partition.build(n)?;
            let grid = PathGrid::uniform(params.path_grid)?;
            let trials = params.path_trials.unwrap_or(cfg.trials);
            let (samples, redraws) = crate::montecarlo::collect_samples(cfg.master_seed, row_id(ni, 2), trials, |rng| {
                let x = ens.sample(rng);
                let b = rng.random_range(0..p.m());
                let mut y = x.clone();
                for &(i, j) in p.block(b).upper() {
                    y.set(i, j, ens.sample_entry(i, j, rng));
                }
                Ok(path_sup_m(&x, &y, &grid)? * sqrt_n)
            })?;
            out.redraws += redraws;
            delocalization_rows(&mut out, n, "path_", &samples, elapsed_ms(start));
        }
    }
    Ok(out.finish())
}

fn delocalization_rows(out: &mut Builder<'_>, n: usize, prefix: &str, scaled: &[f64], wall: f64) {
    let sqrt_n = (n as f64).sqrt();
    for &eps in &out.cfg.params.epsilons.clone() {
        let bound = (n as f64).powf(eps);
        let freq = frequency(scaled.iter().map(|v| *v <= bound));
        out.row(n, None, &format!("{prefix}epsilon"), eps, freq, wall).extra.insert("bound".into(), bound / sqrt_n);
    }
    for &q in &out.cfg.params.quantiles.clone() {
        out.row(n, None, &format!("{prefix}quantile"), q, quantile_estimate(scaled, q), wall);
    }
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    out.row(n, None, &format!("{prefix}min"), 0.0, MCEstimate { mean: min, std_error: 0.0, trials: scaled.len() as u64 }, wall);
}

/// Human-readable table of a result.
pub fn summary(res: &ExperimentResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} ({} rows, {} degenerate redraws)", res.config.kind.name(), res.rows.len(), res.degenerate_redraws);
    for r in &res.rows {
        let alpha = r.alpha.map(|a| a.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "  n={:<5} alpha={:<5} {}={:<10.4} mean={:.5} se={:.2e}",
            r.n, alpha, r.control_name, r.control_value, r.estimate.mean, r.estimate.std_error
        );
    }
    for k in &res.skipped {
        let _ = writeln!(s, "  skipped: {k}");
    }
    s
}
