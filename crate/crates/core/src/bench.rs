//! Benchmark harness: methods x tasks x preferences x repeats, with plain
//! text and CSV reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::baselines::MdpeConfig;
use crate::covr::{CachingBackend, GroundTruthOracle, HttpBackend, HttpConfig, InferenceResult, MllmBackend, RetryPolicy};
use crate::episode::EpisodeRecord;
use crate::method::{run_method, Method, MethodConfig};
use crate::metrics::{mean_std, sr_prd, sr_vrd};
use crate::render::RenderOptions;
use crate::scene::{PreferenceLabel, Task};
use crate::scenegen::{generate_episode, GenerationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    Oracle {
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Live endpoint from `VPI_API_BASE` / `VPI_API_KEY`.
    Http {
        #[serde(default)]
        model: Option<String>,
        #[serde(default)]
        cache_dir: Option<PathBuf>,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Oracle { noise: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpeSpec {
    #[serde(default = "default_tau")]
    pub tau_align: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub weights: BTreeMap<PreferenceLabel, f64>,
}

fn default_tau() -> f64 {
    MdpeConfig::default().tau_align
}

fn default_delta() -> f64 {
    MdpeConfig::default().delta
}

impl Default for MdpeSpec {
    fn default() -> Self {
        Self {
            tau_align: default_tau(),
            delta: default_delta(),
            weights: BTreeMap::new(),
        }
    }
}

impl MdpeSpec {
    pub fn to_config(&self) -> MdpeConfig {
        let mut cfg = MdpeConfig {
            tau_align: self.tau_align,
            delta: self.delta,
            ..MdpeConfig::default()
        };
        cfg.weights.extend(self.weights.iter().map(|(k, v)| (*k, *v)));
        cfg
    }
}

/// A benchmark run, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "all_tasks")]
    pub tasks: Vec<Task>,
    /// Empty means every preference each task supports.
    #[serde(default)]
    pub preferences: Vec<PreferenceLabel>,
    /// Episodes per (task, preference); defaults to 10, or 6 for household.
    #[serde(default)]
    pub repeats: Option<usize>,
    #[serde(default)]
    pub n_images: Option<usize>,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub mdpe: MdpeSpec,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_image_size")]
    pub image_size: u32,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn all_tasks() -> Vec<Task> {
    Task::ALL.to_vec()
}

fn default_retries() -> u32 {
    RetryPolicy::default().retries
}

fn default_image_size() -> u32 {
    RenderOptions::default().width
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            master_seed: 0,
            methods: all_methods(),
            tasks: all_tasks(),
            preferences: Vec::new(),
            repeats: None,
            n_images: None,
            backend: BackendSpec::default(),
            mdpe: MdpeSpec::default(),
            retries: default_retries(),
            image_size: default_image_size(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse benchmark spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("backend setup failed: {0}")]
    Backend(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed report CSV: {0}")]
    Csv(String),
}

impl BenchSpec {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let spec: BenchSpec = toml::from_str(text)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidSpec(m.to_string()));
        if self.methods.is_empty() || self.tasks.is_empty() {
            return bad("methods and tasks must be nonempty");
        }
        if self.repeats == Some(0) {
            return bad("repeats must be positive");
        }
        if self.image_size < 64 {
            return bad("image_size must be at least 64");
        }
        if let BackendSpec::Oracle { noise, .. } = self.backend {
            if !(0.0..=1.0).contains(&noise) {
                return bad("oracle noise must lie in [0, 1]");
            }
        }
        if self.cells().is_empty() {
            return bad("no task supports any of the listed preferences");
        }
        self.mdpe.to_config().check().map_err(|e| BenchError::InvalidSpec(e.to_string()))
    }

    pub fn repeats_for(&self, task: Task) -> usize {
        self.repeats.unwrap_or(match task {
            Task::Household => 6,
            _ => 10,
        })
    }

    /// (method, task, preference) in report order.
    pub fn cells(&self) -> Vec<(Method, Task, PreferenceLabel)> {
        let mut out = Vec::new();
        for method in Method::ALL.into_iter().filter(|m| self.methods.contains(m)) {
            for task in Task::ALL.into_iter().filter(|t| self.tasks.contains(t)) {
                for &pref in task.preferences() {
                    if self.preferences.is_empty() || self.preferences.contains(&pref) {
                        out.push((method, task, pref));
                    }
                }
            }
        }
        out
    }

    /// First episode seed of a (task, preference) cell; episodes use
    /// consecutive seeds, shared by every method.
    pub fn base_seed(&self, task: Task, pref: PreferenceLabel) -> u64 {
        let mut h = Sha256::new();
        h.update(format!("{}/{}/{}", self.master_seed, task.as_str(), pref.as_str()).as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("8 bytes")) >> 8
    }

    fn method_config(&self) -> MethodConfig {
        MethodConfig {
            mdpe: self.mdpe.to_config(),
            retry: RetryPolicy { retries: self.retries },
            render: RenderOptions {
                width: self.image_size,
                height: self.image_size,
                ..RenderOptions::default()
            },
        }
    }

    fn noise(&self) -> f64 {
        match self.backend {
            BackendSpec::Oracle { noise, .. } => noise,
            BackendSpec::Http { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub task: Task,
    pub preference: PreferenceLabel,
    pub episodes: usize,
    pub sr_prd: Option<f64>,
    pub sr_vrd_mean: Option<f64>,
    pub sr_vrd_std: Option<f64>,
    pub first_seed: u64,
    pub last_seed: u64,
    pub backend: String,
    pub noise: f64,
    /// Set when the cell failed; its rates are then absent.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub master_seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchmarkReport {
    pub fn failed_cells(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Audit record written per episode.
#[derive(Serialize)]
struct AuditRecord<'a> {
    method: Method,
    episode: &'a EpisodeRecord,
    result: &'a InferenceResult,
    sr_vrd: Option<f64>,
    correct: bool,
}

enum Backends {
    Oracle { noise: f64, seed: u64 },
    Shared(Arc<dyn MllmBackend>),
}

impl Backends {
    fn build(spec: &BackendSpec) -> Result<Self, BenchError> {
        Ok(match spec {
            BackendSpec::Oracle { noise, seed } => Backends::Oracle {
                noise: *noise,
                seed: *seed,
            },
            BackendSpec::Http { model, cache_dir } => {
                let mut cfg = HttpConfig::from_env().map_err(|e| BenchError::Backend(e.to_string()))?;
                if let Some(m) = model {
                    cfg.model = m.clone();
                }
                let http = HttpBackend::new(cfg).map_err(|e| BenchError::Backend(e.to_string()))?;
                let backend: Arc<dyn MllmBackend> = match cache_dir {
                    Some(dir) => Arc::new(CachingBackend::persistent(http, dir)?),
                    None => Arc::new(CachingBackend::new(http)),
                };
                Backends::Shared(backend)
            }
        })
    }

    fn id(&self) -> String {
        match self {
            Backends::Oracle { noise, seed } => format!("oracle(p={noise},seed={seed})"),
            Backends::Shared(b) => b.id(),
        }
    }
}

fn run_cell(
    spec: &BenchSpec,
    backends: &Backends,
    (method, task, pref): (Method, Task, PreferenceLabel),
    audit: Option<&Path>,
) -> BenchRow {
    let repeats = spec.repeats_for(task);
    let first_seed = spec.base_seed(task, pref);
    let mut row = BenchRow {
        method,
        task,
        preference: pref,
        episodes: repeats,
        sr_prd: None,
        sr_vrd_mean: None,
        sr_vrd_std: None,
        first_seed,
        last_seed: first_seed + repeats as u64 - 1,
        backend: if method.uses_backend() { backends.id() } else { "none".into() },
        noise: if method.uses_backend() { spec.noise() } else { 0.0 },
        error: None,
    };
    let config = spec.method_config();
    let mut predicted = Vec::with_capacity(repeats);
    let mut vrd = Vec::with_capacity(repeats);

    for i in 0..repeats {
        let seed = first_seed + i as u64;
        let outcome = (|| -> Result<(), String> {
            let mut gen = GenerationConfig::new(task, pref, seed);
            gen.n_images = spec.n_images;
            let episode = generate_episode(&gen).map_err(|e| format!("seed {seed}: {e}"))?;
            let oracle;
            let backend: &dyn MllmBackend = match backends {
                Backends::Oracle { noise, seed } => {
                    oracle = GroundTruthOracle::new(episode.clone(), *noise, *seed);
                    &oracle
                }
                Backends::Shared(b) => b.as_ref(),
            };
            let result = run_method(method, task, &episode.scenes, Some(backend), &config)
                .map_err(|e| format!("seed {seed}: {e}"))?;
            let episode_vrd = if method.predicts_residuals() {
                Some(
                    sr_vrd(&result.residuals, &episode.ground_truth_residuals)
                        .map_err(|e| format!("seed {seed}: {e}"))?,
                )
            } else {
                None
            };
            if let Some(dir) = audit {
                let path = dir
                    .join(method.as_str())
                    .join(task.as_str())
                    .join(pref.as_str())
                    .join(format!("{seed}.json"));
                let record = AuditRecord {
                    method,
                    episode: &episode,
                    result: &result,
                    sr_vrd: episode_vrd,
                    correct: result.preference == Some(pref),
                };
                let text = serde_json::to_string_pretty(&record).expect("audit record serializes");
                std::fs::create_dir_all(path.parent().expect("has parent"))
                    .and_then(|_| std::fs::write(&path, text))
                    .map_err(|e| format!("writing {}: {e}", path.display()))?;
            }
            predicted.push(result.preference);
            vrd.extend(episode_vrd);
            Ok(())
        })();
        if let Err(e) = outcome {
            row.error = Some(e);
            return row;
        }
    }

    let truth = vec![pref; predicted.len()];
    row.sr_prd = sr_prd(&predicted, &truth).ok();
    if method.predicts_residuals() {
        let (m, s) = mean_std(&vrd);
        row.sr_vrd_mean = Some(m);
        row.sr_vrd_std = Some(s);
    }
    row
}

/// Runs every cell of `spec`. Cells run in parallel; a failing cell is
/// recorded in its row and does not stop the run. With `audit_dir`, one
/// JSON file per episode is written beneath it.
pub fn run_benchmark(spec: &BenchSpec, audit_dir: Option<&Path>) -> Result<BenchmarkReport, BenchError> {
    spec.check()?;
    let backends = Backends::build(&spec.backend)?;
    let rows = spec
        .cells()
        .into_par_iter()
        .map(|cell| run_cell(spec, &backends, cell, audit_dir))
        .collect();
    Ok(BenchmarkReport {
        master_seed: spec.master_seed,
        rows,
    })
}

/// Report columns for a task: header and the preferences pooled into it.
fn task_columns(task: Task) -> Vec<(&'static str, Vec<PreferenceLabel>)> {
    use PreferenceLabel::*;
    let quadrants = vec![ClusterQuadrant1, ClusterQuadrant2, ClusterQuadrant3, ClusterQuadrant4];
    match task {
        Task::Block => vec![
            ("quadrant", quadrants),
            ("vertical", vec![AlignVertical]),
            ("horizontal", vec![AlignHorizontal]),
        ],
        Task::Polygon => vec![("color", vec![GroupByColor]), ("shape", vec![GroupByShape])],
        Task::Household => {
            let spatial = task
                .preferences()
                .iter()
                .copied()
                .filter(|p| p.family().is_spatial())
                .collect();
            let semantic = task
                .preferences()
                .iter()
                .copied()
                .filter(|p| !p.family().is_spatial())
                .collect();
            vec![("spatial", spatial), ("semantic", semantic)]
        }
    }
}

enum Cell {
    Missing,
    Failed,
    Value(String),
}

/// Pooled SR_PRD over rows (episode weighted).
fn pooled_prd(rows: &[&BenchRow]) -> Cell {
    if rows.is_empty() {
        return Cell::Missing;
    }
    if rows.iter().any(|r| r.error.is_some()) {
        return Cell::Failed;
    }
    let n: usize = rows.iter().map(|r| r.episodes).sum();
    let hits: f64 = rows.iter().map(|r| r.sr_prd.unwrap_or(0.0) * r.episodes as f64).sum();
    Cell::Value(format!("{:.2}", hits / n as f64))
}

/// Pooled population mean and std of per-episode SR_VRD, recombined from
/// each row's (count, mean, std).
fn pooled_vrd(rows: &[&BenchRow]) -> Cell {
    let scored: Vec<&&BenchRow> = rows.iter().filter(|r| r.sr_vrd_mean.is_some()).collect();
    if rows.iter().any(|r| r.error.is_some()) {
        return Cell::Failed;
    }
    if scored.is_empty() {
        return Cell::Missing;
    }
    let n: f64 = scored.iter().map(|r| r.episodes as f64).sum();
    let mean = scored
        .iter()
        .map(|r| r.episodes as f64 * r.sr_vrd_mean.unwrap_or(0.0))
        .sum::<f64>()
        / n;
    let second = scored
        .iter()
        .map(|r| {
            let (m, s) = (r.sr_vrd_mean.unwrap_or(0.0), r.sr_vrd_std.unwrap_or(0.0));
            r.episodes as f64 * (s * s + m * m)
        })
        .sum::<f64>()
        / n;
    let std = (second - mean * mean).max(0.0).sqrt();
    Cell::Value(format!("{mean:.2}±{std:.2}"))
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Missing => "-".into(),
            Cell::Failed => "failed".into(),
            Cell::Value(v) => v.clone(),
        }
    }
}

fn table(out: &mut String, header: &[String], body: &[Vec<String>]) {
    let cols = header.len();
    let width = |c: usize| {
        body.iter()
            .map(|r| r[c].chars().count())
            .chain(std::iter::once(header[c].chars().count()))
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..cols).map(width).collect();
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let _ = writeln!(out, "{}", rule.join("-+-"));
    for r in body {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Plain-text tables: one per task with SR_PRD per preference column and
/// pooled SR_VRD, then the per-cell detail and any failures.
pub fn render_report(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "master seed: {}", report.master_seed);
    for task in Task::ALL {
        let task_rows: Vec<&BenchRow> = report.rows.iter().filter(|r| r.task == task).collect();
        if task_rows.is_empty() {
            continue;
        }
        let columns: Vec<(&str, Vec<PreferenceLabel>)> = task_columns(task)
            .into_iter()
            .filter(|(_, prefs)| task_rows.iter().any(|r| prefs.contains(&r.preference)))
            .collect();
        let _ = writeln!(out, "\nTask: {task} (SR_PRD per preference, SR_VRD mean±std)");
        let mut header = vec!["Model".to_string()];
        header.extend(columns.iter().map(|(name, _)| name.to_string()));
        header.push("SR_VRD".into());
        let mut body = Vec::new();
        for method in Method::ALL {
            let rows: Vec<&BenchRow> = task_rows.iter().copied().filter(|r| r.method == method).collect();
            if rows.is_empty() {
                continue;
            }
            let mut line = vec![method.display_name().to_string()];
            for (_, prefs) in &columns {
                let sel: Vec<&BenchRow> = rows.iter().copied().filter(|r| prefs.contains(&r.preference)).collect();
                line.push(pooled_prd(&sel).text());
            }
            line.push(pooled_vrd(&rows).text());
            body.push(line);
        }
        table(&mut out, &header, &body);
    }

    let _ = writeln!(out, "\nCells");
    let header: Vec<String> = ["method", "task", "preference", "episodes", "SR_PRD", "SR_VRD", "seeds", "backend"]
        .map(String::from)
        .to_vec();
    let body: Vec<Vec<String>> = sorted_rows(report)
        .into_iter()
        .map(|r| {
            let prd = match (&r.error, r.sr_prd) {
                (Some(_), _) => "failed".to_string(),
                (None, Some(v)) => format!("{v:.2}"),
                (None, None) => "-".to_string(),
            };
            let vrd = match (r.sr_vrd_mean, r.sr_vrd_std) {
                (Some(m), Some(s)) => format!("{m:.2}±{s:.2}"),
                _ => "-".to_string(),
            };
            vec![
                r.method.as_str().to_string(),
                r.task.as_str().to_string(),
                r.preference.as_str().to_string(),
                r.episodes.to_string(),
                prd,
                vrd,
                format!("{}..={}", r.first_seed, r.last_seed),
                r.backend.clone(),
            ]
        })
        .collect();
    table(&mut out, &header, &body);

    let failures: Vec<&BenchRow> = report.rows.iter().filter(|r| r.error.is_some()).collect();
    if !failures.is_empty() {
        let _ = writeln!(out, "\nFailed cells");
        for r in failures {
            let _ = writeln!(
                out,
                "{} {} {}: {}",
                r.method,
                r.task,
                r.preference,
                r.error.as_deref().unwrap_or_default()
            );
        }
    }
    out
}

fn sorted_rows(report: &BenchmarkReport) -> Vec<&BenchRow> {
    let mut rows: Vec<&BenchRow> = report.rows.iter().collect();
    rows.sort_by_key(|r| (r.method, r.task, r.preference.index()));
    rows
}

const CSV_HEADER: [&str; 12] = [
    "method",
    "task",
    "preference",
    "episodes",
    "sr_prd",
    "sr_vrd_mean",
    "sr_vrd_std",
    "first_seed",
    "last_seed",
    "backend",
    "noise",
    "error",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with one line per cell; floats use shortest round-trip formatting.
pub fn report_to_csv(report: &BenchmarkReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in sorted_rows(report) {
        w.write_record([
            r.method.as_str().to_string(),
            r.task.as_str().to_string(),
            r.preference.as_str().to_string(),
            r.episodes.to_string(),
            opt(r.sr_prd),
            opt(r.sr_vrd_mean),
            opt(r.sr_vrd_std),
            r.first_seed.to_string(),
            r.last_seed.to_string(),
            r.backend.clone(),
            r.noise.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    let bytes = w.into_inner().expect("in-memory flush");
    format!("# master_seed={}\n{}", report.master_seed, String::from_utf8(bytes).expect("utf8"))
}

pub fn report_from_csv(text: &str) -> Result<BenchmarkReport, BenchError> {
    let err = |m: String| BenchError::Csv(m);
    let (first, rest) = text.split_once('\n').ok_or_else(|| err("empty input".into()))?;
    let master_seed = first
        .strip_prefix("# master_seed=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| err("missing master_seed line".into()))?;
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let float = |i: usize| -> Result<Option<f64>, BenchError> {
            let s = field(i);
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(format!("bad number {s:?}")))
            }
        };
        let int = |i: usize| -> Result<u64, BenchError> {
            field(i).parse().map_err(|_| err(format!("bad integer {:?}", field(i))))
        };
        rows.push(BenchRow {
            method: field(0).parse().map_err(err)?,
            task: field(1).parse().map_err(|e: crate::scene::SceneError| err(e.to_string()))?,
            preference: field(2).parse().map_err(|e: crate::scene::SceneError| err(e.to_string()))?,
            episodes: int(3)? as usize,
            sr_prd: float(4)?,
            sr_vrd_mean: float(5)?,
            sr_vrd_std: float(6)?,
            first_seed: int(7)?,
            last_seed: int(8)?,
            backend: field(9).to_string(),
            noise: float(10)?.unwrap_or(0.0),
            error: Some(field(11).to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(BenchmarkReport { master_seed, rows })
}

/// Writes `report.txt`, `report.csv` and `report.json` into `dir`.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.txt"), render_report(report))?;
    std::fs::write(dir.join("report.csv"), report_to_csv(report))?;
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report).expect("report serializes"),
    )?;
    Ok(())
}
