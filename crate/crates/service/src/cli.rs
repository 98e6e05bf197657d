//! `vpi` command line. Usage errors exit 2, runtime failures exit 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use vpi_core::bench::{render_report, run_benchmark, write_report, BenchSpec};
use vpi_core::episode::EpisodeRecord;
use vpi_core::method::{Method, MethodConfig};
use vpi_core::render::{render_png, RenderOptions};
use vpi_core::scene::{PreferenceLabel, Task};
use vpi_core::scenegen::{generate_episode, GenerationConfig, GenerationError};

use crate::backend::{infer_episode, BackendChoice};
use crate::server::{router, AppState};
use crate::session::Session;

#[derive(Debug, Parser)]
#[command(name = "vpi", version, about = "Visual preference inference for tabletop rearrangement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one labeled episode with its rendered images.
    Generate {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        preference: PreferenceLabel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of images; defaults to one per object plus the start.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        size: u32,
    },
    /// Run a benchmark from a TOML spec and write its reports.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Defaults to `seed-<master_seed>`.
        #[arg(long)]
        run_id: Option<String>,
        /// Skip per-episode audit files.
        #[arg(long)]
        no_audit: bool,
    },
    /// Render every scene of an episode file.
    Render {
        #[arg(long)]
        episode: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        size: u32,
        /// Draw object names under the glyphs.
        #[arg(long)]
        annotate: bool,
    },
    /// Infer the preference behind an episode and print the result as JSON.
    Infer {
        #[arg(long)]
        episode: PathBuf,
        #[arg(long, default_value = "covr")]
        method: Method,
        /// `oracle[:p=..,seed=..,label=..]` or `http[:model=..,cache=DIR]`.
        #[arg(long, default_value = "oracle")]
        backend: BackendChoice,
    },
    /// Start the session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        /// Directory of built UI assets served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Sessions are restored from and saved to this file.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

/// A failure that should read as a usage error.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn run(cli: Cli) -> ExitCode {
    let outcome = match cli.command {
        Command::Generate {
            task,
            preference,
            seed,
            n,
            out,
            size,
        } => generate(task, preference, seed, n, &out, size),
        Command::Bench {
            config,
            out,
            run_id,
            no_audit,
        } => bench(&config, &out, run_id, !no_audit),
        Command::Render {
            episode,
            out,
            size,
            annotate,
        } => render(&episode, &out, size, annotate),
        Command::Infer {
            episode,
            method,
            backend,
        } => infer(&episode, method, &backend),
        Command::Serve {
            addr,
            static_dir,
            snapshot,
        } => serve(&addr, static_dir, snapshot),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => match e.downcast_ref::<Usage>() {
            Some(u) => Cli::command().error(clap::error::ErrorKind::InvalidValue, u).exit(),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}

fn render_options(size: u32, annotate: bool) -> RenderOptions {
    RenderOptions {
        width: size,
        height: size,
        annotate,
        ..RenderOptions::default()
    }
}

fn write_pngs(episode: &EpisodeRecord, dir: &Path, options: &RenderOptions) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut names = Vec::new();
    for (i, scene) in episode.scenes.iter().enumerate() {
        let name = PathBuf::from(format!("image_{i:02}.png"));
        let png = render_png(scene, options)?;
        std::fs::write(dir.join(&name), png).with_context(|| format!("writing {}", dir.join(&name).display()))?;
        names.push(name);
    }
    Ok(names)
}

fn generate(task: Task, preference: PreferenceLabel, seed: u64, n: Option<usize>, out: &Path, size: u32) -> Result<ExitCode> {
    let mut config = GenerationConfig::new(task, preference, seed);
    config.n_images = n;
    let mut episode = match generate_episode(&config) {
        Ok(e) => e,
        Err(GenerationError::InvalidConfig(m)) => bail!(Usage(m)),
        Err(e) => return Err(e.into()),
    };
    let dir = out
        .join("episodes")
        .join(task.as_str())
        .join(preference.as_str())
        .join(seed.to_string());
    let names = write_pngs(&episode, &dir, &render_options(size, false))?;
    episode.image_paths = Some(names);
    std::fs::write(dir.join("episode.json"), episode.to_json())?;
    println!("{}", dir.display());
    Ok(ExitCode::SUCCESS)
}

fn bench(config: &Path, out: &Path, run_id: Option<String>, audit: bool) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let spec = BenchSpec::from_toml(&text).map_err(|e| Usage(e.to_string()))?;
    let run_dir = out.join(run_id.unwrap_or_else(|| format!("seed-{}", spec.master_seed)));
    let audit_dir = run_dir.join("episodes");
    let report = run_benchmark(&spec, audit.then_some(audit_dir.as_path()))?;
    write_report(&report, &run_dir)?;
    print!("{}", render_report(&report));
    if report.failed_cells() > 0 {
        eprintln!("{} benchmark cell(s) failed", report.failed_cells());
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn read_episode(path: &Path) -> Result<EpisodeRecord> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(EpisodeRecord::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn render(episode: &Path, out: &Path, size: u32, annotate: bool) -> Result<ExitCode> {
    let episode = read_episode(episode)?;
    if size < 64 {
        bail!(Usage(format!("--size must be at least 64, got {size}")));
    }
    for name in write_pngs(&episode, out, &render_options(size, annotate))? {
        println!("{}", out.join(name).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn infer(episode: &Path, method: Method, backend: &BackendChoice) -> Result<ExitCode> {
    let episode = read_episode(episode)?;
    let result = infer_episode(&episode, method, backend, &MethodConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&result)?);
    Ok(ExitCode::SUCCESS)
}

fn serve(addr: &str, static_dir: Option<PathBuf>, snapshot: Option<PathBuf>) -> Result<ExitCode> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let app = AppState::new(MethodConfig::default());
        if let Some(path) = snapshot.as_ref().filter(|p| p.exists()) {
            let text = std::fs::read_to_string(path)?;
            let sessions: Vec<Session> =
                serde_json::from_str(&text).with_context(|| format!("parsing snapshot {}", path.display()))?;
            app.restore(sessions).await;
        }
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(app.clone(), static_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        if let Some(path) = snapshot {
            let sessions = app.snapshot().await;
            std::fs::write(&path, serde_json::to_string(&sessions)?)
                .with_context(|| format!("writing snapshot {}", path.display()))?;
        }
        Ok(ExitCode::SUCCESS)
    })
}
