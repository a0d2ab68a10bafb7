use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use steklov_core::eigen::{EigenOptions, Sign};
use steklov_core::geometry::{build_cell_mesh, build_perforated_domain_mesh, mesh_write, EpsilonLevel, DEFAULT_MAX_DOFS};
use steklov_core::homog::{compute_homogenized, HomogOptions, HomogenizedData, SignCase};
use steklov_core::spectra::{limit_mesh, solve_case_limits, solve_epsilon, CaseLimits, EpsilonOptions};
use steklov_core::study::{emit_reports, run_study_with, Format, NumericalError, Stage, StudyConfig, StudyError};

#[derive(Parser, Debug)]
#[command(name = "steklov", version, about = "Steklov spectra of periodically perforated domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the cell mesh and optionally the perforated domain at one level
    Mesh {
        #[command(flatten)]
        common: Common,
        /// Also build the perforated unit square at this level
        #[arg(long)]
        level: Option<usize>,
    },
    /// Solve the cell problems and write the homogenized data
    Cell {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the limit problems of the detected case
    Limit {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the perforated-domain problem at one level
    Eps {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: usize,
    },
    /// Run the full convergence study
    Study {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Study configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated report formats: csv, json, svg
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Worker threads for the level sweep
    #[arg(long)]
    threads: Option<usize>,
    /// Eigensolver seed
    #[arg(long)]
    seed: Option<u64>,
    /// Force the sign case: pos, neg or crit
    #[arg(long = "case-override")]
    case_override: Option<SignCase>,
}

impl Common {
    fn load(&self) -> Result<StudyConfig, StudyError> {
        let mut cfg = StudyConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(f) = &self.format {
            cfg.output.formats = f.clone();
        }
        if self.threads.is_some() {
            cfg.study.threads = self.threads;
        }
        if self.seed.is_some() {
            cfg.study.seed = self.seed;
        }
        if self.case_override.is_some() {
            cfg.study.case_override = self.case_override;
        }
        Ok(cfg)
    }
}

fn fail(stage: Stage) -> impl Fn(NumericalError) -> StudyError {
    move |source| StudyError::Numerical { stage, source }
}

fn eigen_options(cfg: &StudyConfig) -> EigenOptions {
    EigenOptions {
        seed: cfg.seed(),
        residual_tol: cfg.tolerances.eig_tol,
        ..EigenOptions::default()
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, StudyError> {
    let io = |p: &Path, e| StudyError::Io {
        path: p.display().to_string(),
        source: e,
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).map_err(|e| StudyError::Report(e.to_string()))?;
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn homogenize(cfg: &StudyConfig) -> Result<HomogenizedData, StudyError> {
    let (geometry, a, rho) = cfg.validate()?;
    let cell = build_cell_mesh(&geometry).map_err(|e| fail(Stage::Cell)(e.into()))?;
    let opts = HomogOptions {
        cg_tol: cfg.tolerances.cg_tol,
        tol_zero: cfg.tolerances.tol_zero,
        eigen: eigen_options(cfg),
        case_override: cfg.study.case_override,
        with_factorization: true,
    };
    compute_homogenized(&cell, &a, &rho, &opts).map_err(|e| fail(Stage::Cell)(e.into()))
}

fn limits(cfg: &StudyConfig, data: &HomogenizedData) -> Result<CaseLimits, StudyError> {
    let omega = limit_mesh(cfg.study.m_limit).map_err(|e| fail(Stage::Limit)(e.into()))?;
    solve_case_limits(data, &omega, cfg.study.k, &eigen_options(cfg)).map_err(|e| fail(Stage::Limit)(e.into()))
}

#[derive(Serialize)]
struct LimitEntry {
    sign: Sign,
    k: usize,
    value: f64,
}

#[derive(Serialize)]
struct EpsEntry {
    sign: Sign,
    k: usize,
    eigenvalue: f64,
    residual_norm: f64,
    normalization_residual: f64,
}

fn run(cli: Cli) -> Result<(), StudyError> {
    match cli.command {
        Command::Mesh { common, level } => {
            let cfg = common.load()?;
            let (geometry, _, _) = cfg.validate()?;
            let dir = &cfg.output.dir;
            let io = |p: &Path, e: steklov_core::geometry::GeometryError| StudyError::Io {
                path: p.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            };
            std::fs::create_dir_all(dir).map_err(|e| StudyError::Io {
                path: dir.display().to_string(),
                source: e,
            })?;
            let cell = build_cell_mesh(&geometry).map_err(|e| fail(Stage::Cell)(e.into()))?;
            let path = dir.join("cell.mesh");
            mesh_write(&cell, &path).map_err(|e| io(&path, e))?;
            println!("cell: {} nodes, {} triangles -> {}", cell.node_count(), cell.triangles.len(), path.display());
            if let Some(n) = level {
                let lvl = EpsilonLevel::new(n).map_err(|e| StudyError::Config(e.to_string()))?;
                let mesh = build_perforated_domain_mesh(&geometry, lvl, DEFAULT_MAX_DOFS)
                    .map_err(|e| fail(Stage::Level(n))(e.into()))?;
                let path = dir.join(format!("domain-{n}.mesh"));
                mesh_write(&mesh, &path).map_err(|e| io(&path, e))?;
                println!("n={n}: {} nodes, {} triangles -> {}", mesh.node_count(), mesh.triangles.len(), path.display());
            }
        }
        Command::Cell { common } => {
            let cfg = common.load()?;
            let data = homogenize(&cfg)?;
            let path = write_json(&cfg.output.dir, "homog.json", &data)?;
            println!("case {}: M_S = {:e}", data.case, data.m_s_rho);
            println!("q = [[{:e}, {:e}], [{:e}, {:e}]]", data.q.q11, data.q.q12, data.q.q12, data.q.q22);
            if let Some(c) = &data.critical {
                println!("nu^2 = {:e}", c.nu_sq);
            }
            if let Some(f) = &data.factorization {
                println!("lambda1- = {:e}, M_S(rho~) = {:e}", f.local.lambda1_neg, f.m_s_rho_tilde);
            }
            println!("-> {}", path.display());
        }
        Command::Limit { common } => {
            let cfg = common.load()?;
            let data = homogenize(&cfg)?;
            let lim = limits(&cfg, &data)?;
            let mut entries = Vec::new();
            for sign in [Sign::Positive, Sign::Negative] {
                for (k, p) in lim.side(sign).0.iter().enumerate() {
                    println!("{sign} k={}: {:e}", k + 1, p.value);
                    entries.push(LimitEntry {
                        sign,
                        k: k + 1,
                        value: p.value,
                    });
                }
            }
            write_json(&cfg.output.dir, "limits.json", &entries)?;
        }
        Command::Eps { common, level } => {
            let cfg = common.load()?;
            let (geometry, a, rho) = cfg.validate()?;
            let data = homogenize(&cfg)?;
            let lvl = EpsilonLevel::new(level).map_err(|e| StudyError::Config(e.to_string()))?;
            let opts = EpsilonOptions {
                k: cfg.study.k,
                eigen: eigen_options(&cfg),
                sanity: data.case != SignCase::Critical && data.factorization.is_none(),
                ..EpsilonOptions::default()
            };
            let spec = solve_epsilon(&geometry, lvl, &a, &rho, data.case, &opts)
                .map_err(|e| fail(Stage::Level(level))(e.into()))?;
            let mut entries = Vec::new();
            for sign in [Sign::Positive, Sign::Negative] {
                for (k, p) in spec.side(sign).iter().enumerate() {
                    println!("{sign} k={}: {:e} (residual {:.1e})", k + 1, p.eigenvalue, p.residual_norm);
                    entries.push(EpsEntry {
                        sign,
                        k: k + 1,
                        eigenvalue: p.eigenvalue,
                        residual_norm: p.residual_norm,
                        normalization_residual: p.normalization_residual,
                    });
                }
            }
            write_json(&cfg.output.dir, &format!("eps-{level}.json"), &entries)?;
        }
        Command::Study { common } => {
            let cfg = common.load()?;
            let report = run_study_with(&cfg, cfg.study.threads)?;
            for note in &report.notes {
                log::warn!("{note}");
            }
            for row in &report.rows {
                println!(
                    "{} k={} n={}: diagnostic {:e}, limit {:e}, rel gap {:.3e}",
                    row.sign, row.k, row.n, row.diagnostic, row.limit, row.rel_gap
                );
            }
            for path in emit_reports(&report, &cfg.output.dir, &cfg.output.formats)? {
                println!("-> {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
