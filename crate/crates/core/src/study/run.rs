use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coeff::{CoefficientTensor, DensityField};
use crate::eigen::{EigenOptions, Sign};
use crate::geometry::{build_cell_mesh, mesh_to_string, CellGeometry, EpsilonLevel, Mesh};
use crate::homog::{compute_homogenized, HomogOptions, HomogenizedData};
use crate::spectra::{
    build_corrector_expansion, limit_mesh, solve_case_limits, solve_epsilon, Branch, CaseLimits, EpsilonOptions,
    EpsilonSpectrum,
};

use super::report::{CorrectorRow, LevelInfo, LimitValue, StudyReport, StudyRow, REPORT_SCHEMA};
use super::{NumericalError, StudyConfig, StudyError};

/// Pipeline stage named in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Cell,
    Limit,
    Level(usize),
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Cell => f.write_str("cell stage"),
            Stage::Limit => f.write_str("limit stage"),
            Stage::Level(n) => write!(f, "level n={n}"),
        }
    }
}

fn numerical(stage: Stage) -> impl Fn(NumericalError) -> StudyError {
    move |source| StudyError::Numerical { stage, source }
}

/// Cached outcome of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LevelResult {
    info: LevelInfo,
    positives: Vec<f64>,
    negatives: Vec<f64>,
    correctors: Vec<CorrectorRow>,
}

fn checksum(mesh: &Mesh) -> String {
    hex::encode(&Sha256::digest(mesh_to_string(mesh).as_bytes())[..8])
}

fn write_atomic(path: &Path, text: &str) -> Result<(), StudyError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| StudyError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StudyError::io(path, e))
}

/// Reads a cache entry; unreadable entries are ignored and recomputed.
fn read_cache<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    let text = fs::read_to_string(path).ok()?;
    match serde_json::from_str(&text) {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
            None
        }
    }
}

/// Sign-aligned relative nodal distances of `u` to the leading term and to
/// the corrected expansion.
fn corrector_row(
    spec: &EpsilonSpectrum,
    limits: &CaseLimits,
    data: &HomogenizedData,
    cell: &Mesh,
    omega: &Mesh,
    sign: Sign,
) -> Result<Option<CorrectorRow>, crate::spectra::SpectraError> {
    let (lim, _) = limits.side(sign);
    let (Some(first), Some(pair)) = (lim.first(), spec.side(sign).first()) else {
        return Ok(None);
    };
    let branch = Branch::for_side(data, sign, first.value);
    let e = build_corrector_expansion(first, omega, data, cell, branch, spec.epsilon())?;
    let (lead, corr) = e.eval_nodes(&spec.mesh)?;
    let u = &pair.vector;
    let align = if u.iter().zip(&lead).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dist = |w: &[f64]| u.iter().zip(w).map(|(a, b)| (align * a - b).powi(2)).sum::<f64>().sqrt() / norm;
    let (d0, d1) = (dist(&lead), dist(&corr));
    Ok(Some(CorrectorRow {
        sign,
        n: spec.level.n,
        leading_distance: d0,
        corrected_distance: d1,
        ratio: d1 / d0,
    }))
}

struct Context<'a> {
    geometry: &'a CellGeometry,
    a: &'a CoefficientTensor,
    rho: &'a DensityField,
    data: &'a HomogenizedData,
    limits: &'a CaseLimits,
    cell: &'a Mesh,
    omega: &'a Mesh,
    opts: EpsilonOptions,
}

fn solve_level(ctx: &Context<'_>, n: usize) -> Result<LevelResult, NumericalError> {
    let level = EpsilonLevel::new(n)?;
    let spec = solve_epsilon(ctx.geometry, level, ctx.a, ctx.rho, ctx.data.case, &ctx.opts)?;
    let mut correctors = Vec::new();
    for sign in [Sign::Positive, Sign::Negative] {
        if let Some(row) = corrector_row(&spec, ctx.limits, ctx.data, ctx.cell, ctx.omega, sign)? {
            correctors.push(row);
        }
    }
    let all = || spec.positives.iter().chain(&spec.negatives);
    Ok(LevelResult {
        info: LevelInfo {
            n,
            epsilon: level.epsilon(),
            nodes: spec.mesh.node_count(),
            mesh_checksum: checksum(&spec.mesh),
            max_residual: all().map(|p| p.residual_norm).fold(0.0, f64::max),
            max_normalization_residual: all().map(|p| p.normalization_residual).fold(0.0, f64::max),
            orthogonality_defect: spec.orthogonality_defect,
            no_negative_spectrum: spec.no_negative_spectrum,
        },
        positives: spec.positives.iter().map(|p| p.eigenvalue).collect(),
        negatives: spec.negatives.iter().map(|p| p.eigenvalue).collect(),
        correctors,
    })
}

fn rows(cfg: &StudyConfig, data: &HomogenizedData, limits: &CaseLimits, levels: &[LevelResult]) -> Vec<StudyRow> {
    let mut out = Vec::new();
    for sign in [Sign::Positive, Sign::Negative] {
        let (lim, diag) = limits.side(sign);
        for (k, target) in lim.iter().enumerate().take(cfg.study.k) {
            for lvl in levels {
                let values = match sign {
                    Sign::Positive => &lvl.positives,
                    Sign::Negative => &lvl.negatives,
                };
                let Some(&raw) = values.get(k) else { continue };
                let eps = lvl.info.epsilon;
                let d = diag.apply(raw, eps);
                let abs_gap = (d - target.value).abs();
                out.push(StudyRow {
                    case: data.case,
                    k: k + 1,
                    sign,
                    n: lvl.info.n,
                    epsilon: eps,
                    lambda_raw: raw,
                    diagnostic: d,
                    limit: target.value,
                    abs_gap,
                    rel_gap: abs_gap / target.value.abs(),
                });
            }
        }
    }
    out
}

/// Runs the full pipeline with the options from `cfg`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport, StudyError> {
    run_study_with(cfg, None)
}

/// Runs the full pipeline. `threads` overrides the configured pool width.
pub fn run_study_with(cfg: &StudyConfig, threads: Option<usize>) -> Result<StudyReport, StudyError> {
    let (geometry, a, rho) = cfg.validate()?;
    let hash = cfg.hash();
    let seed = cfg.seed();
    let cache_dir: PathBuf = cfg.output.dir.join("cache").join(&hash);
    fs::create_dir_all(&cache_dir).map_err(|e| StudyError::io(&cache_dir, e))?;
    let tol = &cfg.tolerances;
    let eigen = EigenOptions {
        seed,
        residual_tol: tol.eig_tol,
        ..EigenOptions::default()
    };

    let cell = build_cell_mesh(&geometry).map_err(|e| numerical(Stage::Cell)(e.into()))?;
    let homog_path = cache_dir.join("homog.json");
    let data = match read_cache::<HomogenizedData>(&homog_path) {
        Some(d) => d,
        None => {
            let opts = HomogOptions {
                cg_tol: tol.cg_tol,
                tol_zero: tol.tol_zero,
                eigen: eigen.clone(),
                case_override: cfg.study.case_override,
                with_factorization: true,
            };
            let d = compute_homogenized(&cell, &a, &rho, &opts).map_err(|e| numerical(Stage::Cell)(e.into()))?;
            write_atomic(&homog_path, &d.to_json())?;
            d
        }
    };
    let mut notes = Vec::new();
    if let Some(c) = cfg.study.case_override {
        let detected = crate::homog::detect_case(data.m_s_rho, data.perimeter, tol.tol_zero);
        if detected != c {
            notes.push(format!("case override {c} replaces detected case {detected}"));
        }
    }

    let omega = limit_mesh(cfg.study.m_limit).map_err(|e| numerical(Stage::Limit)(e.into()))?;
    let limits = solve_case_limits(&data, &omega, cfg.study.k, &eigen).map_err(|e| numerical(Stage::Limit)(e.into()))?;
    let sanity = data.case != crate::homog::SignCase::Critical && data.factorization.is_none();
    if sanity {
        notes.push("density has no negative part on the hole boundary: negative sequence skipped".into());
    }
    let ctx = Context {
        geometry: &geometry,
        a: &a,
        rho: &rho,
        data: &data,
        limits: &limits,
        cell: &cell,
        omega: &omega,
        opts: EpsilonOptions {
            k: cfg.study.k,
            eigen: eigen.clone(),
            sanity,
            ..EpsilonOptions::default()
        },
    };
    let width = threads.or(cfg.study.threads).unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map_err(|e| StudyError::Report(format!("thread pool: {e}")))?;
    let results: Vec<Result<LevelResult, StudyError>> = pool.install(|| {
        cfg.study
            .levels
            .par_iter()
            .map(|&n| {
                let path = cache_dir.join(format!("level-{n}.json"));
                if let Some(r) = read_cache::<LevelResult>(&path) {
                    return Ok(r);
                }
                let r = solve_level(&ctx, n).map_err(numerical(Stage::Level(n)))?;
                let text = serde_json::to_string_pretty(&r).expect("level result serializes");
                write_atomic(&path, &text)?;
                Ok(r)
            })
            .collect()
    });
    let levels = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let limit_values = [Sign::Positive, Sign::Negative]
        .iter()
        .flat_map(|&sign| {
            let (lim, diag) = limits.side(sign);
            lim.iter().enumerate().map(move |(k, p)| LimitValue {
                sign,
                k: k + 1,
                value: p.value,
                diagnostic: diag,
            })
        })
        .collect();
    Ok(StudyReport {
        schema: REPORT_SCHEMA.into(),
        config_hash: hash,
        seed,
        case: data.case,
        m_s_rho: data.m_s_rho,
        perimeter: data.perimeter,
        q: data.q,
        nu_sq: data.critical.as_ref().map(|c| c.nu_sq),
        lambda1_neg: data.factorization.as_ref().map(|f| f.local.lambda1_neg),
        q_tilde: data.factorization.as_ref().map(|f| f.q_tilde),
        m_s_rho_tilde: data.factorization.as_ref().map(|f| f.m_s_rho_tilde),
        limits: limit_values,
        rows: rows(cfg, &data, &limits, &levels),
        correctors: levels.iter().flat_map(|l| l.correctors.clone()).collect(),
        levels: levels.into_iter().map(|l| l.info).collect(),
        notes,
    })
}
