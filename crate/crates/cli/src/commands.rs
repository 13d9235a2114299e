use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use entangle::fixtures::{self, HARDY_FILE};
use entangle::hardy::{hardy_angles, hardy_curve, hardy_fraction, row_seed, write_curve_csv, HardyResult};
use entangle::measurement::{linear_pair_probability, read_records_csv, records_to_csv_string, CountRecord};
use entangle::polarization::{DensityMatrixJson, TwoPhotonState};
use entangle::tomography::{diagnose, project_to_physical, reconstruct, Diagnostics};
use entangle::{minima_angle, simulate_counts, Error};
use serde::Serialize;

use crate::config::{load_scheme, RunConfig};
use crate::Format;

/// Resolved global options shared by every command.
pub struct Ctx {
    pub config: RunConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Ctx {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(&text)
    }

    fn echo_seed(&self) {
        eprintln!("seed: {}", self.seed);
    }
}

fn json_only(ctx: &Ctx, what: &str) -> Result<()> {
    if ctx.format(Format::Json) != Format::Json {
        bail!(Error::InvalidArgument(format!("{what} output is JSON only")));
    }
    Ok(())
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Von Neumann entropy of either photon's reduced state.
fn schmidt_entropy(state: &TwoPhotonState) -> f64 {
    let a = state.amps();
    let det = (a[0] * a[3] - a[1] * a[2]).norm_sqr();
    let disc = (1.0 - 4.0 * det).max(0.0).sqrt();
    [(1.0 + disc) / 2.0, (1.0 - disc) / 2.0]
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

#[derive(Serialize)]
struct SourceReport {
    chi_deg: f64,
    phi_deg: f64,
    attenuation: f64,
    delta: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    epsilon: f64,
    /// `[re, im]` for HH, HV, VH, VV; absent for mixed sources.
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitudes: Option<[[f64; 2]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entanglement_entropy: Option<f64>,
    density_matrix: DensityMatrixJson,
}

pub fn source(ctx: &Ctx, chi_deg: Option<f64>, phi_deg: Option<f64>) -> Result<()> {
    json_only(ctx, "source")?;
    let mut src = ctx.config.source;
    if let Some(c) = chi_deg {
        src.chi_deg = c;
    }
    if let Some(p) = phi_deg {
        src.phi_deg = p;
    }
    let rho = src.density_matrix()?;
    let pure = src.pure_state()?;
    let report = SourceReport {
        chi_deg: src.chi_deg,
        phi_deg: src.phi_deg,
        attenuation: src.attenuation,
        delta: [src.delta_re, src.delta_im],
        gamma: src.gamma,
        epsilon: src.epsilon()?,
        amplitudes: pure.map(|s| s.amps().map(|a| [a.re, a.im])),
        entanglement_entropy: pure.as_ref().map(schmidt_entropy),
        density_matrix: rho.to_json(),
    };
    ctx.emit_json(&report)
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    seed: u64,
    pairs_per_setting: f64,
    records: &'a [CountRecord],
}

pub fn simulate(ctx: &Ctx, pairs: Option<f64>, scheme: Option<&str>) -> Result<()> {
    let cfg = &ctx.config;
    let scheme = load_scheme(scheme.unwrap_or(&cfg.scheme))?;
    let pairs = pairs.unwrap_or(cfg.pairs_per_setting);
    let rho = cfg.source.density_matrix()?;
    let noise = cfg.noise.with_seed(ctx.seed);
    ctx.echo_seed();
    let records = simulate_counts(&rho, scheme.settings(), pairs, &noise)?;
    match ctx.format(Format::Csv) {
        Format::Csv => ctx.emit(&records_to_csv_string(&records)?),
        Format::Json => ctx.emit_json(&SimulateReport {
            seed: ctx.seed,
            pairs_per_setting: pairs,
            records: &records,
        }),
    }
}

#[derive(Serialize)]
struct TomoReport {
    projected: bool,
    density_matrix: DensityMatrixJson,
    diagnostics: Diagnostics,
    /// Diagnostics of the unprojected estimate, when projection was applied.
    #[serde(skip_serializing_if = "Option::is_none")]
    raw_diagnostics: Option<Diagnostics>,
}

pub fn tomo(
    ctx: &Ctx,
    counts: &Path,
    scheme: Option<&str>,
    project_physical: bool,
    target: Option<(f64, f64)>,
) -> Result<()> {
    json_only(ctx, "tomography")?;
    let scheme = load_scheme(scheme.unwrap_or(&ctx.config.scheme))?;
    let file = fs::File::open(counts).with_context(|| format!("opening counts {}", counts.display()))?;
    let records = read_records_csv(file).with_context(|| format!("reading counts {}", counts.display()))?;
    let raw = reconstruct(&records, &scheme)?;
    let report = if project_physical {
        let rho = project_to_physical(&raw);
        TomoReport {
            projected: true,
            density_matrix: rho.to_json(),
            diagnostics: diagnose(&rho, target)?,
            raw_diagnostics: Some(diagnose(&raw, target)?),
        }
    } else {
        TomoReport {
            projected: false,
            density_matrix: raw.to_json(),
            diagnostics: diagnose(&raw, target)?,
            raw_diagnostics: None,
        }
    };
    ctx.emit_json(&report)
}

#[derive(Serialize)]
struct MinimaRow {
    theta1_deg: f64,
    theta2_min_deg: f64,
    p_at_min: f64,
}

/// `from, from+step, …` up to and including `to` (within rounding).
fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite() && from.is_finite() && to.is_finite() && to >= from) {
        bail!(Error::InvalidArgument(format!(
            "grid needs finite from <= to and step > 0, got {from}..{to} step {step}"
        )));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| from + k as f64 * step).collect())
}

pub fn minima(ctx: &Ctx, epsilon: f64, from: f64, to: f64, step: f64) -> Result<()> {
    let rows = grid(from, to, step)?
        .into_iter()
        .map(|t1| {
            let t2 = minima_angle(epsilon, t1)?;
            Ok(MinimaRow {
                theta1_deg: t1,
                theta2_min_deg: t2,
                p_at_min: linear_pair_probability(epsilon, 0.0, t1, t2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match ctx.format(Format::Csv) {
        Format::Csv => ctx.emit(&to_csv(&rows)?),
        Format::Json => ctx.emit_json(&rows),
    }
}

#[derive(Serialize)]
struct AnglesReport {
    epsilon: f64,
    alpha_deg: f64,
    beta_deg: f64,
    beta_signed_deg: f64,
    alpha_perp_deg: f64,
    hardy_fraction: f64,
    /// Arm settings in order (β,−β), (α,−α), (β,−α⊥), (α⊥,−β).
    settings: Vec<[String; 2]>,
    probabilities: [f64; 4],
}

pub fn hardy_angles_cmd(ctx: &Ctx, epsilon: f64) -> Result<()> {
    json_only(ctx, "hardy angles")?;
    let cfg = hardy_angles(epsilon)?;
    let report = AnglesReport {
        epsilon,
        alpha_deg: cfg.alpha_deg,
        beta_deg: cfg.beta_deg,
        beta_signed_deg: cfg.beta_signed(),
        alpha_perp_deg: cfg.alpha_perp(),
        hardy_fraction: hardy_fraction(epsilon)?,
        settings: cfg
            .settings()
            .iter()
            .map(|(a, b)| [a.to_string(), b.to_string()])
            .collect(),
        probabilities: cfg.probabilities()?,
    };
    ctx.emit_json(&report)
}

pub fn hardy_curve_cmd(ctx: &Ctx, from: f64, to: f64, steps: usize, pairs: f64) -> Result<()> {
    if steps < 2 {
        bail!(Error::InvalidArgument(format!(
            "curve needs at least 2 steps, got {steps}"
        )));
    }
    let epsilons: Vec<f64> = (0..steps)
        .map(|k| from + (to - from) * k as f64 / (steps - 1) as f64)
        .collect();
    let noise = ctx.config.noise.with_seed(ctx.seed);
    ctx.echo_seed();
    let rows = hardy_curve(&epsilons, pairs, &noise)?;
    match ctx.format(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_curve_csv(&mut buf, &rows)?;
            ctx.emit(&String::from_utf8(buf)?)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Curve<'a, T> {
                seed: u64,
                pairs_per_setting: f64,
                row_seeds: Vec<u64>,
                rows: &'a [T],
            }
            ctx.emit_json(&Curve {
                seed: ctx.seed,
                pairs_per_setting: pairs,
                row_seeds: (0..rows.len()).map(|i| row_seed(ctx.seed, i)).collect(),
                rows: &rows,
            })
        }
    }
}

#[derive(Serialize)]
struct HardyReport {
    epsilon: f64,
    alpha_deg: f64,
    beta_deg: f64,
    #[serde(flatten)]
    result: HardyResult,
    signed_sigma: f64,
    violates_local_realism: bool,
}

pub fn hardy_test_cmd(ctx: &Ctx, data: Option<&Path>) -> Result<()> {
    json_only(ctx, "hardy test")?;
    let path = data
        .map(Path::to_path_buf)
        .unwrap_or_else(|| fixtures::fixture_dir().join(HARDY_FILE));
    let data = fixtures::load_hardy(&path)?;
    let result = data.test()?;
    ctx.emit_json(&HardyReport {
        epsilon: data.epsilon,
        alpha_deg: data.alpha_deg,
        beta_deg: data.beta_deg,
        signed_sigma: result.signed_sigma(),
        violates_local_realism: result.violates_local_realism(),
        result,
    })
}

/// Returns whether every check passed.
pub fn repro(ctx: &Ctx) -> Result<bool> {
    ctx.echo_seed();
    let report = entangle::repro::run(&fixtures::fixture_dir(), ctx.seed);
    match ctx.format {
        None => ctx.emit(&format!("{report}\n"))?,
        Some(Format::Json) => ctx.emit_json(&report)?,
        Some(Format::Csv) => bail!(Error::InvalidArgument("repro output is text or JSON".into())),
    }
    Ok(report.all_passed())
}
