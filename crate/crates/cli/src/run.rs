//! The analysis commands.

use std::path::{Path, PathBuf};

use ndarray::Zip;
use wavecoh::coherence::{phase_arrows, CoherenceEngine, CoherenceField, CoherenceKind};
use wavecoh::cwt::CwtPlan;
use wavecoh::significance::{fit_ar1, mc_significance, Ar1Model, SignificanceResult};
use wavecoh::Error as CoreError;

use crate::artifacts::{self as art, Ar1Meta, Comparison, GridMeta, Meta, OutputLock};
use crate::config::{self, AnalysisConfig, Overrides, PeriodAxis};
use crate::error::{CliError, CliResult};
use crate::pipeline::{prepare, Prepared};
use crate::render::{render, Panel, Style};

/// Fraction of in-cone cells above which a PWC run warns about its conditioner.
pub const DEGENERATE_WARN_FRACTION: f64 = 0.2;

const WTC_PHASE: &str = "arg S(Wx conj(Wy) / s) in (-pi, pi] with X = driver, Y = outcome; \
     0 is in phase, +-pi anti-phase, positive means the driver leads the outcome";
const PWC_PHASE: &str = "arg of R(Y,X) - R(Y,Z) conj(R(X,Z)) in (-pi, pi] with Y = outcome, \
     X = driver, Z = conditioner; positive means the outcome leads the driver. Partial phase \
     is an extension: it is not part of the published estimator and carries no significance test";

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub meta: Meta,
    pub field: CoherenceField,
    pub significance: SignificanceResult,
}

fn output_dir(config: &AnalysisConfig, base: &Path) -> PathBuf {
    base.join(&config.output.dir)
}

pub fn run_file(path: &Path, overrides: &Overrides, kind: CoherenceKind) -> CliResult<RunOutcome> {
    let (config, base) = config::load(path, overrides)?;
    run(&config, &base, kind)
}

/// Runs WTC or PWC for `config`, resolving relative paths against `base`.
pub fn run(config: &AnalysisConfig, base: &Path, kind: CoherenceKind) -> CliResult<RunOutcome> {
    config.validate(kind == CoherenceKind::Pwc)?;
    let a = &config.analysis;
    let mut labels = vec![a.driver.as_str(), a.outcome.as_str()];
    if kind == CoherenceKind::Pwc {
        labels.push(a.conditioner.as_deref().expect("validated"));
    }
    let data = prepare(config, base, &labels)?;
    for (label, n) in &data.dropped_rows {
        log::info!("{label}: dropped {n} rows with empty values");
    }
    log::info!(
        "{} aligned observations from {} to {}",
        data.dates.len(),
        data.dates[0],
        data.dates.last().unwrap()
    );

    let dir = output_dir(config, base);
    let _lock = OutputLock::acquire(&dir)?;

    let n = data.dates.len();
    let grid = config.grid.build(n)?;
    let dt = config.grid.dt;
    let plan = CwtPlan::new(n, &grid, dt)?;
    let fields = labels
        .iter()
        .enumerate()
        .map(|(k, l)| plan.transform(data.values(k), l))
        .collect::<wavecoh::Result<Vec<_>>>()?;
    let engine = CoherenceEngine::new(n, &grid, dt, &config.smoothing);
    let mc = config.significance;
    let models_of = |order: &[usize]| -> CliResult<(Vec<Ar1Meta>, Vec<Ar1Model>)> {
        let models = order
            .iter()
            .map(|&k| fit_ar1(data.values(k)))
            .collect::<wavecoh::Result<Vec<_>>>()?;
        let metas = order
            .iter()
            .zip(&models)
            .map(|(&k, m)| Ar1Meta {
                label: labels[k].to_string(),
                alpha: m.alpha,
                sigma2: m.sigma2,
                mean: m.mean,
            })
            .collect();
        Ok((metas, models))
    };

    let (wx, wy) = (&fields[0], &fields[1]);
    let wtc = engine.wtc(wx, wy)?;
    let (wtc_metas, wtc_models) = models_of(&[0, 1])?;

    let (field, significance, ar1_models, comparison) = match kind {
        CoherenceKind::Wtc => {
            let sig = mc_significance(&wtc, &wtc_models, &mc)?;
            (wtc, sig, wtc_metas, None)
        }
        CoherenceKind::Pwc => {
            let wz = &fields[2];
            let pwc = match engine.pwc(wy, wx, wz) {
                Err(CoreError::AllDegenerate(msg)) => return Err(CliError::Degenerate(msg)),
                other => other?,
            };
            let inside = pwc.coi_mask().iter().filter(|&&c| c).count();
            let degenerate = pwc.degenerate_count(true);
            if inside > 0 && degenerate == inside {
                return Err(CliError::Degenerate(format!(
                    "conditioning on `{}` leaves no defined cell inside the cone of influence",
                    labels[2]
                )));
            }
            if inside > 0 && degenerate as f64 > DEGENERATE_WARN_FRACTION * inside as f64 {
                log::warn!(
                    "{degenerate} of {inside} in-cone cells are degenerate: `{}` is nearly collinear with the driver or outcome",
                    labels[2]
                );
            }
            let (metas, models) = models_of(&[1, 0, 2])?;
            let sig = mc_significance(&pwc, &models, &mc)?;
            let wtc_sig = mc_significance(&wtc, &wtc_models, &mc)?;
            let wtc_area = wtc_sig.significant_area();
            let diffs: Vec<f64> = Zip::from(&pwc.r2).and(&wtc.r2).and(&pwc.coi_mask()).fold(
                Vec::new(),
                |mut acc, &p, &w, &c| {
                    if c && !p.is_nan() && !w.is_nan() {
                        acc.push((p - w).abs());
                    }
                    acc
                },
            );
            let comparison = Comparison {
                wtc_significant_area: wtc_area,
                area_ratio: (wtc_area > 0).then(|| sig.significant_area() as f64 / wtc_area as f64),
                mean_abs_diff_in_coi: (!diffs.is_empty())
                    .then(|| diffs.iter().sum::<f64>() / diffs.len() as f64),
            };
            (pwc, sig, metas, Some(comparison))
        }
    };

    let meta = build_meta(
        config,
        kind,
        &data,
        &field,
        &significance,
        ar1_models,
        comparison,
    );
    write_outputs(config, &dir, &data, &field, &significance, &meta)?;
    Ok(RunOutcome {
        dir,
        meta,
        field,
        significance,
    })
}

fn build_meta(
    config: &AnalysisConfig,
    kind: CoherenceKind,
    data: &Prepared,
    field: &CoherenceField,
    sig: &SignificanceResult,
    ar1_models: Vec<Ar1Meta>,
    comparison: Option<Comparison>,
) -> Meta {
    let grid = &field.grid;
    let in_coi = field.coi_mask().iter().filter(|&&c| c).count();
    let degenerate = field.degenerate_count(true);
    let a = &config.analysis;
    Meta {
        tool: "wavecoh".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: kind.to_string(),
        driver: a.driver.clone(),
        outcome: a.outcome.clone(),
        conditioner: (kind == CoherenceKind::Pwc)
            .then(|| a.conditioner.clone())
            .flatten(),
        seed: sig.seed,
        n_surrogates: sig.n_surrogates,
        level: sig.level,
        config_hash: config.hash(),
        n_obs: data.dates.len(),
        dates: data.dates.clone(),
        grid: GridMeta {
            s0: grid.s0(),
            dj: grid.dj(),
            dt: field.dt,
            omega0: grid.wavelet().omega0,
            fourier_factor: grid.wavelet().fourier_factor(),
            num_scales: grid.len(),
            periods: grid.periods().iter().rev().copied().collect(),
            scales: grid.scales().iter().rev().copied().collect(),
        },
        smoothing: field.smoothing,
        ar1_models,
        phase_convention: match kind {
            CoherenceKind::Wtc => WTC_PHASE.into(),
            CoherenceKind::Pwc => PWC_PHASE.into(),
        },
        in_coi_cells: in_coi,
        degenerate_in_coi: degenerate,
        degenerate_fraction_in_coi: if in_coi > 0 {
            degenerate as f64 / in_coi as f64
        } else {
            0.0
        },
        significant_area: sig.significant_area(),
        comparison,
        orthogonalizations: data.orthogonalizations.clone(),
    }
}

fn write_outputs(
    config: &AnalysisConfig,
    dir: &Path,
    data: &Prepared,
    field: &CoherenceField,
    sig: &SignificanceResult,
    meta: &Meta,
) -> CliResult<()> {
    art::write_text(&dir.join(art::R2), &art::matrix_csv(&field.r2))?;
    art::write_text(&dir.join(art::PHASE), &art::matrix_csv(&field.phase))?;
    art::write_text(&dir.join(art::THRESHOLD), &art::matrix_csv(&sig.threshold))?;
    art::write_text(&dir.join(art::MASK), &art::mask_csv(&sig.mask))?;
    art::write_text(&dir.join(art::COI), &art::coi_csv(&data.dates, &field.coi))?;
    let out = &config.output;
    let arrows = phase_arrows(
        field,
        out.arrow_stride_time,
        out.arrow_stride_scale,
        out.arrow_threshold,
    );
    art::write_text(
        &dir.join(art::ARROWS),
        &art::arrows_csv(&arrows, &data.dates, field.grid.periods()),
    )?;
    art::write_text(&dir.join(art::CONFIG), &config.canonical())?;
    art::write_meta(dir, meta)?;
    if out.plot {
        let style = Style {
            period_axis: out.period_axis,
            arrow_stride_time: out.arrow_stride_time,
            arrow_stride_scale: out.arrow_stride_scale,
            arrow_threshold: out.arrow_threshold,
        };
        let panel = Panel {
            r2: &field.r2,
            mask: &sig.mask,
            coi: &field.coi,
            periods: field.grid.periods(),
            phase: Some(&field.phase),
        };
        save_png(&render(&panel, &style).0, &dir.join(art::PLOT))?;
    }
    Ok(())
}

fn save_png(img: &image::RgbImage, path: &Path) -> CliResult<()> {
    img.save(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })
}

/// Writes the transformed, aligned analysis series as `<label>.csv`.
pub fn preprocess_file(
    path: &Path,
    overrides: &Overrides,
    with_conditioner: bool,
) -> CliResult<Vec<PathBuf>> {
    let (config, base) = config::load(path, overrides)?;
    config.validate(with_conditioner)?;
    let a = &config.analysis;
    let mut labels = vec![a.driver.as_str(), a.outcome.as_str()];
    if let Some(z) = a.conditioner.as_deref() {
        labels.push(z);
    }
    let data = prepare(&config, &base, &labels)?;
    let dir = output_dir(&config, &base);
    let _lock = OutputLock::acquire(&dir)?;
    let mut written = Vec::new();
    for s in &data.columns {
        let p = dir.join(format!("{}.csv", s.name()));
        art::write_text(&p, &art::series_csv(s.name(), s.dates(), s.values()))?;
        written.push(p);
    }
    Ok(written)
}

/// Re-renders `plot.png` (or `out`) from the artifacts in `dir`.
pub fn render_dir(dir: &Path, out: Option<&Path>, axis: Option<PeriodAxis>) -> CliResult<PathBuf> {
    let meta = art::read_meta(dir)?;
    let r2 = art::read_matrix(&dir.join(art::R2))?;
    let phase = art::read_matrix(&dir.join(art::PHASE))?;
    let mask = art::read_mask(&dir.join(art::MASK))?;
    let coi = art::read_coi(&dir.join(art::COI))?;
    let periods: Vec<f64> = meta.grid.periods.iter().rev().copied().collect();
    let shape_ok =
        r2.dim() == (periods.len(), coi.len()) && mask.dim() == r2.dim() && phase.dim() == r2.dim();
    if !shape_ok {
        return Err(CliError::Artifact {
            path: dir.to_path_buf(),
            message: "matrix, cone and grid sizes disagree".into(),
        });
    }
    let style = Style {
        period_axis: axis.unwrap_or(PeriodAxis::ShortTop),
        ..Style::default()
    };
    let panel = Panel {
        r2: &r2,
        mask: &mask,
        coi: &coi,
        periods: &periods,
        phase: Some(&phase),
    };
    let path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join(art::PLOT));
    save_png(&render(&panel, &style).0, &path)?;
    Ok(path)
}
