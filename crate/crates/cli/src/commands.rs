use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lpspec::floquet::{band_spectrum_with, break_points_in, genericity_metrics_with, MetricsOptions};
use lpspec::gap_opening::{find_generic_with, gap_placement};
use lpspec::homogenize::{
    ac_decay_certificate, cantor_certificate, check_invariants, construct,
    verify_step_homogeneity, AcDecayReport, CantorReport, ConstructionRun, InvariantReport,
    RunStatus, StepHomogeneityReport,
};
use lpspec::hull::{level_increments, lift_run, HullSpec, SamplingFunction};
use lpspec::ids::{band_length_check, density_table, hs_lower_bound, ids_density_in, phase_increment_in, BandLengthReport};
use lpspec::intervals::{HomogeneityReport, IntervalSet, ProfileGrid};
use lpspec::{Error, FloquetOptions, PeriodicJacobi, PeriodicSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::io::{emit, read_json, to_json, write_atomic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn floquet_options(merge_tol: Option<f64>) -> FloquetOptions {
    let mut o = FloquetOptions::default();
    if let Some(m) = merge_tol {
        o.merge_tol = m;
    }
    o
}

pub fn bands(
    input: &Path,
    output: Option<&Path>,
    format: Format,
    k: usize,
    gap_tol: f64,
    merge_tol: Option<f64>,
) -> anyhow::Result<()> {
    let op: PeriodicJacobi = read_json(input)?;
    let opts = MetricsOptions {
        floquet: floquet_options(merge_tol),
        proper_only: false,
    };
    let (metrics, spectrum) = genericity_metrics_with(&op, k, gap_tol * op.scale(), &opts)?;
    let text = match format {
        Format::Csv => spectrum.to_csv(),
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                operator: &'a PeriodicJacobi,
                spectrum: &'a lpspec::BandSpectrum,
                metrics: lpspec::Metrics,
                merge_tol: f64,
                gap_tol: f64,
            }
            to_json(&Out {
                operator: &op,
                spectrum: &spectrum,
                metrics,
                merge_tol: opts.floquet.merge_tol * op.scale(),
                gap_tol: gap_tol * op.scale(),
            })?
        }
    };
    emit(output, &text)
}

pub fn breakpoints(
    input: &Path,
    output: Option<&Path>,
    format: Format,
    k: usize,
    merge_tol: Option<f64>,
) -> anyhow::Result<()> {
    let op: PeriodicJacobi = read_json(input)?;
    let opts = floquet_options(merge_tol);
    let spec = band_spectrum_with(&op, &opts)?;
    let set = break_points_in(&op, &spec, k, &opts)?;
    let text = match format {
        Format::Csv => {
            let mut s = String::from("energy,j,band,proper\n");
            for b in &set.points {
                s.push_str(&format!("{},{},{},{}\n", b.energy, b.j, b.band + 1, b.proper));
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                k: usize,
                points: &'a [lpspec::BreakPoint],
                min_spacing: f64,
                min_spacing_proper: f64,
            }
            let tol = opts.merge_tol * op.scale();
            to_json(&Out {
                k,
                points: &set.points,
                min_spacing: set.min_spacing(false, tol),
                min_spacing_proper: set.min_spacing(true, tol),
            })?
        }
    };
    emit(output, &text)
}

pub fn perturb(
    input: &Path,
    output: Option<&Path>,
    k: usize,
    eps: f64,
    gap_tol: Option<f64>,
) -> anyhow::Result<()> {
    let op: PeriodicJacobi = read_json(input)?;
    let opts = FloquetOptions::default();
    let gap_tol = gap_tol.unwrap_or_else(|| (1e-9 * op.scale()).min(eps / 100.0));
    let found = find_generic_with(&op, k, eps, gap_tol, &opts)?;
    let old = band_spectrum_with(&op, &opts)?;
    let breaks = break_points_in(&op, &old, k, &opts)?;
    let placement = gap_placement(&old, &breaks, &found.spectrum, found.t.abs(), 1e-10 * op.scale());
    #[derive(Serialize)]
    struct Out<'a> {
        operator: &'a PeriodicJacobi,
        t: f64,
        candidate: usize,
        gap_tol: f64,
        spectrum: &'a lpspec::BandSpectrum,
        placement: lpspec::gap_opening::PlacementReport,
    }
    emit(
        output,
        &to_json(&Out {
            operator: &found.operator,
            t: found.t,
            candidate: found.candidate,
            gap_tol,
            spectrum: &found.spectrum,
            placement,
        })?,
    )
}

#[derive(Debug, Serialize)]
pub struct Certificates {
    pub homogeneity: Vec<StepHomogeneityReport>,
    pub cantor: CantorReport,
    pub decay: AcDecayReport,
    pub invariants: InvariantReport,
    pub settings: crate::config::CertificateConfig,
}

impl Certificates {
    pub fn all_pass(&self, ac_enforced: bool) -> bool {
        self.homogeneity.iter().all(|h| h.pass)
            && self.cantor.pass
            && self.invariants.pass
            && (self.decay.pass || !ac_enforced)
    }
}

pub fn certify(run: &ConstructionRun, cfg: &RunConfig) -> anyhow::Result<Certificates> {
    let c = cfg.certificates;
    let homogeneity = (0..=run.depth())
        .map(|n| verify_step_homogeneity(run, n, c.n_delta, c.n_points))
        .collect::<Result<Vec<_>, _>>()?;
    let window_len = c.window_len.unwrap_or_else(|| {
        let a = run.a.max().max(1.0);
        1.05 * 4.0 * PI * a * a / run.last().period as f64
    });
    let cantor = cantor_certificate(run, window_len, c.n_windows)?;
    let decay = ac_decay_certificate(run, c.c_max, c.n_c);
    let invariants = check_invariants(run)?;
    Ok(Certificates {
        homogeneity,
        cantor,
        decay,
        invariants,
        settings: c,
    })
}

pub fn construct_cmd(config: &Path, out_dir: &Path) -> anyhow::Result<()> {
    let cfg: RunConfig = read_json(config)?;
    let ks = cfg.resolve_ks()?;
    let run = construct(
        &PeriodicSequence::new(cfg.b0.clone())?,
        &PeriodicSequence::new(cfg.a.clone())?,
        cfg.tau,
        cfg.eps,
        &ks,
        cfg.n_steps,
        &cfg.options,
    )?;
    let certs = certify(&run, &cfg)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_atomic(&out_dir.join("run.json"), &to_json(&run)?)?;
    write_atomic(&out_dir.join("certificates.json"), &to_json(&certs)?)?;
    let mut files = vec!["run.json".to_string(), "certificates.json".to_string()];
    for step in &run.steps {
        let name = format!("bands_step{}.csv", step.j);
        write_atomic(&out_dir.join(&name), &step.spectrum.to_csv())?;
        files.push(name);
    }
    if let Some(h) = &cfg.hull {
        let fs = lift_run(&run, &h.spec, h.q0)?;
        let increments = level_increments(&fs)?;
        write_atomic(
            &out_dir.join("sampling.json"),
            &to_json(&Lifted {
                hull: &h.spec,
                q0: h.q0,
                functions: &fs,
                increments,
            })?,
        )?;
        files.push("sampling.json".into());
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        status: &'a RunStatus,
        depth: usize,
        periods: Vec<usize>,
        eps: Vec<f64>,
        certificates_pass: bool,
        files: Vec<String>,
    }
    let summary = Summary {
        status: &run.status,
        depth: run.depth(),
        periods: run.steps.iter().map(|s| s.period).collect(),
        eps: run.steps.iter().map(|s| s.eps).collect(),
        certificates_pass: certs.all_pass(run.options.ac_term),
        files,
    };
    emit(None, &to_json(&summary)?)
}

#[derive(Serialize)]
struct Lifted<'a> {
    hull: &'a HullSpec,
    q0: usize,
    functions: &'a [SamplingFunction],
    increments: Vec<f64>,
}

pub fn ids(
    input: &Path,
    output: Option<&Path>,
    summary: Option<&Path>,
    grid: usize,
) -> anyhow::Result<()> {
    if grid == 0 {
        return Err(Error::InvalidArgument("grid must be positive".into()).into());
    }
    let op: PeriodicJacobi = read_json(input)?;
    let table = density_table(&op, grid)?;
    let mut csv = String::from("E,dk_dE,hs_lower,band_index\n");
    for s in &table {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            s.energy,
            s.density,
            s.hs_lower_bound,
            s.band + 1
        ));
    }
    emit(output, &csv)?;
    let spec = lpspec::band_spectrum(&op)?;
    let increments = (0..op.period())
        .map(|b| phase_increment_in(&op, &spec, b))
        .collect::<Result<Vec<_>, _>>()?;
    #[derive(Serialize)]
    struct Summary {
        period: usize,
        phase_increments: Vec<f64>,
        band_length: BandLengthReport,
    }
    let text = to_json(&Summary {
        period: op.period(),
        phase_increments: increments,
        band_length: band_length_check(&op)?,
    })?;
    match summary {
        Some(p) => write_atomic(p, &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub enum HomogeneityInput {
    Run {
        path: PathBuf,
        step: Option<usize>,
    },
    Set {
        path: PathBuf,
        tau: f64,
        delta_max: f64,
    },
}

pub fn check_homogeneity(
    input: HomogeneityInput,
    output: Option<&Path>,
    n_delta: usize,
    n_points: usize,
) -> anyhow::Result<()> {
    let text = match input {
        HomogeneityInput::Run { path, step } => {
            let run: ConstructionRun = read_json(&path)?;
            let steps: Vec<usize> = match step {
                Some(s) => vec![s],
                None => (0..=run.depth()).collect(),
            };
            let reports = steps
                .into_iter()
                .map(|n| verify_step_homogeneity(&run, n, n_delta, n_points))
                .collect::<Result<Vec<_>, _>>()?;
            to_json(&reports)?
        }
        HomogeneityInput::Set {
            path,
            tau,
            delta_max,
        } => {
            let set: IntervalSet = read_json(&path)?;
            let report: HomogeneityReport =
                set.homogeneity_profile(tau, &ProfileGrid::new(delta_max, n_delta, n_points))?;
            to_json(&report)?
        }
    };
    emit(output, &text)
}

pub fn lift_hull(
    run: &Path,
    hull: HullSpec,
    q0: usize,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let run: ConstructionRun = read_json(run)?;
    let fs = lift_run(&run, &hull, q0)?;
    let increments = level_increments(&fs)?;
    emit(
        output,
        &to_json(&Lifted {
            hull: &hull,
            q0,
            functions: &fs,
            increments,
        })?,
    )
}

#[derive(Debug, Serialize)]
struct SweepReport {
    seed: u64,
    count: usize,
    max_period: usize,
    energies_per_band: usize,
    band_length_violations: usize,
    band_length_min_slack: f64,
    hs_violations: usize,
    hs_min_gap: f64,
}

/// Random-operator check of the band-length and Hilbert-Schmidt bounds.
pub fn sweep(
    seed: u64,
    count: usize,
    max_period: usize,
    per_band: usize,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    if count == 0 || max_period == 0 || per_band == 0 {
        return Err(Error::InvalidArgument("count, max period and grid must be positive".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SweepReport {
        seed,
        count,
        max_period,
        energies_per_band: per_band,
        band_length_violations: 0,
        band_length_min_slack: f64::INFINITY,
        hs_violations: 0,
        hs_min_gap: f64::INFINITY,
    };
    for _ in 0..count {
        let p = rng.gen_range(1..=max_period);
        let a: Vec<f64> = (0..p).map(|_| rng.gen_range(0.5..=2.0)).collect();
        let b: Vec<f64> = (0..p).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let op = PeriodicJacobi::new(PeriodicSequence::new(a)?, PeriodicSequence::new(b)?)?;
        let bl = band_length_check(&op)?;
        report.band_length_min_slack = report.band_length_min_slack.min(bl.slack);
        if !bl.holds {
            report.band_length_violations += 1;
        }
        let spec = lpspec::band_spectrum(&op)?;
        for &(lo, hi) in spec.bands() {
            for i in 0..per_band {
                let e = lo + (hi - lo) * (i as f64 + 0.5) / per_band as f64;
                let d = ids_density_in(&op, &spec, e, 0.0)?;
                let h = hs_lower_bound(&op, e)?;
                report.hs_min_gap = report.hs_min_gap.min(d - h);
                if h > d {
                    report.hs_violations += 1;
                }
            }
        }
    }
    emit(output, &to_json(&report)?)
}
