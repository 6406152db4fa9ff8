use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gpdisc::criteria::dist::{calibrate_design, CALIBRATION_GRID};
use gpdisc::criteria::{evaluate, CriterionId};
use gpdisc::design::{distance, Design, DesignSpace};
use gpdisc::figures::{self, EXAMPLE_SETTINGS};
use gpdisc::io::{JsonLines, read_design, read_measure, write_design, write_measure, write_table_csv, format_table_text, Table};
use gpdisc::kernels::{KernelSpec, ModelPair};
use gpdisc::measures::{
    calibrate_measure, check_necessary_condition, clusters, continuous_refine, fedorov_wynn, phi_p_measure, random_initial,
    simplex_measure, ConditionReport, DesignMeasure, PsiFunction, RefineOptions, CONDITION_TOL,
};
use gpdisc::rng::{replicate_stream, stream_rng};
use gpdisc::search::{sequential_run, CandidatePool, SequentialConfig};
use gpdisc::simulation::{default_rows, hit_rate_table_with, HitRateTable, TableConfig, TableRow, DEFAULT_SIZES};
use serde::Serialize;

use crate::config::{Command, Format, ReproduceId, RunConfig};
use crate::CliError;

const DESIGN_GRID: usize = 25;
const MEASURE_GRID: usize = 50;
const SURFACE_GRID: usize = 101;
const DEFAULT_P: f64 = 10.0;
const CURVE_POINTS: usize = 201;

pub fn run(command: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Design { passes, truth, log } => design(cfg, *passes, *truth, log.as_deref()),
        Command::Measure {
            iterations,
            idealised,
            raw,
            report,
        } => measure(cfg, *iterations, *idealised, *raw, report.as_deref()),
        Command::Surface { measure } => surface(cfg, measure),
        Command::Calibrate { lo, hi, design, measure } => calibrate(cfg, *lo, *hi, design.as_deref(), measure.as_deref()),
        Command::Hitrate { passes } => hitrate(cfg, *passes),
        Command::Scores { design } => scores(cfg, design),
        Command::Reproduce { id } => reproduce(cfg, *id),
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

/// `<out>` with `suffix` appended to its file name.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn emit_table(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = sink(path)?;
            table.write_csv(&mut w)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(path, table),
    }
}

#[derive(Serialize)]
struct PointsJson<'a> {
    dim: usize,
    points: Vec<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<&'a [f64]>,
}

fn emit_design(d: &Design, cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.out.as_deref();
    match cfg.format {
        Format::Csv => {
            let mut w = sink(path)?;
            write_design(&mut w, d)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(
            path,
            &PointsJson {
                dim: d.dim(),
                points: d.points().collect(),
                y: d.observations(),
                weights: None,
            },
        ),
    }
}

fn emit_measure(xi: &DesignMeasure, cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.out.as_deref();
    match cfg.format {
        Format::Csv => {
            let mut w = sink(path)?;
            write_measure(&mut w, xi)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(
            path,
            &PointsJson {
                dim: xi.dim(),
                points: xi.support().points().collect(),
                y: None,
                weights: Some(xi.weights()),
            },
        ),
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Lower and upper corners of the box: the starting points of sequential runs.
fn corners(space: &DesignSpace) -> Result<Design, CliError> {
    Ok(Design::from_points(&[space.lower().to_vec(), space.upper().to_vec()])?)
}

/// One line of the design run log.
#[derive(Serialize)]
#[serde(tag = "phase", rename_all = "lowercase")]
enum LogLine<'a> {
    Config {
        config: &'a RunConfig,
    },
    Greedy {
        step: usize,
        index: usize,
        point: &'a [f64],
        value: f64,
    },
    Exchange {
        swap: usize,
        value: f64,
        budget_exhausted: bool,
    },
    Sequential {
        n: usize,
        index: usize,
        point: &'a [f64],
        score: f64,
        y: f64,
        theta0_hat: Option<f64>,
        theta1_hat: Option<f64>,
    },
    Final {
        n: usize,
        value: Option<f64>,
    },
}

fn design(cfg: &RunConfig, passes: usize, truth: usize, log: Option<&Path>) -> Result<(), CliError> {
    let n = cfg.n.ok_or_else(|| CliError::Config("design: --n is required".into()))?;
    let space = cfg.space(DESIGN_GRID)?;
    let mut lines = vec![LogLine::Config { config: cfg }];
    let (d, value);
    let grid;
    let run;
    let pool;
    let greedy;
    let exchange;
    match cfg.criterion()? {
        TableRow::Sequential => {
            let seed = cfg.seed()?;
            let sc = SequentialConfig {
                truth,
                n_max: n,
                ..SequentialConfig::default()
            };
            let mut rng = stream_rng(seed, replicate_stream(truth, 0));
            grid = space.grid_design()?;
            let initial = corners(&space)?;
            run = sequential_run(&cfg.pair, &grid, &initial, &sc, &mut rng)?;
            let y = run.design.observations().expect("sequential designs carry observations");
            for (k, (&index, &score)) in run.chosen.iter().zip(&run.scores).enumerate() {
                let m = initial.len() + k + 1;
                let fit = run.fit_at(m);
                lines.push(LogLine::Sequential {
                    n: m,
                    index,
                    point: run.design.point(m - 1),
                    score,
                    y: y[m - 1],
                    theta0_hat: fit.map(|f| f.fit0.inverse_length),
                    theta1_hat: fit.map(|f| f.fit1.inverse_length),
                });
            }
            d = run.design.clone();
            value = None;
        }
        TableRow::Criterion(c) => {
            pool = CandidatePool::from_space(&cfg.pair, &space)?;
            greedy = pool.greedy(c, n)?;
            for (k, (&index, &v)) in greedy.indices.iter().zip(&greedy.values).enumerate() {
                lines.push(LogLine::Greedy {
                    step: k + 1,
                    index,
                    point: pool.candidates().point(index),
                    value: v,
                });
            }
            exchange = if c.is_prediction_based() || passes == 0 {
                None
            } else {
                Some(pool.exchange(c, &greedy.indices, passes)?)
            };
            if let Some(e) = &exchange {
                for (k, &v) in e.trace.iter().enumerate().skip(1) {
                    lines.push(LogLine::Exchange {
                        swap: k,
                        value: v,
                        budget_exhausted: e.budget_exhausted && k + 1 == e.trace.len(),
                    });
                }
            }
            let indices = exchange.as_ref().map_or(&greedy.indices, |e| &e.indices);
            d = pool.design(indices);
            value = if c.is_prediction_based() {
                None
            } else {
                Some(evaluate(c, &cfg.pair, &d)?)
            };
            if let Some(v) = value {
                eprintln!("{}: {} = {v:.10e}", c, c.label());
            }
        }
    }
    lines.push(LogLine::Final { n: d.len(), value });
    emit_design(&d, cfg)?;
    if let Some(path) = log.map(Path::to_path_buf).or_else(|| cfg.out.as_deref().map(|o| sibling(o, ".log.jsonl"))) {
        let mut out = JsonLines::new(sink(Some(&path))?);
        for line in &lines {
            out.write(line)?;
        }
        out.into_inner().flush()?;
    }
    Ok(())
}

#[derive(Serialize)]
struct FwSummary {
    iterations: usize,
    phi_initial: f64,
    phi_final: f64,
    max_derivative: f64,
    support_size: usize,
}

#[derive(Serialize)]
struct RefineSummary {
    phi_before: f64,
    phi_after: f64,
    iterations: usize,
    unchanged: bool,
}

#[derive(Serialize)]
struct MeasureReport<'a> {
    config: &'a RunConfig,
    p: f64,
    delta: f64,
    idealised: bool,
    fedorov_wynn: FwSummary,
    refine: RefineSummary,
    support_clusters: usize,
    cluster_weights: &'a [f64],
    pairwise_distances: Vec<f64>,
    phi: f64,
    condition: &'a ConditionReport,
}

fn measure(cfg: &RunConfig, iterations: usize, idealised: bool, raw: bool, report: Option<&Path>) -> Result<(), CliError> {
    let p = cfg.p.unwrap_or(DEFAULT_P);
    let seed = cfg.seed()?;
    let space = cfg.space(MEASURE_GRID)?;
    let grid = space.grid_design()?;
    let kernel_psi = PsiFunction::from_kernels(&cfg.pair, true)?;
    let delta = kernel_psi.delta().expect("kernel profile has a peak");
    let psi = if idealised { PsiFunction::idealised(delta)? } else { kernel_psi };

    let fw = fedorov_wynn(&psi, &grid, p, iterations, &random_initial(&grid, seed)?)?;
    let refined = continuous_refine(&psi, &fw.measure, p, &space, &RefineOptions::default())?;
    let clustered = clusters(&refined.measure, delta);
    let xi = if raw { &refined.measure } else { &clustered };
    let condition = check_necessary_condition(&psi, xi, &grid, p, CONDITION_TOL)?;
    let mut dists = Vec::new();
    for i in 0..clustered.len() {
        for j in 0..i {
            dists.push(distance(clustered.point(i), clustered.point(j)));
        }
    }
    emit_measure(xi, cfg)?;

    let rep = MeasureReport {
        config: cfg,
        p,
        delta,
        idealised,
        fedorov_wynn: FwSummary {
            iterations: fw.iterations,
            phi_initial: fw.phi_trace[0],
            phi_final: *fw.phi_trace.last().expect("trace starts with the initial value"),
            max_derivative: fw.max_derivative,
            support_size: fw.measure.len(),
        },
        refine: RefineSummary {
            phi_before: refined.phi_before,
            phi_after: refined.phi_after,
            iterations: refined.iterations,
            unchanged: refined.unchanged,
        },
        support_clusters: clustered.len(),
        cluster_weights: clustered.weights(),
        pairwise_distances: dists,
        phi: phi_p_measure(&psi, xi, p),
        condition: &condition,
    };
    if let Some(path) = report.map(Path::to_path_buf).or_else(|| cfg.out.as_deref().map(|o| sibling(o, ".report.json"))) {
        write_json(Some(&path), &rep)?;
    }
    eprintln!(
        "support clusters: {}; phi_{p} = {:.10e}; max delta_xi violation = {:.3e} at {:?} ({})",
        rep.support_clusters,
        rep.phi,
        condition.max_violation,
        condition.worst_point,
        if condition.pass { "pass" } else { "fail" }
    );
    Ok(())
}

fn surface(cfg: &RunConfig, measure: &Path) -> Result<(), CliError> {
    let xi = read_measure(open(measure)?)?;
    let p = cfg.p.unwrap_or(DEFAULT_P);
    let space = cfg.space(SURFACE_GRID)?;
    if space.dim() != 2 || xi.dim() != 2 {
        return Err(CliError::Config("surface: needs a two-dimensional space and measure".into()));
    }
    let psi = PsiFunction::from_kernels(&cfg.pair, true)?;
    let m = cfg.grid.unwrap_or(SURFACE_GRID);
    let (lo, hi) = (space.lower(), space.upper());
    let t = figures::delta_surface(&psi, &xi, p, [lo[0], lo[1]], [hi[0], hi[1]], m)?;
    emit_table(&t, cfg.format, cfg.out.as_deref())
}

fn calibrate(cfg: &RunConfig, lo: f64, hi: f64, design: Option<&Path>, measure: Option<&Path>) -> Result<(), CliError> {
    let TableRow::Criterion(c) = cfg.criterion()? else {
        return Err(CliError::Config("calibrate: needs a distance criterion".into()));
    };
    let cal = match measure {
        Some(path) => {
            let CriterionId::PhiP(p) = *c else {
                return Err(CliError::Config("calibrate --measure: needs a p<k> criterion".into()));
            };
            calibrate_measure(&cfg.pair, &read_measure(open(path)?)?, p, lo, hi, CALIBRATION_GRID)?
        }
        None => {
            let d = match design {
                Some(path) => read_design(open(path)?)?,
                None => cfg.space(DESIGN_GRID)?.grid_design()?,
            };
            calibrate_design(&cfg.pair, c, &d, lo, hi, CALIBRATION_GRID)?
        }
    };
    let mut t = Table::new(["theta0", "theta1", "value", "at_boundary"]);
    t.push(vec![
        cfg.pair.k0.inverse_length(),
        cal.theta1,
        cal.value,
        f64::from(u8::from(cal.at_boundary)),
    ]);
    emit_table(&t, cfg.format, cfg.out.as_deref())
}

fn hit_rates(cfg: &RunConfig, rows: &[TableRow], sizes: &[usize], seed: u64, passes: usize) -> Result<HitRateTable, CliError> {
    let space = cfg.space(DESIGN_GRID)?;
    let pool = CandidatePool::from_space(&cfg.pair, &space)?;
    let mut tc = TableConfig::new(corners(&space)?);
    tc.replicates = cfg.replicates.unwrap_or(tc.replicates);
    tc.seed = seed;
    tc.exchange_passes = passes;
    Ok(hit_rate_table_with(rows, sizes, &pool, &tc, |row, _| eprintln!("done: {}", row.label())))
}

fn emit_hit_rates(table: &HitRateTable, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = sink(path)?;
            write_table_csv(&mut w, table)?;
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(path, table),
    }
}

fn hitrate(cfg: &RunConfig, passes: usize) -> Result<(), CliError> {
    let rows = if cfg.criteria.is_empty() { default_rows() } else { cfg.criteria.clone() };
    let sizes = cfg.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let table = hit_rates(cfg, &rows, &sizes, cfg.seed()?, passes)?;
    emit_hit_rates(&table, cfg.format, cfg.out.as_deref())?;
    eprint!("{}", format_table_text(&table));
    Ok(())
}

fn scores(cfg: &RunConfig, design: &Path) -> Result<(), CliError> {
    let d = read_design(open(design)?)?.without_observations();
    let eval = cfg.space(DESIGN_GRID)?.grid_design()?;
    let t = figures::score_field(&cfg.pair, &d, &eval)?;
    emit_table(&t, cfg.format, cfg.out.as_deref())
}

#[derive(Serialize)]
struct SurfaceSetting {
    file: String,
    pair: ModelPair,
    p: f64,
    delta: f64,
    simplex: Vec<Vec<f64>>,
}

fn reproduce(cfg: &RunConfig, id: ReproduceId) -> Result<(), CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let ext = cfg.format.extension();
    let path = |stem: &str| dir.join(format!("{stem}.{ext}"));
    let mut written = Vec::new();
    let mut put = |stem: &str, t: &Table| -> Result<(), CliError> {
        let p = path(stem);
        emit_table(t, cfg.format, Some(&p))?;
        written.push(p);
        Ok(())
    };
    let matern = |t0: f64, t1: f64| ModelPair::new(KernelSpec::matern32(t0), KernelSpec::matern52(t1));

    match id {
        ReproduceId::Ex1 | ReproduceId::Ex2 => {
            let (scaled, name) = if id == ReproduceId::Ex1 { (true, "ex1") } else { (false, "ex2") };
            for ((a0, a1), side) in EXAMPLE_SETTINGS.into_iter().zip(["left", "right"]) {
                put(&format!("{name}_{side}"), &figures::exponential_example(scaled, a0, a1, CURVE_POINTS)?)?;
            }
        }
        ReproduceId::Ex3 => {
            let cal = figures::uniform_calibration(&matern(1.0, 1.0), 2.0, 0.5, 3.0)?;
            let profiles = figures::kernel_profiles(
                &[
                    ("k0", KernelSpec::matern32(1.0)),
                    ("k1", KernelSpec::matern52(1.0)),
                    ("k1_calibrated", KernelSpec::matern52(cal.theta1)),
                ],
                1.0,
                CURVE_POINTS,
            )?;
            let xs = Design::from_1d(&figures::linspace(0.0, 1.0, CURVE_POINTS))?;
            let sc = figures::score_field(&matern(1.0, cal.theta1), &figures::regular_design(11)?, &xs)?;
            let mut c = Table::new(["theta0", "theta1", "value", "at_boundary"]);
            c.push(vec![1.0, cal.theta1, cal.value, f64::from(u8::from(cal.at_boundary))]);
            put("ex3_calibration", &c)?;
            put("ex3_kernels", &profiles)?;
            put("ex3_scores", &sc)?;
        }
        ReproduceId::Fig4 => {
            let crit = [CriterionId::PhiP(1.0), CriterionId::PhiP(2.0), CriterionId::PhiF, CriterionId::PhiKl];
            let thetas = figures::linspace(0.75, 3.0, 226);
            put("fig4", &figures::criterion_sweep(&matern(1.0, 1.0), &figures::regular_design(11)?, &crit, &thetas, true)?)?;
        }
        ReproduceId::Fig5 => {
            let cal = figures::uniform_calibration(&matern(1.0, 1.0), 2.0, 0.5, 3.0)?;
            let mut psi2 = Table::new(["t", "psi2_theta1_1", "psi2_theta1_calibrated"]);
            let (a, b) = (matern(1.0, 1.0), matern(1.0, cal.theta1));
            for t in figures::linspace(0.0, 4.0, 401) {
                psi2.push(vec![t, a.psi(t).powi(2), b.psi(t).powi(2)]);
            }
            put("fig5_psi2", &psi2)?;

            let m = cfg.grid.unwrap_or(SURFACE_GRID);
            let settings = [
                ("fig5_surface_exp_p1.5", ModelPair::new(KernelSpec::exponential(1.0), KernelSpec::matern52(1.0)), 1.5),
                ("fig5_surface_matern_p10", matern(1.0, 1.0), 10.0),
                ("fig5_surface_matern107_p2", matern(1.0, 1.07), 2.0),
            ];
            let mut meta = Vec::new();
            for (stem, pair, p) in settings {
                let psi = PsiFunction::from_kernels(&pair, true)?;
                let delta = psi.delta().expect("kernel profile has a peak");
                let xi = simplex_measure(2, delta, &[0.0, 0.0], None)?;
                let s = figures::delta_surface(&psi, &xi, p, [-delta; 2], [2.0 * delta; 2], m)?;
                put(stem, &s)?;
                meta.push(SurfaceSetting {
                    file: format!("{stem}.{ext}"),
                    pair,
                    p,
                    delta,
                    simplex: xi.support().points().map(<[f64]>::to_vec).collect(),
                });
            }
            let p = dir.join("fig5_settings.json");
            write_json(Some(&p), &meta)?;
            written.push(p);
        }
        ReproduceId::Table1 => {
            let rows = if cfg.criteria.is_empty() { default_rows() } else { cfg.criteria.clone() };
            let sizes = cfg.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
            let table = hit_rates(cfg, &rows, &sizes, cfg.seed.unwrap_or(0), gpdisc::search::EXCHANGE_PASSES)?;
            let p = path("table1");
            emit_hit_rates(&table, cfg.format, Some(&p))?;
            written.push(p);
            let p = dir.join("table1.txt");
            fs::write(&p, format_table_text(&table))?;
            written.push(p);
        }
    }
    for p in written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}
