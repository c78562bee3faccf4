use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use overlatt::geometry2d::critical_radii_2d_scaled;
use overlatt::geometry3d::{critical_radii_3d, dual_radii_3d, CapArrangement, DistanceClass};
use overlatt::lattice::DistortedLattice;
use overlatt::measures::{LatticeMeasures, OracleBudget, OverlapMeasure};
use overlatt::output::{measure_table, quality_row, quality_table, Cell, Format, Table, QUALITY_COLUMNS};
use overlatt::quality::{
    crossover_omega, optimize_delta, qual_covering, qual_packing, QualityMode, QualityQuery, QualityResult,
};
use overlatt::verify::{self, Fault, Suite, VerifyConfig};
use overlatt::Error;

const DELTA_RANGE: (f64, f64) = (0.05, 20.0);

#[derive(Debug, Parser)]
#[command(name = "overlatt", version, about = "Relaxed packing and covering on distorted integer lattices")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "OVERLATT_THREADS")]
    pub par: Option<usize>,

    /// Write output to this path instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long, global = true)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Packing, covering and critical radii.
    Radii(LatticeArgs),
    /// Density, union and overlap measures at one radius.
    Measure(MeasureArgs),
    /// Relaxed packing or covering quality of one lattice.
    Quality(QualityArgs),
    /// Optimal distortion for a quality query.
    Optimize(OptimizeArgs),
    /// Overlap budget at which two lattices exchange packing optimality.
    Crossover(CrossoverArgs),
    /// Parameter sweeps and figure data.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub r: f64,
    /// Attach a Monte Carlo union estimate (required for dimensions above 3).
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// packing or covering.
    #[arg(long, default_value = "packing")]
    pub mode: QualityMode,
    /// dist or vol (packing mode only).
    #[arg(long, default_value = "dist")]
    pub measure: OverlapMeasure,
    #[arg(long)]
    pub omega: f64,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value = "packing")]
    pub mode: QualityMode,
    #[arg(long, default_value = "dist")]
    pub measure: OverlapMeasure,
    #[arg(long)]
    pub omega: f64,
    #[arg(long, default_value_t = DELTA_RANGE.0)]
    pub lo: f64,
    #[arg(long, default_value_t = DELTA_RANGE.1)]
    pub hi: f64,
    /// Coarse scan points.
    #[arg(long, default_value_t = 400)]
    pub scan: usize,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.5)]
    pub delta_a: f64,
    #[arg(long, default_value_t = 2.0)]
    pub delta_b: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hi: f64,
    #[arg(long, default_value_t = 51)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Packing quality, distance measure, n = 3, ω = 0.5, against δ.
    Fig1Left,
    /// Covering quality, n = 3, ω = 0.5, against δ.
    Fig1Right,
    /// Volume-measure packing quality on a (δ, ω) grid, n = 3.
    Fig3Surface,
    /// Volume-measure packing quality against δ for ω = 0.05, 0.1, 0.3.
    Fig3Middle,
    /// Volume-measure packing quality against ω for δ = 1/2, 1, 2.
    Fig3Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variable {
    Delta,
    Omega,
    R,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, conflicts_with = "variable")]
    pub preset: Option<Preset>,
    #[arg(long, requires_all = ["lo", "hi"])]
    pub variable: Option<Variable>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    /// Log-spaced instead of evenly spaced values.
    #[arg(long)]
    pub log: bool,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, default_value = "packing")]
    pub mode: QualityMode,
    #[arg(long, default_value = "dist")]
    pub measure: OverlapMeasure,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Corrupt a closed form on purpose (negative test of the suite).
    #[arg(long, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// Exit status: 0 success, 1 verification failure, 2 usage or evaluation error.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    if let Some(n) = cli.par {
        if n == 0 {
            bail!("--par must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let format = cli.format;
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let status = match cli.command {
        Command::Radii(a) => emit(radii(&a)?, format, &mut sink)?,
        Command::Measure(a) => emit(measure(&a)?, format, &mut sink)?,
        Command::Quality(a) => emit(quality_table(&[quality(&a)?]), format, &mut sink)?,
        Command::Optimize(a) => emit(optimize(&a)?, format, &mut sink)?,
        Command::Crossover(a) => match crossover(&a) {
            Ok(t) => emit(t, format, &mut sink)?,
            Err(e @ Error::SignChanges(_)) => {
                eprintln!("crossover: {e}");
                1
            }
            Err(e) => return Err(e.into()),
        },
        Command::Sweep(a) => emit(sweep(&a)?, format, &mut sink)?,
        Command::Verify(a) => verify(&a, format, &mut sink)?,
    };
    sink.flush()?;
    Ok(status)
}

fn emit(table: Table, format: Option<Format>, sink: &mut dyn Write) -> anyhow::Result<i32> {
    table.write(format.unwrap_or(Format::Csv), sink)?;
    Ok(0)
}

fn lattice(a: &LatticeArgs) -> Result<DistortedLattice, Error> {
    DistortedLattice::new(a.dim, a.delta)
}

fn radius_rows(t: &mut Table, names: &[&str], values: &[f64], counts: &[Option<usize>]) {
    for ((name, &v), &c) in names.iter().zip(values).zip(counts) {
        t.push(vec![(*name).into(), v.into(), c.map_or(Cell::Missing, |c| Cell::Int(c as i64))]);
    }
}

fn count_at(classes: &[DistanceClass], d: f64) -> Option<usize> {
    classes
        .iter()
        .find(|c| (c.distance - d).abs() <= 1e-9 * d.max(1.0))
        .map(|c| c.count)
}

fn radii(a: &LatticeArgs) -> anyhow::Result<Table> {
    let lat = lattice(a)?;
    let mut t = Table::new(vec!["name", "value", "multiplicity"]);
    radius_rows(
        &mut t,
        &["packing", "covering", "shortest_vector"],
        &[lat.packing_radius(), lat.covering_radius(), lat.shortest_vector_norm()],
        &[None, None, None],
    );
    match a.dim {
        2 => {
            let c = critical_radii_2d_scaled(a.delta)?;
            radius_rows(&mut t, &["r1", "r2", "r3"], &[c.r1, c.r2, c.r3], &[Some(4), Some(2), Some(6)]);
        }
        3 => {
            let arr = CapArrangement::new(a.delta)?;
            let (planes, edges, vertices) = (arr.plane_classes(), arr.edge_classes(), arr.vertex_classes());
            if a.delta <= 1.0 {
                let c = critical_radii_3d(a.delta)?;
                let v = c.as_array();
                let counts = [
                    count_at(&planes, v[0]),
                    count_at(&planes, v[1]),
                    count_at(&planes, v[2]),
                    count_at(&edges, v[3]),
                    count_at(&edges, v[4]),
                    count_at(&vertices, v[5]),
                ];
                radius_rows(&mut t, &["r1", "r2", "r3", "r4", "r5", "r6"], &v, &counts);
            } else {
                let d = dual_radii_3d(a.delta)?;
                radius_rows(
                    &mut t,
                    &["s1", "s2"],
                    &[d.s1, d.s2],
                    &[count_at(&vertices, d.s1), count_at(&vertices, d.s2)],
                );
            }
        }
        _ => {}
    }
    Ok(t)
}

fn measure(a: &MeasureArgs) -> anyhow::Result<Table> {
    let lat = lattice(&a.lattice)?;
    let mut m = LatticeMeasures::new(&lat)?;
    if a.oracle {
        m = m.with_oracle(OracleBudget {
            samples: a.samples,
            seed: a.seed,
        });
    }
    Ok(measure_table(&[m.report(a.r)?]))
}

fn quality(a: &QualityArgs) -> Result<QualityResult, Error> {
    let lat = lattice(&a.lattice)?;
    match a.mode {
        QualityMode::Packing => qual_packing(&lat, a.measure, a.omega),
        QualityMode::Covering => qual_covering(&lat, a.omega),
    }
}

fn optimize(a: &OptimizeArgs) -> anyhow::Result<Table> {
    let mut q = match a.mode {
        QualityMode::Packing => QualityQuery::packing(a.dim, a.measure, a.omega, a.lo, a.hi),
        QualityMode::Covering => QualityQuery::covering(a.dim, a.omega, a.lo, a.hi),
    };
    q.scan_points = a.scan;
    let o = optimize_delta(&q)?;
    let mut columns = QUALITY_COLUMNS.to_vec();
    columns.extend(["best", "plateau_lo", "plateau_hi"]);
    let mut t = Table::new(columns);
    for r in &o.ties {
        let mut row = quality_row(r);
        let best = r.delta == o.best.delta;
        let (lo, hi) = match (best, o.plateau) {
            (true, Some((lo, hi))) => (Some(lo), Some(hi)),
            _ => (None, None),
        };
        row.extend([Cell::Bool(best), lo.into(), hi.into()]);
        t.push(row);
    }
    Ok(t)
}

fn crossover(a: &CrossoverArgs) -> Result<Table, Error> {
    let c = crossover_omega(a.dim, a.delta_a, a.delta_b, (a.lo, a.hi), a.grid)?;
    let mut t = Table::new(vec!["delta_a", "delta_b", "omega", "quality_a", "quality_b", "sign_changes"]);
    t.push(vec![
        a.delta_a.into(),
        a.delta_b.into(),
        c.omega.into(),
        c.quality_a.into(),
        c.quality_b.into(),
        Cell::Int(c.sign_changes as i64),
    ]);
    Ok(t)
}

fn spaced(lo: f64, hi: f64, steps: usize, log: bool) -> anyhow::Result<Vec<f64>> {
    if lo.is_nan() || hi.is_nan() || lo >= hi || steps < 2 || (log && lo <= 0.0) {
        bail!("invalid sweep range: lo = {lo}, hi = {hi}, steps = {steps}");
    }
    Ok((0..steps)
        .map(|i| {
            let t = i as f64 / (steps - 1) as f64;
            if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

fn check_delta_range(lo: f64, hi: f64) -> anyhow::Result<()> {
    if lo < DELTA_RANGE.0 || hi > DELTA_RANGE.1 {
        bail!(
            "delta sweeps are supported on [{}, {}], got [{lo}, {hi}]",
            DELTA_RANGE.0,
            DELTA_RANGE.1
        );
    }
    Ok(())
}

fn evaluate(n: usize, mode: QualityMode, measure: OverlapMeasure, delta: f64, omega: f64) -> Result<QualityResult, Error> {
    let lat = DistortedLattice::new(n, delta)?;
    match mode {
        QualityMode::Packing => qual_packing(&lat, measure, omega),
        QualityMode::Covering => qual_covering(&lat, omega),
    }
}

fn quality_grid(
    n: usize,
    mode: QualityMode,
    measure: OverlapMeasure,
    points: Vec<(f64, f64)>,
) -> Result<Vec<QualityResult>, Error> {
    points
        .into_par_iter()
        .map(|(d, w)| evaluate(n, mode, measure, d, w))
        .collect()
}

// δ from 0.05 to 4.05 in steps of 0.01; hits 1/2, 1 and 2.
fn figure_deltas() -> Vec<f64> {
    (0..=400).map(|i| 0.05 + 0.01 * i as f64).collect()
}

fn sweep(a: &SweepArgs) -> anyhow::Result<Table> {
    use OverlapMeasure::{Distance, Volume};
    use QualityMode::{Covering, Packing};
    let pairs = |ds: &[f64], ws: &[f64]| -> Vec<(f64, f64)> {
        ds.iter().flat_map(|&d| ws.iter().map(move |&w| (d, w))).collect()
    };
    let rows = match (a.preset, a.variable) {
        (Some(Preset::Fig1Left), _) => quality_grid(3, Packing, Distance, pairs(&figure_deltas(), &[0.5]))?,
        (Some(Preset::Fig1Right), _) => quality_grid(3, Covering, Distance, pairs(&figure_deltas(), &[0.5]))?,
        (Some(Preset::Fig3Surface), _) => {
            let ds: Vec<f64> = (0..=80).map(|i| 0.05 + 0.05 * i as f64).collect();
            let ws: Vec<f64> = (0..=25).map(|i| 0.02 * i as f64).collect();
            quality_grid(3, Packing, Volume, pairs(&ds, &ws))?
        }
        (Some(Preset::Fig3Middle), _) => {
            let mut p = Vec::new();
            for w in [0.05, 0.1, 0.3] {
                p.extend(figure_deltas().into_iter().map(|d| (d, w)));
            }
            quality_grid(3, Packing, Volume, p)?
        }
        (Some(Preset::Fig3Right), _) => {
            let ws: Vec<f64> = (0..=100).map(|i| 0.005 * i as f64).collect();
            quality_grid(3, Packing, Volume, pairs(&[0.5, 1.0, 2.0], &ws))?
        }
        (None, Some(var)) => {
            let lo = a.lo.unwrap_or_default();
            let hi = a.hi.unwrap_or_default();
            let xs = spaced(lo, hi, a.steps, a.log)?;
            match var {
                Variable::Delta => {
                    check_delta_range(lo, hi)?;
                    let w = a.omega.context("--omega is required when sweeping delta")?;
                    quality_grid(a.dim, a.mode, a.measure, xs.into_iter().map(|d| (d, w)).collect())?
                }
                Variable::Omega => {
                    let d = a.delta.context("--delta is required when sweeping omega")?;
                    quality_grid(a.dim, a.mode, a.measure, xs.into_iter().map(|w| (d, w)).collect())?
                }
                Variable::R => {
                    let d = a.delta.context("--delta is required when sweeping r")?;
                    let m = LatticeMeasures::new(&DistortedLattice::new(a.dim, d)?)?;
                    let reports = xs.par_iter().map(|&r| m.report(r)).collect::<Result<Vec<_>, _>>()?;
                    return Ok(measure_table(&reports));
                }
            }
        }
        (None, None) => bail!("sweep needs --preset or --variable with --lo and --hi"),
    };
    Ok(quality_table(&rows))
}

fn verify(a: &VerifyArgs, format: Option<Format>, sink: &mut dyn Write) -> anyhow::Result<i32> {
    let config = VerifyConfig {
        samples: a.samples,
        seed: a.seed,
        fault: a.inject_fault,
    };
    let report = verify::run(a.suite, &config)?;
    match format.unwrap_or(Format::Json) {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *sink, &report)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut t = Table::new(vec!["criterion", "name", "cell", "observed", "expected", "tolerance", "passed"]);
            for c in &report.checks {
                t.push(vec![
                    Cell::Int(i64::from(c.criterion)),
                    c.name.into(),
                    c.cell.as_str().into(),
                    c.observed.into(),
                    c.expected.into(),
                    c.tolerance.into(),
                    Cell::Bool(c.passed),
                ]);
            }
            t.write_csv(&mut *sink)?;
        }
    }
    for c in report.failed() {
        eprintln!(
            "FAIL criterion {} {} [{}]: observed {} expected {} tolerance {}",
            c.criterion, c.name, c.cell, c.observed, c.expected, c.tolerance
        );
    }
    eprintln!(
        "verify {}: {} checks, {} failed",
        report.suite,
        report.checks.len(),
        report.failures
    );
    Ok(if report.passed { 0 } else { 1 })
}
