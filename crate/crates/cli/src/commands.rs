use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use cea_core::equilibrium::{self, TakeoverConfig};
use cea_core::experiments::{compare_settings, read_runs, Comparison, PemRunSpec, RunOutcome, SweepSpec};
use cea_core::pem::{self, Aggregation, BetaPrior, SigmaTable};
use cea_core::Error;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{out_dir, write_file, write_meta};
use crate::parse;

pub fn takeover(a: &TakeoverArgs) -> CliResult<()> {
    let shape = parse::grid(&a.grid)?;
    let betas = parse::betas(&a.betas)?;
    let dir = out_dir(&a.out.out)?;
    let cfg = TakeoverConfig {
        replicates: a.replicates,
        max_generations: a.cap,
        seed: a.seed,
        ..TakeoverConfig::new(shape, betas[0])
    };
    let sweep = equilibrium::takeover_sweep(&betas, &cfg)?;
    write_file(&dir, "growth_curves.csv", |w| equilibrium::write_curves(&sweep, w))?;
    write_file(&dir, "growth_rates.csv", |w| equilibrium::write_growth_rates(&sweep, w))?;
    write_file(&dir, "takeover_summary.csv", |w| equilibrium::write_summary(&sweep, w))?;
    write_meta(&dir, "takeover", Some(a.seed))?;
    for bc in &sweep {
        let s = bc.summary();
        if s.defined < s.replicates {
            eprintln!(
                "beta {}: takeover undefined in {} of {} replicates (cap {})",
                s.beta,
                s.replicates - s.defined,
                s.replicates,
                cfg.cap()
            );
        }
    }
    Ok(())
}

const RUNS_FILE: &str = "runs.csv";

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let spec = SweepSpec {
        shape: parse::grid(&a.grid)?,
        betas: parse::betas(&a.betas)?,
        replicates: a.replicates.unwrap_or(if a.full_scale { 200 } else { 30 }),
        max_generations: a.generations,
        seed: a.seed,
    };
    if !a.compare.is_empty() {
        if a.compare.len() != 2 {
            return Err(CliError::Usage("--compare takes exactly two beta values".into()));
        }
        for b in &a.compare {
            if !spec.betas.contains(b) {
                return Err(CliError::Usage(format!("--compare beta {b} is not part of the sweep")));
            }
        }
    }
    let problem = parse::problem(&a.problem)?.load()?;
    let dir = out_dir(&a.out.out)?;
    let runs_path = dir.join(RUNS_FILE);

    let existing = if a.resume && runs_path.exists() {
        let f = File::open(&runs_path).map_err(|e| Error::io_at(&runs_path, e))?;
        read_runs(BufReader::new(f))?
    } else {
        Vec::new()
    };
    // Progress log: finished runs are appended as they complete so that an
    // interrupted sweep can be resumed. The file is rewritten in job order
    // at the end.
    let mut log = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&runs_path)
        .map_err(|e| Error::io_at(&runs_path, e))?;
    writeln!(log, "{}", RunOutcome::HEADER)?;
    for o in &existing {
        writeln!(log, "{}", o.csv_line())?;
    }
    log.flush()?;
    let log = Mutex::new(log);
    let result = problem.sweep(&spec, &existing, |o| {
        let mut f = log.lock().expect("progress log lock");
        // A failed progress write only costs resumability.
        let _ = writeln!(f, "{}", o.csv_line()).and_then(|_| f.flush());
    })?;
    drop(log);
    if a.resume {
        eprintln!("resumed {} of {} runs", existing.len(), result.runs.len());
    }

    write_file(&dir, RUNS_FILE, |w| result.write_runs(w))?;
    write_file(&dir, "sweep_summary.csv", |w| result.write_summary(w))?;
    if let [x, y] = a.compare[..] {
        let c = compare_settings(&result, x, y)?;
        write_file(&dir, "comparison.csv", |w| {
            writeln!(w, "{}", Comparison::HEADER)?;
            writeln!(w, "{}", c.csv_line())
        })?;
        eprintln!(
            "beta {x} vs {y}: p = {:.4}, better = {}",
            c.p_value,
            c.better.map_or("none".into(), |b| b.to_string())
        );
    }
    problem.save_landscape(&dir.join("landscape.json"))?;
    write_meta(&dir, "sweep", Some(a.seed))?;
    Ok(())
}

pub fn sigma_table(a: &SigmaArgs) -> CliResult<()> {
    let shape = parse::grid(&a.grid)?;
    let betas = parse::betas(&a.betas)?;
    let dir = out_dir(&a.out.out)?;
    let table = pem::build_sigma_table(&betas, a.horizon, shape, a.replicates, a.seed)?;
    write_file(&dir, "sigma_table.csv", |w| table.write_csv(w))?;
    write_meta(&dir, "sigma-table", Some(a.seed))?;
    Ok(())
}

fn load_sigma(path: &Path) -> CliResult<SigmaTable> {
    let f = File::open(path).map_err(|e| Error::io_at(path, e))?;
    Ok(SigmaTable::read_csv(BufReader::new(f))?)
}

pub fn pem(a: &PemArgs) -> CliResult<()> {
    let shape = parse::grid(&a.grid)?;
    let (lo, hi) = parse::range(&a.beta_range)?;
    if !(0.0..=1.0).contains(&a.run_beta) {
        return Err(CliError::Usage(format!("--run-beta {} outside [0, 1]", a.run_beta)));
    }
    let prior = BetaPrior::new(a.prior_a, a.prior_b)?;
    let problem = parse::problem(&a.problem)?.load()?;
    let dir = out_dir(&a.out.out)?;

    let table = match &a.sigma_table {
        Some(path) => load_sigma(path)?,
        None => {
            let betas = parse::beta_grid(&a.sigma_grid)?;
            let t = pem::build_sigma_table(&betas, a.horizon, shape, a.sigma_replicates, a.seed)?;
            write_file(&dir, "sigma_table.csv", |w| t.write_csv(w))?;
            t
        }
    };
    let (t_lo, t_hi) = table.range();
    if t_lo > lo + 1e-9 || t_hi < hi - 1e-9 {
        return Err(Error::Config(format!(
            "sigma table covers beta {t_lo}..{t_hi}, but {lo}..{hi} was requested"
        ))
        .into());
    }
    let lambda = table.implied_lambda();
    if (lambda - shape.size() as f64).abs() > 1e-6 * lambda {
        eprintln!(
            "warning: sigma table was built for a population of {lambda}, runs use {}",
            shape.size()
        );
    }

    let spec = PemRunSpec {
        shape,
        beta: a.run_beta,
        runs: a.runs,
        max_generations: a.generations,
        seed: a.seed,
    };
    let traces = problem.pem_traces(&spec)?;
    let aggregation = match a.aggregation {
        AggregationArg::Pooled => Aggregation::Pooled,
        AggregationArg::RunMean => Aggregation::RunMean,
    };
    let series = pem::estimate_pij(&traces, a.window, prior, aggregation)?;
    let stars = pem::optimal_beta(&series, &table);
    write_file(&dir, "pij.csv", |w| pem::write_pij(&series, w))?;
    write_file(&dir, "beta_star.csv", |w| pem::write_beta_star(&stars, w))?;
    write_meta(&dir, "pem", Some(a.seed))?;

    let low = stars.iter().filter(|s| s.low_confidence).count();
    if low > 0 {
        eprintln!("warning: {low} of {} windows are low-confidence", stars.len());
    }
    let tied = stars.iter().filter(|s| s.ties.len() > 1).count();
    if tied > 0 {
        eprintln!("warning: {tied} windows have several tied beta values");
    }
    Ok(())
}

/// Reads a CSV with header and returns the requested columns by name.
fn columns(path: &Path, names: &[&str]) -> CliResult<Vec<Vec<String>>> {
    let f = File::open(path).map_err(|e| Error::io_at(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let cols: Vec<&str> = header.split(',').collect();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| {
            cols.iter().position(|c| c == n).ok_or_else(|| {
                Error::Parse {
                    line: 1,
                    token: 0,
                    message: format!("{}: no column {n:?}", path.display()),
                }
                .into()
            })
        })
        .collect::<CliResult<_>>()?;
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        rows.push(idx.iter().map(|&i| f.get(i).unwrap_or(&"").to_string()).collect());
    }
    Ok(rows)
}

struct Figure {
    output: &'static str,
    input: &'static str,
    pick: &'static [&'static str],
    header: &'static str,
}

const FIGURES: &[Figure] = &[
    Figure {
        output: "fig2.csv",
        input: "takeover_summary.csv",
        pick: &["beta", "mean_takeover"],
        header: "beta,mean_takeover",
    },
    Figure {
        output: "fig3.csv",
        input: "growth_rates.csv",
        pick: &["beta", "t", "mean_N", "mean_dN"],
        header: "beta,t,N,dN",
    },
    Figure {
        output: "fig5_7.csv",
        input: "sweep_summary.csv",
        pick: &["beta", "mean", "std"],
        header: "beta,mean,std",
    },
    Figure {
        output: "fig6_8.csv",
        input: "pij.csv",
        pick: &["window_start", "p00", "p01", "p11"],
        header: "window_start,p00,p01,p11",
    },
    Figure {
        output: "fig9.csv",
        input: "beta_star.csv",
        pick: &["window_start", "beta_star"],
        header: "window_start,beta_star",
    },
];

pub fn plotdata(a: &PlotArgs) -> CliResult<()> {
    for d in &a.input {
        if !d.is_dir() {
            return Err(Error::io_at(d, std::io::ErrorKind::NotFound.into()).into());
        }
    }
    let dir = out_dir(&a.out.out)?;
    let mut written = 0;
    for fig in FIGURES {
        let Some(src) = a.input.iter().map(|d| d.join(fig.input)).find(|p| p.exists()) else {
            continue;
        };
        let rows = columns(&src, fig.pick)?;
        write_file(&dir, fig.output, |w| {
            writeln!(w, "{}", fig.header)?;
            // undefined takeover means have no plot coordinate
            for r in rows.iter().filter(|r| r.iter().all(|v| v != "undefined")) {
                writeln!(w, "{}", r.join(","))?;
            }
            Ok(())
        })?;
        written += 1;
    }
    if written == 0 {
        let names: Vec<&str> = FIGURES.iter().map(|f| f.input).collect();
        return Err(Error::io_at(
            &a.input[0],
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no result files found (looked for {})", names.join(", ")),
            ),
        )
        .into());
    }
    write_meta(&dir, "plotdata", None)?;
    Ok(())
}
