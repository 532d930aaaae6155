//! Replicated β sweeps on QAP and NK, and instrumented runs for PEM estimates.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::engine::{Engine, EngineConfig, DEFAULT_MAX_GENERATIONS};
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::pem::MatingTrace;
use crate::problems::{NkKind, NkLandscape, Problem, QapInstance, Sense};
use crate::rng::derive_seed;
use crate::stats::{mann_whitney, mean_std};

/// Seed of one (β, replicate) job; independent of execution order.
pub fn job_seed(base: u64, beta: f64, replicate: usize) -> u64 {
    derive_seed(derive_seed(base, beta.to_bits()), replicate as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub shape: GridShape,
    pub betas: Vec<f64>,
    pub replicates: usize,
    pub max_generations: usize,
    pub seed: u64,
}

impl SweepSpec {
    /// 20×20 grid, 30 replicates, 1500 generations.
    pub fn desk(betas: Vec<f64>, seed: u64) -> Self {
        Self {
            shape: GridShape::square(20).expect("20 ≥ 3"),
            betas,
            replicates: 30,
            max_generations: DEFAULT_MAX_GENERATIONS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() {
            return Err(Error::Config("sweep needs at least one beta".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::Config(format!("beta {b} outside [0, 1]")));
        }
        if self.replicates < 2 {
            return Err(Error::Config("sweeps need at least 2 replicates".into()));
        }
        Ok(())
    }

    fn jobs(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.betas
            .iter()
            .flat_map(move |&b| (0..self.replicates).map(move |r| (b, r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub beta: f64,
    pub replicate: usize,
    pub seed: u64,
    pub final_fitness: f64,
    pub generations_to_best: usize,
}

impl RunOutcome {
    pub const HEADER: &'static str = "beta,replicate,seed,final_fitness,generations_to_best";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.beta, self.replicate, self.seed, self.final_fitness, self.generations_to_best
        )
    }

    fn parse(line: &str, lineno: usize) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = |token: usize, message: &str| Error::Parse {
            line: lineno,
            token,
            message: message.into(),
        };
        if f.len() != 5 {
            return Err(bad(f.len(), "expected 5 fields"));
        }
        Ok(Self {
            beta: f[0].parse().map_err(|_| bad(1, "bad beta"))?,
            replicate: f[1].parse().map_err(|_| bad(2, "bad replicate"))?,
            seed: f[2].parse().map_err(|_| bad(3, "bad seed"))?,
            final_fitness: f[3].parse().map_err(|_| bad(4, "bad fitness"))?,
            generations_to_best: f[4].parse().map_err(|_| bad(5, "bad generation"))?,
        })
    }
}

/// Reads per-run rows. A final line without a newline is an interrupted
/// write and is dropped.
pub fn read_runs<R: BufRead>(mut r: R) -> Result<Vec<RunOutcome>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines().enumerate();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some((_, h)) if h.trim() == RunOutcome::HEADER => {}
        Some((_, h)) => {
            return Err(Error::Parse {
                line: 1,
                token: 1,
                message: format!("unexpected header {h:?}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| RunOutcome::parse(l, i + 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub beta: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sense: Sense,
    pub betas: Vec<f64>,
    /// Ordered by position of β in the spec, then by replicate.
    pub runs: Vec<RunOutcome>,
}

impl SweepResult {
    pub fn samples(&self, beta: f64) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.beta == beta)
            .map(|r| r.final_fitness)
            .collect()
    }

    pub fn summary(&self) -> Vec<SweepSummary> {
        self.betas
            .iter()
            .map(|&beta| {
                let xs = self.samples(beta);
                let (mean, std) = mean_std(&xs);
                let best = self.sense.best_of(&xs).unwrap_or(f64::NAN);
                SweepSummary {
                    beta,
                    mean,
                    std,
                    n: xs.len(),
                    best,
                }
            })
            .collect()
    }

    pub fn write_runs<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", RunOutcome::HEADER)?;
        for r in &self.runs {
            writeln!(w, "{}", r.csv_line())?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "beta,mean,std,n,best")?;
        for s in self.summary() {
            writeln!(w, "{},{},{},{},{}", s.beta, s.mean, s.std, s.n, s.best)?;
        }
        Ok(())
    }
}

/// Runs every (β, replicate) job of `spec` that is not already in
/// `existing`, calling `on_done` as each finishes (from worker threads).
pub fn run_sweep<P, F>(problem: &P, spec: &SweepSpec, existing: &[RunOutcome], on_done: F) -> Result<SweepResult>
where
    P: Problem,
    F: Fn(&RunOutcome) + Sync,
{
    spec.validate()?;
    let find = |beta: f64, r: usize| {
        existing
            .iter()
            .find(|o| o.beta.to_bits() == beta.to_bits() && o.replicate == r)
    };
    for o in existing {
        if o.seed != job_seed(spec.seed, o.beta, o.replicate) {
            return Err(Error::Config(format!(
                "existing run (beta {}, replicate {}) was produced with a different seed",
                o.beta, o.replicate
            )));
        }
    }
    let pending: Vec<(f64, usize)> = spec.jobs().filter(|&(b, r)| find(b, r).is_none()).collect();
    let fresh: Vec<RunOutcome> = pending
        .par_iter()
        .map(|&(beta, replicate)| {
            let seed = job_seed(spec.seed, beta, replicate);
            let cfg = EngineConfig::new(spec.shape, beta)
                .with_generations(spec.max_generations)
                .with_seed(seed);
            let rec = Engine::new(problem, cfg)?.run();
            let out = RunOutcome {
                beta,
                replicate,
                seed,
                final_fitness: rec.final_best(),
                generations_to_best: rec.generations_to_best(),
            };
            on_done(&out);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let runs = spec
        .jobs()
        .map(|(b, r)| {
            *find(b, r)
                .or_else(|| fresh.iter().find(|o| o.beta.to_bits() == b.to_bits() && o.replicate == r))
                .expect("every job is either resumed or fresh")
        })
        .collect();
    Ok(SweepResult {
        sense: problem.sense(),
        betas: spec.betas.clone(),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub beta_a: f64,
    pub beta_b: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub p_value: f64,
    /// The β whose samples tend to be better; `None` without a shift.
    pub better: Option<f64>,
}

impl Comparison {
    pub const HEADER: &'static str = "beta_a,beta_b,mean_a,mean_b,p_value,better";

    pub fn csv_line(&self) -> String {
        let better = self.better.map_or("none".to_string(), |b| b.to_string());
        format!(
            "{},{},{},{},{},{}",
            self.beta_a, self.beta_b, self.mean_a, self.mean_b, self.p_value, better
        )
    }
}

/// Mann–Whitney comparison of the final-fitness samples of two β settings.
pub fn compare_settings(result: &SweepResult, beta_a: f64, beta_b: f64) -> Result<Comparison> {
    let (a, b) = (result.samples(beta_a), result.samples(beta_b));
    for (beta, xs) in [(beta_a, &a), (beta_b, &b)] {
        if xs.len() < 2 {
            return Err(Error::InsufficientSamples(format!(
                "beta {beta} has {} replicates; at least 2 are needed",
                xs.len()
            )));
        }
    }
    let mw = mann_whitney(&a, &b)?;
    let a_larger = mw.shift > 0.0;
    let better = if mw.shift == 0.0 {
        None
    } else if a_larger == (result.sense == Sense::Maximize) {
        Some(beta_a)
    } else {
        Some(beta_b)
    };
    Ok(Comparison {
        beta_a,
        beta_b,
        mean_a: mean_std(&a).0,
        mean_b: mean_std(&b).0,
        p_value: mw.p_value,
        better,
    })
}

/// Instrumented runs feeding the P_ij estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct PemRunSpec {
    pub shape: GridShape,
    pub beta: f64,
    pub runs: usize,
    pub max_generations: usize,
    pub seed: u64,
}

pub fn pem_traces<P: Problem>(problem: &P, spec: &PemRunSpec) -> Result<Vec<MatingTrace>> {
    if spec.runs == 0 {
        return Err(Error::Config("at least one run is required".into()));
    }
    (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let cfg = EngineConfig::new(spec.shape, spec.beta)
                .with_generations(spec.max_generations)
                .with_seed(job_seed(spec.seed, spec.beta, r));
            Ok(MatingTrace::from_record(&Engine::new(problem, cfg)?.run()))
        })
        .collect()
}

/// Where a problem instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Qap { path: PathBuf },
    Nk { n: usize, k: usize, kind: NkKind, seed: u64 },
    NkFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedProblem {
    Qap(QapInstance),
    Nk(NkLandscape),
}

impl ProblemSpec {
    pub fn load(&self) -> Result<LoadedProblem> {
        Ok(match self {
            ProblemSpec::Qap { path } => LoadedProblem::Qap(QapInstance::from_path(path)?),
            ProblemSpec::Nk { n, k, kind, seed } => LoadedProblem::Nk(NkLandscape::generate(*n, *k, *kind, *seed)?),
            ProblemSpec::NkFile { path } => LoadedProblem::Nk(NkLandscape::load_path(path)?),
        })
    }
}

impl LoadedProblem {
    pub fn sense(&self) -> Sense {
        match self {
            LoadedProblem::Qap(p) => p.sense(),
            LoadedProblem::Nk(p) => p.sense(),
        }
    }

    pub fn sweep<F: Fn(&RunOutcome) + Sync>(
        &self,
        spec: &SweepSpec,
        existing: &[RunOutcome],
        on_done: F,
    ) -> Result<SweepResult> {
        match self {
            LoadedProblem::Qap(p) => run_sweep(p, spec, existing, on_done),
            LoadedProblem::Nk(p) => run_sweep(p, spec, existing, on_done),
        }
    }

    pub fn pem_traces(&self, spec: &PemRunSpec) -> Result<Vec<MatingTrace>> {
        match self {
            LoadedProblem::Qap(p) => pem_traces(p, spec),
            LoadedProblem::Nk(p) => pem_traces(p, spec),
        }
    }

    /// Persists a generated NK landscape; QAP instances live in their own files.
    pub fn save_landscape(&self, path: &Path) -> Result<bool> {
        match self {
            LoadedProblem::Nk(nk) => {
                nk.save_path(path)?;
                Ok(true)
            }
            LoadedProblem::Qap(_) => Ok(false),
        }
    }
}
