//! Punctuated-equilibria analytics.
//!
//! With per-mating improvement probabilities P00, P01, P11 and n_ij(t)
//! matings of each type at generation t, the chance of a new best at t is
//! `p(t) = 1 − Π (1 − P_ij)^n_ij(t)` and over a horizon T
//! `P = 1 − Π (1 − P_ij)^Σ_ij(T)`. Products are evaluated in log space.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::engine::{MatingCounts, MatingType, RunRecord};
use crate::equilibrium::{two_level_run, Placement};
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PemProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p11: f64,
}

impl PemProbabilities {
    pub fn new(p00: f64, p01: f64, p11: f64) -> Result<Self> {
        for (name, p) in [("P00", p00), ("P01", p01), ("P11", p11)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(Self { p00, p01, p11 })
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p00, self.p01, self.p11]
    }

    pub fn get(&self, t: MatingType) -> f64 {
        self.as_array()[t.index()]
    }
}

/// `Σ n_ij · ln(1 − P_ij)`; zero counts contribute nothing even when P = 1.
pub fn log_survival(probs: &PemProbabilities, counts: [f64; 3]) -> f64 {
    probs
        .as_array()
        .iter()
        .zip(counts)
        .filter(|(_, n)| *n > 0.0)
        .map(|(&p, n)| n * (-p).ln_1p())
        .sum()
}

/// Probability of a new best within one generation.
pub fn p_of_t(probs: &PemProbabilities, n00: u64, n01: u64, n11: u64) -> f64 {
    -log_survival(probs, [n00 as f64, n01 as f64, n11 as f64]).exp_m1()
}

/// Probability of a new best within the horizon summarized by `sigmas`.
pub fn big_p(probs: &PemProbabilities, sigmas: [f64; 3]) -> f64 {
    -log_survival(probs, sigmas).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTime {
    /// `Σ t·p(t)`, exactly as the model writes it.
    pub model_form: f64,
    /// First-success expectation `Σ t·p(t)·Π_{s<t}(1 − p(s))`, truncated.
    pub first_success: f64,
    /// Probability that no improvement happened within the horizon.
    pub survival: f64,
    pub horizon: usize,
}

pub fn expected_time(probs: &PemProbabilities, ledger: &[MatingCounts], horizon: usize) -> ExpectedTime {
    let horizon = horizon.min(ledger.len());
    let mut model_form = 0.0;
    let mut first_success = 0.0;
    let mut survival = 1.0;
    for (i, row) in ledger.iter().take(horizon).enumerate() {
        let t = (i + 1) as f64;
        let p = p_of_t(probs, row.n00 as u64, row.n01 as u64, row.n11 as u64);
        model_form += t * p;
        first_success += t * p * survival;
        survival *= 1.0 - p;
    }
    ExpectedTime {
        model_form,
        first_success,
        survival,
        horizon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0 }
    }
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Parameter(format!("Beta prior needs a, b > 0, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Beta-binomial estimator of P00, P01, P11.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BayesEstimator {
    pub prior: BetaPrior,
    pub successes: [u64; 3],
    pub trials: [u64; 3],
}

impl BayesEstimator {
    pub fn new(prior: BetaPrior) -> Self {
        Self {
            prior,
            ..Self::default()
        }
    }

    pub fn observe(&mut self, t: MatingType, successes: u64, trials: u64) {
        self.successes[t.index()] += successes;
        self.trials[t.index()] += trials;
    }

    pub fn posterior_mean(&self, t: MatingType) -> f64 {
        let (s, m) = (self.successes[t.index()] as f64, self.trials[t.index()] as f64);
        (s + self.prior.a) / (m + self.prior.a + self.prior.b)
    }

    pub fn posterior_sd(&self, t: MatingType) -> f64 {
        let a = self.successes[t.index()] as f64 + self.prior.a;
        let b = (self.trials[t.index()] - self.successes[t.index()]) as f64 + self.prior.b;
        (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt()
    }

    pub fn probabilities(&self) -> PemProbabilities {
        PemProbabilities {
            p00: self.posterior_mean(MatingType::M00),
            p01: self.posterior_mean(MatingType::M01),
            p11: self.posterior_mean(MatingType::M11),
        }
    }
}

/// Per-generation mating counts and improvement counts of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatingTrace {
    pub counts: Vec<MatingCounts>,
    /// `[s00, s01, s11]` per generation.
    pub successes: Vec<[u32; 3]>,
}

impl MatingTrace {
    pub fn from_record<G>(rec: &RunRecord<G>) -> Self {
        Self {
            counts: rec.ledger.rows().to_vec(),
            successes: rec.successes(),
        }
    }
}

/// How per-run evidence is combined inside a window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Sum successes and trials over runs, then take one posterior.
    #[default]
    Pooled,
    /// Average the per-run posterior means.
    RunMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    /// Generations `window_start + 1 ..= window_start + width`.
    pub window_start: usize,
    pub probs: PemProbabilities,
    pub trials: [u64; 3],
    pub successes: [u64; 3],
    /// Types without a single trial; their estimate is the prior mean.
    pub empty: [bool; 3],
}

impl WindowEstimate {
    pub fn flag(&self) -> String {
        let empty: Vec<&str> = MatingType::ALL
            .iter()
            .filter(|t| self.empty[t.index()])
            .map(|t| t.label())
            .collect();
        if empty.is_empty() {
            "ok".into()
        } else {
            format!("prior:{}", empty.join("+"))
        }
    }
}

pub fn estimate_pij(
    traces: &[MatingTrace],
    window: usize,
    prior: BetaPrior,
    aggregation: Aggregation,
) -> Result<Vec<WindowEstimate>> {
    if window == 0 {
        return Err(Error::Parameter("window width must be positive".into()));
    }
    if traces.is_empty() {
        return Err(Error::InsufficientSamples("no runs to estimate from".into()));
    }
    for tr in traces {
        if tr.counts.len() != tr.successes.len() {
            return Err(Error::Domain("ledger and success streams are misaligned".into()));
        }
    }
    let generations = traces.iter().map(|t| t.counts.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for start in (0..generations).step_by(window) {
        let end = (start + window).min(generations);
        let mut pooled = BayesEstimator::new(prior);
        let mut mean_acc = [0.0f64; 3];
        let mut runs = 0usize;
        for tr in traces {
            if start >= tr.counts.len() {
                continue;
            }
            let mut run = BayesEstimator::new(prior);
            let stop = end.min(tr.counts.len());
            for g in start..stop {
                for t in MatingType::ALL {
                    let m = tr.counts[g].get(t) as u64;
                    let s = tr.successes[g][t.index()] as u64;
                    run.observe(t, s, m);
                    pooled.observe(t, s, m);
                }
            }
            for t in MatingType::ALL {
                mean_acc[t.index()] += run.posterior_mean(t);
            }
            runs += 1;
        }
        let probs = match aggregation {
            Aggregation::Pooled => pooled.probabilities(),
            Aggregation::RunMean => {
                let r = runs as f64;
                PemProbabilities {
                    p00: mean_acc[0] / r,
                    p01: mean_acc[1] / r,
                    p11: mean_acc[2] / r,
                }
            }
        };
        out.push(WindowEstimate {
            window_start: start,
            probs,
            trials: pooled.trials,
            successes: pooled.successes,
            empty: pooled.trials.map(|m| m == 0),
        });
    }
    Ok(out)
}

pub fn write_pij<W: Write>(series: &[WindowEstimate], mut w: W) -> std::io::Result<()> {
    writeln!(w, "window_start,p00,p01,p11,trials00,trials01,trials11,flag")?;
    for e in series {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.window_start,
            e.probs.p00,
            e.probs.p01,
            e.probs.p11,
            e.trials[0],
            e.trials[1],
            e.trials[2],
            e.flag()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaRow {
    pub beta: f64,
    /// `[Σ00(T), Σ01(T), Σ11(T)]` averaged over replicates.
    pub sigma: [f64; 3],
}

/// Σ_ij(T) tabulated over β; independent of the optimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaTable {
    pub horizon: usize,
    rows: Vec<SigmaRow>,
}

impl SigmaTable {
    pub fn new(horizon: usize, mut rows: Vec<SigmaRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Config("sigma table has no rows".into()));
        }
        rows.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        if rows.windows(2).any(|w| w[0].beta == w[1].beta) {
            return Err(Error::Config("sigma table repeats a beta value".into()));
        }
        if rows.iter().any(|r| r.sigma.iter().any(|&s| s.is_nan() || s < 0.0)) {
            return Err(Error::Config("sigma entries must be non-negative".into()));
        }
        Ok(Self { horizon, rows })
    }

    pub fn rows(&self) -> &[SigmaRow] {
        &self.rows
    }

    pub fn betas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.beta).collect()
    }

    /// Smallest and largest tabulated β.
    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].beta, self.rows[self.rows.len() - 1].beta)
    }

    /// Population size implied by conservation, Σ00 + Σ01 + Σ11 = λ·T.
    pub fn implied_lambda(&self) -> f64 {
        let s = self.rows[0].sigma;
        (s[0] + s[1] + s[2]) / self.horizon as f64
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "beta,T,sigma00,sigma01,sigma11")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.beta, self.horizon, r.sigma[0], r.sigma[1], r.sigma[2]
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).transpose()?.unwrap_or_default();
        if header.trim() != "beta,T,sigma00,sigma01,sigma11" {
            return Err(Error::Parse {
                line: 1,
                token: 1,
                message: format!("unexpected sigma table header {header:?}"),
            });
        }
        let mut horizon = None;
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::Parse {
                    line: i + 1,
                    token: fields.len(),
                    message: "expected 5 fields".into(),
                });
            }
            let num = |k: usize| -> Result<f64> {
                fields[k].trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    token: k + 1,
                    message: format!("not a number: {:?}", fields[k]),
                })
            };
            let t = num(1)? as usize;
            if *horizon.get_or_insert(t) != t {
                return Err(Error::Parse {
                    line: i + 1,
                    token: 2,
                    message: "all rows must share one horizon T".into(),
                });
            }
            rows.push(SigmaRow {
                beta: num(0)?,
                sigma: [num(2)?, num(3)?, num(4)?],
            });
        }
        Self::new(horizon.unwrap_or(0), rows)
    }
}

/// Tabulates Σ_ij(horizon) for each β from two-level runs that start with a
/// single best solution at a random cell, averaged over `replicates`.
pub fn build_sigma_table(
    betas: &[f64],
    horizon: usize,
    shape: GridShape,
    replicates: usize,
    seed: u64,
) -> Result<SigmaTable> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..betas.len())
        .flat_map(|b| (0..replicates).map(move |r| (b, r)))
        .collect();
    let sums: Vec<[u64; 3]> = jobs
        .par_iter()
        .map(|&(b, r)| {
            let beta = betas[b];
            let run_seed = derive_seed(derive_seed(seed, beta.to_bits()), r as u64);
            let curve = two_level_run(shape, beta, horizon, Placement::Random, run_seed, false)?;
            Ok(curve.ledger.cumulative(horizon))
        })
        .collect::<Result<_>>()?;
    let rows = betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let mut acc = [0u64; 3];
            for s in &sums[b * replicates..(b + 1) * replicates] {
                for k in 0..3 {
                    acc[k] += s[k];
                }
            }
            SigmaRow {
                beta,
                sigma: acc.map(|v| v as f64 / replicates as f64),
            }
        })
        .collect();
    SigmaTable::new(horizon, rows)
}

/// Relative tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
const COARSE_STEP: f64 = 0.05;

/// Coarse-to-fine argmax over a β grid: the best multiple of 0.05 first,
/// then every grid point within 0.05 of it. Returns the chosen index and
/// all indices whose score ties with the maximum.
pub fn grid_argmax(betas: &[f64], scores: &[f64]) -> (usize, Vec<usize>) {
    assert_eq!(betas.len(), scores.len());
    assert!(!betas.is_empty());
    let pick = |idx: &mut dyn Iterator<Item = usize>| {
        idx.fold(None::<usize>, |best, i| match best {
            Some(b) if scores[b] >= scores[i] => Some(b),
            _ => Some(i),
        })
    };
    let on_coarse = |b: f64| ((b / COARSE_STEP).round() * COARSE_STEP - b).abs() < 1e-9;
    let coarse: Vec<usize> = (0..betas.len()).filter(|&i| on_coarse(betas[i])).collect();
    let coarse_best = if coarse.len() >= 2 {
        pick(&mut coarse.iter().copied())
    } else {
        pick(&mut (0..betas.len()))
    }
    .expect("non-empty grid");
    let centre = betas[coarse_best];
    let chosen = pick(&mut (0..betas.len()).filter(|&i| (betas[i] - centre).abs() <= COARSE_STEP + 1e-9))
        .expect("coarse argmax lies in its own neighborhood");

    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs().max(f64::MIN_POSITIVE);
    let ties = (0..scores.len()).filter(|&i| max - scores[i] <= tol).collect();
    (chosen, ties)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaChoice {
    pub beta: f64,
    /// Value of P(T) at the chosen β.
    pub probability: f64,
    /// `Σ ln(1 − P_ij)·∂Σ_ij/∂β` at the chosen β, by finite differences.
    pub residual: f64,
    /// All β whose P(T) ties with the maximum.
    pub ties: Vec<f64>,
}

/// Maximizes P(T) over the tabulated β for fixed probabilities.
pub fn choose_beta(probs: &PemProbabilities, table: &SigmaTable) -> BetaChoice {
    let rows = table.rows();
    let betas = table.betas();
    // -ln(1 - P) is strictly increasing in P and keeps precision near P = 1.
    let scores: Vec<f64> = rows.iter().map(|r| -log_survival(probs, r.sigma)).collect();
    let (idx, ties) = grid_argmax(&betas, &scores);
    BetaChoice {
        beta: betas[idx],
        probability: big_p(probs, rows[idx].sigma),
        residual: optimality_residual(probs, table, idx),
        ties: ties.into_iter().map(|i| betas[i]).collect(),
    }
}

/// Finite-difference residual of dP/dβ = 0 at grid index `idx`: centered
/// inside the grid, one-sided at its ends.
pub fn optimality_residual(probs: &PemProbabilities, table: &SigmaTable, idx: usize) -> f64 {
    let rows = table.rows();
    if rows.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = (idx.saturating_sub(1), (idx + 1).min(rows.len() - 1));
    let db = rows[hi].beta - rows[lo].beta;
    probs
        .as_array()
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let deriv = (rows[hi].sigma[k] - rows[lo].sigma[k]) / db;
            if deriv == 0.0 {
                0.0
            } else {
                (-p).ln_1p() * deriv
            }
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaStar {
    pub window_start: usize,
    pub beta_star: f64,
    pub eq1_residual: f64,
    pub ties: Vec<f64>,
    /// The window saw no improvement, or some mating type had no trials.
    pub low_confidence: bool,
}

pub fn optimal_beta(series: &[WindowEstimate], table: &SigmaTable) -> Vec<BetaStar> {
    series
        .iter()
        .map(|w| {
            let choice = choose_beta(&w.probs, table);
            BetaStar {
                window_start: w.window_start,
                beta_star: choice.beta,
                eq1_residual: choice.residual,
                ties: choice.ties,
                low_confidence: w.successes.iter().sum::<u64>() == 0 || w.empty.iter().any(|&e| e),
            }
        })
        .collect()
}

pub fn write_beta_star<W: Write>(series: &[BetaStar], mut w: W) -> std::io::Result<()> {
    writeln!(w, "window_start,beta_star,eq1_residual,tied_betas,low_confidence")?;
    for b in series {
        writeln!(
            w,
            "{},{},{},{},{}",
            b.window_start,
            b.beta_star,
            b.eq1_residual,
            b.ties.len(),
            b.low_confidence as u8
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStreams, StreamSource};
    use rand::Rng;

    fn probs(a: f64, b: f64, c: f64) -> PemProbabilities {
        PemProbabilities::new(a, b, c).unwrap()
    }

    #[test]
    fn p_of_t_examples() {
        assert_eq!(p_of_t(&probs(0.0, 0.0, 0.0), 10, 20, 30), 0.0);
        assert_eq!(p_of_t(&probs(0.3, 1.0, 0.2), 5, 1, 4), 1.0);
        assert_eq!(p_of_t(&probs(0.3, 1.0, 0.2), 5, 0, 4), 1.0 - 0.7f64.powi(5) * 0.8f64.powi(4));
        // 1 - 0.99^100 * 0.98^50 to 30 digits (mpmath, 50-digit precision)
        let hp = 0.866_702_119_376_989_555_276_491_114_5_f64;
        let p = p_of_t(&probs(0.01, 0.02, 0.0), 100, 50, 250);
        assert!((p - hp).abs() < 1e-14, "{p}");
    }

    #[test]
    fn big_p_zero_sigma() {
        assert_eq!(big_p(&probs(0.5, 0.5, 0.5), [0.0; 3]), 0.0);
    }

    #[test]
    fn expected_time_examples() {
        let none = vec![MatingCounts { n00: 10, n01: 0, n11: 0 }; 20];
        let e = expected_time(&probs(0.0, 0.0, 0.0), &none, 20);
        assert_eq!(e.model_form, 0.0);
        assert_eq!(e.first_success, 0.0);

        let sure = vec![MatingCounts { n00: 0, n01: 0, n11: 1 }; 5];
        let e = expected_time(&probs(0.0, 0.0, 1.0), &sure, 5);
        assert_eq!(e.first_success, 1.0);

        // constant p(t) = q: truncated geometric mean
        let q = 0.03;
        let horizon = 400;
        let rows = vec![MatingCounts { n00: 1, n01: 0, n11: 0 }; horizon];
        let e = expected_time(&probs(q, 0.0, 0.0), &rows, horizon);
        let h = horizon as f64;
        let geometric = (1.0 - (1.0 - q).powf(h) * (1.0 + h * q)) / q;
        assert!((e.first_success - geometric).abs() < 1e-9 * geometric);
        assert!((e.model_form - q * h * (h + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn big_p_matches_bernoulli_simulation() {
        let pr = probs(0.01, 0.02, 0.005);
        let sigma = [30.0, 20.0, 10.0];
        let analytic = big_p(&pr, sigma);
        let mut rng = SeedStreams::new(12).stream(1, 1);
        let trials = 100_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            let mut improved = false;
            for (k, &n) in sigma.iter().enumerate() {
                for _ in 0..n as usize {
                    improved |= rng.random::<f64>() < pr.as_array()[k];
                }
            }
            hits += improved as usize;
        }
        let freq = hits as f64 / trials as f64;
        let se = (analytic * (1.0 - analytic) / trials as f64).sqrt();
        assert!((freq - analytic).abs() < 3.0 * se, "{freq} vs {analytic}");
    }

    #[test]
    fn posterior_limits() {
        let mut est = BayesEstimator::new(BetaPrior::default());
        est.observe(MatingType::M00, 0, 98);
        assert_eq!(est.posterior_mean(MatingType::M00), 1.0 / 100.0);
        est.observe(MatingType::M11, 10_000, 10_000);
        assert!(est.posterior_mean(MatingType::M11) > 0.9998);
        assert_eq!(est.posterior_mean(MatingType::M01), 0.5);
    }

    fn synthetic_traces(p_star: [f64; 3], runs: usize, gens: usize, per_gen: u32, seed: u64) -> Vec<MatingTrace> {
        let streams = SeedStreams::new(seed);
        (0..runs)
            .map(|r| {
                let mut rng = streams.stream(r as u64, 0);
                let mut tr = MatingTrace::default();
                for _ in 0..gens {
                    tr.counts.push(MatingCounts { n00: per_gen, n01: per_gen, n11: per_gen });
                    let mut s = [0u32; 3];
                    for (k, sk) in s.iter_mut().enumerate() {
                        *sk = (0..per_gen).filter(|_| rng.random::<f64>() < p_star[k]).count() as u32;
                    }
                    tr.successes.push(s);
                }
                tr
            })
            .collect()
    }

    #[test]
    fn estimates_recover_synthetic_probabilities() {
        let p_star = [0.001, 0.01, 0.05];
        // 10 runs x 50 generations x 200 matings = 10^5 trials per type
        let traces = synthetic_traces(p_star, 10, 50, 200, 5);
        let est = estimate_pij(&traces, 50, BetaPrior::default(), Aggregation::Pooled).unwrap();
        assert_eq!(est.len(), 1);
        let w = &est[0];
        assert_eq!(w.trials, [100_000; 3]);
        let mut b = BayesEstimator::new(BetaPrior::default());
        for t in MatingType::ALL {
            b.observe(t, w.successes[t.index()], w.trials[t.index()]);
            let sd = b.posterior_sd(t);
            assert!((w.probs.get(t) - p_star[t.index()]).abs() < 2.0 * sd.max(1e-12) + 1e-9,
                "{t:?}: {} vs {}", w.probs.get(t), p_star[t.index()]);
        }
        let by_run = estimate_pij(&traces, 50, BetaPrior::default(), Aggregation::RunMean).unwrap();
        assert!((by_run[0].probs.p11 - 0.05).abs() < 0.005);
    }

    #[test]
    fn windows_split_and_flag_empty_types() {
        let tr = MatingTrace {
            counts: vec![MatingCounts { n00: 4, n01: 0, n11: 1 }; 120],
            successes: vec![[0, 0, 0]; 120],
        };
        let est = estimate_pij(&[tr], 50, BetaPrior::default(), Aggregation::Pooled).unwrap();
        assert_eq!(est.iter().map(|e| e.window_start).collect::<Vec<_>>(), vec![0, 50, 100]);
        assert_eq!(est[2].trials, [80, 0, 20]);
        assert_eq!(est[0].empty, [false, true, false]);
        assert_eq!(est[0].probs.p01, 0.5);
        assert_eq!(est[0].flag(), "prior:01");
        assert_eq!(est[0].probs.p00, 1.0 / 202.0);
    }

    fn smooth_table() -> SigmaTable {
        // Σ01 peaks at interior β, Σ00 rises with β, Σ11 falls; total is constant.
        let total = 400.0 * 100.0;
        let rows = (0..=100)
            .map(|i| {
                let b = i as f64 / 100.0;
                let s01 = 0.3 * total * 4.0 * b * (1.0 - b);
                let s00 = (total - s01) * b;
                let s11 = total - s01 - s00;
                SigmaRow { beta: b, sigma: [s00, s01, s11] }
            })
            .collect();
        SigmaTable::new(100, rows).unwrap()
    }

    #[test]
    fn equal_probabilities_tie_everywhere() {
        let t = smooth_table();
        let c = choose_beta(&probs(0.001, 0.001, 0.001), &t);
        assert_eq!(c.ties.len(), t.rows().len());
    }

    #[test]
    fn negligible_p11_gives_beta_one() {
        let c = choose_beta(&probs(1e-4, 1e-5, 1e-12), &smooth_table());
        assert_eq!(c.beta, 1.0);
        let c = choose_beta(&probs(1e-6, 1e-6, 1e-3), &smooth_table());
        assert_eq!(c.beta, 0.0);
    }

    #[test]
    fn interior_optimum_has_small_residual() {
        let t = smooth_table();
        let pr = probs(2e-5, 1e-4, 1e-5);
        let c = choose_beta(&pr, &t);
        assert!(c.beta > 0.05 && c.beta < 0.95, "{}", c.beta);
        let idx = t.betas().iter().position(|&b| b == c.beta).unwrap();
        let scale: f64 = (0..3)
            .map(|k| {
                let d = (t.rows()[idx + 1].sigma[k] - t.rows()[idx - 1].sigma[k]) / 0.02;
                ((-pr.as_array()[k]).ln_1p() * d).abs()
            })
            .sum();
        assert!(c.residual.abs() < 0.05 * scale, "{} vs {scale}", c.residual);
    }

    #[test]
    fn argmax_uses_coarse_then_fine_grid() {
        let betas: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let scores: Vec<f64> = betas.iter().map(|b| -(b - 0.43f64).powi(2)).collect();
        let (i, ties) = grid_argmax(&betas, &scores);
        assert_eq!(betas[i], 0.43);
        assert_eq!(ties, vec![i]);
    }

    #[test]
    fn sigma_table_round_trip_and_conservation() {
        let shape = GridShape::square(6).unwrap();
        let t = build_sigma_table(&[0.0, 0.5, 1.0], 20, shape, 8, 3).unwrap();
        for r in t.rows() {
            assert!((r.sigma.iter().sum::<f64>() - 36.0 * 20.0).abs() < 1e-9);
        }
        let one = t.rows()[2].sigma;
        assert_eq!(one, [35.0 * 20.0, 0.0, 20.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(SigmaTable::read_csv(buf.as_slice()).unwrap(), t);
        assert!(SigmaTable::read_csv("beta,T\n".as_bytes()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_probs() -> impl Strategy<Value = PemProbabilities> {
            (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(a, b, c)| probs(a, b, c))
        }

        proptest! {
            #[test]
            fn bounded_and_monotone(pr in arb_probs(), n in prop::array::uniform3(0u64..500),
                                    k in 0usize..3, dp in 0.0f64..0.5, dn in 1u64..50) {
                let p = p_of_t(&pr, n[0], n[1], n[2]);
                prop_assert!((0.0..=1.0).contains(&p));
                let mut arr = pr.as_array();
                arr[k] = (arr[k] + dp).min(1.0);
                let pr2 = probs(arr[0], arr[1], arr[2]);
                prop_assert!(p_of_t(&pr2, n[0], n[1], n[2]) >= p);
                let mut n2 = n;
                n2[k] += dn;
                prop_assert!(p_of_t(&pr, n2[0], n2[1], n2[2]) >= p);
                let big = big_p(&pr, n.map(|x| x as f64));
                prop_assert!((0.0..=1.0).contains(&big));
            }

            #[test]
            fn product_identity(pr in (0.0f64..0.05, 0.0f64..0.05, 0.0f64..0.05),
                                rows in prop::collection::vec(prop::array::uniform3(0u32..400), 1..60)) {
                let pr = probs(pr.0, pr.1, pr.2);
                let mut sigma = [0.0f64; 3];
                let mut survival = 1.0f64;
                for r in &rows {
                    for k in 0..3 { sigma[k] += r[k] as f64; }
                    survival *= 1.0 - p_of_t(&pr, r[0] as u64, r[1] as u64, r[2] as u64);
                }
                let direct = big_p(&pr, sigma);
                let telescoped = 1.0 - survival;
                let scale = direct.abs().max(1e-300);
                prop_assert!((direct - telescoped).abs() <= 1e-12 * scale.max(1e-3),
                    "{direct} vs {telescoped}");
            }

            #[test]
            fn argmax_invariant_under_log_odds(pr in (1e-6f64..1e-3, 1e-6f64..1e-3, 1e-6f64..1e-3)) {
                let t = smooth_table();
                let pr = probs(pr.0, pr.1, pr.2);
                let betas = t.betas();
                let p: Vec<f64> = t.rows().iter().map(|r| big_p(&pr, r.sigma)).collect();
                let logit: Vec<f64> = p.iter().map(|&x| (x / (1.0 - x)).ln()).collect();
                let (a, _) = grid_argmax(&betas, &p);
                let (b, _) = grid_argmax(&betas, &logit);
                prop_assert_eq!(a, b);
            }
        }
    }
}
