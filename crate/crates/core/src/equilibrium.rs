//! Takeover experiments with selection as the only active operator.
//!
//! The population holds one best solution (fitness 1) and λ − 1 null
//! solutions (fitness 0). Crossover and mutation are disabled, so the count
//! N(t) of best copies only grows through selection and elitist replacement.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::engine::{Engine, EngineConfig, MatingLedger, Population};
use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridShape};
use crate::problems::{Problem, Sense};
use crate::rng::{derive_seed, SeedStreams, StreamSource, AUX_STREAM};
use crate::stats::{linear_fit, mean_std};

/// Two fitness levels: `true` is the best solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoLevel;

impl Problem for TwoLevel {
    type Genotype = bool;

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, g: &bool) -> f64 {
        if *g {
            1.0
        } else {
            0.0
        }
    }

    fn random_genotype<R: Rng + ?Sized>(&self, _rng: &mut R) -> bool {
        false
    }

    fn crossover<R: Rng + ?Sized>(&self, a: &bool, b: &bool, _rng: &mut R) -> (bool, bool) {
        (*a, *b)
    }

    fn mutate<R: Rng + ?Sized>(&self, _g: &mut bool, _rng: &mut R) {}
}

/// Where the initial best solution is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Uniform over the grid, drawn from the run's auxiliary stream.
    Random,
    Fixed(CellIndex),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TakeoverConfig {
    pub shape: GridShape,
    pub beta: f64,
    pub replicates: usize,
    /// Generation cap; `None` means 10·λ.
    pub max_generations: Option<usize>,
    pub placement: Placement,
    pub seed: u64,
}

impl TakeoverConfig {
    pub fn new(shape: GridShape, beta: f64) -> Self {
        Self {
            shape,
            beta,
            replicates: 1,
            max_generations: None,
            placement: Placement::Random,
            seed: 0,
        }
    }

    pub fn cap(&self) -> usize {
        self.max_generations.unwrap_or(10 * self.shape.size())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Parameter(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if let Placement::Fixed(c) = self.placement {
            self.shape.check(c)?;
        }
        Ok(())
    }

    /// Seed of replicate `r`; independent of execution order.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        derive_seed(derive_seed(self.seed, self.beta.to_bits()), r as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCurve {
    pub shape: GridShape,
    pub origin: CellIndex,
    /// N(t) for t = 0, 1, …; N(0) = 1.
    pub counts: Vec<usize>,
    /// min{t : N(t) = λ}, `None` when the cap was reached first.
    pub takeover_time: Option<usize>,
    /// Largest toroidal L1 distance from the origin to a best copy.
    pub front_radius: Vec<usize>,
    /// Largest single-axis toroidal offset from the origin to a best copy.
    pub axis_reach: Vec<usize>,
    pub ledger: MatingLedger,
}

impl GrowthCurve {
    /// First generation at which a best copy sits on the line half-way round
    /// the torus from the origin, where the front meets its own image.
    pub fn wrap_generation(&self) -> Option<usize> {
        let half = (self.shape.width().min(self.shape.height())) / 2;
        self.axis_reach.iter().position(|&r| r >= half)
    }

    /// N(t) extended with λ beyond takeover, up to generation `t_max`.
    pub fn padded_counts(&self, t_max: usize) -> Vec<usize> {
        let last = *self.counts.last().expect("N(0) is always recorded");
        (0..=t_max)
            .map(|t| self.counts.get(t).copied().unwrap_or(last))
            .collect()
    }
}

/// First differences N(t+1) − N(t).
pub fn growth_rate(counts: &[usize]) -> Vec<i64> {
    counts
        .windows(2)
        .map(|w| w[1] as i64 - w[0] as i64)
        .collect()
}

struct Front {
    radius: usize,
    axis: usize,
}

fn front_of(pop: &Population<bool>, origin: CellIndex) -> Front {
    let shape = pop.shape();
    let (w, h) = (shape.width(), shape.height());
    let (r0, c0) = (origin.0 / w, origin.0 % w);
    let mut front = Front { radius: 0, axis: 0 };
    for (i, &g) in pop.genotypes().iter().enumerate() {
        if g {
            let dr = (i / w).abs_diff(r0);
            let dc = (i % w).abs_diff(c0);
            let (dr, dc) = (dr.min(h - dr), dc.min(w - dc));
            front.radius = front.radius.max(dr + dc);
            front.axis = front.axis.max(dr.max(dc));
        }
    }
    front
}

/// Runs a single two-level replicate for `generations` steps. With
/// `stop_at_takeover` the run ends as soon as N(t) = λ.
pub fn two_level_run(
    shape: GridShape,
    beta: f64,
    generations: usize,
    placement: Placement,
    seed: u64,
    stop_at_takeover: bool,
) -> Result<GrowthCurve> {
    let streams = SeedStreams::new(seed);
    let origin = match placement {
        Placement::Fixed(c) => {
            shape.check(c)?;
            c
        }
        Placement::Random => {
            CellIndex(streams.stream(0, AUX_STREAM).random_range(0..shape.size()))
        }
    };
    let mut cells = vec![false; shape.size()];
    cells[origin.0] = true;
    let mut pop = Population::new(&TwoLevel, shape, cells)?;
    let cfg = EngineConfig::new(shape, beta)
        .selection_only()
        .with_seed(seed)
        .with_generations(generations);
    let engine = Engine::with_streams(&TwoLevel, cfg, streams)?;

    let lambda = shape.size();
    let mut counts = vec![1];
    let mut front_radius = vec![0];
    let mut axis_reach = vec![0];
    let mut ledger = MatingLedger::default();
    let mut takeover_time = (lambda == 1).then_some(0);
    for t in 1..=generations {
        if stop_at_takeover && takeover_time.is_some() {
            break;
        }
        let report = engine.step(&mut pop);
        ledger.push(report.counts);
        let n = pop.count_at(1.0);
        let f = front_of(&pop, origin);
        counts.push(n);
        front_radius.push(f.radius);
        axis_reach.push(f.axis);
        if n == lambda && takeover_time.is_none() {
            takeover_time = Some(t);
        }
    }
    Ok(GrowthCurve {
        shape,
        origin,
        counts,
        takeover_time,
        front_radius,
        axis_reach,
        ledger,
    })
}

/// One takeover replicate: runs until N(t) = λ or the cap.
pub fn takeover_run(cfg: &TakeoverConfig, replicate: usize) -> Result<GrowthCurve> {
    cfg.validate()?;
    two_level_run(
        cfg.shape,
        cfg.beta,
        cfg.cap(),
        cfg.placement,
        cfg.replicate_seed(replicate),
        true,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TakeoverSummary {
    pub beta: f64,
    /// Mean over replicates whose takeover was defined (NaN if none).
    pub mean: f64,
    pub std: f64,
    pub defined: usize,
    pub replicates: usize,
}

impl TakeoverSummary {
    pub fn standard_error(&self) -> f64 {
        if self.defined == 0 {
            f64::NAN
        } else {
            self.std / (self.defined as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaCurves {
    pub beta: f64,
    pub curves: Vec<GrowthCurve>,
}

impl BetaCurves {
    pub fn summary(&self) -> TakeoverSummary {
        let times: Vec<f64> = self
            .curves
            .iter()
            .filter_map(|c| c.takeover_time.map(|t| t as f64))
            .collect();
        let (mean, std) = if times.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            mean_std(&times)
        };
        TakeoverSummary {
            beta: self.beta,
            mean,
            std,
            defined: times.len(),
            replicates: self.curves.len(),
        }
    }

    /// Replicate-averaged N(t) and its first differences, padded to the
    /// longest curve.
    pub fn mean_curve(&self) -> (Vec<f64>, Vec<f64>) {
        let t_max = self.curves.iter().map(|c| c.counts.len() - 1).max().unwrap_or(0);
        let mut mean = vec![0.0; t_max + 1];
        for c in &self.curves {
            for (m, n) in mean.iter_mut().zip(c.padded_counts(t_max)) {
                *m += n as f64;
            }
        }
        let reps = self.curves.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= reps);
        let rate = mean.windows(2).map(|w| w[1] - w[0]).collect();
        (mean, rate)
    }
}

/// Runs `cfg.replicates` takeover replicates for every β.
pub fn takeover_sweep(betas: &[f64], cfg: &TakeoverConfig) -> Result<Vec<BetaCurves>> {
    let configs: Vec<TakeoverConfig> = betas
        .iter()
        .map(|&beta| TakeoverConfig { beta, ..*cfg })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|b| (0..cfg.replicates).map(move |r| (b, r)))
        .collect();
    let curves: Vec<GrowthCurve> = jobs
        .par_iter()
        .map(|&(b, r)| takeover_run(&configs[b], r))
        .collect::<Result<_>>()?;
    let mut it = curves.into_iter();
    Ok(configs
        .iter()
        .map(|c| BetaCurves {
            beta: c.beta,
            curves: it.by_ref().take(cfg.replicates).collect(),
        })
        .collect())
}

/// Writes `beta,replicate,t,N` rows.
pub fn write_curves<W: Write>(sweep: &[BetaCurves], mut w: W) -> std::io::Result<()> {
    writeln!(w, "beta,replicate,t,N")?;
    for bc in sweep {
        for (r, c) in bc.curves.iter().enumerate() {
            for (t, n) in c.counts.iter().enumerate() {
                writeln!(w, "{},{},{},{}", bc.beta, r, t, n)?;
            }
        }
    }
    Ok(())
}

/// Writes `beta,t,mean_N,mean_dN` rows of the replicate-averaged curves.
pub fn write_growth_rates<W: Write>(sweep: &[BetaCurves], mut w: W) -> std::io::Result<()> {
    writeln!(w, "beta,t,mean_N,mean_dN")?;
    for bc in sweep {
        let (mean, rate) = bc.mean_curve();
        for (t, n) in mean.iter().enumerate() {
            let dn = if t == 0 { 0.0 } else { rate[t - 1] };
            writeln!(w, "{},{},{},{}", bc.beta, t, n, dn)?;
        }
    }
    Ok(())
}

/// Writes `beta,mean_takeover,std,defined,replicates`; undefined means print
/// as `undefined`.
pub fn write_summary<W: Write>(sweep: &[BetaCurves], mut w: W) -> std::io::Result<()> {
    writeln!(w, "beta,mean_takeover,std,defined,replicates")?;
    for bc in sweep {
        let s = bc.summary();
        if s.defined == 0 {
            writeln!(w, "{},undefined,undefined,0,{}", s.beta, s.replicates)?;
        } else {
            writeln!(w, "{},{},{},{},{}", s.beta, s.mean, s.std, s.defined, s.replicates)?;
        }
    }
    Ok(())
}

/// Two-regime fit of a growth-rate series: a straight line up to the
/// breakpoint, a quadratic after it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    /// Generation of the last point in the linear regime.
    pub generation: usize,
    /// R² of the linear regime.
    pub linear_r_squared: f64,
    pub sse: f64,
}

fn quadratic_sse(xs: &[f64], ys: &[f64]) -> f64 {
    // least squares on centered x via the 3x3 normal equations
    let n = xs.len() as f64;
    if xs.len() < 3 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let x = x - mx;
        let mut p = 1.0;
        for k in 0..5 {
            s[k] += p;
            if k < 3 {
                t[k] += p * y;
            }
            p *= x;
        }
    }
    let a = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-12 {
        return linear_fit(xs, ys).map(|f| f.sse).unwrap_or(0.0);
    }
    let mut coef = [0.0; 3];
    for (col, c) in coef.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][col] = t[row];
        }
        *c = det(m) / d;
    }
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let x = x - mx;
            (y - coef[0] - coef[1] * x - coef[2] * x * x).powi(2)
        })
        .sum()
}

/// Locates the regime change of `rate`, where `rate[t - 1]` is the growth
/// between generations `t − 1` and `t`. Only generations `1..=last` are
/// fitted and each regime keeps at least `min_len` points.
pub fn detect_breakpoint(rate: &[f64], last: usize, min_len: usize) -> Result<Breakpoint> {
    let last = last.min(rate.len());
    let min_len = min_len.max(3);
    if last < 2 * min_len {
        return Err(Error::InsufficientSamples(format!(
            "{last} points cannot hold two regimes of {min_len}"
        )));
    }
    let xs: Vec<f64> = (1..=last).map(|t| t as f64).collect();
    let ys = &rate[..last];
    let mut best: Option<Breakpoint> = None;
    for split in min_len..=last - min_len {
        let lin = linear_fit(&xs[..split], &ys[..split])?;
        let sse = lin.sse + quadratic_sse(&xs[split..], &ys[split..]);
        if best.is_none_or(|b| sse < b.sse) {
            best = Some(Breakpoint {
                generation: split,
                linear_r_squared: lin.r_squared,
                sse,
            });
        }
    }
    Ok(best.expect("at least one split"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(side: usize, beta: f64) -> TakeoverConfig {
        TakeoverConfig::new(GridShape::square(side).unwrap(), beta)
    }

    #[test]
    fn beta_one_never_spreads() {
        let mut c = cfg(16, 1.0);
        c.max_generations = Some(200);
        let curve = takeover_run(&c, 0).unwrap();
        assert!(curve.counts.iter().all(|&n| n == 1));
        assert_eq!(curve.counts.len(), 201);
        assert_eq!(curve.takeover_time, None);
        for row in curve.ledger.rows() {
            assert_eq!((row.n00, row.n01, row.n11), (255, 0, 1));
        }
    }

    #[test]
    fn curves_are_monotone_and_reach_lambda() {
        for beta in [0.0, 0.3, 0.7, 0.95] {
            let curve = takeover_run(&cfg(10, beta), 1).unwrap();
            assert_eq!(curve.counts[0], 1);
            assert!(curve.counts.windows(2).all(|w| w[1] >= w[0]));
            let t = curve.takeover_time.expect("takeover below β = 1");
            assert_eq!(curve.counts[t], 100);
            assert!(curve.counts[..t].iter().all(|&n| n < 100));
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let c = cfg(12, 0.5);
        let a = takeover_run(&c, 3).unwrap();
        assert_eq!(a, takeover_run(&c, 3).unwrap());
    }

    #[test]
    fn fixed_placement_is_respected() {
        let mut c = cfg(9, 0.2);
        c.placement = Placement::Fixed(CellIndex(40));
        let curve = takeover_run(&c, 0).unwrap();
        assert_eq!(curve.origin, CellIndex(40));
        c.placement = Placement::Fixed(CellIndex(81));
        assert!(takeover_run(&c, 0).is_err());
    }

    #[test]
    fn growth_rate_examples() {
        assert_eq!(growth_rate(&[4, 4, 4]), vec![0, 0]);
        let counts = [1, 3, 8, 20, 25];
        let rate = growth_rate(&counts);
        assert_eq!(rate.iter().sum::<i64>(), 24);
    }

    #[test]
    fn sweep_shapes_and_summary() {
        let mut c = cfg(8, 0.0);
        c.replicates = 5;
        let sweep = takeover_sweep(&[0.2, 1.0], &TakeoverConfig { max_generations: Some(50), ..c }).unwrap();
        assert_eq!(sweep.len(), 2);
        assert_eq!(sweep[0].curves.len(), 5);
        assert_eq!(sweep[0].summary().defined, 5);
        let s1 = sweep[1].summary();
        assert_eq!(s1.defined, 0);
        assert!(s1.mean.is_nan());
        let mut buf = Vec::new();
        write_summary(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(2).unwrap().starts_with("1,undefined"));
    }

    #[test]
    fn breakpoint_on_synthetic_series() {
        // linear up to 30, then a downward parabola
        let rate: Vec<f64> = (1..=60)
            .map(|t| {
                let t = t as f64;
                if t <= 30.0 {
                    2.0 * t
                } else {
                    60.0 - 0.2 * (t - 30.0).powi(2)
                }
            })
            .collect();
        let bp = detect_breakpoint(&rate, 60, 5).unwrap();
        assert!((bp.generation as i64 - 30).abs() <= 1, "{bp:?}");
        assert!(bp.linear_r_squared > 0.999);
    }

    #[test]
    fn three_by_three_beta_zero_matches_markov_chain() {
        // At β = 0 every candidate is one of the 4 distinct neighbors, so a
        // null cell with k best neighbors turns best with probability
        // 1 − (1 − k/4)^4, independently of the other cells. Exact expected
        // takeover time by value iteration over the 2^9 states.
        let shape = GridShape::square(3).unwrap();
        let nbrs: Vec<[usize; 4]> = shape
            .cells()
            .map(|c| {
                let n = shape.neighborhood(c).unwrap();
                [n.north.0, n.south.0, n.east.0, n.west.0]
            })
            .collect();
        let full = (1usize << 9) - 1;
        let mut expected = vec![0.0f64; 1 << 9];
        // states in decreasing popcount order: successors only add cells
        let mut order: Vec<usize> = (1..=full).collect();
        order.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
        for &s in &order {
            if s == full {
                continue;
            }
            let probs: Vec<(usize, f64)> = (0..9)
                .filter(|i| s & (1 << i) == 0)
                .map(|i| {
                    let k = nbrs[i].iter().filter(|&&j| s & (1 << j) != 0).count() as f64;
                    (i, 1.0 - (1.0 - k / 4.0).powi(4))
                })
                .collect();
            let m = probs.len();
            let mut stay = 0.0;
            let mut acc = 0.0;
            for mask in 0..(1usize << m) {
                let mut p = 1.0;
                let mut next = s;
                for (b, &(cell, q)) in probs.iter().enumerate() {
                    if mask & (1 << b) != 0 {
                        p *= q;
                        next |= 1 << cell;
                    } else {
                        p *= 1.0 - q;
                    }
                }
                if next == s {
                    stay = p;
                } else {
                    acc += p * expected[next];
                }
            }
            expected[s] = (1.0 + acc) / (1.0 - stay);
        }
        let exact = expected[1];

        let mut c = cfg(3, 0.0);
        c.replicates = 10_000;
        let sweep = takeover_sweep(&[0.0], &c).unwrap();
        let s = sweep[0].summary();
        assert_eq!(s.defined, 10_000);
        assert!((s.mean - exact).abs() < 4.0 * s.standard_error(), "{} vs {exact}", s.mean);
        assert!(exact < 5.0);
        let (mean, _) = sweep[0].mean_curve();
        let until = mean.iter().position(|&m| m == 9.0).unwrap_or(mean.len());
        assert!(mean[..until].windows(2).all(|w| w[1] > w[0]));
    }
}
