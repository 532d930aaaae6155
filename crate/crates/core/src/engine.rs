//! Synchronous cellular evolutionary loop.
//!
//! Every generation each cell selects two parents by centric selection in
//! its own neighborhood, produces two children, and keeps the best of
//! {current, child 1, child 2} (a child replaces the incumbent only when it
//! is strictly better). All cells read the pre-step population; results land
//! in a temporary grid that replaces the population at the end of the step.
//!
//! Random numbers for cell `i` at generation `t` come from
//! `streams.stream(t, i)` and are consumed in this order: candidate draws of
//! the first tournament (2), of the second tournament (2), the crossover gate
//! (only when the parents are different cells and `0 < crossover_rate < 1`),
//! crossover, mutation of child 1, mutation of child 2.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridShape};
use crate::problems::{Problem, Sense};
use crate::rng::{SeedStreams, StreamSource};
use crate::selection::{centric_select, CentricParams};

pub const DEFAULT_MAX_GENERATIONS: usize = 1500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub shape: GridShape,
    pub beta: f64,
    pub max_generations: usize,
    pub crossover_rate: f64,
    /// Apply the problem's mutation to both children.
    pub mutation: bool,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(shape: GridShape, beta: f64) -> Self {
        Self {
            shape,
            beta,
            max_generations: DEFAULT_MAX_GENERATIONS,
            crossover_rate: 1.0,
            mutation: true,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_generations(mut self, generations: usize) -> Self {
        self.max_generations = generations;
        self
    }

    /// Disables crossover and mutation: selection and replacement only.
    pub fn selection_only(mut self) -> Self {
        self.crossover_rate = 0.0;
        self.mutation = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        CentricParams::new(self.beta).map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!(
                "crossover rate must lie in [0, 1], got {}",
                self.crossover_rate
            )));
        }
        Ok(())
    }
}

/// Number of current-best parents in a mating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MatingType {
    M00,
    M01,
    M11,
}

impl MatingType {
    pub const ALL: [MatingType; 3] = [MatingType::M00, MatingType::M01, MatingType::M11];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            MatingType::M00 => "00",
            MatingType::M01 => "01",
            MatingType::M11 => "11",
        }
    }
}

/// A parent is a copy of the best when its fitness equals the current
/// population-best fitness.
pub fn classify_mating(parent_a: f64, parent_b: f64, best: f64) -> MatingType {
    match (parent_a == best) as u8 + (parent_b == best) as u8 {
        0 => MatingType::M00,
        1 => MatingType::M01,
        _ => MatingType::M11,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatingCounts {
    pub n00: u32,
    pub n01: u32,
    pub n11: u32,
}

impl MatingCounts {
    pub fn add(&mut self, t: MatingType) {
        match t {
            MatingType::M00 => self.n00 += 1,
            MatingType::M01 => self.n01 += 1,
            MatingType::M11 => self.n11 += 1,
        }
    }

    pub fn get(&self, t: MatingType) -> u32 {
        match t {
            MatingType::M00 => self.n00,
            MatingType::M01 => self.n01,
            MatingType::M11 => self.n11,
        }
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.n00, self.n01, self.n11]
    }

    pub fn total(&self) -> u64 {
        self.n00 as u64 + self.n01 as u64 + self.n11 as u64
    }
}

/// Per-generation mating counts; row `t − 1` holds generation `t`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatingLedger {
    rows: Vec<MatingCounts>,
}

impl MatingLedger {
    pub fn push(&mut self, row: MatingCounts) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[MatingCounts] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `[Σ00(T), Σ01(T), Σ11(T)]` over the first `horizon` generations.
    pub fn cumulative(&self, horizon: usize) -> [u64; 3] {
        let mut sigma = [0u64; 3];
        for row in self.rows.iter().take(horizon) {
            for (s, n) in sigma.iter_mut().zip(row.as_array()) {
                *s += n as u64;
            }
        }
        sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementEvent {
    pub generation: u64,
    pub cell: CellIndex,
    pub mating: MatingType,
    pub old_best_fitness: f64,
    pub new_best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population<G> {
    shape: GridShape,
    cells: Vec<G>,
    fitness: Vec<f64>,
    generation: u64,
}

impl<G: Clone> Population<G> {
    pub fn new<P: Problem<Genotype = G>>(problem: &P, shape: GridShape, cells: Vec<G>) -> Result<Self> {
        if cells.len() != shape.size() {
            return Err(Error::Config(format!(
                "{} genotypes for a grid of {} cells",
                cells.len(),
                shape.size()
            )));
        }
        let fitness = cells.iter().map(|g| problem.evaluate(g)).collect();
        Ok(Self {
            shape,
            cells,
            fitness,
            generation: 0,
        })
    }

    /// Uniform random genotypes; cell `i` draws from stream `(0, i)`.
    pub fn random<P, S>(problem: &P, shape: GridShape, streams: &S) -> Self
    where
        P: Problem<Genotype = G>,
        S: StreamSource,
    {
        let cells = shape
            .cells()
            .map(|c| problem.random_genotype(&mut streams.stream(0, c.0 as u64)))
            .collect();
        Self::new(problem, shape, cells).expect("one genotype per cell")
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn genotypes(&self) -> &[G] {
        &self.cells
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn best_fitness(&self, sense: Sense) -> f64 {
        sense.best_of(&self.fitness).expect("non-empty population")
    }

    pub fn count_at(&self, value: f64) -> usize {
        self.fitness.iter().filter(|&&f| f == value).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    pub counts: MatingCounts,
    pub events: Vec<ImprovementEvent>,
}

/// Result of updating one cell against a frozen population.
#[derive(Debug, Clone, PartialEq)]
pub struct CellUpdate<G> {
    pub parents: (CellIndex, CellIndex),
    pub mating: MatingType,
    /// Replacement genotype and fitness, if a child beat the incumbent.
    pub replacement: Option<(G, f64)>,
}

pub struct Engine<'p, P: Problem, S: StreamSource = SeedStreams> {
    problem: &'p P,
    cfg: EngineConfig,
    params: CentricParams,
    streams: S,
}

impl<'p, P: Problem> Engine<'p, P, SeedStreams> {
    pub fn new(problem: &'p P, cfg: EngineConfig) -> Result<Self> {
        Self::with_streams(problem, cfg, SeedStreams::new(cfg.seed))
    }
}

impl<'p, P: Problem, S: StreamSource> Engine<'p, P, S> {
    pub fn with_streams(problem: &'p P, cfg: EngineConfig, streams: S) -> Result<Self> {
        cfg.validate()?;
        let params = CentricParams::new(cfg.beta)?;
        Ok(Self {
            problem,
            cfg,
            params,
            streams,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn streams(&self) -> &S {
        &self.streams
    }

    pub fn initial_population(&self) -> Population<P::Genotype> {
        Population::random(self.problem, self.cfg.shape, &self.streams)
    }

    /// Computes the update of cell `i` for the next generation of `pop`
    /// without modifying it.
    pub fn update_cell(
        &self,
        pop: &Population<P::Genotype>,
        i: CellIndex,
        best: f64,
    ) -> CellUpdate<P::Genotype> {
        let problem = self.problem;
        let sense = problem.sense();
        let fit = &pop.fitness;
        let mut rng = self.streams.stream(pop.generation + 1, i.0 as u64);
        let nb = pop.shape.neighborhood_unchecked(i);
        let better = |a: CellIndex, b: CellIndex| sense.better(fit[a.0], fit[b.0]);

        let pa = centric_select(self.params, &nb, better, &mut rng).winner;
        let pb = centric_select(self.params, &nb, better, &mut rng).winner;
        let mating = classify_mating(fit[pa.0], fit[pb.0], best);

        let rate = self.cfg.crossover_rate;
        let cross = pa != pb
            && match rate {
                r if r >= 1.0 => true,
                r if r <= 0.0 => false,
                r => rand::Rng::random::<f64>(&mut rng) < r,
            };

        let (c1, f1, c2, f2) = if cross {
            let (mut c1, mut c2) = problem.crossover(&pop.cells[pa.0], &pop.cells[pb.0], &mut rng);
            if self.cfg.mutation {
                problem.mutate(&mut c1, &mut rng);
                problem.mutate(&mut c2, &mut rng);
            }
            let (f1, f2) = (problem.evaluate(&c1), problem.evaluate(&c2));
            (c1, f1, c2, f2)
        } else if self.cfg.mutation {
            let mut c1 = pop.cells[pa.0].clone();
            let mut c2 = pop.cells[pb.0].clone();
            let f1 = problem.mutate_scored(&mut c1, fit[pa.0], &mut rng);
            let f2 = problem.mutate_scored(&mut c2, fit[pb.0], &mut rng);
            (c1, f1, c2, f2)
        } else {
            // Unvaried children are copies of the parents; only clone a winner.
            let current = fit[i.0];
            let mut pick = None;
            let mut best_f = current;
            for (p, f) in [(pa, fit[pa.0]), (pb, fit[pb.0])] {
                if sense.better(f, best_f) {
                    pick = Some(p);
                    best_f = f;
                }
            }
            return CellUpdate {
                parents: (pa, pb),
                mating,
                replacement: pick.map(|p| (pop.cells[p.0].clone(), best_f)),
            };
        };

        let current = fit[i.0];
        let replacement = if sense.better(f2, f1) {
            sense.better(f2, current).then_some((c2, f2))
        } else {
            sense.better(f1, current).then_some((c1, f1))
        };
        CellUpdate {
            parents: (pa, pb),
            mating,
            replacement,
        }
    }

    /// Advances `pop` by one synchronous generation.
    pub fn step(&self, pop: &mut Population<P::Genotype>) -> StepReport {
        let sense = self.problem.sense();
        let best = pop.best_fitness(sense);
        let generation = pop.generation + 1;
        let mut report = StepReport::default();
        let mut temp: Vec<Option<(P::Genotype, f64)>> = Vec::with_capacity(pop.cells.len());

        for i in pop.shape.cells() {
            let update = self.update_cell(pop, i, best);
            report.counts.add(update.mating);
            if let Some((_, f)) = &update.replacement {
                if sense.better(*f, best) {
                    report.events.push(ImprovementEvent {
                        generation,
                        cell: i,
                        mating: update.mating,
                        old_best_fitness: best,
                        new_best_fitness: *f,
                    });
                }
            }
            temp.push(update.replacement);
        }

        for (i, slot) in temp.into_iter().enumerate() {
            if let Some((g, f)) = slot {
                pop.cells[i] = g;
                pop.fitness[i] = f;
            }
        }
        pop.generation = generation;
        report
    }

    /// Runs `max_generations` steps from `pop`.
    pub fn run_from(&self, mut pop: Population<P::Genotype>) -> RunRecord<P::Genotype> {
        let sense = self.problem.sense();
        let mut best = Vec::with_capacity(self.cfg.max_generations + 1);
        best.push(pop.best_fitness(sense));
        let mut ledger = MatingLedger::default();
        let mut events = Vec::new();
        for _ in 0..self.cfg.max_generations {
            let report = self.step(&mut pop);
            ledger.push(report.counts);
            events.extend(report.events);
            best.push(pop.best_fitness(sense));
        }
        RunRecord {
            sense,
            best,
            ledger,
            events,
            final_population: pop,
        }
    }

    /// Runs from a uniformly random initial population.
    pub fn run(&self) -> RunRecord<P::Genotype> {
        self.run_from(self.initial_population())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<G> {
    pub sense: Sense,
    /// Population-best fitness; entry `t` is the value after generation `t`.
    pub best: Vec<f64>,
    pub ledger: MatingLedger,
    pub events: Vec<ImprovementEvent>,
    pub final_population: Population<G>,
}

impl<G> RunRecord<G> {
    pub fn final_best(&self) -> f64 {
        *self.best.last().expect("trajectory holds the initial best")
    }

    /// First generation at which the final best value was reached.
    pub fn generations_to_best(&self) -> usize {
        let target = self.final_best();
        self.best
            .iter()
            .position(|&f| f == target)
            .expect("final value occurs in the trajectory")
    }

    /// Per-generation successes `[s00, s01, s11]`, aligned with the ledger.
    pub fn successes(&self) -> Vec<[u32; 3]> {
        let mut out = vec![[0u32; 3]; self.ledger.len()];
        for e in &self.events {
            out[(e.generation - 1) as usize][e.mating.index()] += 1;
        }
        out
    }

    /// CSV with header `generation,best_fitness,n00,n01,n11,improved`.
    /// Generation 0 is the initial population and carries zero counts.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "generation,best_fitness,n00,n01,n11,improved")?;
        writeln!(w, "0,{},0,0,0,0", self.best[0])?;
        for (t, row) in self.ledger.rows().iter().enumerate() {
            let improved = self.sense.better(self.best[t + 1], self.best[t]) as u8;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                t + 1,
                self.best[t + 1],
                row.n00,
                row.n01,
                row.n11,
                improved
            )?;
        }
        Ok(())
    }
}
