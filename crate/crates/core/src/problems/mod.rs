//! Search spaces evaluated by the cellular engine.

mod bitstring;
mod nk;
mod permutation;
mod qap;

pub use bitstring::{bitflip_mutation, one_point_crossover, BitstringGenotype};
pub use nk::{NkKind, NkLandscape};
pub use permutation::{swap_mutation, upmx_extended_crossover, PermutationGenotype};
pub use qap::QapInstance;

use rand::Rng;

/// Optimization sense of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    /// True when `a` is strictly better than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }

    /// Best value of a non-empty slice.
    pub fn best_of(self, values: &[f64]) -> Option<f64> {
        values
            .iter()
            .copied()
            .reduce(|best, v| if self.better(v, best) { v } else { best })
    }
}

/// An evaluatable search space together with its variation operators.
pub trait Problem: Sync {
    type Genotype: Clone + Send + Sync + PartialEq + std::fmt::Debug;

    fn sense(&self) -> Sense;

    fn evaluate(&self, g: &Self::Genotype) -> f64;

    fn random_genotype<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Genotype;

    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &Self::Genotype,
        b: &Self::Genotype,
        rng: &mut R,
    ) -> (Self::Genotype, Self::Genotype);

    fn mutate<R: Rng + ?Sized>(&self, g: &mut Self::Genotype, rng: &mut R);

    /// Mutates `g`, whose fitness is `fitness`, and returns the new fitness.
    /// Problems with cheap incremental evaluation override this.
    fn mutate_scored<R: Rng + ?Sized>(
        &self,
        g: &mut Self::Genotype,
        fitness: f64,
        rng: &mut R,
    ) -> f64 {
        let _ = fitness;
        self.mutate(g, rng);
        self.evaluate(g)
    }
}
