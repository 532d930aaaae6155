use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitstringGenotype(Vec<bool>);

impl BitstringGenotype {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.random()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// One-point crossover with the cut drawn uniformly in `1..n`; the children
/// exchange suffixes. Strings of length 1 are returned unchanged.
pub fn one_point_crossover<R: Rng + ?Sized>(
    g1: &BitstringGenotype,
    g2: &BitstringGenotype,
    rng: &mut R,
) -> Result<(BitstringGenotype, BitstringGenotype)> {
    let n = g1.len();
    if g2.len() != n {
        return Err(Error::Domain(format!(
            "bitstrings have different lengths ({n} and {})",
            g2.len()
        )));
    }
    if n < 2 {
        return Ok((g1.clone(), g2.clone()));
    }
    let cut = rng.random_range(1..n);
    Ok(cross_at(g1, g2, cut))
}

pub(crate) fn cross_at(
    g1: &BitstringGenotype,
    g2: &BitstringGenotype,
    cut: usize,
) -> (BitstringGenotype, BitstringGenotype) {
    let mut a = g1.0[..cut].to_vec();
    a.extend_from_slice(&g2.0[cut..]);
    let mut b = g2.0[..cut].to_vec();
    b.extend_from_slice(&g1.0[cut..]);
    (BitstringGenotype(a), BitstringGenotype(b))
}

/// Flips each bit independently with probability 1/n.
pub fn bitflip_mutation<R: Rng + ?Sized>(g: &BitstringGenotype, rng: &mut R) -> BitstringGenotype {
    let mut out = g.clone();
    bitflip_in_place(&mut out, rng);
    out
}

pub(crate) fn bitflip_in_place<R: Rng + ?Sized>(g: &mut BitstringGenotype, rng: &mut R) {
    let n = g.len();
    if n == 0 {
        return;
    }
    let rate = 1.0 / n as f64;
    for bit in g.0.iter_mut() {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
}
