use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// `p[i]` is the location assigned to facility `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationGenotype(Vec<usize>);

impl PermutationGenotype {
    pub fn new(p: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; p.len()];
        for &v in &p {
            if v >= p.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::Domain(format!("{p:?} is not a permutation")));
            }
        }
        Ok(Self(p))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        Self::new(self.0.clone()).is_ok()
    }

    pub fn swap(&mut self, i: usize, j: usize) {
        self.0.swap(i, j);
    }
}

fn position_of(p: &[usize], value: usize) -> usize {
    p.iter()
        .position(|&v| v == value)
        .expect("value present in a permutation")
}

/// Extended UPMX crossover.
///
/// Starting from copies of the parents, ⌊n/3⌋ rounds are applied to the
/// evolving children. Each round draws a position `i`, finds `j` with
/// `c1[i] == c2[j]` and `k` with `c2[i] == c1[k]`, then swaps positions
/// `i, j` in `c1` and `i, k` in `c2`.
pub fn upmx_extended_crossover<R: Rng + ?Sized>(
    p1: &PermutationGenotype,
    p2: &PermutationGenotype,
    rng: &mut R,
) -> Result<(PermutationGenotype, PermutationGenotype)> {
    let n = p1.len();
    if p2.len() != n {
        return Err(Error::Domain(format!(
            "parents have different sizes ({n} and {})",
            p2.len()
        )));
    }
    let mut c1 = p1.0.clone();
    let mut c2 = p2.0.clone();
    for _ in 0..n / 3 {
        let i = rng.random_range(0..n);
        let j = position_of(&c2, c1[i]);
        let k = position_of(&c1, c2[i]);
        c1.swap(i, j);
        c2.swap(i, k);
    }
    Ok((PermutationGenotype(c1), PermutationGenotype(c2)))
}

/// Draws two distinct positions uniformly, in increasing order.
pub(crate) fn draw_swap<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

/// Exchanges the contents of two distinct random positions.
pub fn swap_mutation<R: Rng + ?Sized>(
    g: &PermutationGenotype,
    rng: &mut R,
) -> Result<PermutationGenotype> {
    if g.len() < 2 {
        return Err(Error::Domain("swap mutation needs at least two positions".into()));
    }
    let mut out = g.clone();
    let (a, b) = draw_swap(g.len(), rng);
    out.swap(a, b);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStreams, StreamSource};
    use crate::stats::chi_square_gof;

    #[test]
    fn validity_check() {
        assert!(PermutationGenotype::new(vec![2, 0, 1]).is_ok());
        assert!(PermutationGenotype::new(vec![0, 0, 1]).is_err());
        assert!(PermutationGenotype::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn identical_parents_are_a_fixed_point() {
        let mut rng = SeedStreams::new(1).stream(0, 0);
        let p = PermutationGenotype::random(30, &mut rng);
        let (a, b) = upmx_extended_crossover(&p, &p, &mut rng).unwrap();
        assert_eq!(a, p);
        assert_eq!(b, p);
    }

    #[test]
    fn agreeing_position_is_a_no_op() {
        // n = 3 gives one round; the parents agree everywhere except 0 and 2,
        // so a round on position 1 leaves both children untouched.
        let p1 = PermutationGenotype::new(vec![0, 1, 2]).unwrap();
        let p2 = PermutationGenotype::new(vec![2, 1, 0]).unwrap();
        let mut seen_noop = false;
        for seed in 0..64 {
            let mut probe = SeedStreams::new(seed).stream(0, 0);
            let i = probe.random_range(0..3);
            let mut rng = SeedStreams::new(seed).stream(0, 0);
            let (a, b) = upmx_extended_crossover(&p1, &p2, &mut rng).unwrap();
            if i == 1 {
                assert_eq!(a, p1);
                assert_eq!(b, p2);
                seen_noop = true;
            }
        }
        assert!(seen_noop);
    }

    #[test]
    fn hand_traced_round() {
        // One round at i = 0: c1[0] = 0 sits at j = 2 in c2, c2[0] = 2 sits at
        // k = 2 in c1. Swapping (0, 2) in both gives c1 = [2,1,0], c2 = [0,1,2].
        let p1 = PermutationGenotype::new(vec![0, 1, 2]).unwrap();
        let p2 = PermutationGenotype::new(vec![2, 1, 0]).unwrap();
        for seed in 0..64 {
            let mut probe = SeedStreams::new(seed).stream(0, 0);
            if probe.random_range(0..3) != 0 {
                continue;
            }
            let mut rng = SeedStreams::new(seed).stream(0, 0);
            let (a, b) = upmx_extended_crossover(&p1, &p2, &mut rng).unwrap();
            assert_eq!(a.as_slice(), &[2, 1, 0]);
            assert_eq!(b.as_slice(), &[0, 1, 2]);
            return;
        }
        panic!("no seed drew position 0");
    }

    #[test]
    fn crossover_keeps_permutations() {
        let streams = SeedStreams::new(99);
        for t in 0..10_000u64 {
            let mut rng = streams.stream(t, 0);
            let p1 = PermutationGenotype::random(30, &mut rng);
            let p2 = PermutationGenotype::random(30, &mut rng);
            let (a, b) = upmx_extended_crossover(&p1, &p2, &mut rng).unwrap();
            assert!(a.is_valid() && b.is_valid());
        }
    }

    #[test]
    fn crossover_size_mismatch() {
        let mut rng = SeedStreams::new(0).stream(0, 0);
        let r = upmx_extended_crossover(
            &PermutationGenotype::identity(3),
            &PermutationGenotype::identity(4),
            &mut rng,
        );
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn swap_on_two_elements() {
        let mut rng = SeedStreams::new(0).stream(0, 0);
        let g = PermutationGenotype::identity(2);
        assert_eq!(swap_mutation(&g, &mut rng).unwrap().as_slice(), &[1, 0]);
        assert!(swap_mutation(&PermutationGenotype::identity(1), &mut rng).is_err());
    }

    #[test]
    fn swap_pairs_are_uniform() {
        let mut rng = SeedStreams::new(5).stream(0, 0);
        let g = PermutationGenotype::identity(5);
        let mut counts = [0u64; 10];
        let pair_index = |a: usize, b: usize| {
            let mut idx = 0;
            for x in 0..5 {
                for y in x + 1..5 {
                    if (x, y) == (a, b) {
                        return idx;
                    }
                    idx += 1;
                }
            }
            unreachable!()
        };
        for _ in 0..100_000 {
            let m = swap_mutation(&g, &mut rng).unwrap();
            let diff: Vec<usize> = (0..5).filter(|&i| m.as_slice()[i] != i).collect();
            assert_eq!(diff.len(), 2);
            counts[pair_index(diff[0], diff[1])] += 1;
        }
        let (_, p) = chi_square_gof(&counts, &[0.1; 10]).unwrap();
        assert!(p > 0.01, "p = {p}, counts {counts:?}");
    }
}
