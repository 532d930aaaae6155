//! NK fitness landscapes.
//!
//! `f(x) = (1/N) Σᵢ fᵢ(xᵢ, x_{i1}, …, x_{iK})` where every component is a
//! lookup table of 2^(K+1) values drawn uniformly from [0, 1]. The table
//! index reads `xᵢ` as the most significant bit followed by the linked loci
//! in `links[i]` order.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::bitstring::{bitflip_in_place, one_point_crossover, BitstringGenotype};
use super::{Problem, Sense};
use crate::error::{Error, Result};
use crate::rng::CellRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NkKind {
    /// The K nearest loci on a ring: i+1, i−1, i+2, i−2, …
    Adjacent,
    /// K distinct loci drawn uniformly from the other N − 1.
    Random,
}

impl std::str::FromStr for NkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" => Ok(NkKind::Adjacent),
            "random" => Ok(NkKind::Random),
            other => Err(Error::Parameter(format!(
                "unknown NK neighborhood kind {other:?} (expected adjacent or random)"
            ))),
        }
    }
}

impl std::fmt::Display for NkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NkKind::Adjacent => "adjacent",
            NkKind::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NkLandscape {
    n: usize,
    k: usize,
    kind: NkKind,
    seed: u64,
    links: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

fn adjacent_links(n: usize, k: usize, i: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut d = 1;
    while out.len() < k {
        for cand in [(i + d) % n, (i + n - d % n) % n] {
            if out.len() < k && cand != i && !out.contains(&cand) {
                out.push(cand);
            }
        }
        d += 1;
    }
    out
}

impl NkLandscape {
    /// Builds a landscape; the result is a pure function of the arguments.
    pub fn generate(n: usize, k: usize, kind: NkKind, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("N must be positive".into()));
        }
        if k >= n {
            return Err(Error::Parameter(format!("K must lie in [0, {}], got {k}", n - 1)));
        }
        if k + 1 >= usize::BITS as usize {
            return Err(Error::Parameter(format!("K = {k} is too large for table indexing")));
        }
        let mut rng = CellRng::seed_from_u64(seed);
        let links: Vec<Vec<usize>> = (0..n)
            .map(|i| match kind {
                NkKind::Adjacent => adjacent_links(n, k, i),
                NkKind::Random => sample(&mut rng, n - 1, k)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j })
                    .collect(),
            })
            .collect();
        let tables = (0..n)
            .map(|_| (0..1usize << (k + 1)).map(|_| rng.random::<f64>()).collect())
            .collect();
        Ok(Self {
            n,
            k,
            kind,
            seed,
            links,
            tables,
        })
    }

    /// Builds a landscape from explicit links and tables.
    pub fn from_parts(
        kind: NkKind,
        seed: u64,
        links: Vec<Vec<usize>>,
        tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = links.len();
        let k = links.first().map_or(0, Vec::len);
        let l = Self {
            n,
            k,
            kind,
            seed,
            links,
            tables,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn save_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
        self.save(std::io::BufWriter::new(file))
    }

    pub fn load_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        Self::load(std::io::BufReader::new(file))
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if self.n == 0 || self.k >= self.n {
            return bad(format!("inconsistent N = {}, K = {}", self.n, self.k));
        }
        if self.links.len() != self.n || self.tables.len() != self.n {
            return bad(format!("expected {} links and tables", self.n));
        }
        for (i, links) in self.links.iter().enumerate() {
            let mut sorted = links.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if links.len() != self.k || sorted.len() != self.k || links.iter().any(|&j| j == i || j >= self.n) {
                return bad(format!("links of locus {i} are not {} distinct other loci", self.k));
            }
        }
        for (i, t) in self.tables.iter().enumerate() {
            if t.len() != 1 << (self.k + 1) || t.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!("table of locus {i} must hold 2^(K+1) values in [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> NkKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn links(&self, i: usize) -> &[usize] {
        &self.links[i]
    }

    pub fn table(&self, i: usize) -> &[f64] {
        &self.tables[i]
    }

    pub fn fitness(&self, g: &BitstringGenotype) -> Result<f64> {
        if g.len() != self.n {
            return Err(Error::Domain(format!(
                "bitstring of length {} for a landscape with N = {}",
                g.len(),
                self.n
            )));
        }
        Ok(self.fitness_unchecked(g.bits()))
    }

    fn fitness_unchecked(&self, x: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let mut idx = x[i] as usize;
            for &j in &self.links[i] {
                idx = (idx << 1) | x[j] as usize;
            }
            total += self.tables[i][idx];
        }
        total / self.n as f64
    }

    /// Writes the landscape as JSON with fields `n`, `k`, `kind`, `seed`,
    /// `links` and `tables`.
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Io(e.into()))
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let l: Self = serde_json::from_reader(r).map_err(|e| Error::Parse {
            line: e.line(),
            token: e.column(),
            message: e.to_string(),
        })?;
        l.validate()?;
        Ok(l)
    }
}

impl Problem for NkLandscape {
    type Genotype = BitstringGenotype;

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, g: &BitstringGenotype) -> f64 {
        self.fitness_unchecked(g.bits())
    }

    fn random_genotype<R: Rng + ?Sized>(&self, rng: &mut R) -> BitstringGenotype {
        BitstringGenotype::random(self.n, rng)
    }

    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &BitstringGenotype,
        b: &BitstringGenotype,
        rng: &mut R,
    ) -> (BitstringGenotype, BitstringGenotype) {
        one_point_crossover(a, b, rng).expect("parents sized by the landscape")
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &mut BitstringGenotype, rng: &mut R) {
        bitflip_in_place(g, rng);
    }
}
