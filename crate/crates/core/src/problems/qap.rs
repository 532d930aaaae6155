//! Quadratic assignment problem.
//!
//! Cost of an assignment `p` (facility `i` placed at location `p[i]`):
//! `Φ(p) = Σᵢ Σⱼ d[p(i)][p(j)] · f[i][j]`, minimized.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use super::permutation::{draw_swap, upmx_extended_crossover, PermutationGenotype};
use super::{Problem, Sense};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QapInstance {
    name: String,
    n: usize,
    /// Row-major n×n flow matrix.
    flow: Vec<f64>,
    /// Row-major n×n distance matrix.
    distance: Vec<f64>,
}

impl QapInstance {
    pub fn new(name: impl Into<String>, flow: Vec<Vec<f64>>, distance: Vec<Vec<f64>>) -> Result<Self> {
        let n = flow.len();
        if n == 0 {
            return Err(Error::Domain("instance must have at least one facility".into()));
        }
        let square = |m: &[Vec<f64>], what: &str| -> Result<Vec<f64>> {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(Error::Domain(format!("{what} matrix is not {n}x{n}")));
            }
            if m.iter().flatten().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::Domain(format!("{what} matrix has negative or non-finite entries")));
            }
            Ok(m.iter().flatten().copied().collect())
        };
        Ok(Self {
            name: name.into(),
            n,
            flow: square(&flow, "flow")?,
            distance: square(&distance, "distance")?,
        })
    }

    /// Parses the QAPLIB text layout: `n`, then the flow matrix, then the
    /// distance matrix, all whitespace separated.
    pub fn load<R: Read>(name: impl Into<String>, mut source: R) -> Result<Self> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        parse_qaplib(name.into(), &text)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::load(name, file)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.flow[i * self.n + j]
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        self.distance[k * self.n + l]
    }

    /// Φ over all ordered pairs, diagonal included.
    pub fn cost(&self, g: &PermutationGenotype) -> Result<f64> {
        if g.len() != self.n {
            return Err(Error::Domain(format!(
                "permutation of size {} for an instance of size {}",
                g.len(),
                self.n
            )));
        }
        Ok(self.cost_unchecked(g.as_slice()))
    }

    fn cost_unchecked(&self, p: &[usize]) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for (i, &pi) in p.iter().enumerate() {
            let frow = &self.flow[i * n..(i + 1) * n];
            let drow = &self.distance[pi * n..(pi + 1) * n];
            for (j, &pj) in p.iter().enumerate() {
                total += drow[pj] * frow[j];
            }
        }
        total
    }

    /// Change of Φ when facilities `r` and `s` exchange locations.
    pub fn swap_delta(&self, p: &[usize], r: usize, s: usize) -> f64 {
        if r == s {
            return 0.0;
        }
        let n = self.n;
        let (a, b) = (p[r], p[s]);
        let f = |i: usize, j: usize| self.flow[i * n + j];
        let d = |k: usize, l: usize| self.distance[k * n + l];
        let mut delta = 0.0;
        for (k, &pk) in p.iter().enumerate() {
            if k == r || k == s {
                continue;
            }
            delta += (f(r, k) - f(s, k)) * (d(b, pk) - d(a, pk))
                + (f(k, r) - f(k, s)) * (d(pk, b) - d(pk, a));
        }
        delta += (f(r, r) - f(s, s)) * (d(b, b) - d(a, a));
        delta += (f(r, s) - f(s, r)) * (d(b, a) - d(a, b));
        delta
    }
}

fn parse_qaplib(name: String, text: &str) -> Result<QapInstance> {
    let mut tokens = text.lines().enumerate().flat_map(|(line, content)| {
        content
            .split_whitespace()
            .enumerate()
            .map(move |(tok, s)| (line + 1, tok + 1, s))
    });
    let last_line = text.lines().count().max(1);

    let (line, token, raw) = tokens.next().ok_or(Error::Parse {
        line: 1,
        token: 1,
        message: "empty file, expected the instance size".into(),
    })?;
    let n: usize = raw.parse().map_err(|_| Error::Parse {
        line,
        token,
        message: format!("instance size must be a positive integer, found {raw:?}"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line,
            token,
            message: "instance size must be positive".into(),
        });
    }

    let mut read_matrix = |what: &str| -> Result<Vec<Vec<f64>>> {
        let mut m = vec![Vec::with_capacity(n); n];
        for (r, row) in m.iter_mut().enumerate() {
            for c in 0..n {
                let (line, token, raw) = tokens.next().ok_or_else(|| Error::Parse {
                    line: last_line,
                    token: 0,
                    message: format!(
                        "file ends in row {} of the {what} matrix (entry {} of {n} missing)",
                        r + 1,
                        c + 1
                    ),
                })?;
                let v: i64 = raw.parse().map_err(|_| Error::Parse {
                    line,
                    token,
                    message: format!("non-numeric {what} entry {raw:?}"),
                })?;
                if v < 0 {
                    return Err(Error::Parse {
                        line,
                        token,
                        message: format!("negative {what} entry {v}"),
                    });
                }
                row.push(v as f64);
            }
        }
        Ok(m)
    };
    let flow = read_matrix("flow")?;
    let distance = read_matrix("distance")?;
    if let Some((line, token, raw)) = tokens.next() {
        return Err(Error::Parse {
            line,
            token,
            message: format!("unexpected trailing token {raw:?} after two {n}x{n} matrices"),
        });
    }
    QapInstance::new(name, flow, distance)
}

impl Problem for QapInstance {
    type Genotype = PermutationGenotype;

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, g: &PermutationGenotype) -> f64 {
        self.cost_unchecked(g.as_slice())
    }

    fn random_genotype<R: Rng + ?Sized>(&self, rng: &mut R) -> PermutationGenotype {
        PermutationGenotype::random(self.n, rng)
    }

    fn crossover<R: Rng + ?Sized>(
        &self,
        a: &PermutationGenotype,
        b: &PermutationGenotype,
        rng: &mut R,
    ) -> (PermutationGenotype, PermutationGenotype) {
        upmx_extended_crossover(a, b, rng).expect("parents sized by the instance")
    }

    fn mutate<R: Rng + ?Sized>(&self, g: &mut PermutationGenotype, rng: &mut R) {
        if self.n >= 2 {
            let (r, s) = draw_swap(self.n, rng);
            g.swap(r, s);
        }
    }

    fn mutate_scored<R: Rng + ?Sized>(
        &self,
        g: &mut PermutationGenotype,
        fitness: f64,
        rng: &mut R,
    ) -> f64 {
        if self.n < 2 {
            return fitness;
        }
        let (r, s) = draw_swap(self.n, rng);
        let delta = self.swap_delta(g.as_slice(), r, s);
        g.swap(r, s);
        fitness + delta
    }
}
