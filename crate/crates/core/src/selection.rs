//! Centric selection.
//!
//! A two-candidate deterministic tournament over a Von Neumann neighborhood
//! where the center cell is drawn with probability β and each of the four
//! neighbors with probability (1 − β)/4. β = 0.2 is the uniform binary
//! tournament; β = 1 always returns the center.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{CellIndex, Neighborhood};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentricParams {
    beta: f64,
}

impl CentricParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Parameter(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn p_center(&self) -> f64 {
        self.beta
    }

    pub fn p_neighbor(&self) -> f64 {
        (1.0 - self.beta) / 4.0
    }

    /// Draw probabilities in [`Neighborhood::cells`] order.
    pub fn probabilities(&self) -> [f64; 5] {
        let pn = self.p_neighbor();
        [self.p_center(), pn, pn, pn, pn]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    pub winner: CellIndex,
    pub candidates: (CellIndex, CellIndex),
}

/// Draws one tournament candidate. Consumes exactly one `f64` from `rng`.
pub fn draw_candidate<R: Rng + ?Sized>(
    params: CentricParams,
    nbhd: &Neighborhood,
    rng: &mut R,
) -> CellIndex {
    let u: f64 = rng.random();
    let beta = params.beta;
    if u < beta {
        return nbhd.center;
    }
    let slot = (((u - beta) / (1.0 - beta)) * 4.0) as usize;
    match slot {
        0 => nbhd.north,
        1 => nbhd.south,
        2 => nbhd.east,
        _ => nbhd.west,
    }
}

/// Runs one centric tournament.
///
/// `better(a, b)` must return true when `a` is strictly fitter than `b`.
/// On equal fitness the first-drawn candidate wins.
pub fn centric_select<R, F>(
    params: CentricParams,
    nbhd: &Neighborhood,
    better: F,
    rng: &mut R,
) -> SelectionOutcome
where
    R: Rng + ?Sized,
    F: Fn(CellIndex, CellIndex) -> bool,
{
    let first = draw_candidate(params, nbhd, rng);
    let second = draw_candidate(params, nbhd, rng);
    let winner = if better(second, first) { second } else { first };
    SelectionOutcome {
        winner,
        candidates: (first, second),
    }
}
