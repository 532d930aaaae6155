use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use cea_core::engine::{Engine, EngineConfig, RunRecord};
use cea_core::equilibrium::{takeover_sweep, TakeoverConfig};
use cea_core::experiments::{compare_settings, LoadedProblem, PemRunSpec, SweepSpec};
use cea_core::grid::{CellIndex, GridShape};
use cea_core::pem::{self, Aggregation, BetaPrior, PemProbabilities};
use cea_core::problems::{BitstringGenotype, NkKind, NkLandscape, PermutationGenotype, QapInstance};
use cea_core::selection::CentricParams;
use cea_core::Error;
use pyo3::exceptions::{PyOSError, PyTypeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn shape(width: usize, height: usize) -> PyResult<GridShape> {
    GridShape::new(width, height).map_err(py_err)
}

fn probs(p: (f64, f64, f64)) -> PyResult<PemProbabilities> {
    PemProbabilities::new(p.0, p.1, p.2).map_err(py_err)
}

/// Toroidal grid with a five-cell Von Neumann neighborhood.
#[pyclass(name = "Grid", frozen)]
struct PyGrid(GridShape);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(width: usize, height: usize) -> PyResult<Self> {
        Ok(Self(shape(width, height)?))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    fn index(&self, row: usize, col: usize) -> PyResult<usize> {
        self.0.index(row, col).map(usize::from).map_err(py_err)
    }

    fn coords(&self, cell: usize) -> PyResult<(usize, usize)> {
        self.0.coords(CellIndex(cell)).map_err(py_err)
    }

    /// `[center, north, south, east, west]`.
    fn neighborhood(&self, cell: usize) -> PyResult<Vec<usize>> {
        let nb = self.0.neighborhood(CellIndex(cell)).map_err(py_err)?;
        Ok(nb.cells().iter().map(|&c| c.into()).collect())
    }

    fn distance(&self, a: usize, b: usize) -> PyResult<usize> {
        self.0
            .manhattan_torus_distance(CellIndex(a), CellIndex(b))
            .map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {})", self.0.width(), self.0.height())
    }
}

/// Selection probabilities of the five neighborhood positions for `beta`.
#[pyfunction]
fn centric_probabilities(beta: f64) -> PyResult<Vec<f64>> {
    Ok(CentricParams::new(beta).map_err(py_err)?.probabilities().to_vec())
}

#[pyclass(name = "Qap", frozen)]
struct PyQap(QapInstance);

#[pymethods]
impl PyQap {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self(QapInstance::from_path(path).map_err(py_err)?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name().to_string()
    }

    fn cost(&self, perm: Vec<usize>) -> PyResult<f64> {
        let g = PermutationGenotype::new(perm).map_err(py_err)?;
        self.0.cost(&g).map_err(py_err)
    }
}

#[pyclass(name = "NkLandscape", frozen)]
struct PyNk(NkLandscape);

#[pymethods]
impl PyNk {
    /// `kind` is "adjacent" or "random".
    #[new]
    #[pyo3(signature = (n, k, kind = "random", seed = 0))]
    fn new(n: usize, k: usize, kind: &str, seed: u64) -> PyResult<Self> {
        let kind: NkKind = kind.parse().map_err(py_err)?;
        Ok(Self(NkLandscape::generate(n, k, kind, seed).map_err(py_err)?))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self(NkLandscape::load_path(&path).map_err(py_err)?))
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save_path(&path).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn fitness(&self, bits: Vec<bool>) -> PyResult<f64> {
        self.0.fitness(&BitstringGenotype::new(bits)).map_err(py_err)
    }
}

fn problem_of(obj: &Bound<'_, PyAny>) -> PyResult<LoadedProblem> {
    if let Ok(q) = obj.cast::<PyQap>() {
        return Ok(LoadedProblem::Qap(q.get().0.clone()));
    }
    if let Ok(nk) = obj.cast::<PyNk>() {
        return Ok(LoadedProblem::Nk(nk.get().0.clone()));
    }
    Err(PyTypeError::new_err("expected a Qap or NkLandscape instance"))
}

/// Outcome of a single engine run.
#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    /// Population-best fitness after each generation, starting at generation 0.
    best: Vec<f64>,
    /// `(n00, n01, n11)` mating counts per generation.
    matings: Vec<(u32, u32, u32)>,
    /// `(generation, cell, mating, old_best, new_best)` for each improvement.
    events: Vec<(u64, usize, String, f64, f64)>,
    final_best: f64,
    generations_to_best: usize,
}

impl<G> From<RunRecord<G>> for PyRunResult {
    fn from(rec: RunRecord<G>) -> Self {
        Self {
            best: rec.best.clone(),
            matings: rec
                .ledger
                .rows()
                .iter()
                .map(|m| {
                    let [a, b, c] = m.as_array();
                    (a, b, c)
                })
                .collect(),
            events: rec
                .events
                .iter()
                .map(|e| {
                    (
                        e.generation,
                        e.cell.into(),
                        e.mating.label().to_string(),
                        e.old_best_fitness,
                        e.new_best_fitness,
                    )
                })
                .collect(),
            final_best: rec.final_best(),
            generations_to_best: rec.generations_to_best(),
        }
    }
}

#[pyfunction]
#[pyo3(signature = (problem, beta, width = 20, height = 20, generations = 1500, seed = 0))]
fn run(
    py: Python<'_>,
    problem: &Bound<'_, PyAny>,
    beta: f64,
    width: usize,
    height: usize,
    generations: usize,
    seed: u64,
) -> PyResult<PyRunResult> {
    let problem = problem_of(problem)?;
    let cfg = EngineConfig::new(shape(width, height)?, beta)
        .with_generations(generations)
        .with_seed(seed);
    py.detach(|| match &problem {
        LoadedProblem::Qap(p) => Engine::new(p, cfg).map(|e| e.run().into()),
        LoadedProblem::Nk(p) => Engine::new(p, cfg).map(|e| e.run().into()),
    })
    .map_err(py_err)
}

#[pyclass(name = "TakeoverSummary", frozen, get_all)]
struct PyTakeoverSummary {
    beta: f64,
    /// Mean takeover time; `None` when no replicate took over.
    mean: Option<f64>,
    std: Option<f64>,
    defined: usize,
    replicates: usize,
    /// Replicate-mean N(t).
    mean_curve: Vec<f64>,
}

#[pyfunction]
#[pyo3(signature = (betas, width, height, replicates = 100, seed = 0, cap = None))]
fn takeover(
    py: Python<'_>,
    betas: Vec<f64>,
    width: usize,
    height: usize,
    replicates: usize,
    seed: u64,
    cap: Option<usize>,
) -> PyResult<Vec<PyTakeoverSummary>> {
    let mut cfg = TakeoverConfig::new(shape(width, height)?, 0.0);
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg.max_generations = cap;
    let sweep = py.detach(|| takeover_sweep(&betas, &cfg)).map_err(py_err)?;
    Ok(sweep
        .iter()
        .map(|bc| {
            let s = bc.summary();
            let defined = (s.defined > 0).then_some(());
            PyTakeoverSummary {
                beta: s.beta,
                mean: defined.map(|_| s.mean),
                std: defined.map(|_| s.std),
                defined: s.defined,
                replicates: s.replicates,
                mean_curve: bc.mean_curve().0,
            }
        })
        .collect())
}

/// Probability of a new best in a generation with the given mating counts.
#[pyfunction]
fn p_of_t(p: (f64, f64, f64), n00: u64, n01: u64, n11: u64) -> PyResult<f64> {
    Ok(pem::p_of_t(&probs(p)?, n00, n01, n11))
}

/// Probability of a new best over a horizon with cumulative counts `sigmas`.
#[pyfunction]
fn big_p(p: (f64, f64, f64), sigmas: (f64, f64, f64)) -> PyResult<f64> {
    Ok(pem::big_p(&probs(p)?, [sigmas.0, sigmas.1, sigmas.2]))
}

#[pyclass(name = "BetaChoice", frozen, get_all)]
struct PyBetaChoice {
    beta: f64,
    probability: f64,
    residual: f64,
    ties: Vec<f64>,
}

/// Σ_ij(T) tabulated over β.
#[pyclass(name = "SigmaTable", frozen)]
struct PySigmaTable(pem::SigmaTable);

#[pymethods]
impl PySigmaTable {
    #[staticmethod]
    #[pyo3(signature = (betas, horizon = 100, width = 20, height = 20, replicates = 1000, seed = 0))]
    fn build(
        py: Python<'_>,
        betas: Vec<f64>,
        horizon: usize,
        width: usize,
        height: usize,
        replicates: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let shape = shape(width, height)?;
        py.detach(|| pem::build_sigma_table(&betas, horizon, shape, replicates, seed))
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| py_err(Error::io_at(&path, e)))?;
        pem::SigmaTable::read_csv(BufReader::new(f)).map(Self).map_err(py_err)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| py_err(Error::io_at(&path, e)))?;
        self.0.write_csv(f).map_err(|e| py_err(Error::io_at(&path, e)))
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.0.horizon
    }

    #[getter]
    fn betas(&self) -> Vec<f64> {
        self.0.betas()
    }

    /// `(beta, sigma00, sigma01, sigma11)` rows.
    #[getter]
    fn rows(&self) -> Vec<(f64, f64, f64, f64)> {
        self.0
            .rows()
            .iter()
            .map(|r| (r.beta, r.sigma[0], r.sigma[1], r.sigma[2]))
            .collect()
    }

    fn choose_beta(&self, p: (f64, f64, f64)) -> PyResult<PyBetaChoice> {
        let c = pem::choose_beta(&probs(p)?, &self.0);
        Ok(PyBetaChoice {
            beta: c.beta,
            probability: c.probability,
            residual: c.residual,
            ties: c.ties,
        })
    }
}

#[pyclass(name = "SweepRun", frozen, get_all)]
struct PySweepRun {
    beta: f64,
    replicate: usize,
    seed: u64,
    final_fitness: f64,
    generations_to_best: usize,
}

#[pyclass(name = "Comparison", frozen, get_all)]
struct PyComparison {
    beta_a: f64,
    beta_b: f64,
    mean_a: f64,
    mean_b: f64,
    p_value: f64,
    better: Option<f64>,
}

/// Independent runs for every β; with `compare=(a, b)` also returns a rank test.
#[pyfunction]
#[pyo3(signature = (problem, betas, replicates = 30, generations = 1500, width = 20, height = 20, seed = 0, compare = None))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    problem: &Bound<'_, PyAny>,
    betas: Vec<f64>,
    replicates: usize,
    generations: usize,
    width: usize,
    height: usize,
    seed: u64,
    compare: Option<(f64, f64)>,
) -> PyResult<(Vec<PySweepRun>, Option<PyComparison>)> {
    let problem = problem_of(problem)?;
    let spec = SweepSpec {
        shape: shape(width, height)?,
        betas,
        replicates,
        max_generations: generations,
        seed,
    };
    let result = py.detach(|| problem.sweep(&spec, &[], |_| {})).map_err(py_err)?;
    let cmp = compare
        .map(|(a, b)| compare_settings(&result, a, b))
        .transpose()
        .map_err(py_err)?
        .map(|c| PyComparison {
            beta_a: c.beta_a,
            beta_b: c.beta_b,
            mean_a: c.mean_a,
            mean_b: c.mean_b,
            p_value: c.p_value,
            better: c.better,
        });
    let runs = result
        .runs
        .iter()
        .map(|r| PySweepRun {
            beta: r.beta,
            replicate: r.replicate,
            seed: r.seed,
            final_fitness: r.final_fitness,
            generations_to_best: r.generations_to_best,
        })
        .collect();
    Ok((runs, cmp))
}

#[pyclass(name = "PemWindow", frozen, get_all)]
struct PyPemWindow {
    window_start: usize,
    p00: f64,
    p01: f64,
    p11: f64,
    trials: (u64, u64, u64),
    successes: (u64, u64, u64),
    beta_star: f64,
    residual: f64,
    low_confidence: bool,
}

/// Estimates P_ij per window from instrumented runs and picks β* per window.
#[pyfunction]
#[pyo3(signature = (problem, table, run_beta = 0.2, runs = 100, generations = 1500, width = 20, height = 20, window = 50, seed = 0, aggregation = "pooled"))]
#[allow(clippy::too_many_arguments)]
fn pem_analysis(
    py: Python<'_>,
    problem: &Bound<'_, PyAny>,
    table: &PySigmaTable,
    run_beta: f64,
    runs: usize,
    generations: usize,
    width: usize,
    height: usize,
    window: usize,
    seed: u64,
    aggregation: &str,
) -> PyResult<Vec<PyPemWindow>> {
    let aggregation = match aggregation {
        "pooled" => Aggregation::Pooled,
        "run-mean" => Aggregation::RunMean,
        other => return Err(PyValueError::new_err(format!("unknown aggregation {other:?}"))),
    };
    let problem = problem_of(problem)?;
    let spec = PemRunSpec {
        shape: shape(width, height)?,
        beta: run_beta,
        runs,
        max_generations: generations,
        seed,
    };
    let series = py
        .detach(|| {
            let traces = problem.pem_traces(&spec)?;
            pem::estimate_pij(&traces, window, BetaPrior::default(), aggregation)
        })
        .map_err(py_err)?;
    let stars = pem::optimal_beta(&series, &table.0);
    Ok(series
        .iter()
        .zip(stars)
        .map(|(w, s)| PyPemWindow {
            window_start: w.window_start,
            p00: w.probs.p00,
            p01: w.probs.p01,
            p11: w.probs.p11,
            trials: (w.trials[0], w.trials[1], w.trials[2]),
            successes: (w.successes[0], w.successes[1], w.successes[2]),
            beta_star: s.beta_star,
            residual: s.eq1_residual,
            low_confidence: s.low_confidence,
        })
        .collect())
}

#[pymodule]
fn centric_cea(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyQap>()?;
    m.add_class::<PyNk>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyTakeoverSummary>()?;
    m.add_class::<PySigmaTable>()?;
    m.add_class::<PyBetaChoice>()?;
    m.add_class::<PySweepRun>()?;
    m.add_class::<PyComparison>()?;
    m.add_class::<PyPemWindow>()?;
    m.add_function(wrap_pyfunction!(centric_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(takeover, m)?)?;
    m.add_function(wrap_pyfunction!(p_of_t, m)?)?;
    m.add_function(wrap_pyfunction!(big_p, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(pem_analysis, m)?)?;
    Ok(())
}
