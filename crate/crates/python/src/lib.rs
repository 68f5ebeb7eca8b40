//! Python bindings. Results come back as plain dicts and lists.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use jdcalc_core::experiment::{self, ExperimentConfig, Suite};
use jdcalc_core::fields::{catalog, catalog_lookup};
use jdcalc_core::invariantkernel::{self, DensityGrid, TestFunction};
use jdcalc_core::itowentzell::{self, Slope};
use jdcalc_core::mollifier::{self, Mollifier, MollifierSpec};
use jdcalc_core::noise::{NoisePath, TimeGrid};
use jdcalc_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) => PyOSError::new_err(e.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Names of the shipped presets.
#[pyfunction]
fn presets() -> Vec<&'static str> {
    catalog().iter().map(|p| p.name).collect()
}

/// `(name, description)` of every suite.
#[pyfunction]
fn suites() -> Vec<(&'static str, &'static str)> {
    Suite::ALL.iter().map(|s| (s.name(), s.description())).collect()
}

/// Pathwise identity check on one seed.
#[pyfunction]
#[pyo3(signature = (preset, n_steps = 256, seed = 0, t_end = None))]
fn verify_identity<'py>(
    py: Python<'py>,
    preset: &str,
    n_steps: usize,
    seed: u64,
    t_end: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = catalog_lookup(preset).map_err(to_py)?;
    let grid = TimeGrid::new(t_end.unwrap_or(p.t_end), n_steps).map_err(to_py)?;
    let r = itowentzell::verify_identity(&p, grid, seed).map_err(to_py)?;
    let t = r.totals;
    let d = PyDict::new(py);
    d.set_item("seed", r.seed)?;
    d.set_item("n_steps", r.n_steps)?;
    d.set_item("residual", r.residual)?;
    d.set_item("direct_increment", r.direct_increment)?;
    d.set_item("rhs_total", r.rhs_total)?;
    d.set_item("jump_count", r.jump_count)?;
    d.set_item("terminal_state", r.terminal_state)?;
    d.set_item("left_domain", r.left_domain)?;
    let terms = PyDict::new(py);
    for (k, v) in [
        ("field_dt", t.field_dt),
        ("field_dw", t.field_dw),
        ("convect_dw", t.convect_dw),
        ("drift_dt", t.drift_dt),
        ("secondorder_dt", t.secondorder_dt),
        ("cross_dt", t.cross_dt),
        ("state_jump", t.state_jump),
        ("field_jump", t.field_jump),
    ] {
        terms.set_item(k, v)?;
    }
    d.set_item("terms", terms)?;
    Ok(d)
}

/// Mean residual per resolution and the fitted order (`None` when exact).
#[pyfunction]
#[pyo3(signature = (preset, n_list, seeds = 16, t_end = None))]
fn convergence_study<'py>(
    py: Python<'py>,
    preset: &str,
    n_list: Vec<usize>,
    seeds: u64,
    t_end: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = catalog_lookup(preset).map_err(to_py)?;
    let seed_list: Vec<u64> = (0..seeds).collect();
    let s = itowentzell::convergence_study(&p, t_end.unwrap_or(p.t_end), &n_list, &seed_list)
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_steps", s.rows.iter().map(|r| r.n_steps).collect::<Vec<_>>())?;
    d.set_item("mean_residual", s.rows.iter().map(|r| r.mean_residual).collect::<Vec<_>>())?;
    d.set_item("std_error", s.rows.iter().map(|r| r.std_error).collect::<Vec<_>>())?;
    let slope = match s.slope {
        Slope::Exact => None,
        Slope::Fitted(v) => Some(v),
    };
    d.set_item("slope", slope)?;
    Ok(d)
}

/// Solves the kernel equation on one noise path.
#[pyfunction]
#[pyo3(signature = (preset, n_cells = 1024, seed = 0))]
fn solve_kernel<'py>(
    py: Python<'py>,
    preset: &str,
    n_cells: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = catalog_lookup(preset).map_err(to_py)?;
    let g = DensityGrid::for_preset(&p, n_cells).map_err(to_py)?;
    let n = invariantkernel::stable_step_count(&g, p.state.as_ref(), p.t_end);
    let grid = TimeGrid::new(p.t_end, n).map_err(to_py)?;
    let noise = NoisePath::sample(grid, p.dim_w(), &p.measure, seed).map_err(to_py)?;
    let s = invariantkernel::solve_kernel(&p, g, &noise, &[]).map_err(to_py)?;
    let x: Vec<f64> = (0..s.density.n_cells()).map(|i| s.density.center(i)).collect();
    let d = PyDict::new(py);
    d.set_item("x", x)?;
    d.set_item("rho", s.density.values().to_vec())?;
    d.set_item("n_steps", n)?;
    d.set_item("masses", s.masses)?;
    d.set_item("max_mass_error", s.max_mass_error)?;
    d.set_item("max_step_drift", s.max_step_drift)?;
    d.set_item("max_jump_defect", s.max_jump_defect)?;
    d.set_item("max_roundtrip", s.max_roundtrip)?;
    d.set_item("max_boundary_ratio", s.max_boundary_ratio)?;
    d.set_item("jumps", s.jumps)?;
    Ok(d)
}

/// Grid and particle sides of the duality identity on one noise path.
#[pyfunction]
#[pyo3(signature = (preset, n_cells = 1024, particles = 10000, test_function = "bump", seed = 0))]
fn verify_duality<'py>(
    py: Python<'py>,
    preset: &str,
    n_cells: usize,
    particles: usize,
    test_function: &str,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = catalog_lookup(preset).map_err(to_py)?;
    let test = TestFunction::parse(test_function).map_err(to_py)?;
    let g = DensityGrid::for_preset(&p, n_cells).map_err(to_py)?;
    let n = invariantkernel::stable_step_count(&g, p.state.as_ref(), p.t_end);
    let grid = TimeGrid::new(p.t_end, n).map_err(to_py)?;
    let noise = NoisePath::sample(grid, p.dim_w(), &p.measure, seed).map_err(to_py)?;
    let r = invariantkernel::verify_duality(&p, n_cells, particles, test, &noise).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n_steps", r.n_steps)?;
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("abs_gap", r.abs_gap)?;
    d.set_item("relative_gap", r.relative_gap)?;
    d.set_item("mc_std_error", r.mc_std_error)?;
    d.set_item("max_mass_error", r.max_mass_error)?;
    Ok(d)
}

/// Sup error of the Gaussian mollification of a shipped test function.
#[pyfunction]
#[pyo3(signature = (function, epsilon, nodes = mollifier::DEFAULT_NODES))]
fn certify_bound<'py>(
    py: Python<'py>,
    function: &str,
    epsilon: f64,
    nodes: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let t = mollifier::test_function(function).map_err(to_py)?;
    let m = Mollifier::new(MollifierSpec::new(epsilon, nodes).map_err(to_py)?).map_err(to_py)?;
    let r = mollifier::certify_bound(&t.f, t.lipschitz, t.holder, &m, &mollifier::default_grid())
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("sup_error", r.sup_error)?;
    d.set_item("argmax", r.argmax)?;
    d.set_item("bound", r.bound)?;
    d.set_item("status", r.status.as_str())?;
    Ok(d)
}

/// Runs a config file and writes its CSVs; returns verdict and checks.
#[pyfunction]
fn run_config<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyDict>> {
    let config = ExperimentConfig::from_path(std::path::Path::new(path)).map_err(to_py)?;
    let report = experiment::run(&config).map_err(to_py)?;
    let checks: Vec<(String, f64, &str, f64, bool)> = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.value, c.relation, c.threshold, c.pass))
        .collect();
    let d = PyDict::new(py);
    d.set_item("suite", report.suite.name())?;
    d.set_item("preset", &report.preset)?;
    d.set_item("verdict", report.verdict())?;
    d.set_item("checks", checks)?;
    d.set_item("aggregates", report.aggregates.clone())?;
    d.set_item("rows", report.rows.len())?;
    d.set_item("output_dir", config.output_dir.to_string_lossy().into_owned())?;
    Ok(d)
}

/// Verification engine for the Itô–Wentzell formula with jumps.
#[pymodule]
mod jdcalc {
    #[pymodule_export]
    use super::{
        certify_bound, convergence_study, presets, run_config, solve_kernel, suites,
        verify_duality, verify_identity,
    };
}
