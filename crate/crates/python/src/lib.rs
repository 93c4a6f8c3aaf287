//! Python bindings: `import spikecap`.
//!
//! Inputs are plain lists of floats; bidders are given as a list of values
//! (ids `0..n`) with optional per-bidder relevances for sponsored search.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use spikecap::{capacity, optimizer, sim, spike_vcg, ssa};
use spikecap::spike_vcg::PaymentScheme;
use spikecap::{BidderProfile, CapacityParams, CoefficientVector, GapVector, SpikeVector};

create_exception!(spikecap, SpikecapError, PyValueError, "Invalid input or solver regime.");

fn err(e: spikecap::Error) -> PyErr {
    SpikecapError::new_err(e.to_string())
}

fn bidders(values: Vec<f64>, relevances: Option<Vec<f64>>) -> PyResult<Vec<BidderProfile>> {
    match relevances {
        None => spikecap::bidders_from_values(&values).map_err(err),
        Some(r) if r.len() != values.len() => Err(SpikecapError::new_err(format!(
            "{} values but {} relevances",
            values.len(),
            r.len()
        ))),
        Some(r) => values
            .iter()
            .zip(&r)
            .enumerate()
            .map(|(i, (&v, &e))| BidderProfile::with_relevance(i as u64, v, e).map_err(err))
            .collect(),
    }
}

fn spikes(p: Vec<f64>) -> PyResult<SpikeVector> {
    SpikeVector::new(p).map_err(err)
}

fn coeffs(d: Vec<f64>) -> PyResult<CoefficientVector> {
    CoefficientVector::new(d).map_err(err)
}

fn eps(e: Vec<f64>) -> PyResult<CapacityParams> {
    CapacityParams::new(e).map_err(err)
}

fn scheme(name: &str) -> PyResult<PaymentScheme> {
    match name {
        "betting" => Ok(PaymentScheme::Betting),
        "ppa" => Ok(PaymentScheme::PayPerAcquisition),
        other => Err(SpikecapError::new_err(format!("unknown payment scheme {other:?}; use \"betting\" or \"ppa\""))),
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct VcgOutcome {
    ranking: Vec<usize>,
    ranked_values: Vec<f64>,
    expected_payments: Vec<f64>,
    revenue: f64,
    efficiency: f64,
    revenue_coefficients: Vec<f64>,
    efficiency_coefficients: Vec<f64>,
    spikes: Vec<f64>,
}

#[pymethods]
impl VcgOutcome {
    /// Per-rank charge: the expected payment under betting, `h_j/p_j` on
    /// acquisition under pay-per-acquisition.
    #[pyo3(signature = (scheme = "betting"))]
    fn charges(&self, scheme: &str) -> PyResult<Vec<f64>> {
        let s = spikes(self.spikes.clone())?;
        Ok(self.outcome().charges(&s, self::scheme(scheme)?))
    }

    fn __repr__(&self) -> String {
        format!("VcgOutcome(revenue={}, efficiency={})", self.revenue, self.efficiency)
    }
}

impl VcgOutcome {
    fn outcome(&self) -> spike_vcg::MechanismOutcome {
        spike_vcg::MechanismOutcome {
            ranking: self.ranking.clone(),
            ranked_values: self.ranked_values.clone(),
            expected_payments: self.expected_payments.clone(),
            revenue: self.revenue,
            efficiency: self.efficiency,
        }
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct LpSolution {
    gaps: Vec<f64>,
    spikes: Vec<f64>,
    objective_value: f64,
    dual: Vec<f64>,
    dual_objective: f64,
    kkt_certified: bool,
}

#[pymethods]
impl LpSolution {
    fn __repr__(&self) -> String {
        format!("LpSolution(objective_value={}, spikes={:?})", self.objective_value, self.spikes)
    }
}

impl LpSolution {
    fn from_core(s: optimizer::LpSolution, eps: &CapacityParams) -> Self {
        LpSolution {
            spikes: s.spikes().probs().to_vec(),
            dual_objective: s.dual_objective(eps),
            gaps: s.gaps.gaps().to_vec(),
            objective_value: s.objective_value,
            dual: s.dual,
            kkt_certified: s.kkt_certified,
        }
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct CapacityReport {
    kappa: usize,
    a_index: Option<usize>,
    nu: f64,
    nu_upper_bound: f64,
    nu_uniform: Option<f64>,
}

#[pymethods]
impl CapacityReport {
    fn __repr__(&self) -> String {
        format!("CapacityReport(kappa={}, a_index={:?}, nu={})", self.kappa, self.a_index, self.nu)
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct SsaOutcome {
    ranking: Vec<usize>,
    ranked_scores: Vec<f64>,
    sne_revenue: f64,
    per_slot_prices: Vec<f64>,
    effective_ctrs: Vec<f64>,
}

#[pymethods]
impl SsaOutcome {
    fn __repr__(&self) -> String {
        format!("SsaOutcome(sne_revenue={})", self.sne_revenue)
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct SimulationResult {
    trials: u64,
    seed: u64,
    scheme: String,
    empirical_payment_means: Vec<f64>,
    empirical_payment_variances: Vec<f64>,
    empirical_revenue_mean: f64,
    betting_revenue_per_trial: Option<f64>,
    win_counts: Vec<u64>,
    win_frequencies: Vec<f64>,
}

#[pymethods]
impl SimulationResult {
    fn __repr__(&self) -> String {
        format!(
            "SimulationResult(trials={}, scheme={:?}, empirical_revenue_mean={})",
            self.trials, self.scheme, self.empirical_revenue_mean
        )
    }
}

#[pyclass(frozen, get_all, module = "spikecap", skip_from_py_object)]
#[derive(Clone)]
struct SchemeComparison {
    trials: u64,
    seed: u64,
    expected_payments: Vec<f64>,
    betting_means: Vec<f64>,
    ppa_means: Vec<f64>,
    differences: Vec<f64>,
    standard_errors: Vec<f64>,
    within_bounds: Vec<bool>,
    passed: Option<bool>,
    low_power: bool,
}

#[pymethods]
impl SchemeComparison {
    fn __repr__(&self) -> String {
        format!("SchemeComparison(trials={}, passed={:?})", self.trials, self.passed)
    }
}

#[pyfunction]
fn spikes_to_gaps(spikes: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(self::spikes(spikes)?.to_gaps().gaps().to_vec())
}

#[pyfunction]
fn gaps_to_spikes(gaps: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(GapVector::new(gaps).map_err(err)?.to_spikes().probs().to_vec())
}

#[pyfunction]
fn evaluate_objective(gaps: Vec<f64>, coeffs: Vec<f64>) -> PyResult<f64> {
    let g = GapVector::new(gaps).map_err(err)?;
    spikecap::evaluate_objective(&g, &self::coeffs(coeffs)?).map_err(err)
}

#[pyfunction]
fn run_vcg(values: Vec<f64>, spikes: Vec<f64>) -> PyResult<VcgOutcome> {
    let b = bidders(values, None)?;
    let s = self::spikes(spikes)?;
    let out = spike_vcg::run_vcg(&b, &s).map_err(err)?;
    let rev = spike_vcg::revenue_decomposition(&out, &s).map_err(err)?;
    let eff = spike_vcg::efficiency_decomposition(&out, &s).map_err(err)?;
    Ok(VcgOutcome {
        revenue_coefficients: rev.coeffs.coeffs().to_vec(),
        efficiency_coefficients: eff.coeffs.coeffs().to_vec(),
        spikes: s.probs().to_vec(),
        ranking: out.ranking,
        ranked_values: out.ranked_values,
        expected_payments: out.expected_payments,
        revenue: out.revenue,
        efficiency: out.efficiency,
    })
}

#[pyfunction]
fn revenue_coefficients(values: Vec<f64>, m: usize) -> PyResult<Vec<f64>> {
    let c = spike_vcg::revenue_coefficients(&bidders(values, None)?, m).map_err(err)?;
    Ok(c.coeffs().to_vec())
}

#[pyfunction]
fn efficiency_coefficients(values: Vec<f64>, m: usize) -> PyResult<Vec<f64>> {
    let c = spike_vcg::efficiency_coefficients(&bidders(values, None)?, m).map_err(err)?;
    Ok(c.coeffs().to_vec())
}

/// Whether `(ranking, payments)` is a Walrasian equilibrium; `ranking[j]`
/// is the bidder index placed at rank `j + 1`.
#[pyfunction]
fn check_walrasian(values: Vec<f64>, spikes: Vec<f64>, ranking: Vec<usize>, payments: Vec<f64>) -> PyResult<bool> {
    spike_vcg::check_walrasian(&bidders(values, None)?, &self::spikes(spikes)?, &ranking, &payments).map_err(err)
}

/// Optimal gaps for `max Σ θ_j·j·d_j` s.t. `Σ jθ_j = 1`, `θ ≥ ε`.
/// `solver` is `None` (closed form when it applies), `"closed-form"` or
/// `"simplex"`.
#[pyfunction]
#[pyo3(signature = (coeffs, epsilons, solver = None))]
fn solve(coeffs: Vec<f64>, epsilons: Vec<f64>, solver: Option<&str>) -> PyResult<LpSolution> {
    let d = self::coeffs(coeffs)?;
    let e = eps(epsilons)?;
    let sol = match solver {
        None => optimizer::solve(&d, &e),
        Some("closed-form") => optimizer::solve_closed_form(&d, &e),
        Some("simplex") => optimizer::solve_simplex(&d, &e),
        Some(other) => return Err(SpikecapError::new_err(format!("unknown solver {other:?}"))),
    }
    .map_err(err)?;
    Ok(LpSolution::from_core(sol, &e))
}

#[pyfunction]
fn check_kkt(coeffs: Vec<f64>, epsilons: Vec<f64>, gaps: Vec<f64>, dual: Vec<f64>) -> PyResult<bool> {
    let report = optimizer::kkt_report(
        &self::coeffs(coeffs)?,
        &eps(epsilons)?,
        &GapVector::new_unchecked(gaps),
        &dual,
    )
    .map_err(err)?;
    Ok(report.all())
}

#[pyfunction]
fn compute_kappa(epsilons: Vec<f64>) -> PyResult<usize> {
    Ok(capacity::compute_kappa(&eps(epsilons)?))
}

#[pyfunction]
fn threshold_index(coeffs: Vec<f64>) -> PyResult<Option<usize>> {
    Ok(capacity::threshold_index(&self::coeffs(coeffs)?))
}

#[pyfunction]
fn increase_capacity(epsilons: Vec<f64>, coeffs: Vec<f64>) -> PyResult<Vec<f64>> {
    let next = capacity::increase_capacity(&eps(epsilons)?, &self::coeffs(coeffs)?).map_err(err)?;
    Ok(next.epsilons().to_vec())
}

#[pyfunction]
fn price_of_capacity(coeffs: Vec<f64>) -> PyResult<CapacityReport> {
    let r = capacity::price_of_capacity(&self::coeffs(coeffs)?).map_err(err)?;
    Ok(CapacityReport {
        kappa: r.kappa,
        a_index: r.a_index,
        nu: r.nu,
        nu_upper_bound: r.nu_upper_bound,
        nu_uniform: r.nu_uniform,
    })
}

#[pyfunction]
fn price_of_capacity_uniform(coeffs: Vec<f64>) -> PyResult<f64> {
    capacity::price_of_capacity_uniform(&self::coeffs(coeffs)?).map_err(err)
}

fn keyword_config(position_ctrs: Vec<f64>, spike_count: usize) -> PyResult<ssa::KeywordAuctionConfig> {
    ssa::KeywordAuctionConfig::new(position_ctrs.len(), position_ctrs, spike_count).map_err(err)
}

/// Sponsored-search auction whose last slot is allocated by `spikes`.
#[pyfunction]
#[pyo3(signature = (values, position_ctrs, spikes, relevances = None))]
fn combined_auction(
    values: Vec<f64>,
    position_ctrs: Vec<f64>,
    spikes: Vec<f64>,
    relevances: Option<Vec<f64>>,
) -> PyResult<SsaOutcome> {
    let b = bidders(values, relevances)?;
    let s = self::spikes(spikes)?;
    let config = keyword_config(position_ctrs, s.len())?;
    let out = ssa::combined_auction(&b, &config, &s).map_err(err)?;
    Ok(SsaOutcome {
        ranking: out.ranking,
        ranked_scores: out.ranked_scores,
        sne_revenue: out.sne_revenue,
        per_slot_prices: out.per_slot_prices,
        effective_ctrs: out.effective_ctrs,
    })
}

#[pyfunction]
#[pyo3(signature = (values, position_ctrs, spike_count, relevances = None))]
fn ssa_objective_coefficients(
    values: Vec<f64>,
    position_ctrs: Vec<f64>,
    spike_count: usize,
    relevances: Option<Vec<f64>>,
) -> PyResult<Vec<f64>> {
    let config = keyword_config(position_ctrs, spike_count)?;
    let c = ssa::ssa_objective_coefficients(&bidders(values, relevances)?, &config).map_err(err)?;
    Ok(c.coeffs().to_vec())
}

#[pyfunction]
#[pyo3(signature = (values, position_ctrs, epsilons, relevances = None))]
fn optimize_ssa_spikes(
    values: Vec<f64>,
    position_ctrs: Vec<f64>,
    epsilons: Vec<f64>,
    relevances: Option<Vec<f64>>,
) -> PyResult<LpSolution> {
    let e = eps(epsilons)?;
    let config = keyword_config(position_ctrs, e.len())?;
    let sol = ssa::optimize_ssa_spikes(&bidders(values, relevances)?, &config, &e).map_err(err)?;
    Ok(LpSolution::from_core(sol, &e))
}

#[pyfunction]
#[pyo3(signature = (values, spikes, scheme = "ppa", trials = 1_000_000, seed = 0))]
fn simulate(py: Python<'_>, values: Vec<f64>, spikes: Vec<f64>, scheme: &str, trials: u64, seed: u64) -> PyResult<SimulationResult> {
    let b = bidders(values, None)?;
    let s = self::spikes(spikes)?;
    let scheme = self::scheme(scheme)?;
    let r = py.detach(|| sim::simulate(&b, &s, scheme, trials, seed)).map_err(err)?;
    Ok(SimulationResult {
        win_frequencies: r.win_frequencies(),
        trials: r.trials,
        seed: r.seed,
        scheme: r.scheme.as_str().to_string(),
        empirical_payment_means: r.empirical_payment_means,
        empirical_payment_variances: r.empirical_payment_variances,
        empirical_revenue_mean: r.empirical_revenue_mean,
        betting_revenue_per_trial: r.betting_revenue_per_trial,
        win_counts: r.win_counts,
    })
}

#[pyfunction]
#[pyo3(signature = (values, spikes, trials = 1_000_000, seed = 0))]
fn compare_schemes(py: Python<'_>, values: Vec<f64>, spikes: Vec<f64>, trials: u64, seed: u64) -> PyResult<SchemeComparison> {
    let b = bidders(values, None)?;
    let s = self::spikes(spikes)?;
    let c = py.detach(|| sim::compare_schemes(&b, &s, trials, seed)).map_err(err)?;
    Ok(SchemeComparison {
        trials: c.trials,
        seed: c.seed,
        expected_payments: c.expected_payments,
        betting_means: c.betting_means,
        ppa_means: c.ppa_means,
        differences: c.differences,
        standard_errors: c.standard_errors,
        within_bounds: c.within_bounds,
        passed: c.passed,
        low_power: c.low_power,
    })
}

#[pymodule]
#[pyo3(name = "spikecap")]
pub fn spikecap_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SpikecapError", m.py().get_type::<SpikecapError>())?;
    m.add_class::<VcgOutcome>()?;
    m.add_class::<LpSolution>()?;
    m.add_class::<CapacityReport>()?;
    m.add_class::<SsaOutcome>()?;
    m.add_class::<SimulationResult>()?;
    m.add_class::<SchemeComparison>()?;
    m.add_function(wrap_pyfunction!(spikes_to_gaps, m)?)?;
    m.add_function(wrap_pyfunction!(gaps_to_spikes, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_objective, m)?)?;
    m.add_function(wrap_pyfunction!(run_vcg, m)?)?;
    m.add_function(wrap_pyfunction!(revenue_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(efficiency_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(check_walrasian, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check_kkt, m)?)?;
    m.add_function(wrap_pyfunction!(compute_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_index, m)?)?;
    m.add_function(wrap_pyfunction!(increase_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(price_of_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(price_of_capacity_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(combined_auction, m)?)?;
    m.add_function(wrap_pyfunction!(ssa_objective_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_ssa_spikes, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare_schemes, m)?)?;
    Ok(())
}
