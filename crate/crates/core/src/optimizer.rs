//! Optimal spike gaps under capacity constraints.
//!
//! Solves
//!
//! ```text
//! max  Σ θ_j·j·d_j   s.t.  Σ j·θ_j = 1,  θ_j ≥ ε_j
//! ```
//!
//! with dual `min x_0 − Σ ε_j·x_j` s.t. `j·x_0 − x_j = j·d_j`, `x_j ≥ 0`.
//! For gap-wise monotone `d` the optimum is known in closed form: every gap
//! sits at its lower bound except `θ_1`, which absorbs the remaining mass.
//! [`solve_simplex`] handles arbitrary coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    evaluate_objective, CapacityParams, CoefficientVector, GapVector, SpikeVector, FEASIBILITY_TOL,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub gaps: GapVector,
    pub objective_value: f64,
    /// `(x_0, x_1, …, x_M)`.
    pub dual: Vec<f64>,
    pub kkt_certified: bool,
}

impl LpSolution {
    pub fn spikes(&self) -> SpikeVector {
        self.gaps.to_spikes()
    }

    pub fn dual_objective(&self, eps: &CapacityParams) -> f64 {
        dual_objective(eps, &self.dual)
    }
}

/// `x_0 − Σ ε_j·x_j`.
pub fn dual_objective(eps: &CapacityParams, dual: &[f64]) -> f64 {
    dual[0]
        - eps
            .epsilons()
            .iter()
            .zip(&dual[1..])
            .map(|(e, x)| e * x)
            .sum::<f64>()
}

/// Which KKT blocks hold for a primal-dual pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KktReport {
    pub primal_equality: bool,
    pub primal_bounds: bool,
    pub dual_feasibility: bool,
    pub stationarity: bool,
    pub complementary_slackness: bool,
}

impl KktReport {
    pub fn all(&self) -> bool {
        self.primal_equality
            && self.primal_bounds
            && self.dual_feasibility
            && self.stationarity
            && self.complementary_slackness
    }
}

fn check_dims(coeffs: &CoefficientVector, eps: &CapacityParams) -> Result<()> {
    if coeffs.len() != eps.len() {
        return Err(Error::Dimension {
            what: "capacity parameters",
            expected: coeffs.len(),
            found: eps.len(),
        });
    }
    Ok(())
}

pub fn kkt_report(
    coeffs: &CoefficientVector,
    eps: &CapacityParams,
    gaps: &GapVector,
    dual: &[f64],
) -> Result<KktReport> {
    check_dims(coeffs, eps)?;
    let m = coeffs.len();
    if gaps.len() != m {
        return Err(Error::Dimension {
            what: "gaps",
            expected: m,
            found: gaps.len(),
        });
    }
    if dual.len() != m + 1 {
        return Err(Error::Dimension {
            what: "dual",
            expected: m + 1,
            found: dual.len(),
        });
    }
    let (d, e, t) = (coeffs.coeffs(), eps.epsilons(), gaps.gaps());
    let x0 = dual[0];
    let x = &dual[1..];
    let scale = d
        .iter()
        .chain(dual)
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let tol = FEASIBILITY_TOL;

    let weighted: f64 = t.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    Ok(KktReport {
        primal_equality: (weighted - 1.0).abs() <= tol,
        primal_bounds: t.iter().zip(e).all(|(th, ep)| th >= &(ep - tol)),
        dual_feasibility: x.iter().all(|&xj| xj >= -tol * scale),
        stationarity: (0..m).all(|j| {
            let jf = (j + 1) as f64;
            (-jf * d[j] + jf * x0 - x[j]).abs() <= tol * scale * jf
        }),
        complementary_slackness: (0..m).all(|j| (x[j] * (e[j] - t[j])).abs() <= tol * scale),
    })
}

/// True iff primal feasibility, dual feasibility, stationarity and
/// complementary slackness all hold within `1e-9`.
pub fn check_kkt(coeffs: &CoefficientVector, eps: &CapacityParams, solution: &LpSolution) -> Result<bool> {
    Ok(kkt_report(coeffs, eps, &solution.gaps, &solution.dual)?.all())
}

/// Closed-form optimum for gap-wise monotone coefficients:
/// `θ_j = ε_j` for `j ≥ 2`, `θ_1 = 1 − Σ_{i≥2} i·ε_i`, value
/// `d_1 − Σ_{j≥2} j·ε_j·(d_1 − d_j)`, dual `x_0 = d_1`, `x_j = j·(d_1 − d_j)`.
///
/// Requires `θ_1 ≥ ε_1`. That is the same inequality as `Σ i·ε_i ≤ 1`, so
/// validated bounds always pass; the check guards against round-off.
pub fn solve_closed_form(coeffs: &CoefficientVector, eps: &CapacityParams) -> Result<LpSolution> {
    check_dims(coeffs, eps)?;
    if let Some(e) = coeffs.monotonicity_violation() {
        return Err(e);
    }
    let (d, e) = (coeffs.coeffs(), eps.epsilons());
    let tail: f64 = e.iter().enumerate().skip(1).map(|(i, v)| (i + 1) as f64 * v).sum();
    let theta1 = 1.0 - tail;
    if theta1 < e[0] - FEASIBILITY_TOL {
        return Err(Error::ClosedFormPrecondition {
            theta1,
            eps1: e[0],
        });
    }

    let mut gaps = e.to_vec();
    gaps[0] = theta1.max(0.0);
    let d1 = d[0];
    let objective_value = d1
        - e.iter()
            .zip(d)
            .enumerate()
            .skip(1)
            .map(|(i, (ej, dj))| (i + 1) as f64 * ej * (d1 - dj))
            .sum::<f64>();
    let dual: Vec<f64> = std::iter::once(d1)
        .chain(d.iter().enumerate().map(|(i, dj)| (i + 1) as f64 * (d1 - dj)))
        .collect();

    let gaps = GapVector::new_unchecked(gaps);
    let kkt_certified = kkt_report(coeffs, eps, &gaps, &dual)?.all();
    Ok(LpSolution {
        gaps,
        objective_value,
        dual,
        kkt_certified,
    })
}

/// Global optimum for arbitrary coefficients.
///
/// Shifting `φ_j = θ_j − ε_j ≥ 0` leaves `Σ j·φ_j = 1 − Σ j·ε_j` to be
/// distributed, and each unit of `j·φ_j` earns `d_j`. The optimum is the
/// vertex that puts the whole residual on the first index maximizing `d_j`.
pub fn solve_simplex(coeffs: &CoefficientVector, eps: &CapacityParams) -> Result<LpSolution> {
    check_dims(coeffs, eps)?;
    let d = coeffs.coeffs();
    let best = d
        .iter()
        .enumerate()
        .fold(0, |k, (j, dj)| if *dj > d[k] { j } else { k });
    let residual = eps.residual().max(0.0);

    let mut gaps = eps.epsilons().to_vec();
    gaps[best] += residual / (best + 1) as f64;
    let gaps = GapVector::new_unchecked(gaps);

    let x0 = d[best];
    let dual: Vec<f64> = std::iter::once(x0)
        .chain(d.iter().enumerate().map(|(i, dj)| (i + 1) as f64 * (x0 - dj)))
        .collect();
    let objective_value = evaluate_objective(&gaps, coeffs)?;
    let kkt_certified = kkt_report(coeffs, eps, &gaps, &dual)?.all();
    Ok(LpSolution {
        gaps,
        objective_value,
        dual,
        kkt_certified,
    })
}

/// Closed form when it applies, simplex otherwise.
pub fn solve(coeffs: &CoefficientVector, eps: &CapacityParams) -> Result<LpSolution> {
    match solve_closed_form(coeffs, eps) {
        Err(Error::NotMonotone { .. }) | Err(Error::ClosedFormPrecondition { .. }) => {
            solve_simplex(coeffs, eps)
        }
        other => other,
    }
}
