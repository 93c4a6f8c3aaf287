//! Capacity and the price of capacity.
//!
//! The capacity of a set of gap bounds is the largest index `j` with
//! `ε_j > 0`: that many top-ranked bidders are guaranteed a positive chance
//! to win. For a gap-wise monotone objective let `a` be the first index with
//! `d_a < d_1`. Capacity up to `a − 1` is free, raising it to `a` costs
//! optimal value, and from `a` on it can be raised again without loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Invariant, Result};
use crate::optimizer;
use crate::types::{CapacityParams, CoefficientVector, FEASIBILITY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// Largest capacity reachable without losing optimal value below the
    /// threshold: `a − 1`, or `M` when there is no threshold.
    pub kappa: usize,
    /// First index `a` with `d_1 > d_a`.
    pub a_index: Option<usize>,
    /// Supremum of `H^OPT / H^OPT(ε)` over bounds with capacity `a`; 1 when
    /// there is no threshold, infinite when `d_a = 0`. The supremum is only
    /// approached as `ε_a → 1/a`, never attained.
    pub nu: f64,
    /// `d_{a−1} / d_a`.
    pub nu_upper_bound: f64,
    /// Exact price of capacity when all positive bounds share one value.
    pub nu_uniform: Option<f64>,
}

pub fn compute_kappa(eps: &CapacityParams) -> usize {
    eps.epsilons()
        .iter()
        .rposition(|&e| e > 0.0)
        .map_or(0, |j| j + 1)
}

/// `a = min{ j : d_1 > d_j }` (1-based), compared exactly.
pub fn threshold_index(coeffs: &CoefficientVector) -> Option<usize> {
    let d = coeffs.coeffs();
    d.iter().position(|&dj| d[0] > dj).map(|j| j + 1)
}

fn require_monotone(coeffs: &CoefficientVector) -> Result<()> {
    match coeffs.monotonicity_violation() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn require_nonnegative(coeffs: &CoefficientVector) -> Result<()> {
    match coeffs.coeffs().iter().position(|&d| d < 0.0) {
        Some(j) => Err(Error::Validation {
            what: "coefficients",
            invariant: Invariant::NonNegative,
            detail: format!("d_{} = {}", j + 1, coeffs.coeffs()[j]),
        }),
        None => Ok(()),
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

/// Returns bounds with capacity one higher and no smaller optimal value.
///
/// Keeps `ε_j` for `j < κ`, halves `ε_κ`, and sets `ε_{κ+1}` to half the
/// smaller of the value-preserving limit
/// `κ·(ε_κ − ε̃_κ)·(d_1 − d_κ) / ((κ+1)·(d_1 − d_{κ+1}))`
/// and the feasibility limit `κ·(ε_κ − ε̃_κ) / (κ+1)`.
pub fn increase_capacity(eps: &CapacityParams, coeffs: &CoefficientVector) -> Result<CapacityParams> {
    check_dims(coeffs, eps)?;
    require_monotone(coeffs)?;
    let m = eps.len();
    let kappa = compute_kappa(eps);
    if kappa == m {
        return Err(Error::CapacityExhausted(m));
    }
    if let Some(a) = threshold_index(coeffs) {
        if kappa < a {
            return Err(Error::Regime { kappa, a });
        }
    }

    let d = coeffs.coeffs();
    let mut next = eps.epsilons().to_vec();
    if kappa == 0 {
        // only reachable without a threshold; ε_1 never enters the optimal value
        next[0] = 0.5;
    } else {
        let k = kappa - 1;
        let released = next[k] / 2.0;
        next[k] -= released;
        let kf = kappa as f64;
        let freed_mass = kf * released;
        let feasibility_limit = freed_mass / (kf + 1.0);
        let denom = (kf + 1.0) * (d[0] - d[k + 1]);
        let value_limit = if denom > 0.0 {
            freed_mass * (d[0] - d[k]) / denom
        } else {
            f64::INFINITY
        };
        next[k + 1] = value_limit.min(feasibility_limit) / 2.0;
    }
    let next = CapacityParams::new(next)?;

    let before = optimizer::solve(coeffs, eps)?.objective_value;
    let after = optimizer::solve(coeffs, &next)?.objective_value;
    if after < before - FEASIBILITY_TOL * before.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "capacity increase lost value: {after} < {before}"
        )));
    }
    Ok(next)
}

/// Largest `ε̃` such that moving from `ε` on ranks `1..=count` to `ε̃` on
/// ranks `1..=count+1` keeps the optimal value:
/// `min{ 2/((m+1)(m+2)), ε·Σ_{j=2}^{m} j(d_1−d_j) / Σ_{j=2}^{m+1} j(d_1−d_j) }`.
pub fn uniform_increase_bound(coeffs: &CoefficientVector, count: usize, eps: f64) -> Result<f64> {
    require_monotone(coeffs)?;
    let m = coeffs.len();
    if count == 0 || count >= m {
        return Err(if count >= m {
            Error::CapacityExhausted(m)
        } else {
            Error::Input("uniform capacity needs at least one bounded rank".into())
        });
    }
    // validates feasibility of the starting point
    CapacityParams::uniform(m, count, eps)?;
    let d = coeffs.coeffs();
    let loss = |upto: usize| -> f64 {
        (2..=upto).map(|j| j as f64 * (d[0] - d[j - 1])).sum()
    };
    let (num, den) = (loss(count), loss(count + 1));
    let mf = count as f64;
    let feasibility = 2.0 / ((mf + 1.0) * (mf + 2.0));
    if den == 0.0 {
        return Ok(feasibility);
    }
    if num == 0.0 {
        return Err(Error::Regime {
            kappa: count,
            a: count + 1,
        });
    }
    Ok(feasibility.min(num / den * eps))
}

/// Uniform bounds on ranks `1..=count+1` at [`uniform_increase_bound`].
pub fn increase_capacity_uniform(
    coeffs: &CoefficientVector,
    count: usize,
    eps: f64,
) -> Result<CapacityParams> {
    let bound = uniform_increase_bound(coeffs, count, eps)?;
    CapacityParams::uniform(coeffs.len(), count + 1, bound)
}

pub fn price_of_capacity(coeffs: &CoefficientVector) -> Result<CapacityReport> {
    require_monotone(coeffs)?;
    require_nonnegative(coeffs)?;
    let d = coeffs.coeffs();
    let Some(a) = threshold_index(coeffs) else {
        return Ok(CapacityReport {
            kappa: d.len(),
            a_index: None,
            nu: 1.0,
            nu_upper_bound: 1.0,
            nu_uniform: None,
        });
    };
    let da = d[a - 1];
    let (nu, nu_upper_bound) = if da > 0.0 {
        (d[0] / da, d[a - 2] / da)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(CapacityReport {
        kappa: a - 1,
        a_index: Some(a),
        nu,
        nu_upper_bound,
        nu_uniform: Some(uniform_ratio(d, a)),
    })
}

fn uniform_ratio(d: &[f64], a: usize) -> f64 {
    let af = a as f64;
    (af + 1.0) / ((af - 1.0) + 2.0 * (d[a - 1] / d[0]))
}

/// `(a+1) / ((a−1) + 2·d_a/d_1)`, the price of capacity when every positive
/// bound takes the same value. Never exceeds `1 + 2/(a−1) ≤ 3`.
pub fn price_of_capacity_uniform(coeffs: &CoefficientVector) -> Result<f64> {
    require_monotone(coeffs)?;
    require_nonnegative(coeffs)?;
    let a = threshold_index(coeffs).ok_or(Error::NoThreshold)?;
    Ok(uniform_ratio(coeffs.coeffs(), a))
}
