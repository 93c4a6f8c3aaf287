use serde::Serialize;

use super::output::{self, full, join_full, short, Format, Table};
use super::scenario::{Objective, Scenario};
use super::{CliError, Command, Common, Solver};
use crate::capacity::{self, CapacityReport};
use crate::error::Error;
use crate::optimizer::{self, KktReport, LpSolution};
use crate::sim::{self, SIGMA_LEVEL};
use crate::spike_vcg::{self, PaymentScheme};
use crate::ssa;
use crate::types::{BidderProfile, CapacityParams, CoefficientVector, FEASIBILITY_TOL};

type CmdResult = Result<String, CliError>;

pub(super) fn dispatch(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Vcg { common, payment } => vcg(common, (*payment).into()),
        Command::Optimize {
            common,
            objective,
            solver,
            poc,
        } => optimize(common, *objective, *solver, *poc),
        Command::Sweep {
            common,
            objective,
            kappa,
            points,
            eps_max,
        } => sweep(common, *objective, *kappa, *points, *eps_max),
        Command::Simulate {
            common,
            trials,
            seed,
            payment,
        } => simulate(common, *trials, *seed, (*payment).into()),
        Command::Ssa { common } => ssa_cmd(common),
    }
}

fn render<T: Serialize>(
    format: Format,
    report: &T,
    table: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
) -> String {
    match format {
        Format::Json => output::json(report),
        Format::Table => table(),
        Format::Csv => csv(),
    }
}

fn ids(bidders: &[BidderProfile], ranking: &[usize]) -> Vec<u64> {
    ranking.iter().map(|&i| bidders[i].id.0).collect()
}

fn id_at(ids: &[u64], rank: usize) -> String {
    ids.get(rank).map_or(String::new(), |id| id.to_string())
}

#[derive(Serialize)]
struct VcgReport {
    payment_scheme: PaymentScheme,
    ranking: Vec<u64>,
    ranked_values: Vec<f64>,
    spikes: Vec<f64>,
    expected_payments: Vec<f64>,
    charges: Vec<f64>,
    revenue: f64,
    efficiency: f64,
    revenue_coefficients: Vec<f64>,
    efficiency_coefficients: Vec<f64>,
    walrasian: bool,
}

fn vcg(common: &Common, scheme: PaymentScheme) -> CmdResult {
    let scenario = Scenario::load(&common.scenario)?;
    let bidders = scenario.bidder_profiles()?;
    let spikes = scenario.spike_vector()?;
    let out = spike_vcg::run_vcg(&bidders, &spikes)?;
    let rev = spike_vcg::revenue_decomposition(&out, &spikes)?;
    let eff = spike_vcg::efficiency_decomposition(&out, &spikes)?;
    let walrasian =
        spike_vcg::check_walrasian(&bidders, &spikes, &out.ranking, &out.expected_payments)?;
    let report = VcgReport {
        payment_scheme: scheme,
        ranking: ids(&bidders, &out.ranking),
        ranked_values: out.ranked_values.clone(),
        spikes: spikes.probs().to_vec(),
        expected_payments: out.expected_payments.clone(),
        charges: out.charges(&spikes, scheme),
        revenue: out.revenue,
        efficiency: out.efficiency,
        revenue_coefficients: rev.coeffs.coeffs().to_vec(),
        efficiency_coefficients: eff.coeffs.coeffs().to_vec(),
        walrasian,
    };
    let per_rank = |fmt: fn(f64) -> String| -> Vec<Vec<String>> {
        (0..report.spikes.len())
            .map(|j| {
                vec![
                    (j + 1).to_string(),
                    id_at(&report.ranking, j),
                    fmt(out.value_at_rank(j + 1)),
                    fmt(report.spikes[j]),
                    fmt(report.expected_payments[j]),
                    fmt(report.charges[j]),
                ]
            })
            .collect()
    };
    let charge_header = match scheme {
        PaymentScheme::Betting => "charge_at_commit",
        PaymentScheme::PayPerAcquisition => "charge_per_win",
    };
    Ok(render(
        common.format.unwrap_or(Format::Table),
        &report,
        || {
            let mut t = Table::new(&["rank", "bidder", "value", "spike", "expected_payment", charge_header]);
            per_rank(short).into_iter().for_each(|r| t.row(r));
            t.render()
                + "\n"
                + &output::summary(&[
                    ("scheme", scheme.as_str().to_string()),
                    ("revenue", short(report.revenue)),
                    ("efficiency", short(report.efficiency)),
                    ("walrasian", report.walrasian.to_string()),
                ])
        },
        || {
            let rows: Vec<Vec<String>> = per_rank(full)
                .into_iter()
                .map(|mut r| {
                    r.push(full(report.revenue));
                    r.push(full(report.efficiency));
                    r
                })
                .collect();
            output::csv(
                &["rank", "bidder", "value", "spike", "expected_payment", charge_header, "revenue", "efficiency"],
                &rows,
            )
        },
    ))
}

/// Objective coefficients for `m` spikes.
fn coefficients(
    scenario: &Scenario,
    bidders: &[BidderProfile],
    objective: Objective,
    m: usize,
) -> Result<CoefficientVector, CliError> {
    Ok(match objective {
        Objective::Revenue => spike_vcg::revenue_coefficients(bidders, m)?,
        Objective::Efficiency => spike_vcg::efficiency_coefficients(bidders, m)?,
        Objective::SsaRevenue => {
            let cfg = scenario.keyword_config()?;
            if cfg.spike_count != m {
                return Err(Error::Dimension {
                    what: "ssa spike_count",
                    expected: m,
                    found: cfg.spike_count,
                }
                .into());
            }
            ssa::ssa_objective_coefficients(bidders, &cfg)?
        }
    })
}

fn solve_with(
    solver: Option<Solver>,
    coeffs: &CoefficientVector,
    eps: &CapacityParams,
) -> Result<(Solver, LpSolution), CliError> {
    match solver {
        Some(Solver::ClosedForm) => optimizer::solve_closed_form(coeffs, eps)
            .map(|s| (Solver::ClosedForm, s))
            .map_err(|e| match e {
                Error::NotMonotone { .. } | Error::ClosedFormPrecondition { .. } => CliError::Solver(e),
                other => other.into(),
            }),
        Some(Solver::Simplex) => Ok((Solver::Simplex, optimizer::solve_simplex(coeffs, eps)?)),
        None if coeffs.is_gapwise_monotone() => match optimizer::solve_closed_form(coeffs, eps) {
            Ok(s) => Ok((Solver::ClosedForm, s)),
            Err(Error::ClosedFormPrecondition { .. }) => {
                Ok((Solver::Simplex, optimizer::solve_simplex(coeffs, eps)?))
            }
            Err(e) => Err(e.into()),
        },
        None => Ok((Solver::Simplex, optimizer::solve_simplex(coeffs, eps)?)),
    }
}

fn solver_name(s: Solver) -> &'static str {
    match s {
        Solver::ClosedForm => "closed-form",
        Solver::Simplex => "simplex",
    }
}

#[derive(Serialize)]
struct OptimizeReport {
    objective: &'static str,
    solver: &'static str,
    coefficients: Vec<f64>,
    gapwise_monotone: bool,
    epsilons: Vec<f64>,
    kappa: usize,
    gaps: Vec<f64>,
    spikes: Vec<f64>,
    objective_value: f64,
    dual: Vec<f64>,
    dual_objective: f64,
    kkt_certified: bool,
    kkt: KktReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssa_revenue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    price_of_capacity: Option<CapacityReport>,
}

fn optimize(common: &Common, objective: Option<Objective>, solver: Option<Solver>, poc: bool) -> CmdResult {
    let scenario = Scenario::load(&common.scenario)?;
    let objective = objective.or(scenario.objective).unwrap_or(Objective::Revenue);
    let bidders = scenario.bidder_profiles()?;
    let eps = scenario.capacity()?;
    let coeffs = coefficients(&scenario, &bidders, objective, eps.len())?;
    let (used, sol) = solve_with(solver, &coeffs, &eps)?;
    let kkt = optimizer::kkt_report(&coeffs, &eps, &sol.gaps, &sol.dual)?;

    let ssa_revenue = match objective {
        Objective::SsaRevenue => {
            let cfg = scenario.keyword_config()?;
            Some(ssa::combined_auction(&bidders, &cfg, &sol.spikes())?.sne_revenue)
        }
        _ => None,
    };
    let price_of_capacity = if poc {
        match capacity::price_of_capacity(&coeffs) {
            Ok(r) => Some(r),
            Err(e @ Error::NotMonotone { .. }) => return Err(CliError::Solver(e)),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let report = OptimizeReport {
        objective: objective.as_str(),
        solver: solver_name(used),
        coefficients: coeffs.coeffs().to_vec(),
        gapwise_monotone: coeffs.is_gapwise_monotone(),
        epsilons: eps.epsilons().to_vec(),
        kappa: capacity::compute_kappa(&eps),
        gaps: sol.gaps.gaps().to_vec(),
        spikes: sol.spikes().probs().to_vec(),
        objective_value: sol.objective_value,
        dual: sol.dual.clone(),
        dual_objective: sol.dual_objective(&eps),
        kkt_certified: sol.kkt_certified,
        kkt,
        ssa_revenue,
        price_of_capacity,
    };
    let per_index = |fmt: fn(f64) -> String| -> Vec<Vec<String>> {
        (0..report.gaps.len())
            .map(|j| {
                vec![
                    (j + 1).to_string(),
                    fmt(report.coefficients[j]),
                    fmt(report.epsilons[j]),
                    fmt(report.gaps[j]),
                    fmt(report.spikes[j]),
                    fmt(report.dual[j + 1]),
                ]
            })
            .collect()
    };
    Ok(render(
        common.format.unwrap_or(Format::Table),
        &report,
        || {
            let mut t = Table::new(&["j", "d_j", "eps_j", "gap_j", "spike_j", "x_j"]);
            per_index(short).into_iter().for_each(|r| t.row(r));
            let mut pairs = vec![
                ("objective", report.objective.to_string()),
                ("solver", report.solver.to_string()),
                ("gap-wise monotone", report.gapwise_monotone.to_string()),
                ("kappa", report.kappa.to_string()),
                ("optimal value", short(report.objective_value)),
                ("x_0", short(report.dual[0])),
                ("dual objective", short(report.dual_objective)),
                ("KKT", if report.kkt_certified { "certified".into() } else { "FAILED".into() }),
            ];
            if let Some(r) = report.ssa_revenue {
                pairs.push(("combined auction revenue", short(r)));
            }
            if let Some(p) = &report.price_of_capacity {
                pairs.push(("threshold a", p.a_index.map_or("none".into(), |a| a.to_string())));
                pairs.push(("loss-free capacity", p.kappa.to_string()));
                pairs.push(("price of capacity (sup)", short(p.nu)));
                pairs.push(("d_(a-1)/d_a", short(p.nu_upper_bound)));
                pairs.push(("price of capacity (uniform)", p.nu_uniform.map_or("n/a".into(), short)));
            }
            t.render() + "\n" + &output::summary(&pairs)
        },
        || {
            let rows: Vec<Vec<String>> = per_index(full)
                .into_iter()
                .map(|mut r| {
                    r.push(full(report.objective_value));
                    r.push(report.kkt_certified.to_string());
                    r
                })
                .collect();
            output::csv(&["j", "d_j", "eps_j", "gap_j", "spike_j", "x_j", "objective_value", "kkt_certified"], &rows)
        },
    ))
}

#[derive(Serialize)]
struct SweepRow {
    kappa: usize,
    epsilon: f64,
    feasible: bool,
    h_opt: Option<f64>,
    ratio: Option<f64>,
}

fn sweep(
    common: &Common,
    objective: Option<Objective>,
    kappa: Option<usize>,
    points: usize,
    eps_max: Option<f64>,
) -> CmdResult {
    let scenario = Scenario::load(&common.scenario)?;
    let objective = objective.or(scenario.objective).unwrap_or(Objective::Revenue);
    let bidders = scenario.bidder_profiles()?;
    let m = match (&scenario.epsilons, &scenario.spikes, &scenario.ssa) {
        (Some(e), _, _) => e.len(),
        (None, Some(s), _) => s.len(),
        (None, None, Some(b)) => b.spike_count,
        _ => return Err(Error::Input("sweep needs epsilons, spikes or an [ssa] block to fix M".into()).into()),
    };
    let coeffs = coefficients(&scenario, &bidders, objective, m)?;
    let kappa = kappa
        .or_else(|| coeffs.is_gapwise_monotone().then(|| capacity::threshold_index(&coeffs)).flatten())
        .unwrap_or(m);
    if kappa == 0 || kappa > m {
        return Err(Error::Input(format!("sweep kappa must lie in 1..={m}, got {kappa}")).into());
    }
    if points < 2 {
        return Err(Error::Input("sweep needs at least 2 grid points".into()).into());
    }
    let limit = 2.0 / (kappa as f64 * (kappa as f64 + 1.0));
    let eps_max = eps_max.unwrap_or(limit);
    if !(eps_max.is_finite() && eps_max > 0.0) {
        return Err(Error::Input(format!("eps-max must be positive, got {eps_max}")).into());
    }

    let base = optimizer::solve(&coeffs, &CapacityParams::zeros(m)?)?.objective_value;
    let rows: Vec<SweepRow> = (0..points)
        .map(|i| {
            let epsilon = eps_max * i as f64 / (points - 1) as f64;
            match CapacityParams::uniform(m, kappa, epsilon) {
                Ok(eps) => {
                    let h = optimizer::solve(&coeffs, &eps).map(|s| s.objective_value).ok();
                    SweepRow {
                        kappa: if epsilon > 0.0 { kappa } else { 0 },
                        epsilon,
                        feasible: h.is_some(),
                        h_opt: h,
                        ratio: h.map(|h| base / h),
                    }
                }
                Err(_) => SweepRow {
                    kappa,
                    epsilon,
                    feasible: false,
                    h_opt: None,
                    ratio: None,
                },
            }
        })
        .collect();

    let cell = |x: Option<f64>, fmt: fn(f64) -> String| x.map_or(String::new(), fmt);
    let status = |r: &SweepRow| if r.feasible { "ok" } else { "infeasible" }.to_string();
    Ok(render(
        common.format.unwrap_or(Format::Csv),
        &rows,
        || {
            let mut t = Table::new(&["kappa", "epsilon", "h_opt", "ratio", "status"]);
            for r in &rows {
                t.row(vec![r.kappa.to_string(), short(r.epsilon), cell(r.h_opt, short), cell(r.ratio, short), status(r)]);
            }
            t.render()
        },
        || {
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| vec![r.kappa.to_string(), full(r.epsilon), cell(r.h_opt, full), cell(r.ratio, full), status(r)])
                .collect();
            output::csv(&["kappa", "epsilon", "h_opt", "ratio", "status"], &body)
        },
    ))
}

#[derive(Serialize)]
struct SimulateRank {
    rank: usize,
    bidder: Option<u64>,
    spike: f64,
    expected_payment: f64,
    empirical_mean: f64,
    empirical_variance: f64,
    deviation: f64,
    standard_error: f64,
    wins: u64,
    win_frequency: f64,
    frequency_standard_error: f64,
    pass: Option<bool>,
}

#[derive(Serialize)]
struct SimulateReport {
    scheme: PaymentScheme,
    trials: u64,
    seed: u64,
    generator: &'static str,
    revenue: f64,
    empirical_revenue_mean: f64,
    betting_revenue_per_trial: Option<f64>,
    ranks: Vec<SimulateRank>,
    passed: Option<bool>,
}

fn simulate(common: &Common, trials: u64, seed: u64, scheme: PaymentScheme) -> CmdResult {
    let scenario = Scenario::load(&common.scenario)?;
    let bidders = scenario.bidder_profiles()?;
    let spikes = scenario.spike_vector()?;
    let outcome = spike_vcg::run_vcg(&bidders, &spikes)?;
    let result = sim::simulate(&bidders, &spikes, scheme, trials, seed)?;
    let ses = match scheme {
        PaymentScheme::Betting => vec![0.0; spikes.len()],
        PaymentScheme::PayPerAcquisition => sim::ppa_standard_errors(&outcome, &spikes, trials),
    };
    let ranked = ids(&bidders, &outcome.ranking);
    let low_power = trials < sim::LOW_POWER_TRIALS;
    let t = trials as f64;
    let ranks: Vec<SimulateRank> = spikes
        .probs()
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let h = outcome.expected_payments[j];
            let mean = result.empirical_payment_means[j];
            let freq = result.win_counts[j] as f64 / t;
            let freq_se = (p * (1.0 - p) / t).sqrt();
            let deviation = mean - h;
            let ok = deviation.abs() <= SIGMA_LEVEL * ses[j] + 1e-12 * h.abs().max(1.0)
                && (freq - p).abs() <= SIGMA_LEVEL * freq_se + 1e-12;
            SimulateRank {
                rank: j + 1,
                bidder: ranked.get(j).copied(),
                spike: p,
                expected_payment: h,
                empirical_mean: mean,
                empirical_variance: result.empirical_payment_variances[j],
                deviation,
                standard_error: ses[j],
                wins: result.win_counts[j],
                win_frequency: freq,
                frequency_standard_error: freq_se,
                pass: (!low_power).then_some(ok),
            }
        })
        .collect();
    let passed = (!low_power).then(|| ranks.iter().all(|r| r.pass == Some(true)));
    let report = SimulateReport {
        scheme,
        trials,
        seed,
        generator: "ChaCha8Rng/seed_from_u64/stream-per-65536-trial-block",
        revenue: outcome.revenue,
        empirical_revenue_mean: result.empirical_revenue_mean,
        betting_revenue_per_trial: result.betting_revenue_per_trial,
        ranks,
        passed,
    };
    let verdict = |p: Option<bool>| match p {
        Some(true) => "PASS".to_string(),
        Some(false) => "FAIL".to_string(),
        None => "LOW-POWER".to_string(),
    };
    Ok(render(
        common.format.unwrap_or(Format::Table),
        &report,
        || {
            let mut tb = Table::new(&[
                "rank", "bidder", "spike", "h_j", "mean", "variance", "deviation", "se", "win_freq", "status",
            ]);
            for r in &report.ranks {
                tb.row(vec![
                    r.rank.to_string(),
                    r.bidder.map_or(String::new(), |b| b.to_string()),
                    short(r.spike),
                    short(r.expected_payment),
                    short(r.empirical_mean),
                    short(r.empirical_variance),
                    format!("{:.3e}", r.deviation),
                    format!("{:.3e}", r.standard_error),
                    short(r.win_frequency),
                    verdict(r.pass),
                ]);
            }
            tb.render()
                + "\n"
                + &output::summary(&[
                    ("scheme", scheme.as_str().to_string()),
                    ("trials", trials.to_string()),
                    ("seed", seed.to_string()),
                    ("revenue (analytic)", short(report.revenue)),
                    ("revenue (empirical)", short(report.empirical_revenue_mean)),
                    ("overall", verdict(report.passed)),
                ])
        },
        || {
            let body: Vec<Vec<String>> = report
                .ranks
                .iter()
                .map(|r| {
                    vec![
                        r.rank.to_string(),
                        r.bidder.map_or(String::new(), |b| b.to_string()),
                        full(r.spike),
                        full(r.expected_payment),
                        full(r.empirical_mean),
                        full(r.empirical_variance),
                        full(r.deviation),
                        full(r.standard_error),
                        r.wins.to_string(),
                        full(r.win_frequency),
                        verdict(r.pass),
                    ]
                })
                .collect();
            output::csv(
                &[
                    "rank", "bidder", "spike", "expected_payment", "empirical_mean", "empirical_variance",
                    "deviation", "standard_error", "wins", "win_frequency", "status",
                ],
                &body,
            )
        },
    ))
}

#[derive(Serialize)]
struct SsaReport {
    ranking: Vec<u64>,
    ranked_scores: Vec<f64>,
    spikes: Vec<f64>,
    effective_ctrs: Vec<f64>,
    per_slot_prices: Vec<f64>,
    sne_revenue: f64,
    fixed_part: f64,
    last_slot_ctr: f64,
    coefficients: Vec<f64>,
    gapwise_monotone: bool,
    objective_h: f64,
    decomposed_revenue: f64,
}

fn ssa_cmd(common: &Common) -> CmdResult {
    let scenario = Scenario::load(&common.scenario)?;
    let bidders = scenario.bidder_profiles()?;
    let spikes = scenario.spike_vector()?;
    let cfg = scenario.keyword_config()?;
    let out = ssa::combined_auction(&bidders, &cfg, &spikes)?;
    let coeffs = ssa::ssa_objective_coefficients(&bidders, &cfg)?;
    let objective_h = crate::types::evaluate_objective(&spikes.to_gaps(), &coeffs)?;
    let fixed_part = ssa::fixed_part(&bidders, &cfg)?;
    let last_slot_ctr = cfg.position_ctrs[cfg.slots - 1];
    let decomposed_revenue = fixed_part + last_slot_ctr * objective_h;
    if (decomposed_revenue - out.sne_revenue).abs() > FEASIBILITY_TOL * out.sne_revenue.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "combined revenue {} disagrees with its decomposition {decomposed_revenue}",
            out.sne_revenue
        ))
        .into());
    }
    let report = SsaReport {
        ranking: ids(&bidders, &out.ranking),
        ranked_scores: out.ranked_scores.clone(),
        spikes: spikes.probs().to_vec(),
        effective_ctrs: out.effective_ctrs.clone(),
        per_slot_prices: out.per_slot_prices.clone(),
        sne_revenue: out.sne_revenue,
        fixed_part,
        last_slot_ctr,
        coefficients: coeffs.coeffs().to_vec(),
        gapwise_monotone: coeffs.is_gapwise_monotone(),
        objective_h,
        decomposed_revenue,
    };
    let per_slot = |fmt: fn(f64) -> String| -> Vec<Vec<String>> {
        (0..report.effective_ctrs.len())
            .map(|j| {
                vec![
                    (j + 1).to_string(),
                    id_at(&report.ranking, j),
                    report.ranked_scores.get(j).map_or(String::new(), |&s| fmt(s)),
                    fmt(report.effective_ctrs[j]),
                    report.per_slot_prices.get(j).map_or(String::new(), |&p| fmt(p)),
                ]
            })
            .collect()
    };
    Ok(render(
        common.format.unwrap_or(Format::Table),
        &report,
        || {
            let mut t = Table::new(&["slot", "bidder", "score", "ctr", "price_per_click"]);
            per_slot(short).into_iter().for_each(|r| t.row(r));
            t.render()
                + "\n"
                + &output::summary(&[
                    ("revenue (SNE)", short(report.sne_revenue)),
                    ("fixed part", short(report.fixed_part)),
                    ("last-slot CTR", short(report.last_slot_ctr)),
                    ("d_j", report.coefficients.iter().map(|&d| short(d)).collect::<Vec<_>>().join(", ")),
                    ("gap-wise monotone", report.gapwise_monotone.to_string()),
                    ("H", short(report.objective_h)),
                ])
        },
        || {
            let rows: Vec<Vec<String>> = per_slot(full)
                .into_iter()
                .map(|mut r| {
                    r.push(full(report.sne_revenue));
                    r.push(join_full(&report.coefficients));
                    r
                })
                .collect();
            output::csv(&["slot", "bidder", "score", "ctr", "price_per_click", "sne_revenue", "coefficients"], &rows)
        },
    ))
}
