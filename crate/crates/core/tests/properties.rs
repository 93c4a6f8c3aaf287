mod common;

use common::*;
use proptest::prelude::*;
use spikecap::capacity::{compute_kappa, increase_capacity, price_of_capacity, price_of_capacity_uniform, threshold_index};
use spikecap::optimizer::{check_kkt, dual_objective, solve, solve_closed_form, solve_simplex};
use spikecap::spike_vcg::{allocation_efficiency, check_walrasian, revenue_decomposition, run_vcg};
use spikecap::ssa::{combined_auction, decomposed_revenue, fixed_part, optimize_ssa_spikes, KeywordAuctionConfig};
use spikecap::{evaluate_objective, BidderProfile, CapacityParams, GapVector, SpikeVector};

fn seeds() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=6)
}

/// VCG payment of each rank from the externality definition: the welfare
/// the others would get without the winner minus what they get with it.
fn externality_payments(bidders: &[BidderProfile], spikes: &SpikeVector) -> Vec<f64> {
    let mut values: Vec<f64> = bidders.iter().map(|b| b.value).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let welfare = |vals: &[f64]| -> f64 { spikes.probs().iter().zip(vals).map(|(p, v)| p * v).sum() };
    let total = welfare(&values);
    (0..spikes.len())
        .map(|j| {
            if j >= values.len() {
                return 0.0;
            }
            let mut others = values.clone();
            let own = spikes.probs()[j] * others.remove(j);
            welfare(&others) - (total - own)
        })
        .collect()
}

/// Sponsored-search revenue straight from the sorted scores and the
/// effective CTR vector.
fn ssa_oracle(scores: &mut [f64], ctrs: &[f64], spikes: &[f64]) -> f64 {
    scores.sort_by(|a, b| b.total_cmp(a));
    let k = ctrs.len();
    let mut g: Vec<f64> = ctrs[..k - 1].to_vec();
    g.extend(spikes.iter().map(|p| ctrs[k - 1] * p));
    let s = |i: usize| scores.get(i - 1).copied().unwrap_or(0.0);
    (1..=g.len())
        .map(|j| {
            let next = g.get(j).copied().unwrap_or(0.0);
            (g[j - 1] - next) * j as f64 * s(j + 1)
        })
        .sum()
}

#[test]
fn oracle_solves_textbook_lp() {
    // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
    let cons = vec![
        Constraint { coeffs: vec![1.0, 0.0], kind: Kind::Le, rhs: 4.0 },
        Constraint { coeffs: vec![0.0, 2.0], kind: Kind::Le, rhs: 12.0 },
        Constraint { coeffs: vec![3.0, 2.0], kind: Kind::Le, rhs: 18.0 },
    ];
    let (v, x) = tableau_maximize(&[3.0, 5.0], &cons).unwrap();
    assert!((v - 36.0).abs() < 1e-9);
    assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
}

#[test]
fn oracle_detects_infeasibility() {
    let cons = vec![
        Constraint { coeffs: vec![1.0], kind: Kind::Le, rhs: 1.0 },
        Constraint { coeffs: vec![1.0], kind: Kind::Ge, rhs: 2.0 },
    ];
    assert!(tableau_maximize(&[1.0], &cons).is_none());
}

#[test]
fn permutation_count() {
    assert_eq!(permutations(4).len(), 24);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_matches_oracles((seed, m) in seeds()) {
        let mut r = rng(seed);
        let d = random_monotone(&mut r, m);
        let eps = random_eps(&mut r, m);
        let closed = solve_closed_form(&d, &eps).unwrap();
        let (oracle, _) = spike_lp_oracle(d.coeffs(), eps.epsilons()).unwrap();
        let vertices = vertex_enumeration(d.coeffs(), eps.epsilons());
        let tol = 1e-9 * d.coeffs()[0].abs().max(1.0);
        prop_assert!((closed.objective_value - oracle).abs() <= tol);
        prop_assert!((closed.objective_value - vertices).abs() <= tol);
        prop_assert!(check_kkt(&d, &eps, &closed).unwrap());
    }

    #[test]
    fn simplex_matches_oracle_on_any_coefficients((seed, m) in seeds()) {
        let mut r = rng(seed);
        let d = random_coeffs(&mut r, m);
        let eps = random_eps(&mut r, m);
        let sol = solve_simplex(&d, &eps).unwrap();
        let (oracle, _) = spike_lp_oracle(d.coeffs(), eps.epsilons()).unwrap();
        prop_assert!((sol.objective_value - oracle).abs() <= 1e-9 * 50.0);
        prop_assert!(check_kkt(&d, &eps, &sol).unwrap());
        let auto = solve(&d, &eps).unwrap();
        prop_assert!((auto.objective_value - oracle).abs() <= 1e-9 * 50.0);
    }

    #[test]
    fn weak_duality((seed, m) in seeds(), w in prop::collection::vec(0.0f64..1.0, 6)) {
        let mut r = rng(seed);
        let d = random_coeffs(&mut r, m);
        let eps = random_eps(&mut r, m);
        let sol = solve(&d, &eps).unwrap();
        // any feasible point: ε plus the residual spread by weights w
        let wsum: f64 = w[..m].iter().enumerate().map(|(i, x)| (i + 1) as f64 * x).sum();
        let theta: Vec<f64> = eps.epsilons().iter().zip(&w).map(|(e, x)| {
            if wsum > 0.0 { e + x * eps.residual() / wsum } else { *e }
        }).collect();
        if wsum == 0.0 {
            return Ok(());
        }
        let primal = evaluate_objective(&GapVector::new_unchecked(theta), &d).unwrap();
        prop_assert!(primal <= dual_objective(&eps, &sol.dual) + 1e-9 * 50.0);
        prop_assert!(primal <= sol.objective_value + 1e-9 * 50.0);
    }

    #[test]
    fn tighter_bounds_never_help((seed, m) in seeds(), shrink in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let d = random_coeffs(&mut r, m);
        let eps = random_eps(&mut r, m);
        let looser = CapacityParams::new(eps.epsilons().iter().map(|e| e * shrink).collect()).unwrap();
        let h_tight = solve(&d, &eps).unwrap().objective_value;
        let h_loose = solve(&d, &looser).unwrap().objective_value;
        prop_assert!(h_tight <= h_loose + 1e-9 * 50.0);
    }

    #[test]
    fn objective_agrees_in_spike_space((seed, m) in seeds()) {
        let mut r = rng(seed);
        let spikes = random_spikes(&mut r, m);
        let d = random_coeffs(&mut r, m);
        let h = evaluate_objective(&spikes.to_gaps(), &d).unwrap();
        // Σ θ_j·j·d_j = Σ p_j·(j·d_j − (j−1)·d_{j−1})
        let c = d.coeffs();
        let direct: f64 = spikes.probs().iter().enumerate().map(|(i, p)| {
            let prev = if i == 0 { 0.0 } else { i as f64 * c[i - 1] };
            p * ((i + 1) as f64 * c[i] - prev)
        }).sum();
        prop_assert!((h - direct).abs() <= 1e-9 * 50.0 * m as f64);
    }

    #[test]
    fn vcg_payments_are_externalities((seed, m) in seeds(), n in 1usize..=7) {
        let mut r = rng(seed);
        let bidders = random_bidders(&mut r, n);
        let spikes = random_spikes(&mut r, m);
        let out = run_vcg(&bidders, &spikes).unwrap();
        let oracle = externality_payments(&bidders, &spikes);
        for (h, o) in out.expected_payments.iter().zip(&oracle) {
            prop_assert!((h - o).abs() <= 1e-9 * 50.0);
        }
        // non-increasing, individually rational
        for w in out.expected_payments.windows(2) {
            prop_assert!(w[0] >= w[1] - 1e-12);
        }
        for (u, h) in out.utilities(&spikes).iter().zip(&out.expected_payments) {
            prop_assert!(*u >= -1e-9 && *h >= 0.0);
        }
        let dec = revenue_decomposition(&out, &spikes).unwrap();
        prop_assert!(dec.is_monotone);
    }

    #[test]
    fn walrasian_iff_efficient((seed, m) in seeds(), n in 1usize..=5, perm in any::<prop::sample::Index>()) {
        let mut r = rng(seed);
        let m = m.min(3);
        let bidders = random_bidders(&mut r, n);
        let spikes = random_spikes(&mut r, m);
        let out = run_vcg(&bidders, &spikes).unwrap();
        let all = permutations(n);
        let ranking = &all[perm.index(all.len())];
        let best = allocation_efficiency(&bidders, &spikes, &out.ranking).unwrap();
        let eff = allocation_efficiency(&bidders, &spikes, ranking).unwrap();
        let efficient = eff >= best - 1e-9 * 50.0;
        prop_assert_eq!(check_walrasian(&bidders, &spikes, ranking, &out.expected_payments).unwrap(), efficient);
    }

    #[test]
    fn capacity_increase_is_free_above_threshold((seed, m) in (any::<u64>(), 2usize..=8)) {
        let mut r = rng(seed);
        let d = random_monotone(&mut r, m);
        let Some(a) = threshold_index(&d) else { return Ok(()) };
        if a >= m {
            return Ok(());
        }
        let kappa = a + (seed as usize % (m - a));
        let mut raw = random_eps(&mut r, m).epsilons().to_vec();
        raw[kappa..].iter_mut().for_each(|e| *e = 0.0);
        if raw[kappa - 1] == 0.0 {
            raw[kappa - 1] = 0.5 / kappa as f64 * (1.0 - CapacityParams::new(raw.clone()).unwrap().weighted_sum());
        }
        let eps = CapacityParams::new(raw).unwrap();
        prop_assert_eq!(compute_kappa(&eps), kappa);
        let raised = increase_capacity(&eps, &d).unwrap();
        prop_assert_eq!(compute_kappa(&raised), kappa + 1);
        let before = solve_closed_form(&d, &eps).unwrap().objective_value;
        let after = solve_closed_form(&d, &raised).unwrap().objective_value;
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn price_of_capacity_bounds((seed, m, a) in (any::<u64>(), 2usize..=10, 2usize..=10)) {
        let mut r = rng(seed);
        let a = a.min(m);
        let d = random_with_threshold(&mut r, m, a);
        prop_assert_eq!(threshold_index(&d), Some(a));
        let report = price_of_capacity(&d).unwrap();
        prop_assert_eq!(report.kappa, a - 1);
        let c = d.coeffs();
        // any bounds with capacity a cost at most d_{a−1}/d_a
        let bounds = CapacityParams::uniform(m, a, 2.0 / (a * (a + 1)) as f64 * 0.999).unwrap();
        let ratio = c[0] / solve_closed_form(&d, &bounds).unwrap().objective_value;
        prop_assert!(ratio <= report.nu_upper_bound + 1e-9);
        prop_assert!(ratio <= report.nu + 1e-9);
        // uniform price from the LP at the largest feasible uniform bound
        let tight = CapacityParams::uniform(m, a, 2.0 / (a * (a + 1)) as f64).unwrap();
        let lp_ratio = c[0] / solve_closed_form(&d, &tight).unwrap().objective_value;
        let nu = price_of_capacity_uniform(&d).unwrap();
        prop_assert!((nu - lp_ratio).abs() <= 1e-9 * nu);
        prop_assert!(nu <= (1.0 + 2.0 / (a - 1) as f64).min(3.0) + 1e-12);
    }

    #[test]
    fn ssa_revenue_matches_direct_formula(
        seed in any::<u64>(), n in 1usize..=8, k in 1usize..=4, m in 1usize..=5,
    ) {
        let mut r = rng(seed);
        let bidders = random_ssa_bidders(&mut r, n);
        let ctrs = random_ctrs(&mut r, k);
        let spikes = random_spikes(&mut r, m);
        let config = KeywordAuctionConfig::new(k, ctrs.clone(), m).unwrap();
        let revenue = combined_auction(&bidders, &config, &spikes).unwrap().sne_revenue;
        let mut scores: Vec<f64> = bidders.iter().map(|b| b.value * b.relevance).collect();
        let oracle = ssa_oracle(&mut scores, &ctrs, spikes.probs());
        prop_assert!((revenue - oracle).abs() <= 1e-9 * 30.0);
        prop_assert!((decomposed_revenue(&bidders, &config, &spikes).unwrap() - revenue).abs() <= 1e-9 * 30.0);
        if k >= 2 {
            prop_assert!(fixed_part(&bidders, &config).unwrap() >= 0.0);
        }
    }

    #[test]
    fn optimized_ssa_spikes_beat_feasible_alternatives(
        seed in any::<u64>(), n in 1usize..=8, k in 1usize..=4, m in 1usize..=5,
    ) {
        let mut r = rng(seed);
        let bidders = random_ssa_bidders(&mut r, n);
        let config = KeywordAuctionConfig::new(k, random_ctrs(&mut r, k), m).unwrap();
        let eps = random_eps(&mut r, m);
        let best = optimize_ssa_spikes(&bidders, &config, &eps).unwrap();
        let at_best = combined_auction(&bidders, &config, &best.spikes()).unwrap().sne_revenue;
        for _ in 0..8 {
            let spikes = random_spikes(&mut r, m);
            let feasible = spikes.to_gaps().gaps().iter().zip(eps.epsilons()).all(|(t, e)| t >= e);
            if feasible {
                let other = combined_auction(&bidders, &config, &spikes).unwrap().sne_revenue;
                prop_assert!(other <= at_best + 1e-9 * 30.0);
            }
        }
    }
}
