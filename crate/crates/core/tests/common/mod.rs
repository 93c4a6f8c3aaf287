//! Test-only oracles and instance generators.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spikecap::{bidders_from_values, BidderProfile, CapacityParams, CoefficientVector, SpikeVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, PartialEq)]
pub enum Kind {
    Le,
    Ge,
    Eq,
}

pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: Kind,
    pub rhs: f64,
}

const TOL: f64 = 1e-11;

/// Dense two-phase tableau simplex with Bland's rule:
/// maximize `c·x` subject to `constraints`, `x ≥ 0`.
/// Returns `(value, x)` or `None` when infeasible.
pub fn tableau_maximize(c: &[f64], constraints: &[Constraint]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let m = constraints.len();
    // normalize rhs ≥ 0
    let rows: Vec<(Vec<f64>, Kind, f64)> = constraints
        .iter()
        .map(|k| {
            if k.rhs < 0.0 {
                let kind = match k.kind {
                    Kind::Le => Kind::Ge,
                    Kind::Ge => Kind::Le,
                    Kind::Eq => Kind::Eq,
                };
                (k.coeffs.iter().map(|v| -v).collect(), kind, -k.rhs)
            } else {
                (k.coeffs.clone(), k.kind, k.rhs)
            }
        })
        .collect();
    let n_slack = rows.iter().filter(|r| r.1 != Kind::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Kind::Le).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut s, mut a) = (n, n + n_slack);
    for (i, (coeffs, kind, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(coeffs);
        t[i][cols] = *rhs;
        match kind {
            Kind::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Kind::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            Kind::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    let art_start = n + n_slack;

    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let p = t[r][col];
        t[r].iter_mut().for_each(|v| *v /= p);
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pr).for_each(|(v, pv)| *v -= f * pv);
            }
        }
        basis[r] = col;
    };

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            let reduced = |j: usize| -> f64 {
                cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>()
            };
            let Some(enter) = (0..allowed).find(|&j| !basis.contains(&j) && reduced(j) > TOL) else {
                return;
            };
            let mut leave: Option<usize> = None;
            for i in 0..m {
                if t[i][enter] > TOL {
                    let ratio = t[i][cols] / t[i][enter];
                    leave = match leave {
                        None => Some(i),
                        Some(l) => {
                            let lr = t[l][cols] / t[l][enter];
                            if ratio < lr - TOL || ((ratio - lr).abs() <= TOL && basis[i] < basis[l]) {
                                Some(i)
                            } else {
                                Some(l)
                            }
                        }
                    };
                }
            }
            match leave {
                Some(r) => pivot(t, basis, r, enter),
                None => panic!("unbounded LP in oracle"),
            }
        }
    };

    // phase 1: maximize −Σ artificials
    let mut phase1 = vec![0.0; cols];
    phase1[art_start..].iter_mut().for_each(|v| *v = -1.0);
    run(&mut t, &mut basis, &phase1, cols);
    let infeasibility: f64 = (0..m).filter(|&i| basis[i] >= art_start).map(|i| t[i][cols]).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    for i in 0..m {
        if basis[i] >= art_start {
            if let Some(col) = (0..art_start).find(|&j| t[i][j].abs() > TOL) {
                pivot(&mut t, &mut basis, i, col);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    run(&mut t, &mut basis, &phase2, art_start);
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][cols];
        }
    }
    let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Some((value, x))
}

/// The spike-gap LP in its original variables.
pub fn spike_lp_oracle(d: &[f64], eps: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = d.len();
    let c: Vec<f64> = d.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).collect();
    let mut cons = vec![Constraint {
        coeffs: (1..=m).map(|i| i as f64).collect(),
        kind: Kind::Eq,
        rhs: 1.0,
    }];
    for (j, e) in eps.iter().enumerate() {
        let mut row = vec![0.0; m];
        row[j] = 1.0;
        cons.push(Constraint {
            coeffs: row,
            kind: Kind::Ge,
            rhs: *e,
        });
    }
    tableau_maximize(&c, &cons)
}

/// Best objective over the vertices of `{θ ≥ ε, Σ jθ_j = 1}`: each vertex
/// puts the residual mass on a single index.
pub fn vertex_enumeration(d: &[f64], eps: &[f64]) -> f64 {
    let residual = 1.0 - eps.iter().enumerate().map(|(i, e)| (i + 1) as f64 * e).sum::<f64>();
    (0..d.len())
        .map(|k| {
            let mut theta = eps.to_vec();
            theta[k] += residual / (k + 1) as f64;
            theta
                .iter()
                .enumerate()
                .map(|(i, t)| t * (i + 1) as f64 * d[i])
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_monotone(rng: &mut impl Rng, m: usize) -> CoefficientVector {
    let mut d: Vec<f64> = (0..m)
        .map(|_| {
            // integer-valued draws produce ties
            if rng.random_bool(0.3) {
                rng.random_range(0..10) as f64
            } else {
                rng.random_range(0.0..100.0)
            }
        })
        .collect();
    d.sort_by(|a, b| b.total_cmp(a));
    CoefficientVector::new(d).unwrap()
}

/// Non-increasing, non-negative coefficients whose first drop is at index
/// `a` (1-based, `2 ≤ a ≤ m`).
pub fn random_with_threshold(rng: &mut impl Rng, m: usize, a: usize) -> CoefficientVector {
    let top = rng.random_range(1.0..100.0);
    let mut tail: Vec<f64> = (a..=m)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..top) })
        .collect();
    tail.sort_by(|x, y| y.total_cmp(x));
    let mut d = vec![top; a - 1];
    d.extend(tail);
    CoefficientVector::new(d).unwrap()
}

pub fn random_coeffs(rng: &mut impl Rng, m: usize) -> CoefficientVector {
    CoefficientVector::new((0..m).map(|_| rng.random_range(-50.0..50.0)).collect()).unwrap()
}

/// Random feasible bounds; some draws use up the whole budget `Σ jε_j = 1`.
pub fn random_eps(rng: &mut impl Rng, m: usize) -> CapacityParams {
    let raw: Vec<f64> = (0..m)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
        .collect();
    let weighted: f64 = raw.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
    if weighted == 0.0 {
        return CapacityParams::new(raw).unwrap();
    }
    let budget = if rng.random_bool(0.1) { 1.0 } else { rng.random::<f64>() };
    let scaled: Vec<f64> = raw.iter().map(|v| v * budget / weighted * (1.0 - 1e-12)).collect();
    CapacityParams::new(scaled).unwrap()
}

pub fn random_spikes(rng: &mut impl Rng, m: usize) -> SpikeVector {
    loop {
        let mut raw: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.15) { 0.0 } else { rng.random::<f64>() })
            .collect();
        raw.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        if let Ok(s) = SpikeVector::new(probs) {
            return s;
        }
    }
}

pub fn random_bidders(rng: &mut impl Rng, n: usize) -> Vec<BidderProfile> {
    let values: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random_bool(0.25) {
                rng.random_range(0..6) as f64
            } else {
                rng.random_range(0.0..50.0)
            }
        })
        .collect();
    bidders_from_values(&values).unwrap()
}

pub fn random_ssa_bidders(rng: &mut impl Rng, n: usize) -> Vec<BidderProfile> {
    (0..n)
        .map(|i| {
            BidderProfile::with_relevance(i as u64, rng.random_range(0.0..30.0), rng.random_range(0.05..=1.0))
                .unwrap()
        })
        .collect()
}

pub fn random_ctrs(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    loop {
        let mut g: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        g.sort_by(|a, b| b.total_cmp(a));
        if g.windows(2).all(|w| w[0] > w[1]) {
            return g;
        }
    }
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut a: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut a, &mut out);
    out
}

pub fn manifest_path(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

/// Runs the built binary; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_spikecap"))
        .args(args)
        .current_dir(manifest_path("tests"))
        .output()
        .expect("spawn spikecap");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// `(golden file, arguments)` for every committed golden output.
pub const GOLDEN_CASES: &[(&str, &[&str])] = &[
    ("golden/vcg_three_bidders.json", &["vcg", "--scenario", "fixtures/vcg_three_bidders.toml", "--format", "json"]),
    ("golden/vcg_three_bidders.csv", &["vcg", "--scenario", "fixtures/vcg_three_bidders.toml", "--format", "csv"]),
    ("golden/optimize_revenue.json", &["optimize", "--scenario", "fixtures/optimize_revenue.toml", "--poc", "--format", "json"]),
    ("golden/optimize_revenue.csv", &["optimize", "--scenario", "fixtures/optimize_revenue.toml", "--format", "csv"]),
    ("golden/ssa_combined.json", &["ssa", "--scenario", "fixtures/ssa_combined.toml", "--format", "json"]),
    ("golden/ssa_combined.csv", &["ssa", "--scenario", "fixtures/ssa_combined.toml", "--format", "csv"]),
];

/// Golden files whose bytes differ from a fresh run.
pub fn golden_mismatches() -> Vec<String> {
    GOLDEN_CASES
        .iter()
        .filter_map(|(file, args)| {
            let expected = std::fs::read(manifest_path("tests").join(file)).unwrap();
            let (code, stdout, _) = run_cli(args);
            (code != 0 || stdout.as_bytes() != expected.as_slice()).then(|| file.to_string())
        })
        .collect()
}
