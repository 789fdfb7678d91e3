//! Shift factors against a direct DC power flow solve.

use ecmarket::case::{bundled_case, random_case, RandomCaseConfig};
use ecmarket::grid::{compute_ptdf, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Solves `B θ = P` with the slack angle pinned at zero and returns the
/// line flows `b_l (θ_from − θ_to)`.
fn dc_flows(net: &Network, injection: &[f64]) -> Vec<f64> {
    let n = net.buses.len();
    let pos = |id| net.buses.iter().position(|&b| b == id).unwrap();
    let slack = pos(net.slack);
    let mut b = vec![vec![0.0; n]; n];
    for l in &net.lines {
        let (f, t) = (pos(l.from), pos(l.to));
        b[f][f] += l.susceptance;
        b[t][t] += l.susceptance;
        b[f][t] -= l.susceptance;
        b[t][f] -= l.susceptance;
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != slack).collect();
    let reduced: Vec<Vec<f64>> = keep.iter().map(|&r| keep.iter().map(|&c| b[r][c]).collect()).collect();
    let rhs: Vec<f64> = keep.iter().map(|&k| injection[k]).collect();
    let theta_red = gauss(reduced, rhs);
    let mut theta = vec![0.0; n];
    for (k, &bus) in keep.iter().enumerate() {
        theta[bus] = theta_red[k];
    }
    net.lines.iter().map(|l| l.susceptance * (theta[pos(l.from)] - theta[pos(l.to)])).collect()
}

fn balanced_injection(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut inj: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let mean = inj.iter().sum::<f64>() / n as f64;
    inj.iter_mut().for_each(|v| *v -= mean);
    inj
}

#[test]
fn bundled_networks_match_direct_solve() {
    for name in ["mesh5", "syn39", "syn118"] {
        let net = bundled_case(name).unwrap().network;
        let ptdf = compute_ptdf(&net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let inj = balanced_injection(&mut rng, net.buses.len());
            let want = dc_flows(&net, &inj);
            let got = ptdf.flows_for_injections(&inj);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "{name}: {g} vs {w}");
            }
        }
    }
}

#[test]
fn slack_column_is_zero() {
    let net = bundled_case("syn39").unwrap().network;
    let ptdf = compute_ptdf(&net).unwrap();
    for l in 0..ptdf.num_lines() {
        assert_eq!(ptdf.get(l, ptdf.slack_index()), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flows_are_linear_in_injections(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let net = random_case(seed, &RandomCaseConfig::meshed(6)).network;
        let ptdf = compute_ptdf(&net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = balanced_injection(&mut rng, net.buses.len());
        let y = balanced_injection(&mut rng, net.buses.len());
        let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let (fx, fy, fm) = (ptdf.flows_for_injections(&x), ptdf.flows_for_injections(&y), ptdf.flows_for_injections(&mix));
        for l in 0..fm.len() {
            let lin = a * fx[l] + b * fy[l];
            prop_assert!((fm[l] - lin).abs() <= 1e-9 * lin.abs().max(1.0));
        }
    }

    #[test]
    fn flows_conserve_power_at_every_bus(seed in 0u64..1000) {
        let net = random_case(seed, &RandomCaseConfig::meshed(7)).network;
        let ptdf = compute_ptdf(&net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let inj = balanced_injection(&mut rng, net.buses.len());
        let flows = ptdf.flows_for_injections(&inj);
        let mut net_out = vec![0.0; net.buses.len()];
        for (l, line) in net.lines.iter().enumerate() {
            let f = net.buses.iter().position(|&b| b == line.from).unwrap();
            let t = net.buses.iter().position(|&b| b == line.to).unwrap();
            net_out[f] += flows[l];
            net_out[t] -= flows[l];
        }
        for (o, i) in net_out.iter().zip(&inj) {
            prop_assert!((o - i).abs() <= 1e-8);
        }
    }
}
