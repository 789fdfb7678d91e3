//! Independent reference computations used by the acceptance runner.

use ecmarket_lp::{LinearProgram, Relation, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn feasible(lp: &LinearProgram, x: &[f64]) -> bool {
    let tol = 1e-9;
    (0..lp.num_vars()).all(|k| x[k] >= lp.lower[k] - tol && x[k] <= lp.upper[k] + tol)
        && lp.constraints.iter().all(|c| {
            let lhs: f64 = c.coefficients.iter().zip(x).map(|(a, v)| a * v).sum();
            match c.relation {
                Relation::LessEq => lhs <= c.rhs + tol,
                Relation::GreaterEq => lhs >= c.rhs - tol,
                Relation::Equal => (lhs - c.rhs).abs() <= tol,
            }
        })
}

/// Best objective over every intersection of `n` active hyperplanes (rows
/// and finite bounds) of a boxed LP; `None` when no vertex is feasible.
pub fn vertex_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = lp.constraints.iter().map(|c| (c.coefficients.clone(), c.rhs)).collect();
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        planes.push((e.clone(), lp.lower[k]));
        planes.push((e, lp.upper[k]));
    }
    let sign = lp.sense.sign();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(lp, &x) {
                let v = sign * lp.objective_value(&x);
                best = Some(best.map_or(v, |bv: f64| bv.max(v)));
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return best.map(|v| sign * v);
            }
            i -= 1;
            if idx[i] < planes.len() - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Boxed LP with up to five variables and five mixed rows.
pub fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=5);
    let m = rng.gen_range(0..=5);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(sense);
    for k in 0..n {
        let lo = if rng.gen_bool(0.7) { 0.0 } else { rng.gen_range(-3.0..1.0) };
        lp.add_variable(format!("x{k}"), rng.gen_range(-5.0..5.0), lo, lo + rng.gen_range(0.5..6.0));
    }
    for i in 0..m {
        let row = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-4.0..4.0) }).collect();
        let rel = match rng.gen_range(0..6) {
            0 => Relation::Equal,
            1 | 2 => Relation::GreaterEq,
            _ => Relation::LessEq,
        };
        lp.add_dense_constraint(format!("r{i}"), row, rel, rng.gen_range(-4.0..8.0));
    }
    lp
}
