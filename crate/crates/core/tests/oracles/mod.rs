//! Independent reference implementations shared by the integration and
//! acceptance tests. Nothing here calls into the library under test.
#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|p| a[i][p] * b[p][j]).sum()).collect()).collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Solves `a x = b` for each column of `b` by Gauss-Jordan elimination with
/// partial pivoting.
pub fn solve(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Mat = a.iter().zip(b).map(|(r, br)| r.iter().chain(br).copied().collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| aug[x][c].abs().total_cmp(&aug[y][c].abs())).unwrap();
        aug.swap(c, p);
        let d = aug[c][c];
        for v in aug[c].iter_mut() {
            *v /= d;
        }
        let pivot = aug[c].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            if r != c {
                let f = row[c];
                for (v, pv) in row.iter_mut().zip(&pivot) {
                    *v -= f * pv;
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..n + m].to_vec()).collect()
}

pub fn invert(a: &Mat) -> Mat {
    let n = a.len();
    let eye: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    solve(a, &eye)
}

/// Least squares `A = W S^T (S S^T)^-1` for full-row-rank `S`.
pub fn normal_equations(s: &Mat, w: &Mat) -> Mat {
    let st = transpose(s);
    matmul(&matmul(w, &st), &invert(&matmul(s, &st)))
}

/// Minimum-norm least squares for `S` of rank `r` whose columns all lie in
/// the span of the first `r` linearly independent columns: `A = W C^T (C C^T)^-1 B^+`
/// via the rank factorisation `S = B C` with `B` = those columns.
pub fn min_norm_lstsq(s: &Mat, w: &Mat, basis_cols: &[usize]) -> Mat {
    let b: Mat = s.iter().map(|row| basis_cols.iter().map(|&j| row[j]).collect()).collect();
    let bt = transpose(&b);
    // C = (B^T B)^-1 B^T S, B^+ = (B^T B)^-1 B^T
    let btb_inv = invert(&matmul(&bt, &b));
    let b_pinv = matmul(&btb_inv, &bt);
    let c = matmul(&b_pinv, s);
    let ct = transpose(&c);
    let c_pinv = matmul(&ct, &invert(&matmul(&c, &ct)));
    matmul(&matmul(w, &c_pinv), &b_pinv)
}

/// Hand-enumerated single-subframe outcomes for transmitters `0..k` on the
/// listed subchannels, heard by nodes 0..=3. One string per attempt, one
/// character per node: `-` self, `D` delivered, `C` collision, `H` half duplex.
pub const MAC_TRUTH_TABLE: &[(&[u64], &[&str])] = &[
    (&[0], &["-DDD"]),
    (&[1], &["-DDD"]),
    (&[0, 0], &["-CCC", "C-CC"]),
    (&[0, 1], &["-HDD", "H-DD"]),
    (&[1, 0], &["-HDD", "H-DD"]),
    (&[1, 1], &["-CCC", "C-CC"]),
    (&[0, 0, 0], &["-CCC", "C-CC", "CC-C"]),
    (&[0, 0, 1], &["-CCC", "C-CC", "HH-D"]),
    (&[0, 1, 0], &["-CCC", "H-HD", "CC-C"]),
    (&[0, 1, 1], &["-HHD", "C-CC", "CC-C"]),
    (&[1, 0, 0], &["-HHD", "C-CC", "CC-C"]),
    (&[1, 0, 1], &["-CCC", "H-HD", "CC-C"]),
    (&[1, 1, 0], &["-CCC", "C-CC", "HH-D"]),
    (&[1, 1, 1], &["-CCC", "C-CC", "CC-C"]),
];

/// Pearson chi-square p-value of uniform counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

/// A finite Markov chain with per-state cost.
pub struct Chain {
    pub p: Mat,
    pub cost: Vec<f64>,
}

/// Long-run average cost from `start`. The lazy chain `(P + I) / 2` has
/// the same Cesaro limit and is aperiodic, so its powers converge; squaring
/// 40 times reaches step 2^40. Rows are renormalised after each squaring so
/// rounding does not compound.
pub fn average_cost(chain: &Chain, start: usize) -> f64 {
    let n = chain.cost.len();
    let mut q: Mat = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * chain.p[i][j] + if i == j { 0.5 } else { 0.0 }).collect())
        .collect();
    for _ in 0..40 {
        q = matmul(&q, &q);
        for row in q.iter_mut() {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
    q[start].iter().zip(&chain.cost).map(|(d, c)| d * c).sum()
}

/// Stationary average cost of a unichain, by solving `pi (P - I) = 0`,
/// `sum pi = 1`.
pub fn stationary_cost(chain: &Chain) -> f64 {
    let n = chain.cost.len();
    let mut a: Mat = (0..n).map(|j| (0..n).map(|i| chain.p[i][j] - if i == j { 1.0 } else { 0.0 }).collect()).collect();
    a[n - 1] = vec![1.0; n];
    let mut b: Mat = vec![vec![0.0]; n];
    b[n - 1][0] = 1.0;
    let pi = solve(&a, &b);
    pi.iter().zip(&chain.cost).map(|(p, c)| p[0] * c).sum()
}

/// The single-source error chain: silent grows the level by one with
/// probability `p` (capped at the top), transmitting restarts the step
/// from level 0. Cost is the current level plus `m` when transmitting.
pub fn error_chain_rows(n: usize, p: f64) -> (Mat, Mat) {
    let silent: Mat = (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            if s + 1 < n {
                row[s] += 1.0 - p;
                row[s + 1] += p;
            } else {
                row[s] = 1.0;
            }
            row
        })
        .collect();
    let transmit = vec![silent[0].clone(); n];
    (silent, transmit)
}

/// Chain induced by a deterministic single-source policy.
pub fn policy_chain(n: usize, p: f64, m: f64, transmit: &[bool]) -> Chain {
    let (silent, tx) = error_chain_rows(n, p);
    Chain {
        p: (0..n).map(|s| if transmit[s] { tx[s].clone() } else { silent[s].clone() }).collect(),
        cost: (0..n).map(|s| s as f64 + if transmit[s] { m } else { 0.0 }).collect(),
    }
}

/// Best average cost over all `2^n` deterministic policies, from level 0.
/// Some policies split the chain into several closed classes, so costs are
/// evaluated from the start state rather than from a stationary law.
pub fn brute_force_best(n: usize, p: f64, m: f64) -> (f64, Vec<bool>) {
    (0..1u32 << n)
        .map(|bits| {
            let tx: Vec<bool> = (0..n).map(|s| bits >> s & 1 == 1).collect();
            (average_cost(&policy_chain(n, p, m, &tx), 0), tx)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}

/// Two sources with 3 error levels each sharing one transmission per slot.
/// `choice[x0 * 3 + x1]` names the source that transmits in joint state
/// `(x0, x1)`. Cost per slot is `x0 + x1`.
pub fn joint_chain(p: [f64; 2], choice: &[usize]) -> Chain {
    let rows: Vec<(Mat, Mat)> = p.iter().map(|&q| error_chain_rows(3, q)).collect();
    let mut pm = vec![vec![0.0; 9]; 9];
    let mut cost = vec![0.0; 9];
    for x0 in 0..3 {
        for x1 in 0..3 {
            let s = x0 * 3 + x1;
            cost[s] = (x0 + x1) as f64;
            let r0 = if choice[s] == 0 { &rows[0].1[x0] } else { &rows[0].0[x0] };
            let r1 = if choice[s] == 1 { &rows[1].1[x1] } else { &rows[1].0[x1] };
            for y0 in 0..3 {
                for y1 in 0..3 {
                    pm[s][y0 * 3 + y1] = r0[y0] * r1[y1];
                }
            }
        }
    }
    Chain { p: pm, cost }
}

/// Exhaustive search over all 2^9 joint stationary policies, from (0, 0).
pub fn joint_optimum(p: [f64; 2]) -> f64 {
    (0..1u32 << 9)
        .map(|bits| {
            let choice: Vec<usize> = (0..9).map(|s| (bits >> s & 1) as usize).collect();
            average_cost(&joint_chain(p, &choice), 0)
        })
        .fold(f64::INFINITY, f64::min)
}
