//! Test-only oracles. Nothing here calls into the Jacobi solver or the index
//! pipeline.

#![allow(dead_code)]

use pca_index::dataset::{Dataset, IndicatorSchema, IndicatorSpec};
use pca_index::{Direction, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `B·Bᵀ` with uniform entries in [-1, 1]: symmetric positive semidefinite.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Vec<Vec<f64>> {
    let b: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..rank).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..rank).map(|k| b[i][k] * b[j][k]).sum())
                .collect()
        })
        .collect()
}

/// Householder reduction to tridiagonal form, returning (diagonal, off-diagonal).
fn tridiagonalize(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H = I - 2 v vᵀ / (vᵀv) acting on indices k+1..n; A <- H A H.
        let idx: Vec<usize> = (k + 1..n).collect();
        let m = idx.len();
        // p = A v (restricted columns), full rows
        let p: Vec<f64> = (0..n)
            .map(|r| (0..m).map(|c| a[r][idx[c]] * v[c]).sum::<f64>() * 2.0 / vnorm2)
            .collect();
        // A <- A - p vᵀ on those columns
        for r in 0..n {
            for c in 0..m {
                a[r][idx[c]] -= p[r] * v[c];
            }
        }
        let q: Vec<f64> = (0..n)
            .map(|c| (0..m).map(|r| v[r] * a[idx[r]][c]).sum::<f64>() * 2.0 / vnorm2)
            .collect();
        for r in 0..m {
            for c in 0..n {
                a[idx[r]][c] -= v[r] * q[c];
            }
        }
    }
    let d = (0..n).map(|i| a[i][i]).collect();
    let e = (0..n.saturating_sub(1))
        .map(|i| 0.5 * (a[i + 1][i] + a[i][i + 1]))
        .collect();
    (d, e)
}

/// Number of eigenvalues below `x` from the Sturm sequence of the
/// tridiagonal characteristic polynomial.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues in descending order by bisection on the characteristic
/// polynomial of the Householder tridiagonal form.
pub fn bisection_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let (d, e) = tridiagonalize(a);
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r =
            (if i > 0 { e[i - 1].abs() } else { 0.0 }) + (if i + 1 < n { e[i].abs() } else { 0.0 });
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    lo -= 1.0;
    hi += 1.0;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // k-th smallest: smallest x with count(x) > k
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid == a || mid == b {
                break;
            }
            if sturm_count(&d, &e, mid) > k {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    out.reverse();
    out
}

/// Descending eigenvalues of a symmetric 2×2 matrix. The smaller root
/// comes from the determinant to avoid cancellation.
pub fn closed_form_2x2(a: &[Vec<f64>]) -> [f64; 2] {
    let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    let big = mean + rad;
    let small = if big == 0.0 {
        0.0
    } else {
        (p * r - q * q) / big
    };
    [big, small]
}

/// Unit eigenvector of a symmetric 3×3 (or 2×2) matrix for a simple
/// eigenvalue, from cross products of rows of `A - λI`.
pub fn closed_form_eigenvector(a: &[Vec<f64>], lambda: f64) -> Vec<f64> {
    let n = a.len();
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[i][j] - if i == j { lambda } else { 0.0 })
                .collect()
        })
        .collect();
    let v = if n == 2 {
        // Pick the row with the larger norm; the eigenvector is orthogonal to it.
        let r = if m[0][0].abs() + m[0][1].abs() >= m[1][0].abs() + m[1][1].abs() {
            &m[0]
        } else {
            &m[1]
        };
        vec![-r[1], r[0]]
    } else {
        let cross = |u: &[f64], w: &[f64]| {
            vec![
                u[1] * w[2] - u[2] * w[1],
                u[2] * w[0] - u[0] * w[2],
                u[0] * w[1] - u[1] * w[0],
            ]
        };
        let candidates = [
            cross(&m[0], &m[1]),
            cross(&m[0], &m[2]),
            cross(&m[1], &m[2]),
        ];
        candidates
            .into_iter()
            .max_by(|x, y| {
                let nx: f64 = x.iter().map(|t| t * t).sum();
                let ny: f64 = y.iter().map(|t| t * t).sum();
                nx.total_cmp(&ny)
            })
            .unwrap()
    };
    let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.iter().map(|t| t / norm).collect()
}

/// Index computed from scratch for two or three indicators: min-max to
/// 1..10, population covariance, closed-form or bisection eigenvalues with
/// cross-product eigenvectors, `Σ_k ρ_k Σ_i l_ki² x_ij`.
pub fn brute_force_index(raw: &[Vec<f64>]) -> Vec<f64> {
    let n = raw.len();
    let m = raw[0].len();
    let x: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            row.iter()
                .map(|v| 1.0 + 9.0 * (v - lo) / (hi - lo))
                .collect()
        })
        .collect();
    let means: Vec<f64> = x.iter().map(|r| r.iter().sum::<f64>() / m as f64).collect();
    let cov: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    (0..m)
                        .map(|j| (x[a][j] - means[a]) * (x[b][j] - means[b]))
                        .sum::<f64>()
                        / m as f64
                })
                .collect()
        })
        .collect();
    let lambdas: Vec<f64> = if n == 2 {
        closed_form_2x2(&cov).to_vec()
    } else {
        bisection_eigenvalues(&cov)
    };
    let total: f64 = lambdas.iter().sum();
    let vectors: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&l| closed_form_eigenvector(&cov, l))
        .collect();
    (0..m)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let y: f64 = (0..n).map(|i| vectors[k][i].powi(2) * x[i][j]).sum();
                    lambdas[k] / total * y
                })
                .sum()
        })
        .collect()
}

/// Schema with `n` increasing indicators `X0..` spread over `pillars` pillars.
pub fn schema(n: usize, pillars: usize) -> IndicatorSchema {
    IndicatorSchema::new(
        (0..n)
            .map(|i| IndicatorSpec {
                code: format!("X{i}"),
                pillar: format!("P{}", i % pillars.max(1)),
                direction: if i % 5 == 4 {
                    Direction::Decreasing
                } else {
                    Direction::Increasing
                },
                label: String::new(),
            })
            .collect(),
    )
    .unwrap()
}

/// Correlated random data: one latent factor plus noise, different units
/// per indicator.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset {
    let latent: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut values = Matrix::zeros(n, m);
    for i in 0..n {
        let load = rng.gen_range(-1.0..1.0);
        let scale = 10f64.powf(rng.gen_range(-2.0..3.0));
        for j in 0..m {
            values[(i, j)] = scale * (load * latent[j] + rng.gen_range(-1.0..1.0));
        }
    }
    Dataset::complete(
        (0..m).map(|j| format!("e{j:04}")).collect(),
        (0..n).map(|i| format!("X{i}")).collect(),
        values,
    )
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}
