//! Dissimilarity-matrix diagnostics: Gram construction by double
//! centering, a cyclic Jacobi eigensolver for symmetric matrices, and the
//! negative eigenfraction / eigenratio / non-metricity fraction measures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MindError, Result};
use crate::space::DissimMatrix;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Exact triple enumeration up to this many bags; beyond it, seeded sampling.
const EXACT_TRIPLE_LIMIT: usize = 600;
const SAMPLED_TRIPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues of the double-centered Gram matrix, sorted descending.
    pub eigenvalues: Vec<f64>,
    pub nef: f64,
    pub ner: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricityReport {
    pub nmf: f64,
    pub violated: u64,
    pub total: u64,
    pub symmetry_deviation: f64,
    /// Seed of the triple sample when the matrix was too large to enumerate.
    pub sample_seed: Option<u64>,
}

fn require_square_symmetric(d: &DissimMatrix) -> Result<usize> {
    if d.n_rows() != d.n_cols() {
        return Err(MindError::IdMismatch(format!(
            "matrix is {}x{}, need square",
            d.n_rows(),
            d.n_cols()
        )));
    }
    let dev = d.max_asymmetry();
    if dev > SYMMETRY_TOLERANCE {
        return Err(MindError::NotSymmetric(dev));
    }
    Ok(d.n_rows())
}

/// G = -1/2 J D J with J = I - (1/n) 1 1^T, treating D's entries as
/// squared-distance-like values as delivered by the measure.
pub fn gram_from_dissim(d: &DissimMatrix) -> Result<Vec<f64>> {
    let n = require_square_symmetric(d)?;
    let mut row_means = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            row_means[i] += d.get(i, j);
        }
        row_means[i] /= n as f64;
    }
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = -0.5 * (d.get(i, j) - row_means[i] - row_means[j] + grand);
        }
    }
    Ok(g)
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, sorted
/// descending.
pub fn eig_sym(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), n * n);
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            dev = dev.max((matrix[i * n + j] - matrix[j * n + i]).abs());
        }
    }
    let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if dev > SYMMETRY_TOLERANCE * scale {
        return Err(MindError::NotSymmetric(dev));
    }
    let mut a = matrix.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[i * n + j] * a[i * n + j];
            }
        }
        if off.sqrt() <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigenvalues: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigenvalues.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(eigenvalues)
}

/// Negative eigenfraction and eigenratio of the double-centered Gram
/// matrix. Eigenvalues below 1e-10 of the largest magnitude are treated as
/// zero.
pub fn nef_ner(d: &DissimMatrix) -> Result<SpectrumReport> {
    let n = require_square_symmetric(d)?;
    let g = gram_from_dissim(d)?;
    let mut eigenvalues = eig_sym(&g, n)?;
    let lambda_max_abs = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = 1e-10 * lambda_max_abs;
    for v in &mut eigenvalues {
        if v.abs() < cutoff {
            *v = 0.0;
        }
    }
    let abs_sum: f64 = eigenvalues.iter().map(|v| v.abs()).sum();
    let neg_sum: f64 = eigenvalues.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    let nef = if abs_sum > 0.0 { neg_sum / abs_sum } else { 0.0 };
    let lambda_max = eigenvalues.first().copied().unwrap_or(0.0);
    let lambda_min = eigenvalues.last().copied().unwrap_or(0.0);
    let ner = if lambda_max > 0.0 {
        (lambda_min.min(0.0)).abs() / lambda_max
    } else {
        0.0
    };
    Ok(SpectrumReport {
        eigenvalues,
        nef,
        ner,
        source: format!("{}/{}", d.measure_tag, d.symmetrization_tag),
    })
}

/// Fraction of triangle inequalities violated, counting 3 inequalities per
/// unordered triple. Asymmetric input is first averaged, with the deviation
/// recorded.
pub fn nmf(d: &DissimMatrix, sample_seed: u64) -> Result<MetricityReport> {
    if d.n_rows() != d.n_cols() {
        return Err(MindError::IdMismatch(format!(
            "matrix is {}x{}, need square",
            d.n_rows(),
            d.n_cols()
        )));
    }
    let n = d.n_rows();
    let deviation = d.max_asymmetry();
    let sym = |i: usize, j: usize| 0.5 * (d.get(i, j) + d.get(j, i));
    let max_entry = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| sym(i, j))
        .fold(0.0f64, f64::max);
    let eps = 1e-12 * max_entry;

    // 3 checks per unordered triple {i,j,k}: each side vs the sum of the
    // other two.
    let check = |i: usize, j: usize, k: usize| -> u64 {
        let dij = sym(i, j);
        let dik = sym(i, k);
        let djk = sym(j, k);
        let mut violated = 0;
        if dik > dij + djk + eps {
            violated += 1;
        }
        if dij > dik + djk + eps {
            violated += 1;
        }
        if djk > dij + dik + eps {
            violated += 1;
        }
        violated
    };

    if n < 3 {
        return Ok(MetricityReport {
            nmf: 0.0,
            violated: 0,
            total: 0,
            symmetry_deviation: deviation,
            sample_seed: None,
        });
    }

    let (violated, total, seed_used) = if n <= EXACT_TRIPLE_LIMIT {
        let mut violated = 0u64;
        let mut total = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    violated += check(i, j, k);
                    total += 3;
                }
            }
        }
        (violated, total, None)
    } else {
        let mut rng = ChaCha20Rng::seed_from_u64(sample_seed);
        let mut violated = 0u64;
        let mut total = 0u64;
        for _ in 0..SAMPLED_TRIPLES {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            while j == i {
                j = rng.gen_range(0..n);
            }
            let mut k = rng.gen_range(0..n);
            while k == i || k == j {
                k = rng.gen_range(0..n);
            }
            violated += check(i, j, k);
            total += 3;
        }
        (violated, total, Some(sample_seed))
    };

    Ok(MetricityReport {
        nmf: if total > 0 {
            violated as f64 / total as f64
        } else {
            0.0
        },
        violated,
        total,
        symmetry_deviation: deviation,
        sample_seed: seed_used,
    })
}
