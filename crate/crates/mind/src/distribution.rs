//! Bag dissimilarities that treat a bag as a distribution of instances:
//! Mahalanobis between per-bag Gaussian fits, Cauchy-Schwarz divergence
//! between kernel density sums, and the earth mover's distance with an
//! exact transportation solver.

use serde::{Deserialize, Serialize};

use crate::data::Bag;
use crate::error::{MindError, Result};
use crate::pointset::sq_euclidean_unchecked;

/// Instance cap for EMD; bigger bags are rejected rather than approximated.
pub const DEFAULT_EMD_CAP: usize = 512;

/// Auto-ridge trigger: Cholesky-based condition proxy above this adds ridge.
const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: Vec<f64>,
    /// Row-major d x d maximum-likelihood covariance (divide by n).
    pub covariance: Vec<f64>,
    pub dim: usize,
}

impl GaussianSummary {
    pub fn fit(bag: &Bag) -> Result<Self> {
        if bag.instances.is_empty() {
            return Err(MindError::EmptyBag(bag.id.clone()));
        }
        let d = bag.instances[0].dim();
        let n = bag.size() as f64;
        let mut mean = vec![0.0; d];
        for inst in &bag.instances {
            for (m, v) in mean.iter_mut().zip(&inst.values) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut cov = vec![0.0; d * d];
        for inst in &bag.instances {
            for a in 0..d {
                let da = inst.values[a] - mean[a];
                for b in a..d {
                    cov[a * d + b] += da * (inst.values[b] - mean[b]);
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = cov[a * d + b] / n;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        Ok(GaussianSummary {
            mean,
            covariance: cov,
            dim: d,
        })
    }
}

/// In-place Cholesky factorization (lower triangle). Returns the diagonal
/// of L, or None when the matrix is not positive definite.
fn cholesky(matrix: &mut [f64], d: usize) -> Option<Vec<f64>> {
    let mut diag = Vec::with_capacity(d);
    for j in 0..d {
        let mut sum = matrix[j * d + j];
        for k in 0..j {
            sum -= matrix[j * d + k] * matrix[j * d + k];
        }
        if sum <= 0.0 {
            return None;
        }
        let ljj = sum.sqrt();
        matrix[j * d + j] = ljj;
        diag.push(ljj);
        for i in j + 1..d {
            let mut s = matrix[i * d + j];
            for k in 0..j {
                s -= matrix[i * d + k] * matrix[j * d + k];
            }
            matrix[i * d + j] = s / ljj;
        }
    }
    Some(diag)
}

/// Solves L L^T z = b given the Cholesky factor in the lower triangle.
fn cholesky_solve(factor: &[f64], d: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..d {
        for k in 0..i {
            y[i] -= factor[i * d + k] * y[k];
        }
        y[i] /= factor[i * d + i];
    }
    for i in (0..d).rev() {
        for k in i + 1..d {
            y[i] -= factor[k * d + i] * y[k];
        }
        y[i] /= factor[i * d + i];
    }
    y
}

fn try_solve_quadform(pooled: &[f64], d: usize, diff: &[f64]) -> Option<f64> {
    let mut factor = pooled.to_vec();
    let diag = cholesky(&mut factor, d)?;
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().cloned().fold(0.0f64, f64::max);
    // cond(A) >= (max L_jj / min L_jj)^2 for the Cholesky factor.
    if lo <= 0.0 || (hi / lo) * (hi / lo) > CONDITION_LIMIT {
        return None;
    }
    let z = cholesky_solve(&factor, d, diff);
    Some(diff.iter().zip(&z).map(|(a, b)| a * b).sum())
}

/// Mahalanobis distance between per-bag Gaussian fits with pooled
/// covariance (mu_i - mu_j)^T (S/2 + S/2 + ridge I)^-1 (mu_i - mu_j).
/// When the pooled matrix is ill-conditioned at the requested ridge, an
/// automatic ridge of 1e-6 * trace / d is added before giving up.
pub fn mahalanobis_dissim(b_i: &Bag, b_j: &Bag, ridge: f64) -> Result<f64> {
    let gi = GaussianSummary::fit(b_i)?;
    let gj = GaussianSummary::fit(b_j)?;
    if gi.dim != gj.dim {
        return Err(MindError::DimensionMismatch(format!(
            "bags {} vs {}",
            b_i.id, b_j.id
        )));
    }
    let d = gi.dim;
    let diff: Vec<f64> = gi.mean.iter().zip(&gj.mean).map(|(a, b)| a - b).collect();
    if diff.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut pooled = vec![0.0; d * d];
    for k in 0..d * d {
        pooled[k] = 0.5 * gi.covariance[k] + 0.5 * gj.covariance[k];
    }
    let trace: f64 = (0..d).map(|k| pooled[k * d + k]).sum();
    for k in 0..d {
        pooled[k * d + k] += ridge;
    }
    if let Some(v) = try_solve_quadform(&pooled, d, &diff) {
        return Ok(v.max(0.0));
    }
    let auto = 1e-6 * trace / d as f64;
    for k in 0..d {
        pooled[k * d + k] += auto;
    }
    try_solve_quadform(&pooled, d, &diff)
        .map(|v| v.max(0.0))
        .ok_or_else(|| MindError::SingularCovariance(b_i.id.clone(), b_j.id.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CSParams {
    pub sigma: f64,
}

impl CSParams {
    /// Default kernel width: square root of the instance dimensionality.
    pub fn default_for_dim(dim: usize) -> Self {
        CSParams {
            sigma: (dim as f64).sqrt(),
        }
    }
}

/// Summed Gaussian kernel between two bags at width `sigma`, without the
/// (2 pi sigma^2)^(d/2) normalizer. With a shared sigma the normalizers of
/// numerator and denominator of the divergence cancel exactly.
fn kernel_sum(b_i: &Bag, b_j: &Bag, sigma: f64) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut total = 0.0;
    for x in &b_i.instances {
        for y in &b_j.instances {
            total += (-sq_euclidean_unchecked(&x.values, &y.values) * inv).exp();
        }
    }
    total
}

/// Cauchy-Schwarz divergence between kernel density estimates of the two
/// bags, single shared width: -log(K_2s(i,j) / sqrt(K_2s(i,i) K_2s(j,j))).
pub fn cs_divergence(b_i: &Bag, b_j: &Bag, params: CSParams) -> Result<f64> {
    for bag in [b_i, b_j] {
        if bag.instances.is_empty() {
            return Err(MindError::EmptyBag(bag.id.clone()));
        }
    }
    if b_i.instances[0].dim() != b_j.instances[0].dim() {
        return Err(MindError::DimensionMismatch(format!(
            "bags {} vs {}",
            b_i.id, b_j.id
        )));
    }
    assert!(params.sigma > 0.0, "sigma must be positive");
    let width = 2.0 * params.sigma;
    let cross = kernel_sum(b_i, b_j, width);
    if cross == 0.0 {
        return Err(MindError::KernelUnderflow);
    }
    let self_i = kernel_sum(b_i, b_i, width);
    let self_j = kernel_sum(b_j, b_j, width);
    Ok(-(cross / (self_i * self_j).sqrt()).ln())
}

/// A feasible flow between two uniform-mass point sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    /// (source index, target index, mass) triples with positive mass.
    pub flows: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn total_mass(&self) -> f64 {
        self.flows.iter().map(|f| f.2).sum()
    }
}

/// Exact solver for the balanced transportation problem, via the
/// transportation simplex (northwest-corner start, most-negative reduced
/// cost pivoting on the basis tree).
pub fn solve_transport(
    supplies: &[f64],
    demands: &[f64],
    costs: &[Vec<f64>],
) -> Result<(f64, TransportPlan)> {
    let m = supplies.len();
    let n = demands.len();
    assert!(m > 0 && n > 0, "empty transport problem");
    assert_eq!(costs.len(), m, "cost matrix rows");
    for row in costs {
        assert_eq!(row.len(), n, "cost matrix cols");
        for &c in row {
            assert!(c.is_finite() && c >= 0.0, "costs must be finite and non-negative");
        }
    }
    let supply_total: f64 = supplies.iter().sum();
    let demand_total: f64 = demands.iter().sum();
    if (supply_total - demand_total).abs() > 1e-9 {
        return Err(MindError::UnbalancedTransport {
            supply: supply_total,
            demand: demand_total,
        });
    }

    // Northwest corner initial basic feasible solution; degenerate zero
    // allocations stay basic so the basis always has m + n - 1 cells.
    let mut flow = vec![vec![0.0f64; n]; m];
    let mut basic = vec![vec![false; n]; m];
    let mut remaining_supply = supplies.to_vec();
    let mut remaining_demand = demands.to_vec();
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let amount = remaining_supply[i].min(remaining_demand[j]);
        flow[i][j] = amount;
        basic[i][j] = true;
        remaining_supply[i] -= amount;
        remaining_demand[j] -= amount;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if remaining_supply[i] <= remaining_demand[j] && i < m - 1 {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_iterations = 200 * (m + n) * (m + n).max(16);
    for _ in 0..max_iterations {
        // Potentials from the basis tree: u[0] = 0, propagate along cells.
        let mut u = vec![f64::NAN; m];
        let mut v = vec![f64::NAN; n];
        u[0] = 0.0;
        let mut stack = vec![(0usize, true)];
        while let Some((node, is_row)) = stack.pop() {
            if is_row {
                for col in 0..n {
                    if basic[node][col] && v[col].is_nan() {
                        v[col] = costs[node][col] - u[node];
                        stack.push((col, false));
                    }
                }
            } else {
                for row in 0..m {
                    if basic[row][node] && u[row].is_nan() {
                        u[row] = costs[row][node] - v[node];
                        stack.push((row, true));
                    }
                }
            }
        }

        // Entering cell: most negative reduced cost.
        let mut best = (-1e-12, None);
        for r in 0..m {
            for c in 0..n {
                if !basic[r][c] {
                    let rc = costs[r][c] - u[r] - v[c];
                    if rc < best.0 {
                        best = (rc, Some((r, c)));
                    }
                }
            }
        }
        let (er, ec) = match best.1 {
            Some(cell) => cell,
            None => {
                let mut cost = 0.0;
                let mut flows = Vec::new();
                for r in 0..m {
                    for c in 0..n {
                        if flow[r][c] > 0.0 {
                            cost += flow[r][c] * costs[r][c];
                            flows.push((r, c, flow[r][c]));
                        }
                    }
                }
                return Ok((cost, TransportPlan { flows }));
            }
        };

        // Unique alternating cycle through the entering cell: path from row
        // er to column ec in the basis tree, found by depth-first search.
        let path = find_tree_path(&basic, m, n, er, ec);
        // path alternates (row, col) basic cells starting at a cell in row
        // er; even positions gain flow's sign partner: entering cell gains,
        // first path cell loses, and so on.
        let mut theta = f64::INFINITY;
        let mut leave = None;
        for (idx, &(r, c)) in path.iter().enumerate() {
            if idx % 2 == 0 && flow[r][c] <= theta {
                theta = flow[r][c];
                leave = Some((r, c));
            }
        }
        let (lr, lc) = leave.expect("cycle must contain a leaving cell");
        for (idx, &(r, c)) in path.iter().enumerate() {
            if idx % 2 == 0 {
                flow[r][c] -= theta;
            } else {
                flow[r][c] += theta;
            }
        }
        flow[er][ec] += theta;
        basic[er][ec] = true;
        basic[lr][lc] = false;
        flow[lr][lc] = 0.0;
    }

    let objective: f64 = (0..m)
        .map(|r| (0..n).map(|c| flow[r][c] * costs[r][c]).sum::<f64>())
        .sum();
    Err(MindError::TransportNonConvergence {
        iterations: max_iterations,
        objective,
    })
}

/// Path of basic cells from row `start_row` to column `end_col` through the
/// spanning tree formed by the basic cells. The path alternates cells that
/// share rows and columns, which is exactly the pivot cycle minus the
/// entering cell.
fn find_tree_path(
    basic: &[Vec<bool>],
    m: usize,
    n: usize,
    start_row: usize,
    end_col: usize,
) -> Vec<(usize, usize)> {
    // DFS over (row node) -> basic cell -> (col node) -> basic cell -> ...
    let mut stack = vec![(start_row, usize::MAX, vec![])];
    let mut visited_rows = vec![false; m];
    let mut visited_cols = vec![false; n];
    visited_rows[start_row] = true;
    while let Some((row, _, path)) = stack.pop() {
        for col in 0..n {
            if basic[row][col] && !visited_cols[col] {
                let mut p = path.clone();
                p.push((row, col));
                if col == end_col {
                    return p;
                }
                visited_cols[col] = true;
                for next_row in 0..m {
                    if basic[next_row][col] && !visited_rows[next_row] {
                        visited_rows[next_row] = true;
                        let mut q = p.clone();
                        q.push((next_row, col));
                        stack.push((next_row, col, q));
                    }
                }
            }
        }
    }
    panic!("basis is not a spanning tree");
}

/// Earth mover's distance between two bags with uniform instance masses and
/// plain Euclidean ground distance.
pub fn emd(b_i: &Bag, b_j: &Bag) -> Result<(f64, TransportPlan)> {
    emd_capped(b_i, b_j, DEFAULT_EMD_CAP)
}

pub fn emd_capped(b_i: &Bag, b_j: &Bag, cap: usize) -> Result<(f64, TransportPlan)> {
    for bag in [b_i, b_j] {
        if bag.instances.is_empty() {
            return Err(MindError::EmptyBag(bag.id.clone()));
        }
        if bag.size() > cap {
            return Err(MindError::BagTooLargeForEmd {
                id: bag.id.clone(),
                count: bag.size(),
                cap,
            });
        }
    }
    if b_i.instances[0].dim() != b_j.instances[0].dim() {
        return Err(MindError::DimensionMismatch(format!(
            "bags {} vs {}",
            b_i.id, b_j.id
        )));
    }
    let ni = b_i.size();
    let nj = b_j.size();
    let supplies = vec![1.0 / ni as f64; ni];
    let demands = vec![1.0 / nj as f64; nj];
    let costs: Vec<Vec<f64>> = b_i
        .instances
        .iter()
        .map(|x| {
            b_j.instances
                .iter()
                .map(|y| sq_euclidean_unchecked(&x.values, &y.values).sqrt())
                .collect()
        })
        .collect();
    solve_transport(&supplies, &demands, &costs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Bag, Instance, Label};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn bag1d(id: &str, values: &[f64]) -> Bag {
        Bag::new(
            id,
            values.iter().map(|&v| Instance::new(vec![v])).collect(),
            Label::Unknown,
        )
    }

    fn random_bag(id: &str, rng: &mut ChaCha20Rng, dim: usize, max_instances: usize) -> Bag {
        let count = rng.gen_range(1..=max_instances);
        let instances = (0..count)
            .map(|_| Instance::new((0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect()))
            .collect();
        Bag::new(id, instances, Label::Unknown)
    }

    #[test]
    fn mahalanobis_identical_bags_is_zero() {
        let b = bag1d("b", &[0.0, 2.0]);
        assert_eq!(mahalanobis_dissim(&b, &b, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn mahalanobis_hand_worked_1d() {
        // mu diff 4, each ML variance 1, pooled 1 -> 16.
        let b1 = bag1d("b1", &[0.0, 2.0]);
        let b2 = bag1d("b2", &[4.0, 6.0]);
        assert_abs_diff_eq!(mahalanobis_dissim(&b1, &b2, 0.0).unwrap(), 16.0, epsilon = 1e-12);
    }

    #[test]
    fn mahalanobis_is_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_bag("a", &mut rng, 3, 6);
            let b = random_bag("b", &mut rng, 3, 6);
            let fwd = mahalanobis_dissim(&a, &b, 1e-3).unwrap();
            let bwd = mahalanobis_dissim(&b, &a, 1e-3).unwrap();
            assert_eq!(fwd, bwd);
        }
    }

    #[test]
    fn mahalanobis_affine_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let map = [[2.0, 0.5], [-1.0, 1.5]]; // invertible
        let shift = [3.0, -7.0];
        let apply = |bag: &Bag| {
            let instances = bag
                .instances
                .iter()
                .map(|inst| {
                    let x = inst.values[0];
                    let y = inst.values[1];
                    Instance::new(vec![
                        map[0][0] * x + map[0][1] * y + shift[0],
                        map[1][0] * x + map[1][1] * y + shift[1],
                    ])
                })
                .collect();
            Bag::new(bag.id.clone(), instances, bag.label)
        };
        for _ in 0..10 {
            let mut a = random_bag("a", &mut rng, 2, 8);
            let mut b = random_bag("b", &mut rng, 2, 8);
            // need enough instances for a well-conditioned covariance
            while a.size() < 4 {
                a.instances.push(Instance::new(vec![
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                ]));
            }
            while b.size() < 4 {
                b.instances.push(Instance::new(vec![
                    rng.gen_range(-5.0..5.0),
                    rng.gen_range(-5.0..5.0),
                ]));
            }
            let before = mahalanobis_dissim(&a, &b, 0.0).unwrap();
            let after = mahalanobis_dissim(&apply(&a), &apply(&b), 0.0).unwrap();
            let rel = (before - after).abs() / before.abs().max(1e-30);
            assert!(rel < 1e-6, "rel error {rel}");
        }
    }

    #[test]
    fn cs_divergence_identical_bags_is_zero() {
        let b = bag1d("b", &[0.5, 1.0, 2.5]);
        let d = cs_divergence(&b, &b, CSParams { sigma: 1.0 }).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cs_divergence_single_instance_closed_form() {
        // two unit-mass Gaussians at distance m: divergence m^2 / (8 sigma^2)
        let b1 = bag1d("b1", &[0.0]);
        let b2 = bag1d("b2", &[2.0]);
        let d = cs_divergence(&b1, &b2, CSParams { sigma: 1.0 }).unwrap();
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn cs_divergence_symmetric_and_nonnegative() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..30 {
            let a = random_bag("a", &mut rng, 2, 5);
            let b = random_bag("b", &mut rng, 2, 5);
            let p = CSParams { sigma: 1.5 };
            let fwd = cs_divergence(&a, &b, p).unwrap();
            let bwd = cs_divergence(&b, &a, p).unwrap();
            assert_abs_diff_eq!(fwd, bwd, epsilon = 1e-12);
            assert!(fwd >= -1e-9, "negative divergence {fwd}");
        }
    }

    #[test]
    fn cs_divergence_underflow_error() {
        let b1 = bag1d("b1", &[0.0]);
        let b2 = bag1d("b2", &[1e9]);
        assert!(matches!(
            cs_divergence(&b1, &b2, CSParams { sigma: 1e-3 }),
            Err(MindError::KernelUnderflow)
        ));
    }

    #[test]
    fn emd_trivial_cases() {
        let b = bag1d("b", &[0.0, 1.0, 2.0]);
        let (cost, plan) = emd(&b, &b).unwrap();
        assert_abs_diff_eq!(cost, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.total_mass(), 1.0, epsilon = 1e-12);

        let (cost, _) = emd(&bag1d("a", &[0.0]), &bag1d("b", &[1.0])).unwrap();
        assert_abs_diff_eq!(cost, 1.0, epsilon = 1e-12);

        // {0,2} vs {1}: each half-mass moves distance 1.
        let (cost, plan) = emd(&bag1d("a", &[0.0, 2.0]), &bag1d("b", &[1.0])).unwrap();
        assert_abs_diff_eq!(cost, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(plan.total_mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn emd_rejects_oversized_bags() {
        let big = Bag::new(
            "big",
            (0..4).map(|k| Instance::new(vec![k as f64])).collect(),
            Label::Unknown,
        );
        let small = bag1d("s", &[0.0]);
        assert!(matches!(
            emd_capped(&big, &small, 3),
            Err(MindError::BagTooLargeForEmd { .. })
        ));
    }

    #[test]
    fn transport_1x1() {
        let (cost, plan) = solve_transport(&[1.0], &[1.0], &[vec![7.0]]).unwrap();
        assert_abs_diff_eq!(cost, 7.0, epsilon = 1e-12);
        assert_eq!(plan.flows, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn transport_2x1() {
        let (cost, _) = solve_transport(&[0.5, 0.5], &[1.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert_abs_diff_eq!(cost, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn transport_rejects_unbalanced() {
        assert!(matches!(
            solve_transport(&[1.0], &[0.5], &[vec![1.0]]),
            Err(MindError::UnbalancedTransport { .. })
        ));
    }

    /// Brute-force transportation oracle: enumerate all basic solutions
    /// (choices of m+n-1 cells), solve the balance equations, keep the
    /// feasible one with minimal cost.
    pub(crate) fn transport_oracle(supplies: &[f64], demands: &[f64], costs: &[Vec<f64>]) -> f64 {
        let m = supplies.len();
        let n = demands.len();
        let cells: Vec<(usize, usize)> = (0..m)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .collect();
        let k = m + n - 1;
        let mut best = f64::INFINITY;
        let mut chosen = vec![0usize; k];
        enumerate_combinations(cells.len(), k, &mut chosen, 0, 0, &mut |combo| {
            let subset: Vec<(usize, usize)> = combo.iter().map(|&idx| cells[idx]).collect();
            if let Some(flow) = solve_basis(&subset, supplies, demands) {
                if flow.iter().all(|&f| f >= -1e-10) {
                    let cost: f64 = subset
                        .iter()
                        .zip(&flow)
                        .map(|(&(r, c), &f)| f * costs[r][c])
                        .sum();
                    if cost < best {
                        best = cost;
                    }
                }
            }
        });
        best
    }

    fn enumerate_combinations(
        total: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        depth: usize,
        start: usize,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(chosen);
            return;
        }
        for idx in start..total {
            chosen[depth] = idx;
            enumerate_combinations(total, k, chosen, depth + 1, idx + 1, visit);
        }
    }

    /// Solve supply/demand balance restricted to the given cells via dense
    /// least squares-free Gaussian elimination; None when singular.
    fn solve_basis(cells: &[(usize, usize)], supplies: &[f64], demands: &[f64]) -> Option<Vec<f64>> {
        let m = supplies.len();
        let n = demands.len();
        let k = cells.len();
        // equations: per-row sums = supply, per-col sums = demand (drop last,
        // redundant); unknowns: flow per chosen cell.
        let rows = m + n - 1;
        let mut a = vec![vec![0.0f64; k + 1]; rows];
        for (idx, &(r, c)) in cells.iter().enumerate() {
            a[r][idx] = 1.0;
            if c < n - 1 {
                a[m + c][idx] = 1.0;
            }
        }
        for r in 0..m {
            a[r][k] = supplies[r];
        }
        for c in 0..n - 1 {
            a[m + c][k] = demands[c];
        }
        // Gaussian elimination with partial pivoting; system is square (k = rows).
        for col in 0..k {
            let pivot = (col..rows).max_by(|&x, &y| {
                a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap()
            })?;
            if a[pivot][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, pivot);
            for row in 0..rows {
                if row != col && a[row][col] != 0.0 {
                    let factor = a[row][col] / a[col][col];
                    for cc in col..=k {
                        a[row][cc] -= factor * a[col][cc];
                    }
                }
            }
        }
        Some((0..k).map(|idx| a[idx][k] / a[idx][idx]).collect())
    }

    #[test]
    fn transport_matches_enumeration_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        for _ in 0..50 {
            let m = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=3);
            let mut supplies: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = supplies.iter().sum();
            for s in &mut supplies {
                *s /= total;
            }
            let mut demands: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = demands.iter().sum();
            for d in &mut demands {
                *d /= total;
            }
            let costs: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect())
                .collect();
            let (cost, plan) = solve_transport(&supplies, &demands, &costs).unwrap();
            let oracle = transport_oracle(&supplies, &demands, &costs);
            assert_abs_diff_eq!(cost, oracle, epsilon = 1e-9);
            assert_abs_diff_eq!(plan.total_mass(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn emd_triangle_inequality_and_symmetry() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        for _ in 0..20 {
            let a = random_bag("a", &mut rng, 2, 4);
            let b = random_bag("b", &mut rng, 2, 4);
            let c = random_bag("c", &mut rng, 2, 4);
            let ab = emd(&a, &b).unwrap().0;
            let ba = emd(&b, &a).unwrap().0;
            let bc = emd(&b, &c).unwrap().0;
            let ac = emd(&a, &c).unwrap().0;
            assert_abs_diff_eq!(ab, ba, epsilon = 1e-9);
            assert!(ac <= ab + bc + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn emd_invariant_under_instance_permutation(
            points in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 2..5),
            other in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 2), 1..5),
            rot in 0usize..4,
        ) {
            let mut shuffled = points.clone();
            shuffled.rotate_left(rot % points.len());
            let make = |id: &str, pts: &[Vec<f64>]| {
                Bag::new(id, pts.iter().cloned().map(Instance::new).collect(), Label::Unknown)
            };
            let b = make("b", &other);
            let c1 = emd(&make("a", &points), &b).unwrap().0;
            let c2 = emd(&make("a2", &shuffled), &b).unwrap().0;
            prop_assert!((c1 - c2).abs() < 1e-9);
        }
    }
}
