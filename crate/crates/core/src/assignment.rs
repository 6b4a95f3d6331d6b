//! Exact minimum-cost assignment of sample points to grid slots under the
//! squared Euclidean cost, with dual potentials and cyclical-monotonicity checks.
//!
//! The solver is a dense shortest-augmenting-path method (O(n³) worst case).
//! `|x − u|²` and `−2⟨x, u⟩` differ only by terms that separate over rows and
//! columns, so the duals are converted to the inner-product normalization used
//! by the convex potential.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{param, Result};
use crate::grid::SphericalGrid;
use crate::points::PointSet;
use crate::rng::stream;
use crate::scalar::{dot, Scalar};

/// Optimal coupling of a sample with the slots of a target point set.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult<T> {
    /// `sigma[i]` is the slot given to sample point `i`.
    pub sigma: Vec<usize>,
    /// `ψ_j` per slot, with `φ_i + ψ_j ≥ ⟨x_i, u_j⟩`, equality along `sigma`.
    pub slot_duals: Vec<T>,
    /// `φ_i` per sample point.
    pub sample_duals: Vec<T>,
    /// `Σ_i |x_i − u_{σ(i)}|²`.
    pub total_cost: T,
    /// Dual objective in the squared-distance normalization; equals `total_cost`.
    pub dual_objective: T,
    /// Pairs of sample indices with identical coordinates, if any.
    pub duplicate_samples: Vec<(usize, usize)>,
}

impl<T: Scalar> AssignmentResult<T> {
    /// Inverse permutation: slot → sample index.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![usize::MAX; self.sigma.len()];
        for (i, &s) in self.sigma.iter().enumerate() {
            inv[s] = i;
        }
        inv
    }

    /// Largest violation of dual feasibility `⟨x_i,u_j⟩ − φ_i − ψ_j ≤ 0` and of
    /// complementary slackness along `sigma`, over all pairs.
    pub fn max_dual_violation(&self, sample: &PointSet<T>, slots: &PointSet<T>) -> T {
        let mut worst = T::zero();
        for i in 0..sample.len() {
            for j in 0..slots.len() {
                let gap = dot(sample.row(i), slots.row(j)) - self.sample_duals[i] - self.slot_duals[j];
                let viol = if self.sigma[i] == j { gap.abs() } else { gap };
                if viol > worst {
                    worst = viol;
                }
            }
        }
        worst
    }
}

/// Solves the assignment between `sample` and the `n` slots of `grid`
/// (origin atom expanded into `n_0` identical slots).
pub fn solve<T: Scalar>(sample: &PointSet<T>, grid: &SphericalGrid<T>) -> Result<AssignmentResult<T>> {
    if sample.len() != grid.n() {
        return Err(param!("sample has {} points but the grid has {} slots", sample.len(), grid.n()));
    }
    if sample.dim() != grid.dim() {
        return Err(param!("sample dimension {} differs from grid dimension {}", sample.dim(), grid.dim()));
    }
    solve_slots(sample, &grid.slots())
}

/// Solves the square assignment between two point sets of equal size.
///
/// Ties are broken deterministically: among equally good augmenting columns
/// the lowest index wins, rows are inserted in index order.
pub fn solve_slots<T: Scalar>(sample: &PointSet<T>, targets: &PointSet<T>) -> Result<AssignmentResult<T>> {
    let n = sample.len();
    if n != targets.len() {
        return Err(param!("cannot assign {} points to {} slots", n, targets.len()));
    }
    if n == 0 {
        return Err(param!("empty assignment problem"));
    }
    if sample.dim() != targets.dim() {
        return Err(param!("point dimensions differ: {} vs {}", sample.dim(), targets.dim()));
    }

    let mut cost = vec![T::zero(); n * n];
    for i in 0..n {
        let x = sample.row(i);
        for j in 0..n {
            cost[i * n + j] = crate::scalar::dist2(x, targets.row(j));
        }
    }

    let (sigma, col_duals) = shortest_augmenting_path(&cost, n)?;
    // Row duals a_i = c_{iσ(i)} − v_{σ(i)}; from a_i + v_j ≤ |x_i|² + |u_j|² − 2⟨x_i,u_j⟩
    // the inner-product duals are φ_i = (|x_i|² − a_i)/2 and ψ_j = (|u_j|² − v_j)/2.
    let half = T::lit(0.5);
    let sample_duals: Vec<T> = (0..n)
        .map(|i| {
            let x = sample.row(i);
            let a = cost[i * n + sigma[i]] - col_duals[sigma[i]];
            (dot(x, x) - a) * half
        })
        .collect();
    let slot_duals: Vec<T> = (0..n)
        .map(|j| {
            let t = targets.row(j);
            (dot(t, t) - col_duals[j]) * half
        })
        .collect();

    let sq_x: T = sample.rows().map(|x| dot(x, x)).sum();
    let sq_u: T = targets.rows().map(|t| dot(t, t)).sum();
    let two = T::lit(2.0);
    let total_cost = sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| crate::scalar::dist2(sample.row(i), targets.row(j)))
        .sum();
    let dual_sum: T = sample_duals.iter().copied().sum::<T>() + slot_duals.iter().copied().sum::<T>();
    let dual_objective = sq_x + sq_u - two * dual_sum;

    Ok(AssignmentResult {
        sigma,
        slot_duals,
        sample_duals,
        total_cost,
        dual_objective,
        duplicate_samples: duplicate_pairs(sample),
    })
}

const UNASSIGNED: usize = usize::MAX;

/// Dense shortest-augmenting-path solver (Jonker–Volgenant style: column
/// reduction to seed a partial matching, then one Dijkstra search per free
/// row). Returns the row → column assignment and the column duals `v`, for
/// which every assigned column minimizes `c_ij − v_j` over its row.
fn shortest_augmenting_path<T: Scalar>(cost: &[T], n: usize) -> Result<(Vec<usize>, Vec<T>)> {
    let mut v = vec![T::zero(); n];
    let mut row_of_col = vec![UNASSIGNED; n];
    let mut col_of_row = vec![UNASSIGNED; n];

    // Column reduction, last column first.
    for j in (0..n).rev() {
        let mut best = 0usize;
        let mut best_c = cost[j];
        for i in 1..n {
            let c = cost[i * n + j];
            if c < best_c {
                best_c = c;
                best = i;
            }
        }
        v[j] = best_c;
        if col_of_row[best] == UNASSIGNED {
            col_of_row[best] = j;
            row_of_col[j] = best;
        }
    }

    let mut d = vec![T::zero(); n];
    let mut pred = vec![0usize; n];
    let mut cols: Vec<usize> = (0..n).collect();
    for start in 0..n {
        if col_of_row[start] != UNASSIGNED {
            continue;
        }
        let row = &cost[start * n..(start + 1) * n];
        for j in 0..n {
            cols[j] = j;
            d[j] = row[j] - v[j];
            pred[j] = start;
        }
        // cols[..lo] are final (READY), cols[lo..hi] are at the current
        // minimum distance (SCAN), cols[hi..] are still open (TODO).
        let mut lo = 0usize;
        let mut hi = 0usize;
        let mut ready = 0usize;
        let mut found = None;
        let mut mind = T::zero();
        while found.is_none() {
            if lo == hi {
                ready = lo;
                mind = d[cols[hi]];
                hi += 1;
                for k in hi..n {
                    let j = cols[k];
                    let dj = d[j];
                    if dj <= mind {
                        if dj < mind {
                            hi = lo;
                            mind = dj;
                        }
                        cols[k] = cols[hi];
                        cols[hi] = j;
                        hi += 1;
                    }
                }
                // keep SCAN in index order so tie-breaking does not depend on swaps
                cols[lo..hi].sort_unstable();
                found = cols[lo..hi].iter().copied().find(|&j| row_of_col[j] == UNASSIGNED);
                if found.is_some() {
                    break;
                }
            }
            let j = cols[lo];
            lo += 1;
            let i = row_of_col[j];
            let ri = &cost[i * n..(i + 1) * n];
            let h = ri[j] - v[j] - mind;
            let mut k = hi;
            while k < n {
                let jj = cols[k];
                let cred = ri[jj] - v[jj] - h;
                if cred < d[jj] {
                    d[jj] = cred;
                    pred[jj] = i;
                    if cred <= mind {
                        if row_of_col[jj] == UNASSIGNED {
                            found = Some(jj);
                            break;
                        }
                        cols[k] = cols[hi];
                        cols[hi] = jj;
                        hi += 1;
                    }
                }
                k += 1;
            }
        }
        let end = found.expect("dense problems always admit an augmenting path");
        for &j in &cols[..ready] {
            v[j] = v[j] + d[j] - mind;
        }
        // augment along pred
        let mut j = end;
        let mut steps = 0;
        loop {
            let i = pred[j];
            row_of_col[j] = i;
            let prev = std::mem::replace(&mut col_of_row[i], j);
            if i == start {
                break;
            }
            j = prev;
            steps += 1;
            if steps > n {
                return Err(crate::Error::Numerical("augmenting path does not terminate".into()));
            }
        }
    }
    Ok((col_of_row, v))
}

fn duplicate_pairs<T: Scalar>(sample: &PointSet<T>) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    let cmp_rows = |a: &usize, b: &usize| {
        let (ra, rb) = (sample.row(*a), sample.row(*b));
        for (x, y) in ra.iter().zip(rb) {
            match x.partial_cmp(y) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        a.cmp(b)
    };
    order.sort_by(cmp_rows);
    order
        .windows(2)
        .filter(|w| sample.row(w[0]) == sample.row(w[1]))
        .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
        .collect()
}

/// Outcome of a cyclical-monotonicity audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityCheck<T> {
    pub passed: bool,
    /// Smallest `Σ⟨x_i,u_{σ(i)}⟩ − Σ⟨x_i,u_{σ(τ(i))}⟩` over the cycles tried.
    pub worst_slack: T,
    pub cycles_checked: usize,
}

fn cycle_slack<T: Scalar>(cycle: &[usize], sigma: &[usize], sample: &PointSet<T>, slots: &PointSet<T>) -> T {
    let k = cycle.len();
    let mut s = T::zero();
    for a in 0..k {
        let i = cycle[a];
        let next = cycle[(a + 1) % k];
        s = s + dot(sample.row(i), slots.row(sigma[i])) - dot(sample.row(i), slots.row(sigma[next]));
    }
    s
}

fn slack_tolerance<T: Scalar>(sample: &PointSet<T>, slots: &PointSet<T>) -> T {
    let sx = sample.rows().map(|x| dot(x, x)).fold(T::zero(), T::max).sqrt();
    let su = slots.rows().map(|x| dot(x, x)).fold(T::zero(), T::max).sqrt();
    T::tol(1e-9) * (T::one() + sx * su)
}

/// Tests `trials` random cycles of length `2..=k_max` for cyclical monotonicity
/// of the coupling `{(x_i, u_{σ(i)})}`.
pub fn verify_cyclical_monotonicity<T: Scalar>(
    result: &AssignmentResult<T>,
    sample: &PointSet<T>,
    grid: &SphericalGrid<T>,
    k_max: usize,
    trials: usize,
    seed: u64,
) -> MonotonicityCheck<T> {
    verify_cycles_against(result, sample, &grid.slots(), k_max, trials, seed)
}

pub fn verify_cycles_against<T: Scalar>(
    result: &AssignmentResult<T>,
    sample: &PointSet<T>,
    slots: &PointSet<T>,
    k_max: usize,
    trials: usize,
    seed: u64,
) -> MonotonicityCheck<T> {
    let n = sample.len();
    let k_max = k_max.min(n);
    let tol = slack_tolerance(sample, slots);
    let mut worst = T::infinity();
    let mut checked = 0;
    if k_max >= 2 {
        let mut rng = stream(seed);
        for _ in 0..trials {
            let k = rng.random_range(2..=k_max);
            let cycle = sample_indices(&mut rng, n, k).into_vec();
            worst = worst.min(cycle_slack(&cycle, &result.sigma, sample, slots));
            checked += 1;
        }
    }
    MonotonicityCheck { passed: !(worst < -tol), worst_slack: worst, cycles_checked: checked }
}

/// Exhaustive check over all `n(n−1)/2` transpositions.
pub fn verify_pairwise_monotonicity<T: Scalar>(
    result: &AssignmentResult<T>,
    sample: &PointSet<T>,
    slots: &PointSet<T>,
) -> MonotonicityCheck<T> {
    let n = sample.len();
    let tol = slack_tolerance(sample, slots);
    let mut worst = T::infinity();
    let mut checked = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.min(cycle_slack(&[i, j], &result.sigma, sample, slots));
            checked += 1;
        }
    }
    MonotonicityCheck { passed: !(worst < -tol), worst_slack: worst, cycles_checked: checked }
}
