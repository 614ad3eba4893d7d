//! Exact earth mover's distance between equal-size clouds.
//!
//! The bijection is found with the shortest-augmenting-path form of the
//! Hungarian method (row potentials `u`, column potentials `v`), O(n³).

use crate::camera::PointCloud;
use crate::error::{Error, Result};

/// Minimum-cost perfect matching on a square row-major cost matrix.
///
/// Returns `assignment[row] = column`.
pub fn solve_assignment(cost: &[f64], n: usize) -> Result<Vec<usize>> {
    if cost.len() != n * n {
        return Err(Error::Dimension(format!("{} costs for a {n}x{n} matrix", cost.len())));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Parameter("assignment costs must be finite".into()));
    }
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let row = &cost[(i0 - 1) * n..i0 * n];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    Ok(assignment)
}

/// Optimal bijection from `a` to `b` under Euclidean cost.
pub fn emd_assignment(a: &PointCloud, b: &PointCloud) -> Result<Vec<usize>> {
    if a.len() != b.len() {
        return Err(Error::Parameter(format!("EMD needs equal sizes, got {} and {}", a.len(), b.len())));
    }
    let n = a.len();
    let mut cost = Vec::with_capacity(n * n);
    for p in a.points() {
        for q in b.points() {
            cost.push(super::chamfer::dist2(p, q).sqrt());
        }
    }
    solve_assignment(&cost, n)
}

/// `min_φ Σ_x ‖x − φ(x)‖₂` over bijections `φ: a → b`.
pub fn emd(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    let assignment = emd_assignment(a, b)?;
    Ok(a.points().iter().zip(&assignment).map(|(p, &j)| super::chamfer::dist2(p, &b.points()[j]).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_assignment_is_free() {
        let a = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let b = PointCloud::new(vec![[1.0, 0.0, 0.0], [0.0; 3]]).unwrap();
        assert_eq!(emd(&a, &b).unwrap(), 0.0);
        assert_eq!(emd_assignment(&a, &b).unwrap(), vec![1, 0]);
        assert_eq!(emd(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn size_mismatch() {
        let a = PointCloud::new(vec![[0.0; 3]]).unwrap();
        let b = PointCloud::new(vec![[0.0; 3], [1.0; 3]]).unwrap();
        assert!(matches!(emd(&a, &b), Err(Error::Parameter(_))));
    }

    #[test]
    fn small_matrix_by_hand() {
        // Optimal: 0→1 (1), 1→0 (2), 2→2 (2) = 5.
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = solve_assignment(&cost, 3).unwrap();
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
        assert!(solve_assignment(&cost, 2).is_err());
        assert_eq!(solve_assignment(&[], 0).unwrap(), Vec::<usize>::new());
    }
}
