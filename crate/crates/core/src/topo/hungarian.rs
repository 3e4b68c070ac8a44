//! Minimum-cost assignment (Hungarian method with potentials, O(n²m)).
//!
//! Generic over the cost type: integer costs give exact optima.

use std::ops::{Add, Sub};

use num_traits::{Bounded, Zero};

use crate::error::Error;

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<C> {
    /// `(row, col)` pairs, one per row of the smaller side, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub cost: C,
}

/// Min-cost matching of an `n×m` matrix. Every row is matched when
/// `n <= m`, every column otherwise. Costs must be finite and non-negative.
pub fn hungarian_match<C>(cost: &[Vec<C>]) -> Result<Assignment<C>, Error>
where
    C: Copy + PartialOrd + Zero + Bounded + Add<Output = C> + Sub<Output = C>,
{
    let n = cost.len();
    let m = cost.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 {
        return Err(Error::Param("assignment needs a non-empty cost matrix".into()));
    }
    if cost.iter().any(|r| r.len() != m) {
        return Err(Error::Param("cost matrix rows differ in length".into()));
    }
    #[allow(clippy::eq_op)]
    if cost.iter().flatten().any(|&c| c < C::zero() || c != c || c >= C::max_value()) {
        return Err(Error::Param("costs must be finite and non-negative".into()));
    }
    if n > m {
        let t: Vec<Vec<C>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        let a = solve(&t);
        let mut pairs: Vec<(usize, usize)> = a.pairs.into_iter().map(|(r, c)| (c, r)).collect();
        pairs.sort_unstable();
        return Ok(Assignment { pairs, cost: a.cost });
    }
    Ok(solve(cost))
}

/// Rows ≤ columns.
fn solve<C>(a: &[Vec<C>]) -> Assignment<C>
where
    C: Copy + PartialOrd + Zero + Bounded + Add<Output = C> + Sub<Output = C>,
{
    let n = a.len();
    let m = a[0].len();
    let inf = C::max_value();
    // 1-based potentials; column 0 is the virtual start
    let mut u = vec![C::zero(); n + 1];
    let mut v = vec![C::zero(); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else if minv[j] != inf {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m).filter(|&j| p[j] != 0).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    let mut total = C::zero();
    for &(r, c) in &pairs {
        total = total + a[r][c];
    }
    Assignment { pairs, cost: total }
}
