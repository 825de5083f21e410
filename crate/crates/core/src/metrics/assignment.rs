use crate::error::{Error, Result};

/// Minimum-cost matching of every row of the smaller side to a distinct
/// column of the larger side.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` pairs in row order.
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Hungarian algorithm with row and column potentials, `O(m² n)` for an
/// `m × n` matrix with `m ≤ n`. Taller matrices are solved transposed.
pub fn optimal_assignment(cost: &[Vec<f64>]) -> Result<Assignment> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|r| r.len() != cols) {
        return Err(Error::Domain("cost matrix rows have unequal lengths".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::Domain("costs must be finite and nonnegative".into()));
    }
    if rows == 0 || cols == 0 {
        return Ok(Assignment { pairs: Vec::new(), cost: 0.0 });
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| cost[i][j]).collect()).collect();
        let a = optimal_assignment(&t)?;
        let mut pairs: Vec<(usize, usize)> = a.pairs.into_iter().map(|(j, i)| (i, j)).collect();
        pairs.sort_unstable();
        return Ok(Assignment { pairs, cost: a.cost });
    }

    let (n, m) = (rows, cols);
    let inf = f64::INFINITY;
    // 1-based arrays; column 0 is a virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    // sum in row order so the total does not depend on potentials round-off
    let total = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Ok(Assignment { pairs, cost: total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(cost: &[Vec<f64>]) -> f64 {
        let (r, c) = (cost.len(), cost[0].len());
        let (small, large, transposed) = if r <= c { (r, c, false) } else { (c, r, true) };
        let at = |s: usize, l: usize| if transposed { cost[l][s] } else { cost[s][l] };
        fn rec(
            s: usize,
            small: usize,
            large: usize,
            used: &mut Vec<bool>,
            acc: f64,
            at: &dyn Fn(usize, usize) -> f64,
            best: &mut f64,
        ) {
            if s == small {
                *best = best.min(acc);
                return;
            }
            for l in 0..large {
                if !used[l] {
                    used[l] = true;
                    rec(s + 1, small, large, used, acc + at(s, l), at, best);
                    used[l] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(0, small, large, &mut vec![false; large], 0.0, &at, &mut best);
        best
    }

    #[test]
    fn single_entry() {
        assert_eq!(optimal_assignment(&[vec![7.0]]).unwrap().cost, 7.0);
    }

    #[test]
    fn diagonal_optimum() {
        let a = optimal_assignment(&[vec![1.0, 10.0], vec![10.0, 1.0]]).unwrap();
        assert_eq!(a.cost, 2.0);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn rectangular_both_ways() {
        let wide = vec![vec![5.0, 1.0, 9.0]];
        assert_eq!(optimal_assignment(&wide).unwrap().pairs, vec![(0, 1)]);
        let tall = vec![vec![5.0], vec![1.0], vec![9.0]];
        let a = optimal_assignment(&tall).unwrap();
        assert_eq!(a.pairs, vec![(1, 0)]);
        assert_eq!(a.cost, 1.0);
    }

    #[test]
    fn invalid_costs() {
        assert!(optimal_assignment(&[vec![-1.0]]).is_err());
        assert!(optimal_assignment(&[vec![f64::NAN]]).is_err());
        assert!(optimal_assignment(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    proptest! {
        #[test]
        fn matches_permutation_search(
            (r, c, vals) in (1usize..=6, 1usize..=6)
                .prop_flat_map(|(r, c)| (Just(r), Just(c), proptest::collection::vec(0.0f64..100.0, r * c)))
        ) {
            let cost: Vec<Vec<f64>> = vals.chunks(c).map(|row| row.to_vec()).collect();
            let a = optimal_assignment(&cost).unwrap();
            prop_assert!((a.cost - brute_force(&cost)).abs() < 1e-9);
            prop_assert_eq!(a.pairs.len(), r.min(c));
        }
    }
}
