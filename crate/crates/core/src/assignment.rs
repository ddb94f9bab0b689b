//! Exact solvers for the square linear assignment problem.
//!
//! [`solve_min_assignment`] is a dense shortest-augmenting-path Hungarian
//! method over real costs, O(n³). [`solve_max_assignment`] maximizes total
//! similarity by minimizing `1 - p` and reports the mean matched similarity.
//! [`brute_force_assignment`] enumerates every permutation and exists as an
//! independent oracle for the other two.

use crate::error::{Error, Result};

/// Largest order [`brute_force_assignment`] accepts by default (9! = 362,880).
pub const DEFAULT_ORACLE_CAP: usize = 9;

/// An `n × n` grid of finite reals, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    order: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(order: usize, values: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::Empty);
        }
        if values.len() != order * order {
            return Err(Error::Shape {
                rows: order,
                cols: order,
                expected: order * order,
                actual: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k / order,
                col: k % order,
                value: values[k],
            });
        }
        Ok(Self { order, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let order = rows.len();
        if order == 0 {
            return Err(Error::Empty);
        }
        let mut values = Vec::with_capacity(order * order);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != order {
                return Err(Error::NotSquare {
                    rows: order,
                    row,
                    len: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(order, values)
    }

    /// Skips validation; callers guarantee `values.len() == order²`, all finite.
    pub(crate) fn from_trusted(order: usize, values: Vec<f64>) -> Self {
        debug_assert!(order >= 1 && values.len() == order * order);
        Self { order, values }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.order..(row + 1) * self.order]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> Self {
        let n = self.order;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                values.push(self.get(i, j));
            }
        }
        Self { order: n, values }
    }

    /// Sum of the entries picked by `mapping`, accumulated in row order.
    pub fn selected_sum(&self, mapping: &[usize]) -> f64 {
        mapping
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j))
            .sum()
    }

    fn check_non_negative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(k) => Err(Error::NegativeCost {
                row: k / self.order,
                col: k % self.order,
                value: self.values[k],
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn check_unit_range(&self) -> Result<()> {
        match self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(k) => Err(Error::OutOfRange {
                row: k / self.order,
                col: k % self.order,
                value: self.values[k],
            }),
            None => Ok(()),
        }
    }
}

/// A bijection from rows to columns together with its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `mapping[i]` is the column matched to row `i`.
    pub mapping: Vec<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Minimum total cost assignment. Entries must be non-negative.
///
/// The objective is the plain sum of the selected costs.
pub fn solve_min_assignment(costs: &SquareMatrix) -> Result<Assignment> {
    costs.check_non_negative()?;
    let mapping = hungarian(costs.order, &costs.values);
    let objective = costs.selected_sum(&mapping);
    Ok(Assignment { mapping, objective })
}

/// Maximum total similarity assignment over entries in `[0, 1]`.
///
/// The objective is the mean matched similarity, i.e. the total divided by
/// the order, which equals `1 - min_cost / n` for costs `1 - p`.
pub fn solve_max_assignment(similarities: &SquareMatrix) -> Result<Assignment> {
    similarities.check_unit_range()?;
    Ok(max_assignment_unchecked(similarities))
}

pub(crate) fn max_assignment_unchecked(similarities: &SquareMatrix) -> Assignment {
    let n = similarities.order;
    let costs: Vec<f64> = similarities.values.iter().map(|p| 1.0 - p).collect();
    let mapping = hungarian(n, &costs);
    let objective = similarities.selected_sum(&mapping) / n as f64;
    Assignment { mapping, objective }
}

/// Exhaustive search over all `n!` permutations, refusing orders above
/// [`DEFAULT_ORACLE_CAP`].
///
/// Min sense reports the total; max sense reports the mean, matching the
/// conventions of [`solve_min_assignment`] and [`solve_max_assignment`].
pub fn brute_force_assignment(matrix: &SquareMatrix, sense: Sense) -> Result<Assignment> {
    brute_force_assignment_capped(matrix, sense, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_assignment_capped(
    matrix: &SquareMatrix,
    sense: Sense,
    cap: usize,
) -> Result<Assignment> {
    let n = matrix.order;
    if n > cap {
        return Err(Error::OracleCap { order: n, cap });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_sum = matrix.selected_sum(&perm);
    while next_permutation(&mut perm) {
        let sum = matrix.selected_sum(&perm);
        let better = match sense {
            Sense::Min => sum < best_sum,
            Sense::Max => sum > best_sum,
        };
        if better {
            best_sum = sum;
            best.copy_from_slice(&perm);
        }
    }
    let objective = match sense {
        Sense::Min => best_sum,
        Sense::Max => best_sum / n as f64,
    };
    Ok(Assignment {
        mapping: best,
        objective,
    })
}

/// Advances `perm` to the next lexicographic permutation; false after the last.
fn next_permutation(perm: &mut [usize]) -> bool {
    let Some(i) = perm.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = perm.iter().rposition(|&v| v > perm[i]).unwrap();
    perm.swap(i, j);
    perm[i + 1..].reverse();
    true
}

/// Shortest augmenting path Hungarian method on a row-major `n × n` cost grid.
///
/// Rows are inserted one at a time; each insertion runs a Dijkstra-like scan
/// over reduced costs `c[i][j] - u[i] - v[j]` and augments along the found
/// path. Index 0 of `u`, `v`, `owner`, `way` is a virtual column.
fn hungarian(n: usize, costs: &[f64]) -> Vec<usize> {
    if n == 1 {
        return vec![0];
    }
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // owner[j] = row (1-based) currently matched to column j; 0 = free.
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0f64; n + 1];
    let mut visited = vec![false; n + 1];

    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0usize;
        min_slack.fill(f64::INFINITY);
        visited.fill(false);

        loop {
            visited[col0] = true;
            let i0 = owner[col0];
            let base = (i0 - 1) * n;
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for j in 1..=n {
                if visited[j] {
                    continue;
                }
                let reduced = costs[base + j - 1] - u[i0] - v[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = col0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    col1 = j;
                }
            }
            for j in 0..=n {
                if visited[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }

        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut mapping = vec![0usize; n];
    for j in 1..=n {
        mapping[owner[j] - 1] = j - 1;
    }
    mapping
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> SquareMatrix {
        let values = (0..n * n).map(|_| rng.random::<f64>()).collect();
        SquareMatrix::new(n, values).unwrap()
    }

    fn is_permutation(mapping: &[usize]) -> bool {
        let mut seen = vec![false; mapping.len()];
        mapping
            .iter()
            .all(|&j| j < seen.len() && !std::mem::replace(&mut seen[j], true))
    }

    #[test]
    fn single_element() {
        let m = SquareMatrix::from_rows(&[[0.0]]).unwrap();
        let a = solve_min_assignment(&m).unwrap();
        assert_eq!(a.mapping, vec![0]);
        assert_eq!(a.objective, 0.0);
        assert_eq!(
            brute_force_assignment(&m, Sense::Min).unwrap().mapping,
            vec![0]
        );
    }

    #[test]
    fn two_by_two_min_takes_off_diagonal() {
        // 1 + 4 = 5 on the diagonal, 2 + 2 = 4 off it.
        let m = SquareMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let a = solve_min_assignment(&m).unwrap();
        assert_eq!(a.mapping, vec![1, 0]);
        assert_eq!(a.objective, 4.0);
        assert_eq!(
            brute_force_assignment(&m, Sense::Min).unwrap().objective,
            4.0
        );
    }

    #[test]
    fn two_by_two_max_mean() {
        // (0.9 + 0.8) / 2 = 0.85 beats (0.2 + 0.3) / 2 = 0.25.
        let m = SquareMatrix::from_rows(&[[0.9, 0.2], [0.3, 0.8]]).unwrap();
        let a = solve_max_assignment(&m).unwrap();
        assert_eq!(a.mapping, vec![0, 1]);
        assert!((a.objective - 0.85).abs() < 1e-15);
    }

    #[test]
    fn identity_similarity_is_one() {
        let n = 6;
        let mut values = vec![0.4; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        let a = solve_max_assignment(&SquareMatrix::new(n, values).unwrap()).unwrap();
        assert_eq!(a.mapping, (0..n).collect::<Vec<_>>());
        assert_eq!(a.objective, 1.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(matches!(
            SquareMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0]]),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            SquareMatrix::from_rows(&[[f64::NAN]]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            SquareMatrix::from_rows(&[[f64::INFINITY]]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            SquareMatrix::from_rows::<[f64; 0]>(&[]),
            Err(Error::Empty)
        ));
        let neg = SquareMatrix::from_rows(&[[0.5, -0.1], [0.0, 0.0]]).unwrap();
        assert_eq!(
            solve_min_assignment(&neg),
            Err(Error::NegativeCost {
                row: 0,
                col: 1,
                value: -0.1
            })
        );
        let big = SquareMatrix::from_rows(&[[1.2]]).unwrap();
        assert!(matches!(
            solve_max_assignment(&big),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn oracle_refuses_above_cap() {
        let m = SquareMatrix::new(10, vec![0.0; 100]).unwrap();
        assert_eq!(
            brute_force_assignment(&m, Sense::Min),
            Err(Error::OracleCap { order: 10, cap: 9 })
        );
        assert!(brute_force_assignment_capped(&m, Sense::Min, 3).is_err());
    }

    #[test]
    fn next_permutation_enumerates_factorial() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
    }

    #[test]
    fn six_by_six_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 6);
            let fast = solve_min_assignment(&m).unwrap();
            let slow = brute_force_assignment(&m, Sense::Min).unwrap();
            assert!((fast.objective - slow.objective).abs() <= 1e-12);
        }
    }

    #[test]
    fn five_by_five_max_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 5);
            let fast = solve_max_assignment(&m).unwrap();
            let slow = brute_force_assignment(&m, Sense::Max).unwrap();
            assert!((fast.objective - slow.objective).abs() <= 1e-12);
        }
    }

    #[test]
    fn seven_by_seven_max_oracle_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 7);
            let fast = solve_max_assignment(&m).unwrap();
            let slow = brute_force_assignment(&m, Sense::Max).unwrap();
            assert!((fast.objective - slow.objective).abs() <= 1e-12);
        }
    }

    #[test]
    fn duality_of_senses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=8 {
            for _ in 0..20 {
                let p = random_matrix(&mut rng, n);
                let b = SquareMatrix::new(n, p.values().iter().map(|v| 1.0 - v).collect()).unwrap();
                let max = solve_max_assignment(&p).unwrap();
                let min = solve_min_assignment(&b).unwrap();
                assert!((max.objective - (1.0 - min.objective / n as f64)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn row_shift_adds_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=7 {
            let m = random_matrix(&mut rng, n);
            let row = rng.random_range(0..n);
            let c = rng.random::<f64>() * 3.0;
            let mut shifted = m.values().to_vec();
            for j in 0..n {
                shifted[row * n + j] += c;
            }
            let shifted = SquareMatrix::new(n, shifted).unwrap();
            let base = solve_min_assignment(&m).unwrap().objective;
            let moved = solve_min_assignment(&shifted).unwrap().objective;
            assert!((moved - (base + c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn large_instance_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        let m = random_matrix(&mut rng, 200);
        let a = solve_min_assignment(&m).unwrap();
        assert!(is_permutation(&a.mapping));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn square(max_n: usize) -> impl Strategy<Value = SquareMatrix> {
            (1..=max_n).prop_flat_map(|n| {
                prop::collection::vec(0.0f64..=1.0, n * n)
                    .prop_map(move |v| SquareMatrix::new(n, v).unwrap())
            })
        }

        proptest! {
            #[test]
            fn mapping_is_bijection(m in square(12)) {
                prop_assert!(is_permutation(&solve_min_assignment(&m).unwrap().mapping));
                prop_assert!(is_permutation(&solve_max_assignment(&m).unwrap().mapping));
            }

            #[test]
            fn objective_is_recomputable(m in square(10)) {
                let a = solve_min_assignment(&m).unwrap();
                prop_assert_eq!(a.objective, m.selected_sum(&a.mapping));
            }
        }
    }
}
