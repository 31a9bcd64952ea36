//! Exact linear solves by fraction-free (Bareiss) elimination.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Q;

/// Solves `a·x = b` exactly; `None` if `a` is singular.
pub fn solve(a: &[Vec<Q>], b: &[Q]) -> Option<Vec<Q>> {
    let n = b.len();
    if n == 0 {
        return Some(Vec::new());
    }
    // Clear denominators row by row.
    let mut m: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut l = BigInt::one();
        for v in a[i].iter().chain(core::iter::once(&b[i])) {
            l = l.lcm(v.denom());
        }
        let row = a[i]
            .iter()
            .chain(core::iter::once(&b[i]))
            .map(|v| v.numer() * (&l / v.denom()))
            .collect();
        m.push(row);
    }
    let mut prev = BigInt::one();
    for k in 0..n {
        let p = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, p);
        let (top, bottom) = m.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for row in bottom.iter_mut() {
            let f = row[k].clone();
            for j in k + 1..=n {
                let v = &row[j] * &pivot_row[k] - &f * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = m[k][k].clone();
    }
    let mut x: Vec<Q> = alloc::vec![Q::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Q::from_integer(m[i][n].clone());
        for j in i + 1..n {
            if !m[i][j].is_zero() {
                acc -= Q::from_integer(m[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / Q::from_integer(m[i][i].clone());
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};

    #[test]
    fn solves_small_systems() {
        let a = alloc::vec![alloc::vec![qi(2), qi(1)], alloc::vec![qi(1), qi(3)]];
        let x = solve(&a, &[qi(3), qi(5)]).unwrap();
        assert_eq!(x, alloc::vec![q(4, 5), q(7, 5)]);
    }

    #[test]
    fn needs_pivoting() {
        let a = alloc::vec![alloc::vec![qi(0), q(1, 2)], alloc::vec![q(1, 3), qi(0)]];
        assert_eq!(solve(&a, &[qi(1), qi(1)]).unwrap(), alloc::vec![qi(3), qi(2)]);
    }

    #[test]
    fn detects_singularity() {
        let a = alloc::vec![alloc::vec![qi(1), qi(2)], alloc::vec![qi(2), qi(4)]];
        assert!(solve(&a, &[qi(1), qi(2)]).is_none());
    }

    proptest::proptest! {
        #[test]
        fn residual_is_exactly_zero(entries in proptest::collection::vec(-9i64..10, 16), rhs in proptest::collection::vec(-9i64..10, 4)) {
            let a: Vec<Vec<Q>> = (0..4).map(|i| (0..4).map(|j| q(entries[4 * i + j], 1 + (i + j) as i64)).collect()).collect();
            let b: Vec<Q> = rhs.iter().map(|&v| qi(v)).collect();
            if let Some(x) = solve(&a, &b) {
                for i in 0..4 {
                    let lhs: Q = (0..4).map(|j| &a[i][j] * &x[j]).sum();
                    proptest::prop_assert_eq!(lhs, b[i].clone());
                }
            }
        }
    }
}
