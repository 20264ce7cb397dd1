//! Exact Gaussian elimination over ℚ(i).

use num::{One, Zero};

use super::gauss::GaussRat;

/// Reduced row echelon form in place; returns the pivot columns.
fn rref(m: &mut [Vec<GaussRat>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].inv().unwrap();
        for v in m[row].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let (pivot_row, other) = if r < row {
                    let (a, b) = m.split_at_mut(row);
                    (&b[0], &mut a[r])
                } else {
                    let (a, b) = m.split_at_mut(r);
                    (&a[row], &mut b[0])
                };
                for (o, pv) in other.iter_mut().zip(pivot_row.iter()) {
                    if !pv.is_zero() {
                        *o -= &(&f * pv);
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Solves `A x = b`. Free variables are set to zero. `None` if inconsistent.
pub fn solve(a: &[Vec<GaussRat>], b: &[GaussRat], ncols: usize) -> Option<Vec<GaussRat>> {
    let mut m: Vec<Vec<GaussRat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.resize(ncols, GaussRat::zero());
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut m, ncols);
    // inconsistent row: all zero coefficients, nonzero rhs
    for row in &m {
        if row[..ncols].iter().all(|c| c.is_zero()) && !row[ncols].is_zero() {
            return None;
        }
    }
    let mut x = vec![GaussRat::zero(); ncols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][ncols].clone();
    }
    Some(x)
}

/// Basis of the right nullspace of `A`, one vector per free column.
pub fn nullspace(a: &[Vec<GaussRat>], ncols: usize) -> Vec<Vec<GaussRat>> {
    let mut m: Vec<Vec<GaussRat>> = a
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.resize(ncols, GaussRat::zero());
            r
        })
        .collect();
    let pivots = rref(&mut m, ncols);
    let mut basis = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![GaussRat::zero(); ncols];
        v[free] = GaussRat::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -&m[r][free];
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: i64) -> GaussRat {
        GaussRat::from_int(n)
    }

    #[test]
    fn solves_small_system() {
        // x + y = 3, x - y = 1
        let a = vec![vec![g(1), g(1)], vec![g(1), g(-1)]];
        let x = solve(&a, &[g(3), g(1)], 2).unwrap();
        assert_eq!(x, vec![g(2), g(1)]);
    }

    #[test]
    fn detects_inconsistency() {
        let a = vec![vec![g(1), g(1)], vec![g(2), g(2)]];
        assert!(solve(&a, &[g(1), g(3)], 2).is_none());
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = vec![vec![g(1), g(2), g(3)]];
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let dot = &(&(&a[0][0] * &v[0]) + &(&a[0][1] * &v[1])) + &(&a[0][2] * &v[2]);
            assert!(dot.is_zero());
        }
    }
}
