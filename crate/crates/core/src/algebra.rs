//! Symbolic linear algebra over `Expr` for the small systems that occur
//! (Hessians, Legendre inversions).

use std::collections::HashMap;

use crate::symexpr::{sum, Expr};

/// Determinant by Laplace expansion along rows, memoized on column subsets.
pub fn determinant(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    assert!(n <= 16, "symbolic determinant only for small matrices");
    if n == 0 {
        return Expr::one();
    }
    let mut memo: HashMap<u32, Expr> = HashMap::new();
    minor(m, 0, (1u32 << n) - 1, &mut memo)
}

fn minor(m: &[Vec<Expr>], row: usize, cols: u32, memo: &mut HashMap<u32, Expr>) -> Expr {
    if cols == 0 {
        return Expr::one();
    }
    if let Some(v) = memo.get(&cols) {
        return v.clone();
    }
    let mut terms = Vec::new();
    let mut sign = 1;
    for c in 0..m.len() {
        if cols & (1 << c) == 0 {
            continue;
        }
        let a = &m[row][c];
        if !a.is_zero() {
            let sub = minor(m, row + 1, cols & !(1 << c), memo);
            let t = a * &sub;
            terms.push(if sign < 0 { -t } else { t });
        }
        sign = -sign;
    }
    let v = sum(terms);
    memo.insert(cols, v.clone());
    v
}

/// Solves `a·x = b` for square `a` by Gauss–Jordan elimination with symbolic
/// pivots. Returns `None` when no structurally nonzero pivot exists.
pub fn solve_square(a: &[Vec<Expr>], b: &[Expr]) -> Option<Vec<Expr>> {
    let n = a.len();
    let mut m: Vec<Vec<Expr>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for c in 0..n {
        // prefer constant pivots, they keep expressions small
        let p = (c..n)
            .find(|&r| m[r][c].as_rational().is_some_and(|x| !num_traits::Zero::is_zero(x)))
            .or_else(|| (c..n).find(|&r| !m[r][c].is_zero()))?;
        m.swap(c, p);
        let inv = m[c][c].recip();
        let pivot: Vec<Expr> = m[c].iter().map(|x| x * &inv).collect();
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                m[r] = m[r].iter().zip(&pivot).map(|(x, y)| x - &(&f * y)).collect();
            }
        }
        m[c] = pivot;
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{equal, parse};

    fn mat(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
        rows.iter().map(|r| r.iter().map(|s| parse(s).unwrap()).collect()).collect()
    }

    #[test]
    fn determinants() {
        assert_eq!(determinant(&mat(&[&["1", "0"], &["0", "-1"]])), Expr::int(-1));
        assert_eq!(determinant(&mat(&[&["0", "1"], &["1", "0"]])), Expr::int(-1));
        let d = determinant(&mat(&[&["a", "b", "0"], &["c", "d", "0"], &["0", "0", "e"]]));
        assert_eq!(d, parse("a*d*e - b*c*e").unwrap().normalize());
    }

    #[test]
    fn solves_symbolic_system() {
        let a = mat(&[&["0", "q1"], &["2", "1"]]);
        let b = vec![parse("q1").unwrap(), parse("3").unwrap()];
        let x = solve_square(&a, &b).unwrap();
        assert!(equal(&x[0], &Expr::one()).holds());
        assert!(equal(&x[1], &Expr::one()).holds());
        assert!(solve_square(&mat(&[&["0", "0"], &["0", "1"]]), &b).is_none());
    }
}
