use num::bigint::BigInt;
use num::rational::Ratio;
use num::{Integer, One, Signed, ToPrimitive, Zero};

use super::matrix::{q, vp, QMatrix, Q};
use crate::error::{Error, Result};

/// Coefficients `c_0, …, c_n` of `det(xI − A)`, lowest degree first.
pub fn charpoly(a: &QMatrix) -> Vec<Q> {
    // Faddeev–LeVerrier.
    let n = a.n();
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut m = vec![Q::zero(); n * n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1} I
        let mut next = vec![Q::zero(); n * n];
        for r in 0..n {
            for s in 0..n {
                let mut acc = Q::zero();
                for j in 0..n {
                    acc += a.get(r, j) * &m[j * n + s];
                }
                next[r * n + s] = acc;
            }
            next[r * n + r] += &c[n - k + 1];
        }
        m = next;
        let mut tr = Q::zero();
        for r in 0..n {
            for j in 0..n {
                tr += a.get(r, j) * &m[j * n + r];
            }
        }
        c[n - k] = -tr / q(k as i64);
    }
    c
}

/// Valuations of the eigenvalues of `g` in `Q̄_p`, ascending, read off the
/// Newton polygon of the characteristic polynomial.
pub fn newton_valuations(g: &QMatrix, p: u64) -> Vec<Ratio<i64>> {
    let c = charpoly(g);
    let pts: Vec<(i64, i64)> = c
        .iter()
        .enumerate()
        .filter_map(|(i, x)| vp(x, p).map(|v| (i as i64, v)))
        .collect();
    // Lower convex hull, left to right.
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (pt.1 - a.1) - (b.1 - a.1) * (pt.0 - a.0);
            if cross <= 0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut out = Vec::new();
    for w in hull.windows(2) {
        let slope = Ratio::new(w[1].1 - w[0].1, w[1].0 - w[0].0);
        for _ in 0..(w[1].0 - w[0].0) {
            out.push(-slope);
        }
    }
    out.sort();
    out
}

/// `p^{Σ max(0, v_i − v_j)}` over ordered pairs of eigenvalue valuations.
pub fn scale_formula(g: &QMatrix, p: u64) -> u128 {
    let v = newton_valuations(g, p);
    let mut e = Ratio::from_integer(0i64);
    for a in &v {
        for b in &v {
            if a > b {
                e += a - b;
            }
        }
    }
    assert!(e.is_integer(), "scale exponent is an integer");
    (p as u128).pow(e.to_integer() as u32)
}

/// Diagonalization `g = B · diag(λ) · B⁻¹` over `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eigen {
    pub basis: QMatrix,
    pub values: Vec<Q>,
    pub valuations: Vec<i64>,
}

fn divisors(n: &BigInt) -> Result<Vec<BigInt>> {
    let n = n.abs().to_u64().ok_or_else(|| {
        Error::UnsupportedClass("characteristic polynomial coefficients too large".into())
    })?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
        if d > 2_000_000 {
            return Err(Error::UnsupportedClass("constant term too large to factor".into()));
        }
    }
    Ok(out)
}

fn eval(c: &[Q], x: &Q) -> Q {
    c.iter().rev().fold(Q::zero(), |acc, ci| acc * x + ci)
}

/// Rational roots with multiplicity, in a deterministic order.
fn rational_roots(c: &[Q]) -> Result<Vec<Q>> {
    let mut c = c.to_vec();
    let mut roots = Vec::new();
    while c.len() > 1 && c[0].is_zero() {
        roots.push(Q::zero());
        c.remove(0);
    }
    let l = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = c.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let (a0, an) = (&ints[0], ints.last().unwrap());
    let mut cands = Vec::new();
    for d in divisors(a0)? {
        for e in divisors(an)? {
            for sgn in [1, -1] {
                cands.push(Q::new(BigInt::from(sgn) * &d, e.clone()));
            }
        }
    }
    cands.sort();
    cands.dedup();
    for x in cands {
        loop {
            if c.len() <= 1 || !eval(&c, &x).is_zero() {
                break;
            }
            roots.push(x.clone());
            // Synthetic division by (t − x).
            let deg = c.len() - 1;
            let mut quo = vec![Q::zero(); deg];
            let mut carry = Q::zero();
            for i in (0..deg).rev() {
                carry = &c[i + 1] + &carry * &x;
                quo[i] = carry.clone();
            }
            c = quo;
        }
    }
    if c.len() > 1 {
        return Err(Error::UnsupportedClass("eigenvalues are not all rational".into()));
    }
    Ok(roots)
}

/// Kernel of an `n × n` rational matrix, as column vectors.
fn kernel(a: &[Q], n: usize) -> Vec<Vec<Q>> {
    let mut m = a.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(piv) = (row..n).find(|&r| !m[r * n + col].is_zero()) else { continue };
        for j in 0..n {
            m.swap(row * n + j, piv * n + j);
        }
        let s = m[row * n + col].recip();
        for j in 0..n {
            m[row * n + j] = &m[row * n + j] * &s;
        }
        for r in 0..n {
            if r != row && !m[r * n + col].is_zero() {
                let f = m[r * n + col].clone();
                for j in 0..n {
                    let t = &f * &m[row * n + j];
                    m[r * n + j] -= t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); n];
            v[free] = Q::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[i * n + free].clone();
            }
            v
        })
        .collect()
}

fn primitive(v: Vec<Q>, p: u64) -> Vec<Q> {
    let m = v.iter().filter_map(|x| vp(x, p)).min().unwrap_or(0);
    let s = if m >= 0 {
        Q::one() / q(p as i64).pow(m as i32)
    } else {
        q(p as i64).pow((-m) as i32)
    };
    v.into_iter().map(|x| x * &s).collect()
}

/// Diagonalizes `g` over `Q`, trying the basis `frame` first.
///
/// Columns are grouped by eigenvalue; distinct eigenvalues are ordered by
/// decreasing valuation, then by value.
pub fn eigenbasis(g: &QMatrix, p: u64, frame: Option<&QMatrix>) -> Result<Eigen> {
    let n = g.n();
    if let Some(f) = frame {
        let d = f.inv().mul(g).mul(f);
        if d.is_diagonal() {
            let values = d.diagonal();
            let valuations = values.iter().map(|x| vp(x, p).expect("nonzero")).collect();
            return Ok(Eigen { basis: f.clone(), values, valuations });
        }
    }
    let mut roots = rational_roots(&charpoly(g))?;
    roots.dedup();
    let mut distinct: Vec<Q> = Vec::new();
    for r in roots {
        if !distinct.contains(&r) {
            distinct.push(r);
        }
    }
    distinct.sort_by(|a, b| vp(b, p).cmp(&vp(a, p)).then(a.cmp(b)));
    let mut cols: Vec<Vec<Q>> = Vec::new();
    let mut values = Vec::new();
    for lam in &distinct {
        let mut a = g.entries().to_vec();
        for i in 0..n {
            a[i * n + i] -= lam;
        }
        for v in kernel(&a, n) {
            cols.push(primitive(v, p));
            values.push(lam.clone());
        }
    }
    if cols.len() != n {
        return Err(Error::UnsupportedClass("matrix is not diagonalizable over Q".into()));
    }
    let mut e = vec![Q::zero(); n * n];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..n {
            e[r * n + c] = col[r].clone();
        }
    }
    let basis = QMatrix::new(n, e)?;
    let valuations = values.iter().map(|x| vp(x, p).expect("nonzero")).collect();
    Ok(Eigen { basis, values, valuations })
}

#[cfg(test)]
mod tests {
    use super::super::matrix::qf;
    use super::*;

    fn m(s: &str) -> QMatrix {
        s.parse().unwrap()
    }

    #[test]
    fn newton_polygon_of_diagonals() {
        let r = |a: i64| Ratio::from_integer(a);
        assert_eq!(newton_valuations(&m("2,0;0,1"), 2), vec![r(0), r(1)]);
        assert_eq!(newton_valuations(&m("2,0;0,1/2"), 2), vec![r(-1), r(1)]);
        // x² − 2 has both roots of valuation 1/2.
        assert_eq!(newton_valuations(&m("0,2;1,0"), 2), vec![Ratio::new(1, 2); 2]);
    }

    #[test]
    fn scale_examples() {
        assert_eq!(scale_formula(&m("3,0;0,1"), 3), 3);
        assert_eq!(scale_formula(&m("3,0;0,1/3"), 3), 9);
        assert_eq!(scale_formula(&m("4,0,0;0,2,0;0,0,1"), 2), 16);
        assert_eq!(scale_formula(&QMatrix::identity(3), 5), 1);
        assert_eq!(scale_formula(&m("0,2;1,0"), 2), 1);
    }

    #[test]
    fn eigenbasis_of_conjugate() {
        let h = m("1,1;0,1");
        let g = h.conj(&m("2,0;0,1"));
        let e = eigenbasis(&g, 2, None).unwrap();
        assert_eq!(e.valuations, vec![1, 0]);
        let d = e.basis.inv().mul(&g).mul(&e.basis);
        assert!(d.is_diagonal());
        assert_eq!(d.diagonal(), vec![q(2), q(1)]);
        assert_eq!(eigenbasis(&m("2,0;0,1"), 2, None).unwrap().basis, QMatrix::identity(2));
    }

    #[test]
    fn unsupported_classes() {
        assert!(matches!(eigenbasis(&m("0,2;1,0"), 2, None), Err(Error::UnsupportedClass(_))));
        assert!(matches!(eigenbasis(&m("1,1;0,1"), 2, None), Err(Error::UnsupportedClass(_))));
        let s = eigenbasis(&QMatrix::diag(&[qf(1, 3), qf(1, 3)]).unwrap(), 3, None).unwrap();
        assert_eq!(s.valuations, vec![-1, -1]);
    }
}
