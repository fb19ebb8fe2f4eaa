//! `GL_n(Q_p)` with exact rational entries.
//!
//! The reference compact open is `F · GL_n(Z_p) · F⁻¹` for a fixed frame `F`
//! (the identity unless a conjugated battery needs the eigenbasis of its
//! element), filtered by principal congruence subgroups.

mod eigen;
mod matrix;
mod shape;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::rc::Rc;

use num::{One, Zero};

pub use eigen::{charpoly, eigenbasis, newton_valuations, scale_formula, Eigen};
pub use matrix::{is_p_integral, q, qf, residue, vp, QMatrix, Q};
pub use shape::{entry_level, Bound, ShapeSubgroup, ValShape};

use crate::error::{Error, Result};
use crate::kernel::{Level, MatWindow, SubgroupImage, WindowGroup, DEFAULT_CAP};
use crate::model::{Image, Model};

/// Valuations of `B⁻¹ g B`, which must be diagonal.
fn diagonal_valuations(basis: &QMatrix, g: &QMatrix, p: u64) -> Result<Vec<i64>> {
    let d = basis.inv().mul(g).mul(basis);
    if !d.is_diagonal() {
        return Err(Error::BasisMismatch);
    }
    Ok(d.diagonal().iter().map(|x| vp(x, p).expect("invertible")).collect())
}

/// Indices sorted by decreasing valuation (stable), cut into tie blocks.
fn blocks(v: &[i64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].cmp(&v[a]));
    let mut starts = vec![0];
    for i in 1..order.len() {
        if v[order[i]] != v[order[i - 1]] {
            starts.push(i);
        }
    }
    (order, starts)
}

fn permute(y: &QMatrix, order: &[usize]) -> Vec<Q> {
    let n = order.len();
    (0..n * n).map(|i| y.get(order[i / n], order[i % n]).clone()).collect()
}

fn unpermute(z: &[Q], order: &[usize]) -> Result<QMatrix> {
    let n = order.len();
    let mut e = vec![Q::zero(); n * n];
    for a in 0..n {
        for b in 0..n {
            e[order[a] * n + order[b]] = z[a * n + b].clone();
        }
    }
    QMatrix::new(n, e)
}

fn sub(z: &[Q], n: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Q> {
    rows.flat_map(|r| cols.clone().map(move |c| (r, c))).map(|(r, c)| z[r * n + c].clone()).collect()
}

/// `z = W₋ W₊` with `W₋` block unit upper and `W₊` block lower, for the
/// block boundaries `starts`; entries are in the permuted basis.
fn block_ul(z: &[Q], n: usize, starts: &[usize], p: u64) -> Result<(Vec<Q>, Vec<Q>)> {
    if starts.len() <= 1 {
        let mut id = vec![Q::zero(); n * n];
        for i in 0..n {
            id[i * n + i] = Q::one();
        }
        return Ok((id, z.to_vec()));
    }
    let s = *starts.last().unwrap();
    let (a, b, c) = (sub(z, n, 0..s, 0..s), sub(z, n, 0..s, s..n), sub(z, n, s..n, 0..s));
    let d = QMatrix::new(n - s, sub(z, n, s..n, s..n)).map_err(|_| Error::Factorization {
        pivot: s,
        witness: "singular trailing block".into(),
    })?;
    if vp(d.det(), p) != Some(0) || !d.is_p_integral(p) {
        return Err(Error::Factorization { pivot: s, witness: d.to_string() });
    }
    let di = d.inv();
    let (m, t) = (s, n - s);
    // X = B D⁻¹, Y = A − X C.
    let mut x = vec![Q::zero(); m * t];
    for r in 0..m {
        for cc in 0..t {
            let mut acc = Q::zero();
            for j in 0..t {
                acc += &b[r * t + j] * di.get(j, cc);
            }
            x[r * t + cc] = acc;
        }
    }
    let mut y = a.clone();
    for r in 0..m {
        for cc in 0..m {
            let mut acc = Q::zero();
            for j in 0..t {
                acc += &x[r * t + j] * &c[j * m + cc];
            }
            y[r * m + cc] -= acc;
        }
    }
    let (wm, wp) = block_ul(&y, m, &starts[..starts.len() - 1], p)?;
    let mut lo = vec![Q::zero(); n * n];
    let mut hi = vec![Q::zero(); n * n];
    for r in 0..m {
        for cc in 0..m {
            lo[r * n + cc] = wm[r * m + cc].clone();
            hi[r * n + cc] = wp[r * m + cc].clone();
        }
        for cc in 0..t {
            lo[r * n + m + cc] = x[r * t + cc].clone();
        }
    }
    for r in 0..t {
        lo[(m + r) * n + m + r] = Q::one();
        for cc in 0..m {
            hi[(m + r) * n + cc] = c[r * m + cc].clone();
        }
        for cc in 0..t {
            hi[(m + r) * n + m + cc] = d.get(r, cc).clone();
        }
    }
    Ok((lo, hi))
}

/// Factors `x = w₋ w₊` with `w₋ ∈ U_-` and `w₊ ∈ U_+`, where `g` is
/// diagonal in the basis of `u`.
pub fn ul_split(p: u64, u: &ShapeSubgroup, g: &QMatrix, x: &QMatrix) -> Result<(QMatrix, QMatrix)> {
    let v = diagonal_valuations(&u.basis, g, p)?;
    let (order, starts) = blocks(&v);
    let bi = u.basis.inv();
    let y = bi.mul(x).mul(&u.basis);
    let n = y.n();
    let (lo, hi) = block_ul(&permute(&y, &order), n, &starts, p)?;
    let wm = u.basis.mul(&unpermute(&lo, &order)?).mul(&bi);
    let wp = u.basis.mul(&unpermute(&hi, &order)?).mul(&bi);
    Ok((wm, wp))
}

/// `(U_+, U_-, U_0)` of a shape subgroup whose basis diagonalizes `g`.
pub fn shape_u_parts(
    p: u64,
    u: &ShapeSubgroup,
    g: &QMatrix,
) -> Result<(ShapeSubgroup, ShapeSubgroup, ShapeSubgroup)> {
    let v = diagonal_valuations(&u.basis, g, p)?;
    let part = |keep: fn(i64, i64) -> bool| {
        let shape = ValShape::from_fn(u.shape.n(), |r, s| {
            if keep(v[r], v[s]) {
                u.shape.get(r, s)
            } else {
                Bound::Inf
            }
        });
        ShapeSubgroup::new(u.basis.clone(), shape)
    };
    Ok((part(|a, b| a <= b), part(|a, b| a >= b), part(|a, b| a == b)))
}

/// Exact test of `gⁿ x g⁻ⁿ → 1`.
pub fn con_oracle_linear(p: u64, g: &QMatrix, x: &QMatrix) -> Result<bool> {
    let e = eigenbasis(g, p, None)?;
    Ok(supported_on(&e, &e.basis.inv(), x, |a, b| a > b, true))
}

fn supported_on(
    e: &Eigen,
    basis_inv: &QMatrix,
    x: &QMatrix,
    keep: fn(i64, i64) -> bool,
    unipotent: bool,
) -> bool {
    let y = if e.basis.is_identity() { x.clone() } else { basis_inv.mul(x).mul(&e.basis) };
    let v = &e.valuations;
    (0..y.n()).all(|r| {
        (0..y.n()).all(|s| {
            if r == s {
                !unipotent || y.get(r, r).is_one()
            } else {
                keep(v[r], v[s]) || y.get(r, s).is_zero()
            }
        })
    })
}

/// Per-element data the oracles reuse across calls.
#[derive(Debug)]
struct Spectral {
    g: QMatrix,
    eigen: Option<(Eigen, QMatrix)>,
    frame_valuations: Option<Vec<i64>>,
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    pub p: u64,
    pub n: usize,
    frame: QMatrix,
    frame_inv: QMatrix,
    cap: usize,
    cache: RefCell<Vec<Rc<Spectral>>>,
}

impl LinearModel {
    pub fn new(p: u64, n: usize) -> Result<Self> {
        Self::with_frame(p, QMatrix::identity(n))
    }

    pub fn with_frame(p: u64, frame: QMatrix) -> Result<Self> {
        if ![2, 3, 5, 7].contains(&p) {
            return Err(Error::UnsupportedPrime(p));
        }
        let frame_inv = frame.inv();
        Ok(LinearModel { p, n: frame.n(), frame, frame_inv, cap: DEFAULT_CAP, cache: RefCell::default() })
    }

    /// Model whose frame is the eigenbasis of `g`.
    pub fn adapted_to(p: u64, g: &QMatrix) -> Result<Self> {
        Self::with_frame(p, eigenbasis(g, p, None)?.basis)
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn frame(&self) -> &QMatrix {
        &self.frame
    }

    fn to_frame(&self, x: &QMatrix) -> QMatrix {
        if self.frame.is_identity() {
            x.clone()
        } else {
            self.frame_inv.mul(x).mul(&self.frame)
        }
    }

    fn from_frame(&self, y: &QMatrix) -> QMatrix {
        if self.frame.is_identity() {
            y.clone()
        } else {
            self.frame.mul(y).mul(&self.frame_inv)
        }
    }

    pub fn shape(&self, shape: ValShape) -> ShapeSubgroup {
        ShapeSubgroup::new(self.frame.clone(), shape)
    }

    pub fn parse_matrix(&self, s: &str) -> Result<QMatrix> {
        let m: QMatrix = s.parse()?;
        if m.n() != self.n {
            return Err(Error::Dimension { expected: self.n, got: m.n() });
        }
        Ok(m)
    }

    /// `level:k`, a bare shape, `shape[..]`, or `shape[..]@basis[..]` with
    /// the model's own frame.
    pub fn parse_set(&self, s: &str) -> Result<ShapeSubgroup> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("level:") {
            let k = k.trim().parse().map_err(|_| Error::Parse { pos: 6, msg: "bad level".into() })?;
            return Ok(self.level_set(k));
        }
        let (shape, basis) = match s.strip_prefix("shape[") {
            Some(rest) => match rest.split_once("]@basis[") {
                Some((sh, b)) => {
                    let b = b.strip_suffix(']').ok_or(Error::Parse { pos: s.len(), msg: "missing ']'".into() })?;
                    (sh, Some(b))
                }
                None => (
                    rest.strip_suffix(']').ok_or(Error::Parse { pos: s.len(), msg: "missing ']'".into() })?,
                    None,
                ),
            },
            None => (s, None),
        };
        let shape: ValShape = shape.parse()?;
        if shape.n() != self.n {
            return Err(Error::Dimension { expected: self.n, got: shape.n() });
        }
        if let Some(b) = basis {
            if b.parse::<QMatrix>()? != self.frame {
                return Err(Error::BasisMismatch);
            }
        }
        Ok(self.shape(shape))
    }

    fn spectral(&self, g: &QMatrix) -> Rc<Spectral> {
        if let Some(s) = self.cache.borrow().iter().find(|s| &s.g == g) {
            return s.clone();
        }
        let eigen = self.eigen(g).ok().map(|e| {
            let inv = e.basis.inv();
            (e, inv)
        });
        let frame_valuations = diagonal_valuations(&self.frame, g, self.p).ok();
        let s = Rc::new(Spectral { g: g.clone(), eigen, frame_valuations });
        let mut cache = self.cache.borrow_mut();
        if cache.len() >= 8 {
            cache.remove(0);
        }
        cache.push(s.clone());
        s
    }

    pub fn eigen(&self, g: &QMatrix) -> Result<Eigen> {
        eigenbasis(g, self.p, Some(&self.frame))
    }

    fn residues(&self, y: &QMatrix, k: u32) -> Result<Vec<u64>> {
        let m = self.p.pow(k);
        y.entries()
            .iter()
            .map(|e| residue(e, m).ok_or_else(|| Error::NotIntegral(y.to_string())))
            .collect()
    }

    fn count_or_cap(&self, sizes: &[u64]) -> Result<()> {
        let mut total: u128 = 1;
        for &s in sizes {
            total = total.saturating_mul(s as u128);
        }
        if total > self.cap as u128 {
            return Err(Error::ResolutionTooFine { cap: self.cap });
        }
        Ok(())
    }
}

impl Model for LinearModel {
    type Elem = QMatrix;
    type Set = ShapeSubgroup;
    type Window = MatWindow;

    fn name(&self) -> &'static str {
        "linear"
    }

    fn cap(&self) -> usize {
        self.cap
    }

    fn identity(&self) -> QMatrix {
        QMatrix::identity(self.n)
    }

    fn mul(&self, a: &QMatrix, b: &QMatrix) -> QMatrix {
        a.mul(b)
    }

    fn inv(&self, a: &QMatrix) -> QMatrix {
        a.inv()
    }

    fn pow(&self, a: &QMatrix, e: i64) -> QMatrix {
        a.pow(e)
    }

    fn is_identity(&self, x: &QMatrix) -> bool {
        x.is_identity()
    }

    fn proximity_level(&self, x: &QMatrix) -> Level {
        let y = self.to_frame(x);
        if !y.in_gl_zp(self.p) {
            return Level::Outside;
        }
        let n = self.n;
        (0..n * n)
            .filter_map(|i| entry_level(&y, i / n, i % n, self.p))
            .min()
            .map_or(Level::Infinite, |m| Level::Finite(m as u32))
    }

    fn window(&self, k: u32) -> MatWindow {
        MatWindow::new(self.p, self.n, k)
    }

    fn project(&self, x: &QMatrix, k: u32) -> Result<Vec<u64>> {
        let y = self.to_frame(x);
        if !y.in_gl_zp(self.p) {
            return Err(Error::OutsideReference(x.to_string()));
        }
        self.residues(&y, k)
    }

    fn lift(&self, w: &Vec<u64>, k: u32) -> QMatrix {
        if k == 0 {
            return self.identity();
        }
        let y = QMatrix::new(self.n, w.iter().map(|&a| q(a as i64)).collect())
            .expect("window elements have unit determinant");
        self.from_frame(&y)
    }

    fn contains(&self, s: &ShapeSubgroup, x: &QMatrix) -> bool {
        s.contains(x, self.p)
    }

    fn image(&self, s: &ShapeSubgroup, k: u32) -> Result<Image<Self>> {
        if s.basis != self.frame {
            return Err(Error::BasisMismatch);
        }
        if !s.shape.is_integral() {
            return Err(Error::OutsideReference(s.to_string()));
        }
        let w = self.window(k);
        let md = w.modulus();
        let n = self.n;
        let choices: Vec<Vec<u64>> = (0..n * n)
            .map(|i| {
                let (r, c) = (i / n, i % n);
                let step = |m: i64| self.p.pow((m as u32).min(k));
                match s.shape.get(r, c) {
                    Bound::Inf if r == c => vec![1 % md],
                    Bound::Inf => vec![0],
                    Bound::Fin(m) if r == c && m >= 1 => {
                        (0..md / step(m)).map(|j| (1 + j * step(m)) % md).collect()
                    }
                    Bound::Fin(m) => (0..md / step(m)).map(|j| j * step(m)).collect(),
                    Bound::NegInf => unreachable!("integral shape"),
                }
            })
            .collect();
        self.count_or_cap(&choices.iter().map(|c| c.len() as u64).collect::<Vec<_>>())?;
        let mut out = BTreeSet::new();
        let mut idx = vec![0usize; n * n];
        loop {
            let e: Vec<u64> = idx.iter().enumerate().map(|(i, &j)| choices[i][j]).collect();
            if k == 0 || w.is_unit(w.det(&e)) {
                out.insert(e);
            }
            let mut i = 0;
            while i < idx.len() {
                idx[i] += 1;
                if idx[i] < choices[i].len() {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == idx.len() {
                break;
            }
        }
        Ok(SubgroupImage::from_set(&w, out))
    }

    fn conjugate_set(&self, s: &ShapeSubgroup, g: &QMatrix, j: i64) -> Result<ShapeSubgroup> {
        let v = diagonal_valuations(&s.basis, g, self.p)?;
        Ok(ShapeSubgroup::new(s.basis.clone(), s.shape.conjugated(&v, j)))
    }

    fn intersect(&self, a: &ShapeSubgroup, b: &ShapeSubgroup) -> Result<ShapeSubgroup> {
        if a.basis != b.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(ShapeSubgroup::new(a.basis.clone(), a.shape.meet(&b.shape)))
    }

    fn describe_set(&self, s: &ShapeSubgroup) -> String {
        s.to_string()
    }

    fn describe_elem(&self, x: &QMatrix) -> String {
        x.to_string()
    }

    fn reference(&self) -> ShapeSubgroup {
        self.level_set(0)
    }

    fn level_set(&self, m: u32) -> ShapeSubgroup {
        self.shape(ValShape::uniform(self.n, m as i64))
    }

    fn tidy_seeds(&self, k: u32) -> Vec<ShapeSubgroup> {
        (0..=k).map(|m| self.level_set(m)).collect()
    }

    fn symbolic_parts(
        &self,
        u: &ShapeSubgroup,
        g: &QMatrix,
    ) -> Result<Option<(ShapeSubgroup, ShapeSubgroup, ShapeSubgroup)>> {
        shape_u_parts(self.p, u, g).map(Some)
    }

    fn split(&self, u: &ShapeSubgroup, g: &QMatrix, x: &QMatrix) -> Result<(QMatrix, QMatrix)> {
        ul_split(self.p, u, g, x)
    }

    fn split_off_zero(
        &self,
        u: &ShapeSubgroup,
        g: &QMatrix,
        t: &QMatrix,
    ) -> Option<(QMatrix, QMatrix)> {
        let v = diagonal_valuations(&u.basis, g, self.p).ok()?;
        let bi = u.basis.inv();
        let y = bi.mul(t).mul(&u.basis);
        // Keep the diagonal blocks: that is the U_0 component.
        let n = self.n;
        let mut e = vec![Q::zero(); n * n];
        for r in 0..n {
            for s in 0..n {
                if v[r] == v[s] {
                    e[r * n + s] = y.get(r, s).clone();
                }
            }
        }
        let z = QMatrix::new(n, e).ok()?;
        let zero = u.basis.mul(&z).mul(&bi);
        let rest = t.mul(&zero.inv());
        Some((rest, zero))
    }

    fn con_oracle(&self, g: &QMatrix, x: &QMatrix) -> Option<bool> {
        let s = self.spectral(g);
        let (e, inv) = s.eigen.as_ref()?;
        Some(supported_on(e, inv, x, |a, b| a > b, true))
    }

    fn par_oracle(&self, g: &QMatrix, x: &QMatrix) -> Option<bool> {
        let s = self.spectral(g);
        let (e, inv) = s.eigen.as_ref()?;
        Some(supported_on(e, inv, x, |a, b| a >= b, false))
    }

    fn eventually_in_level(&self, g: &QMatrix, x: &QMatrix, m: u32) -> Option<bool> {
        let s = self.spectral(g);
        let v = s.frame_valuations.as_ref()?;
        let y = self.to_frame(x);
        let n = self.n;
        let p = self.p;
        let mut ok = true;
        for r in 0..n {
            for s in 0..n {
                let e = y.get(r, s);
                if v[r] < v[s] && r != s {
                    ok &= e.is_zero();
                } else if v[r] == v[s] {
                    let lv = if m == 0 {
                        vp(e, p).is_none_or(|a| a >= 0)
                    } else {
                        entry_level(&y, r, s, p).is_none_or(|a| a >= m as i64)
                    };
                    ok &= lv;
                }
            }
        }
        Some(ok && vp(y.det(), p) == Some(0))
    }

    fn con_closure_image(&self, g: &QMatrix, k: u32) -> Result<Option<Image<Self>>> {
        let e = eigenbasis(g, self.p, Some(&self.frame))?;
        let v = &e.valuations;
        let n = self.n;
        let w = self.window(k);
        let pairs: Vec<(usize, usize)> =
            (0..n * n).map(|i| (i / n, i % n)).filter(|&(r, s)| v[r] > v[s]).collect();
        if pairs.is_empty() {
            return Ok(Some(SubgroupImage::trivial(&w)));
        }
        if e.basis == self.frame {
            let shape = ValShape::from_fn(n, |r, s| {
                if v[r] > v[s] {
                    Bound::Fin(0)
                } else {
                    Bound::Inf
                }
            });
            return self.image(&self.shape(shape), k).map(Some);
        }
        if pairs.len() != 1 {
            return Ok(None);
        }
        // A single root group {I + aN}; a ranges over p^c Z_p.
        let (r, s) = pairs[0];
        let nil = e.basis.mul(&elementary_nil(n, r, s)).mul(&e.basis.inv());
        let nf: Vec<Q> = {
            let y = self.frame_inv.mul(&nil).mul(&self.frame);
            y.entries().to_vec()
        };
        let c = -nf.iter().filter_map(|x| vp(x, self.p)).min().expect("nonzero nilpotent");
        let scale = if c >= 0 {
            q(self.p as i64).pow(c as i32)
        } else {
            Q::one() / q(self.p as i64).pow((-c) as i32)
        };
        let md = w.modulus();
        let base: Vec<u64> = nf
            .iter()
            .map(|x| residue(&(x * &scale), md).expect("integral after scaling"))
            .collect();
        let id = w.identity();
        let mut out = BTreeSet::new();
        for j in 0..md {
            out.insert(
                id.iter().zip(&base).map(|(&a, &b)| ((a as u128 + j as u128 * b as u128) % md as u128) as u64).collect(),
            );
        }
        Ok(Some(SubgroupImage::from_set(&w, out)))
    }

    fn con_element(&self, g: &QMatrix, coeffs: &[i64]) -> Option<QMatrix> {
        let e = self.eigen(g).ok()?;
        let v = &e.valuations;
        let n = self.n;
        let pairs: Vec<(usize, usize)> =
            (0..n * n).map(|i| (i / n, i % n)).filter(|&(r, s)| v[r] > v[s]).collect();
        if pairs.is_empty() || coeffs.is_empty() {
            return Some(self.identity());
        }
        let mut x = vec![Q::zero(); n * n];
        for (i, &(r, s)) in pairs.iter().enumerate() {
            x[r * n + s] = q(coeffs[i % coeffs.len()]);
        }
        let nil = e.basis.mul(&QMatrix::raw(n, x)).mul(&e.basis.inv());
        let nf = self.frame_inv.mul(&nil).mul(&self.frame);
        // Rescale so the unipotent element lies in the reference subgroup.
        let c = -nf.entries().iter().filter_map(|a| vp(a, self.p)).min().unwrap_or(0);
        let scale = q(self.p as i64).pow(c.max(0) as i32);
        let mut out = QMatrix::identity(n).entries().to_vec();
        for (o, a) in out.iter_mut().zip(nil.entries()) {
            *o += a * &scale;
        }
        QMatrix::new(n, out).ok()
    }

    fn minusminus_certificate(&self, u: &ShapeSubgroup, g: &QMatrix) -> Option<bool> {
        let v = diagonal_valuations(&u.basis, g, self.p).ok()?;
        let n = self.n;
        // U_{--} is the union of g^j U_- g^{-j} for j ≤ 0: expanded entries
        // become unbounded, contracted ones vanish.
        let mm = ValShape::from_fn(n, |r, s| match v[r].cmp(&v[s]) {
            std::cmp::Ordering::Greater => Bound::NegInf,
            std::cmp::Ordering::Equal => u.shape.get(r, s),
            std::cmp::Ordering::Less => Bound::Inf,
        });
        let (_, minus, _) = shape_u_parts(self.p, u, g).ok()?;
        Some(mm.meet(&u.shape) == minus.shape)
    }
}

fn elementary_nil(n: usize, r: usize, s: usize) -> QMatrix {
    // E_rs is singular, so build it entrywise without the invertibility check.
    let mut e = QMatrix::identity(n).entries().to_vec();
    for x in e.iter_mut() {
        *x = Q::zero();
    }
    e[r * n + s] = Q::one();
    QMatrix::raw(n, e)
}

#[cfg(test)]
mod tests;
