//! The contract every model group satisfies.
//!
//! A model fixes a reference compact open subgroup `U_ref` and a filtration
//! `B_0 ⊇ B_1 ⊇ …` of open normal subgroups of `U_ref`. Window images at
//! resolution `k` live in `U_ref / B_k`.

use std::fmt::Debug;

use crate::error::Result;
use crate::kernel::{Level, SubgroupImage, Tri, WindowGroup};

pub type WinElem<M> = <<M as Model>::Window as WindowGroup>::Elem;
pub type Image<M> = SubgroupImage<WinElem<M>>;

/// A locally compact totally disconnected group with exact arithmetic and a
/// computable filtration.
///
/// `Set` describes compact subgroups: compact opens as well as the closed
/// parts `U_+`, `U_-`, `U_0` attached to them.
pub trait Model {
    type Elem: Clone + PartialEq + Debug;
    type Set: Clone + PartialEq + Debug;
    type Window: WindowGroup;

    fn name(&self) -> &'static str;
    fn cap(&self) -> usize;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;

    fn pow(&self, a: &Self::Elem, e: i64) -> Self::Elem {
        let base = if e < 0 { self.inv(a) } else { a.clone() };
        let mut acc = self.identity();
        let mut sq = base;
        let mut e = e.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.mul(&sq, &sq);
            }
        }
        acc
    }

    /// `g x g⁻¹`.
    fn conj(&self, g: &Self::Elem, x: &Self::Elem) -> Self::Elem {
        self.mul(&self.mul(g, x), &self.inv(g))
    }

    fn is_identity(&self, x: &Self::Elem) -> bool {
        *x == self.identity()
    }

    /// Largest `k` with `x ∈ B_k`.
    fn proximity_level(&self, x: &Self::Elem) -> Level;

    fn window(&self, k: u32) -> Self::Window;
    /// Image of `x ∈ U_ref` in `U_ref / B_k`.
    fn project(&self, x: &Self::Elem, k: u32) -> Result<WinElem<Self>>;
    /// A canonical preimage of a window element.
    fn lift(&self, w: &WinElem<Self>, k: u32) -> Self::Elem;

    fn contains(&self, s: &Self::Set, x: &Self::Elem) -> bool;
    /// Window image of a compact subgroup contained in `U_ref`.
    fn image(&self, s: &Self::Set, k: u32) -> Result<Image<Self>>;
    /// `g^j S g^{-j}`.
    fn conjugate_set(&self, s: &Self::Set, g: &Self::Elem, j: i64) -> Result<Self::Set>;
    fn intersect(&self, a: &Self::Set, b: &Self::Set) -> Result<Self::Set>;
    fn describe_set(&self, s: &Self::Set) -> String;
    fn describe_elem(&self, x: &Self::Elem) -> String;

    /// `U_ref`.
    fn reference(&self) -> Self::Set;
    /// `B_m`.
    fn level_set(&self, m: u32) -> Self::Set;
    /// Compact opens the tidying procedure is started from when a tidy
    /// subgroup is needed.
    fn tidy_seeds(&self, k: u32) -> Vec<Self::Set>;

    /// Closed forms `(U_+, U_-, U_0)` when the model has them.
    fn symbolic_parts(
        &self,
        u: &Self::Set,
        g: &Self::Elem,
    ) -> Result<Option<(Self::Set, Self::Set, Self::Set)>>;

    /// Factors `x ∈ U` as `w_- w_+` with `w_± ∈ U_±`.
    fn split(&self, u: &Self::Set, g: &Self::Elem, x: &Self::Elem)
        -> Result<(Self::Elem, Self::Elem)>;

    /// Factors `t ∈ U_+` as `t' v` with `t' ∈ con(g⁻¹) ∩ U_+` and `v ∈ U_0`.
    fn split_off_zero(
        &self,
        u: &Self::Set,
        g: &Self::Elem,
        t: &Self::Elem,
    ) -> Option<(Self::Elem, Self::Elem)>;

    /// Exact decision of `x ∈ con(g)`, when the model supports `g`.
    fn con_oracle(&self, g: &Self::Elem, x: &Self::Elem) -> Option<bool>;
    /// Exact decision of `x ∈ par(g)`.
    fn par_oracle(&self, g: &Self::Elem, x: &Self::Elem) -> Option<bool>;
    /// Exact decision of `∃N ∀n ≥ N: gⁿ x g⁻ⁿ ∈ B_m`.
    fn eventually_in_level(&self, g: &Self::Elem, x: &Self::Elem, m: u32) -> Option<bool>;
    /// Window image of `closure(con(g)) ∩ U_ref`.
    fn con_closure_image(&self, g: &Self::Elem, k: u32) -> Result<Option<Image<Self>>>;
    /// An element of `con(g) ∩ U_ref` built from integer coefficients, when
    /// the model can parametrize the contraction group.
    fn con_element(&self, g: &Self::Elem, coeffs: &[i64]) -> Option<Self::Elem>;
    /// Symbolic answer to "is `U_{--}` closed", when available.
    fn minusminus_certificate(&self, u: &Self::Set, g: &Self::Elem) -> Option<bool>;

    /// Deterministic trajectory fallback for contraction.
    fn con_by_trajectory(&self, g: &Self::Elem, x: &Self::Elem, k: u32, horizon: u32) -> Tri {
        let mut reached = None;
        let mut y = x.clone();
        for n in 0..=horizon {
            let ok = self.proximity_level(&y).at_least(k);
            match (reached, ok) {
                (None, true) => reached = Some(n),
                (Some(_), false) => return Tri::Inconclusive,
                _ => {}
            }
            y = self.conj(g, &y);
        }
        if reached.is_some() {
            Tri::TrueAtResolution
        } else {
            Tri::Inconclusive
        }
    }
}
