//! Conjugators that carry `g` to `gu`, and the convergence experiments built
//! on them.
//!
//! Everything here is finite-horizon: a trace of length `N` comes with
//! certificates `b_{N,k}` for `k ≤ N`, each checked by exact replay.

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernel::Level;
use crate::model::{Image, Model};
use crate::tidy::{con_membership, is_tidy_above};

/// One induction step: `c = u t_n b_{n,n} = w₋ w₊`, `y = g^{-n} w₊⁻¹ g^n`.
#[derive(Debug, Clone)]
pub struct Step<E> {
    pub n: u32,
    pub c: E,
    pub w_minus: E,
    pub w_plus: E,
    pub y: E,
    pub t_next: E,
}

#[derive(Debug, Clone)]
pub struct ConjugatorTrace<M: Model> {
    pub g: M::Elem,
    pub u: M::Elem,
    pub steps: Vec<Step<M::Elem>>,
    pub t: M::Elem,
    /// `b_{N,k}` for `0 ≤ k ≤ N`.
    pub certificates: Vec<M::Elem>,
}

fn ensure_tidy_above<M: Model>(model: &M, u: &M::Set, g: &M::Elem) -> Result<()> {
    let r = is_tidy_above(model, u, g, 1, 8)?;
    if !r.holds {
        return Err(Error::NotTidyAbove {
            level: r.failing_k.unwrap_or(0),
            witness: format!("{:?}", r.witness),
        });
    }
    Ok(())
}

/// Builds `t ∈ U_+` with `t⁻¹ (gu)^k t g^{-k} ∈ U` for every `0 ≤ k ≤ n_max`.
pub fn conjugator_forward<M: Model>(
    model: &M,
    g: &M::Elem,
    u: &M::Elem,
    uset: &M::Set,
    n_max: u32,
) -> Result<ConjugatorTrace<M>> {
    if !model.contains(uset, u) {
        return Err(Error::Hypothesis(format!(
            "{} is not in {}",
            model.describe_elem(u),
            model.describe_set(uset)
        )));
    }
    ensure_tidy_above(model, uset, g)?;
    let mut t = model.identity();
    let mut b = vec![model.identity()];
    let mut steps = Vec::new();
    for n in 0..n_max {
        let c = model.mul(&model.mul(u, &t), &b[n as usize]);
        let (w_minus, w_plus) = model.split(uset, g, &c)?;
        let gn = model.pow(g, n as i64);
        let y = model.conj(&model.inv(&gn), &model.inv(&w_plus));
        let yi = model.inv(&y);
        for (k, bk) in b.iter_mut().enumerate() {
            let gk = model.pow(g, k as i64);
            *bk = model.mul(&model.mul(&yi, bk), &model.conj(&gk, &y));
        }
        let last = model.mul(&model.mul(&yi, &model.inv(&t)), &model.conj(g, &w_minus));
        b.push(last);
        let t_next = model.mul(&t, &y);
        steps.push(Step { n, c, w_minus, w_plus, y, t_next: t_next.clone() });
        t = t_next;
    }
    Ok(ConjugatorTrace { g: g.clone(), u: u.clone(), steps, t, certificates: b })
}

/// Replays `t⁻¹ (gu)^k t g^{-k}` for `k` in `ks`; returns the first `k` whose
/// value leaves `U`.
pub fn replay<M: Model>(
    model: &M,
    g: &M::Elem,
    u: &M::Elem,
    t: &M::Elem,
    uset: &M::Set,
    ks: impl IntoIterator<Item = i64>,
) -> Option<i64> {
    let gu = model.mul(g, u);
    let ti = model.inv(t);
    ks.into_iter().find(|&k| {
        let x = model.mul(&model.mul(&model.mul(&ti, &model.pow(&gu, k)), t), &model.pow(g, -k));
        !model.contains(uset, &x)
    })
}

/// Checks the trace certificates and the replay identity for `0 ≤ k ≤ N`.
pub fn verify_trace<M: Model>(model: &M, trace: &ConjugatorTrace<M>, uset: &M::Set) -> Result<()> {
    let (g, u, t) = (&trace.g, &trace.u, &trace.t);
    let gu = model.mul(g, u);
    let ti = model.inv(t);
    for (k, bk) in trace.certificates.iter().enumerate() {
        let lhs = model.mul(&model.mul(&ti, &model.pow(&gu, k as i64)), t);
        let rhs = model.mul(bk, &model.pow(g, k as i64));
        if lhs != rhs || !model.contains(uset, bk) {
            return Err(Error::CheckFailed(format!("replay fails at k={k}")));
        }
    }
    Ok(())
}

/// `t = t' v` with `v ∈ U_0` and `t' ∈ con(g⁻¹) ∩ U_+`. The flag is false
/// when the model cannot split, in which case `t` comes back unchanged.
pub fn adjust_to_contraction<M: Model>(
    model: &M,
    uset: &M::Set,
    g: &M::Elem,
    t: &M::Elem,
) -> (M::Elem, M::Elem, bool) {
    match model.split_off_zero(uset, g, t) {
        Some((rest, zero)) => (rest, zero, true),
        None => (t.clone(), model.identity(), false),
    }
}

#[derive(Debug, Clone)]
pub struct TwoSided<M: Model> {
    pub forward: ConjugatorTrace<M>,
    pub backward: ConjugatorTrace<M>,
    pub v_plus: M::Elem,
    pub v_minus: M::Elem,
    pub r: M::Elem,
}

/// `r` with `r⁻¹ (gu)^k r g^{-k} ∈ U` for `|k| ≤ n_max`, assuming
/// `u ∈ U ∩ g⁻¹Ug`.
pub fn conjugator_two_sided<M: Model>(
    model: &M,
    g: &M::Elem,
    u: &M::Elem,
    uset: &M::Set,
    n_max: u32,
) -> Result<TwoSided<M>> {
    if !model.contains(uset, u) || !model.contains(uset, &model.conj(g, u)) {
        return Err(Error::Hypothesis(format!(
            "{} is not in U ∩ g⁻¹Ug",
            model.describe_elem(u)
        )));
    }
    let forward = conjugator_forward(model, g, u, uset, n_max)?;
    let gi = model.inv(g);
    // g' = g⁻¹ and u' = g u⁻¹ g⁻¹ give g'u' = (gu)⁻¹.
    let u2 = model.conj(g, &model.inv(u));
    let backward = conjugator_forward(model, &gi, &u2, uset, n_max)?;
    let (t, s) = (&forward.t, &backward.t);
    let x = model.mul(&model.inv(s), t);
    let (w_minus, w_plus) = model.split(uset, g, &model.inv(&x))?;
    let v_plus = model.inv(&w_plus);
    let v_minus = model.inv(&w_minus);
    let r = model.mul(t, &w_minus);
    if r != model.mul(s, &v_plus) {
        return Err(Error::CheckFailed("t·v₋⁻¹ ≠ s·v₊".into()));
    }
    Ok(TwoSided { forward, backward, v_plus, v_minus, r })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub samples: usize,
    pub window_failures: usize,
    /// Samples on which the exact oracle also confirmed membership.
    pub exact_confirmed: usize,
    pub counterexample: Option<String>,
    pub pass: bool,
}

fn in_window<M: Model>(model: &M, img: &Image<M>, x: &M::Elem, k: u32) -> bool {
    model.project(x, k).is_ok_and(|w| img.contains(&w))
}

/// `t con(g) t⁻¹ = con(gu)`, tested at resolution `k` on random elements of
/// both sides. A sample passes when its transport lands in the window image
/// of the other closed contraction group; the exact oracle verdict is
/// recorded alongside.
pub fn con_transport_check<M: Model, R: Rng>(
    model: &M,
    g: &M::Elem,
    u: &M::Elem,
    t: &M::Elem,
    samples: usize,
    k: u32,
    rng: &mut R,
) -> Result<TransportReport> {
    let gu = model.mul(g, u);
    let ti = model.inv(t);
    let (Some(img_g), Some(img_gu)) = (model.con_closure_image(g, k)?, model.con_closure_image(&gu, k)?)
    else {
        return Err(Error::UnsupportedClass("no contraction closure image".into()));
    };
    let mut report = TransportReport {
        samples: 0,
        window_failures: 0,
        exact_confirmed: 0,
        counterexample: None,
        pass: true,
    };
    for side in [0, 1] {
        let (from, to, conj, target) = if side == 0 {
            (g, &gu, t, &img_gu)
        } else {
            (&gu, g, &ti, &img_g)
        };
        for _ in 0..samples {
            let coeffs: Vec<i64> = (0..6).map(|_| rng.gen_range(-8..=8)).collect();
            let Some(c) = model.con_element(from, &coeffs) else {
                return Err(Error::UnsupportedClass("cannot sample con".into()));
            };
            let moved = model.conj(conj, &c);
            report.samples += 1;
            if con_membership(model, to, &moved, k, 4 * k + 8).is_true() {
                report.exact_confirmed += 1;
            }
            if !in_window(model, target, &moved, k) {
                report.window_failures += 1;
                report.pass = false;
                report.counterexample.get_or_insert_with(|| model.describe_elem(&c));
            }
        }
    }
    Ok(report)
}

/// Dyadic Chabauty-type distance at finite resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    /// `2^{-m}` with `m` the first level where the images differ.
    Dyadic(u32),
    /// Images agree at every level up to the resolution.
    Indistinguishable(u32),
}

impl Distance {
    /// Ordering key: larger means farther apart.
    fn rank(self) -> i64 {
        match self {
            Distance::Dyadic(m) => -(m as i64),
            Distance::Indistinguishable(_) => i64::MIN,
        }
    }

    pub fn is_indistinguishable(self) -> bool {
        matches!(self, Distance::Indistinguishable(_))
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.rank().cmp(&other.rank()))
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        match self {
            Distance::Dyadic(m) => {
                let mut st = s.serialize_struct("Distance", 2)?;
                st.serialize_field("num", &1)?;
                st.serialize_field("log2_denom", m)?;
                st.end()
            }
            Distance::Indistinguishable(k) => s.serialize_str(&format!("indist@{k}")),
        }
    }
}

impl std::fmt::Display for Distance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Distance::Dyadic(m) => write!(f, "2^-{m}"),
            Distance::Indistinguishable(k) => write!(f, "indist@{k}"),
        }
    }
}

/// Window images of a closed subgroup of `U_ref` at every level `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSubgroupApprox<M: Model> {
    pub reference: String,
    pub images: Vec<Image<M>>,
}

impl<M: Model> ClosedSubgroupApprox<M> {
    /// Coarser images are obtained by projecting lifts of the finest one.
    pub fn from_top(model: &M, top: &Image<M>, k: u32) -> Result<Self> {
        let mut images = Vec::new();
        for j in 0..=k {
            let w = model.window(j);
            let mut els = std::collections::BTreeSet::new();
            for e in &top.elements {
                els.insert(model.project(&model.lift(e, k), j)?);
            }
            images.push(crate::kernel::SubgroupImage::from_set(&w, els));
        }
        Ok(ClosedSubgroupApprox { reference: model.describe_set(&model.reference()), images })
    }

    pub fn resolution(&self) -> u32 {
        self.images.len() as u32 - 1
    }
}

pub fn chabauty_distance<M: Model>(
    a: &ClosedSubgroupApprox<M>,
    b: &ClosedSubgroupApprox<M>,
) -> Result<Distance> {
    if a.reference != b.reference || a.images.len() != b.images.len() {
        return Err(Error::WindowMismatch {
            left: format!("{}@{}", a.reference, a.resolution()),
            right: format!("{}@{}", b.reference, b.resolution()),
        });
    }
    for (m, (x, y)) in a.images.iter().zip(&b.images).enumerate() {
        if x != y {
            return Ok(Distance::Dyadic(m as u32));
        }
    }
    Ok(Distance::Indistinguishable(a.resolution()))
}

#[derive(Debug, Clone, Serialize)]
pub struct NubTransport {
    pub order_conjugated: usize,
    pub order_target: usize,
    pub pass: bool,
}

/// `r nub(g) r⁻¹ = nub(gu)` at resolution `k`, given both nub images.
pub fn nub_transport_check<M: Model>(
    model: &M,
    r: &M::Elem,
    nub_g: &Image<M>,
    nub_gu: &Image<M>,
    k: u32,
) -> Result<NubTransport> {
    let w = model.window(k);
    let rw = model.project(r, k)?;
    let moved = nub_g.conjugate(&w, &rw);
    Ok(NubTransport {
        order_conjugated: moved.order(),
        order_target: nub_gu.order(),
        pass: moved == *nub_gu,
    })
}

/// Window image of `closure(con(g)) ∩ closure(con(g⁻¹))`.
pub fn nub_by_con_closures<M: Model>(model: &M, g: &M::Elem, k: u32) -> Result<Image<M>> {
    match (model.con_closure_image(g, k)?, model.con_closure_image(&model.inv(g), k)?) {
        (Some(a), Some(b)) => a.intersection(&b),
        _ => Err(Error::UnsupportedClass("no contraction closure image".into())),
    }
}

/// One step of a shrinking schedule: `u_n ∈ U_n`, plus the coarser `U'_n`
/// with `u_n ∈ U'_n ∩ g⁻¹U'_n g` used for the two-sided conjugator.
#[derive(Debug, Clone)]
pub struct ScheduleItem<M: Model> {
    pub n: u32,
    pub u: M::Elem,
    pub uset: M::Set,
    pub two_sided_set: M::Set,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetRow {
    pub experiment: String,
    pub model: String,
    pub n: u32,
    pub level_u: Level,
    pub level_t: Level,
    pub level_r: Level,
    /// `n − level(t_n)`; absent when `t_n` is the identity.
    pub lag: Option<i64>,
    pub t_in_plus: bool,
    pub d_con: Distance,
    pub d_nub: Distance,
    pub pass: bool,
}

/// Runs the conjugator along the schedule and measures how `t_n`, `r_n`,
/// `con(g u_n)` and `nub(g u_n)` approach their values at `g`.
pub fn net_experiment<M: Model>(
    model: &M,
    g: &M::Elem,
    schedule: &[ScheduleItem<M>],
    k: u32,
    horizon: u32,
) -> Result<Vec<NetRow>> {
    let con_g = ClosedSubgroupApprox::from_top(
        model,
        &model.con_closure_image(g, k)?.ok_or_else(|| Error::UnsupportedClass("con closure".into()))?,
        k,
    )?;
    let nub_g = ClosedSubgroupApprox::from_top(model, &nub_by_con_closures(model, g, k)?, k)?;
    let mut rows = Vec::new();
    for item in schedule {
        let gn = model.mul(g, &item.u);
        let trace = conjugator_forward(model, g, &item.u, &item.uset, horizon)
            .map_err(|e| Error::CheckFailed(format!("n={}: {e}", item.n)))?;
        verify_trace(model, &trace, &item.uset)?;
        let (t, _, _) = adjust_to_contraction(model, &item.uset, g, &trace.t);
        let plus = model
            .symbolic_parts(&item.uset, g)?
            .map(|(plus, _, _)| plus)
            .ok_or_else(|| Error::UnsupportedClass("closed U_+".into()))?;
        let two = conjugator_two_sided(model, g, &item.u, &item.two_sided_set, horizon)
            .map_err(|e| Error::CheckFailed(format!("n={}: {e}", item.n)))?;
        let con_n = ClosedSubgroupApprox::from_top(
            model,
            &model
                .con_closure_image(&gn, k)?
                .ok_or_else(|| Error::UnsupportedClass("con closure".into()))?,
            k,
        )?;
        let nub_n = ClosedSubgroupApprox::from_top(model, &nub_by_con_closures(model, &gn, k)?, k)?;
        let t_in_plus = model.contains(&plus, &t);
        let level_t = model.proximity_level(&t);
        let lag = match level_t {
            Level::Finite(l) => Some(item.n as i64 - l as i64),
            Level::Infinite => None,
            Level::Outside => Some(item.n as i64 + 1),
        };
        let pass = model.contains(&item.uset, &item.u)
            && t_in_plus
            && replay(model, g, &item.u, &t, &item.uset, 0..=horizon as i64).is_none();
        rows.push(NetRow {
            experiment: "net-limits".into(),
            model: model.name().into(),
            n: item.n,
            level_u: model.proximity_level(&item.u),
            level_t,
            lag,
            t_in_plus,
            level_r: model.proximity_level(&two.r),
            d_con: chabauty_distance(&con_n, &con_g)?,
            d_nub: chabauty_distance(&nub_n, &nub_g)?,
            pass,
        });
    }
    Ok(rows)
}

/// Model A schedule: `u_n = δ_{n+1}` in `U_n = W(n)`.
pub fn shift_schedule(
    model: &crate::shift::ShiftModel,
    n_max: u32,
) -> Vec<ScheduleItem<crate::shift::ShiftModel>> {
    (1..=n_max)
        .map(|n| ScheduleItem {
            n,
            u: model.lamp(&[n as i64 + 1]),
            uset: model.level_set(n),
            two_sided_set: model.level_set(n),
        })
        .collect()
}

/// Model B schedule for `g = diag(p, 1)`: `u_n = I + pⁿE_21` in the
/// Iwahori subgroup cut down to level `n`. The two-sided conjugator runs in
/// level `n − 1` (the Iwahori subgroup when `n = 1`), since `g u_n g⁻¹`
/// only lies at level `n − 1`.
pub fn linear_schedule(
    model: &crate::linear::LinearModel,
    n_max: u32,
) -> Vec<ScheduleItem<crate::linear::LinearModel>> {
    use crate::linear::{q, Bound, QMatrix, ValShape};
    let iwahori = ValShape::from_fn(model.n, |r, s| Bound::Fin((r < s) as i64));
    (1..=n_max)
        .map(|n| {
            let u = QMatrix::elementary(model.n, 1, 0, q(model.p as i64).pow(n as i32))
                .expect("unipotent");
            let uset = model.shape(iwahori.meet(&ValShape::uniform(model.n, n as i64)));
            let two_sided_set = if n == 1 {
                model.shape(iwahori.clone())
            } else {
                model.level_set(n - 1)
            };
            ScheduleItem { n, u, uset, two_sided_set }
        })
        .collect()
}
