//! Single-shot commands. Each returns report rows; errors abort the command.

use anyhow::{anyhow, Result};
use serde_json::{json, Value};
use tdlc::limits::{
    adjust_to_contraction, conjugator_forward, conjugator_two_sided, linear_schedule, net_experiment,
    replay, shift_schedule, verify_trace, NetRow,
};
use tdlc::linear::{scale_formula, LinearModel, QMatrix};
use tdlc::shift::{LampSet, ShiftModel};
use tdlc::tidy::{
    all_tidy, con_membership, is_tidy_above, nub_compute, par_membership, scale_index, tidy_from,
    ScaleReport,
};
use tdlc::{Error, Model};

use crate::{ModelKind, Row, RunConfig};

pub fn shift_model(cfg: &RunConfig) -> Result<ShiftModel> {
    Ok(ShiftModel::new(u8::try_from(cfg.p)?)?)
}

/// The model adapted to `g` when its eigenbasis is rational, the standard
/// frame otherwise.
pub fn linear_model_for(p: u64, g: &QMatrix) -> Result<LinearModel> {
    match LinearModel::adapted_to(p, g) {
        Ok(m) => Ok(m),
        Err(Error::UnsupportedClass(_)) => Ok(LinearModel::new(p, g.n())?),
        Err(e) => Err(e.into()),
    }
}

fn parse_matrix(s: &str) -> Result<QMatrix> {
    s.parse::<QMatrix>().map_err(|e| anyhow!("matrix '{s}': {e}"))
}

/// Cap used for a second attempt before the resolution is coarsened.
pub const WIDE_CAP: usize = 1 << 20;

/// Linear scale at resolution `k`, retried under [`WIDE_CAP`] when the
/// default cap is too small.
pub fn linear_scale(lm: &LinearModel, g: &QMatrix, k: u32, cfg: &RunConfig) -> tdlc::Result<ScaleReport<LinearModel>> {
    match scale_index(lm, g, k, cfg.max_k, cfg.horizon) {
        Err(Error::ResolutionTooFine { .. }) => {
            scale_index(&lm.clone().with_cap(WIDE_CAP), g, k, cfg.max_k, cfg.horizon)
        }
        r => r,
    }
}

/// Scale at the first resolution from `k` upwards whose window index is
/// certified exact. Falls back to coarser windows when the cap is hit first;
/// the returned report then says it is not exact.
pub fn scale_search<M: Model>(
    k: u32,
    mut f: impl FnMut(u32) -> tdlc::Result<ScaleReport<M>>,
) -> Result<(ScaleReport<M>, u32)> {
    let mut best = None;
    for k in k.max(1)..=8 {
        match f(k) {
            Ok(r) if r.exact => return Ok((r, k)),
            Ok(r) => best = Some((r, k)),
            Err(Error::ResolutionTooFine { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    match best {
        Some(b) => Ok(b),
        None => at_feasible_resolution(k, f),
    }
}

/// Coarsens the resolution until the window fits under the cap.
fn at_feasible_resolution<T>(k: u32, mut f: impl FnMut(u32) -> tdlc::Result<T>) -> Result<(T, u32)> {
    let mut k = k.max(1);
    loop {
        match f(k) {
            Err(Error::ResolutionTooFine { .. }) if k > 1 => k -= 1,
            r => return Ok((r?, k)),
        }
    }
}

pub fn scale(cfg: &RunConfig, g: &str) -> Result<Vec<Row>> {
    let params = json!({"p": cfg.p, "g": g, "resolution": cfg.resolution});
    match cfg.model_or_shift() {
        ModelKind::Shift => {
            let sm = shift_model(cfg)?;
            let g = sm.parse(g)?;
            let (r, k) = scale_search(cfg.resolution, |k| scale_index(&sm, &g, k, cfg.max_k, cfg.horizon))?;
            // The lamp group is a normal compact open subgroup, so every
            // element has scale 1.
            let out = json!({"scale": r.scale, "scale_formula": 1, "agree": r.scale == 1, "exact": r.exact,
                             "tidy": sm.describe_set(&r.tidy.tidy), "resolution": k});
            Ok(vec![Row::new("scale", "shift", params, out, r.exact && r.scale == 1)])
        }
        ModelKind::Linear => {
            let g = parse_matrix(g)?;
            let lm = linear_model_for(cfg.p, &g)?;
            let (r, k) = scale_search(cfg.resolution, |k| linear_scale(&lm, &g, k, cfg))?;
            let f = scale_formula(&g, cfg.p);
            let agree = r.scale as u128 == f;
            let out = json!({"scale": r.scale, "scale_formula": f as u64, "agree": agree, "exact": r.exact,
                             "tidy": lm.describe_set(&r.tidy.tidy), "resolution": k});
            Ok(vec![Row::new("scale", "linear", params, out, r.exact && agree)])
        }
    }
}

fn tidy_row<M: Model>(model: &M, cfg: &RunConfig, u: &M::Set, g: &M::Elem, params: Value) -> Result<Row> {
    let first = is_tidy_above(model, u, g, cfg.resolution, cfg.horizon)?;
    let rep = tidy_from(model, u, g, cfg.max_k, cfg.resolution, cfg.horizon)?;
    let out = json!({
        "tidy": model.describe_set(&rep.tidy),
        "k": rep.k_used,
        "tidy_above": rep.above.holds,
        "checked_to": rep.above.checked_to,
        "tidy_below": rep.below.value,
        "below_witness": rep.below.witness,
        "seed_failing_k": first.failing_k,
    });
    let row = Row::new("tidy", model.name(), params, out, rep.above.holds);
    Ok(match (first.witness, first.failing_k) {
        (Some(w), Some(k)) => row.with_witness(json!(model.describe_elem(&model.lift(&w, k)))),
        _ => row,
    })
}

pub fn tidy(cfg: &RunConfig, u: &str, g: &str) -> Result<Vec<Row>> {
    let params = json!({"p": cfg.p, "u": u, "g": g, "resolution": cfg.resolution, "max_k": cfg.max_k});
    Ok(vec![match cfg.model_or_shift() {
        ModelKind::Shift => {
            let sm = shift_model(cfg)?;
            tidy_row(&sm, cfg, &LampSet::parse(sm.p, u)?, &sm.parse(g)?, params)?
        }
        ModelKind::Linear => {
            let g = parse_matrix(g)?;
            let lm = LinearModel::new(cfg.p, g.n())?;
            tidy_row(&lm, cfg, &lm.parse_set(u)?, &g, params)?
        }
    }])
}

fn con_row<M: Model>(model: &M, cfg: &RunConfig, g: &M::Elem, x: &M::Elem, params: Value) -> Row {
    let gi = model.inv(g);
    let out = json!({
        "con": con_membership(model, g, x, cfg.resolution, cfg.horizon),
        "con_inverse": con_membership(model, &gi, x, cfg.resolution, cfg.horizon),
        "par": par_membership(model, g, x, cfg.horizon),
        "par_inverse": par_membership(model, &gi, x, cfg.horizon),
    });
    Row::new("con-test", model.name(), params, out, true)
}

pub fn con_test(cfg: &RunConfig, g: &str, x: &str) -> Result<Vec<Row>> {
    let params = json!({"p": cfg.p, "g": g, "x": x});
    Ok(vec![match cfg.model_or_shift() {
        ModelKind::Shift => {
            let sm = shift_model(cfg)?;
            con_row(&sm, cfg, &sm.parse(g)?, &sm.parse(x)?, params)
        }
        ModelKind::Linear => {
            let g = parse_matrix(g)?;
            let lm = linear_model_for(cfg.p, &g)?;
            con_row(&lm, cfg, &g, &parse_matrix(x)?, params)
        }
    }])
}

pub fn nub_row<M: Model>(model: &M, cfg: &RunConfig, g: &M::Elem, k: u32, params: Value) -> Row {
    let r = all_tidy(model, g, cfg.max_k, k, cfg.horizon)
        .and_then(|tidy| nub_compute(model, g, k, 2 * k + 2, &tidy));
    match r {
        Ok(rep) => {
            let out = json!({"order": rep.image.order(), "resolution": k, "entries": rep.entries});
            Row::new("nub", model.name(), params, out, true)
        }
        Err(e) => Row::new("nub", model.name(), params, json!({"resolution": k}), false)
            .with_witness(json!(e.to_string())),
    }
}

pub fn nub(cfg: &RunConfig, g: &str) -> Result<Vec<Row>> {
    let params = json!({"p": cfg.p, "g": g, "resolution": cfg.resolution});
    Ok(vec![match cfg.model_or_shift() {
        ModelKind::Shift => {
            let sm = shift_model(cfg)?;
            nub_row(&sm, cfg, &sm.parse(g)?, cfg.resolution, params)
        }
        ModelKind::Linear => {
            let g = parse_matrix(g)?;
            let lm = linear_model_for(cfg.p, &g)?;
            nub_row(&lm, cfg, &g, cfg.resolution, params)
        }
    }])
}

fn conjugator_row<M: Model>(
    model: &M,
    cfg: &RunConfig,
    g: &M::Elem,
    u: &M::Elem,
    uset: &M::Set,
    params: Value,
) -> Result<Row> {
    let n = cfg.horizon;
    let trace = conjugator_forward(model, g, u, uset, n)?;
    let verified = verify_trace(model, &trace, uset).is_ok();
    let (t, v, adjusted) = adjust_to_contraction(model, uset, g, &trace.t);
    let two = conjugator_two_sided(model, g, u, uset, n);
    let two_ok = two
        .as_ref()
        .map(|ts| replay(model, g, u, &ts.r, uset, -(n as i64)..=n as i64).is_none())
        .ok();
    let out = json!({
        "t": model.describe_elem(&trace.t),
        "t_contracting": model.describe_elem(&t),
        "v": model.describe_elem(&v),
        "adjusted": adjusted,
        "certificates": trace.certificates.len(),
        "forward_replay": verified,
        "r": two.as_ref().ok().map(|ts| model.describe_elem(&ts.r)),
        "two_sided_replay": two_ok,
        "level_t": model.proximity_level(&trace.t),
    });
    let pass = verified && two_ok != Some(false);
    let row = Row::new("conjugator", model.name(), params, out, pass);
    Ok(match two {
        Err(e) => row.with_witness(json!(format!("two-sided skipped: {e}"))),
        Ok(_) => row,
    })
}

pub fn conjugator(cfg: &RunConfig, g: &str, u: &str, set: &str) -> Result<Vec<Row>> {
    let params = json!({"p": cfg.p, "g": g, "u": u, "set": set, "horizon": cfg.horizon});
    Ok(vec![match cfg.model_or_shift() {
        ModelKind::Shift => {
            let sm = shift_model(cfg)?;
            conjugator_row(&sm, cfg, &sm.parse(g)?, &sm.parse(u)?, &LampSet::parse(sm.p, set)?, params)?
        }
        ModelKind::Linear => {
            let g = parse_matrix(g)?;
            let lm = LinearModel::new(cfg.p, g.n())?;
            let uset = lm.parse_set(set)?;
            conjugator_row(&lm, cfg, &g, &parse_matrix(u)?, &uset, params)?
        }
    }])
}

fn net_rows(model: &str, params: &Value, rows: Vec<NetRow>) -> Vec<Row> {
    rows.into_iter()
        .map(|r| {
            let pass = r.pass;
            Row::new("net-limits", model, params.clone(), serde_json::to_value(&r).expect("row"), pass)
        })
        .collect()
}

/// The default shrinking schedules: the shift with `δ_{n+1}` in `W(n)`, and
/// `diag(p, 1)` with `I + pⁿE_21` in the level-`n` Iwahori subgroup.
pub fn experiment_limits(cfg: &RunConfig) -> Result<Vec<Row>> {
    let k = cfg.resolution;
    let mut out = Vec::new();
    for kind in cfg.models() {
        let params = json!({"p": cfg.p, "n_max": cfg.n_max, "resolution": k, "horizon": cfg.horizon});
        match kind {
            ModelKind::Shift => {
                let sm = shift_model(cfg)?;
                let rows = net_experiment(&sm, &sm.shift(), &shift_schedule(&sm, cfg.n_max), k, cfg.horizon)?;
                out.extend(net_rows("shift", &params, rows));
            }
            ModelKind::Linear => {
                let lm = LinearModel::new(cfg.p, 2)?;
                let g = QMatrix::diag(&[tdlc::linear::q(cfg.p as i64), tdlc::linear::q(1)])?;
                let rows = net_experiment(&lm, &g, &linear_schedule(&lm, cfg.n_max), k, cfg.horizon)?;
                out.extend(net_rows("linear", &params, rows));
            }
        }
    }
    Ok(out)
}
