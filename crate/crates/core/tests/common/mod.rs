//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use famsec_core::env::{self, Action, JointState, RoadNet, TaskParams};

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`, split into `pieces`
/// equal panels first so narrow peaks are not missed.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let f: &dyn Fn(f64) -> f64 = &f;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, fa, fm, fb);
            adaptive(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 50)
        })
        .sum()
}

fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

/// `1 - ∫ sqrt(p(x) q(x)) dx` for two normal densities, by quadrature.
pub fn hellinger_sq_quadrature(mp: f64, sp: f64, mq: f64, sq: f64) -> f64 {
    let lo = (mp - 12.0 * sp).min(mq - 12.0 * sq);
    let hi = (mp + 12.0 * sp).max(mq + 12.0 * sq);
    let pieces = (((hi - lo) / sp.min(sq)).ceil() as usize).max(16);
    let bc = integrate(
        |x| (normal_pdf(x, mp, sp) * normal_pdf(x, mq, sq)).sqrt(),
        lo,
        hi,
        pieces,
        1e-13,
    );
    1.0 - bc
}

/// Exact finite-horizon expectimax action values by full enumeration of
/// `transition_dist`.
pub fn expectimax_q(state: &JointState, net: &RoadNet, params: &TaskParams, horizon: usize) -> Vec<(Action, f64)> {
    env::actions(state, net)
        .into_iter()
        .map(|a| {
            let q = env::transition_dist(state, a, net, params)
                .unwrap()
                .into_iter()
                .map(|(next, p)| p * (env::reward(state, a, &next, params) + params.discount * value(&next, net, params, horizon - 1)))
                .sum();
            (a, q)
        })
        .collect()
}

pub fn value(state: &JointState, net: &RoadNet, params: &TaskParams, horizon: usize) -> f64 {
    if horizon == 0 || state.is_terminal() {
        return 0.0;
    }
    expectimax_q(state, net, params, horizon)
        .into_iter()
        .map(|(_, q)| q)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn expectimax_action(state: &JointState, net: &RoadNet, params: &TaskParams, horizon: usize) -> (Action, f64, f64) {
    let mut qs = expectimax_q(state, net, params, horizon);
    qs.sort_by(|a, b| b.1.total_cmp(&a.1));
    let gap = if qs.len() > 1 { qs[0].1 - qs[1].1 } else { f64::INFINITY };
    (qs[0].0, qs[0].1, gap)
}
