//! Brute-force reference implementations, deliberately naive and kept
//! apart from the metric code they check.

use serde::{Deserialize, Serialize};

use crate::metrics::trapezoid;
use crate::raster::{FloatMap, Mask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub metric: String,
    /// `None` when the quantity is undefined.
    pub value: Option<f64>,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    Standard,
    Combined,
}

fn delta(c: bool) -> u64 {
    c as u64
}

/// τ_b by a double loop over all pairs.
///
/// `Standard` uses the first reference only, and the textbook form
/// `Σ sgn·sgn / √((n0 − n1)(n0 − n2))` with tie counts `n1`, `n2`.
/// `Combined` evaluates the indicator sums literally: for each pair and
/// operator, the max and min over references of `Δ(ρ_x • ρ_y)`.
pub fn oracle_tau_bruteforce(r: &[f64], rho: &[&[f64]], mode: TauMode, tie_eps: f64) -> OracleResult {
    let n = r.len();
    let gt = |a: f64, b: f64| a - b > tie_eps;
    let lt = |a: f64, b: f64| b - a > tie_eps;
    let eq = |a: f64, b: f64| (a - b).abs() <= tie_eps;
    match mode {
        TauMode::Standard => {
            let p = rho[0];
            let sgn = |a: f64, b: f64| -> i64 {
                if gt(a, b) {
                    1
                } else if lt(a, b) {
                    -1
                } else {
                    0
                }
            };
            let (mut s, mut n1, mut n2) = (0i64, 0u64, 0u64);
            for x in 0..n {
                for y in x + 1..n {
                    s += sgn(r[x], r[y]) * sgn(p[x], p[y]);
                    n1 += delta(eq(r[x], r[y]));
                    n2 += delta(eq(p[x], p[y]));
                }
            }
            let n0 = (n * (n - 1) / 2) as u64;
            let denom = (((n0 - n1) * (n0 - n2)) as f64).sqrt();
            OracleResult {
                metric: "kendall_tau_b".into(),
                value: (denom > 0.0).then(|| s as f64 / denom),
                method: "double loop, sign products over sqrt((n0-n1)(n0-n2))".into(),
            }
        }
        TauMode::Combined => {
            let (mut c, mut d, mut t_rho, mut t_r) = (0u64, 0u64, 0u64, 0u64);
            for x in 0..n {
                for y in x + 1..n {
                    let g_max = |op: &dyn Fn(f64, f64) -> bool| rho.iter().map(|p| delta(op(p[x], p[y]))).max().unwrap_or(0);
                    let g_min = |op: &dyn Fn(f64, f64) -> bool| rho.iter().map(|p| delta(op(p[x], p[y]))).min().unwrap_or(0);
                    let gs_gt = g_max(&gt);
                    let gs_lt = g_max(&lt);
                    let gs_ne = g_max(&|a, b| !eq(a, b));
                    let gi_le = g_min(&|a, b| !gt(a, b));
                    let gi_ge = g_min(&|a, b| !lt(a, b));
                    let gi_eq = g_min(&eq);
                    let (e_gt, e_lt, e_eq) = (delta(gt(r[x], r[y])), delta(lt(r[x], r[y])), delta(eq(r[x], r[y])));
                    c += gs_gt * e_gt + gs_lt * e_lt;
                    d += gs_lt * gi_le * e_gt + gs_gt * gi_ge * e_lt;
                    t_rho += gi_eq * (e_gt + e_lt);
                    t_r += gs_ne * e_eq;
                }
            }
            let denom = (((c + d + t_r) * (c + d + t_rho)) as f64).sqrt();
            OracleResult {
                metric: "kendall_tau_combined".into(),
                value: (denom > 0.0).then(|| (c as f64 - d as f64) / denom),
                method: "double loop, literal max/min over per-reference indicators".into(),
            }
        }
    }
}

/// AuPRC over every distinct value of `s` as a threshold, counting the
/// confusion matrix by a full scan at each one.
pub fn oracle_auprc_exact(s: &FloatMap, gt: &Mask) -> OracleResult {
    let metric = "auprc_exact".to_string();
    let method = "full pixel scan per distinct threshold, trapezoid rule".to_string();
    let positives = gt.count();
    if positives == 0 || s.dims() != gt.dims() {
        return OracleResult { metric, value: None, method };
    }
    let mut ts: Vec<f64> = s.as_slice().to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for &t in &ts {
        let (mut tp, mut fp) = (0u64, 0u64);
        for (&v, &g) in s.as_slice().iter().zip(gt.as_slice()) {
            if v >= t {
                if g {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let precision = tp as f64 / (tp + fp) as f64;
        if points.is_empty() {
            points.push((0.0, precision));
        }
        points.push((tp as f64 / positives as f64, precision));
    }
    let mut area = 0.0;
    for w in points.windows(2) {
        area += trapezoid(w[0].0, w[0].1, w[1].0, w[1].1);
    }
    OracleResult {
        metric,
        value: Some(area),
        method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-9;

    #[test]
    fn two_object_cases() {
        let a = oracle_tau_bruteforce(&[0.51, 0.49], &[&[0.48, 0.52]], TauMode::Combined, EPS);
        assert_eq!(a.value, Some(-1.0));
        let b = oracle_tau_bruteforce(&[0.0, 0.5], &[&[0.3, 0.8]], TauMode::Standard, EPS);
        assert_eq!(b.value, Some(1.0));
    }

    #[test]
    fn reversed_ranks() {
        let r = [1.0, 2.0, 3.0, 4.0, 5.0];
        let p = [5.0, 4.0, 3.0, 2.0, 1.0];
        for mode in [TauMode::Standard, TauMode::Combined] {
            assert_eq!(oracle_tau_bruteforce(&r, &[&p, &p, &p], mode, EPS).value, Some(-1.0));
        }
    }

    #[test]
    fn perfect_and_anti_perfect_maps() {
        let gt = Mask::from_fn(10, 10, |x, y| x < 4 && y < 5);
        let perfect = gt.map(|&b| if b { 1.0 } else { 0.0 });
        assert_eq!(oracle_auprc_exact(&perfect, &gt).value, Some(1.0));
        let anti = gt.map(|&b| if b { 0.0 } else { 1.0 });
        // precision 0 until the last threshold, where everything is predicted
        assert_eq!(oracle_auprc_exact(&anti, &gt).value, Some(0.2 / 2.0));
    }
}
