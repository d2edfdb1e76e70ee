//! Kendall's τ_b, in its usual tie-aware form and in a multi-reference form
//! where a pair is concordant when the estimate agrees with any reference
//! and discordant only when it agrees with none.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::exec::Execution;

/// Default tolerance under which two saliency values count as tied.
pub const DEFAULT_TIE_EPS: f64 = 1e-9;

/// Pair counts and the resulting coefficient.
///
/// `value` is `None` when the denominator vanishes (every pair tied on one
/// side), where τ_b is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in the estimate but not (in every reference) tied.
    pub ties_estimate: u64,
    /// Pairs strictly ordered by the estimate but tied in the reference(s).
    pub ties_reference: u64,
    pub value: Option<f64>,
}

impl KendallTau {
    fn from_counts(c: u64, d: u64, t_est: u64, t_ref: u64) -> Self {
        let left = (c + d + t_est) as f64;
        let right = (c + d + t_ref) as f64;
        let denom = (left * right).sqrt();
        let value = (denom > 0.0).then(|| (c as f64 - d as f64) / denom);
        Self {
            concordant: c,
            discordant: d,
            ties_estimate: t_est,
            ties_reference: t_ref,
            value,
        }
    }
}

/// Three-way comparison with a tie band of `eps`.
#[inline]
pub fn compare_eps(a: f64, b: f64, eps: f64) -> Ordering {
    if (a - b).abs() <= eps {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

fn check_lengths(estimate: &[f64], others: &[&[f64]]) -> Result<(), MetricError> {
    for o in others {
        if o.len() != estimate.len() {
            return Err(MetricError::LengthMismatch {
                expected: estimate.len(),
                found: o.len(),
            });
        }
    }
    if estimate.len() < 2 {
        return Err(MetricError::TooFewItems(estimate.len()));
    }
    Ok(())
}

/// `[c, d, t_est, t_ref]` summed over rows `i` of the upper triangle.
fn count_pairs<F>(n: usize, exec: Execution, classify: F) -> [u64; 4]
where
    F: Fn(usize, usize) -> Option<usize> + Sync + Send,
{
    let rows = exec.map_range(n, |i| {
        let mut acc = [0u64; 4];
        for j in i + 1..n {
            if let Some(k) = classify(i, j) {
                acc[k] += 1;
            }
        }
        acc
    });
    rows.into_iter().fold([0; 4], |mut a, r| {
        for k in 0..4 {
            a[k] += r[k];
        }
        a
    })
}

const CONCORDANT: usize = 0;
const DISCORDANT: usize = 1;
const TIE_ESTIMATE: usize = 2;
const TIE_REFERENCE: usize = 3;

/// Standard τ_b between `estimate` and `reference`.
pub fn kendall_tau_b(estimate: &[f64], reference: &[f64], tie_eps: f64) -> Result<KendallTau, MetricError> {
    kendall_tau_b_with(estimate, reference, tie_eps, Execution::Sequential)
}

pub fn kendall_tau_b_with(
    estimate: &[f64],
    reference: &[f64],
    tie_eps: f64,
    exec: Execution,
) -> Result<KendallTau, MetricError> {
    check_lengths(estimate, &[reference])?;
    let sign = |o: Ordering| o as i8;
    let [c, d, te, tr] = count_pairs(estimate.len(), exec, |i, j| {
        let se = sign(compare_eps(estimate[i], estimate[j], tie_eps));
        let sr = sign(compare_eps(reference[i], reference[j], tie_eps));
        match (se, sr) {
            (0, 0) => None,
            (0, _) => Some(TIE_ESTIMATE),
            (_, 0) => Some(TIE_REFERENCE),
            _ if se == sr => Some(CONCORDANT),
            _ => Some(DISCORDANT),
        }
    });
    Ok(KendallTau::from_counts(c, d, te, tr))
}

/// Multi-reference τ_b against several ground-truth rankings at once.
///
/// For each pair ordered strictly by the estimate: concordant if any
/// reference orders it the same way; discordant if no reference agrees and
/// at least one orders it the other way; a reference tie if every reference
/// ties it. A pair tied in the estimate counts as an estimate tie unless
/// every reference ties it too.
pub fn kendall_tau_combined(
    estimate: &[f64],
    references: &[&[f64]],
    tie_eps: f64,
) -> Result<KendallTau, MetricError> {
    kendall_tau_combined_with(estimate, references, tie_eps, Execution::Sequential)
}

pub fn kendall_tau_combined_with(
    estimate: &[f64],
    references: &[&[f64]],
    tie_eps: f64,
    exec: Execution,
) -> Result<KendallTau, MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    check_lengths(estimate, references)?;
    let [c, d, te, tr] = count_pairs(estimate.len(), exec, |i, j| {
        let est = compare_eps(estimate[i], estimate[j], tie_eps);
        let mut agrees = false;
        let mut opposes = false;
        let mut any_strict = false;
        for r in references {
            let o = compare_eps(r[i], r[j], tie_eps);
            if o != Ordering::Equal {
                any_strict = true;
                if o == est {
                    agrees = true;
                } else {
                    opposes = true;
                }
            }
        }
        match est {
            Ordering::Equal => any_strict.then_some(TIE_ESTIMATE),
            _ if agrees => Some(CONCORDANT),
            _ if opposes => Some(DISCORDANT),
            _ => Some(TIE_REFERENCE),
        }
    });
    Ok(KendallTau::from_counts(c, d, te, tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = DEFAULT_TIE_EPS;

    #[test]
    fn hypothetical_case_one_is_inverse() {
        let t = kendall_tau_b(&[0.51, 0.49], &[0.48, 0.52], EPS).unwrap();
        assert_eq!(t.value, Some(-1.0));
    }

    #[test]
    fn hypothetical_case_two_is_perfect() {
        let t = kendall_tau_b(&[0.0, 0.5], &[0.3, 0.8], EPS).unwrap();
        assert_eq!(t.value, Some(1.0));
    }

    #[test]
    fn reversed_ranks() {
        let t = kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0], EPS).unwrap();
        assert_eq!(t.value, Some(-1.0));
        assert_eq!(t.discordant, 6);
    }

    #[test]
    fn textbook_ties() {
        // x = (1,2,2,3), y = (1,3,2,2): C=3, D=1, T_x=1 (pair 1-2), T_y=1 (pair 2-3)
        // tau_b = 2 / sqrt(5 * 5) = 0.4
        let t = kendall_tau_b(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 2.0], EPS).unwrap();
        assert_eq!((t.concordant, t.discordant, t.ties_estimate, t.ties_reference), (3, 1, 1, 1));
        assert!((t.value.unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn all_tied_estimate_is_undefined() {
        let t = kendall_tau_b(&[0.0, 0.0, 0.0], &[0.1, 0.2, 0.3], EPS).unwrap();
        assert_eq!(t.value, None);
        assert_eq!(t.ties_estimate, 3);
    }

    #[test]
    fn tolerance_band_ties_close_values() {
        let t = kendall_tau_b(&[0.5, 0.5 + 1e-12], &[0.1, 0.2], EPS).unwrap();
        assert_eq!(t.ties_estimate, 1);
    }

    #[test]
    fn bad_inputs() {
        assert!(kendall_tau_b(&[1.0], &[1.0], EPS).is_err());
        assert!(kendall_tau_b(&[1.0, 2.0], &[1.0], EPS).is_err());
        assert!(kendall_tau_combined(&[1.0, 2.0], &[], EPS).is_err());
    }

    #[test]
    fn disagreeing_references_count_as_concordant() {
        let et = [1.0, 2.0];
        let pc = [2.0, 1.0];
        for r in [[0.2, 0.7], [0.7, 0.2]] {
            let t = kendall_tau_combined(&r, &[&et, &pc, &et], EPS).unwrap();
            assert_eq!((t.concordant, t.discordant), (1, 0));
            assert_eq!(t.value, Some(1.0));
        }
    }

    #[test]
    fn identical_references_reduce_to_standard() {
        let r = [0.3, 0.1, 0.1, 0.9, 0.5];
        let rho = [0.2, 0.2, 0.4, 0.9, 0.1];
        let a = kendall_tau_b(&r, &rho, EPS).unwrap();
        let b = kendall_tau_combined(&r, &[&rho, &rho, &rho], EPS).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_counts_match_sequential() {
        let r: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64).collect();
        let rho: Vec<f64> = (0..300).map(|i| ((i * 53) % 89) as f64).collect();
        let s = kendall_tau_combined_with(&r, &[&rho, &r], EPS, Execution::Sequential).unwrap();
        let p = kendall_tau_combined_with(&r, &[&rho, &r], EPS, Execution::Parallel).unwrap();
        assert_eq!(s, p);
    }
}
