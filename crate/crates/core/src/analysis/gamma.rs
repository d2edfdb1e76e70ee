use serde::{Deserialize, Serialize};

use super::AnalysisError;

pub const GAMMA_MAX: f64 = 16.0;

/// Exponent of `y ≈ x^g` and its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub g: f64,
    /// `None` when the `ys` have zero variance.
    pub r_squared: Option<f64>,
}

fn sse(xs: &[f64], ys: &[f64], g: f64) -> f64 {
    xs.iter().zip(ys).fold(0.0, |acc, (&x, &y)| {
        let d = y - x.powf(g);
        acc + d * d
    })
}

/// Least-squares fit of `y = x^g` for `g ∈ (0, 16]`.
///
/// A coarse scan brackets the global minimum, which golden-section search
/// then refines.
pub fn gamma_fit(xs: &[f64], ys: &[f64]) -> Result<GammaFit, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(AnalysisError::TooFewPoints(xs.len()));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(AnalysisError::ValueOutOfRange(*v));
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(AnalysisError::DegenerateInput);
    }

    const STEPS: usize = 1600;
    let step = GAMMA_MAX / STEPS as f64;
    let mut best = (f64::INFINITY, step);
    for i in 1..=STEPS {
        let g = i as f64 * step;
        let e = sse(xs, ys, g);
        if e < best.0 {
            best = (e, g);
        }
    }
    let mut lo = (best.1 - step).max(f64::MIN_POSITIVE);
    let mut hi = (best.1 + step).min(GAMMA_MAX);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (sse(xs, ys, c), sse(xs, ys, d));
    while hi - lo > 1e-10 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = sse(xs, ys, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = sse(xs, ys, d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let g = [mid, best.1]
        .into_iter()
        .min_by(|a, b| sse(xs, ys, *a).total_cmp(&sse(xs, ys, *b)))
        .unwrap();

    let n = ys.len() as f64;
    let mean = ys.iter().fold(0.0, |a, y| a + y) / n;
    let ss_tot = ys.iter().fold(0.0, |a, y| a + (y - mean) * (y - mean));
    let constant = ys.iter().all(|&y| y == ys[0]);
    let r_squared = (!constant && ss_tot > 0.0).then(|| 1.0 - sse(xs, ys, g) / ss_tot);
    Ok(GammaFit { g, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn exact_power_laws() {
        let xs = grid(25);
        for g0 in [0.5, 1.0, 2.0, 3.0] {
            let ys: Vec<f64> = xs.iter().map(|x| x.powf(g0)).collect();
            let f = gamma_fit(&xs, &ys).unwrap();
            assert!((f.g - g0).abs() < 1e-3, "g0={g0} got {}", f.g);
            assert!((f.r_squared.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(gamma_fit(&[0.1, 0.2], &[0.1, 0.2]).is_err());
        assert!(gamma_fit(&[0.3, 0.3, 0.3], &[0.1, 0.2, 0.3]).is_err());
        assert!(gamma_fit(&[0.1, 0.2, 1.3], &[0.1, 0.2, 0.3]).is_err());
        let f = gamma_fit(&[0.1, 0.5, 0.9], &[0.4, 0.4, 0.4]).unwrap();
        assert_eq!(f.r_squared, None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn agrees_with_dense_grid(g0 in 0.3f64..4.0, noise in proptest::collection::vec(-0.05f64..0.05, 20)) {
            let xs = grid(20);
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| (x.powf(g0) + e).clamp(0.0, 1.0)).collect();
            let f = gamma_fit(&xs, &ys).unwrap();
            let mut best = (f64::INFINITY, 0.0);
            for i in 1..=20_000 {
                let g = i as f64 * 4e-4;
                let e: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - x.powf(g)).powi(2)).sum();
                if e < best.0 { best = (e, g); }
            }
            prop_assert!((f.g - best.1).abs() < 1e-3, "fit {} grid {}", f.g, best.1);
        }
    }
}
