use serde::{Deserialize, Serialize};

use super::GtError;

/// Observer/monitor setup of an eye-tracking session.
///
/// Angles are in degrees. Defaults are the laboratory values that yield a
/// foveal radius of about 65 px.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewingGeometry {
    pub viewing_distance_cm: f64,
    pub vertical_resolution_px: f64,
    pub monitor_height_cm: f64,
    pub fovea_half_angle_deg: f64,
    pub tracker_accuracy_deg: f64,
    #[serde(default)]
    pub gaze_eccentricity_deg: f64,
}

impl Default for ViewingGeometry {
    fn default() -> Self {
        Self {
            viewing_distance_cm: 75.0,
            vertical_resolution_px: 1050.0,
            monitor_height_cm: 29.5,
            fovea_half_angle_deg: 1.0,
            tracker_accuracy_deg: 0.4,
            gaze_eccentricity_deg: 0.0,
        }
    }
}

impl ViewingGeometry {
    /// Checks the stored-geometry invariants: every quantity strictly
    /// positive except eccentricity (non-negative), total angle below 90°.
    pub fn validate(&self) -> Result<(), GtError> {
        let positive = [
            ("viewing_distance_cm", self.viewing_distance_cm),
            ("vertical_resolution_px", self.vertical_resolution_px),
            ("monitor_height_cm", self.monitor_height_cm),
            ("fovea_half_angle_deg", self.fovea_half_angle_deg),
            ("tracker_accuracy_deg", self.tracker_accuracy_deg),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(GtError::InvalidGeometry(format!("{name} must be > 0, got {v}")));
            }
        }
        self.check_angles()
    }

    fn check_angles(&self) -> Result<(), GtError> {
        let theta = self.gaze_eccentricity_deg;
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(GtError::InvalidGeometry(format!(
                "gaze_eccentricity_deg must be >= 0, got {theta}"
            )));
        }
        let total = self.fovea_half_angle_deg + self.tracker_accuracy_deg + theta;
        if !(total < 90.0) {
            return Err(GtError::InvalidGeometry(format!(
                "total visual angle {total}° must stay below 90°"
            )));
        }
        Ok(())
    }
}

/// Radius in pixels of the foveal circle projected on the screen:
/// `d · (r / h) · (tan(α + η + θ) − tan θ)`.
///
/// Zero apertures are accepted here (they give σ = 0); negative inputs and
/// angles reaching 90° are rejected.
pub fn foveal_sigma(g: &ViewingGeometry) -> Result<f64, GtError> {
    let inputs = [
        g.viewing_distance_cm,
        g.vertical_resolution_px,
        g.monitor_height_cm,
        g.fovea_half_angle_deg,
        g.tracker_accuracy_deg,
    ];
    if inputs.iter().any(|v| !v.is_finite() || *v < 0.0) || g.monitor_height_cm == 0.0 {
        return Err(GtError::InvalidGeometry(format!("{g:?}")));
    }
    g.check_angles()?;
    let theta = g.gaze_eccentricity_deg.to_radians();
    let outer = (g.fovea_half_angle_deg + g.tracker_accuracy_deg + g.gaze_eccentricity_deg)
        .to_radians();
    let sigma = g.viewing_distance_cm * (g.vertical_resolution_px / g.monitor_height_cm)
        * (outer.tan() - theta.tan());
    if !sigma.is_finite() {
        return Err(GtError::NonFiniteSigma);
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_setup_gives_about_66_px() {
        let s = foveal_sigma(&ViewingGeometry::default()).unwrap();
        assert!((s - 66.0).abs() <= 1.0, "sigma = {s}");
        assert!((s - 65.240_967_621_670_93).abs() < 1e-9, "sigma = {s}");
    }

    #[test]
    fn zero_aperture_is_zero() {
        for theta in [0.0, 5.0, 30.0] {
            let g = ViewingGeometry {
                fovea_half_angle_deg: 0.0,
                tracker_accuracy_deg: 0.0,
                gaze_eccentricity_deg: theta,
                ..Default::default()
            };
            assert_eq!(foveal_sigma(&g).unwrap(), 0.0);
        }
    }

    #[test]
    fn eccentric_gaze_matches_series_evaluation() {
        // tan = sin / cos, both summed as power series
        fn series_tan(x: f64) -> f64 {
            let (mut s, mut c, mut term_s, mut term_c) = (0.0, 0.0, x, 1.0);
            for n in 0..30 {
                s += term_s;
                c += term_c;
                let k = 2.0 * n as f64;
                term_s *= -x * x / ((k + 2.0) * (k + 3.0));
                term_c *= -x * x / ((k + 1.0) * (k + 2.0));
            }
            s / c
        }
        let g = ViewingGeometry {
            gaze_eccentricity_deg: 10.0,
            ..Default::default()
        };
        let deg = std::f64::consts::PI / 180.0;
        let want = 75.0 * (1050.0 / 29.5) * (series_tan(11.4 * deg) - series_tan(10.0 * deg));
        let got = foveal_sigma(&g).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        // 40-digit mpmath evaluation
        assert!((got - 67.560_529_058_213_89).abs() < 1e-9, "{got}");
    }

    #[test]
    fn near_right_angle_is_rejected() {
        let g = ViewingGeometry {
            gaze_eccentricity_deg: 88.6,
            ..Default::default()
        };
        assert!(foveal_sigma(&g).is_err());
    }

    #[test]
    fn strictly_increasing_in_each_aperture_term() {
        let base = ViewingGeometry::default();
        let s0 = foveal_sigma(&base).unwrap();
        let bumped = [
            ViewingGeometry { fovea_half_angle_deg: 1.1, ..base },
            ViewingGeometry { tracker_accuracy_deg: 0.5, ..base },
            ViewingGeometry { viewing_distance_cm: 80.0, ..base },
        ];
        for g in bumped {
            assert!(foveal_sigma(&g).unwrap() > s0);
        }
    }

    #[test]
    fn validate_rejects_zero_aperture() {
        let g = ViewingGeometry {
            fovea_half_angle_deg: 0.0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        assert!(ViewingGeometry::default().validate().is_ok());
    }
}
