use crate::error::{FcsError, Result};

/// Denoising strength over the course of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HSchedule {
    /// `h0` for the first half, `h0/2` until 90 %, then `h0/4`.
    Staged { h0: f64 },
    /// `h0 (1 - t/total)^exponent`, reaching zero at `t = total`.
    PowerCurve { h0: f64, exponent: f64 },
}

impl HSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            HSchedule::Staged { h0 } => h0 >= 0.0 && h0.is_finite(),
            HSchedule::PowerCurve { h0, exponent } => {
                h0 >= 0.0 && h0.is_finite() && exponent >= 0.0 && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(FcsError::InvalidParameter(format!("bad schedule {self:?}")))
        }
    }

    pub fn initial(&self) -> f64 {
        match *self {
            HSchedule::Staged { h0 } | HSchedule::PowerCurve { h0, .. } => h0,
        }
    }
}

/// Strength at iteration `t` of `total`.
pub fn h_schedule_eval(schedule: &HSchedule, t: usize, total: usize) -> f64 {
    let frac = if total == 0 {
        1.0
    } else {
        (t as f64 / total as f64).min(1.0)
    };
    match *schedule {
        HSchedule::Staged { h0 } => {
            if frac < 0.5 {
                h0
            } else if frac < 0.9 {
                h0 / 2.0
            } else {
                h0 / 4.0
            }
        }
        HSchedule::PowerCurve { h0, exponent } => h0 * (1.0 - frac).powf(exponent),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staged_knee_values() {
        let s = HSchedule::Staged { h0: 6.0 };
        assert_eq!(h_schedule_eval(&s, 0, 100), 6.0);
        assert_eq!(h_schedule_eval(&s, 49, 100), 6.0);
        assert_eq!(h_schedule_eval(&s, 50, 100), 3.0);
        assert_eq!(h_schedule_eval(&s, 89, 100), 3.0);
        assert_eq!(h_schedule_eval(&s, 90, 100), 1.5);
        assert_eq!(h_schedule_eval(&s, 95, 100), 1.5);
    }

    #[test]
    fn power_curve_decays_to_zero() {
        let s = HSchedule::PowerCurve {
            h0: 4.0,
            exponent: 1.0,
        };
        assert_eq!(h_schedule_eval(&s, 0, 10), 4.0);
        assert!((h_schedule_eval(&s, 5, 10) - 2.0).abs() < 1e-15);
        assert_eq!(h_schedule_eval(&s, 10, 10), 0.0);
    }

    #[test]
    fn schedules_never_increase() {
        for s in [
            HSchedule::Staged { h0: 6.0 },
            HSchedule::PowerCurve {
                h0: 2.0,
                exponent: 2.5,
            },
            HSchedule::PowerCurve {
                h0: 2.0,
                exponent: 0.3,
            },
        ] {
            for total in [1usize, 7, 100, 333] {
                let hs: Vec<f64> = (0..=total).map(|t| h_schedule_eval(&s, t, total)).collect();
                assert!(hs.windows(2).all(|w| w[1] <= w[0]), "{s:?} {total}");
                assert!(hs.iter().all(|&h| h >= 0.0));
            }
        }
    }

    #[test]
    fn validation() {
        assert!(HSchedule::Staged { h0: -1.0 }.validate().is_err());
        assert!(HSchedule::PowerCurve {
            h0: 1.0,
            exponent: f64::NAN
        }
        .validate()
        .is_err());
    }
}
