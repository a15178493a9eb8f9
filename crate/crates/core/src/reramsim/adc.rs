use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative cost model of an `N`-bit ADC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdcSpec {
    pub resolution: u32,
}

impl AdcSpec {
    pub fn new(resolution: u32) -> Self {
        Self { resolution }
    }

    /// Proportional to `2^N / (N + 1)`.
    pub fn relative_power(&self) -> f64 {
        let n = self.resolution as f64;
        n.exp2() / (n + 1.0)
    }

    /// Proportional to `N`.
    pub fn relative_sensing_time(&self) -> f64 {
        self.resolution as f64
    }

    /// Full area at 7 bits and above, half at 6 bits and below.
    pub fn relative_area(&self) -> f64 {
        if self.resolution <= 6 {
            0.5
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupOverhead {
    pub group: usize,
    pub resolution: u32,
    pub energy_saving: f64,
    pub speedup: f64,
    pub area_saving: f64,
}

impl GroupOverhead {
    pub fn energy_label(&self) -> String {
        format!("{:.1}×", self.energy_saving)
    }

    pub fn speedup_label(&self) -> String {
        factor_label(self.speedup)
    }

    pub fn area_label(&self) -> String {
        factor_label(self.area_saving)
    }
}

fn factor_label(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}×")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub baseline: u32,
    /// MSB group first.
    pub rows: Vec<GroupOverhead>,
}

/// Savings of each group's ADC relative to a `baseline`-bit ADC.
/// `resolutions[k]` belongs to group `k`.
pub fn overhead_report(resolutions: &[u32], baseline: u32) -> Result<OverheadReport> {
    if baseline == 0 {
        return Err(Error::Resolution {
            resolution: baseline,
            baseline,
        });
    }
    if let Some(&resolution) = resolutions.iter().find(|&&n| n == 0 || n > baseline) {
        return Err(Error::Resolution {
            resolution,
            baseline,
        });
    }
    let base = AdcSpec::new(baseline);
    let rows = resolutions
        .iter()
        .enumerate()
        .rev()
        .map(|(group, &n)| {
            let a = AdcSpec::new(n);
            GroupOverhead {
                group,
                resolution: n,
                energy_saving: base.relative_power() / a.relative_power(),
                speedup: base.relative_sensing_time() / a.relative_sensing_time(),
                area_saving: base.relative_area() / a.relative_area(),
            }
        })
        .collect();
    Ok(OverheadReport { baseline, rows })
}

/// Deployment target: one bit for the MSB group, three for the others.
pub fn reference_resolutions(groups: usize) -> Vec<u32> {
    (0..groups)
        .map(|k| if k + 1 == groups { 1 } else { 3 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_savings() {
        let r = overhead_report(&[3, 1], 8).unwrap();
        let msb = &r.rows[0];
        assert_eq!((msb.group, msb.resolution), (1, 1));
        assert_eq!(msb.energy_label(), "28.4×");
        assert_eq!(msb.speedup_label(), "8×");
        assert_eq!(msb.area_label(), "2×");
        let low = &r.rows[1];
        assert_eq!(low.energy_label(), "14.2×");
        assert_eq!(low.speedup_label(), "2.67×");
        assert_eq!(low.area_label(), "2×");
        assert!((msb.energy_saving - 256.0 / 9.0).abs() < 1e-12);
        assert!((low.energy_saving - 256.0 * 4.0 / 9.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_against_itself() {
        let r = overhead_report(&[8, 7], 8).unwrap();
        assert_eq!(r.rows[1].energy_saving, 1.0);
        assert_eq!(r.rows[1].area_saving, 1.0);
        assert_eq!(r.rows[0].area_saving, 1.0);
    }

    #[test]
    fn out_of_range_resolutions() {
        assert!(matches!(
            overhead_report(&[0], 8),
            Err(Error::Resolution { resolution: 0, .. })
        ));
        assert!(matches!(
            overhead_report(&[9], 8),
            Err(Error::Resolution { resolution: 9, .. })
        ));
        assert!(overhead_report(&[1], 0).is_err());
    }

    #[test]
    fn targets() {
        assert_eq!(reference_resolutions(4), vec![3, 3, 3, 1]);
        assert_eq!(reference_resolutions(1), vec![1]);
    }

    #[test]
    fn json_fields() {
        let r = overhead_report(&[3], 8).unwrap();
        let v = serde_json::to_value(&r.rows[0]).unwrap();
        for key in [
            "group",
            "resolution",
            "energy_saving",
            "speedup",
            "area_saving",
        ] {
            assert!(v.get(key).is_some());
        }
    }
}
