//! 60 GHz link budget: free-space path loss plus linear atmospheric
//! attenuation, converted to a Shannon rate and truncated to the usable band.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbraError};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub carrier_freq_ghz: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_mhz: f64,
    /// Gain of each end of the link.
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub atmospheric_attenuation_db_per_km: f64,
    pub rate_floor_mbps: f64,
    pub rate_cap_mbps: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        Self {
            carrier_freq_ghz: 60.0,
            tx_power_dbm: 23.0,
            bandwidth_mhz: 2160.0,
            antenna_gain_dbi: 24.0,
            noise_figure_db: 7.0,
            atmospheric_attenuation_db_per_km: 15.0,
            rate_floor_mbps: 1000.0,
            rate_cap_mbps: 4640.0,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_ghz", self.carrier_freq_ghz),
            ("bandwidth_mhz", self.bandwidth_mhz),
            ("rate_floor_mbps", self.rate_floor_mbps),
            ("rate_cap_mbps", self.rate_cap_mbps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SbraError::InvalidParams(format!("{name} must be positive")));
            }
        }
        if !(self.atmospheric_attenuation_db_per_km.is_finite() && self.atmospheric_attenuation_db_per_km >= 0.0) {
            return Err(SbraError::InvalidParams("atmospheric attenuation must be non-negative".into()));
        }
        if self.rate_floor_mbps > self.rate_cap_mbps {
            return Err(SbraError::InvalidParams("rate floor exceeds rate cap".into()));
        }
        Ok(())
    }

    pub fn free_space_path_loss_db(&self, distance_m: f64) -> f64 {
        let f_hz = self.carrier_freq_ghz * 1e9;
        20.0 * (4.0 * std::f64::consts::PI * distance_m * f_hz / SPEED_OF_LIGHT).log10()
    }

    pub fn noise_floor_dbm(&self) -> f64 {
        THERMAL_NOISE_DBM_PER_HZ + 10.0 * (self.bandwidth_mhz * 1e6).log10() + self.noise_figure_db
    }

    pub fn snr_db(&self, distance_m: f64) -> f64 {
        let rx = self.tx_power_dbm + 2.0 * self.antenna_gain_dbi
            - self.free_space_path_loss_db(distance_m)
            - self.atmospheric_attenuation_db_per_km * distance_m / 1000.0;
        rx - self.noise_floor_dbm()
    }

    /// Untruncated Shannon capacity in Mbps.
    pub fn shannon_mbps(&self, distance_m: f64) -> f64 {
        let snr = 10f64.powf(self.snr_db(distance_m) / 10.0);
        self.bandwidth_mhz * (1.0 + snr).log2()
    }
}

/// Truncated rate in Mbps, or `None` when the link falls below the floor.
pub fn link_rate(distance_m: f64, p: &LinkBudgetParams) -> Result<Option<f64>> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(SbraError::NonPositiveDistance(distance_m));
    }
    let r = p.shannon_mbps(distance_m);
    if r.is_nan() || r < p.rate_floor_mbps {
        return Ok(None);
    }
    Ok(Some(r.min(p.rate_cap_mbps)))
}

/// Largest distance (to 1 cm) at which the link is still usable.
pub fn max_usable_range_m(p: &LinkBudgetParams) -> f64 {
    let (mut lo, mut hi) = (1e-3, 1.0);
    while p.shannon_mbps(hi) >= p.rate_floor_mbps {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return hi;
        }
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if p.shannon_mbps(mid) >= p.rate_floor_mbps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook form of the same budget: FSPL = 92.45 + 20log10(f_GHz) + 20log10(d_km).
    fn spreadsheet_rate(d_m: f64) -> Option<f64> {
        let d_km = d_m / 1000.0;
        let fspl = 92.45 + 20.0 * 60f64.log10() + 20.0 * d_km.log10();
        let atm = 15.0 * d_km;
        let eirp_plus_rx_gain = 23.0 + 24.0 + 24.0;
        let noise = -174.0 + 10.0 * 2.16e9f64.log10() + 7.0;
        let snr_db = eirp_plus_rx_gain - fspl - atm - noise;
        let rate = 2160.0 * (1.0 + 10f64.powf(snr_db / 10.0)).log2();
        (rate >= 1000.0).then(|| rate.min(4640.0))
    }

    #[test]
    fn tiny_distance_hits_the_cap() {
        let p = LinkBudgetParams::default();
        assert_eq!(link_rate(1e-3, &p).unwrap(), Some(4640.0));
    }

    #[test]
    fn beyond_floor_is_unusable() {
        let p = LinkBudgetParams::default();
        let r = max_usable_range_m(&p);
        assert!(link_rate(r - 1.0, &p).unwrap().is_some());
        assert_eq!(link_rate(r + 1.0, &p).unwrap(), None);
    }

    #[test]
    fn matches_independent_db_chain() {
        let p = LinkBudgetParams::default();
        for d in [140.0, 180.0, 300.0, 700.0, 900.0, 1000.0, 1100.0, 1300.0] {
            let ours = link_rate(d, &p).unwrap();
            let theirs = spreadsheet_rate(d);
            match (ours, theirs) {
                (Some(a), Some(b)) => assert!((a - b).abs() / b < 1e-3, "d={d}: {a} vs {b}"),
                (None, None) => {}
                other => panic!("d={d}: {other:?}"),
            }
        }
        let r140 = link_rate(140.0, &p).unwrap().unwrap();
        assert!((1000.0..=4640.0).contains(&r140));
    }

    #[test]
    fn rejects_non_positive_distance() {
        let p = LinkBudgetParams::default();
        assert!(link_rate(0.0, &p).is_err());
        assert!(link_rate(-3.0, &p).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_clamped(d1 in 0.1f64..3000.0, extra in 0.0f64..2000.0) {
            let p = LinkBudgetParams::default();
            let a = link_rate(d1, &p).unwrap();
            let b = link_rate(d1 + extra, &p).unwrap();
            if let Some(x) = a {
                prop_assert!((p.rate_floor_mbps..=p.rate_cap_mbps).contains(&x));
            }
            if let Some(y) = b {
                prop_assert!((p.rate_floor_mbps..=p.rate_cap_mbps).contains(&y));
                prop_assert!(a.is_some_and(|x| x >= y));
            }
        }
    }
}
