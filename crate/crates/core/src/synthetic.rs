//! Seeded synthetic load with known components and injected heat waves.
//!
//! Load is a linear growth trend plus daily and weekly cycles, a cooling
//! response above a temperature threshold and Gaussian noise. Temperature
//! follows a yearly and daily cycle with AR(1) day-to-day weather noise. A
//! heat spell is scripted in the first summer and a heat wave over the final
//! test window.

use std::f64::consts::TAU;

use chrono::{NaiveDate, NaiveTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Column, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub interval_minutes: u32,
    pub base_load: f64,
    /// Linear growth as a fraction of `base_load` per year.
    pub annual_growth: f64,
    /// Amplitudes as fractions of `base_load`.
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise: f64,
    pub temp_mean: f64,
    pub temp_annual_amplitude: f64,
    pub temp_daily_amplitude: f64,
    /// Standard deviation of the day-to-day weather anomaly.
    pub temp_noise: f64,
    /// Day of year with the warmest seasonal temperature.
    pub temp_peak_day: f64,
    pub cooling_threshold: f64,
    /// Extra load per degree above the threshold.
    pub cooling_slope: f64,
    /// Peak temperature anomaly of the scripted heat events.
    pub heat_wave_boost: f64,
    /// Day index and length of the training-period heat spell.
    pub spell_start_day: usize,
    pub spell_days: usize,
    /// Final days held out for testing; the heat wave covers them.
    pub test_days: usize,
    /// Lag applied to rolling and difference features in the benchmark.
    pub offset_points: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            days: 547,
            interval_minutes: 60,
            base_load: 1000.0,
            annual_growth: 0.3,
            daily_amplitude: 0.15,
            weekly_amplitude: 0.03,
            noise: 0.01,
            temp_mean: 16.0,
            temp_annual_amplitude: 11.0,
            temp_daily_amplitude: 4.0,
            temp_noise: 1.5,
            temp_peak_day: 200.0,
            cooling_threshold: 26.0,
            cooling_slope: 30.0,
            heat_wave_boost: 8.0,
            spell_start_day: 198,
            spell_days: 6,
            test_days: 7,
            offset_points: 48,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let minutes = self.interval_minutes;
        if minutes == 0 || 1440 % minutes != 0 {
            return Err(Error::Config(format!(
                "synthetic.interval_minutes must divide a day, got {minutes}"
            )));
        }
        if self.test_days == 0 || self.days < self.test_days + 60 {
            return Err(Error::Config("synthetic.days must exceed test_days by at least 60".into()));
        }
        if self.spell_start_day + self.spell_days > self.days - self.test_days {
            return Err(Error::Config("synthetic heat spell overlaps the test window".into()));
        }
        if !(self.base_load > 0.0) || !(self.noise >= 0.0) || !(self.temp_noise >= 0.0) {
            return Err(Error::Config("synthetic base_load must be > 0 and noise levels >= 0".into()));
        }
        if self.offset_points < self.points_per_day() {
            return Err(Error::Config(format!(
                "synthetic.offset_points must be at least one day ({} points)",
                self.points_per_day()
            )));
        }
        Ok(())
    }

    pub fn points_per_day(&self) -> usize {
        (1440 / self.interval_minutes.max(1)) as usize
    }
}

/// Generated series with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticSeries {
    pub dataset: Dataset,
    /// First row of the test window.
    pub test_start: usize,
    /// Noise-free load.
    pub clean_load: Vec<f64>,
    /// Cooling response component.
    pub weather_load: Vec<f64>,
}

/// Smooth bump over `[start, start + len)` days peaking at 1.
fn bump(day: f64, start: f64, len: f64) -> f64 {
    if day < start || day >= start + len {
        0.0
    } else {
        (std::f64::consts::PI * (day - start) / len).sin().powf(0.5)
    }
}

pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<SyntheticSeries> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = cfg.points_per_day();
    let n = cfg.days * m;
    let step = i64::from(cfg.interval_minutes) * 60;
    let t0 = cfg.start.and_time(NaiveTime::MIN).and_utc().timestamp();
    let weekday0 = f64::from(chrono::Datelike::weekday(&cfg.start).num_days_from_monday());

    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut anomaly = vec![0.0; cfg.days];
    let phi: f64 = 0.8;
    let innovation = cfg.temp_noise * (1.0 - phi * phi).sqrt();
    let mut a = 0.0;
    for slot in anomaly.iter_mut() {
        a = phi * a + innovation * unit.sample(&mut rng);
        *slot = a;
    }

    let test_from = (cfg.days - cfg.test_days) as f64;
    let mut timestamps = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let mut load = Vec::with_capacity(n);
    let mut clean_load = Vec::with_capacity(n);
    let mut weather_load = Vec::with_capacity(n);
    for i in 0..n {
        let day = i as f64 / m as f64;
        let d = i / m;
        let hour = (i % m) as f64 * 24.0 / m as f64;
        let doy = day % 365.0;
        let heat = bump(day, cfg.spell_start_day as f64, cfg.spell_days as f64)
            + bump(day, test_from - 1.0, cfg.test_days as f64 + 1.0);
        let temp = cfg.temp_mean
            + cfg.temp_annual_amplitude * (TAU * (doy - cfg.temp_peak_day) / 365.0).cos()
            + cfg.temp_daily_amplitude * (TAU * (hour - 15.0) / 24.0).cos()
            + anomaly[d]
            + cfg.heat_wave_boost * heat;

        let trend = cfg.base_load * (1.0 + cfg.annual_growth * day / 365.0);
        let daily = cfg.base_load
            * cfg.daily_amplitude
            * (0.7 * (TAU * (hour - 14.0) / 24.0).cos() + 0.3 * (2.0 * TAU * (hour - 10.0) / 24.0).cos());
        let weekday = (weekday0 + day).rem_euclid(7.0);
        let weekly = cfg.base_load * cfg.weekly_amplitude * (TAU * (weekday - 2.5) / 7.0).cos();
        let cooling = cfg.cooling_slope * (temp - cfg.cooling_threshold).max(0.0);
        let clean = trend + daily + weekly + cooling;

        timestamps.push(t0 + step * i as i64);
        temperature.push(temp);
        clean_load.push(clean);
        weather_load.push(cooling);
        load.push(clean + cfg.base_load * cfg.noise * unit.sample(&mut rng));
    }
    let dataset = Dataset::with_interval(
        timestamps,
        load,
        vec![Column::new("temperature", temperature)],
        step,
        0,
    )?;
    Ok(SyntheticSeries {
        dataset,
        test_start: n - cfg.test_days * m,
        clean_load,
        weather_load,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg, 7).unwrap();
        let b = generate(&cfg, 7).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_ne!(a.dataset, generate(&cfg, 8).unwrap().dataset);
        assert_eq!(a.dataset.len(), cfg.days * 24);
        assert_eq!(a.test_start, (cfg.days - cfg.test_days) * 24);
    }

    #[test]
    fn heat_wave_drives_test_week() {
        let s = generate(&SyntheticConfig::default(), 7).unwrap();
        let temp = s.dataset.covariate("temperature").unwrap();
        let test_max = temp[s.test_start..].iter().cloned().fold(f64::MIN, f64::max);
        let train_max = temp[..s.test_start].iter().cloned().fold(f64::MIN, f64::max);
        assert!(test_max > 30.0);
        // the training spell makes hot weather rare but present
        assert!(train_max > test_max - 4.0);
        let hot = temp[..s.test_start].iter().filter(|t| **t > 30.0).count();
        assert!(hot > 0 && (hot as f64) < 0.05 * s.test_start as f64);
        let test_cooling: f64 = s.weather_load[s.test_start..].iter().sum();
        assert!(test_cooling > 0.0);
    }

    #[test]
    fn rejects_bad_settings() {
        let cfg = SyntheticConfig {
            interval_minutes: 7,
            ..SyntheticConfig::default()
        };
        assert_eq!(generate(&cfg, 1).unwrap_err().class(), "config.invalid");
        let cfg = SyntheticConfig {
            offset_points: 10,
            ..SyntheticConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
