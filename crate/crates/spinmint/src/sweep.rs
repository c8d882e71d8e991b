//! Parameter sweeps over a scenario.
//!
//! A sweep varies exactly one [`OperatingPoint`] field over a grid and
//! evaluates the full figure-of-merit stack at each value.  Failures at
//! individual grid points are recorded on the affected rows (NaN outputs
//! plus the error message) without aborting the rest of the sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::{OperatingPoint, Scenario};

/// Which operating-point field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Photon bandwidth γ (GHz).
    Bandwidth,
    /// Collection efficiency η_c.
    Efficiency,
    /// Fiber length L (km).
    Length,
    /// Storage time (seconds).
    Storage,
    /// Spectral-diffusion standard deviation σ (GHz).
    Diffusion,
}

impl SweepAxis {
    /// All axes, in display order.
    pub fn all() -> [SweepAxis; 5] {
        [
            SweepAxis::Bandwidth,
            SweepAxis::Efficiency,
            SweepAxis::Length,
            SweepAxis::Storage,
            SweepAxis::Diffusion,
        ]
    }

    /// Canonical lower-case name (the CLI spelling).
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Bandwidth => "bandwidth",
            SweepAxis::Efficiency => "efficiency",
            SweepAxis::Length => "length",
            SweepAxis::Storage => "storage",
            SweepAxis::Diffusion => "diffusion",
        }
    }

    /// Human-readable axis caption with units.
    pub fn unit_label(self) -> &'static str {
        match self {
            SweepAxis::Bandwidth => "photon bandwidth (GHz)",
            SweepAxis::Efficiency => "collection efficiency",
            SweepAxis::Length => "fiber length (km)",
            SweepAxis::Storage => "storage time (s)",
            SweepAxis::Diffusion => "diffusion sigma (GHz)",
        }
    }

    /// Write one axis value into an operating point.
    pub fn apply(self, pt: &mut OperatingPoint, value: f64) {
        match self {
            SweepAxis::Bandwidth => pt.bandwidth_ghz = value,
            SweepAxis::Efficiency => pt.collection_efficiency = value,
            SweepAxis::Length => pt.fiber_length_km = value,
            SweepAxis::Storage => pt.storage_ns = value * 1.0e9,
            SweepAxis::Diffusion => pt.diffusion_sigma_ghz = value,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lowered = s.to_ascii_lowercase();
        SweepAxis::all()
            .into_iter()
            .find(|a| a.as_str() == lowered)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown sweep axis '{s}'; expected one of bandwidth, efficiency, \
                     length, storage, diffusion"
                ))
            })
    }
}

/// A sweep specification: axis, inclusive range and grid resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRequest {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Logarithmic spacing (requires min > 0).
    pub log_scale: bool,
}

impl SweepRequest {
    /// The grid values, validated.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::config(format!(
                "sweep range must be finite, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.min > self.max {
            return Err(Error::config(format!(
                "sweep range is inverted: min {} > max {}",
                self.min, self.max
            )));
        }
        if self.points == 0 {
            return Err(Error::config("a sweep needs at least one point"));
        }
        if self.log_scale && self.min <= 0.0 {
            return Err(Error::config(format!(
                "log-scale sweeps need min > 0, got {}",
                self.min
            )));
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        let n = self.points;
        let values = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if self.log_scale {
                    (self.min.ln() + (self.max.ln() - self.min.ln()) * s).exp()
                } else {
                    self.min + (self.max - self.min) * s
                }
            })
            .collect();
        Ok(values)
    }
}

/// One evaluated grid point.  A failed evaluation leaves the outputs NaN
/// and stores the error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub gamma_a_hz: f64,
    pub f_avg: f64,
    pub gamma_tok_hz: f64,
    pub error: Option<String>,
}

/// Location and height of the best grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPeak {
    pub axis_value: f64,
    pub gamma_a_hz: f64,
}

/// A completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub request: SweepRequest,
    pub points: Vec<SweepPoint>,
    /// Best successful grid point, if any succeeded.
    pub peak: Option<SweepPeak>,
    /// For storage sweeps: the time (s) at which ⟨F⟩ crosses 3/4, from the
    /// closed-form decay model.
    pub threshold_crossing_s: Option<f64>,
}

/// Run a sweep.  Grid points evaluate in parallel; the output order is the
/// grid order.
pub fn run_sweep(scenario: &Scenario, request: &SweepRequest) -> Result<SweepResult> {
    let values = request.values()?;
    let base = scenario.operating_point();
    let points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&value| {
            let mut pt = base;
            request.axis.apply(&mut pt, value);
            match scenario.evaluate(&pt) {
                Ok(r) => SweepPoint {
                    axis_value: value,
                    gamma_a_hz: r.gamma_a_hz,
                    f_avg: r.f_avg,
                    gamma_tok_hz: r.gamma_tok_hz,
                    error: None,
                },
                Err(e) => SweepPoint {
                    axis_value: value,
                    gamma_a_hz: f64::NAN,
                    f_avg: f64::NAN,
                    gamma_tok_hz: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let peak = points
        .iter()
        .filter(|p| p.error.is_none() && p.gamma_a_hz.is_finite())
        .max_by(|a, b| a.gamma_a_hz.total_cmp(&b.gamma_a_hz))
        .map(|p| SweepPeak {
            axis_value: p.axis_value,
            gamma_a_hz: p.gamma_a_hz,
        });
    let threshold_crossing_s = if request.axis == SweepAxis::Storage {
        scenario.threshold_crossing_ns(&base)?.map(|ns| ns * 1.0e-9)
    } else {
        None
    };
    Ok(SweepResult {
        request: *request,
        points,
        peak,
        threshold_crossing_s,
    })
}

/// Locate the maximum of γ_a along one axis by golden-section search on
/// [lo, hi].  Every evaluation must succeed; the first failure aborts.
pub fn refine_peak(
    scenario: &Scenario,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
) -> Result<SweepPeak> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::config(format!(
            "peak refinement needs a finite interval with lo < hi, got [{lo}, {hi}]"
        )));
    }
    let eval = |value: f64| -> Result<f64> {
        let mut pt = scenario.operating_point();
        axis.apply(&mut pt, value);
        Ok(scenario.evaluate(&pt)?.gamma_a_hz)
    };
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * INV_PHI;
    let mut d = a + (b - a) * INV_PHI;
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..80 {
        if (b - a).abs() <= 1.0e-6 * (hi - lo) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * INV_PHI;
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * INV_PHI;
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok(SweepPeak {
        axis_value: mid,
        gamma_a_hz: eval(mid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;
    use approx::assert_relative_eq;

    fn cheap_scenario() -> Scenario {
        let mut c = ScenarioConfig::optical();
        c.phonon = None;
        c.memory.gamma_plus_per_ms = Some(0.0);
        c.memory.gamma_minus_per_ms = Some(31.4);
        Scenario::from_config(c).unwrap()
    }

    #[test]
    fn grid_values_linear_log_and_invalid() {
        let lin = SweepRequest {
            axis: SweepAxis::Bandwidth,
            min: 0.0,
            max: 4.0,
            points: 5,
            log_scale: false,
        };
        assert_eq!(lin.values().unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);

        let log = SweepRequest {
            axis: SweepAxis::Storage,
            min: 1.0,
            max: 100.0,
            points: 3,
            log_scale: true,
        };
        let v = log.values().unwrap();
        assert_relative_eq!(v[1], 10.0, max_relative = 1e-12);
        assert_relative_eq!(v[2], 100.0, max_relative = 1e-12);

        for bad in [
            SweepRequest { min: 1.0, max: 0.0, ..lin },
            SweepRequest { points: 0, ..lin },
            SweepRequest { log_scale: true, min: 0.0, ..lin },
        ] {
            assert!(bad.values().is_err());
        }
        let single = SweepRequest { points: 1, ..lin };
        assert_eq!(single.values().unwrap(), vec![0.0]);
    }

    #[test]
    fn axis_parsing_round_trips() {
        for axis in SweepAxis::all() {
            assert_eq!(axis.as_str().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("velocity".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn bandwidth_sweep_produces_consistent_rows() {
        let s = cheap_scenario();
        let req = SweepRequest {
            axis: SweepAxis::Bandwidth,
            min: 5.0,
            max: 7.0,
            points: 5,
            log_scale: false,
        };
        let result = run_sweep(&s, &req).unwrap();
        assert_eq!(result.points.len(), 5);
        for pair in result.points.windows(2) {
            // Shorter time bins at higher bandwidth: issuance rate rises.
            assert!(pair[1].gamma_tok_hz > pair[0].gamma_tok_hz);
        }
        for p in &result.points {
            assert!(p.error.is_none());
            assert!(p.gamma_a_hz > 75.0e3 && p.gamma_a_hz < 83.0e3);
            assert!(p.f_avg > 0.97 && p.f_avg < 0.99);
        }
        assert!(result.peak.is_some());
        assert!(result.threshold_crossing_s.is_none());
    }

    #[test]
    fn efficiency_sweep_is_monotone_and_collapses_at_realistic_eta() {
        let s = cheap_scenario();
        let req = SweepRequest {
            axis: SweepAxis::Efficiency,
            min: 0.4915,
            max: 1.0,
            points: 3,
            log_scale: false,
        };
        let result = run_sweep(&s, &req).unwrap();
        let rates: Vec<f64> = result.points.iter().map(|p| p.gamma_a_hz).collect();
        assert!(rates[0] < rates[1] && rates[1] < rates[2]);
        assert!(rates[0] < 1.0, "gamma_a at eta=0.4915 is {}", rates[0]);
        assert!(rates[2] > 50.0e3);
    }

    #[test]
    fn storage_sweep_reports_threshold_crossing() {
        let s = cheap_scenario();
        let req = SweepRequest {
            axis: SweepAxis::Storage,
            min: 0.0,
            max: 1.0e-4,
            points: 9,
            log_scale: false,
        };
        let result = run_sweep(&s, &req).unwrap();
        let crossing = result.threshold_crossing_s.expect("decaying memory must cross");
        assert!(
            crossing > 1.0e-5 && crossing < 5.0e-5,
            "crossing at {crossing} s"
        );
        // The rate must fall with storage time.
        let first = result.points.first().unwrap().gamma_a_hz;
        let last = result.points.last().unwrap().gamma_a_hz;
        assert!(last < first * 0.5, "{first} -> {last}");
    }

    #[test]
    fn failed_points_are_flagged_without_aborting() {
        let s = cheap_scenario();
        let req = SweepRequest {
            axis: SweepAxis::Efficiency,
            min: 0.5,
            max: 1.5,
            points: 2,
            log_scale: false,
        };
        let result = run_sweep(&s, &req).unwrap();
        assert!(result.points[0].error.is_none());
        let bad = &result.points[1];
        assert!(bad.error.is_some());
        assert!(bad.gamma_a_hz.is_nan() && bad.f_avg.is_nan() && bad.gamma_tok_hz.is_nan());
        // The peak ignores failed rows.
        assert_relative_eq!(result.peak.unwrap().axis_value, 0.5);
    }

    #[test]
    fn refined_bandwidth_peak_sits_inside_the_expected_window() {
        let s = cheap_scenario();
        let peak = refine_peak(&s, SweepAxis::Bandwidth, 5.0, 7.5).unwrap();
        assert!(
            peak.axis_value > 6.0 && peak.axis_value < 6.45,
            "peak at {} GHz",
            peak.axis_value
        );
        assert!(
            peak.gamma_a_hz > 80.5e3 && peak.gamma_a_hz < 82.5e3,
            "peak gamma_a = {}",
            peak.gamma_a_hz
        );
        assert!(refine_peak(&s, SweepAxis::Bandwidth, 2.0, 2.0).is_err());
    }
}
