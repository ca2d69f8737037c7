//! Day-over-day change rates and their windowed mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ObservationSeries;

/// Which pair of values a rate compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateBasis {
    /// `y[t+1] / y[t]` on cumulative totals.
    #[default]
    CumulativeRatio,
    /// `dy[t+1] / dy[t]` on daily increments.
    IncrementRatio,
    /// `dy[t] / dy[t+1]`: earlier increment over the later one.
    IncrementRatioInverted,
}

/// One rate per consecutive pair, labelled with the earlier day.
///
/// `None` marks a zero denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeRateSeries {
    pub day_ids: Vec<i64>,
    pub rates: Vec<Option<f64>>,
    pub basis: RateBasis,
}

impl ChangeRateSeries {
    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Days whose rate is undefined.
    pub fn undefined_days(&self) -> Vec<i64> {
        self.day_ids
            .iter()
            .zip(&self.rates)
            .filter(|(_, r)| r.is_none())
            .map(|(&d, _)| d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanRate {
    pub value: f64,
    pub window_start: i64,
    /// Window length, undefined entries included.
    pub n: usize,
    /// Undefined rates skipped inside the window.
    pub excluded: usize,
}

pub fn change_rates(series: &ObservationSeries, basis: RateBasis) -> Result<ChangeRateSeries> {
    let values: Vec<f64> = match basis {
        RateBasis::CumulativeRatio => series.cumulative().into_iter().map(|c| c as f64).collect(),
        RateBasis::IncrementRatio | RateBasis::IncrementRatioInverted => {
            series.new_cases().into_iter().map(|c| c as f64).collect()
        }
    };
    rates_from_values(&series.day_ids(), &values, basis)
}

/// Rates over an arbitrary value sequence; `values` are cumulative totals or
/// increments depending on `basis`.
pub fn rates_from_values(day_ids: &[i64], values: &[f64], basis: RateBasis) -> Result<ChangeRateSeries> {
    if values.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    if day_ids.len() != values.len() {
        return Err(Error::LengthMismatch(format!(
            "{} day ids for {} values",
            day_ids.len(),
            values.len()
        )));
    }
    let rates = values
        .windows(2)
        .map(|w| {
            let (num, den) = match basis {
                RateBasis::CumulativeRatio | RateBasis::IncrementRatio => (w[1], w[0]),
                RateBasis::IncrementRatioInverted => (w[0], w[1]),
            };
            (den != 0.0).then(|| num / den)
        })
        .collect();
    Ok(ChangeRateSeries {
        day_ids: day_ids[..day_ids.len() - 1].to_vec(),
        rates,
        basis,
    })
}

/// Arithmetic mean of the defined rates on days `[window_start, window_start + n)`.
pub fn mean_change_rate(rates: &ChangeRateSeries, window_start: i64, n: usize) -> Result<MeanRate> {
    let out_of_range = || Error::WindowOutOfRange { start: window_start, n };
    if n == 0 {
        return Err(out_of_range());
    }
    let first = rates
        .day_ids
        .iter()
        .position(|&d| d == window_start)
        .ok_or_else(out_of_range)?;
    if first + n > rates.len() {
        return Err(out_of_range());
    }
    let window = &rates.rates[first..first + n];
    let defined: Vec<f64> = window.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::EmptyWindow { start: window_start, n });
    }
    Ok(MeanRate {
        value: defined.iter().sum::<f64>() / defined.len() as f64,
        window_start,
        n,
        excluded: n - defined.len(),
    })
}
