//! Direct daily cost of quarantine and isolation.
//!
//! Confirmed cases are isolated until they recover or die; the split is
//! weighted by the relative cured and death rates. Suspected cases are
//! quarantined at a flat per-person daily cost.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name under which the simulator registers this model.
pub const MODEL_NAME: &str = "covid_direct_cost";

/// Input variable names, in [`DayCostInputs::to_vec`] order.
pub const INPUTS: [&str; 8] = [
    "new_daily_increase_confirmed",
    "new_daily_increase_suspected",
    "cured_rate",
    "death_rate",
    "ppi_per_day",
    "ppq_per_day",
    "days_for_recovery",
    "days_till_death",
];

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("cured_rate + death_rate is zero; the outcome split is undefined")]
    DegenerateRates,
    #[error("input `{name}` = {value} must be finite and non-negative")]
    InvalidInput { name: &'static str, value: f64 },
}

/// One day's inputs. Rates enter only through their ratio, so fractions and
/// percentages give the same result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayCostInputs {
    pub ndic: f64,
    pub ndis: f64,
    pub cured_rate: f64,
    pub death_rate: f64,
    pub ppi_per_day: f64,
    pub ppq_per_day: f64,
    pub days_for_recovery: f64,
    pub days_till_death: f64,
}

impl DayCostInputs {
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            ndic: v[0],
            ndis: v[1],
            cured_rate: v[2],
            death_rate: v[3],
            ppi_per_day: v[4],
            ppq_per_day: v[5],
            days_for_recovery: v[6],
            days_till_death: v[7],
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.ndic,
            self.ndis,
            self.cured_rate,
            self.death_rate,
            self.ppi_per_day,
            self.ppq_per_day,
            self.days_for_recovery,
            self.days_till_death,
        ]
    }

    fn validate(&self) -> Result<(), CostError> {
        for (name, value) in INPUTS.iter().zip(self.to_vec()) {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(CostError::InvalidInput { name, value });
            }
        }
        if self.cured_rate + self.death_rate == 0.0 {
            return Err(CostError::DegenerateRates);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayCostBreakdown {
    pub cost_for_quarantine: f64,
    pub cost_for_isolation_till_recovery: f64,
    pub cost_for_isolation_till_death: f64,
    pub total_daily_cost: f64,
}

impl DayCostBreakdown {
    /// Sums already-computed components into a breakdown.
    pub fn from_components(quarantine: f64, recovery: f64, death: f64) -> Self {
        Self {
            cost_for_quarantine: quarantine,
            cost_for_isolation_till_recovery: recovery,
            cost_for_isolation_till_death: death,
            total_daily_cost: quarantine + recovery + death,
        }
    }
}

pub fn total_daily_cost(input: &DayCostInputs) -> Result<DayCostBreakdown, CostError> {
    input.validate()?;
    let rates = input.cured_rate + input.death_rate;
    let recovery_weight = input.cured_rate / rates;
    let death_weight = input.death_rate / rates;
    let isolated = input.ndic * input.ppi_per_day;
    Ok(DayCostBreakdown::from_components(
        input.ndis * input.ppq_per_day,
        recovery_weight * isolated * input.days_for_recovery,
        death_weight * isolated * input.days_till_death,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DayCostInputs {
        DayCostInputs {
            ndic: 100.0,
            ndis: 0.0,
            cured_rate: 0.5,
            death_rate: 0.5,
            ppi_per_day: 1000.0,
            ppq_per_day: 0.0,
            days_for_recovery: 14.0,
            days_till_death: 35.9,
        }
    }

    #[test]
    fn even_split_example() {
        let b = total_daily_cost(&base()).unwrap();
        assert!((b.cost_for_isolation_till_recovery - 700_000.0).abs() < 1e-6);
        assert!((b.cost_for_isolation_till_death - 1_795_000.0).abs() < 1e-6);
        assert!((b.total_daily_cost - 2_495_000.0).abs() < 1e-6);
        assert_eq!(b.cost_for_quarantine, 0.0);
    }

    #[test]
    fn zero_death_rate_collapses() {
        let input = DayCostInputs {
            death_rate: 0.0,
            ndis: 10.0,
            ppq_per_day: 50.0,
            ..base()
        };
        let b = total_daily_cost(&input).unwrap();
        assert_eq!(b.cost_for_isolation_till_death, 0.0);
        assert_eq!(b.total_daily_cost, 500.0 + 1_400_000.0);
    }

    #[test]
    fn degenerate_and_negative_inputs() {
        let zero = DayCostInputs {
            cured_rate: 0.0,
            death_rate: 0.0,
            ..base()
        };
        assert_eq!(total_daily_cost(&zero), Err(CostError::DegenerateRates));
        let neg = DayCostInputs { ndic: -1.0, ..base() };
        assert!(matches!(
            total_daily_cost(&neg),
            Err(CostError::InvalidInput { name: "new_daily_increase_confirmed", .. })
        ));
    }

    #[test]
    fn total_is_exact_sum() {
        let b = DayCostBreakdown::from_components(6221267.521, 101486850.7, 8017208.093);
        assert_eq!(
            b.total_daily_cost,
            6221267.521 + 101486850.7 + 8017208.093
        );
    }
}
