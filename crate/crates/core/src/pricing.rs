//! Price profiles and the price classes UNI, ASC, DESC and SIGN.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::quantity::Quantity;

/// One price per time step, valid for both buying and selling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriceProfile(Vec<Quantity>);

impl PriceProfile {
    pub fn new(values: Vec<Quantity>) -> Self {
        PriceProfile(values)
    }

    pub fn from_integers(values: &[i64]) -> Self {
        PriceProfile(values.iter().map(|&v| Quantity::from_integer(v)).collect())
    }

    pub fn values(&self) -> &[Quantity] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_horizon(&self, horizon: usize) -> Result<()> {
        if self.0.len() == horizon {
            Ok(())
        } else {
            Err(Error::Prices(format!("{} prices for {horizon} time steps", self.0.len())))
        }
    }

    /// `-Σ_t s_t p_t`, the payoff of an admissible strategy.
    pub fn payoff(&self, strategy: &[Quantity]) -> Quantity {
        -strategy.iter().zip(&self.0).map(|(s, p)| *s * *p).sum::<Quantity>()
    }
}

impl fmt::Display for PriceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PriceSpec {
    Uniform(Quantity),
    Ascending {
        start: Quantity,
        step: Quantity,
    },
    Descending {
        start: Quantity,
        step: Quantity,
    },
    /// Per-step magnitudes; the sign follows the negated net supply.
    SupplySign(Vec<Quantity>),
    Explicit(Vec<Quantity>),
}

pub fn make_price_profile(spec: &PriceSpec, instance: &Instance) -> Result<PriceProfile> {
    let horizon = instance.horizon;
    let ramp = |start: Quantity, step: Quantity, sign: i64| -> Result<PriceProfile> {
        if !step.is_positive() {
            return Err(Error::Prices(format!("step {step} must be positive")));
        }
        Ok(PriceProfile((0..horizon as i64).map(|t| start + step * (sign * t)).collect()))
    };
    let profile = match spec {
        PriceSpec::Uniform(c) => PriceProfile(vec![*c; horizon]),
        PriceSpec::Ascending { start, step } => ramp(*start, *step, 1)?,
        PriceSpec::Descending { start, step } => ramp(*start, *step, -1)?,
        PriceSpec::SupplySign(magnitudes) => {
            if let Some(m) = magnitudes.iter().find(|m| m.is_negative()) {
                return Err(Error::Prices(format!("magnitude {m} is negative")));
            }
            let magnitudes = PriceProfile(magnitudes.clone());
            magnitudes.check_horizon(horizon)?;
            PriceProfile(
                magnitudes.0.iter().enumerate().map(|(t, m)| *m * -(instance.net_supply(t).signum() as i64)).collect(),
            )
        }
        PriceSpec::Explicit(values) => PriceProfile(values.clone()),
    };
    profile.check_horizon(horizon)?;
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PriceClass {
    #[serde(rename = "UNI")]
    Uniform,
    #[serde(rename = "ASC")]
    Ascending,
    #[serde(rename = "DESC")]
    Descending,
    #[serde(rename = "SIGN")]
    SupplySign,
}

impl fmt::Display for PriceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceClass::Uniform => "UNI",
            PriceClass::Ascending => "ASC",
            PriceClass::Descending => "DESC",
            PriceClass::SupplySign => "SIGN",
        })
    }
}

/// Whether ASC/DESC require strict or weak monotonicity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    #[default]
    Weak,
    Strict,
}

pub fn classify_prices(prices: &PriceProfile, instance: &Instance, monotonicity: Monotonicity) -> BTreeSet<PriceClass> {
    let p = prices.values();
    let mut classes = BTreeSet::new();
    let pairs = || p.windows(2).map(|w| (w[0], w[1]));
    if pairs().all(|(a, b)| a == b) {
        classes.insert(PriceClass::Uniform);
    }
    let (asc, desc) = match monotonicity {
        Monotonicity::Weak => (pairs().all(|(a, b)| a <= b), pairs().all(|(a, b)| a >= b)),
        Monotonicity::Strict => (pairs().all(|(a, b)| a < b), pairs().all(|(a, b)| a > b)),
    };
    if asc {
        classes.insert(PriceClass::Ascending);
    }
    if desc {
        classes.insert(PriceClass::Descending);
    }
    let sign_ok = p.len() == instance.horizon
        && p.iter().enumerate().all(|(t, price)| price.signum() == -instance.net_supply(t).signum());
    if sign_ok {
        classes.insert(PriceClass::SupplySign);
    }
    classes
}
