use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    /// Covariate shifted by `delta` on its own scale: `exp(coef * delta) - 1`.
    AdditivePp,
    /// Covariate entering in logs, scaled by `1 + delta`: `(1 + delta)^coef - 1`.
    Relative,
}

/// Percent change in the expected flow implied by a coefficient.
pub fn effect_multiplier(coef: f64, delta: f64, kind: EffectKind) -> Result<f64> {
    let ratio = match kind {
        EffectKind::AdditivePp => (coef * delta).exp_m1(),
        EffectKind::Relative => {
            if delta <= -1.0 {
                return Err(Error::invalid(format!(
                    "relative change {delta} must exceed -1"
                )));
            }
            (coef * delta.ln_1p()).exp_m1()
        }
    };
    Ok(100.0 * ratio)
}
