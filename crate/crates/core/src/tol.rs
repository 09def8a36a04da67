use serde::{Deserialize, Serialize};

/// Shared tolerance table. Every report embeds a copy so runs are
/// reproducible from their output alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Point/generator deduplication band.
    pub eq: f64,
    /// Cone membership band used by `classify`; boundary means
    /// `|<d_j, y>| <= mem` on the tightest constraint.
    pub mem: f64,
    /// Active-face band for subdifferentials and argmin/argmax witness
    /// sets, relative to the value's magnitude.
    pub act: f64,
    /// Stationarity residual band: a point is reported stationary when the
    /// membership residual is at most this.
    pub stat: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq: 1e-9,
            mem: 1e-9,
            act: 1e-8,
            stat: 1e-7,
        }
    }
}

impl Tolerances {
    /// Active-face band scaled by the magnitude of `value`.
    pub fn act_at(&self, value: f64) -> f64 {
        self.act * (1.0 + value.abs())
    }
}
