use serde::{Deserialize, Serialize};

use super::RenderError;

/// Piecewise-linear map from a scalar range to RGB in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Colormap {
    pub name: String,
    pub stops: Vec<[f64; 3]>,
    pub range: [f64; 2],
}

const VIRIDIS: [[f64; 3]; 5] = [
    [0.267, 0.005, 0.329],
    [0.230, 0.322, 0.546],
    [0.128, 0.567, 0.551],
    [0.369, 0.789, 0.383],
    [0.993, 0.906, 0.144],
];

const COOLWARM: [[f64; 3]; 3] = [[0.230, 0.299, 0.754], [0.865, 0.865, 0.865], [0.706, 0.016, 0.150]];

impl Colormap {
    pub fn new(name: &str, stops: Vec<[f64; 3]>, lo: f64, hi: f64) -> Result<Self, RenderError> {
        let c = Self {
            name: name.to_string(),
            stops,
            range: [lo, hi],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn viridis(lo: f64, hi: f64) -> Self {
        Self {
            name: "viridis".into(),
            stops: VIRIDIS.to_vec(),
            range: [lo, hi],
        }
    }

    pub fn coolwarm(lo: f64, hi: f64) -> Self {
        Self {
            name: "coolwarm".into(),
            stops: COOLWARM.to_vec(),
            range: [lo, hi],
        }
    }

    pub fn grayscale(lo: f64, hi: f64) -> Self {
        Self {
            name: "grayscale".into(),
            stops: vec![[0.0; 3], [1.0; 3]],
            range: [lo, hi],
        }
    }

    /// Named preset over `[lo, hi]`.
    pub fn preset(name: &str, lo: f64, hi: f64) -> Option<Self> {
        match name {
            "viridis" => Some(Self::viridis(lo, hi)),
            "coolwarm" => Some(Self::coolwarm(lo, hi)),
            "grayscale" => Some(Self::grayscale(lo, hi)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.stops.len() < 2 {
            return Err(RenderError::Colormap(format!("need at least 2 stops, got {}", self.stops.len())));
        }
        if self.stops.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(RenderError::Colormap("stop components must lie in [0, 1]".into()));
        }
        let [lo, hi] = self.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(RenderError::Colormap(format!("range needs finite lo < hi, got [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Clamps into the range and interpolates between neighbouring stops.
    /// NaN maps to the first stop.
    pub fn map_color(&self, value: f64) -> [f64; 3] {
        let [lo, hi] = self.range;
        let u = ((value - lo) / (hi - lo)).clamp(0.0, 1.0);
        let u = if u.is_nan() { 0.0 } else { u };
        let segments = (self.stops.len() - 1) as f64;
        let s = u * segments;
        let i = (s.floor() as usize).min(self.stops.len() - 2);
        let f = s - i as f64;
        let (a, b) = (self.stops[i], self.stops[i + 1]);
        [
            a[0] + (b[0] - a[0]) * f,
            a[1] + (b[1] - a[1]) * f,
            a[2] + (b[2] - a[2]) * f,
        ]
    }
}
