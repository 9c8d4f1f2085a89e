//! Exactly self-similar stable-kernel series shaped like measured data.

use levydiff_core::stable::{stable_pdf_many, StableParams};
use levydiff_core::DensitySnapshot;

use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub alpha: f64,
    /// Kernel scale at 1 ms, µm; grows as `t^{1/alpha}`.
    pub scale_at_1ms: f64,
    /// ms
    pub times: Vec<f64>,
    /// µm
    pub half_span: f64,
    pub points: usize,
    /// Constant background added to every curve, per µm.
    pub offset: f64,
}

impl SyntheticSeries {
    /// Thirteen curves evenly spaced over 10–40 ms.
    pub fn thirteen(alpha: f64) -> Self {
        SyntheticSeries {
            alpha,
            scale_at_1ms: 1.0,
            times: (0..13).map(|i| 10.0 + 2.5 * i as f64).collect(),
            half_span: 150.0,
            points: 601,
            offset: 5e-4,
        }
    }

    pub fn generate(&self) -> Result<Vec<DensitySnapshot>> {
        self.times
            .iter()
            .map(|&t| {
                let gamma = self.scale_at_1ms * t.powf(1.0 / self.alpha);
                let p = StableParams::symmetric(self.alpha, gamma, 0.0)?;
                let blank = DensitySnapshot::from_fn(
                    t,
                    -self.half_span,
                    self.half_span,
                    self.points,
                    |_| 0.0,
                )?;
                let y: Vec<f64> = stable_pdf_many(&p, &blank.x_grid)?
                    .into_iter()
                    .map(|v| v + self.offset)
                    .collect();
                Ok(DensitySnapshot::new(t, blank.x_grid, y)?
                    .with_meta("source", "synthetic")
                    .with_meta("alpha", self.alpha))
            })
            .collect()
    }
}
