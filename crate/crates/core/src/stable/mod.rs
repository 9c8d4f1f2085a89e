//! Symmetric and one-sided α-stable (Lévy) laws.
//!
//! Symmetric law: characteristic function `exp(i k δ − |γ k|^α)`, `0 < α ≤ 2`.
//! One-sided law: positive subordinator with Laplace transform
//! `exp(−(γ s)^α)` shifted by `δ`, `0 < α < 1`.

mod fit;
mod kernel;
mod pdf;
mod sample;
mod tail;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{stable_fit, unit_half_width, StableFit, StableFitOptions};
pub use pdf::{stable_pdf, stable_pdf_many, symmetric_tail_mass};
pub use sample::{sample_one, stable_sample, SampleBatch};
pub use tail::{hill_estimate, tail_exponent, TailOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    Symmetric,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub scale: f64,
    pub location: f64,
    #[serde(default)]
    pub sided: Sidedness,
}

impl StableParams {
    pub fn symmetric(alpha: f64, scale: f64, location: f64) -> Result<Self> {
        let p = StableParams {
            alpha,
            scale,
            location,
            sided: Sidedness::Symmetric,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn one_sided(alpha: f64, scale: f64) -> Result<Self> {
        let p = StableParams {
            alpha,
            scale,
            location: 0.0,
            sided: Sidedness::OneSided,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha_ok = match self.sided {
            Sidedness::Symmetric => self.alpha > 0.0 && self.alpha <= 2.0,
            Sidedness::OneSided => self.alpha > 0.0 && self.alpha < 1.0,
        };
        if !alpha_ok {
            return Err(Error::Domain(format!(
                "alpha = {} outside the {:?} range",
                self.alpha, self.sided
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Domain(format!(
                "scale = {} must be positive",
                self.scale
            )));
        }
        if !self.location.is_finite() {
            return Err(Error::Domain("location must be finite".into()));
        }
        Ok(())
    }
}
