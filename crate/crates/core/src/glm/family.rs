use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted means are kept this far inside the open mean space before the
/// variance function and working weights are evaluated.
pub const MU_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    BinomialLogit,
    PoissonLog,
    GaussianIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dispersion {
    /// Known dispersion. Always 1 for binomial and poisson.
    Fixed(f64),
    /// Pearson estimate with `n - q` degrees of freedom.
    Estimated,
}

/// An exponential family with its canonical link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub dispersion: Dispersion,
}

impl Family {
    pub fn binomial() -> Self {
        Self { kind: FamilyKind::BinomialLogit, dispersion: Dispersion::Fixed(1.0) }
    }

    pub fn poisson() -> Self {
        Self { kind: FamilyKind::PoissonLog, dispersion: Dispersion::Fixed(1.0) }
    }

    /// Gaussian with the dispersion estimated from the null fit.
    pub fn gaussian() -> Self {
        Self { kind: FamilyKind::GaussianIdentity, dispersion: Dispersion::Estimated }
    }

    /// Gaussian with a known dispersion `phi > 0`.
    pub fn gaussian_known(phi: f64) -> Self {
        assert!(phi > 0.0 && phi.is_finite(), "dispersion must be positive");
        Self { kind: FamilyKind::GaussianIdentity, dispersion: Dispersion::Fixed(phi) }
    }

    /// Parses `binomial`, `poisson` or `gaussian`.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "binomial" | "binomial-logit" => Some(Self::binomial()),
            "poisson" | "poisson-log" => Some(Self::poisson()),
            "gaussian" | "gaussian-identity" => Some(Self::gaussian()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::BinomialLogit => "binomial",
            FamilyKind::PoissonLog => "poisson",
            FamilyKind::GaussianIdentity => "gaussian",
        }
    }

    pub fn inverse_link(&self, eta: &DVector<f64>) -> DVector<f64> {
        eta.map(|e| self.mean(e))
    }

    pub fn link(&self, mu: &DVector<f64>) -> DVector<f64> {
        mu.map(|m| self.link_scalar(m))
    }

    /// Variance function `V(mu)`; gaussian returns the dispersion.
    pub fn variance_function(&self, mu: &DVector<f64>, dispersion: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(mu.len());
        for (i, &m) in mu.iter().enumerate() {
            let inside = match self.kind {
                FamilyKind::BinomialLogit => m > 0.0 && m < 1.0,
                FamilyKind::PoissonLog => m > 0.0,
                FamilyKind::GaussianIdentity => m.is_finite(),
            };
            if !inside || !m.is_finite() {
                return Err(Error::Boundary { index: i, mu: m });
            }
            out[i] = self.variance(m, dispersion);
        }
        Ok(out)
    }

    /// `d mu / d eta`, evaluated at the clamped mean so it stays positive.
    pub fn mean_derivative(&self, eta: &DVector<f64>) -> DVector<f64> {
        eta.map(|e| self.mu_eta(e))
    }

    #[inline]
    pub fn mean(&self, eta: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => logistic(eta),
            FamilyKind::PoissonLog => eta.exp(),
            FamilyKind::GaussianIdentity => eta,
        }
    }

    #[inline]
    pub fn link_scalar(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => (mu / (1.0 - mu)).ln(),
            FamilyKind::PoissonLog => mu.ln(),
            FamilyKind::GaussianIdentity => mu,
        }
    }

    #[inline]
    pub fn mu_eta(&self, eta: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => {
                let m = self.clamp_mu(logistic(eta));
                m * (1.0 - m)
            }
            FamilyKind::PoissonLog => self.clamp_mu(eta.exp()),
            FamilyKind::GaussianIdentity => 1.0,
        }
    }

    #[inline]
    pub fn variance(&self, mu: f64, dispersion: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => mu * (1.0 - mu),
            FamilyKind::PoissonLog => mu,
            FamilyKind::GaussianIdentity => dispersion,
        }
    }

    #[inline]
    pub fn clamp_mu(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => mu.clamp(MU_CLAMP, 1.0 - MU_CLAMP),
            FamilyKind::PoissonLog => mu.max(MU_CLAMP),
            FamilyKind::GaussianIdentity => mu,
        }
    }

    /// True when the raw fitted mean had to be clamped.
    #[inline]
    pub fn on_boundary(&self, mu: f64) -> bool {
        self.clamp_mu(mu) != mu
    }

    /// Starting means for IRLS.
    pub fn initial_mu(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => (y + 0.5) / 2.0,
            FamilyKind::PoissonLog => y + 0.5,
            FamilyKind::GaussianIdentity => y,
        }
    }

    /// Unit deviance `d(y, mu)`.
    pub fn unit_deviance(&self, y: f64, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::BinomialLogit => {
                let m = self.clamp_mu(mu);
                2.0 * (xlogy(y, y / m) + xlogy(1.0 - y, (1.0 - y) / (1.0 - m)))
            }
            FamilyKind::PoissonLog => {
                let m = self.clamp_mu(mu);
                2.0 * (xlogy(y, y / m) - (y - m))
            }
            FamilyKind::GaussianIdentity => (y - mu) * (y - mu),
        }
    }

    pub fn deviance(&self, y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        y.iter().zip(mu.iter()).map(|(&yi, &mi)| self.unit_deviance(yi, mi)).sum()
    }

    /// Log-likelihood up to terms that do not depend on the mean, at unit
    /// dispersion.
    pub fn log_likelihood_kernel(&self, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
        y.iter()
            .zip(eta.iter())
            .map(|(&yi, &e)| match self.kind {
                FamilyKind::BinomialLogit => yi * e - softplus(e),
                FamilyKind::PoissonLog => yi * e - e.exp(),
                FamilyKind::GaussianIdentity => -0.5 * (yi - e) * (yi - e),
            })
            .sum()
    }

    pub fn validate_response(&self, y: &DVector<f64>) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            let ok = v.is_finite()
                && match self.kind {
                    FamilyKind::BinomialLogit => v == 0.0 || v == 1.0,
                    FamilyKind::PoissonLog => v >= 0.0 && v.fract() == 0.0,
                    FamilyKind::GaussianIdentity => true,
                };
            if !ok {
                return Err(Error::InvalidData(format!(
                    "response {v} at row {} is not valid for the {} family",
                    i + 1,
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}
