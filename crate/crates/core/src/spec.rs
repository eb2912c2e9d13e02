//! Estimator configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "vmf")]
    VonMisesFisher,
    #[serde(rename = "ps")]
    PowerSpherical,
}

/// A location-scale law on the sphere with concentration `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleFamily {
    pub family: Family,
    pub kappa: f64,
}

impl ScaleFamily {
    pub fn new(family: Family, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::domain(format!(
                "concentration must satisfy 0 < kappa < inf, got {kappa}"
            )));
        }
        Ok(Self { family, kappa })
    }

    pub fn vmf(kappa: f64) -> Result<Self> {
        Self::new(Family::VonMisesFisher, kappa)
    }

    pub fn power_spherical(kappa: f64) -> Result<Self> {
        Self::new(Family::PowerSpherical, kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "sgw")]
    Sgw,
    #[serde(rename = "max-sgw")]
    MaxSgw,
    #[serde(rename = "dsgw")]
    Dsgw,
    #[serde(rename = "ebsgw")]
    Ebsgw,
    #[serde(rename = "rpsgw")]
    Rpsgw,
    #[serde(rename = "rasgw")]
    Rasgw,
    #[serde(rename = "iwrasgw")]
    Iwrasgw,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sgw,
        Method::MaxSgw,
        Method::Dsgw,
        Method::Ebsgw,
        Method::Rpsgw,
        Method::Rasgw,
        Method::Iwrasgw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgw => "sgw",
            Method::MaxSgw => "max-sgw",
            Method::Dsgw => "dsgw",
            Method::Ebsgw => "ebsgw",
            Method::Rpsgw => "rpsgw",
            Method::Rasgw => "rasgw",
            Method::Iwrasgw => "iwrasgw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown method {s:?}")))
    }
}

/// Increasing energy used by the importance-weighted estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Energy {
    Exp,
    #[serde(rename = "id")]
    Identity,
}

/// Which estimator to run and all of its hyperparameters. Fields that a
/// method does not use are carried along unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub method: Method,
    /// M: directions for SGW, RPSGW, RASGW.
    pub projections: usize,
    /// L: directions per group (IWRASGW), per evaluation (EBSGW, DSGW).
    pub inner: usize,
    /// H: independent groups averaged by IWRASGW.
    pub outer: usize,
    pub scale: ScaleFamily,
    pub energy: Energy,
    /// T: ascent iterations for Max-SGW and DSGW.
    pub opt_iters: usize,
    pub step_size: f64,
    pub restarts: usize,
    /// Exponent of the ground cost. Only 2 is supported.
    pub p: u32,
}

impl EstimatorSpec {
    pub const DEFAULT_PROJECTIONS: usize = 500;
    pub const DEFAULT_KAPPA: f64 = 50.0;

    pub fn new(method: Method) -> Self {
        Self {
            method,
            projections: Self::DEFAULT_PROJECTIONS,
            inner: 50,
            outer: 1,
            scale: ScaleFamily {
                family: Family::VonMisesFisher,
                kappa: Self::DEFAULT_KAPPA,
            },
            energy: Energy::Exp,
            opt_iters: 100,
            step_size: 0.05,
            restarts: 8,
            p: 2,
        }
    }

    pub fn with_projections(mut self, m: usize) -> Self {
        self.projections = m;
        self
    }

    pub fn with_inner(mut self, l: usize) -> Self {
        self.inner = l;
        self
    }

    pub fn with_outer(mut self, h: usize) -> Self {
        self.outer = h;
        self
    }

    pub fn with_scale(mut self, scale: ScaleFamily) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.scale.kappa = kappa;
        self
    }

    pub fn with_energy(mut self, energy: Energy) -> Self {
        self.energy = energy;
        self
    }

    pub fn with_opt_iters(mut self, t: usize) -> Self {
        self.opt_iters = t;
        self
    }

    pub fn with_step_size(mut self, step: f64) -> Self {
        self.step_size = step;
        self
    }

    pub fn with_restarts(mut self, r: usize) -> Self {
        self.restarts = r;
        self
    }

    /// Total number of sampled directions the method evaluates once.
    pub fn direction_budget(&self) -> usize {
        match self.method {
            Method::Sgw | Method::Rpsgw | Method::Rasgw => self.projections,
            Method::Iwrasgw => self.inner * self.outer,
            Method::Ebsgw | Method::Dsgw => self.inner,
            Method::MaxSgw => self.restarts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p != 2 {
            return Err(Error::domain(format!("only p = 2 is supported, got p = {}", self.p)));
        }
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::domain(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match self.method {
            Method::Sgw | Method::Rpsgw | Method::Rasgw => positive("projections", self.projections)?,
            Method::Iwrasgw => {
                positive("inner", self.inner)?;
                positive("outer", self.outer)?;
            }
            Method::Ebsgw => positive("inner", self.inner)?,
            Method::Dsgw => {
                positive("inner", self.inner)?;
                positive("opt_iters", self.opt_iters)?;
            }
            Method::MaxSgw => {
                positive("opt_iters", self.opt_iters)?;
                positive("restarts", self.restarts)?;
            }
        }
        if matches!(
            self.method,
            Method::Rasgw | Method::Iwrasgw | Method::Rpsgw | Method::Dsgw
        ) {
            ScaleFamily::new(self.scale.family, self.scale.kappa)?;
        }
        if matches!(self.method, Method::MaxSgw | Method::Dsgw) && !(self.step_size > 0.0 && self.step_size.is_finite())
        {
            return Err(Error::domain("step size must be positive"));
        }
        Ok(())
    }
}
