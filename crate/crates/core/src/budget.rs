use crate::error::{Error, Result};

/// Asymmetric privacy budget `(eps_l, eps_u)` in nats.
///
/// `eps_l` bounds the min-lift from below (`Ψ(y) >= e^-eps_l`) and `eps_u`
/// bounds the max-lift from above (`Λ(y) <= e^eps_u`). Either side may be
/// `+inf`, meaning unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    eps_l: f64,
    eps_u: f64,
}

impl Budget {
    pub fn new(eps_l: f64, eps_u: f64) -> Result<Self> {
        for (name, v) in [("eps_l", eps_l), ("eps_u", eps_u)] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidBudget(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(Self { eps_l, eps_u })
    }

    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(eps, eps)
    }

    /// `eps_l = lambda * eps`, `eps_u = (1 - lambda) * eps`.
    pub fn from_ldp(eps: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidBudget(format!(
                "lambda must lie in (0, 1), got {lambda}"
            )));
        }
        Self::new(lambda * eps, (1.0 - lambda) * eps)
    }

    pub fn unbounded() -> Self {
        Self {
            eps_l: f64::INFINITY,
            eps_u: f64::INFINITY,
        }
    }

    pub fn eps_l(&self) -> f64 {
        self.eps_l
    }

    pub fn eps_u(&self) -> f64 {
        self.eps_u
    }

    /// The LDP budget implied by the pair, `eps_l + eps_u`.
    pub fn ldp_eps(&self) -> f64 {
        self.eps_l + self.eps_u
    }

    /// Lower lift bound `e^-eps_l`.
    pub fn min_lift_bound(&self) -> f64 {
        (-self.eps_l).exp()
    }

    /// Upper lift bound `e^eps_u`.
    pub fn max_lift_bound(&self) -> f64 {
        self.eps_u.exp()
    }

    pub fn is_unbounded(&self) -> bool {
        self.eps_l.is_infinite() && self.eps_u.is_infinite()
    }
}
