use serde::{Deserialize, Serialize};

use super::{invalid, SimError};

/// Library size dynamics `dL/dt = λ_g (1 - L/K) - λ_p L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub lambda_g: f64,
    pub lambda_p: f64,
    pub k_cap: f64,
    pub l0: f64,
    pub horizon: f64,
    pub dt: f64,
}

impl GrowthParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let finite_pos = |v: f64| v > 0.0 && v.is_finite();
        if !finite_pos(self.lambda_g) || !finite_pos(self.lambda_p) || !finite_pos(self.k_cap) {
            return invalid("lambda_g, lambda_p and k_cap must be positive");
        }
        if !(self.l0 >= 0.0 && self.l0.is_finite()) {
            return invalid("l0 must be >= 0");
        }
        if !finite_pos(self.dt) || !(self.horizon.is_finite() && self.dt <= self.horizon) {
            return invalid("need 0 < dt <= horizon");
        }
        Ok(())
    }

    fn rate(&self, l: f64) -> f64 {
        self.lambda_g * (1.0 - l / self.k_cap) - self.lambda_p * l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub t: f64,
    pub l_numeric: f64,
    pub l_closed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrajectory {
    pub points: Vec<GrowthPoint>,
    pub l_star: f64,
    pub decay_rate: f64,
}

impl GrowthTrajectory {
    pub fn max_abs_error(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p.l_numeric - p.l_closed).abs())
            .fold(0.0, f64::max)
    }
}

/// `L* = λ_g K / (λ_g + λ_p K)`.
pub fn equilibrium(p: &GrowthParams) -> f64 {
    p.lambda_g * p.k_cap / (p.lambda_g + p.lambda_p * p.k_cap)
}

/// `B = λ_g / K + λ_p`.
pub fn decay_rate(p: &GrowthParams) -> f64 {
    p.lambda_g / p.k_cap + p.lambda_p
}

/// `L(t) = L* + (L0 - L*) e^(-B t)`.
pub fn closed_form(p: &GrowthParams, t: f64) -> f64 {
    let l_star = equilibrium(p);
    l_star + (p.l0 - l_star) * (-decay_rate(p) * t).exp()
}

/// Classic fourth-order Runge-Kutta at step `dt`; the last step is clipped
/// to land exactly on the horizon.
pub fn library_growth(p: &GrowthParams) -> Result<GrowthTrajectory, SimError> {
    p.validate()?;
    let steps = (p.horizon / p.dt).ceil() as usize;
    let mut points = Vec::with_capacity(steps + 1);
    let (mut t, mut l) = (0.0_f64, p.l0);
    points.push(GrowthPoint {
        t,
        l_numeric: l,
        l_closed: closed_form(p, t),
    });
    for i in 0..steps {
        let h = if i + 1 == steps { p.horizon - t } else { p.dt };
        let k1 = p.rate(l);
        let k2 = p.rate(l + 0.5 * h * k1);
        let k3 = p.rate(l + 0.5 * h * k2);
        let k4 = p.rate(l + h * k3);
        l += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = if i + 1 == steps {
            p.horizon
        } else {
            (i + 1) as f64 * p.dt
        };
        points.push(GrowthPoint {
            t,
            l_numeric: l,
            l_closed: closed_form(p, t),
        });
    }
    Ok(GrowthTrajectory {
        points,
        l_star: equilibrium(p),
        decay_rate: decay_rate(p),
    })
}
