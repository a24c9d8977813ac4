//! History-function representations on [-h, 0]: closed-form exponential sums
//! (the natural class for spectral objects) and sampled grids with spline
//! interpolation (the natural class for simulator output).

use nalgebra::DVector;

use crate::interp::UniformSpline;
use crate::{C64, CVec};

/// Closed-form history function θ ↦ Σ_k a_k e^{μ_k θ} with vector
/// coefficients a_k ∈ ℂⁿ.
#[derive(Debug, Clone)]
pub struct ExpSum {
    pub n: usize,
    pub terms: Vec<(C64, CVec)>,
}

impl ExpSum {
    pub fn zero(n: usize) -> Self {
        ExpSum { n, terms: Vec::new() }
    }

    pub fn single(mu: C64, coeff: CVec) -> Self {
        let n = coeff.len();
        ExpSum { n, terms: vec![(mu, coeff)] }
    }

    pub fn eval(&self, theta: f64) -> CVec {
        let mut out = CVec::zeros(self.n);
        for (mu, a) in &self.terms {
            out += a * (mu * theta).exp();
        }
        out
    }

    /// d/dθ, exact.
    pub fn derivative(&self) -> ExpSum {
        ExpSum {
            n: self.n,
            terms: self.terms.iter().map(|(mu, a)| (*mu, a * *mu)).collect(),
        }
    }

    pub fn scaled(&self, c: C64) -> ExpSum {
        ExpSum {
            n: self.n,
            terms: self.terms.iter().map(|(mu, a)| (*mu, a * c)).collect(),
        }
    }

    /// Add a term, merging with an existing exponent when they coincide.
    pub fn push(&mut self, mu: C64, coeff: CVec) {
        if coeff.iter().all(|c| c.norm() == 0.0) {
            return;
        }
        for (m, a) in &mut self.terms {
            if (*m - mu).norm() <= 1e-12 * (1.0 + mu.norm()) {
                *a += coeff;
                return;
            }
        }
        self.terms.push((mu, coeff));
    }

    pub fn add(&self, other: &ExpSum) -> ExpSum {
        let mut out = self.clone();
        for (mu, a) in &other.terms {
            out.push(*mu, a.clone());
        }
        out
    }

    pub fn conj(&self) -> ExpSum {
        ExpSum {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(mu, a)| (mu.conj(), a.map(|c| c.conj())))
                .collect(),
        }
    }

    /// Stack evaluations at the given lags into one ℂ^{n·m} vector
    /// (the argument layout of the nonlinearity jet).
    pub fn eval_at_lags(&self, lags: &[f64]) -> CVec {
        let m = lags.len();
        let mut out = CVec::zeros(self.n * m);
        for (li, &lag) in lags.iter().enumerate() {
            let v = self.eval(lag);
            for i in 0..self.n {
                out[li * self.n + i] = v[i];
            }
        }
        out
    }

    /// Largest |Im| over a sampling grid, relative to the overall scale.
    pub fn imag_magnitude(&self, h: f64, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..samples {
            let theta = -h * k as f64 / (samples - 1).max(1) as f64;
            let v = self.eval(theta);
            for c in v.iter() {
                worst = worst.max(c.im.abs());
                scale = scale.max(c.norm());
            }
        }
        worst / (1.0 + scale)
    }

    /// Sample the real part on a uniform grid over [-h, 0].
    pub fn to_grid(&self, h: f64, points: usize) -> GridHistory {
        let vals: Vec<DVector<f64>> = (0..points)
            .map(|k| {
                let theta = -h + h * k as f64 / (points - 1) as f64;
                let v = self.eval(theta);
                DVector::from_iterator(self.n, v.iter().map(|c| c.re))
            })
            .collect();
        GridHistory::new(h, vals)
    }
}

/// Real vector-valued history sampled on a uniform grid over [-h, 0],
/// interpolated per component by a natural cubic spline.
#[derive(Debug, Clone)]
pub struct GridHistory {
    pub h: f64,
    pub n: usize,
    pub values: Vec<DVector<f64>>,
    splines: Vec<UniformSpline>,
}

impl GridHistory {
    pub fn new(h: f64, values: Vec<DVector<f64>>) -> Self {
        let points = values.len();
        assert!(points >= 2);
        let n = values[0].len();
        let dx = h / (points - 1) as f64;
        let splines = (0..n)
            .map(|i| {
                UniformSpline::new(-h, dx, values.iter().map(|v| v[i]).collect())
            })
            .collect();
        GridHistory { h, n, values, splines }
    }

    /// Sample a closure on the default 512-point grid.
    pub fn from_fn<F: Fn(f64) -> DVector<f64>>(h: f64, n: usize, points: usize, f: F) -> Self {
        let vals: Vec<DVector<f64>> = (0..points)
            .map(|k| {
                let theta = -h + h * k as f64 / (points - 1) as f64;
                let v = f(theta);
                assert_eq!(v.len(), n);
                v
            })
            .collect();
        GridHistory::new(h, vals)
    }

    pub fn eval(&self, theta: f64) -> DVector<f64> {
        DVector::from_iterator(self.n, self.splines.iter().map(|s| s.eval(theta)))
    }

    pub fn eval_c(&self, theta: f64) -> CVec {
        CVec::from_iterator(self.n, self.splines.iter().map(|s| C64::new(s.eval(theta), 0.0)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, &x| m.max(x.abs()))
    }
}

pub const DEFAULT_GRID: usize = 512;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expsum_derivative_and_eval() {
        let mu = C64::new(-0.3, 1.1);
        let c = CVec::from_element(1, C64::new(2.0, 0.0));
        let e = ExpSum::single(mu, c);
        let d = e.derivative();
        let theta = -0.7;
        let want = C64::new(2.0, 0.0) * mu * (mu * theta).exp();
        assert!((d.eval(theta)[0] - want).norm() < 1e-14);
    }

    #[test]
    fn push_merges_equal_exponents() {
        let mu = C64::new(-1.0, 0.0);
        let mut e = ExpSum::zero(1);
        e.push(mu, CVec::from_element(1, C64::new(1.0, 0.0)));
        e.push(mu, CVec::from_element(1, C64::new(2.0, 0.0)));
        assert_eq!(e.terms.len(), 1);
        assert!((e.eval(0.0)[0] - C64::new(3.0, 0.0)).norm() < 1e-15);
    }
}
