//! Interpolation utilities: natural cubic splines on uniform grids and
//! per-step cubic Hermite dense output.

/// Natural cubic spline through uniformly spaced samples.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, dx: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        assert!(n >= 2);
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal solve for natural boundary conditions.
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs = vec![0.0; m];
            for i in 0..m {
                rhs[i] = 6.0 * (values[i] - 2.0 * values[i + 1] + values[i + 2]) / (dx * dx);
            }
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m.saturating_sub(1)).rev() {
                second[i + 1] = (rhs[i] - second[i + 2]) / diag[i];
            }
        }
        UniformSpline { x0, dx, values, second }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let t = ((x - self.x0) / self.dx).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let a = (i + 1) as f64 - t;
        let b = t - i as f64;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1])
                * self.dx
                * self.dx
                / 6.0
    }
}

/// Cubic Hermite interpolation on [t0, t1] from endpoint values and slopes.
pub fn hermite(t0: f64, t1: f64, y0: f64, y1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_smooth_function() {
        let n = 129;
        let dx = 1.0 / (n - 1) as f64;
        let vals: Vec<f64> = (0..n).map(|i| (2.0 * (i as f64) * dx).sin()).collect();
        let sp = UniformSpline::new(0.0, dx, vals);
        for k in 0..50 {
            let x = 0.013 + 0.019 * k as f64 % 1.0;
            let x = x.min(1.0);
            assert!((sp.eval(x) - (2.0 * x).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn hermite_endpoint_match() {
        let f = |t: f64| t * t * t - t;
        let d = |t: f64| 3.0 * t * t - 1.0;
        // Cubic Hermite is exact on cubics.
        let got = hermite(0.5, 1.5, f(0.5), f(1.5), d(0.5), d(1.5), 0.9);
        assert!((got - f(0.9)).abs() < 1e-14);
    }
}
