//! Small complex-matrix helpers: determinants with analytic derivatives,
//! adjugates, and exponential-polynomial moment integrals.

use crate::{C64, CMat, CVec};

/// det(A) via cofactor expansion. Intended for the small state dimensions
/// (n ≤ 8) that arise in delay models.
pub fn det(a: &CMat) -> C64 {
    let n = a.nrows();
    match n {
        0 => C64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)],
        _ => {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                acc += a[(0, j)] * det(&minor(a, 0, j)) * C64::new(sign, 0.0);
            }
            acc
        }
    }
}

fn minor(a: &CMat, row: usize, col: usize) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n - 1, n - 1, |i, j| {
        let ii = if i < row { i } else { i + 1 };
        let jj = if j < col { j } else { j + 1 };
        a[(ii, jj)]
    })
}

/// Adjugate matrix: adj(A)·A = det(A)·I. Well defined for singular A, which
/// is exactly where it is needed (residues at characteristic roots).
pub fn adjugate(a: &CMat) -> CMat {
    let n = a.nrows();
    if n == 1 {
        return CMat::from_element(1, 1, C64::new(1.0, 0.0));
    }
    CMat::from_fn(n, n, |i, j| {
        // adj(A)_{ij} = (-1)^{i+j} M_{ji}
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        det(&minor(a, j, i)) * C64::new(sign, 0.0)
    })
}

/// Solve A x = b for a small complex system by LU with partial pivoting.
pub fn solve(a: &CMat, b: &CVec) -> Option<CVec> {
    a.clone().lu().solve(b)
}

/// ∫_a^b θ^p e^{-zθ} dθ, exact up to round-off.
///
/// Uses the truncated power series for small |z| (where the integration-by-
/// parts recursion loses digits) and the recursion otherwise.
pub fn exp_poly_integral(z: C64, a: f64, b: f64, p: usize) -> C64 {
    let scale = a.abs().max(b.abs()).max(1.0);
    if z.norm() * scale < 0.5 {
        // Σ_k (-z)^k/k! (b^{p+k+1} - a^{p+k+1})/(p+k+1)
        let mut term = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..200 {
            let q = (p + k + 1) as f64;
            let contrib = term * C64::new((b.powf(q) - a.powf(q)) / q, 0.0);
            acc += contrib;
            if contrib.norm() < 1e-18 * (1.0 + acc.norm()) && k > 3 {
                break;
            }
            term *= -z / C64::new((k + 1) as f64, 0.0);
        }
        acc
    } else {
        // I_p = (a^p e^{-za} - b^p e^{-zb})/z + (p/z) I_{p-1}
        let ea = (-z * a).exp();
        let eb = (-z * b).exp();
        let mut i = (ea - eb) / z;
        for q in 1..=p {
            i = (C64::new(a.powi(q as i32), 0.0) * ea - C64::new(b.powi(q as i32), 0.0) * eb) / z
                + C64::new(q as f64, 0.0) / z * i;
        }
        i
    }
}

/// Divided difference (e^{-λ s} - e^{-μ s}) / (μ - λ), stable as μ → λ.
pub fn exp_divided_difference(lambda: C64, mu: C64, s: f64) -> C64 {
    let d = mu - lambda;
    if d.norm() < 1e-8 * (1.0 + lambda.norm().max(mu.norm())) {
        // limit: s e^{-λ s} with a first-order correction in d
        let m = 0.5 * (lambda + mu);
        C64::new(s, 0.0) * (-m * s).exp()
    } else {
        ((-lambda * s).exp() - (-mu * s).exp()) / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::GL64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn adjugate_identity() {
        let a = CMat::from_row_slice(3, 3, &[
            c(1.0, 0.5), c(2.0, 0.0), c(0.0, -1.0),
            c(0.0, 0.0), c(3.0, 1.0), c(1.0, 0.0),
            c(2.0, 0.0), c(0.0, 0.0), c(1.0, 2.0),
        ]);
        let d = det(&a);
        let prod = adjugate(&a) * &a;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { d } else { c(0.0, 0.0) };
                assert!((prod[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exp_poly_matches_quadrature() {
        for &z in &[c(0.0, 0.0), c(1e-9, 0.0), c(0.3, -0.7), c(-4.0, 2.5), c(8.0, 0.0)] {
            for p in 0..4 {
                let exact = exp_poly_integral(z, 0.2, 1.3, p);
                let re = GL64.integrate(0.2, 1.3, |t| (t.powi(p as i32) * (-z * t).exp()).re);
                let im = GL64.integrate(0.2, 1.3, |t| (t.powi(p as i32) * (-z * t).exp()).im);
                assert!(
                    (exact - c(re, im)).norm() < 1e-10 * (1.0 + exact.norm()),
                    "z={z}, p={p}: {exact} vs {re}+{im}i"
                );
            }
        }
    }

    #[test]
    fn divided_difference_limit() {
        let l = c(-0.4, 1.2);
        let near = l + c(1e-12, 0.0);
        let dd = exp_divided_difference(l, near, 0.8);
        let want = c(0.8, 0.0) * (-l * 0.8).exp();
        assert!((dd - want).norm() < 1e-9);
    }
}
