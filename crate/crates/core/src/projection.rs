//! Spectral projections and dichotomy data.
//!
//! For a simple characteristic root λ the projection acts on a history u as
//!   [P_λ u](θ) = e^{λθ} ξ(λ) [ u(0) + ∫₀ʰ dζ(s) ∫₀ˢ e^{-λτ} u(τ-s) dτ ],
//! with residue matrix ξ(λ) = adj Δ(λ) / (det Δ)′(λ). Multiple roots are
//! handled by a Cauchy integral of the resolvent over a small circle, using
//! that the resolvent applied to u is e^{zθ}Δ(z)^{-1}[bracket] plus a term
//! entire in z (which integrates to zero).

use crate::histfn::ExpSum;
use crate::linalg::{adjugate, exp_divided_difference};
use crate::model::DelayKernel;
use crate::quad::GL64;
use crate::spectrum::{char_det, Root, SpectrumSlice};
use crate::{C64, CMat, CVec, Error, Result, Tolerances};

/// A simple eigenvalue together with its normalized right null vector and
/// residue matrix.
#[derive(Debug, Clone)]
pub struct EigenData {
    pub lambda: C64,
    /// Right null vector of Δ(λ): first nonzero component real positive,
    /// unit ∞-norm.
    pub c: CVec,
    /// ξ(λ) = lim_{z→λ} (z−λ)Δ(z)^{-1} = adj Δ(λ)/(det Δ)′(λ).
    pub xi: CMat,
}

/// Residue matrix at a simple root.
pub fn xi_residue(kernel: &DelayKernel, lambda: C64, tols: &Tolerances) -> Result<CMat> {
    let (_, detp) = char_det(kernel, lambda);
    if detp.norm() <= tols.tol_deriv {
        return Err(Error::MultipleRoot(lambda, detp.norm()));
    }
    let adj = adjugate(&kernel.delta(lambda));
    Ok(adj.map(|e| e / detp))
}

pub fn eigen_data(kernel: &DelayKernel, lambda: C64, tols: &Tolerances) -> Result<EigenData> {
    let xi = xi_residue(kernel, lambda, tols)?;
    // Columns of adj Δ(λ) (equivalently of ξ) span the null direction; pick
    // the largest one.
    let n = kernel.n;
    let mut best = 0;
    let mut best_norm = 0.0;
    for j in 0..n {
        let cn: f64 = (0..n).map(|i| xi[(i, j)].norm_sqr()).sum();
        if cn > best_norm {
            best_norm = cn;
            best = j;
        }
    }
    let mut c = CVec::from_iterator(n, (0..n).map(|i| xi[(i, best)]));
    let max = c.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
    if max == 0.0 {
        return Err(Error::RootSearch(format!(
            "residue matrix vanished at {lambda}; not an eigenvalue"
        )));
    }
    let first = c
        .iter()
        .find(|x| x.norm() > 1e-12 * max)
        .copied()
        .unwrap();
    let phase = first / first.norm();
    c = c.map(|x| x / phase / max);
    Ok(EigenData { lambda, c, xi })
}

/// The bracketed vector of the projection formula:
/// u(0) + ∫₀ʰ dζ(s) ∫₀ˢ e^{-zτ} u(τ-s) dτ, with the inner integral done by
/// 64-node Gauss–Legendre against the kernel's atoms and densities.
pub fn projection_bracket(kernel: &DelayKernel, z: C64, u: &dyn Fn(f64) -> CVec) -> CVec {
    let n = kernel.n;
    let mut acc = u(0.0);
    for at in &kernel.atoms {
        if at.tau == 0.0 {
            continue;
        }
        let mut inner = CVec::zeros(n);
        for (tau, w) in GL64.mapped(0.0, at.tau) {
            let e = (-z * tau).exp() * w;
            inner += u(tau - at.tau) * e;
        }
        for i in 0..n {
            for j in 0..n {
                acc[i] += inner[j] * at.weight[(i, j)];
            }
        }
    }
    for d in &kernel.densities {
        for (s, ws) in GL64.mapped(d.a, d.b) {
            if s == 0.0 {
                continue;
            }
            let c = d.eval(s);
            let mut inner = CVec::zeros(n);
            for (tau, w) in GL64.mapped(0.0, s) {
                let e = (-z * tau).exp() * w;
                inner += u(tau - s) * e;
            }
            for i in 0..n {
                for j in 0..n {
                    acc[i] += inner[j] * c[(i, j)] * ws;
                }
            }
        }
    }
    acc
}

/// Same bracket for a closed-form exponential-sum history, evaluated exactly:
/// for u(θ) = Σ_k a_k e^{μ_k θ} the inner integral telescopes into divided
/// differences of exponentials.
pub fn projection_bracket_expsum(kernel: &DelayKernel, z: C64, u: &ExpSum) -> CVec {
    let n = kernel.n;
    let mut acc = u.eval(0.0);
    for (mu, a) in &u.terms {
        // ∫₀ˢ e^{-zτ} e^{μ(τ-s)} dτ = e^{-μs}(e^{(μ-z)s}-1)/(μ-z)
        //                            = (e^{-zs} - e^{-μs})/(μ - z),
        // so the kernel pairing gives (L(z) - L(μ))/(μ - z) · a.
        let lz = kernel.laplace(z);
        let lmu = kernel.laplace(*mu);
        let d = *mu - z;
        let g = if d.norm() < 1e-8 * (1.0 + z.norm()) {
            // Limit: -L′(z) = ∫ t e^{-zt} dζ(t).
            kernel.laplace_dz(z).map(|e| -e)
        } else {
            let mut m = lz.clone();
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = (lz[(i, j)] - lmu[(i, j)]) / d;
                }
            }
            m
        };
        acc += g * a;
    }
    acc
}

/// Eq.-style projection onto a simple eigenvalue; the result is the
/// single-exponential history y·e^{λθ} returned in closed form.
pub fn project_history(
    kernel: &DelayKernel,
    lambda: C64,
    u: &dyn Fn(f64) -> CVec,
    tols: &Tolerances,
) -> Result<ExpSum> {
    let xi = xi_residue(kernel, lambda, tols)?;
    let b = projection_bracket(kernel, lambda, u);
    Ok(ExpSum::single(lambda, xi * b))
}

/// Projection onto a root of any multiplicity via the Cauchy integral of the
/// resolvent over a circle of the given radius (which must separate λ from
/// the rest of the spectrum). Spectrally accurate trapezoidal rule; the
/// result is returned as an exponential sum anchored at the quadrature nodes.
pub fn project_history_contour(
    kernel: &DelayKernel,
    lambda: C64,
    radius: f64,
    u: &dyn Fn(f64) -> CVec,
) -> Result<ExpSum> {
    let m = 64usize;
    let mut out = ExpSum::zero(kernel.n);
    for k in 0..m {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let e = C64::new(0.0, phi).exp();
        let z = lambda + e * radius;
        let b = projection_bracket(kernel, z, u);
        let v = crate::linalg::solve(&kernel.delta(z), &b).ok_or(Error::ResolventPole(z, 0.0))?;
        out.push(z, v * (e * radius / m as f64));
    }
    Ok(out)
}

/// P_Σ u for a conjugate-closed set of simple roots, in closed form.
pub fn project_sigma(
    kernel: &DelayKernel,
    sigma: &[Root],
    u: &dyn Fn(f64) -> CVec,
    tols: &Tolerances,
) -> Result<ExpSum> {
    let mut acc = ExpSum::zero(kernel.n);
    for r in sigma {
        if r.multiplicity != 1 {
            return Err(Error::MultipleRoot(r.lambda, 0.0));
        }
        let p = project_history(kernel, r.lambda, u, tols)?;
        acc = acc.add(&p);
    }
    Ok(acc)
}

/// Scalar Σ-coordinate of u along a simple eigenvalue: the y with
/// P_λ u = y·c e^{λθ}.
pub fn sigma_coordinate(
    kernel: &DelayKernel,
    eig: &EigenData,
    u: &dyn Fn(f64) -> CVec,
) -> C64 {
    let b = projection_bracket(kernel, eig.lambda, u);
    let v = &eig.xi * b;
    let mut k = 0;
    let mut best = 0.0;
    for i in 0..eig.c.len() {
        if eig.c[i].norm() > best {
            best = eig.c[i].norm();
            k = i;
        }
    }
    v[k] / eig.c[k]
}

/// G_λ(μ) = (L(λ) − L(μ))/(μ − λ) — the divided difference of the kernel's
/// Laplace transform, stable as μ → λ. This is the matrix version of
/// ∫₀ʰ dζ(s)(e^{-λs} − e^{-μs})/(μ − λ).
pub fn laplace_divided_difference(kernel: &DelayKernel, lambda: C64, mu: C64) -> CMat {
    let n = kernel.n;
    let mut m = CMat::zeros(n, n);
    for at in &kernel.atoms {
        let dd = exp_divided_difference(lambda, mu, at.tau);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += dd * at.weight[(i, j)];
            }
        }
    }
    for d in &kernel.densities {
        for (s, w) in GL64.mapped(d.a, d.b) {
            let c = d.eval(s);
            let dd = exp_divided_difference(lambda, mu, s) * w;
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += dd * c[(i, j)];
                }
            }
        }
    }
    m
}

#[derive(Debug, Clone, Copy)]
pub enum DichotomyMode {
    /// Convergent eigen-expansion setting (all roots simple):
    /// M = K₁ = K₂ = 1, ω just above the top of the spectrum.
    Series,
    /// User-supplied constants, validated and passed through.
    Conservative { m: f64, omega: f64, k1: f64, k2: f64 },
}

/// Growth/dichotomy constants ‖T(t)P_Σ‖ ≤ K₁e^{(α−ε₁)t}‖P_Σ‖,
/// ‖T(t)P_Σ′‖ ≤ K₂e^{(β+ε₂)t}‖P_Σ′‖, ‖T(t)‖ ≤ M e^{ωt}.
#[derive(Debug, Clone, Copy)]
pub struct DichotomyConstants {
    pub m: f64,
    pub omega: f64,
    pub k1: f64,
    pub k2: f64,
    pub eps1: f64,
    pub eps2: f64,
}

pub fn dichotomy_constants(
    slice: &SpectrumSlice,
    mode: DichotomyMode,
    eps1: f64,
    eps2: f64,
) -> Result<DichotomyConstants> {
    match mode {
        DichotomyMode::Series => {
            for r in &slice.roots {
                if r.multiplicity > 1 {
                    return Err(Error::SeriesModeUnjustified(r.lambda, r.multiplicity));
                }
            }
            let top = slice
                .roots
                .iter()
                .map(|r| r.lambda.re)
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(DichotomyConstants { m: 1.0, omega: top + 1e-6, k1: 1.0, k2: 1.0, eps1, eps2 })
        }
        DichotomyMode::Conservative { m, omega, k1, k2 } => {
            if m <= 0.0 || k1 <= 0.0 || k2 <= 0.0 {
                return Err(Error::InvalidSystem(
                    "dichotomy constants must be positive".into(),
                ));
            }
            if let Some(alpha) = slice.alpha() {
                if omega <= alpha {
                    return Err(Error::InvalidSystem(format!(
                        "semigroup exponent ω = {omega} must exceed α = {alpha}"
                    )));
                }
            }
            Ok(DichotomyConstants { m, omega, k1, k2, eps1, eps2 })
        }
    }
}

/// Rigorous upper bound on ‖P_Σ‖ from the projection formula: bounding
/// |e^{λθ}| ≤ e^{max(0,−Re λ)h} on [−h,0] and |e^{−λτ}| ≤ e^{|λ|τ} inside
/// the kernel pairing gives, per simple root,
///   ‖P_λ‖ ≤ ‖ξ(λ)‖_∞ e^{max(0,−Re λ)h} (1 + ∫₀ʰ d|ζ|(s) (e^{|λ|s}−1)/|λ|),
/// and the bounds for the members of Σ add. Conservative but sound: this is
/// the constant to use when an over-estimate of a Lipschitz constant is
/// needed (e.g. the cutoff certificate), where the sampled estimate below
/// would be unsound.
pub fn p_sigma_norm_bound(
    kernel: &DelayKernel,
    sigma: &[Root],
    tols: &Tolerances,
) -> Result<f64> {
    let h = kernel.h;
    let mut total = 0.0;
    for root in sigma {
        let lam = root.lambda;
        let xi = xi_residue(kernel, lam, tols)?;
        let xi_norm = (0..xi.nrows())
            .map(|i| (0..xi.ncols()).map(|j| xi[(i, j)].norm()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let ml = lam.norm();
        // g(s) = ∫₀ˢ e^{|λ|τ} dτ, the inner-integral bound.
        let g = |s: f64| if ml > 0.0 { ((ml * s).exp() - 1.0) / ml } else { s };
        let mut pairing = 1.0;
        for at in &kernel.atoms {
            let w = (0..at.weight.nrows())
                .map(|i| (0..at.weight.ncols()).map(|j| at.weight[(i, j)].abs()).sum::<f64>())
                .fold(0.0f64, f64::max);
            pairing += w * g(at.tau);
        }
        for d in &kernel.densities {
            pairing += GL64.integrate(d.a, d.b, |s| {
                let c = d.eval(s);
                let w = (0..c.nrows())
                    .map(|i| (0..c.ncols()).map(|j| c[(i, j)].abs()).sum::<f64>())
                    .fold(0.0f64, f64::max);
                w * g(s)
            });
        }
        total += xi_norm * (h * (-lam.re).max(0.0)).exp() * pairing;
    }
    Ok(total)
}

/// Numerical estimate of ‖P_Σ‖ as a sup over a deterministic battery of
/// sup-norm-one trigonometric histories. A sampled lower bound, reported as
/// an estimate of the operator norm.
pub fn p_sigma_norm_estimate(
    kernel: &DelayKernel,
    sigma: &[Root],
    samples: usize,
    tols: &Tolerances,
) -> Result<f64> {
    let n = kernel.n;
    let h = kernel.h;
    let mut state: u64 = 0x9e3779b97f4a7c15;
    let mut rand = move || {
        // xorshift64*; deterministic across platforms.
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        (state.wrapping_mul(0x2545f4914f6cdd1d) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let grid: Vec<f64> = (0..=200).map(|k| -h + h * k as f64 / 200.0).collect();
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let coeffs: Vec<Vec<(f64, f64)>> = (0..n)
            .map(|_| (0..6).map(|_| (rand(), rand())).collect())
            .collect();
        let eval = |theta: f64| {
            CVec::from_iterator(
                n,
                coeffs.iter().map(|cs| {
                    let mut v = 0.0;
                    for (j, (a, b)) in cs.iter().enumerate() {
                        let f = std::f64::consts::PI * (j as f64 + 0.5) * theta / h;
                        v += a * f.cos() + b * f.sin();
                    }
                    C64::new(v, 0.0)
                }),
            )
        };
        let sup = grid
            .iter()
            .flat_map(|&t| eval(t).iter().map(|c| c.re.abs()).collect::<Vec<_>>())
            .fold(0.0f64, f64::max);
        if sup == 0.0 {
            continue;
        }
        let scaled = |theta: f64| eval(theta).map(|c| c / sup);
        let p = project_sigma(kernel, sigma, &scaled, tols)?;
        let pnorm = grid
            .iter()
            .map(|&t| p.eval(t).iter().map(|c| c.norm()).fold(0.0f64, f64::max))
            .fold(0.0f64, f64::max);
        worst = worst.max(pnorm);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, Density};
    use crate::spectrum::roots_right_of;
    use nalgebra::DMatrix;

    fn cushing_kernel(b: f64, h: f64) -> DelayKernel {
        DelayKernel::new(
            1,
            h,
            vec![],
            vec![Density { a: 0.0, b: h, coeffs: vec![DMatrix::from_element(1, 1, b)] }],
        )
        .unwrap()
    }

    #[test]
    fn projection_norm_bound_dominates_sampled_estimate() {
        let tols = Tolerances::default();
        // Distributed kernel, single real root.
        let k = cushing_kernel(-0.3, 1.0);
        let slice = roots_right_of(&k, -1.0, None, &tols).unwrap();
        let bound = p_sigma_norm_bound(&k, &slice.sigma(), &tols).unwrap();
        let est = p_sigma_norm_estimate(&k, &slice.sigma(), 64, &tols).unwrap();
        assert!(bound >= est, "bound {bound} below sampled estimate {est}");
        assert!(est > 0.1, "battery estimate degenerate: {est}");

        // Atom kernel, conjugate pair.
        let k = DelayKernel::new(
            1,
            1.6,
            vec![Atom { tau: 1.6, weight: DMatrix::from_element(1, 1, -1.0) }],
            vec![],
        )
        .unwrap();
        let slice = roots_right_of(&k, -0.5, None, &tols).unwrap();
        assert_eq!(slice.roots.len(), 2);
        let bound = p_sigma_norm_bound(&k, &slice.sigma(), &tols).unwrap();
        let est = p_sigma_norm_estimate(&k, &slice.sigma(), 64, &tols).unwrap();
        assert!(bound >= est, "bound {bound} below sampled estimate {est}");
    }

    #[test]
    fn xi_cushing_closed_form() {
        let b = -0.3;
        let h = 1.0;
        let k = cushing_kernel(b, h);
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -1.0, None, &tols).unwrap();
        let l1 = slice.roots[0].lambda;
        let xi = xi_residue(&k, l1, &tols).unwrap()[(0, 0)];
        let denom = C64::new(1.0, 0.0) + (C64::new(1.0, 0.0) - (-l1 * h).exp()) * b / (l1 * l1)
            - (-l1 * h).exp() * b * h / l1;
        assert!((xi - 1.0 / denom).norm() < 1e-10, "{xi} vs {}", 1.0 / denom);
    }

    #[test]
    fn xi_pure_delay() {
        // ẋ = -x(t-h): ξ(λ₁) = 1/(1+λ₁h).
        let h = 0.3;
        let k = DelayKernel::new(
            1,
            h,
            vec![Atom { tau: h, weight: DMatrix::from_element(1, 1, -1.0) }],
            vec![],
        )
        .unwrap();
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -3.0, None, &tols).unwrap();
        let l1 = slice.roots.last().unwrap().lambda;
        let xi = xi_residue(&k, l1, &tols).unwrap()[(0, 0)];
        let want = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + l1 * h);
        assert!((xi - want).norm() < 1e-10);
    }

    #[test]
    fn xi_ode_trivial() {
        // Δ(z) = z - a with a as an atom at τ = 0.
        let k = DelayKernel::new(
            1,
            1.0,
            vec![Atom { tau: 0.0, weight: DMatrix::from_element(1, 1, 0.7) }],
            vec![],
        )
        .unwrap();
        let xi = xi_residue(&k, C64::new(0.7, 0.0), &Tolerances::default()).unwrap();
        assert!((xi[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eigenfunction_invariance() {
        let k = cushing_kernel(-0.3, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -1.0, None, &tols).unwrap();
        let eig = eigen_data(&k, slice.roots[0].lambda, &tols).unwrap();
        let l = eig.lambda;
        let c0 = eig.c[0];
        let u = move |theta: f64| CVec::from_element(1, c0 * (l * theta).exp());
        let p = project_history(&k, l, &u, &tols).unwrap();
        for &t in &[-1.0, -0.6, -0.1, 0.0] {
            assert!((p.eval(t)[0] - u(t)[0]).norm() < 1e-10);
        }
    }

    #[test]
    fn projection_idempotent() {
        let k = cushing_kernel(-0.3, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -5.0, None, &tols).unwrap();
        let u = |theta: f64| CVec::from_element(1, C64::new(0.3 - theta + theta * theta, 0.0));
        let p1 = project_sigma(&k, &slice.roots, &u, &tols).unwrap();
        let pf = |theta: f64| p1.eval(theta);
        let p2 = project_sigma(&k, &slice.roots, &pf, &tols).unwrap();
        for &t in &[-1.0, -0.5, 0.0] {
            assert!((p1.eval(t)[0] - p2.eval(t)[0]).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_kernel_projection_is_evaluation_at_zero() {
        let k = DelayKernel::zero(2, 1.0);
        let u = |theta: f64| {
            CVec::from_iterator(2, [C64::new(1.0 + theta, 0.0), C64::new((theta).cos(), 0.0)])
        };
        let p = project_history_contour(&k, C64::new(0.0, 0.0), 0.5, &u).unwrap();
        for &t in &[-1.0, -0.3, 0.0] {
            let v = p.eval(t);
            assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
            assert!((v[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn bracket_expsum_matches_quadrature() {
        let k = cushing_kernel(-1.7, 1.0);
        let mu = C64::new(-0.4, 0.9);
        let a = CVec::from_element(1, C64::new(0.8, -0.3));
        let u = ExpSum::single(mu, a.clone());
        let z = C64::new(0.2, -0.5);
        let exact = projection_bracket_expsum(&k, z, &u);
        let uf = |theta: f64| u.eval(theta);
        let quad = projection_bracket(&k, z, &uf);
        assert!((exact[0] - quad[0]).norm() < 1e-10, "{} vs {}", exact[0], quad[0]);
    }

    #[test]
    fn conjugation_symmetry() {
        let k = cushing_kernel(-3.0, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -1.0, None, &tols).unwrap();
        let pair: Vec<_> = slice.roots.iter().map(|r| r.lambda).collect();
        let u = |theta: f64| CVec::from_element(1, C64::new(1.0 + theta, 0.0));
        let pa = project_history(&k, pair[0], &u, &tols).unwrap();
        let pb = project_history(&k, pair[1], &u, &tols).unwrap();
        for &t in &[-0.8, -0.2, 0.0] {
            assert!((pa.eval(t)[0] - pb.eval(t)[0].conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn series_mode_constants() {
        let k = cushing_kernel(-0.3, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&k, -5.0, None, &tols).unwrap().restrict(-1.0);
        let d = dichotomy_constants(&slice, DichotomyMode::Series, 1e-5, 1e-5).unwrap();
        assert_eq!(d.m, 1.0);
        assert_eq!(d.k1, 1.0);
        assert!((d.omega - (slice.alpha().unwrap() + 1e-6)).abs() < 1e-12);
    }
}
