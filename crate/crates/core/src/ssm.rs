//! Third-order spectral-submanifold parameterization and reduced dynamics.
//!
//! For a conjugate-closed set Σ of simple characteristic roots with basis
//! w_i(θ) = c_i e^{λ_i θ}, the graph-style parameterization K: X_Σ → X and
//! reduced field H satisfy DK(0) = ι_Σ, DH(0) = A_Σ, and the second-order
//! coefficient
//!   D²K(0)[w_i,w_j] = [e^{μθ} − Σ_{λ∈Σ} e^{λθ} ξ(λ)(I + G_λ(μ))] Δ(μ)^{-1} v,
//! with μ = λ_i + λ_j, v = proj₁ D²R(0)[w_i,w_j], and
//! G_λ(μ) = ∫₀ʰ dζ(s)(e^{-λs} − e^{-μs})/(μ − λ). The third-order coefficient
//! uses the same resolvent formula with three eigenvalues when D²R(0) = 0.
//! Reduced-field coefficients come from the extended projection acting on
//! (v, 0) elements, P̃_λ(v,0) = e^{λθ} ξ(λ) v.
//!
//! For a complex-conjugate pair the cubic normal form q̇ = λ₁q − β₂₁|q|²q is
//! obtained by solving the degree-3 homological equation
//! Dp(q,q̄)[λ₁q, λ₂q̄] − λ₁p(q,q̄) = N(q,q̄) + β₂₁q²q̄ monomial by monomial,
//! which also yields the manifold coefficients K̃₃₀, K̃₂₁ in normal-form
//! coordinates and the polar field ṙ = Re λ₁·r − Re β₂₁·r³,
//! φ̇ = Im λ₁ − Im β₂₁·r².

use crate::histfn::ExpSum;
use crate::linalg::solve;
use crate::model::DDESystem;
use crate::projection::{eigen_data, laplace_divided_difference, EigenData};
use crate::spectrum::SpectrumSlice;
use crate::{C64, CVec, Error, Result, Tolerances};

/// Third-order model of the manifold and its reduced dynamics over the
/// Σ-coordinates z ∈ ℂ^m (the coefficients of the history along the basis).
#[derive(Debug, Clone)]
pub struct SSMModel {
    pub system: DDESystem,
    /// The spectrum slice whose Σ-selection defines the manifold.
    pub sigma: SpectrumSlice,
    /// Eigen data per Σ-root, sorted by (Re, Im).
    pub basis: Vec<EigenData>,
    /// D²K(0)[w_i,w_j] for i ≤ j, as closed-form exponential sums with range
    /// in X_{Σ′} (zero Σ-component).
    pub k2: Vec<((usize, usize), ExpSum)>,
    /// D³K(0)[w_i,w_j,w_k] for i ≤ j ≤ k; populated only when D²R(0) = 0
    /// (the resolvent formula extends verbatim in that case).
    pub k3: Vec<((usize, usize, usize), ExpSum)>,
    /// Whether the k3 table is meaningful (D²R(0) = 0 or the jet is zero).
    pub k3_available: bool,
    /// Σ-coordinates of D²H(0)[w_i,w_j] for i ≤ j.
    pub h2: Vec<((usize, usize), CVec)>,
    /// Σ-coordinates of D³H(0)[w_i,w_j,w_k] for i ≤ j ≤ k.
    pub h3: Vec<((usize, usize, usize), CVec)>,
    /// True when the smoothness degree ℓ < 4: the coefficients are computed
    /// formally and need not be Taylor coefficients of an invariant manifold.
    pub formal: bool,
}

fn sym2(i: usize, j: usize) -> (usize, usize) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

fn sym3(i: usize, j: usize, k: usize) -> (usize, usize, usize) {
    let mut v = [i, j, k];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

impl SSMModel {
    pub fn m(&self) -> usize {
        self.basis.len()
    }

    /// Basis history w_i(θ) = c_i e^{λ_i θ}.
    pub fn w(&self, i: usize) -> ExpSum {
        ExpSum::single(self.basis[i].lambda, self.basis[i].c.clone())
    }

    pub fn k2_at(&self, i: usize, j: usize) -> Option<&ExpSum> {
        let key = sym2(i, j);
        self.k2.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn k3_at(&self, i: usize, j: usize, k: usize) -> Option<&ExpSum> {
        let key = sym3(i, j, k);
        self.k3.iter().find(|(k2, _)| *k2 == key).map(|(_, v)| v)
    }

    pub fn h2_at(&self, i: usize, j: usize) -> CVec {
        let key = sym2(i, j);
        self.h2
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| CVec::zeros(self.m()))
    }

    pub fn h3_at(&self, i: usize, j: usize, k: usize) -> CVec {
        let key = sym3(i, j, k);
        self.h3
            .iter()
            .find(|(k2, _)| *k2 == key)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(|| CVec::zeros(self.m()))
    }

    pub fn is_trivial(&self) -> bool {
        self.k2.is_empty() && self.k3.is_empty() && self.h2.is_empty() && self.h3.is_empty()
    }

    fn check_coords(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.m() {
            return Err(Error::WrongSigmaShape {
                expected: format!("{} Σ-coordinates", self.m()),
                got: format!("{}", z.len()),
            });
        }
        Ok(())
    }

    /// 3-jet of K at the coordinate: the history
    /// Σ z_i w_i + ½ Σ z_i z_j D²K[w_i,w_j] + ⅙ Σ z_i z_j z_k D³K[w_i,w_j,w_k].
    pub fn k_eval(&self, z: &[C64]) -> Result<ExpSum> {
        self.check_coords(z)?;
        let m = self.m();
        let mut out = ExpSum::zero(self.system.kernel.n);
        for i in 0..m {
            out.push(self.basis[i].lambda, self.basis[i].c.clone() * z[i]);
        }
        for i in 0..m {
            for j in 0..m {
                if let Some(k2) = self.k2_at(i, j) {
                    out = out.add(&k2.scaled(z[i] * z[j] * 0.5));
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if let Some(k3) = self.k3_at(i, j, k) {
                        out = out.add(&k3.scaled(z[i] * z[j] * z[k] / 6.0));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Alias matching the reduced-to-history direction of the pipeline.
    pub fn manifold_eval(&self, z: &[C64]) -> Result<ExpSum> {
        self.k_eval(z)
    }

    /// 3-jet of the reduced field: ż = H^≤(z) in Σ-coordinates.
    pub fn h_eval(&self, z: &[C64]) -> Result<CVec> {
        self.check_coords(z)?;
        let m = self.m();
        let mut out = CVec::from_iterator(m, (0..m).map(|i| self.basis[i].lambda * z[i]));
        for i in 0..m {
            for j in 0..m {
                let h2 = self.h2_at(i, j);
                for l in 0..m {
                    out[l] += h2[l] * z[i] * z[j] * 0.5;
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let h3 = self.h3_at(i, j, k);
                    for l in 0..m {
                        out[l] += h3[l] * z[i] * z[j] * z[k] / 6.0;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Indices (i₁, i₂) of the conjugate pair with Im λ_{i₁} > 0.
    fn pair_indices(&self) -> Result<(usize, usize)> {
        if self.m() != 2 {
            return Err(Error::WrongSigmaShape {
                expected: "a simple complex-conjugate pair Σ = {λ₁, λ̄₁}".into(),
                got: format!("{} eigenvalue(s)", self.m()),
            });
        }
        let l0 = self.basis[0].lambda;
        let l1 = self.basis[1].lambda;
        if (l0 - l1.conj()).norm() > 1e-8 * (1.0 + l0.norm()) || l0.im == 0.0 {
            return Err(Error::WrongSigmaShape {
                expected: "a simple complex-conjugate pair Σ = {λ₁, λ̄₁}".into(),
                got: format!("{{{l0}, {l1}}}"),
            });
        }
        if l0.im > 0.0 {
            Ok((0, 1))
        } else {
            Ok((1, 0))
        }
    }

    /// Cubic coefficients N_ab of ż = λ₁z + Σ_{a+b=3} N_ab z^a z̄^b along w₁,
    /// in the coordinates u = z w₁ + z̄ w₂ (ordered [N₃₀, N₂₁, N₁₂, N₀₃]).
    fn pair_cubic_coeffs(&self, i1: usize, i2: usize) -> [C64; 4] {
        let combos = [(3usize, 0usize), (2, 1), (1, 2), (0, 3)];
        let binom = [1.0, 3.0, 3.0, 1.0];
        let mut out = [C64::new(0.0, 0.0); 4];
        for (idx, &(a, _b)) in combos.iter().enumerate() {
            let mut ids = [i2; 3];
            for s in ids.iter_mut().take(a) {
                *s = i1;
            }
            let y = self.h3_at(ids[0], ids[1], ids[2])[i1];
            out[idx] = y * binom[3 - a] / 6.0;
        }
        out
    }
}

/// Σ-coordinates of the extended projection of (v, 0):
/// P̃_{λ_l}(v,0) = e^{λ_l θ} ξ(λ_l) v = y_l w_l.
fn ptilde_coords(basis: &[EigenData], v: &CVec) -> CVec {
    CVec::from_iterator(
        basis.len(),
        basis.iter().map(|e| {
            let u = &e.xi * v;
            let mut k = 0;
            let mut best = 0.0;
            for i in 0..e.c.len() {
                if e.c[i].norm() > best {
                    best = e.c[i].norm();
                    k = i;
                }
            }
            u[k] / e.c[k]
        }),
    )
}

/// The resolvent-formula coefficient
/// [e^{μθ} − Σ_{λ∈Σ} e^{λθ} ξ(λ)(I + G_λ(μ))] Δ(μ)^{-1} v,
/// guarded against μ landing on a known characteristic root.
fn resolvent_coeff(
    system: &DDESystem,
    basis: &[EigenData],
    known_roots: &[C64],
    mu: C64,
    v: &CVec,
    min_dist: f64,
) -> Result<ExpSum> {
    for &r in known_roots {
        let d = (mu - r).norm();
        if d < min_dist {
            return Err(Error::ResolventPole(mu, d));
        }
    }
    let kernel = &system.kernel;
    let x = solve(&kernel.delta(mu), v).ok_or(Error::ResolventPole(mu, 0.0))?;
    let mut out = ExpSum::zero(kernel.n);
    out.push(mu, x.clone());
    for eig in basis {
        let g = laplace_divided_difference(kernel, eig.lambda, mu);
        let gx = &g * &x;
        let w = &x + &gx;
        out.push(eig.lambda, (&eig.xi * &w).map(|c| -c));
    }
    Ok(out)
}

/// Compute the K and H coefficients through order three over the Σ-selection
/// of the slice. All Σ-roots must be simple. With ℓ < 4 the model is marked
/// formal: the right-hand sides are still well defined, but need not be
/// Taylor coefficients of an invariant manifold.
pub fn expansion_coeffs(
    system: &DDESystem,
    sigma: &SpectrumSlice,
    ell: usize,
    tols: &Tolerances,
) -> Result<SSMModel> {
    let roots = sigma.sigma();
    if roots.is_empty() {
        return Err(Error::WrongSigmaShape {
            expected: "a nonempty Σ".into(),
            got: "no roots above the Σ-cut".into(),
        });
    }
    for r in &roots {
        if r.multiplicity != 1 {
            return Err(Error::MultipleRoot(r.lambda, 0.0));
        }
    }
    let basis = roots
        .iter()
        .map(|r| eigen_data(&system.kernel, r.lambda, tols))
        .collect::<Result<Vec<_>>>()?;
    let m = basis.len();
    let lags = &system.jet.lags;
    let wl: Vec<CVec> = basis
        .iter()
        .map(|e| ExpSum::single(e.lambda, e.c.clone()).eval_at_lags(lags))
        .collect();
    let quad_zero = system.jet.quadratic.as_ref().map_or(true, |q| q.is_zero());
    let cubic_zero = system.jet.cubic.as_ref().map_or(true, |c| c.is_zero());
    let known_roots: Vec<C64> = sigma.roots.iter().map(|r| r.lambda).collect();

    let mut k2 = Vec::new();
    let mut h2 = Vec::new();
    if !quad_zero {
        for i in 0..m {
            for j in i..m {
                let v2 = system.jet.d2(&wl[i], &wl[j]);
                if v2.iter().all(|c| c.norm() == 0.0) {
                    continue;
                }
                h2.push(((i, j), ptilde_coords(&basis, &v2)));
                let mu = basis[i].lambda + basis[j].lambda;
                k2.push((
                    (i, j),
                    resolvent_coeff(system, &basis, &known_roots, mu, &v2, tols.tol_res)?,
                ));
            }
        }
    }

    let k3_available = quad_zero;
    let mut k3 = Vec::new();
    let mut h3 = Vec::new();
    if !(quad_zero && cubic_zero) {
        for i in 0..m {
            for j in i..m {
                for k in j..m {
                    let mut v3 = system.jet.d3(&wl[i], &wl[j], &wl[k]);
                    if !quad_zero {
                        // Chain rule of R∘K at order three: the mixed term
                        // Σ_{splits} D²R(0)[D²K(0)[w_a,w_b], w_c].
                        for (a, b, c) in [(i, j, k), (i, k, j), (j, k, i)] {
                            if let Some(k2ab) = k2
                                .iter()
                                .find(|(key, _)| *key == sym2(a, b))
                                .map(|(_, v)| v)
                            {
                                let k2lag = k2ab.eval_at_lags(lags);
                                v3 += system.jet.d2(&k2lag, &wl[c]);
                            }
                        }
                    }
                    if v3.iter().all(|c| c.norm() == 0.0) {
                        continue;
                    }
                    h3.push(((i, j, k), ptilde_coords(&basis, &v3)));
                    if k3_available {
                        let mu = basis[i].lambda + basis[j].lambda + basis[k].lambda;
                        let min_dist = tols.tol_res.max(1e-6);
                        k3.push((
                            (i, j, k),
                            resolvent_coeff(system, &basis, &known_roots, mu, &v3, min_dist)?,
                        ));
                    }
                }
            }
        }
    }

    Ok(SSMModel {
        system: system.clone(),
        sigma: sigma.clone(),
        basis,
        k2,
        k3,
        k3_available,
        h2,
        h3,
        formal: ell < 4,
    })
}

/// Scalar cubic reduced dynamics ẏ = λ₁y + c₃y³ for a single simple real
/// eigenvalue, in the chart Θ(y) = y w₁.
pub fn reduce_real(model: &SSMModel) -> Result<(C64, C64)> {
    if model.m() != 1 || model.basis[0].lambda.im != 0.0 {
        return Err(Error::WrongSigmaShape {
            expected: "a single simple real eigenvalue".into(),
            got: format!(
                "{} eigenvalue(s), first = {}",
                model.m(),
                model.basis[0].lambda
            ),
        });
    }
    let c3 = model.h3_at(0, 0, 0)[0] / 6.0;
    Ok((model.basis[0].lambda, c3))
}

/// Planar cubic field in the real chart u = Θ(x,y), Θ(x,y) = z w₁ + z̄ w₂
/// with z = x + iy: linear rotation-dilation plus a homogeneous cubic whose
/// monomial coefficients are listed by the power of y.
#[derive(Debug, Clone)]
pub struct PlanarField {
    pub lambda1: C64,
    /// [[Re λ₁, −Im λ₁], [Im λ₁, Re λ₁]].
    pub linear: [[f64; 2]; 2],
    /// ẋ cubic coefficients of x³, x²y, xy², y³.
    pub cubic_x: [f64; 4],
    /// ẏ cubic coefficients of x³, x²y, xy², y³.
    pub cubic_y: [f64; 4],
}

impl PlanarField {
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let mons = [x * x * x, x * x * y, x * y * y, y * y * y];
        let mut dx = self.linear[0][0] * x + self.linear[0][1] * y;
        let mut dy = self.linear[1][0] * x + self.linear[1][1] * y;
        for q in 0..4 {
            dx += self.cubic_x[q] * mons[q];
            dy += self.cubic_y[q] * mons[q];
        }
        (dx, dy)
    }
}

fn binom(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Push the complex cubic ż = Σ N_ab z^a z̄^b to the real chart z = x + iy.
pub fn reduce_planar(model: &SSMModel) -> Result<PlanarField> {
    let (i1, i2) = model.pair_indices()?;
    let l1 = model.basis[i1].lambda;
    let nab = model.pair_cubic_coeffs(i1, i2);
    let combos = [(3usize, 0usize), (2, 1), (1, 2), (0, 3)];
    let mut cubic_x = [0.0; 4];
    let mut cubic_y = [0.0; 4];
    let i = C64::new(0.0, 1.0);
    for (idx, &(a, b)) in combos.iter().enumerate() {
        // (x+iy)^a (x−iy)^b expanded over monomials x^{3−q} y^q.
        let mut poly = [C64::new(0.0, 0.0); 4];
        for s in 0..=a {
            for t in 0..=b {
                let q = s + t;
                poly[q] += binom(a, s) * binom(b, t) * i.powu(s as u32) * (-i).powu(t as u32);
            }
        }
        for q in 0..4 {
            let c = nab[idx] * poly[q];
            cubic_x[q] += c.re;
            cubic_y[q] += c.im;
        }
    }
    Ok(PlanarField {
        lambda1: l1,
        linear: [[l1.re, -l1.im], [l1.im, l1.re]],
        cubic_x,
        cubic_y,
    })
}

/// Data of the cubic normal form q̇ = λ₁q − β₂₁|q|²q together with the
/// manifold coefficients in normal-form coordinates.
#[derive(Debug, Clone)]
pub struct NormalFormData {
    pub lambda1: C64,
    pub beta21: C64,
    /// p(q,q̄) = p₃₀q³ + p₁₂q q̄² + p₀₃q̄³ (the resonant q²q̄ slot is absorbed
    /// into β₂₁ and left out of the transformation).
    pub p30: C64,
    pub p12: C64,
    pub p03: C64,
    /// ṙ = polar_radial.0·r + polar_radial.1·r³.
    pub polar_radial: (f64, f64),
    /// φ̇ = polar_angular.0 + polar_angular.1·r².
    pub polar_angular: (f64, f64),
    /// Cubic manifold coefficients: K̃(r,φ) = r(w₁e^{iφ} + w₂e^{−iφ})
    /// + r³(K̃₃₀e^{3iφ} + K̃₂₁e^{iφ} + conj. terms).
    pub k30: ExpSum,
    pub k21: ExpSum,
    pub w1: ExpSum,
    pub w2: ExpSum,
}

/// Normal-form reduction for a conjugate-pair Σ: solves the degree-3
/// homological equation by monomial matching, absorbing the resonant q²q̄
/// monomial into β₂₁, and composes the parameterization with the coordinate
/// change to obtain K̃₃₀ and K̃₂₁.
pub fn normal_form(model: &SSMModel, tols: &Tolerances) -> Result<NormalFormData> {
    let (i1, i2) = model.pair_indices()?;
    let l1 = model.basis[i1].lambda;
    let l2 = model.basis[i2].lambda;
    if !model.k3_available {
        return Err(Error::NotComputed(
            "third-order manifold coefficients (quadratic jet present)".into(),
        ));
    }
    let nab = model.pair_cubic_coeffs(i1, i2);
    let beta21 = -nab[1];
    let scale = 1.0 + l1.norm();
    let divisors = [2.0 * l1, 2.0 * l2, 3.0 * l2 - l1];
    for d in divisors {
        if d.norm() < tols.tol_res * scale {
            return Err(Error::HomologicalResonance(d));
        }
    }
    let p30 = nab[0] / divisors[0];
    let p12 = nab[2] / divisors[1];
    let p03 = nab[3] / divisors[2];

    let n = model.system.kernel.n;
    let zero = ExpSum::zero(n);
    let k30_raw = model.k3_at(i1, i1, i1).unwrap_or(&zero);
    let k21_raw = model.k3_at(i1, i1, i2).unwrap_or(&zero);
    let w1 = model.w(i1);
    let w2 = model.w(i2);
    // q³ coefficient of K^≤(q + p, q̄ + p̃): ⅙K₃₀ from the cubic term plus the
    // linear term fed by p₃₀ (through z) and conj(p₀₃) (through z̄).
    let k30 = k30_raw
        .scaled(C64::new(1.0 / 6.0, 0.0))
        .add(&w1.scaled(p30))
        .add(&w2.scaled(p03.conj()));
    // q²q̄ coefficient: ½K₂₁ plus the linear z̄-term fed by conj(p₁₂).
    let k21 = k21_raw
        .scaled(C64::new(0.5, 0.0))
        .add(&w2.scaled(p12.conj()));

    Ok(NormalFormData {
        lambda1: l1,
        beta21,
        p30,
        p12,
        p03,
        polar_radial: (l1.re, -beta21.re),
        polar_angular: (l1.im, -beta21.im),
        k30,
        k21,
        w1,
        w2,
    })
}

/// Residual of the homological equation on a given monomial set: rebuilds
/// Dp[λ₁q, λ₂q̄] − λ₁p − N − β₂₁q²q̄ coefficientwise (should vanish).
pub fn homological_residual(model: &SSMModel, nf: &NormalFormData) -> Result<f64> {
    let (i1, i2) = model.pair_indices()?;
    let l1 = nf.lambda1;
    let l2 = l1.conj();
    let nab = model.pair_cubic_coeffs(i1, i2);
    // Monomial q^a q̄^b: Dp[λ₁q,λ₂q̄] − λ₁p has coefficient (aλ₁+bλ₂−λ₁)p_ab.
    let r30 = (3.0 * l1 - l1) * nf.p30 - nab[0];
    let r21 = -(nab[1] + nf.beta21);
    let r12 = (l1 + 2.0 * l2 - l1) * nf.p12 - nab[2];
    let r03 = (3.0 * l2 - l1) * nf.p03 - nab[3];
    let scale = nab.iter().map(|c| c.norm()).fold(1e-300, f64::max);
    Ok([r30, r21, r12, r03]
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        / scale)
}

#[derive(Debug, Clone, Copy)]
pub struct LimitCycle {
    /// Amplitude r̂ = √(Re λ₁ / Re β₂₁) of the predicted cycle.
    pub r_hat: f64,
    /// Angular frequency ω = Im λ₁ − Im β₂₁ · r̂².
    pub omega: f64,
    /// Stable (supercritical branch) when Re λ₁ > 0.
    pub stable: bool,
}

/// Predict the limit cycle of the polar field; `None` when the radial cubic
/// admits no positive-amplitude rest point.
pub fn predict_limit_cycle(nf: &NormalFormData) -> Result<Option<LimitCycle>> {
    let a = nf.polar_radial.0;
    let b = -nf.polar_radial.1; // ṙ = a·r − b·r³
    if b.abs() < 1e-12 * (1.0 + nf.beta21.norm()) {
        return Err(Error::DegenerateHopf(b));
    }
    let rad = a / b;
    if rad < 0.0 {
        return Ok(None);
    }
    let r_hat = rad.sqrt();
    let omega = nf.polar_angular.0 + nf.polar_angular.1 * r_hat * r_hat;
    Ok(Some(LimitCycle { r_hat, omega, stable: a > 0.0 }))
}

/// Third-order history of the normal-form chart at (r, φ):
/// K̃(r,φ) = r(w₁e^{iφ} + w₂e^{−iφ}) + r³(K̃₃₀e^{3iφ} + K̃₂₁e^{iφ} + c.c.).
pub fn nf_manifold_eval(nf: &NormalFormData, r: f64, phi: f64) -> ExpSum {
    let e1 = C64::new(0.0, phi).exp();
    let e3 = C64::new(0.0, 3.0 * phi).exp();
    let r3 = r * r * r;
    nf.w1
        .scaled(e1 * r)
        .add(&nf.w2.scaled(e1.conj() * r))
        .add(&nf.k30.scaled(e3 * r3))
        .add(&nf.k21.scaled(e1 * r3))
        .add(&nf.k21.conj().scaled(e1.conj() * r3))
        .add(&nf.k30.conj().scaled(e3.conj() * r3))
}

/// Physical-space estimate of the periodic orbit, x_per(t) ≈ K̃(r̂, ωt + φ₀)
/// evaluated at θ = 0.
pub fn periodic_orbit_sample(nf: &NormalFormData, lc: &LimitCycle, t: f64) -> CVec {
    nf_manifold_eval(nf, lc.r_hat, lc.omega * t).eval(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Atom, DDESystem, DelayKernel, Density, NonlinearityJet, SymTensor3,
    };
    use crate::projection::{projection_bracket_expsum, xi_residue};
    use crate::spectrum::roots_right_of;
    use nalgebra::DMatrix;

    fn cushing_system(b: f64, a: f64) -> DDESystem {
        let kernel = DelayKernel::new(
            1,
            1.0,
            vec![],
            vec![Density { a: 0.0, b: 1.0, coeffs: vec![DMatrix::from_element(1, 1, b)] }],
        )
        .unwrap();
        // R(u) = a(u(0) − sin u(0)): cubic Taylor term a·u(0)³/6.
        let jet = NonlinearityJet {
            n: 1,
            lags: vec![0.0],
            quadratic: None,
            cubic: Some(SymTensor3::from_dense(1, 1, vec![a]).unwrap()),
            lip_global: Some(2.0 * a),
            lip_ball_coeffs: None,
        };
        DDESystem::new(kernel, jet, "cushing").unwrap()
    }

    fn delayed_cubic_system(h: f64) -> DDESystem {
        // ẋ = −x(t−h) − x(t)³.
        let kernel = DelayKernel::new(
            1,
            h,
            vec![Atom { tau: h, weight: DMatrix::from_element(1, 1, -1.0) }],
            vec![],
        )
        .unwrap();
        let jet = NonlinearityJet {
            n: 1,
            lags: vec![0.0],
            quadratic: None,
            cubic: Some(SymTensor3::from_dense(1, 1, vec![-6.0]).unwrap()),
            lip_global: None,
            lip_ball_coeffs: Some(vec![0.0, 3.0]),
        };
        DDESystem::new(kernel, jet, "delayed-cubic").unwrap()
    }

    #[test]
    fn cushing_real_reduced_field() {
        let sys = cushing_system(-0.3, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -5.0, None, &tols)
            .unwrap()
            .restrict(-1.0);
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        assert!(model.k2.is_empty() && model.h2.is_empty());
        assert!(!model.formal);
        let (l1, c3) = reduce_real(&model).unwrap();
        let xi = xi_residue(&sys.kernel, l1, &tols).unwrap()[(0, 0)];
        // ẏ = λ₁y + (1/6)ξ(λ₁)·a·y³ with a = 1.
        assert!((c3 - xi / 6.0).norm() < 1e-10, "c3 = {c3}, ξ/6 = {}", xi / 6.0);
    }

    #[test]
    fn delayed_cubic_c3_and_k3_closed_form() {
        let h = 0.1;
        let sys = delayed_cubic_system(h);
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -60.0, None, &tols)
            .unwrap()
            .restrict(-5.0);
        assert_eq!(slice.sigma().len(), 1, "{:?}", slice.roots);
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        let (l1, c3) = reduce_real(&model).unwrap();
        let xi = C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) + l1 * h);
        assert!((c3 + xi).norm() < 1e-10, "c3 = {c3}, −ξ = {}", -xi);
        // D³K[w,w,w] = −6[e^{3λ₁θ} − e^{λ₁θ}ξ·Δ(3λ₁)/(2λ₁)]Δ(3λ₁)^{-1}.
        let k3 = model.k3_at(0, 0, 0).unwrap();
        let d3l = crate::linalg::det(&sys.kernel.delta(3.0 * l1));
        for &th in &[-h, -0.04, 0.0] {
            let want = -6.0
                * ((3.0 * l1 * th).exp() - (l1 * th).exp() * xi * d3l / (2.0 * l1))
                / d3l;
            assert!((k3.eval(th)[0] - want).norm() < 1e-9, "θ={th}");
        }
        // Graph style: the coefficient has no Σ-component.
        let b = projection_bracket_expsum(&sys.kernel, l1, k3);
        let p = xi_residue(&sys.kernel, l1, &tols).unwrap()[(0, 0)] * b[0];
        assert!(p.norm() < 1e-9, "Σ-component {p}");
    }

    #[test]
    fn trivial_jet_gives_inclusion() {
        let kernel = DelayKernel::new(
            1,
            1.0,
            vec![],
            vec![Density { a: 0.0, b: 1.0, coeffs: vec![DMatrix::from_element(1, 1, -0.3)] }],
        )
        .unwrap();
        let sys = DDESystem::new(kernel, NonlinearityJet::zero(1), "linear").unwrap();
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -1.0, None, &tols).unwrap();
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        assert!(model.is_trivial());
        let z = [C64::new(0.4, 0.0)];
        let k = model.k_eval(&z).unwrap();
        let w = model.w(0);
        for &th in &[-1.0, -0.3, 0.0] {
            assert!((k.eval(th)[0] - w.eval(th)[0] * z[0]).norm() < 1e-14);
        }
        let hdot = model.h_eval(&z).unwrap();
        assert!((hdot[0] - model.basis[0].lambda * z[0]).norm() < 1e-14);
    }

    #[test]
    fn hopf_normal_form_coefficients() {
        let h = std::f64::consts::FRAC_PI_2 + 0.05;
        let sys = delayed_cubic_system(h);
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -0.3, None, &tols).unwrap();
        assert_eq!(slice.sigma().len(), 2, "{:?}", slice.roots);
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        let nf = normal_form(&model, &tols).unwrap();
        let l1 = nf.lambda1;
        let l2 = l1.conj();
        let xi = xi_residue(&sys.kernel, l1, &tols).unwrap()[(0, 0)];
        assert!((nf.beta21 - 3.0 * xi).norm() < 1e-10, "β₂₁ = {}", nf.beta21);
        assert!((nf.p30 + xi / (2.0 * l1)).norm() < 1e-10);
        assert!((nf.p12 + 3.0 * xi / (2.0 * l2)).norm() < 1e-10);
        assert!((nf.p03 + xi / (3.0 * l2 - l1)).norm() < 1e-10);
        assert!(homological_residual(&model, &nf).unwrap() < 1e-12);
        // K̃₃₀ = −Δ(3λ₁)^{-1}e^{3λ₁θ}; K̃₂₁ = −3[Δ(2λ₁+λ₂)^{-1}e^{(2λ₁+λ₂)θ}
        //   − ξ(λ₁)/(λ₁+λ₂)e^{λ₁θ}].
        let d3 = crate::linalg::det(&sys.kernel.delta(3.0 * l1));
        let dm = crate::linalg::det(&sys.kernel.delta(2.0 * l1 + l2));
        for &th in &[-h, -0.6, 0.0] {
            let want30 = -(3.0 * l1 * th).exp() / d3;
            assert!((nf.k30.eval(th)[0] - want30).norm() < 1e-9, "K̃₃₀ at {th}");
            let want21 = -3.0
                * (((2.0 * l1 + l2) * th).exp() / dm
                    - xi / (l1 + l2) * (l1 * th).exp());
            assert!((nf.k21.eval(th)[0] - want21).norm() < 1e-9, "K̃₂₁ at {th}");
        }
    }

    #[test]
    fn limit_cycle_prediction_across_hopf() {
        let tols = Tolerances::default();
        // Above the critical delay: stable cycle of positive amplitude.
        let sys = delayed_cubic_system(std::f64::consts::FRAC_PI_2 + 0.05);
        let slice = roots_right_of(&sys.kernel, -0.3, None, &tols).unwrap();
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        let nf = normal_form(&model, &tols).unwrap();
        let lc = predict_limit_cycle(&nf).unwrap().unwrap();
        assert!(lc.stable);
        assert!((lc.r_hat - 0.129).abs() < 5e-3, "r̂ = {}", lc.r_hat);
        assert!((lc.omega - 1.0).abs() < 0.2, "ω = {}", lc.omega);
        // Below: no positive-amplitude rest point.
        let sys2 = delayed_cubic_system(std::f64::consts::FRAC_PI_2 - 0.05);
        let slice2 = roots_right_of(&sys2.kernel, -0.3, None, &tols).unwrap();
        let model2 = expansion_coeffs(&sys2, &slice2, 10, &tols).unwrap();
        let nf2 = normal_form(&model2, &tols).unwrap();
        assert!(predict_limit_cycle(&nf2).unwrap().is_none());
    }

    #[test]
    fn planar_field_matches_complex_chart() {
        let sys = cushing_system(-3.0, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -4.0, None, &tols)
            .unwrap()
            .restrict(-1.0);
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        let pf = reduce_planar(&model).unwrap();
        let l1 = pf.lambda1;
        let xi = xi_residue(&sys.kernel, l1, &tols).unwrap()[(0, 0)];
        // (ẋ,ẏ) = rotation-dilation + (4/3)x³·a·(Re ξ, Im ξ) with a = 1.
        assert!((pf.cubic_x[0] - 4.0 / 3.0 * xi.re).abs() < 1e-10, "{:?}", pf.cubic_x);
        assert!((pf.cubic_y[0] - 4.0 / 3.0 * xi.im).abs() < 1e-10);
        for q in 1..4 {
            assert!(pf.cubic_x[q].abs() < 1e-10 && pf.cubic_y[q].abs() < 1e-10);
        }
        // Chart-change oracle: ż from h_eval at z = x+iy equals ẋ + iẏ.
        let (x, y) = (0.07, -0.11);
        let z = C64::new(x, y);
        let (i1, _) = model.pair_indices().unwrap();
        let mut coords = vec![C64::new(0.0, 0.0); 2];
        coords[i1] = z;
        coords[1 - i1] = z.conj();
        let zdot = model.h_eval(&coords).unwrap()[i1];
        let (dx, dy) = pf.eval(x, y);
        assert!((zdot - C64::new(dx, dy)).norm() < 1e-12, "{zdot} vs ({dx},{dy})");
    }

    #[test]
    fn realness_of_manifold_histories() {
        let sys = cushing_system(-3.0, 1.0);
        let tols = Tolerances::default();
        let slice = roots_right_of(&sys.kernel, -4.0, None, &tols)
            .unwrap()
            .restrict(-1.0);
        let model = expansion_coeffs(&sys, &slice, 10, &tols).unwrap();
        let (i1, _) = model.pair_indices().unwrap();
        let z = C64::new(0.05, 0.02);
        let mut coords = vec![C64::new(0.0, 0.0); 2];
        coords[i1] = z;
        coords[1 - i1] = z.conj();
        let k = model.k_eval(&coords).unwrap();
        assert!(k.imag_magnitude(sys.kernel.h, 101) < 1e-10);
    }
}
