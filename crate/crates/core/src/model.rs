//! System representation: the linear delay kernel ζ (atoms + piecewise-
//! polynomial densities), the nonlinearity 3-jet, and the scalar constants
//! (total variation, Q) that the certification routines consume.
//!
//! The linear part acts on a history u ∈ C([-h,0];ℝⁿ) as
//! Lu = Σ_k B_k u(-τ_k) + Σ_d ∫_a^b C(θ) u(-θ) dθ, so its Laplace transform
//! ∫₀ʰ e^{-zt} dζ(t) = Σ_k B_k e^{-zτ_k} + Σ_d ∫_a^b C(θ) e^{-zθ} dθ
//! has exponential-polynomial entries in closed form.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::linalg::exp_poly_integral;
use crate::{C64, CMat, CVec, Error, Result};

/// Point delay: B·u(-τ).
#[derive(Debug, Clone)]
pub struct Atom {
    pub tau: f64,
    pub weight: DMatrix<f64>,
}

/// Distributed delay with a matrix-polynomial density on [a, b] ⊆ [0, h]:
/// ∫_a^b C(θ) u(-θ) dθ with C(θ) = Σ_p coeffs[p]·θᵖ.
#[derive(Debug, Clone)]
pub struct Density {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<DMatrix<f64>>,
}

impl Density {
    pub fn eval(&self, theta: f64) -> DMatrix<f64> {
        let n = self.coeffs[0].nrows();
        let mut m = DMatrix::zeros(n, self.coeffs[0].ncols());
        let mut p = 1.0;
        for c in &self.coeffs {
            m += c * p;
            p *= theta;
        }
        m
    }

    fn entry_poly(&self, i: usize, j: usize) -> Vec<f64> {
        self.coeffs.iter().map(|c| c[(i, j)]).collect()
    }
}

/// The NBV kernel of the linearized equation.
#[derive(Debug, Clone)]
pub struct DelayKernel {
    pub n: usize,
    pub h: f64,
    pub atoms: Vec<Atom>,
    pub densities: Vec<Density>,
}

impl DelayKernel {
    pub fn new(n: usize, h: f64, atoms: Vec<Atom>, densities: Vec<Density>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSystem("state dimension must be positive".into()));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidSystem(format!("maximal delay h = {h} must be positive")));
        }
        for at in &atoms {
            if !(0.0..=h).contains(&at.tau) {
                return Err(Error::InvalidSystem(format!(
                    "atom delay {} outside [0, {h}]",
                    at.tau
                )));
            }
            if at.weight.nrows() != n || at.weight.ncols() != n {
                return Err(Error::InvalidSystem("atom matrix dimension mismatch".into()));
            }
        }
        for d in &densities {
            if !(0.0 <= d.a && d.a < d.b && d.b <= h) {
                return Err(Error::InvalidSystem(format!(
                    "density interval [{}, {}] invalid within [0, {h}]",
                    d.a, d.b
                )));
            }
            if d.coeffs.is_empty() {
                return Err(Error::InvalidSystem("density without coefficients".into()));
            }
            for c in &d.coeffs {
                if c.nrows() != n || c.ncols() != n {
                    return Err(Error::InvalidSystem("density matrix dimension mismatch".into()));
                }
            }
        }
        Ok(DelayKernel { n, h, atoms, densities })
    }

    pub fn zero(n: usize, h: f64) -> Self {
        DelayKernel { n, h, atoms: Vec::new(), densities: Vec::new() }
    }

    /// L(z) = ∫₀ʰ e^{-zt} dζ(t), closed form.
    pub fn laplace(&self, z: C64) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for at in &self.atoms {
            let e = (-z * at.tau).exp();
            for i in 0..self.n {
                for j in 0..self.n {
                    m[(i, j)] += e * at.weight[(i, j)];
                }
            }
        }
        for d in &self.densities {
            for (p, c) in d.coeffs.iter().enumerate() {
                let ip = exp_poly_integral(z, d.a, d.b, p);
                for i in 0..self.n {
                    for j in 0..self.n {
                        m[(i, j)] += ip * c[(i, j)];
                    }
                }
            }
        }
        m
    }

    /// d/dz L(z) = -∫₀ʰ t e^{-zt} dζ(t), closed form.
    pub fn laplace_dz(&self, z: C64) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for at in &self.atoms {
            let e = -(-z * at.tau).exp() * at.tau;
            for i in 0..self.n {
                for j in 0..self.n {
                    m[(i, j)] += e * at.weight[(i, j)];
                }
            }
        }
        for d in &self.densities {
            for (p, c) in d.coeffs.iter().enumerate() {
                let ip = -exp_poly_integral(z, d.a, d.b, p + 1);
                for i in 0..self.n {
                    for j in 0..self.n {
                        m[(i, j)] += ip * c[(i, j)];
                    }
                }
            }
        }
        m
    }

    /// Characteristic matrix Δ(z) = z·I − L(z).
    pub fn delta(&self, z: C64) -> CMat {
        let mut m = -self.laplace(z);
        for i in 0..self.n {
            m[(i, i)] += z;
        }
        m
    }

    /// Δ′(z) = I − L′(z).
    pub fn delta_dz(&self, z: C64) -> CMat {
        let mut m = -self.laplace_dz(z);
        for i in 0..self.n {
            m[(i, i)] += C64::new(1.0, 0.0);
        }
        m
    }

    /// Total variation of the (i, j) scalar entry of ζ:
    /// Σ_k |B_k[i,j]| + Σ_d ∫ |C_ij(θ)| dθ.
    pub fn entry_tv(&self, i: usize, j: usize) -> f64 {
        let mut tv: f64 = self.atoms.iter().map(|a| a.weight[(i, j)].abs()).sum();
        for d in &self.densities {
            tv += poly_abs_integral(&d.entry_poly(i, j), d.a, d.b);
        }
        tv
    }

    /// TV(ζ) with the operator ∞-norm as the matrix reduction (matching the
    /// sup-norm on histories): Σ_k ‖B_k‖_∞ + Σ_d ∫ ‖C(θ)‖_∞ dθ.
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for at in &self.atoms {
            tv += inf_norm(&at.weight);
        }
        for d in &self.densities {
            // ‖C(θ)‖_∞ is piecewise smooth; fine panels keep this accurate.
            let panels = 128;
            let dx = (d.b - d.a) / panels as f64;
            for k in 0..panels {
                let x0 = d.a + k as f64 * dx;
                tv += crate::quad::GL16.integrate(x0, x0 + dx, |t| inf_norm(&d.eval(t)));
            }
        }
        tv
    }

    /// Q constant of the small-delay certificate, built from the
    /// cofactor-expansion factorization of det Δ: the z^{n-j} coefficient is
    /// a sum over principal j×j minors, and the TV of each summand is bounded
    /// by the permanent of the per-entry TV matrix restricted to the minor.
    /// Q = Σ_j (j/n) t_j^{n/j} (2(n−j))^{n/j − 1}, with 0⁰ = 1.
    pub fn q_constant(&self) -> f64 {
        let n = self.n;
        let tvm = DMatrix::from_fn(n, n, |i, j| self.entry_tv(i, j));
        let mut q = 0.0;
        for jj in 1..=n {
            let mut t_j = 0.0;
            for subset in subsets(n, jj) {
                t_j += permanent(&tvm, &subset);
            }
            let e = n as f64 / jj as f64;
            let base = 2.0 * (n - jj) as f64;
            let pow_b = if (e - 1.0).abs() < 1e-15 && base == 0.0 {
                1.0
            } else {
                base.powf(e - 1.0)
            };
            q += jj as f64 / n as f64 * t_j.powf(e) * pow_b;
        }
        q
    }

    /// Smallest positive atom delay, if any (used for step-size selection).
    pub fn min_atom_delay(&self) -> Option<f64> {
        self.atoms
            .iter()
            .map(|a| a.tau)
            .filter(|&t| t > 0.0)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
}

/// All size-k subsets of {0, …, n-1}.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Permanent of the principal submatrix indexed by `idx` (entries ≥ 0).
fn permanent(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    let k = idx.len();
    let mut used = vec![false; k];
    fn rec(m: &DMatrix<f64>, idx: &[usize], row: usize, used: &mut [bool]) -> f64 {
        if row == idx.len() {
            return 1.0;
        }
        let mut acc = 0.0;
        for col in 0..idx.len() {
            if !used[col] {
                used[col] = true;
                acc += m[(idx[row], idx[col])] * rec(m, idx, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    rec(m, idx, 0, &mut used)
}

/// ∫_a^b |p(θ)| dθ for a scalar polynomial, exact up to sign-change location:
/// brackets sign changes on a fine grid, bisects them, and integrates the
/// polynomial exactly on each signed piece.
pub fn poly_abs_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
    let eval = |x: f64| {
        let mut v = 0.0;
        let mut p = 1.0;
        for c in coeffs {
            v += c * p;
            p *= x;
        }
        v
    };
    let exact = |lo: f64, hi: f64| {
        let mut v = 0.0;
        for (p, c) in coeffs.iter().enumerate() {
            let q = (p + 1) as f64;
            v += c * (hi.powf(q) - lo.powf(q)) / q;
        }
        v
    };
    let grid = 256;
    let mut cuts = vec![a];
    let mut x0 = a;
    let mut f0 = eval(a);
    for k in 1..=grid {
        let x1 = a + (b - a) * k as f64 / grid as f64;
        let f1 = eval(x1);
        if f1 == 0.0 {
            if k < grid {
                cuts.push(x1);
            }
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (x0, x1);
            let mut flo = f0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let fm = eval(mid);
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += exact(w[0], w[1]).abs();
    }
    total
}

/// Symmetric bilinear map ℝ^d × ℝ^d → ℝ^{n_out}, dense storage
/// data[i·d² + j·d + k].
#[derive(Debug, Clone)]
pub struct SymTensor2 {
    pub n_out: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SymTensor2 {
    pub fn from_dense(n_out: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_out * dim * dim {
            return Err(Error::InvalidSystem(format!(
                "quadratic tensor needs {} entries, got {}",
                n_out * dim * dim,
                data.len()
            )));
        }
        let mut t = SymTensor2 { n_out, dim, data };
        t.symmetrize();
        Ok(t)
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..self.n_out {
            for j in 0..d {
                for k in (j + 1)..d {
                    let a = self.data[i * d * d + j * d + k];
                    let b = self.data[i * d * d + k * d + j];
                    let m = 0.5 * (a + b);
                    self.data[i * d * d + j * d + k] = m;
                    self.data[i * d * d + k * d + j] = m;
                }
            }
        }
    }

    pub fn apply(&self, u: &CVec, v: &CVec) -> CVec {
        let d = self.dim;
        let mut out = CVec::zeros(self.n_out);
        for i in 0..self.n_out {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                if u[j].norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..d {
                    let c = self.data[i * d * d + j * d + k];
                    if c != 0.0 {
                        acc += u[j] * v[k] * c;
                    }
                }
            }
            out[i] = acc;
        }
        out
    }

    /// max_i Σ_{jk} |t_ijk|, bounding ‖D²R(0)[u,v]‖_∞ by ‖·‖·|u|·|v|.
    pub fn bound(&self) -> f64 {
        let d = self.dim;
        (0..self.n_out)
            .map(|i| self.data[i * d * d..(i + 1) * d * d].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// Symmetric trilinear map, dense storage data[((i·d + j)·d + k)·d + l].
#[derive(Debug, Clone)]
pub struct SymTensor3 {
    pub n_out: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl SymTensor3 {
    pub fn from_dense(n_out: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_out * dim * dim * dim {
            return Err(Error::InvalidSystem(format!(
                "cubic tensor needs {} entries, got {}",
                n_out * dim * dim * dim,
                data.len()
            )));
        }
        let mut t = SymTensor3 { n_out, dim, data };
        t.symmetrize();
        Ok(t)
    }

    fn symmetrize(&mut self) {
        let d = self.dim;
        let old = self.data.clone();
        for i in 0..self.n_out {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let perms = [
                            (j, k, l),
                            (j, l, k),
                            (k, j, l),
                            (k, l, j),
                            (l, j, k),
                            (l, k, j),
                        ];
                        let s: f64 = perms
                            .iter()
                            .map(|&(a, b, c)| old[((i * d + a) * d + b) * d + c])
                            .sum();
                        self.data[((i * d + j) * d + k) * d + l] = s / 6.0;
                    }
                }
            }
        }
    }

    pub fn apply(&self, u: &CVec, v: &CVec, w: &CVec) -> CVec {
        let d = self.dim;
        let mut out = CVec::zeros(self.n_out);
        for i in 0..self.n_out {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                if u[j].norm_sqr() == 0.0 {
                    continue;
                }
                for k in 0..d {
                    if v[k].norm_sqr() == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        let c = self.data[((i * d + j) * d + k) * d + l];
                        if c != 0.0 {
                            acc += u[j] * v[k] * w[l] * c;
                        }
                    }
                }
            }
            out[i] = acc;
        }
        out
    }

    pub fn bound(&self) -> f64 {
        let d = self.dim;
        let block = d * d * d;
        (0..self.n_out)
            .map(|i| self.data[i * block..(i + 1) * block].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }
}

/// Taylor coefficients of the nonlinearity R at 0 through order 3, acting on
/// the stacked vector (u(θ₁), …, u(θ_m)) ∈ ℝ^{n·m} of history evaluations.
/// R(0) = 0 and DR(0) = 0 by construction.
#[derive(Debug, Clone)]
pub struct NonlinearityJet {
    pub n: usize,
    pub lags: Vec<f64>,
    pub quadratic: Option<SymTensor2>,
    pub cubic: Option<SymTensor3>,
    pub lip_global: Option<f64>,
    /// Optional coefficients (c₁, c₂, …) of ρ ↦ c₁ρ + c₂ρ² + … bounding
    /// Lip_ρ(R); defaults to the tensor-norm bound when absent.
    pub lip_ball_coeffs: Option<Vec<f64>>,
}

impl NonlinearityJet {
    pub fn zero(n: usize) -> Self {
        NonlinearityJet {
            n,
            lags: Vec::new(),
            quadratic: None,
            cubic: None,
            lip_global: Some(0.0),
            lip_ball_coeffs: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n * self.lags.len()
    }

    pub fn is_zero(&self) -> bool {
        self.quadratic.as_ref().map_or(true, |q| q.is_zero())
            && self.cubic.as_ref().map_or(true, |c| c.is_zero())
    }

    /// R(v) = ½ D²R(0)[v,v] + ⅙ D³R(0)[v,v,v] on the stacked evaluation vector.
    pub fn eval(&self, v: &DVector<f64>) -> DVector<f64> {
        let vc = CVec::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)));
        let out = self.eval_c(&vc);
        DVector::from_iterator(self.n, out.iter().map(|c| c.re))
    }

    pub fn eval_c(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(self.n);
        if let Some(q) = &self.quadratic {
            out += q.apply(v, v).map(|c| c * 0.5);
        }
        if let Some(c) = &self.cubic {
            out += c.apply(v, v, v).map(|x| x / 6.0);
        }
        out
    }

    pub fn d2(&self, u: &CVec, v: &CVec) -> CVec {
        match &self.quadratic {
            Some(q) => q.apply(u, v),
            None => CVec::zeros(self.n),
        }
    }

    pub fn d3(&self, u: &CVec, v: &CVec, w: &CVec) -> CVec {
        match &self.cubic {
            Some(c) => c.apply(u, v, w),
            None => CVec::zeros(self.n),
        }
    }

    /// Lipschitz constant of R on the ρ-ball (sup-norm). Uses the supplied
    /// coefficient bound when present, otherwise ‖D²R‖ρ + ½‖D³R‖ρ².
    pub fn lip_ball(&self, rho: f64) -> f64 {
        if let Some(coeffs) = &self.lip_ball_coeffs {
            let mut v = 0.0;
            let mut p = rho;
            for c in coeffs {
                v += c * p;
                p *= rho;
            }
            return v;
        }
        let q = self.quadratic.as_ref().map_or(0.0, |q| q.bound());
        let c = self.cubic.as_ref().map_or(0.0, |c| c.bound());
        q * rho + 0.5 * c * rho * rho
    }
}

/// A DDE ẋ(t) = f(x_t) split at the origin fixed point: f = L + R.
#[derive(Debug, Clone)]
pub struct DDESystem {
    pub kernel: DelayKernel,
    pub jet: NonlinearityJet,
    pub label: String,
}

impl DDESystem {
    pub fn new(kernel: DelayKernel, jet: NonlinearityJet, label: impl Into<String>) -> Result<Self> {
        if jet.n != kernel.n {
            return Err(Error::InvalidSystem(format!(
                "jet dimension {} does not match kernel dimension {}",
                jet.n, kernel.n
            )));
        }
        for &lag in &jet.lags {
            if !(-kernel.h..=0.0).contains(&lag) {
                return Err(Error::InvalidSystem(format!(
                    "evaluation lag {lag} outside [-{}, 0]",
                    kernel.h
                )));
            }
        }
        Ok(DDESystem { kernel, jet, label: label.into() })
    }
}

// ---------------------------------------------------------------------------
// System definition files (TOML or JSON).

#[derive(Debug, Deserialize)]
pub struct SystemFile {
    pub label: Option<String>,
    pub n: usize,
    pub h: f64,
    #[serde(default)]
    pub atoms: Vec<AtomDef>,
    #[serde(default)]
    pub densities: Vec<DensityDef>,
    /// Linear terms written as part of f; folded into the kernel.
    #[serde(default)]
    pub linear_terms: Vec<AtomDef>,
    /// f(0); must vanish (shift the equilibrium first).
    #[serde(default)]
    pub constant: Vec<f64>,
    #[serde(default)]
    pub lags: Vec<f64>,
    /// Dense row-major D²R(0), length n·(n·m)².
    pub quadratic: Option<Vec<f64>>,
    /// Dense row-major D³R(0), length n·(n·m)³.
    pub cubic: Option<Vec<f64>>,
    pub lip_global: Option<f64>,
    pub lip_ball: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct AtomDef {
    pub tau: f64,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct DensityDef {
    pub a: f64,
    pub b: f64,
    /// poly[p] is the matrix coefficient of θᵖ, rows of n entries.
    pub poly: Vec<Vec<Vec<f64>>>,
}

fn matrix_from_rows(n: usize, rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidSystem(format!("{what}: expected an {n}×{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Split an explicit right-hand side into linear kernel and nonlinearity jet.
/// Rejects systems whose fixed point is not at the origin. Idempotent: a
/// file with no `constant`/`linear_terms` round-trips unchanged.
pub fn linearize(file: SystemFile) -> Result<DDESystem> {
    if file.constant.iter().any(|&c| c != 0.0) {
        return Err(Error::NonzeroFixedPoint(file.constant.clone()));
    }
    let n = file.n;
    let mut atoms = Vec::new();
    for a in file.atoms.iter().chain(file.linear_terms.iter()) {
        atoms.push(Atom { tau: a.tau, weight: matrix_from_rows(n, &a.b, "atom")? });
    }
    let mut densities = Vec::new();
    for d in &file.densities {
        let coeffs = d
            .poly
            .iter()
            .map(|rows| matrix_from_rows(n, rows, "density coefficient"))
            .collect::<Result<Vec<_>>>()?;
        densities.push(Density { a: d.a, b: d.b, coeffs });
    }
    let kernel = DelayKernel::new(n, file.h, atoms, densities)?;
    let dim = n * file.lags.len();
    let quadratic = match file.quadratic {
        Some(data) => Some(SymTensor2::from_dense(n, dim, data)?),
        None => None,
    };
    let cubic = match file.cubic {
        Some(data) => Some(SymTensor3::from_dense(n, dim, data)?),
        None => None,
    };
    let jet = NonlinearityJet {
        n,
        lags: file.lags,
        quadratic,
        cubic,
        lip_global: file.lip_global,
        lip_ball_coeffs: file.lip_ball,
    };
    DDESystem::new(kernel, jet, file.label.unwrap_or_else(|| "unnamed".into()))
}

/// Parse a system definition from TOML or JSON text (tried in that order
/// unless the extension decides).
pub fn parse_system(text: &str, prefer_json: bool) -> Result<DDESystem> {
    let file: SystemFile = if prefer_json {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
    } else {
        match toml::from_str(text) {
            Ok(f) => f,
            Err(te) => serde_json::from_str(text)
                .map_err(|_| Error::Parse(te.to_string()))?,
        }
    };
    linearize(file)
}

pub fn load_system(path: &std::path::Path) -> Result<DDESystem> {
    let text = std::fs::read_to_string(path)?;
    let prefer_json = path.extension().map_or(false, |e| e == "json");
    parse_system(&text, prefer_json)
}
