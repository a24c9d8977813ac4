//! Characteristic spectrum of the linearized DDE.
//!
//! The roots of det Δ(z), Δ(z) = z·I − ∫₀ʰ e^{-zt} dζ(t), coincide with the
//! point spectrum of the generator. Every root satisfies the a-priori bound
//! |λ| ≤ TV(ζ)·e^{-h·min(Re λ, 0)} (read off from λc = L(λ)c with |c|_∞ = 1),
//! which confines any half-plane search {Re z ≥ γ} to a finite rectangle.
//! Roots are located by the argument principle — adaptive contour integration
//! of (det Δ)′/det Δ — with rectangle bisection until each box isolates a
//! single root, then polished by (multiplicity-aware) Newton iteration.

use crate::linalg::{adjugate, det};
use crate::model::DelayKernel;
use crate::quad::GL16;
use crate::{C64, Error, Result, Tolerances};

/// det Δ(z) and d/dz det Δ(z), both in closed form. The derivative uses the
/// Jacobi identity d/dz det Δ = tr(adj Δ(z) · Δ′(z)).
pub fn char_det(kernel: &DelayKernel, z: C64) -> (C64, C64) {
    let dm = kernel.delta(z);
    let d = det(&dm);
    let adj = adjugate(&dm);
    let dp = kernel.delta_dz(z);
    let prod = adj * dp;
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..kernel.n {
        tr += prod[(i, i)];
    }
    (d, tr)
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re0, re1, im0, im1 }
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn diag(&self) -> f64 {
        ((self.re1 - self.re0).powi(2) + (self.im1 - self.im0).powi(2)).sqrt()
    }

    pub fn contains(&self, z: C64) -> bool {
        (self.re0..=self.re1).contains(&z.re) && (self.im0..=self.im1).contains(&z.im)
    }

    pub fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re0, self.im0),
            C64::new(self.re1, self.im0),
            C64::new(self.re1, self.im1),
            C64::new(self.re0, self.im1),
        ]
    }

    /// Split across the longer side at the given fraction.
    pub fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.re1 - self.re0 >= self.im1 - self.im0 {
            let cut = self.re0 + frac * (self.re1 - self.re0);
            (
                Rect::new(self.re0, cut, self.im0, self.im1),
                Rect::new(cut, self.re1, self.im0, self.im1),
            )
        } else {
            let cut = self.im0 + frac * (self.im1 - self.im0);
            (
                Rect::new(self.re0, self.re1, self.im0, cut),
                Rect::new(self.re0, self.re1, cut, self.im1),
            )
        }
    }
}

/// Scale against which |det Δ(z)| is measured when deciding whether a contour
/// passes dangerously close to a root: an upper-bound proxy for the typical
/// magnitude of det Δ at z.
fn det_scale(kernel: &DelayKernel, tv: f64, z: C64) -> f64 {
    let grow = tv * (-kernel.h * z.re.min(0.0)).exp();
    (z.norm() + grow + 1.0).powi(kernel.n as i32)
}

/// Proximity data gathered while walking a contour: the minimum of the
/// scaled determinant magnitude and of the Newton-step length |det/det′|
/// (which approximates the distance to the nearest root) over all nodes.
#[derive(Debug, Clone, Copy)]
struct ContourProbe {
    min_ratio: f64,
    min_step: f64,
}

impl ContourProbe {
    fn new() -> Self {
        ContourProbe { min_ratio: f64::INFINITY, min_step: f64::INFINITY }
    }
}

/// Adaptive contour integral of (det Δ)′/det Δ along the segment [z0, z1].
fn logderiv_segment(
    kernel: &DelayKernel,
    tv: f64,
    z0: C64,
    z1: C64,
    probe: &mut ContourProbe,
    depth: usize,
) -> C64 {
    let dz = z1 - z0;
    let eval = |t: f64, probe: &mut ContourProbe| {
        let z = z0 + dz * t;
        let (d, dp) = char_det(kernel, z);
        let ratio = d.norm() / det_scale(kernel, tv, z);
        if ratio < probe.min_ratio {
            probe.min_ratio = ratio;
        }
        if dp.norm() > 0.0 {
            let step = (d / dp).norm();
            if step < probe.min_step {
                probe.min_step = step;
            }
        }
        dp / d
    };
    let quad = |a: f64, b: f64, probe: &mut ContourProbe| {
        let c = 0.5 * (b - a);
        let m = 0.5 * (b + a);
        let mut acc = C64::new(0.0, 0.0);
        for (&x, &w) in GL16.nodes.iter().zip(&GL16.weights) {
            acc += eval(c * x + m, probe) * w;
        }
        acc * c
    };
    fn refine(
        a: f64,
        b: f64,
        whole: C64,
        depth: usize,
        quad: &dyn Fn(f64, f64, &mut ContourProbe) -> C64,
        probe: &mut ContourProbe,
    ) -> C64 {
        let m = 0.5 * (a + b);
        let left = quad(a, m, probe);
        let right = quad(m, b, probe);
        let sum = left + right;
        if depth == 0 || (whole - sum).norm() < 1e-9 * (1.0 + sum.norm()) {
            sum
        } else {
            refine(a, m, left, depth - 1, quad, probe)
                + refine(m, b, right, depth - 1, quad, probe)
        }
    }
    let whole = quad(0.0, 1.0, probe);
    refine(0.0, 1.0, whole, depth, &quad, probe) * dz
}

/// Number of roots of det Δ inside the rectangle, with multiplicity, via the
/// winding number of det Δ along the boundary.
pub fn count_roots_in_rect(kernel: &DelayKernel, rect: Rect, tols: &Tolerances) -> Result<usize> {
    let tv = kernel.total_variation();
    let corners = rect.corners();
    let mut probe = ContourProbe::new();
    let mut total = C64::new(0.0, 0.0);
    for k in 0..4 {
        total += logderiv_segment(kernel, tv, corners[k], corners[(k + 1) % 4], &mut probe, 24);
    }
    if probe.min_ratio < tols.tol_boundary {
        return Err(Error::BoundaryRoot { min: probe.min_ratio, tol: tols.tol_boundary });
    }
    let w = total / C64::new(0.0, 2.0 * std::f64::consts::PI);
    let rounded = w.re.round();
    if w.im.abs() > 0.25 || (w.re - rounded).abs() > 0.25 || rounded < -0.25 {
        // Non-integer winding with a root hugging the contour is a boundary
        // hit, not an integration failure.
        if probe.min_step < 0.01 * (rect.diag() + 1e-12) {
            return Err(Error::BoundaryRoot { min: probe.min_step, tol: tols.tol_boundary });
        }
        return Err(Error::RootSearch(format!(
            "winding number {w} on {rect:?} did not settle to an integer"
        )));
    }
    Ok(rounded as usize)
}

/// Newton iteration on det Δ with multiplicity-aware damping: for a root of
/// multiplicity m the update m·det/det′ restores quadratic convergence.
fn newton_polish(kernel: &DelayKernel, z0: C64, mult: usize, tols: &Tolerances) -> Option<C64> {
    let m = mult.max(1) as f64;
    let mut z = z0;
    let mut best = z0;
    let mut best_res = f64::INFINITY;
    for _ in 0..200 {
        let (d, dp) = char_det(kernel, z);
        let res = d.norm();
        if res < best_res {
            best_res = res;
            best = z;
        }
        if res <= tols.tol_root * det_scale(kernel, kernel.total_variation(), z).max(1.0) {
            return Some(z);
        }
        if dp.norm() == 0.0 {
            // Stationary point of det; nudge off it.
            z += C64::new(1e-9, 1e-9);
            continue;
        }
        let step = d / dp * m;
        if !step.re.is_finite() || !step.im.is_finite() {
            return None;
        }
        z -= step;
    }
    if best_res <= 1e-8 {
        Some(best)
    } else {
        None
    }
}

/// A characteristic root with its algebraic multiplicity.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub lambda: C64,
    pub multiplicity: usize,
}

const SPLIT_FRACTIONS: [f64; 7] = [0.5, 0.53, 0.461, 0.572, 0.437, 0.613, 0.391];

fn locate_roots(
    kernel: &DelayKernel,
    rect: Rect,
    count: usize,
    tols: &Tolerances,
    out: &mut Vec<Root>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let center = rect.center();
    if count == 1 {
        if let Some(z) = newton_polish(kernel, center, 1, tols) {
            if rect.contains(z) {
                out.push(Root { lambda: z, multiplicity: 1 });
                return Ok(());
            }
        }
        // Newton escaped the isolating box; keep shrinking it instead.
    }
    if rect.diag() <= tols.tol_sep {
        // Unseparable cluster: declare a multiple root.
        let z = newton_polish(kernel, center, count, tols).unwrap_or(center);
        let (_, dp) = char_det(kernel, z);
        if count > 1 && dp.norm() > tols.tol_deriv {
            return Err(Error::RootSearch(format!(
                "cluster of {count} roots at {z} has |det′| = {:.3e}, expected a multiple root",
                dp.norm()
            )));
        }
        out.push(Root { lambda: z, multiplicity: count });
        return Ok(());
    }
    for frac in SPLIT_FRACTIONS {
        let (a, b) = rect.split(frac);
        let ca = match count_roots_in_rect(kernel, a, tols) {
            Ok(c) => c,
            Err(Error::BoundaryRoot { .. }) => continue,
            Err(e) => return Err(e),
        };
        let cb = match count_roots_in_rect(kernel, b, tols) {
            Ok(c) => c,
            Err(Error::BoundaryRoot { .. }) => continue,
            Err(e) => return Err(e),
        };
        if ca + cb != count {
            return Err(Error::RootSearch(format!(
                "count mismatch on split of {rect:?}: {ca} + {cb} ≠ {count}"
            )));
        }
        locate_roots(kernel, a, ca, tols, out)?;
        locate_roots(kernel, b, cb, tols, out)?;
        return Ok(());
    }
    // Every candidate cut grazes a root: the box is one unseparable cluster.
    let z = newton_polish(kernel, center, count, tols)
        .ok_or_else(|| Error::RootSearch(format!("Newton failed on cluster in {rect:?}")))?;
    if count > 1 {
        let (_, dp) = char_det(kernel, z);
        if dp.norm() > tols.tol_deriv {
            return Err(Error::RootSearch(format!(
                "cluster of {count} roots at {z} has |det′| = {:.3e}, expected a multiple root",
                dp.norm()
            )));
        }
    }
    out.push(Root { lambda: z, multiplicity: count });
    Ok(())
}

/// All roots inside the rectangle, polished; the boundary must avoid roots.
pub fn roots_in_rect(kernel: &DelayKernel, rect: Rect, tols: &Tolerances) -> Result<Vec<Root>> {
    let mut rect = rect;
    let mut count = None;
    // If the requested boundary grazes a root, inflate slightly (spec'd
    // caller contract: perturb the rectangle).
    for _ in 0..6 {
        match count_roots_in_rect(kernel, rect, tols) {
            Ok(c) => {
                count = Some(c);
                break;
            }
            Err(Error::BoundaryRoot { .. }) => {
                let dre = 0.013 * (rect.re1 - rect.re0) + 1e-6;
                let dim = 0.017 * (rect.im1 - rect.im0) + 1e-6;
                rect = Rect::new(rect.re0 - dre, rect.re1 + dre, rect.im0 - dim, rect.im1 + dim);
            }
            Err(e) => return Err(e),
        }
    }
    let count = count.ok_or_else(|| {
        Error::RootSearch("boundary kept hitting roots after repeated inflation".into())
    })?;
    let mut out = Vec::new();
    locate_roots(kernel, rect, count, tols, &mut out)?;
    dedupe_roots(&mut out, tols);
    Ok(out)
}

fn dedupe_roots(roots: &mut Vec<Root>, tols: &Tolerances) {
    let mut merged: Vec<Root> = Vec::new();
    for r in roots.iter() {
        if let Some(m) = merged
            .iter_mut()
            .find(|m| (m.lambda - r.lambda).norm() < 10.0 * tols.tol_sep)
        {
            m.multiplicity += r.multiplicity;
        } else {
            merged.push(*r);
        }
    }
    merged.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap()
    });
    *roots = merged;
}

/// Finite set of characteristic roots right of the cut line γ, together with
/// the Σ/Σ′ bookkeeping: Σ = roots with Re λ ≥ sigma_cut, Σ′ = everything
/// else (the slice remainder plus, optionally, a deeper-search bound).
#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    pub gamma: f64,
    /// All roots with Re λ ≥ γ, conjugate-closed, sorted by (Re, Im).
    pub roots: Vec<Root>,
    /// Σ selection: roots with Re λ ≥ sigma_cut. Defaults to γ (Σ = all).
    pub sigma_cut: f64,
    /// sup Re over roots found strictly below γ in a secondary search.
    pub beta_deep: Option<f64>,
}

impl SpectrumSlice {
    pub fn sigma(&self) -> Vec<Root> {
        self.roots
            .iter()
            .copied()
            .filter(|r| r.lambda.re >= self.sigma_cut)
            .collect()
    }

    pub fn sigma_prime_in_slice(&self) -> Vec<Root> {
        self.roots
            .iter()
            .copied()
            .filter(|r| r.lambda.re < self.sigma_cut)
            .collect()
    }

    /// α = inf Re Σ.
    pub fn alpha(&self) -> Option<f64> {
        self.sigma()
            .iter()
            .map(|r| r.lambda.re)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
    }

    /// β = sup Re Σ′, from the slice remainder and/or the deeper search.
    pub fn beta(&self) -> Option<f64> {
        let in_slice = self
            .sigma_prime_in_slice()
            .iter()
            .map(|r| r.lambda.re)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        match (in_slice, self.beta_deep) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        }
    }

    /// Restrict Σ to roots with Re λ ≥ cut; everything dropped joins Σ′.
    pub fn restrict(&self, cut: f64) -> SpectrumSlice {
        SpectrumSlice { sigma_cut: cut, ..self.clone() }
    }

    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Checks conjugation closure of the root set (kernel is real).
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        self.roots.iter().all(|r| {
            r.lambda.im.abs() < tol
                || self.roots.iter().any(|s| {
                    (s.lambda - r.lambda.conj()).norm() < tol && s.multiplicity == r.multiplicity
                })
        })
    }
}

/// Search rectangle containing every root with Re λ ≥ γ, from the a-priori
/// bound |λ| ≤ TV·e^{-h·min(Re λ, 0)} (and Re λ ≤ TV on the right).
pub fn search_rect(kernel: &DelayKernel, gamma: f64) -> Rect {
    let tv = kernel.total_variation();
    let im_max = tv * (-kernel.h * gamma.min(0.0)).exp() + 1.0;
    // Slightly asymmetric so real roots never sit on a bisection line.
    Rect::new(gamma, tv + 1.0, -im_max - 0.0371, im_max + 0.0413)
}

/// All characteristic roots with Re λ ≥ γ. The optional `depth` triggers a
/// secondary search on [γ − depth, γ) recording only sup Re (the β datum);
/// default depth is None (β then comes from later Σ-restriction).
pub fn roots_right_of(
    kernel: &DelayKernel,
    gamma: f64,
    depth: Option<f64>,
    tols: &Tolerances,
) -> Result<SpectrumSlice> {
    let rect = search_rect(kernel, gamma);
    let mut roots = roots_in_rect(kernel, rect, tols)?;
    roots.retain(|r| r.lambda.re >= gamma - 1e-9);
    canonicalize_conjugates(&mut roots);
    let beta_deep = match depth {
        Some(d) if d > 0.0 => {
            let tv = kernel.total_variation();
            let g2 = gamma - d;
            let im_max = tv * (-kernel.h * g2.min(0.0)).exp() + 1.0;
            let band = Rect::new(g2, gamma - 1e-6, -im_max - 0.0371, im_max + 0.0413);
            let lower = roots_in_rect(kernel, band, tols)?;
            lower
                .iter()
                .map(|r| r.lambda.re)
                .filter(|&x| x < gamma)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
        }
        _ => None,
    };
    Ok(SpectrumSlice { gamma, roots, sigma_cut: gamma, beta_deep })
}

/// Snap near-real roots onto the axis and average conjugate pairs so the
/// reported set is exactly conjugation-symmetric.
fn canonicalize_conjugates(roots: &mut [Root]) {
    for r in roots.iter_mut() {
        if r.lambda.im.abs() < 1e-9 * (1.0 + r.lambda.norm()) {
            r.lambda.im = 0.0;
        }
    }
    let n = roots.len();
    for i in 0..n {
        if roots[i].lambda.im <= 0.0 {
            continue;
        }
        let conj = roots[i].lambda.conj();
        for j in 0..n {
            if i != j && (roots[j].lambda - conj).norm() < 1e-6 * (1.0 + conj.norm()) {
                let re = 0.5 * (roots[i].lambda.re + roots[j].lambda.re);
                let im = 0.5 * (roots[i].lambda.im - roots[j].lambda.im);
                roots[i].lambda = C64::new(re, im);
                roots[j].lambda = C64::new(re, -im);
            }
        }
    }
    roots.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im)
            .partial_cmp(&(b.lambda.re, b.lambda.im))
            .unwrap()
    });
}

/// Largest ℓ ≤ k_max with β < ℓ·α (pseudo-stable case, α < 0); k_max when
/// α > 0; never below 1.
pub fn smoothness_degree(alpha: f64, beta: f64, k_max: usize) -> usize {
    if alpha > 0.0 {
        return k_max.max(1);
    }
    if alpha == 0.0 {
        return 1;
    }
    let mut ell = 1;
    for l in 1..=k_max {
        if beta < l as f64 * alpha {
            ell = l;
        } else {
            break;
        }
    }
    ell
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonresonanceKind {
    /// Stable Σ: no sum of 2..r elements of Σ (and in-gap companions) may
    /// land on another root of the slice.
    A4,
    /// Unstable Σ: jΣ must avoid the unstable remainder for j = 2..r.
    A5,
}

#[derive(Debug, Clone)]
pub struct NonresonanceReport {
    pub r: usize,
    pub satisfied: bool,
    /// (order i, number of Σ factors j, offending sum value).
    pub violations: Vec<(usize, usize, C64)>,
}

/// Exhaustive check of the order-r resonance conditions over the finite
/// slice. Sums of i eigenvalues (j of them from Σ, the rest from the in-gap
/// remainder Σ̃) are matched against the slice roots outside Σ with
/// tolerance tol_res. r is the smallest integer for which sums of r+1
/// Σ-elements already fall below the slice floor (capped at r_max); if even
/// order-2 sums can leave the covered depth, the slice is too shallow.
pub fn nonresonance_check(
    slice: &SpectrumSlice,
    kind: NonresonanceKind,
    r_max: usize,
    tols: &Tolerances,
) -> Result<NonresonanceReport> {
    let sigma: Vec<C64> = slice.sigma().iter().map(|r| r.lambda).collect();
    let others: Vec<C64> = slice
        .sigma_prime_in_slice()
        .iter()
        .map(|r| r.lambda)
        .collect();
    if sigma.is_empty() {
        return Ok(NonresonanceReport { r: 1, satisfied: true, violations: vec![] });
    }
    let sup_sigma = sigma.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let inf_sigma_re = sigma.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let floor = slice.gamma;
    let r = match kind {
        NonresonanceKind::A4 => {
            if sup_sigma >= 0.0 {
                return Err(Error::WrongSigmaShape {
                    expected: "a stable Σ (all Re λ < 0) for the A4-type check".into(),
                    got: format!("sup Re Σ = {sup_sigma}"),
                });
            }
            // Sums of i Σ-elements have Re ≤ i·sup Re Σ; once that drops
            // below every non-Σ root in the slice, higher orders cannot
            // resonate with anything known. Cap at r_max (the jet order).
            let target_floor = others
                .iter()
                .map(|l| l.re)
                .fold(f64::INFINITY, f64::min)
                .min(slice.beta_deep.unwrap_or(f64::INFINITY));
            let mut r = r_max;
            for cand in 1..=r_max {
                if (cand + 1) as f64 * sup_sigma < target_floor {
                    r = cand;
                    break;
                }
            }
            // Order-r sums reach down to r·inf Re Σ; the slice must cover
            // that depth or unknown roots could be hit.
            if (r as f64) * inf_sigma_re < floor {
                return Err(Error::InsufficientDepth {
                    order: r,
                    needed: r as f64 * inf_sigma_re,
                    reached: floor,
                });
            }
            r
        }
        NonresonanceKind::A5 => {
            let inf_sigma = sigma.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
            if inf_sigma <= 0.0 {
                return Err(Error::WrongSigmaShape {
                    expected: "an unstable Σ (all Re λ > 0) for the A5-type check".into(),
                    got: format!("inf Re Σ = {inf_sigma}"),
                });
            }
            let sup_rest = others.iter().map(|l| l.re).fold(0.0f64, f64::max);
            let mut r = r_max;
            for cand in 1..=r_max {
                if (cand + 1) as f64 * inf_sigma > sup_rest {
                    r = cand;
                    break;
                }
            }
            r
        }
    };
    // In-gap companions for mixed sums (A4 only): slice roots outside Σ with
    // Re above the Σ floor.
    let inf_sigma = sigma.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let companions: Vec<C64> = match kind {
        NonresonanceKind::A4 => others
            .iter()
            .copied()
            .filter(|l| l.re >= inf_sigma && l.re < 0.0)
            .collect(),
        NonresonanceKind::A5 => Vec::new(),
    };
    let targets: Vec<C64> = match kind {
        NonresonanceKind::A4 => others.clone(),
        NonresonanceKind::A5 => others.iter().copied().filter(|l| l.re > 0.0).collect(),
    };
    let mut violations = Vec::new();
    for i in 2..=r {
        for j in (if kind == NonresonanceKind::A5 { i } else { 1 })..=i {
            // j factors from Σ, i−j from the companions.
            let sums = multiset_sums(&sigma, j);
            let fills = multiset_sums(&companions, i - j);
            if fills.is_empty() && i != j {
                continue;
            }
            for s in &sums {
                let full: Vec<C64> = if i == j {
                    vec![*s]
                } else {
                    fills.iter().map(|f| s + f).collect()
                };
                for v in full {
                    if targets.iter().any(|t| (t - v).norm() < tols.tol_res) {
                        violations.push((i, j, v));
                    }
                }
            }
        }
    }
    violations.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1 && (a.2 - b.2).norm() < 1e-12);
    Ok(NonresonanceReport { r, satisfied: violations.is_empty(), violations })
}

/// All sums of k-element multisets drawn from `set` (k = 0 gives {0}).
fn multiset_sums(set: &[C64], k: usize) -> Vec<C64> {
    if k == 0 {
        return vec![C64::new(0.0, 0.0)];
    }
    if set.is_empty() {
        return Vec::new();
    }
    let mut sums = Vec::new();
    fn rec(set: &[C64], start: usize, k: usize, acc: C64, out: &mut Vec<C64>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..set.len() {
            rec(set, i, k - 1, acc + set[i], out);
        }
    }
    rec(set, 0, k, C64::new(0.0, 0.0), &mut sums);
    sums
}

#[derive(Debug, Clone, Copy)]
pub struct DensityReport {
    /// Roots counted in |z| < radius (with multiplicity).
    pub count: usize,
    /// count/radius.
    pub density: f64,
    /// E/π with the supplied (or estimated) exponential type E.
    pub asymptote: f64,
}

/// Advisory check of the root-counting asymptote n(r)/r → E/π. E defaults to
/// h·(sum of state dimension contributions) for single-max-delay kernels —
/// an estimate, overridable by the caller.
pub fn root_density_check(
    kernel: &DelayKernel,
    radius: f64,
    e_type: Option<f64>,
    tols: &Tolerances,
) -> Result<DensityReport> {
    let tv = kernel.total_variation();
    let mut probe = ContourProbe::new();
    let mut total = C64::new(0.0, 0.0);
    let segments = (radius * kernel.h).ceil().max(16.0) as usize * 4;
    for k in 0..segments {
        let a = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
        let b = 2.0 * std::f64::consts::PI * (k + 1) as f64 / segments as f64;
        // Chord approximation of the arc refined adaptively; use many short
        // chords so the polygonal contour stays root-free like the circle.
        let z0 = C64::new(radius * a.cos(), radius * a.sin());
        let z1 = C64::new(radius * b.cos(), radius * b.sin());
        total += logderiv_segment(kernel, tv, z0, z1, &mut probe, 20);
    }
    if probe.min_ratio < tols.tol_boundary {
        return Err(Error::BoundaryRoot { min: probe.min_ratio, tol: tols.tol_boundary });
    }
    let w = total / C64::new(0.0, 2.0 * std::f64::consts::PI);
    let count = w.re.round().max(0.0) as usize;
    let e = e_type.unwrap_or(kernel.h * kernel.n as f64);
    Ok(DensityReport {
        count,
        density: count as f64 / radius,
        asymptote: e / std::f64::consts::PI,
    })
}
