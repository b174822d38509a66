//! Principal bundles in a local trivialisation `U × G`, connection and
//! curvature, the split `ω = φ + ψ` along a reductive pair `(G, H)`, and the
//! assembled transgression forms `TP(ω)` and `ΦP(ω)`.
//!
//! A total-space point is `(x, g)`; a tangent vector is `(ẋ, ξ)` with
//! `ξ = g⁻¹ġ ∈ 𝔤`. In these terms
//!
//! - `ω(ẋ, ξ) = Ad_{g⁻¹}(A(x)ẋ) + ξ`
//! - `Ω(X, Y) = Ad_{g⁻¹} F(x)(ẋ₁, ẋ₂)`, `F_ij = ∂_iA_j - ∂_jA_i + [A_i, A_j]`
//! - `φ = pr_𝔭 ω`, `ψ = pr_𝔥 ω`
//! - `Ψ = dψ + ½[ψ,ψ] = Ω_𝔥 - ½[φ,φ]_𝔥`
//!
//! Exterior derivatives of assembled forms are taken by finite differences in
//! exponential coordinates `(x, y) ↦ (x, g₀ exp(Σ y_a T_a))` centred at the
//! evaluation point.

use std::sync::Arc;

use rand::Rng;

use crate::error::{domain, Result};
use crate::exact_coefficients::{cs_coefficient, phi_coefficient};
use crate::exterior_calculus::{
    exterior_derivative, integrate, integrate_box, shuffles, FdOptions, FormField, FormValue, ParametrizedChain,
};
use crate::invariant_polynomials::{eval_indexed, FormArgument, InvariantPolynomial};
use crate::lie_algebras::{dexp_left, exp, standard_normal, AlgebraTag, LieAlgebraElement, Matrix, ReductiveSplit};

type PotentialFn = dyn Fn(&[f64]) -> Result<Vec<LieAlgebraElement>> + Send + Sync;
type PotentialJacobianFn = dyn Fn(&[f64]) -> Result<Vec<Vec<LieAlgebraElement>>> + Send + Sync;
type GroupMap = dyn Fn(&[f64]) -> Result<Matrix> + Send + Sync;

/// A gauge potential `A = Σ A_i dx_i` on a base chart with its analytic
/// first derivatives `∂_i A_j`.
#[derive(Clone)]
pub struct LocalPotential {
    base_dim: usize,
    tag: AlgebraTag,
    components: Arc<PotentialFn>,
    jacobian: Arc<PotentialJacobianFn>,
}

impl std::fmt::Debug for LocalPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalPotential")
            .field("base_dim", &self.base_dim)
            .field("tag", &self.tag)
            .finish_non_exhaustive()
    }
}

impl LocalPotential {
    /// `components(x)[j] = A_j(x)`, `jacobian(x)[i][j] = ∂_i A_j(x)`.
    pub fn new<A, J>(base_dim: usize, tag: AlgebraTag, components: A, jacobian: J) -> Self
    where
        A: Fn(&[f64]) -> Result<Vec<LieAlgebraElement>> + Send + Sync + 'static,
        J: Fn(&[f64]) -> Result<Vec<Vec<LieAlgebraElement>>> + Send + Sync + 'static,
    {
        LocalPotential {
            base_dim,
            tag,
            components: Arc::new(components),
            jacobian: Arc::new(jacobian),
        }
    }

    /// `A = 0`.
    pub fn flat(base_dim: usize, tag: AlgebraTag) -> Self {
        LocalPotential::new(
            base_dim,
            tag,
            move |_| Ok(vec![LieAlgebraElement::zero(tag); base_dim]),
            move |_| Ok(vec![vec![LieAlgebraElement::zero(tag); base_dim]; base_dim]),
        )
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.base_dim {
            return domain(format!("base point has dimension {}, chart has {}", x.len(), self.base_dim));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return domain("base point outside the chart");
        }
        Ok(())
    }

    pub fn components(&self, x: &[f64]) -> Result<Vec<LieAlgebraElement>> {
        self.check(x)?;
        (self.components)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<Vec<Vec<LieAlgebraElement>>> {
        self.check(x)?;
        (self.jacobian)(x)
    }

    /// `A(x)(v)`.
    pub fn apply(&self, x: &[f64], v: &[f64]) -> Result<LieAlgebraElement> {
        let a = self.components(x)?;
        Ok(combine(self.tag, &a, v))
    }

    /// `F_ij = ∂_iA_j - ∂_jA_i + [A_i, A_j]`.
    pub fn curvature(&self, x: &[f64]) -> Result<Vec<Vec<LieAlgebraElement>>> {
        let a = self.components(x)?;
        let da = self.jacobian(x)?;
        let n = self.base_dim;
        let mut f = vec![vec![LieAlgebraElement::zero(self.tag); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = &(&(&da[i][j] - &da[j][i]) + &a[i].commutator(&a[j])) + &LieAlgebraElement::zero(self.tag);
                f[j][i] = v.scale(-1.0);
                f[i][j] = v;
            }
        }
        Ok(f)
    }

    /// `F(x)(u, v) = Σ F_ij u_i v_j`.
    pub fn curvature_on(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<LieAlgebraElement> {
        let f = self.curvature(x)?;
        Ok(pair(self.tag, &f, u, v))
    }

    /// The potential as a Lie-valued 1-form on the base chart.
    pub fn as_form(&self) -> FormField<LieAlgebraElement> {
        let p = self.clone();
        FormField::new(self.base_dim, 1, LieAlgebraElement::zero(self.tag), move |x, t| p.apply(x, t[0]))
    }

    /// The analytic curvature as a Lie-valued 2-form on the base chart.
    pub fn curvature_form(&self) -> FormField<LieAlgebraElement> {
        let p = self.clone();
        FormField::new(self.base_dim, 2, LieAlgebraElement::zero(self.tag), move |x, t| {
            p.curvature_on(x, t[0], t[1])
        })
    }
}

fn combine(tag: AlgebraTag, a: &[LieAlgebraElement], v: &[f64]) -> LieAlgebraElement {
    let mut out = LieAlgebraElement::zero(tag);
    for (ai, vi) in a.iter().zip(v) {
        if *vi != 0.0 {
            out = &out + &ai.scale(*vi);
        }
    }
    out
}

fn pair(tag: AlgebraTag, f: &[Vec<LieAlgebraElement>], u: &[f64], v: &[f64]) -> LieAlgebraElement {
    let mut out = LieAlgebraElement::zero(tag);
    for i in 0..u.len() {
        for j in 0..v.len() {
            let c = u[i] * v[j];
            if c != 0.0 && i != j {
                out = &out + &f[i][j].scale(c);
            }
        }
    }
    out
}

/// Parametrization of the fiber `G/H` by lifts `u ↦ g(u) ∈ G` over a box.
/// `multiplicity` is the number of times the lift covers `G/H`.
#[derive(Clone)]
pub struct FiberParametrization {
    domain: Vec<(f64, f64)>,
    lifts: Vec<Arc<GroupMap>>,
    multiplicity: f64,
}

impl std::fmt::Debug for FiberParametrization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiberParametrization")
            .field("domain", &self.domain)
            .field("lifts", &self.lifts.len())
            .field("multiplicity", &self.multiplicity)
            .finish()
    }
}

impl FiberParametrization {
    pub fn new<F>(domain_box: Vec<(f64, f64)>, multiplicity: f64, lift: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Matrix> + Send + Sync + 'static,
    {
        FiberParametrization {
            domain: domain_box,
            lifts: vec![Arc::new(lift)],
            multiplicity,
        }
    }

    /// Add an alternative lift of the same fiber.
    pub fn with_lift<F>(mut self, lift: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Matrix> + Send + Sync + 'static,
    {
        self.lifts.push(Arc::new(lift));
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn lift_count(&self) -> usize {
        self.lifts.len()
    }
}

/// A bundle chart: base potential, optional reductive split and fiber parametrization.
#[derive(Debug, Clone)]
pub struct BundleChart {
    name: String,
    potential: LocalPotential,
    basis: Vec<LieAlgebraElement>,
    split: Option<ReductiveSplit>,
    fiber: Option<FiberParametrization>,
}

impl BundleChart {
    pub fn new(name: impl Into<String>, potential: LocalPotential) -> Self {
        let basis = potential.tag().orthonormal_basis();
        BundleChart {
            name: name.into(),
            potential,
            basis,
            split: None,
            fiber: None,
        }
    }

    pub fn with_split(mut self, split: ReductiveSplit) -> Result<Self> {
        if split.ambient() != self.potential.tag() {
            return domain(format!("split of {} on a {} bundle", split.ambient(), self.potential.tag()));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn with_fiber(mut self, fiber: FiberParametrization) -> Self {
        self.fiber = Some(fiber);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> AlgebraTag {
        self.potential.tag()
    }

    pub fn base_dim(&self) -> usize {
        self.potential.base_dim()
    }

    pub fn group_dim(&self) -> usize {
        self.basis.len()
    }

    /// Dimension of the total-space coordinate chart `(x, y)`.
    pub fn total_dim(&self) -> usize {
        self.base_dim() + self.group_dim()
    }

    pub fn potential(&self) -> &LocalPotential {
        &self.potential
    }

    pub fn split(&self) -> Option<&ReductiveSplit> {
        self.split.as_ref()
    }

    pub fn fiber(&self) -> Option<&FiberParametrization> {
        self.fiber.as_ref()
    }

    /// Orthonormal basis of `𝔤` used for exponential coordinates.
    pub fn algebra_basis(&self) -> &[LieAlgebraElement] {
        &self.basis
    }

    fn require_split(&self) -> Result<&ReductiveSplit> {
        match &self.split {
            Some(s) => Ok(s),
            None => domain(format!("bundle {} has no reductive split configured", self.name)),
        }
    }

    /// Random tangent `(ẋ, ξ)` with standard normal components.
    pub fn random_tangent<R: Rng + ?Sized>(&self, rng: &mut R) -> TotalTangent {
        let dx = (0..self.base_dim()).map(|_| standard_normal(rng)).collect();
        TotalTangent {
            dx,
            xi: LieAlgebraElement::random(self.tag(), rng, 1.0),
        }
    }

    /// Random `𝔥`-vertical tangent `(0, ξ)` with `ξ ∈ 𝔥`.
    pub fn random_vertical_h<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TotalTangent> {
        let s = self.require_split()?;
        Ok(TotalTangent {
            dx: vec![0.0; self.base_dim()],
            xi: s.random_h(rng, 1.0),
        })
    }
}

/// A point `(x, g)` of the trivialised total space.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalPoint {
    pub x: Vec<f64>,
    pub g: Matrix,
}

impl TotalPoint {
    pub fn new(x: Vec<f64>, g: Matrix) -> Self {
        TotalPoint { x, g }
    }

    pub fn identity(x: Vec<f64>, n: usize) -> Self {
        TotalPoint {
            x,
            g: Matrix::identity(n, n),
        }
    }

    /// Right action `(x, g) ↦ (x, gh)`.
    pub fn right_translate(&self, h: &Matrix) -> Self {
        TotalPoint {
            x: self.x.clone(),
            g: &self.g * h,
        }
    }
}

/// A tangent `(ẋ, ξ)` at a total-space point, `ξ = g⁻¹ġ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TotalTangent {
    pub dx: Vec<f64>,
    pub xi: LieAlgebraElement,
}

impl TotalTangent {
    pub fn vertical(base_dim: usize, xi: LieAlgebraElement) -> Self {
        TotalTangent {
            dx: vec![0.0; base_dim],
            xi,
        }
    }

    pub fn horizontal_lift_free(dx: Vec<f64>, tag: AlgebraTag) -> Self {
        TotalTangent {
            dx,
            xi: LieAlgebraElement::zero(tag),
        }
    }

    /// The tangent at `(x, gh)` corresponding to this one at `(x, g)` under right translation.
    pub fn right_translate(&self, h: &Matrix) -> Self {
        TotalTangent {
            dx: self.dx.clone(),
            xi: self.xi.adjoint_action(&h.adjoint()),
        }
    }
}

// ---------------------------------------------------------------------------
// Pointwise connection data

fn check_point(chart: &BundleChart, p: &TotalPoint) -> Result<()> {
    let n = chart.tag().size();
    if p.g.nrows() != n || p.g.ncols() != n {
        return domain(format!("group element must be {n}x{n}"));
    }
    if p.x.len() != chart.base_dim() {
        return domain("base point dimension does not match the chart");
    }
    Ok(())
}

fn check_tangent(chart: &BundleChart, t: &TotalTangent) -> Result<()> {
    if t.dx.len() != chart.base_dim() {
        return domain("tangent base component has the wrong dimension");
    }
    if t.xi.tag() != chart.tag() {
        return domain(format!("fiber velocity in {} on a {} bundle", t.xi.tag(), chart.tag()));
    }
    Ok(())
}

/// `ω(ẋ, ξ) = Ad_{g⁻¹}(A(x)ẋ) + ξ`.
pub fn connection_on_total_space(chart: &BundleChart, p: &TotalPoint, t: &TotalTangent) -> Result<LieAlgebraElement> {
    check_point(chart, p)?;
    check_tangent(chart, t)?;
    let a = chart.potential.apply(&p.x, &t.dx)?;
    Ok(&a.adjoint_action(&p.g.adjoint()) + &t.xi)
}

/// `Ω(X, Y) = Ad_{g⁻¹}F(x)(ẋ₁, ẋ₂)`.
pub fn curvature_on_total_space(
    chart: &BundleChart,
    p: &TotalPoint,
    u: &TotalTangent,
    v: &TotalTangent,
) -> Result<LieAlgebraElement> {
    check_point(chart, p)?;
    check_tangent(chart, u)?;
    check_tangent(chart, v)?;
    let f = chart.potential.curvature_on(&p.x, &u.dx, &v.dx)?;
    Ok(f.adjoint_action(&p.g.adjoint()))
}

/// `(φ, ψ) = (pr_𝔭 ω, pr_𝔥 ω)`.
pub fn decompose(
    chart: &BundleChart,
    p: &TotalPoint,
    t: &TotalTangent,
) -> Result<(LieAlgebraElement, LieAlgebraElement)> {
    let s = chart.require_split()?;
    let w = connection_on_total_space(chart, p, t)?;
    let psi = s.project_h(&w);
    let phi = &w - &psi;
    Ok((phi, psi))
}

/// `Ψ(X, Y) = Ω_𝔥(X, Y) - ½[φ,φ]_𝔥(X, Y) = Ω_𝔥 - [φ(X), φ(Y)]_𝔥`.
pub fn psi_curvature(
    chart: &BundleChart,
    p: &TotalPoint,
    u: &TotalTangent,
    v: &TotalTangent,
) -> Result<LieAlgebraElement> {
    let s = chart.require_split()?;
    let om = curvature_on_total_space(chart, p, u, v)?;
    let (pu, _) = decompose(chart, p, u)?;
    let (pv, _) = decompose(chart, p, v)?;
    Ok(&s.project_h(&om) - &s.project_h(&pu.commutator(&pv)))
}

/// All connection quantities at a point on a fixed list of tangents.
#[derive(Debug, Clone)]
pub struct ConnectionAtPoint {
    pub omega: Vec<LieAlgebraElement>,
    pub phi: Vec<LieAlgebraElement>,
    pub psi: Vec<LieAlgebraElement>,
    /// `curvature[a][b] = Ω(X_a, X_b)`.
    pub curvature: Vec<Vec<LieAlgebraElement>>,
    /// `psi_curvature[a][b] = Ψ(X_a, X_b)`; zero without a split.
    pub psi_curvature: Vec<Vec<LieAlgebraElement>>,
}

impl ConnectionAtPoint {
    pub fn new(chart: &BundleChart, p: &TotalPoint, tangents: &[TotalTangent]) -> Result<Self> {
        check_point(chart, p)?;
        let tag = chart.tag();
        let m = tangents.len();
        let g_inv = p.g.adjoint();
        let a = chart.potential.components(&p.x)?;
        let f = if m >= 2 { Some(chart.potential.curvature(&p.x)?) } else { None };
        let mut omega = Vec::with_capacity(m);
        for t in tangents {
            check_tangent(chart, t)?;
            omega.push(&combine(tag, &a, &t.dx).adjoint_action(&g_inv) + &t.xi);
        }
        let (phi, psi): (Vec<_>, Vec<_>) = match &chart.split {
            Some(s) => omega
                .iter()
                .map(|w| {
                    let h = s.project_h(w);
                    (w - &h, h)
                })
                .unzip(),
            None => (omega.clone(), vec![LieAlgebraElement::zero(tag); m]),
        };
        let zero = LieAlgebraElement::zero(tag);
        let mut curvature = vec![vec![zero.clone(); m]; m];
        let mut psi_curvature = vec![vec![zero.clone(); m]; m];
        if let Some(f) = &f {
            for i in 0..m {
                for j in (i + 1)..m {
                    let om = pair(tag, f, &tangents[i].dx, &tangents[j].dx).adjoint_action(&g_inv);
                    if let Some(s) = &chart.split {
                        let ps = &s.project_h(&om) - &s.project_h(&phi[i].commutator(&phi[j]));
                        psi_curvature[j][i] = ps.scale(-1.0);
                        psi_curvature[i][j] = ps;
                    }
                    curvature[j][i] = om.scale(-1.0);
                    curvature[i][j] = om;
                }
            }
        }
        Ok(ConnectionAtPoint {
            omega,
            phi,
            psi,
            curvature,
            psi_curvature,
        })
    }

    fn count(&self) -> usize {
        self.omega.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Omega,
    Phi,
    OmegaSquared,
    PhiSquared,
    Curvature,
    PsiCurvature,
}

impl Slot {
    fn degree(self) -> usize {
        match self {
            Slot::Omega | Slot::Phi => 1,
            _ => 2,
        }
    }
}

fn slot_argument<'a>(data: &'a ConnectionAtPoint, slot: Slot) -> FormArgument<'a> {
    FormArgument::new(slot.degree(), move |idx| {
        Ok(match slot {
            Slot::Omega => data.omega[idx[0]].clone(),
            Slot::Phi => data.phi[idx[0]].clone(),
            Slot::OmegaSquared => data.omega[idx[0]].commutator(&data.omega[idx[1]]).scale(2.0),
            Slot::PhiSquared => data.phi[idx[0]].commutator(&data.phi[idx[1]]).scale(2.0),
            Slot::Curvature => data.curvature[idx[0]][idx[1]].clone(),
            Slot::PsiCurvature => data.psi_curvature[idx[0]][idx[1]].clone(),
        })
    })
}

fn eval_slots(p: &InvariantPolynomial, data: &ConnectionAtPoint, slots: &[Slot]) -> Result<f64> {
    let args: Vec<FormArgument<'_>> = slots.iter().map(|&s| slot_argument(data, s)).collect();
    eval_indexed(p, &args, data.count())
}

fn check_polynomial(chart: &BundleChart, p: &InvariantPolynomial) -> Result<()> {
    if p.tag() != chart.tag() {
        return domain(format!("{p} does not match the {} bundle {}", chart.tag(), chart.name()));
    }
    Ok(())
}

/// `TP(ω) = Σ_i A_i P(ω, [ω,ω]^i, Ω^{k-i-1})` on the given tangents.
pub fn tp_value(p: &InvariantPolynomial, data: &ConnectionAtPoint) -> Result<f64> {
    let k = p.degree();
    let mut acc = 0.0;
    for i in 0..k {
        let c = cs_coefficient(k as i64, i as i64)?.to_f64();
        let mut slots = vec![Slot::Omega];
        slots.extend(std::iter::repeat_n(Slot::OmegaSquared, i));
        slots.extend(std::iter::repeat_n(Slot::Curvature, k - i - 1));
        acc += c * eval_slots(p, data, &slots)?;
    }
    Ok(acc)
}

/// `ΦP(ω) = Σ_{i,j} A_ij P(φ, [φ,φ]^i, Ψ^j, Ω^{k-i-j-1})` on the given tangents.
pub fn phi_p_value(p: &InvariantPolynomial, data: &ConnectionAtPoint) -> Result<f64> {
    let k = p.degree();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..(k - i) {
            let c = phi_coefficient(k as i64, i as i64, j as i64)?.to_f64();
            let mut slots = vec![Slot::Phi];
            slots.extend(std::iter::repeat_n(Slot::PhiSquared, i));
            slots.extend(std::iter::repeat_n(Slot::PsiCurvature, j));
            slots.extend(std::iter::repeat_n(Slot::Curvature, k - i - j - 1));
            acc += c * eval_slots(p, data, &slots)?;
        }
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Forms on the total space

type TotalEvaluator<V> = dyn Fn(&TotalPoint, &[TotalTangent]) -> Result<V> + Send + Sync;

/// A form on the total space, evaluated on `(x, g)` and tangents `(ẋ, ξ)`.
#[derive(Clone)]
pub struct TotalForm<V: FormValue> {
    chart: Arc<BundleChart>,
    degree: usize,
    zero: V,
    eval: Arc<TotalEvaluator<V>>,
}

impl<V: FormValue> std::fmt::Debug for TotalForm<V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TotalForm")
            .field("chart", &self.chart.name())
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl<V: FormValue> TotalForm<V> {
    pub fn new<F>(chart: &BundleChart, degree: usize, zero: V, eval: F) -> Self
    where
        F: Fn(&TotalPoint, &[TotalTangent]) -> Result<V> + Send + Sync + 'static,
    {
        TotalForm {
            chart: Arc::new(chart.clone()),
            degree,
            zero,
            eval: Arc::new(eval),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn chart(&self) -> &BundleChart {
        &self.chart
    }

    pub fn evaluate(&self, p: &TotalPoint, tangents: &[TotalTangent]) -> Result<V> {
        if tangents.len() != self.degree {
            return domain(format!("{}-form evaluated on {} tangents", self.degree, tangents.len()));
        }
        check_point(&self.chart, p)?;
        for t in tangents {
            check_tangent(&self.chart, t)?;
        }
        (self.eval)(p, tangents)
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        if self.degree != other.degree || self.chart.total_dim() != other.chart.total_dim() {
            return domain("adding total-space forms of different degree or chart");
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(TotalForm {
            chart: self.chart.clone(),
            degree: self.degree,
            zero: self.zero.clone(),
            eval: Arc::new(move |p, t| {
                let mut v = a.evaluate(p, t)?;
                v.add_scaled(&b.evaluate(p, t)?, s);
                Ok(v)
            }),
        })
    }

    /// The form in exponential coordinates `(x, y)` around `center`:
    /// `(x, y) ↦ (x, g₀ exp(Y))`, `(ẋ, ẏ) ↦ (ẋ, dexp_Y(Ẏ))`.
    pub fn in_exponential_chart(&self, center: &TotalPoint) -> FormField<V> {
        let form = self.clone();
        let g0 = center.g.clone();
        let n = self.chart.base_dim();
        FormField::new(self.chart.total_dim(), self.degree, self.zero.clone(), move |z, ts| {
            let chart = &form.chart;
            let tag = chart.tag();
            let y = LieAlgebraElement::combination(tag, chart.algebra_basis(), &z[n..]);
            let p = TotalPoint::new(z[..n].to_vec(), &g0 * exp(y.matrix()));
            let tangents: Vec<TotalTangent> = ts
                .iter()
                .map(|t| {
                    let v = LieAlgebraElement::combination(tag, chart.algebra_basis(), &t[n..]);
                    TotalTangent {
                        dx: t[..n].to_vec(),
                        xi: dexp_left(&y, &v),
                    }
                })
                .collect();
            form.evaluate(&p, &tangents)
        })
    }
}

/// Coordinates `(x, 0)` and flat tangents `(ẋ, ξ-coordinates)` at the centre of the exponential chart.
fn flatten(chart: &BundleChart, p: &TotalPoint, tangents: &[TotalTangent]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut z = p.x.clone();
    z.extend(std::iter::repeat_n(0.0, chart.group_dim()));
    let flat = tangents
        .iter()
        .map(|t| {
            let mut v = t.dx.clone();
            v.extend(t.xi.coordinates(chart.algebra_basis()));
            v
        })
        .collect();
    (z, flat)
}

/// `dα` evaluated at `p` on the given tangents by finite differences in exponential coordinates.
pub fn exterior_derivative_at<V: FormValue>(
    form: &TotalForm<V>,
    p: &TotalPoint,
    tangents: &[TotalTangent],
    fd: FdOptions,
) -> Result<V> {
    let field = exterior_derivative(&form.in_exponential_chart(p), fd);
    let (z, flat) = flatten(&form.chart, p, tangents);
    field.eval_vecs(&z, &flat)
}

/// `ω` as a total-space 1-form.
pub fn connection_form(chart: &BundleChart) -> TotalForm<LieAlgebraElement> {
    let c = chart.clone();
    TotalForm::new(chart, 1, LieAlgebraElement::zero(chart.tag()), move |p, t| {
        connection_on_total_space(&c, p, &t[0])
    })
}

/// `Ω` as a total-space 2-form.
pub fn curvature_form(chart: &BundleChart) -> TotalForm<LieAlgebraElement> {
    let c = chart.clone();
    TotalForm::new(chart, 2, LieAlgebraElement::zero(chart.tag()), move |p, t| {
        curvature_on_total_space(&c, p, &t[0], &t[1])
    })
}

/// `φ` and `ψ` as total-space 1-forms.
pub fn split_forms(chart: &BundleChart) -> Result<(TotalForm<LieAlgebraElement>, TotalForm<LieAlgebraElement>)> {
    chart.require_split()?;
    let (c1, c2) = (chart.clone(), chart.clone());
    let zero = LieAlgebraElement::zero(chart.tag());
    Ok((
        TotalForm::new(chart, 1, zero.clone(), move |p, t| Ok(decompose(&c1, p, &t[0])?.0)),
        TotalForm::new(chart, 1, zero, move |p, t| Ok(decompose(&c2, p, &t[0])?.1)),
    ))
}

/// `Ψ` as a total-space 2-form.
pub fn psi_curvature_form(chart: &BundleChart) -> Result<TotalForm<LieAlgebraElement>> {
    chart.require_split()?;
    let c = chart.clone();
    Ok(TotalForm::new(chart, 2, LieAlgebraElement::zero(chart.tag()), move |p, t| {
        psi_curvature(&c, p, &t[0], &t[1])
    }))
}

/// `TP(ω)` as a total-space `(2k-1)`-form.
pub fn tp_form(chart: &BundleChart, p: &InvariantPolynomial) -> Result<TotalForm<f64>> {
    check_polynomial(chart, p)?;
    let (c, poly) = (chart.clone(), p.clone());
    Ok(TotalForm::new(chart, 2 * p.degree() - 1, 0.0, move |pt, t| {
        tp_value(&poly, &ConnectionAtPoint::new(&c, pt, t)?)
    }))
}

/// `ΦP(ω)` as a total-space `(2k-1)`-form.
pub fn phi_p_form(chart: &BundleChart, p: &InvariantPolynomial) -> Result<TotalForm<f64>> {
    check_polynomial(chart, p)?;
    chart.require_split()?;
    let (c, poly) = (chart.clone(), p.clone());
    Ok(TotalForm::new(chart, 2 * p.degree() - 1, 0.0, move |pt, t| {
        phi_p_value(&poly, &ConnectionAtPoint::new(&c, pt, t)?)
    }))
}

/// The single term `P(φ, [φ,φ]^i, Ψ^j, Ω^{k-i-j-1})` of `ΦP(ω)`, without its coefficient.
pub fn phi_p_term(chart: &BundleChart, p: &InvariantPolynomial, i: usize, j: usize) -> Result<TotalForm<f64>> {
    check_polynomial(chart, p)?;
    chart.require_split()?;
    let k = p.degree();
    if i + j >= k {
        return domain(format!("term ({i}, {j}) does not occur for degree {k}"));
    }
    let mut slots = vec![Slot::Phi];
    slots.extend(std::iter::repeat_n(Slot::PhiSquared, i));
    slots.extend(std::iter::repeat_n(Slot::PsiCurvature, j));
    slots.extend(std::iter::repeat_n(Slot::Curvature, k - i - j - 1));
    let (c, poly) = (chart.clone(), p.clone());
    Ok(TotalForm::new(chart, 2 * k - 1, 0.0, move |pt, t| {
        eval_slots(&poly, &ConnectionAtPoint::new(&c, pt, t)?, &slots)
    }))
}

/// `P(Ω)` as a total-space `2k`-form.
pub fn characteristic_form(chart: &BundleChart, p: &InvariantPolynomial) -> Result<TotalForm<f64>> {
    check_polynomial(chart, p)?;
    let (c, poly) = (chart.clone(), p.clone());
    Ok(TotalForm::new(chart, 2 * p.degree(), 0.0, move |pt, t| {
        let data = ConnectionAtPoint::new(&c, pt, t)?;
        eval_slots(&poly, &data, &vec![Slot::Curvature; poly.degree()])
    }))
}

/// `P(Ψ)` as a total-space `2k`-form.
pub fn psi_characteristic_form(chart: &BundleChart, p: &InvariantPolynomial) -> Result<TotalForm<f64>> {
    check_polynomial(chart, p)?;
    chart.require_split()?;
    let (c, poly) = (chart.clone(), p.clone());
    Ok(TotalForm::new(chart, 2 * p.degree(), 0.0, move |pt, t| {
        let data = ConnectionAtPoint::new(&c, pt, t)?;
        eval_slots(&poly, &data, &vec![Slot::PsiCurvature; poly.degree()])
    }))
}

/// `P(F)` on the base chart.
pub fn base_characteristic_form(chart: &BundleChart, p: &InvariantPolynomial) -> Result<FormField<f64>> {
    check_polynomial(chart, p)?;
    let (c, poly) = (chart.clone(), p.clone());
    let n = chart.base_dim();
    Ok(FormField::new(n, 2 * p.degree(), 0.0, move |x, ts| {
        let tag = c.tag();
        let pt = TotalPoint::identity(x.to_vec(), tag.size());
        let tangents: Vec<TotalTangent> =
            ts.iter().map(|t| TotalTangent::horizontal_lift_free(t.to_vec(), tag)).collect();
        let data = ConnectionAtPoint::new(&c, &pt, &tangents)?;
        eval_slots(&poly, &data, &vec![Slot::Curvature; poly.degree()])
    }))
}

fn graded_bracket_values(
    a: &[LieAlgebraElement],
    a_deg: usize,
    b: &dyn Fn(&[usize]) -> LieAlgebraElement,
    b_deg: usize,
    tag: AlgebraTag,
    first_is_a: bool,
) -> LieAlgebraElement {
    // [α, β] with α a 1-form given by values on single tangents.
    let mut acc = LieAlgebraElement::zero(tag);
    let degrees = if first_is_a { [a_deg, b_deg] } else { [b_deg, a_deg] };
    for s in shuffles(&degrees) {
        let (ia, ib) = if first_is_a { (&s.blocks[0], &s.blocks[1]) } else { (&s.blocks[1], &s.blocks[0]) };
        let u = a[ia[0]].clone();
        let v = b(ib);
        let br = if first_is_a { u.commutator(&v) } else { v.commutator(&u) };
        acc = &acc + &br.scale(s.sign);
    }
    acc
}

/// `|(dΩ + [ψ,Ω] - [Ω,φ])(X₁, X₂, X₃)|` (max entry), with `dΩ` by finite differences.
pub fn covariant_derivative_residual(
    chart: &BundleChart,
    p: &TotalPoint,
    tangents: &[TotalTangent],
    fd: FdOptions,
) -> Result<f64> {
    chart.require_split()?;
    if tangents.len() != 3 {
        return domain("the covariant derivative of Ω is a 3-form");
    }
    let d_omega = exterior_derivative_at(&curvature_form(chart), p, tangents, fd)?;
    let data = ConnectionAtPoint::new(chart, p, tangents)?;
    let tag = chart.tag();
    let curv = |idx: &[usize]| data.curvature[idx[0]][idx[1]].clone();
    let psi_om = graded_bracket_values(&data.psi, 1, &curv, 2, tag, true);
    let om_phi = graded_bracket_values(&data.phi, 1, &curv, 2, tag, false);
    Ok((&(&d_omega + &psi_om) - &om_phi).max_abs())
}

/// `|dΦP(ω) - (P(Ω) - P(Ψ))|` on `2k` tangents at `p`.
pub fn heterotic_residual(
    chart: &BundleChart,
    poly: &InvariantPolynomial,
    p: &TotalPoint,
    tangents: &[TotalTangent],
    fd: FdOptions,
) -> Result<f64> {
    let phi = phi_p_form(chart, poly)?;
    if tangents.len() != 2 * poly.degree() {
        return domain(format!("heterotic identity needs {} tangents", 2 * poly.degree()));
    }
    let lhs = exterior_derivative_at(&phi, p, tangents, fd)?;
    let data = ConnectionAtPoint::new(chart, p, tangents)?;
    let k = poly.degree();
    let rhs = eval_slots(poly, &data, &vec![Slot::Curvature; k])? - eval_slots(poly, &data, &vec![Slot::PsiCurvature; k])?;
    Ok((lhs - rhs).abs())
}

/// `|dTP(ω) - P(Ω)|` on `2k` tangents at `p`.
pub fn transgression_residual(
    chart: &BundleChart,
    poly: &InvariantPolynomial,
    p: &TotalPoint,
    tangents: &[TotalTangent],
    fd: FdOptions,
) -> Result<f64> {
    let tp = tp_form(chart, poly)?;
    if tangents.len() != 2 * poly.degree() {
        return domain(format!("transgression identity needs {} tangents", 2 * poly.degree()));
    }
    let lhs = exterior_derivative_at(&tp, p, tangents, fd)?;
    let data = ConnectionAtPoint::new(chart, p, tangents)?;
    let rhs = eval_slots(poly, &data, &vec![Slot::Curvature; poly.degree()])?;
    Ok((lhs - rhs).abs())
}

// ---------------------------------------------------------------------------
// Fiber integrals

/// Project a matrix onto `𝔤` in an orthonormal basis.
fn project_to_algebra(chart: &BundleChart, m: Matrix) -> LieAlgebraElement {
    let raw = LieAlgebraElement::from_matrix_unchecked(chart.tag(), m);
    let c = raw.coordinates(chart.algebra_basis());
    LieAlgebraElement::combination(chart.tag(), chart.algebra_basis(), &c)
}

/// `g⁻¹ ∂g` along `v` for a group-valued map, by Richardson central differences.
pub(crate) fn left_log_derivative<G>(chart: &BundleChart, g: &G, u: &[f64], v: &[f64]) -> Result<LieAlgebraElement>
where
    G: Fn(&[f64]) -> Result<Matrix> + ?Sized,
{
    let g0 = g(u)?;
    let fd = FdOptions::with_richardson(1e-3);
    let d: MatrixValue = fd.directional(u, v, |w| Ok(MatrixValue(g(w)?)))?;
    Ok(project_to_algebra(chart, g0.adjoint() * d.0))
}

#[derive(Clone)]
pub(crate) struct MatrixValue(pub Matrix);

impl FormValue for MatrixValue {
    fn add_scaled(&mut self, other: &Self, s: f64) {
        self.0 += &other.0 * num_complex::Complex64::new(s, 0.0);
    }
    fn scaled(&self, s: f64) -> Self {
        MatrixValue(&self.0 * num_complex::Complex64::new(s, 0.0))
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Sign of the fiber parametrization against the orientation of `G/H` given
/// by the ordered orthonormal basis of `𝔭`, sampled at the centre of the box.
pub fn fiber_orientation(chart: &BundleChart, lift_index: usize) -> Result<f64> {
    let fiber = chart.fiber.as_ref().map_or_else(|| domain("no fiber parametrization"), Ok)?;
    let lift = fiber.lifts.get(lift_index).map_or_else(|| domain("no such lift"), Ok)?;
    let p_basis: Vec<LieAlgebraElement> = match &chart.split {
        Some(s) => s.p_basis().to_vec(),
        None => chart.algebra_basis().to_vec(),
    };
    let d = fiber.dim();
    if p_basis.len() != d {
        return domain("fiber dimension differs from dim 𝔭");
    }
    let u: Vec<f64> = fiber.domain.iter().map(|(a, b)| 0.5 * (a + b) + 0.0123 * (b - a)).collect();
    let mut m = nalgebra::DMatrix::<f64>::zeros(d, d);
    for c in 0..d {
        let mut e = vec![0.0; d];
        e[c] = 1.0;
        let xi = left_log_derivative(chart, lift.as_ref(), &u, &e)?;
        for (r, b) in p_basis.iter().enumerate() {
            m[(r, c)] = xi.inner(b);
        }
    }
    let det = m.determinant();
    if det.abs() < 1e-10 {
        return domain("fiber parametrization is degenerate at the sample point");
    }
    Ok(det.signum())
}

/// `∫_{π⁻¹(x)} α` over the `G/H` fiber at base point `x`, using the given lift.
pub fn fiber_integral_with_lift(
    form: &TotalForm<f64>,
    x: &[f64],
    quad_order: usize,
    lift_index: usize,
) -> Result<f64> {
    let chart = form.chart.as_ref();
    let fiber = match &chart.fiber {
        Some(f) => f,
        None => return domain(format!("bundle {} has no fiber parametrization", chart.name())),
    };
    if form.degree != fiber.dim() {
        return domain(format!("{}-form integrated over a {}-dimensional fiber", form.degree, fiber.dim()));
    }
    let lift = fiber.lifts.get(lift_index).map_or_else(|| domain("no such lift"), Ok)?.clone();
    let orientation = fiber_orientation(chart, lift_index)?;
    let d = fiber.dim();
    let n = chart.base_dim();
    let value = integrate_box(&fiber.domain, quad_order, |u| {
        let g = lift(u)?;
        let tangents: Vec<TotalTangent> = (0..d)
            .map(|c| {
                let mut e = vec![0.0; d];
                e[c] = 1.0;
                Ok(TotalTangent::vertical(n, left_log_derivative(chart, lift.as_ref(), u, &e)?))
            })
            .collect::<Result<_>>()?;
        form.evaluate(&TotalPoint::new(x.to_vec(), g), &tangents)
    })?;
    Ok(orientation * value / fiber.multiplicity)
}

/// `∫_{π⁻¹(x)} α` with the primary lift.
pub fn fiber_integral(form: &TotalForm<f64>, x: &[f64], quad_order: usize) -> Result<f64> {
    fiber_integral_with_lift(form, x, quad_order, 0)
}

// ---------------------------------------------------------------------------
// Sections and the obstruction identity

/// Rotation taking `e₁` to the unit vector `v` along the great circle:
/// `R = I + W + W²/(1 + v₁)` with `W = v e₁ᵀ - e₁ vᵀ`. Singular only at `v = -e₁` for `n > 2`;
/// for `n = 2` this is the plane rotation by the angle of `v`.
pub fn minimal_rotation(v: &[f64]) -> Result<Matrix> {
    let n = v.len();
    let c = v[0];
    if n == 2 {
        let r = nalgebra::DMatrix::<f64>::from_row_slice(2, 2, &[c, -v[1], v[1], c]);
        return Ok(r.map(|x| num_complex::Complex64::new(x, 0.0)));
    }
    if 1.0 + c < 1e-12 {
        return domain("minimal rotation is singular at -e1");
    }
    let w = nalgebra::DMatrix::<f64>::from_fn(n, n, |r, col| {
        let a = if col == 0 { v[r] } else { 0.0 };
        let b = if r == 0 { v[col] } else { 0.0 };
        a - b
    });
    let r = nalgebra::DMatrix::<f64>::identity(n, n) + &w + &w * &w / (1.0 + c);
    Ok(r.map(|x| num_complex::Complex64::new(x, 0.0)))
}

type VectorField = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// A zero of a section, in base coordinates (`None` for a point outside the chart).
#[derive(Debug, Clone, PartialEq)]
pub struct SectionZero {
    pub label: String,
    pub point: Option<Vec<f64>>,
    pub index: i64,
}

/// A section of the sphere bundle given by a vector field in frame components,
/// normalised where it does not vanish, with its zeros and their indices.
#[derive(Clone)]
pub struct SectionWithZeros {
    name: String,
    field: Arc<VectorField>,
    zeros: Vec<SectionZero>,
}

impl std::fmt::Debug for SectionWithZeros {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectionWithZeros")
            .field("name", &self.name)
            .field("zeros", &self.zeros)
            .finish_non_exhaustive()
    }
}

impl SectionWithZeros {
    pub fn new<F>(name: impl Into<String>, field: F, zeros: Vec<SectionZero>) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        SectionWithZeros {
            name: name.into(),
            field: Arc::new(field),
            zeros,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn zeros(&self) -> &[SectionZero] {
        &self.zeros
    }

    /// Unit vector `s(x)`; errors where the field vanishes.
    pub fn unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = (self.field)(x)?;
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return domain(format!("section {} vanishes at {x:?}", self.name));
        }
        Ok(v.iter().map(|a| a / norm).collect())
    }

    /// Lift to the frame bundle: `x ↦ g(x)` with `g(x)e₁ = s(x)`.
    pub fn frame_lift(&self, x: &[f64]) -> Result<Matrix> {
        minimal_rotation(&self.unit(x)?)
    }

    /// `s*(α)` as a form on the base chart, for a total-space form `α`.
    pub fn pull_back(&self, form: &TotalForm<f64>) -> FormField<f64> {
        let (s, f) = (self.clone(), form.clone());
        let n = form.chart.base_dim();
        FormField::new(n, form.degree, 0.0, move |x, ts| {
            let chart = f.chart.as_ref();
            let g = s.frame_lift(x)?;
            if g.nrows() != chart.tag().size() {
                return domain("section lift and bundle group differ in size");
            }
            let lift = |y: &[f64]| s.frame_lift(y);
            let tangents: Vec<TotalTangent> = ts
                .iter()
                .map(|v| {
                    Ok(TotalTangent {
                        dx: v.to_vec(),
                        xi: left_log_derivative(chart, &lift, x, v)?,
                    })
                })
                .collect::<Result<_>>()?;
            f.evaluate(&TotalPoint::new(x.to_vec(), g), &tangents)
        })
    }
}

type ZeroFilter = dyn Fn(&SectionZero) -> bool + Send + Sync;

/// A chain in the base with its boundary given explicitly (degenerate faces omitted).
#[derive(Clone)]
pub struct BaseChain {
    pub name: String,
    pub chain: ParametrizedChain,
    pub boundary: Vec<ParametrizedChain>,
    contains: Arc<ZeroFilter>,
}

impl std::fmt::Debug for BaseChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BaseChain")
            .field("name", &self.name)
            .field("boundary_faces", &self.boundary.len())
            .finish_non_exhaustive()
    }
}

impl BaseChain {
    pub fn new<F>(name: impl Into<String>, chain: ParametrizedChain, boundary: Vec<ParametrizedChain>, contains: F) -> Self
    where
        F: Fn(&SectionZero) -> bool + Send + Sync + 'static,
    {
        BaseChain {
            name: name.into(),
            chain,
            boundary,
            contains: Arc::new(contains),
        }
    }

    pub fn contains(&self, z: &SectionZero) -> bool {
        (self.contains)(z)
    }
}

/// Both sides of `∫_α e(Ω) = Σ a_j + ∫_{∂α} s*(Φe(ω))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstructionReport {
    pub lhs: f64,
    pub index_sum: i64,
    pub boundary_term: f64,
    pub residual: f64,
}

/// Evaluate both sides of the obstruction identity on a chain.
pub fn obstruction_identity_check(
    chart: &BundleChart,
    poly: &InvariantPolynomial,
    chain: &BaseChain,
    section: &SectionWithZeros,
    quad_order: usize,
) -> Result<ObstructionReport> {
    let lhs = integrate(&base_characteristic_form(chart, poly)?, &chain.chain, quad_order)?;
    let phi = phi_p_form(chart, poly)?;
    let pulled = section.pull_back(&phi);
    let mut boundary_term = 0.0;
    for face in &chain.boundary {
        // A vanishing section on the boundary surfaces as a domain error here.
        boundary_term += integrate(&pulled, face, quad_order)?;
    }
    let index_sum: i64 = section.zeros.iter().filter(|z| chain.contains(z)).map(|z| z.index).sum();
    let residual = (lhs - index_sum as f64 - boundary_term).abs();
    Ok(ObstructionReport {
        lhs,
        index_sum,
        boundary_term,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariant_polynomials::make_polynomial;
    use crate::lie_algebras::{random_group_element, standard_split, Subgroup};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `A = Σ_i x_i B_i dx_{i+1}` plus constants; curvature varies in x.
    fn toy_potential(tag: AlgebraTag, n: usize, seed: u64) -> LocalPotential {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<LieAlgebraElement> = (0..n).map(|_| LieAlgebraElement::random(tag, &mut r, 0.7)).collect();
        let b: Vec<LieAlgebraElement> = (0..n).map(|_| LieAlgebraElement::random(tag, &mut r, 0.7)).collect();
        let (c2, b2) = (c.clone(), b.clone());
        LocalPotential::new(
            n,
            tag,
            move |x| Ok((0..n).map(|j| &c[j] + &b[j].scale(x[(j + 1) % n])).collect()),
            move |_| {
                let mut d = vec![vec![LieAlgebraElement::zero(tag); n]; n];
                for j in 0..n {
                    d[(j + 1) % n][j] = b2[j].clone();
                }
                let _ = &c2;
                Ok(d)
            },
        )
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn connection_examples() {
        let chart = BundleChart::new("toy", toy_potential(AlgebraTag::So(3), 2, 1));
        let mut r = rng();
        let xi = LieAlgebraElement::random(AlgebraTag::So(3), &mut r, 1.0);
        let p = TotalPoint::identity(vec![0.3, -0.2], 3);
        let w = connection_on_total_space(&chart, &p, &TotalTangent::vertical(2, xi.clone())).unwrap();
        assert!((&w - &xi).max_abs() < 1e-15);

        let flat = BundleChart::new("flat", LocalPotential::flat(2, AlgebraTag::So(3)));
        let g = random_group_element(AlgebraTag::So(3), &mut r, 1.0);
        let t = chart.random_tangent(&mut r);
        let w = connection_on_total_space(&flat, &TotalPoint::new(vec![0.1, 0.2], g), &t).unwrap();
        assert!((&w - &t.xi).max_abs() < 1e-15);

        // Equivariance under right translation.
        let g = random_group_element(AlgebraTag::So(3), &mut r, 1.0);
        let h = random_group_element(AlgebraTag::So(3), &mut r, 1.0);
        let p = TotalPoint::new(vec![0.5, 0.1], g);
        let w0 = connection_on_total_space(&chart, &p, &t).unwrap();
        let w1 = connection_on_total_space(&chart, &p.right_translate(&h), &t.right_translate(&h)).unwrap();
        assert!((&w1 - &w0.adjoint_action(&h.adjoint())).max_abs() < 1e-12);
    }

    #[test]
    fn curvature_is_horizontal_and_matches_structure_equation() {
        let chart = BundleChart::new("toy", toy_potential(AlgebraTag::U(2), 3, 2));
        let mut r = rng();
        let g = random_group_element(AlgebraTag::U(2), &mut r, 1.0);
        let p = TotalPoint::new(vec![0.2, -0.4, 0.1], g);
        let u = chart.random_tangent(&mut r);
        let v = TotalTangent::vertical(3, LieAlgebraElement::random(AlgebraTag::U(2), &mut r, 1.0));
        assert!(curvature_on_total_space(&chart, &p, &u, &v).unwrap().max_abs() < 1e-15);

        let w = connection_form(&chart);
        let t = [chart.random_tangent(&mut r), chart.random_tangent(&mut r)];
        let dw = exterior_derivative_at(&w, &p, &t, FdOptions::new(1e-4)).unwrap();
        let w0 = connection_on_total_space(&chart, &p, &t[0]).unwrap();
        let w1 = connection_on_total_space(&chart, &p, &t[1]).unwrap();
        let structure = &dw + &w0.commutator(&w1);
        let om = curvature_on_total_space(&chart, &p, &t[0], &t[1]).unwrap();
        assert!((&structure - &om).max_abs() < 1e-5, "{}", (&structure - &om).max_abs());
    }

    fn split_charts() -> Vec<BundleChart> {
        let (b1, b2) = crate::lie_algebras::so4_ideal_split();
        vec![
            BundleChart::new("so4/so3", toy_potential(AlgebraTag::So(4), 3, 3))
                .with_split(standard_split(AlgebraTag::So(4), Subgroup::SphereStabilizer).unwrap())
                .unwrap(),
            BundleChart::new("u2/u1", toy_potential(AlgebraTag::U(2), 3, 4))
                .with_split(standard_split(AlgebraTag::U(2), Subgroup::LowerRightUnitary(1)).unwrap())
                .unwrap(),
            BundleChart::new("u3/u2", toy_potential(AlgebraTag::U(3), 2, 8))
                .with_split(standard_split(AlgebraTag::U(3), Subgroup::LowerRightUnitary(2)).unwrap())
                .unwrap(),
            BundleChart::new("so4/b1", toy_potential(AlgebraTag::So(4), 3, 5)).with_split(b1).unwrap(),
            BundleChart::new("so4/b2", toy_potential(AlgebraTag::So(4), 3, 6)).with_split(b2).unwrap(),
        ]
    }

    #[test]
    fn psi_curvature_matches_structure_equation_of_psi() {
        let mut r = rng();
        for chart in split_charts() {
            let tag = chart.tag();
            let g = random_group_element(tag, &mut r, 1.0);
            let p = TotalPoint::new(vec![0.3, 0.1, -0.2][..chart.base_dim()].to_vec(), g);
            let t = [chart.random_tangent(&mut r), chart.random_tangent(&mut r)];
            let (_, psi) = split_forms(&chart).unwrap();
            let dpsi = exterior_derivative_at(&psi, &p, &t, FdOptions::new(1e-4)).unwrap();
            let (_, s0) = decompose(&chart, &p, &t[0]).unwrap();
            let (_, s1) = decompose(&chart, &p, &t[1]).unwrap();
            let lhs = &dpsi + &s0.commutator(&s1);
            let rhs = psi_curvature(&chart, &p, &t[0], &t[1]).unwrap();
            assert!((&lhs - &rhs).max_abs() < 1e-5, "{}: {}", chart.name(), (&lhs - &rhs).max_abs());
            let s = chart.split().unwrap();
            assert!((&s.project_h(&rhs) - &rhs).max_abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_lands_in_subspaces() {
        let mut r = rng();
        for chart in split_charts() {
            let s = chart.split().unwrap().clone();
            let g = random_group_element(chart.tag(), &mut r, 1.0);
            let p = TotalPoint::new(vec![0.1, 0.2, 0.3][..chart.base_dim()].to_vec(), g);
            let t = chart.random_tangent(&mut r);
            let (phi, psi) = decompose(&chart, &p, &t).unwrap();
            assert!((&s.project_p(&phi) - &phi).max_abs() < 1e-12);
            assert!((&s.project_h(&psi) - &psi).max_abs() < 1e-12);
            let w = connection_on_total_space(&chart, &p, &t).unwrap();
            assert!((&(&phi + &psi) - &w).max_abs() < 1e-14);
        }
        let trivial = BundleChart::new("u1", toy_potential(AlgebraTag::U(1), 2, 9))
            .with_split(standard_split(AlgebraTag::U(1), Subgroup::Trivial).unwrap())
            .unwrap();
        let whole = BundleChart::new("so3", toy_potential(AlgebraTag::So(3), 2, 9))
            .with_split(standard_split(AlgebraTag::So(3), Subgroup::Whole).unwrap())
            .unwrap();
        let p = TotalPoint::identity(vec![0.1, 0.2], 1);
        let t = trivial.random_tangent(&mut r);
        let (phi, psi) = decompose(&trivial, &p, &t).unwrap();
        assert_eq!(psi.max_abs(), 0.0);
        assert!((&phi - &connection_on_total_space(&trivial, &p, &t).unwrap()).max_abs() < 1e-15);
        let p = TotalPoint::identity(vec![0.1, 0.2], 3);
        let t = whole.random_tangent(&mut r);
        assert!(decompose(&whole, &p, &t).unwrap().0.max_abs() < 1e-15);
        let none = BundleChart::new("none", LocalPotential::flat(2, AlgebraTag::So(3)));
        assert!(decompose(&none, &p, &t).is_err());
    }

    #[test]
    fn heterotic_and_transgression_on_toy_charts() {
        let mut r = rng();
        let fd = FdOptions::new(1e-4);
        for chart in split_charts() {
            let polys: Vec<InvariantPolynomial> = match chart.tag() {
                AlgebraTag::So(4) => vec![make_polynomial("euler", 2, chart.tag()).unwrap(), make_polynomial("p1", 2, chart.tag()).unwrap()],
                AlgebraTag::U(2) => vec![make_polynomial("c1", 1, chart.tag()).unwrap(), make_polynomial("c2", 2, chart.tag()).unwrap()],
                _ => vec![make_polynomial("c2", 2, chart.tag()).unwrap(), make_polynomial("trace_power", 3, chart.tag()).unwrap()],
            };
            for poly in polys {
                for _ in 0..3 {
                    let g = random_group_element(chart.tag(), &mut r, 1.0);
                    let x: Vec<f64> = (0..chart.base_dim()).map(|_| standard_normal(&mut r) * 0.5).collect();
                    let p = TotalPoint::new(x, g);
                    let t: Vec<TotalTangent> = (0..2 * poly.degree()).map(|_| chart.random_tangent(&mut r)).collect();
                    let h = heterotic_residual(&chart, &poly, &p, &t, fd).unwrap();
                    assert!(h < 1e-5, "{} {poly}: {h}", chart.name());
                    let tr = transgression_residual(&chart, &poly, &p, &t, fd).unwrap();
                    assert!(tr < 1e-5, "{} {poly}: {tr}", chart.name());
                }
            }
        }
    }

    #[test]
    fn phi_p_is_horizontal_and_invariant() {
        let mut r = rng();
        for chart in split_charts() {
            let poly = match chart.tag() {
                AlgebraTag::So(4) => make_polynomial("euler", 2, chart.tag()).unwrap(),
                _ => make_polynomial("c2", 2, chart.tag()).unwrap(),
            };
            let form = phi_p_form(&chart, &poly).unwrap();
            let s = chart.split().unwrap().clone();
            for _ in 0..5 {
                let g = random_group_element(chart.tag(), &mut r, 1.0);
                let p = TotalPoint::new(vec![0.2, -0.1, 0.4][..chart.base_dim()].to_vec(), g);
                let mut t: Vec<TotalTangent> = (0..3).map(|_| chart.random_tangent(&mut r)).collect();
                let v = form.evaluate(&p, &t).unwrap();
                let h = s.random_subgroup_element(&mut r, 1.0);
                let moved: Vec<TotalTangent> = t.iter().map(|x| x.right_translate(&h)).collect();
                let v2 = form.evaluate(&p.right_translate(&h), &moved).unwrap();
                assert!((v - v2).abs() < 1e-10, "{}", chart.name());
                t[1] = chart.random_vertical_h(&mut r).unwrap();
                assert!(form.evaluate(&p, &t).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariant_derivative_of_curvature() {
        let mut r = rng();
        for chart in split_charts() {
            let g = random_group_element(chart.tag(), &mut r, 1.0);
            let p = TotalPoint::new(vec![0.2, 0.3, -0.1][..chart.base_dim()].to_vec(), g);
            let t: Vec<TotalTangent> = (0..3).map(|_| chart.random_tangent(&mut r)).collect();
            let res = covariant_derivative_residual(&chart, &p, &t, FdOptions::new(1e-4)).unwrap();
            assert!(res < 1e-5, "{}: {res}", chart.name());
        }
    }

    #[test]
    fn trivial_subgroup_collapses_phi_p_to_tp() {
        let chart = BundleChart::new("u1", toy_potential(AlgebraTag::U(1), 2, 12))
            .with_split(standard_split(AlgebraTag::U(1), Subgroup::Trivial).unwrap())
            .unwrap();
        let so = BundleChart::new("so4", toy_potential(AlgebraTag::So(4), 2, 13))
            .with_split(standard_split(AlgebraTag::So(4), Subgroup::Trivial).unwrap())
            .unwrap();
        let mut r = rng();
        for (c, poly) in [
            (chart, make_polynomial("c1", 1, AlgebraTag::U(1)).unwrap()),
            (so, make_polynomial("euler", 2, AlgebraTag::So(4)).unwrap()),
        ] {
            let g = random_group_element(c.tag(), &mut r, 1.0);
            let p = TotalPoint::new(vec![0.3, 0.7], g);
            let t: Vec<TotalTangent> = (0..2 * poly.degree() - 1).map(|_| c.random_tangent(&mut r)).collect();
            let a = phi_p_form(&c, &poly).unwrap().evaluate(&p, &t).unwrap();
            let b = tp_form(&c, &poly).unwrap().evaluate(&p, &t).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn minimal_rotation_maps_e1() {
        let v = [0.3, -0.5, 0.1, (1.0f64 - 0.09 - 0.25 - 0.01).sqrt()];
        let r = minimal_rotation(&v).unwrap();
        for (i, vi) in v.iter().enumerate() {
            assert!((r[(i, 0)].re - vi).abs() < 1e-14);
        }
        let rt = r.transpose() * &r;
        assert!((rt - Matrix::identity(4, 4)).iter().all(|z| z.norm() < 1e-13));
        assert!(minimal_rotation(&[-1.0, 0.0, 0.0]).is_err());
        let r = minimal_rotation(&[-1.0, 0.0]).unwrap();
        assert!((r[(1, 1)].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_must_match_bundle() {
        let chart = BundleChart::new("so4", LocalPotential::flat(2, AlgebraTag::So(4)));
        let c1 = make_polynomial("c1", 1, AlgebraTag::U(2)).unwrap();
        assert!(tp_form(&chart, &c1).is_err());
        let e = make_polynomial("euler", 2, AlgebraTag::So(4)).unwrap();
        assert!(phi_p_form(&chart, &e).is_err());
    }
}
