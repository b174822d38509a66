//! Differential forms on open subsets of `ℝ^d` represented by their pointwise
//! evaluators, with wedge and graded bracket, finite-difference exterior
//! derivative, pullback and Gauss–Legendre integration over parametrized boxes.
//!
//! Alternation convention: a product of forms of degrees `p₁,…,p_k` is
//! evaluated as the signed sum over all permutations of the tangents weighted
//! by `1/(p₁!⋯p_k!)`, which equals the signed sum over shuffles. Hence
//! `(α∧β)(X,Y) = α(X)β(Y) - α(Y)β(X)` and `[ω,ω](X,Y) = 2[ω(X),ω(Y)]`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, Result};
use crate::lie_algebras::LieAlgebraElement;

/// Values a form can take: real scalars or Lie algebra elements.
pub trait FormValue: Clone + Send + Sync + 'static {
    fn add_scaled(&mut self, other: &Self, s: f64);
    fn scaled(&self, s: f64) -> Self;
    fn magnitude(&self) -> f64;
}

impl FormValue for f64 {
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self += s * other;
    }
    fn scaled(&self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl FormValue for LieAlgebraElement {
    fn add_scaled(&mut self, other: &Self, s: f64) {
        *self = &*self + &other.scale(s);
    }
    fn scaled(&self, s: f64) -> Self {
        self.scale(s)
    }
    fn magnitude(&self) -> f64 {
        self.max_abs()
    }
}

type Evaluator<V> = dyn Fn(&[f64], &[&[f64]]) -> Result<V> + Send + Sync;

/// A `p`-form on a `d`-dimensional chart, alternating and multilinear in the tangents.
#[derive(Clone)]
pub struct FormField<V: FormValue> {
    dim: usize,
    degree: usize,
    zero: V,
    eval: Arc<Evaluator<V>>,
}

impl<V: FormValue> std::fmt::Debug for FormField<V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FormField")
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .finish_non_exhaustive()
    }
}

impl<V: FormValue> FormField<V> {
    /// Wrap an evaluator. `zero` is the additive identity of the value type and
    /// fixes the algebra of Lie-valued forms.
    pub fn new<F>(dim: usize, degree: usize, zero: V, eval: F) -> Self
    where
        F: Fn(&[f64], &[&[f64]]) -> Result<V> + Send + Sync + 'static,
    {
        FormField {
            dim,
            degree,
            zero,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn zero_value(&self) -> &V {
        &self.zero
    }

    pub fn evaluate(&self, point: &[f64], tangents: &[&[f64]]) -> Result<V> {
        if point.len() != self.dim {
            return domain(format!("point has dimension {}, chart has {}", point.len(), self.dim));
        }
        if tangents.len() != self.degree {
            return domain(format!("{}-form evaluated on {} tangents", self.degree, tangents.len()));
        }
        if let Some(t) = tangents.iter().find(|t| t.len() != self.dim) {
            return domain(format!("tangent has dimension {}, chart has {}", t.len(), self.dim));
        }
        if point.iter().any(|c| !c.is_finite()) {
            return domain("chart point has non-finite coordinates");
        }
        (self.eval)(point, tangents)
    }

    /// Convenience wrapper taking owned tangent vectors.
    pub fn eval_vecs(&self, point: &[f64], tangents: &[Vec<f64>]) -> Result<V> {
        let refs: Vec<&[f64]> = tangents.iter().map(|t| t.as_slice()).collect();
        self.evaluate(point, &refs)
    }

    pub fn scale(&self, s: f64) -> Self {
        let inner = self.clone();
        FormField::new(self.dim, self.degree, self.zero.clone(), move |x, t| {
            Ok(inner.evaluate(x, t)?.scaled(s))
        })
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        if self.dim != other.dim || self.degree != other.degree {
            return domain("adding forms of different dimension or degree");
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(FormField::new(self.dim, self.degree, self.zero.clone(), move |x, t| {
            let mut v = a.evaluate(x, t)?;
            v.add_scaled(&b.evaluate(x, t)?, s);
            Ok(v)
        }))
    }
}

impl FormField<f64> {
    /// A function as a 0-form.
    pub fn function<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        FormField::new(dim, 0, 0.0, move |x, _| f(x))
    }

    /// The coordinate differential `dx_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        FormField::new(dim, 1, 0.0, move |_, t| Ok(t[0][i]))
    }

    /// `Σ_i c_i(x) dx_i`.
    pub fn one_form<F>(dim: usize, coeffs: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        FormField::new(dim, 1, 0.0, move |x, t| {
            let c = coeffs(x)?;
            Ok(c.iter().zip(t[0]).map(|(a, b)| a * b).sum())
        })
    }
}

// ---------------------------------------------------------------------------
// Shuffles

/// A shuffle of blocks of sizes `p₁,…,p_k`: `blocks[m]` lists the tangent
/// indices fed to the `m`-th factor, increasing within each block.
#[derive(Debug, Clone, PartialEq)]
pub struct Shuffle {
    pub sign: f64,
    pub blocks: Vec<Vec<usize>>,
}

/// All shuffles for the given block sizes; there are `(Σp)!/(Πp!)` of them.
pub fn shuffles(degrees: &[usize]) -> Vec<Shuffle> {
    let total: usize = degrees.iter().sum();
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = degrees.iter().map(|&p| Vec::with_capacity(p)).collect();
    fill(degrees, 0, total, &mut blocks, &mut out);
    out
}

fn fill(
    degrees: &[usize],
    pos: usize,
    total: usize,
    blocks: &mut Vec<Vec<usize>>,
    out: &mut Vec<Shuffle>,
) {
    if pos == total {
        // Sign of the permutation listing blocks in order: count inversions.
        let order: Vec<usize> = blocks.iter().flatten().copied().collect();
        let mut inversions = 0usize;
        for a in 0..order.len() {
            for b in (a + 1)..order.len() {
                if order[a] > order[b] {
                    inversions += 1;
                }
            }
        }
        let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        out.push(Shuffle {
            sign,
            blocks: blocks.clone(),
        });
        return;
    }
    for m in 0..degrees.len() {
        if blocks[m].len() < degrees[m] {
            blocks[m].push(pos);
            fill(degrees, pos + 1, total, blocks, out);
            blocks[m].pop();
        }
    }
}

fn pick<'a>(tangents: &[&'a [f64]], idx: &[usize]) -> Vec<&'a [f64]> {
    idx.iter().map(|&i| tangents[i]).collect()
}

/// Exterior product of scalar forms.
pub fn wedge(alpha: &FormField<f64>, beta: &FormField<f64>) -> Result<FormField<f64>> {
    if alpha.dim != beta.dim {
        return domain(format!("wedge of forms on charts of dimension {} and {}", alpha.dim, beta.dim));
    }
    let (a, b) = (alpha.clone(), beta.clone());
    let sh = shuffles(&[a.degree, b.degree]);
    Ok(FormField::new(a.dim, a.degree + b.degree, 0.0, move |x, t| {
        let mut acc = 0.0;
        for s in &sh {
            acc += s.sign * a.evaluate(x, &pick(t, &s.blocks[0]))? * b.evaluate(x, &pick(t, &s.blocks[1]))?;
        }
        Ok(acc)
    }))
}

/// Graded bracket `[α, β]` of Lie-valued forms.
pub fn bracket_wedge(
    alpha: &FormField<LieAlgebraElement>,
    beta: &FormField<LieAlgebraElement>,
) -> Result<FormField<LieAlgebraElement>> {
    if alpha.dim != beta.dim {
        return domain("bracket of forms on different charts");
    }
    if alpha.zero.tag() != beta.zero.tag() {
        return domain(format!("bracket of {} and {} valued forms", alpha.zero.tag(), beta.zero.tag()));
    }
    let (a, b) = (alpha.clone(), beta.clone());
    let sh = shuffles(&[a.degree, b.degree]);
    let zero = a.zero.clone();
    Ok(FormField::new(a.dim, a.degree + b.degree, zero.clone(), move |x, t| {
        let mut acc = zero.clone();
        for s in &sh {
            let u = a.evaluate(x, &pick(t, &s.blocks[0]))?;
            let v = b.evaluate(x, &pick(t, &s.blocks[1]))?;
            acc.add_scaled(&u.bracket(&v)?, s.sign);
        }
        Ok(acc)
    }))
}

// ---------------------------------------------------------------------------
// Exterior derivative

/// Finite-difference settings. With `richardson` the central difference at
/// steps `h` and `h/2` is combined to cancel the `h²` error term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub step: f64,
    pub richardson: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            step: 1e-4,
            richardson: false,
        }
    }
}

impl FdOptions {
    pub fn new(step: f64) -> Self {
        FdOptions {
            step,
            richardson: false,
        }
    }

    pub fn with_richardson(step: f64) -> Self {
        FdOptions {
            step,
            richardson: true,
        }
    }

    /// Directional derivative of `f` at `x` along `v`.
    pub fn directional<V: FormValue, F>(&self, x: &[f64], v: &[f64], f: F) -> Result<V>
    where
        F: Fn(&[f64]) -> Result<V>,
    {
        let central = |h: f64| -> Result<V> {
            let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
            let mut d = f(&plus)?;
            d.add_scaled(&f(&minus)?, -1.0);
            Ok(d.scaled(0.5 / h))
        };
        let coarse = central(self.step)?;
        if !self.richardson {
            return Ok(coarse);
        }
        let mut fine = central(0.5 * self.step)?.scaled(4.0 / 3.0);
        fine.add_scaled(&coarse, -1.0 / 3.0);
        Ok(fine)
    }
}

/// `dα(X₀,…,X_p) = Σ (-1)^i X_i[α(X₀,…,X̂_i,…,X_p)]` for constant vector fields.
pub fn exterior_derivative<V: FormValue>(alpha: &FormField<V>, fd: FdOptions) -> FormField<V> {
    let a = alpha.clone();
    let zero = alpha.zero.clone();
    FormField::new(alpha.dim, alpha.degree + 1, zero.clone(), move |x, t| {
        let mut acc = zero.clone();
        for i in 0..t.len() {
            let rest: Vec<&[f64]> = t.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
            let d = fd.directional(x, t[i], |y| a.evaluate(y, &rest))?;
            acc.add_scaled(&d, if i % 2 == 0 { 1.0 } else { -1.0 });
        }
        Ok(acc)
    })
}

// ---------------------------------------------------------------------------
// Maps, pullback, chains

type PointMap = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;
type JacobianMap = dyn Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// A smooth map between charts; the tangent map is analytic if supplied,
/// otherwise a Richardson-extrapolated central difference.
#[derive(Clone)]
pub struct SmoothMap {
    source_dim: usize,
    target_dim: usize,
    map: Arc<PointMap>,
    jacobian: Option<Arc<JacobianMap>>,
    fd: FdOptions,
}

impl std::fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothMap")
            .field("source_dim", &self.source_dim)
            .field("target_dim", &self.target_dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(source_dim: usize, target_dim: usize, map: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        SmoothMap {
            source_dim,
            target_dim,
            map: Arc::new(map),
            jacobian: None,
            fd: FdOptions::with_richardson(1e-3),
        }
    }

    /// Attach an analytic Jacobian (`target_dim × source_dim`).
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_fd(mut self, fd: FdOptions) -> Self {
        self.fd = fd;
        self
    }

    pub fn identity(dim: usize) -> Self {
        SmoothMap::new(dim, dim, |x| Ok(x.to_vec())).with_jacobian(move |_| Ok(DMatrix::identity(dim, dim)))
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.source_dim {
            return domain(format!("map expects {} coordinates, got {}", self.source_dim, x.len()));
        }
        let y = (self.map)(x)?;
        if y.len() != self.target_dim {
            return domain("map returned a point of the wrong dimension");
        }
        Ok(y)
    }

    pub fn push_forward(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        if let Some(j) = &self.jacobian {
            let jm = j(x)?;
            return Ok((0..self.target_dim)
                .map(|r| (0..self.source_dim).map(|c| jm[(r, c)] * v[c]).sum())
                .collect());
        }
        let map = &self.map;
        let d: VecValue = self.fd.directional(x, v, |y| Ok(VecValue(map(y)?)))?;
        Ok(d.0)
    }
}

#[derive(Clone)]
struct VecValue(Vec<f64>);

impl FormValue for VecValue {
    fn add_scaled(&mut self, other: &Self, s: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }
    fn scaled(&self, s: f64) -> Self {
        VecValue(self.0.iter().map(|a| a * s).collect())
    }
    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// `(f*α)(X…) = α(f(x); df X…)`.
pub fn pullback<V: FormValue>(alpha: &FormField<V>, f: &SmoothMap) -> Result<FormField<V>> {
    if f.target_dim != alpha.dim {
        return domain(format!("map lands in dimension {}, form lives in {}", f.target_dim, alpha.dim));
    }
    let (a, f) = (alpha.clone(), f.clone());
    Ok(FormField::new(f.source_dim, alpha.degree, alpha.zero.clone(), move |x, t| {
        let y = f.apply(x)?;
        let pushed: Vec<Vec<f64>> = t.iter().map(|v| f.push_forward(x, v)).collect::<Result<_>>()?;
        a.eval_vecs(&y, &pushed)
    }))
}

/// A smooth map from a box `Π[a_i, b_i]` with an orientation sign.
#[derive(Debug, Clone)]
pub struct ParametrizedChain {
    domain: Vec<(f64, f64)>,
    map: SmoothMap,
    orientation: f64,
}

impl ParametrizedChain {
    pub fn new(domain_box: Vec<(f64, f64)>, map: SmoothMap) -> Result<Self> {
        if domain_box.len() != map.source_dim {
            return domain("chain domain and map source dimensions differ");
        }
        Ok(ParametrizedChain {
            domain: domain_box,
            map,
            orientation: 1.0,
        })
    }

    pub fn param_dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn reversed(&self) -> Self {
        let mut c = self.clone();
        c.orientation = -c.orientation;
        c
    }

    /// Boundary faces, oriented outward-normal-first: the face `u_i = b_i`
    /// carries sign `(-1)^i` and `u_i = a_i` carries `-(-1)^i`.
    pub fn boundary(&self) -> Vec<ParametrizedChain> {
        let p = self.param_dim();
        let mut faces = Vec::with_capacity(2 * p);
        for i in 0..p {
            for (end, sign) in [(self.domain[i].1, 1.0), (self.domain[i].0, -1.0)] {
                let parity = if i % 2 == 0 { 1.0 } else { -1.0 };
                let inner = self.map.clone();
                let lift = move |u: &[f64]| {
                    let mut full = Vec::with_capacity(p);
                    full.extend_from_slice(&u[..i]);
                    full.push(end);
                    full.extend_from_slice(&u[i..]);
                    full
                };
                let lift2 = lift;
                let inner2 = inner.clone();
                let mut map = SmoothMap::new(p - 1, inner.target_dim, move |u| inner.apply(&lift(u)));
                map.jacobian = Some(Arc::new(move |u: &[f64]| {
                    let full = lift2(u);
                    let cols: Vec<Vec<f64>> = (0..p)
                        .filter(|&c| c != i)
                        .map(|c| {
                            let mut e = vec![0.0; p];
                            e[c] = 1.0;
                            inner2.push_forward(&full, &e)
                        })
                        .collect::<Result<_>>()?;
                    Ok(DMatrix::from_fn(inner2.target_dim, p - 1, |r, c| cols[c][r]))
                }));
                let mut dom = self.domain.clone();
                dom.remove(i);
                faces.push(ParametrizedChain {
                    domain: dom,
                    map,
                    orientation: self.orientation * sign * parity,
                });
            }
        }
        faces
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor-product Gauss–Legendre quadrature of `f` over a box.
pub fn integrate_box<F>(domain_box: &[(f64, f64)], order: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if order == 0 {
        return domain("quadrature order must be positive");
    }
    let (nodes, weights) = gauss_legendre(order);
    let p = domain_box.len();
    let mut idx = vec![0usize; p];
    let mut u = vec![0.0; p];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for d in 0..p {
            let (a, b) = domain_box[d];
            let half = 0.5 * (b - a);
            u[d] = a + half * (nodes[idx[d]] + 1.0);
            w *= half * weights[idx[d]];
        }
        total += w * f(&u)?;
        let mut d = 0;
        loop {
            if d == p {
                return Ok(total);
            }
            idx[d] += 1;
            if idx[d] < order {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// `∫_chain α` by product quadrature of the pulled-back density.
pub fn integrate(alpha: &FormField<f64>, chain: &ParametrizedChain, quad_order: usize) -> Result<f64> {
    if alpha.degree != chain.param_dim() {
        return domain(format!(
            "cannot integrate a {}-form over a {}-chain",
            alpha.degree,
            chain.param_dim()
        ));
    }
    if chain.map.target_dim != alpha.dim {
        return domain("chain does not land in the form's chart");
    }
    let p = chain.param_dim();
    let basis: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            e
        })
        .collect();
    let value = integrate_box(&chain.domain, quad_order, |u| {
        let x = chain.map.apply(u)?;
        let tangents: Vec<Vec<f64>> = basis.iter().map(|e| chain.map.push_forward(u, e)).collect::<Result<_>>()?;
        alpha.eval_vecs(&x, &tangents)
    })?;
    Ok(chain.orientation * value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebras::{AlgebraTag, Matrix};
    use num_complex::Complex64;

    #[test]
    fn shuffle_counts_and_signs() {
        assert_eq!(shuffles(&[1, 1]).len(), 2);
        assert_eq!(shuffles(&[1, 2]).len(), 3);
        assert_eq!(shuffles(&[2, 2]).len(), 6);
        assert_eq!(shuffles(&[1, 1, 2]).len(), 12);
        let s = shuffles(&[1, 1]);
        assert_eq!(s[0].blocks, vec![vec![0], vec![1]]);
        assert_eq!(s[0].sign, 1.0);
        assert_eq!(s[1].sign, -1.0);
        assert_eq!(shuffles(&[0, 0]).len(), 1);
    }

    #[test]
    fn wedge_examples() {
        let dx = FormField::coordinate(2, 0);
        let dy = FormField::coordinate(2, 1);
        let w = wedge(&dx, &dy).unwrap();
        assert_eq!(w.eval_vecs(&[0.3, 0.4], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 1.0);
        let z = wedge(&dx, &dx).unwrap();
        assert_eq!(z.eval_vecs(&[0.0, 0.0], &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), 0.0);
        assert!(wedge(&dx, &FormField::coordinate(3, 0)).is_err());
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1, 2, 5, 10, 24] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let approx: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((approx - exact).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn unit_square_and_orientation() {
        let area = wedge(&FormField::coordinate(2, 0), &FormField::coordinate(2, 1)).unwrap();
        let chain = ParametrizedChain::new(vec![(0.0, 1.0), (0.0, 1.0)], SmoothMap::identity(2)).unwrap();
        assert!((integrate(&area, &chain, 4).unwrap() - 1.0).abs() < 1e-14);
        assert!((integrate(&area, &chain.reversed(), 4).unwrap() + 1.0).abs() < 1e-14);
        assert!(integrate(&FormField::coordinate(2, 0), &chain, 4).is_err());
    }

    #[test]
    fn sphere_area() {
        // Round area form on ℝ³ restricted to the unit sphere: ι_x (dx∧dy∧dz).
        let area = FormField::new(3, 2, 0.0, |x, t| {
            let (a, b) = (t[0], t[1]);
            let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
            Ok((x[0] * cross[0] + x[1] * cross[1] + x[2] * cross[2]) / (4.0 * std::f64::consts::PI))
        });
        let map = SmoothMap::new(2, 3, |u| {
            Ok(vec![u[0].sin() * u[1].cos(), u[0].sin() * u[1].sin(), u[0].cos()])
        });
        let chain =
            ParametrizedChain::new(vec![(0.0, std::f64::consts::PI), (0.0, std::f64::consts::TAU)], map).unwrap();
        assert!((integrate(&area, &chain, 24).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn derivative_examples() {
        let x_dy = FormField::one_form(2, |x| Ok(vec![0.0, x[0]]));
        let d = exterior_derivative(&x_dy, FdOptions::default());
        let v = d.eval_vecs(&[0.2, -0.7], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((v - 1.0).abs() < 1e-10);

        let f = FormField::function(3, |x| Ok((x[0] * x[1]).sin() + x[2].exp()));
        let ddf = exterior_derivative(&exterior_derivative(&f, FdOptions::default()), FdOptions::default());
        let r = ddf.eval_vecs(&[0.1, 0.5, -0.3], &[vec![1.0, 0.2, 0.0], vec![0.0, 1.0, -0.4]]).unwrap();
        assert!(r.abs() < 1e-6);
    }

    #[test]
    fn maurer_cartan_structure_equation() {
        // θ = g⁻¹dg on U(2) via g = exp(Σ y_a T_a); dθ + ½[θ,θ] = 0.
        let tag = AlgebraTag::U(2);
        let basis = tag.orthonormal_basis();
        let b2 = basis.clone();
        let theta = FormField::new(4, 1, LieAlgebraElement::zero(tag), move |y, t| {
            let g = crate::lie_algebras::exp(LieAlgebraElement::combination(tag, &b2, y).matrix());
            let fd = FdOptions::with_richardson(1e-3);
            let dg: MatrixValue = fd.directional(y, t[0], |z| {
                Ok(MatrixValue(crate::lie_algebras::exp(LieAlgebraElement::combination(tag, &b2, z).matrix())))
            })?;
            LieAlgebraElement::new(tag, g.adjoint() * dg.0, 1e-6)
        });
        let d_theta = exterior_derivative(&theta, FdOptions::with_richardson(1e-3));
        let sq = bracket_wedge(&theta, &theta).unwrap();
        let structure = d_theta.add_scaled(&sq, 0.5).unwrap();
        let res = structure
            .eval_vecs(&[0.3, -0.2, 0.5, 0.1], &[vec![1.0, 0.5, 0.0, -0.3], vec![0.2, -1.0, 0.7, 0.4]])
            .unwrap();
        assert!(res.max_abs() < 1e-6, "{}", res.max_abs());
        let _ = basis;
    }

    #[derive(Clone)]
    struct MatrixValue(Matrix);

    impl FormValue for MatrixValue {
        fn add_scaled(&mut self, other: &Self, s: f64) {
            self.0 += &other.0 * Complex64::new(s, 0.0);
        }
        fn scaled(&self, s: f64) -> Self {
            MatrixValue(&self.0 * Complex64::new(s, 0.0))
        }
        fn magnitude(&self) -> f64 {
            self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
        }
    }

    #[test]
    fn pullback_examples() {
        let alpha = FormField::one_form(2, |x| Ok(vec![x[1], x[0] * x[0]]));
        let id = pullback(&alpha, &SmoothMap::identity(2)).unwrap();
        let t = vec![vec![0.3, 0.9]];
        assert_eq!(id.eval_vecs(&[0.5, 0.2], &t).unwrap(), alpha.eval_vecs(&[0.5, 0.2], &t).unwrap());
        let constant = SmoothMap::new(3, 2, |_| Ok(vec![1.0, 2.0]));
        let c = pullback(&alpha, &constant).unwrap();
        assert!(c.eval_vecs(&[0.1, 0.2, 0.3], &[vec![1.0, 1.0, 1.0]]).unwrap().abs() < 1e-12);
        assert!(pullback(&alpha, &SmoothMap::identity(3)).is_err());
    }

    #[test]
    fn bracket_examples() {
        let tag = AlgebraTag::So(3);
        let b = tag.orthonormal_basis();
        let b1 = b.clone();
        let omega = FormField::new(2, 1, LieAlgebraElement::zero(tag), move |x, t| {
            let c = [x[0] * t[0][0] + t[0][1], x[1] * t[0][1], t[0][0] - t[0][1]];
            Ok(LieAlgebraElement::combination(tag, &b1, &c))
        });
        let sq = bracket_wedge(&omega, &omega).unwrap();
        let (x, u, v) = ([0.4, -0.3], vec![1.0, 0.5], vec![-0.2, 0.8]);
        let lhs = sq.eval_vecs(&x, &[u.clone(), v.clone()]).unwrap();
        let wu = omega.eval_vecs(&x, &[u]).unwrap();
        let wv = omega.eval_vecs(&x, &[v]).unwrap();
        let rhs = wu.bracket(&wv).unwrap().scale(2.0);
        assert!((&lhs - &rhs).max_abs() < 1e-14);

        let u1 = AlgebraTag::U(1);
        let a = FormField::new(2, 1, LieAlgebraElement::zero(u1), move |_, t| {
            let m = Matrix::from_element(1, 1, Complex64::new(0.0, t[0][0] + 2.0 * t[0][1]));
            LieAlgebraElement::new(u1, m, 1e-12)
        });
        let ab = bracket_wedge(&a, &a).unwrap();
        assert!(ab.eval_vecs(&[0.0, 0.0], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap().max_abs() == 0.0);

        let two = bracket_wedge(&omega, &omega).unwrap();
        assert!(bracket_wedge(&omega, &a).is_err());
        let even = bracket_wedge(&two, &two).unwrap();
        let ts = [vec![1.0, 0.1], vec![0.3, 1.0], vec![-0.5, 0.2], vec![0.7, -0.9]];
        assert!(even.eval_vecs(&x, &ts).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn boundary_of_square_has_four_faces() {
        let chain = ParametrizedChain::new(vec![(0.0, 1.0), (0.0, 1.0)], SmoothMap::identity(2)).unwrap();
        let faces = chain.boundary();
        assert_eq!(faces.len(), 4);
        // ∮ x dy = area = 1 counterclockwise.
        let x_dy = FormField::one_form(2, |x| Ok(vec![0.0, x[0]]));
        let total: f64 = faces.iter().map(|f| integrate(&x_dy, f, 4).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }
}
