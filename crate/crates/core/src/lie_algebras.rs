//! Matrix Lie algebras `so(n)`, `u(n)`, `su(n)` and reductive splits `𝔤 = 𝔥 ⊕ 𝔭`.
//!
//! Elements are stored as complex `n×n` matrices for every algebra; `so(n)`
//! elements simply have zero imaginary part. The inner product is
//! `⟨X, Y⟩ = -Re Tr(XY)`, which is positive definite on all three families and
//! makes every shipped split orthogonal.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{domain, Result};

pub type Matrix = DMatrix<Complex64>;

const BASIS_TOL: f64 = 1e-12;

/// Which matrix algebra an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgebraTag {
    So(usize),
    U(usize),
    Su(usize),
}

impl AlgebraTag {
    pub fn size(&self) -> usize {
        match *self {
            AlgebraTag::So(n) | AlgebraTag::U(n) | AlgebraTag::Su(n) => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            AlgebraTag::So(n) => n * (n.saturating_sub(1)) / 2,
            AlgebraTag::U(n) => n * n,
            AlgebraTag::Su(n) => (n * n).saturating_sub(1),
        }
    }

    /// Parse names like `so4`, `so(4)`, `u2`, `su(2)`.
    pub fn parse(name: &str) -> Result<Self> {
        let cleaned: String = name
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        let (family, digits) = cleaned.split_at(cleaned.find(|c: char| c.is_ascii_digit()).unwrap_or(cleaned.len()));
        let n: usize = match digits.parse() {
            Ok(n) if n >= 1 => n,
            _ => return domain(format!("cannot parse algebra name {name:?}")),
        };
        match family {
            "so" => Ok(AlgebraTag::So(n)),
            "u" => Ok(AlgebraTag::U(n)),
            "su" => Ok(AlgebraTag::Su(n)),
            _ => domain(format!("cannot parse algebra name {name:?}")),
        }
    }

    /// Standard basis: `E_ab = e_a e_bᵀ - e_b e_aᵀ` for `so(n)`; for `u(n)` the
    /// `E_ab`, `i(e_a e_bᵀ + e_b e_aᵀ)` (a<b) and `i e_a e_aᵀ`; `su(n)` replaces
    /// the diagonal part with `i(e_a e_aᵀ - e_{a+1} e_{a+1}ᵀ)`.
    pub fn basis(&self) -> Vec<LieAlgebraElement> {
        let n = self.size();
        let unit = |a: usize, b: usize, z: Complex64| {
            let mut m = Matrix::zeros(n, n);
            m[(a, b)] += z;
            m
        };
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(self.dim());
        for a in 0..n {
            for b in (a + 1)..n {
                out.push(unit(a, b, one) - unit(b, a, one));
            }
        }
        match *self {
            AlgebraTag::So(_) => {}
            AlgebraTag::U(_) => {
                for a in 0..n {
                    for b in (a + 1)..n {
                        out.push(unit(a, b, i) + unit(b, a, i));
                    }
                }
                for a in 0..n {
                    out.push(unit(a, a, i));
                }
            }
            AlgebraTag::Su(_) => {
                for a in 0..n {
                    for b in (a + 1)..n {
                        out.push(unit(a, b, i) + unit(b, a, i));
                    }
                }
                for a in 0..n.saturating_sub(1) {
                    out.push(unit(a, a, i) - unit(a + 1, a + 1, i));
                }
            }
        }
        out.into_iter()
            .map(|m| LieAlgebraElement::from_matrix_unchecked(*self, m))
            .collect()
    }

    /// Orthonormal basis for `⟨X,Y⟩ = -Re Tr(XY)`.
    pub fn orthonormal_basis(&self) -> Vec<LieAlgebraElement> {
        gram_schmidt(self.basis())
    }
}

impl fmt::Display for AlgebraTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraTag::So(n) => write!(f, "so({n})"),
            AlgebraTag::U(n) => write!(f, "u({n})"),
            AlgebraTag::Su(n) => write!(f, "su({n})"),
        }
    }
}

/// An element of a matrix Lie algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebraElement {
    tag: AlgebraTag,
    matrix: Matrix,
}

impl LieAlgebraElement {
    /// Construct and check the algebra invariant to `tol`.
    pub fn new(tag: AlgebraTag, matrix: Matrix, tol: f64) -> Result<Self> {
        let n = tag.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return domain(format!(
                "{tag} needs a {n}x{n} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        let skew = (&matrix + matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > tol {
            return domain(format!("matrix is not skew-hermitian (defect {skew:e})"));
        }
        match tag {
            AlgebraTag::So(_) => {
                let imag = matrix.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if imag > tol {
                    return domain(format!("so(n) element has imaginary part {imag:e}"));
                }
            }
            AlgebraTag::Su(_) => {
                let tr = matrix.trace().norm();
                if tr > tol {
                    return domain(format!("su(n) element has trace {tr:e}"));
                }
            }
            AlgebraTag::U(_) => {}
        }
        Ok(LieAlgebraElement { tag, matrix })
    }

    /// Real skew-symmetric matrix as an `so(n)` element.
    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = Matrix::from_fn(n, n, |a, b| Complex64::new(rows[a][b], 0.0));
        Self::new(AlgebraTag::So(n), m, BASIS_TOL)
    }

    pub(crate) fn from_matrix_unchecked(tag: AlgebraTag, matrix: Matrix) -> Self {
        LieAlgebraElement { tag, matrix }
    }

    pub fn zero(tag: AlgebraTag) -> Self {
        let n = tag.size();
        LieAlgebraElement {
            tag,
            matrix: Matrix::zeros(n, n),
        }
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Reinterpret in a larger enclosing algebra of the same size (`su(n) ⊂ u(n)`, `so(n) ⊂ u(n)`).
    pub fn retag(&self, tag: AlgebraTag) -> Result<Self> {
        Self::new(tag, self.matrix.clone(), 1e-10)
    }

    pub fn scale(&self, s: f64) -> Self {
        LieAlgebraElement {
            tag: self.tag,
            matrix: &self.matrix * Complex64::new(s, 0.0),
        }
    }

    /// Matrix commutator `XY - YX`.
    pub fn bracket(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag {
            return domain(format!("bracket of {} with {}", self.tag, other.tag));
        }
        Ok(self.commutator(other))
    }

    pub(crate) fn commutator(&self, other: &Self) -> Self {
        let m = &self.matrix * &other.matrix - &other.matrix * &self.matrix;
        LieAlgebraElement {
            tag: self.tag,
            matrix: m,
        }
    }

    /// `⟨X, Y⟩ = -Re Tr(XY)`.
    pub fn inner(&self, other: &Self) -> f64 {
        -(&self.matrix * &other.matrix).trace().re
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Ad_g X = g X g⁻¹` for a unitary (or orthogonal) `g`.
    pub fn adjoint_action(&self, g: &Matrix) -> Self {
        LieAlgebraElement {
            tag: self.tag,
            matrix: g * &self.matrix * g.adjoint(),
        }
    }

    /// Coordinates against a basis that is orthonormal for `inner`.
    pub fn coordinates(&self, orthonormal: &[LieAlgebraElement]) -> Vec<f64> {
        orthonormal.iter().map(|b| self.inner(b)).collect()
    }

    pub fn combination(tag: AlgebraTag, basis: &[LieAlgebraElement], coeffs: &[f64]) -> Self {
        let mut out = Self::zero(tag);
        for (b, c) in basis.iter().zip(coeffs) {
            if *c != 0.0 {
                out.matrix += &b.matrix * Complex64::new(*c, 0.0);
            }
        }
        out
    }

    /// Random element with independent normal coordinates in the orthonormal basis.
    pub fn random<R: Rng + ?Sized>(tag: AlgebraTag, rng: &mut R, scale: f64) -> Self {
        let basis = tag.orthonormal_basis();
        let coeffs: Vec<f64> = basis.iter().map(|_| scale * standard_normal(rng)).collect();
        Self::combination(tag, &basis, &coeffs)
    }
}

impl Add for &LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn add(self, rhs: &LieAlgebraElement) -> LieAlgebraElement {
        debug_assert_eq!(self.tag, rhs.tag);
        LieAlgebraElement {
            tag: self.tag,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn sub(self, rhs: &LieAlgebraElement) -> LieAlgebraElement {
        debug_assert_eq!(self.tag, rhs.tag);
        LieAlgebraElement {
            tag: self.tag,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Add for LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn add(self, rhs: LieAlgebraElement) -> LieAlgebraElement {
        &self + &rhs
    }
}

impl Sub for LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn sub(self, rhs: LieAlgebraElement) -> LieAlgebraElement {
        &self - &rhs
    }
}

impl Neg for LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn neg(self) -> LieAlgebraElement {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &LieAlgebraElement {
    type Output = LieAlgebraElement;
    fn mul(self, s: f64) -> LieAlgebraElement {
        self.scale(s)
    }
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gram_schmidt(vectors: Vec<LieAlgebraElement>) -> Vec<LieAlgebraElement> {
    let mut out: Vec<LieAlgebraElement> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v;
        for e in &out {
            let c = w.inner(e);
            w = &w - &e.scale(c);
        }
        let n = w.norm();
        if n > BASIS_TOL {
            out.push(w.scale(1.0 / n));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Group-level helpers

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn exp(matrix: &Matrix) -> Matrix {
    let n = matrix.nrows();
    let norm: f64 = matrix.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = matrix * Complex64::new(0.5f64.powi(squarings as i32), 0.0);
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for m in 1..=18 {
        term = &term * &scaled * Complex64::new(1.0 / m as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Left-trivialised derivative of the exponential map:
/// `exp(-Y) d/dt exp(Y + tV)|₀ = Σ_n (-1)^n/(n+1)! ad_Y^n V`.
pub fn dexp_left(y: &LieAlgebraElement, v: &LieAlgebraElement) -> LieAlgebraElement {
    let mut out = v.clone();
    let mut term = v.clone();
    let scale = y.max_abs();
    if scale == 0.0 {
        return out;
    }
    for n in 1..40 {
        term = y.commutator(&term).scale(-1.0 / (n as f64 + 1.0));
        out = &out + &term;
        if term.max_abs() < 1e-18 * (1.0 + out.max_abs()) {
            break;
        }
    }
    out
}

/// Random group element `exp(X)` with `X` random of the given scale.
pub fn random_group_element<R: Rng + ?Sized>(tag: AlgebraTag, rng: &mut R, scale: f64) -> Matrix {
    exp(LieAlgebraElement::random(tag, rng, scale).matrix())
}

// ---------------------------------------------------------------------------
// Reductive splits

/// The subgroups `H ⊂ G` for which splits are provided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subgroup {
    /// `H = {1}`: `B = E`.
    Trivial,
    /// `H = G`: `B = M`.
    Whole,
    /// `1 × SO(n-1) ⊂ SO(n)`, the stabiliser of the first basis vector.
    SphereStabilizer,
    /// `I_{n-m} × U(m) ⊂ U(n)`, unitary block on the last `m` coordinates.
    LowerRightUnitary(usize),
    /// `SU(n) ⊂ U(n)`.
    SpecialUnitary,
    /// The `su(2)` ideal of `so(4)` commuting with `I` (right quaternion multiplication).
    CommutantOfI,
    /// The `su(2)` ideal of `so(4)` commuting with `K` (left quaternion multiplication).
    CommutantOfK,
}

/// Orthogonal splitting `𝔤 = 𝔥 ⊕ 𝔭` with `[𝔥, 𝔭] ⊆ 𝔭`.
#[derive(Debug, Clone)]
pub struct ReductiveSplit {
    ambient: AlgebraTag,
    subgroup: Subgroup,
    h_basis: Vec<LieAlgebraElement>,
    p_basis: Vec<LieAlgebraElement>,
}

impl ReductiveSplit {
    pub fn ambient(&self) -> AlgebraTag {
        self.ambient
    }

    pub fn subgroup(&self) -> Subgroup {
        self.subgroup
    }

    /// Orthonormal basis of `𝔥`.
    pub fn h_basis(&self) -> &[LieAlgebraElement] {
        &self.h_basis
    }

    /// Orthonormal basis of `𝔭`.
    pub fn p_basis(&self) -> &[LieAlgebraElement] {
        &self.p_basis
    }

    pub fn project_h(&self, x: &LieAlgebraElement) -> LieAlgebraElement {
        project(self.ambient, &self.h_basis, x)
    }

    pub fn project_p(&self, x: &LieAlgebraElement) -> LieAlgebraElement {
        project(self.ambient, &self.p_basis, x)
    }

    /// Random element of `𝔥`.
    pub fn random_h<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> LieAlgebraElement {
        let c: Vec<f64> = self.h_basis.iter().map(|_| scale * standard_normal(rng)).collect();
        LieAlgebraElement::combination(self.ambient, &self.h_basis, &c)
    }

    /// Random element of `𝔭`.
    pub fn random_p<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> LieAlgebraElement {
        let c: Vec<f64> = self.p_basis.iter().map(|_| scale * standard_normal(rng)).collect();
        LieAlgebraElement::combination(self.ambient, &self.p_basis, &c)
    }

    /// Random element of `H` as `exp` of a random element of `𝔥`.
    pub fn random_subgroup_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> Matrix {
        exp(self.random_h(rng, scale).matrix())
    }
}

fn project(tag: AlgebraTag, basis: &[LieAlgebraElement], x: &LieAlgebraElement) -> LieAlgebraElement {
    let c: Vec<f64> = basis.iter().map(|b| x.inner(b)).collect();
    LieAlgebraElement::combination(tag, basis, &c)
}

/// Complete an orthonormal `𝔥` basis to a split using the orthogonal complement.
fn split_from_h(ambient: AlgebraTag, subgroup: Subgroup, h: Vec<LieAlgebraElement>) -> ReductiveSplit {
    let h_basis = gram_schmidt(h);
    let mut seed = h_basis.clone();
    let k = seed.len();
    seed.extend(ambient.basis());
    let full = gram_schmidt(seed);
    let p_basis = full[k..].to_vec();
    ReductiveSplit {
        ambient,
        subgroup,
        h_basis,
        p_basis,
    }
}

/// Split for one of the supported `(G, H)` pairs.
pub fn standard_split(group: AlgebraTag, subgroup: Subgroup) -> Result<ReductiveSplit> {
    let basis = group.basis();
    let n = group.size();
    let h: Vec<LieAlgebraElement> = match (group, subgroup) {
        (_, Subgroup::Trivial) => Vec::new(),
        (_, Subgroup::Whole) => basis,
        (AlgebraTag::So(n), Subgroup::SphereStabilizer) if n >= 2 => basis
            .into_iter()
            .filter(|b| (0..n).all(|c| b.matrix[(0, c)].norm() == 0.0))
            .collect(),
        (AlgebraTag::U(n), Subgroup::LowerRightUnitary(m)) if m < n => basis
            .into_iter()
            .filter(|b| {
                (0..n).all(|r| {
                    (0..n).all(|c| (r >= n - m && c >= n - m) || b.matrix[(r, c)].norm() == 0.0)
                })
            })
            .collect(),
        (AlgebraTag::U(_), Subgroup::SpecialUnitary) => AlgebraTag::Su(n)
            .basis()
            .into_iter()
            .map(|b| LieAlgebraElement::from_matrix_unchecked(group, b.matrix))
            .collect(),
        (AlgebraTag::So(4), Subgroup::CommutantOfI) => anti_self_dual_basis(),
        (AlgebraTag::So(4), Subgroup::CommutantOfK) => self_dual_basis(),
        _ => return domain(format!("no reductive split for {group} with {subgroup:?}")),
    };
    Ok(split_from_h(group, subgroup, h))
}

fn so4(entries: &[(usize, usize, f64)]) -> LieAlgebraElement {
    let mut m = Matrix::zeros(4, 4);
    for &(a, b, v) in entries {
        m[(a, b)] += Complex64::new(v, 0.0);
        m[(b, a)] -= Complex64::new(v, 0.0);
    }
    LieAlgebraElement::from_matrix_unchecked(AlgebraTag::So(4), m)
}

/// `E12+E34, E13-E24, E14+E23`: left multiplication by imaginary quaternions.
fn self_dual_basis() -> Vec<LieAlgebraElement> {
    vec![
        so4(&[(0, 1, 1.0), (2, 3, 1.0)]),
        so4(&[(0, 2, 1.0), (1, 3, -1.0)]),
        so4(&[(0, 3, 1.0), (1, 2, 1.0)]),
    ]
}

/// `E12-E34, E13+E24, E14-E23`: right multiplication by imaginary quaternions.
fn anti_self_dual_basis() -> Vec<LieAlgebraElement> {
    vec![
        so4(&[(0, 1, 1.0), (2, 3, -1.0)]),
        so4(&[(0, 2, 1.0), (1, 3, 1.0)]),
        so4(&[(0, 3, 1.0), (1, 2, -1.0)]),
    ]
}

/// The two splits of `so(4) = su(2) ⊕ su(2)`: `H₁` commutes with `I`, `H₂` with `K`.
/// As subspaces `𝔥₁ = 𝔭₂` and `𝔭₁ = 𝔥₂`.
pub fn so4_ideal_split() -> (ReductiveSplit, ReductiveSplit) {
    let tag = AlgebraTag::So(4);
    (
        split_from_h(tag, Subgroup::CommutantOfI, anti_self_dual_basis()),
        split_from_h(tag, Subgroup::CommutantOfK, self_dual_basis()),
    )
}

/// Complex structures `I`, `K` and `J = KI` of an oriented orthonormal 4-frame.
#[derive(Debug, Clone)]
pub struct QuaternionicStructures {
    pub i: LieAlgebraElement,
    pub j: LieAlgebraElement,
    pub k: LieAlgebraElement,
}

/// `I(f₁)=f₂, I(f₃)=f₄` and `K(f₁)=f₃, K(f₂)=f₄`, extended as complex structures;
/// `J = K·I`. The frame is given as four vectors in the standard basis.
///
/// With this table `I` is left multiplication by the quaternion `i` and `K` is
/// right multiplication by `j`, so `I` and `K` commute and lie in opposite
/// `su(2)` ideals.
pub fn quaternionic_frame_structures(frame: &[[f64; 4]; 4]) -> Result<QuaternionicStructures> {
    let f = nalgebra::Matrix4::from_fn(|r, c| frame[c][r]);
    let gram = f.transpose() * f;
    let defect = (gram - nalgebra::Matrix4::identity()).abs().max();
    if defect > 1e-10 {
        return domain(format!("frame is not orthonormal (defect {defect:e})"));
    }
    if f.determinant() < 0.0 {
        return domain("frame is not positively oriented");
    }
    let to_elem = |m: nalgebra::Matrix4<f64>| {
        let big = Matrix::from_fn(4, 4, |r, c| Complex64::new(m[(r, c)], 0.0));
        LieAlgebraElement::from_matrix_unchecked(AlgebraTag::So(4), big)
    };
    // I₀ = E21 + E43, K₀ = E31 + E42 in the frame's own coordinates.
    let mut i0 = nalgebra::Matrix4::zeros();
    i0[(1, 0)] = 1.0;
    i0[(0, 1)] = -1.0;
    i0[(3, 2)] = 1.0;
    i0[(2, 3)] = -1.0;
    let mut k0 = nalgebra::Matrix4::zeros();
    k0[(2, 0)] = 1.0;
    k0[(0, 2)] = -1.0;
    k0[(3, 1)] = 1.0;
    k0[(1, 3)] = -1.0;
    let i = f * i0 * f.transpose();
    let k = f * k0 * f.transpose();
    let j = k * i;
    Ok(QuaternionicStructures {
        i: to_elem(i),
        j: to_elem(j),
        k: to_elem(k),
    })
}
