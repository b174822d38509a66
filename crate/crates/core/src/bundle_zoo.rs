//! Concrete bundle charts: round spheres in stereographic coordinates, the
//! Hopf monopole, flat and random bundles, with their sections and chains.
//!
//! Stereographic coordinates `x ∈ ℝⁿ` cover the sphere minus the South pole;
//! the North pole is `x = 0` and the conformal factor is `λ = 2/(1 + |x|²)`.
//! The orthonormal frame is `e_i = λ⁻¹∂_i` and the Levi-Civita potential in
//! that frame is `A_i = Σ_b f_b E_ib` with `f_b = -2x_b/(1 + |x|²)`, giving
//! `F = λ² Σ_{a<b} dx_a∧dx_b E_ab`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle_geometry::{
    minimal_rotation, BaseChain, BundleChart, FiberParametrization, LocalPotential, SectionWithZeros, SectionZero,
    TotalPoint,
};
use crate::error::{domain, Error, Result};
use crate::exterior_calculus::{integrate_box, FdOptions, ParametrizedChain, SmoothMap};
use crate::lie_algebras::{
    random_group_element, standard_normal, standard_split, AlgebraTag, LieAlgebraElement, Matrix, ReductiveSplit,
    Subgroup,
};

/// A reference value attached to a bundle, with where it comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedConstant {
    pub name: &'static str,
    pub value: f64,
    pub origin: &'static str,
}

/// A bundle chart with its catalogue of splits, sections, chains and constants.
#[derive(Debug, Clone)]
pub struct NamedBundle {
    name: String,
    chart: BundleChart,
    splits: Vec<&'static str>,
    sections: Vec<SectionWithZeros>,
    chains: Vec<&'static str>,
    expected: Vec<ExpectedConstant>,
    sample_radius: f64,
}

impl NamedBundle {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The chart without a split.
    pub fn chart(&self) -> &BundleChart {
        &self.chart
    }

    pub fn split_names(&self) -> &[&'static str] {
        &self.splits
    }

    /// The first listed split, or the bare chart when none is defined.
    pub fn default_chart(&self) -> Result<BundleChart> {
        match self.splits.first() {
            Some(s) => self.chart_with_split(s),
            None => Ok(self.chart.clone()),
        }
    }

    /// The chart with the named split and, where available, its fiber parametrization.
    pub fn chart_with_split(&self, split: &str) -> Result<BundleChart> {
        let (s, fiber) = split_with_fiber(self.chart.tag(), split)?;
        let chart = self.chart.clone().with_split(s)?;
        Ok(match fiber {
            Some(f) => chart.with_fiber(f),
            None => chart,
        })
    }

    pub fn sections(&self) -> &[SectionWithZeros] {
        &self.sections
    }

    pub fn section(&self, name: &str) -> Result<&SectionWithZeros> {
        self.sections.iter().find(|s| s.name() == name).ok_or_else(|| Error::Unknown {
            kind: "section",
            name: format!("{}/{name}", self.name),
        })
    }

    pub fn chain_names(&self) -> &[&'static str] {
        &self.chains
    }

    /// Chains by name; `cap:<θ₀>` and `annulus:<θ₁>:<θ₂>` take colatitudes in radians.
    pub fn chain(&self, name: &str) -> Result<BaseChain> {
        let unknown = || Error::Unknown {
            kind: "chain",
            name: format!("{}/{name}", self.name),
        };
        match self.chart.base_dim() {
            2 => s2_chain(name).map_err(|_| unknown()),
            4 if name == "full_s4" => Ok(full_s4_chain()),
            _ => Err(unknown()),
        }
    }

    pub fn expected(&self) -> &[ExpectedConstant] {
        &self.expected
    }

    pub fn expected_value(&self, name: &str) -> Option<f64> {
        self.expected.iter().find(|e| e.name == name).map(|e| e.value)
    }

    /// Base point with standard normal coordinates scaled to the sampling radius.
    pub fn random_base_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.chart.base_dim()).map(|_| self.sample_radius * standard_normal(rng)).collect()
    }

    /// Random total-space point `(x, g)`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> TotalPoint {
        let x = self.random_base_point(rng);
        TotalPoint::new(x, random_group_element(self.chart.tag(), rng, 1.0))
    }
}

/// Look up a bundle: `hopf_u1`, `ut_s2`, `frame_s4`, `instanton_s4`,
/// `flat:<G>:<n>`, `generic:<G>:<n>[:<seed>]`.
pub fn named_bundle(name: &str) -> Result<NamedBundle> {
    let unknown = || Error::Unknown {
        kind: "bundle",
        name: name.to_string(),
    };
    match name {
        "hopf_u1" | "hopf" => return Ok(hopf_u1()),
        "ut_s2" | "unit_tangent_s2" => return Ok(unit_tangent_s2()),
        "frame_s4" | "frame_bundle_s4" => return Ok(frame_bundle_s4()),
        "instanton_s4" => return Ok(instanton_s4()),
        _ => {}
    }
    let parts: Vec<&str> = name.split(':').collect();
    let parse_tail = |parts: &[&str]| -> Result<(AlgebraTag, usize)> {
        let tag = AlgebraTag::parse(parts[1]).map_err(|_| unknown())?;
        let n: usize = parts[2].parse().map_err(|_| unknown())?;
        if n == 0 {
            return Err(unknown());
        }
        Ok((tag, n))
    };
    match parts.as_slice() {
        ["flat", _, _] => {
            let (tag, n) = parse_tail(&parts)?;
            Ok(flat_bundle(tag, n))
        }
        ["generic", _, _] | ["generic", _, _, _] => {
            let (tag, n) = parse_tail(&parts)?;
            let seed = match parts.get(3) {
                Some(s) => s.parse().map_err(|_| unknown())?,
                None => 0,
            };
            Ok(generic_bundle(tag, n, seed))
        }
        _ => Err(unknown()),
    }
}

/// Resolve `bundle[/split]` to the bundle and the chart with that split
/// (the bundle's default split when omitted).
pub fn resolve_chart(spec: &str) -> Result<(NamedBundle, BundleChart)> {
    let (name, split) = match spec.split_once('/') {
        Some((n, s)) => (n, Some(s)),
        None => (spec, None),
    };
    let bundle = named_bundle(name)?;
    let chart = match split {
        Some(s) => bundle.chart_with_split(s)?,
        None => bundle.default_chart()?,
    };
    Ok((bundle, chart))
}

// ---------------------------------------------------------------------------
// Potentials

fn real_element(tag: AlgebraTag, m: DMatrix<f64>) -> LieAlgebraElement {
    LieAlgebraElement::from_matrix_unchecked(tag, m.map(|v| Complex64::new(v, 0.0)))
}

fn so_generator(n: usize, a: usize, b: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    if a != b {
        m[(a, b)] = 1.0;
        m[(b, a)] = -1.0;
    }
    m
}

/// Levi-Civita potential of the round `Sⁿ` in stereographic coordinates.
pub fn sphere_potential(n: usize) -> LocalPotential {
    let tag = AlgebraTag::So(n);
    let gens: Arc<Vec<Vec<DMatrix<f64>>>> =
        Arc::new((0..n).map(|a| (0..n).map(|b| so_generator(n, a, b)).collect()).collect());
    let g2 = gens.clone();
    LocalPotential::new(
        n,
        tag,
        move |x| {
            let q = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            Ok((0..n)
                .map(|i| {
                    let mut m = DMatrix::zeros(n, n);
                    for b in 0..n {
                        m += &gens[i][b] * (-2.0 * x[b] / q);
                    }
                    real_element(tag, m)
                })
                .collect())
        },
        move |x| {
            let q = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
            Ok((0..n)
                .map(|j| {
                    (0..n)
                        .map(|i| {
                            let mut m = DMatrix::zeros(n, n);
                            for b in 0..n {
                                let delta = if j == b { 1.0 } else { 0.0 };
                                m += &g2[i][b] * (-2.0 * delta / q + 4.0 * x[b] * x[j] / (q * q));
                            }
                            real_element(tag, m)
                        })
                        .collect()
                })
                .collect())
        },
    )
}

fn u1(theta: f64) -> LieAlgebraElement {
    LieAlgebraElement::from_matrix_unchecked(AlgebraTag::U(1), Matrix::from_element(1, 1, Complex64::new(0.0, theta)))
}

/// Monopole potential `A = -i(x dy - y dx)/(1 + r²)` of the Hopf bundle over `S²`.
pub fn hopf_potential() -> LocalPotential {
    LocalPotential::new(
        2,
        AlgebraTag::U(1),
        |x| {
            let q = 1.0 + x[0] * x[0] + x[1] * x[1];
            Ok(vec![u1(x[1] / q), u1(-x[0] / q)])
        },
        |x| {
            let (a, b) = (x[0], x[1]);
            let q = 1.0 + a * a + b * b;
            let q2 = q * q;
            Ok(vec![
                vec![u1(-2.0 * a * b / q2), u1(-1.0 / q + 2.0 * a * a / q2)],
                vec![u1(1.0 / q - 2.0 * b * b / q2), u1(2.0 * a * b / q2)],
            ])
        },
    )
}

/// `q = a + bi + cj + dk ↦ [[a+bi, c+di], [-c+di, a-bi]]`, an algebra homomorphism ℍ → M₂(ℂ).
fn quaternion_matrix(q: [f64; 4]) -> Matrix {
    Matrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(q[0], q[1]),
            Complex64::new(q[2], q[3]),
            Complex64::new(-q[2], q[3]),
            Complex64::new(q[0], -q[1]),
        ],
    )
}

/// The self-dual part of the round `S⁴` potential, carried to `su(2) ⊂ u(2)`
/// through left quaternion multiplication: an instanton of charge one.
pub fn instanton_potential() -> LocalPotential {
    let base = sphere_potential(4);
    let sd = standard_split(AlgebraTag::So(4), Subgroup::CommutantOfK).expect("so(4) split");
    let to_u2 = move |x: &LieAlgebraElement| {
        let m = sd.project_h(x);
        let col: Vec<f64> = (0..4).map(|r| m.matrix()[(r, 0)].re).collect();
        LieAlgebraElement::from_matrix_unchecked(AlgebraTag::U(2), quaternion_matrix([col[0], col[1], col[2], col[3]]))
    };
    let (b1, b2) = (base.clone(), base);
    let (t1, t2) = (to_u2.clone(), to_u2);
    LocalPotential::new(
        4,
        AlgebraTag::U(2),
        move |x| Ok(b1.components(x)?.iter().map(&t1).collect()),
        move |x| Ok(b2.jacobian(x)?.iter().map(|row| row.iter().map(&t2).collect()).collect()),
    )
}

/// `A_j = C_j + Σ_i x_i B_ij + x_{j+1}² Q_j` with seeded random coefficients.
pub fn generic_potential(tag: AlgebraTag, n: usize, seed: u64) -> LocalPotential {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_eed0_fa11);
    let mut draw = || LieAlgebraElement::random(tag, &mut rng, 0.5);
    let c: Vec<LieAlgebraElement> = (0..n).map(|_| draw()).collect();
    let b: Vec<Vec<LieAlgebraElement>> = (0..n).map(|_| (0..n).map(|_| draw()).collect()).collect();
    let q: Vec<LieAlgebraElement> = (0..n).map(|_| draw()).collect();
    let coeffs = Arc::new((c, b, q));
    let k2 = coeffs.clone();
    LocalPotential::new(
        n,
        tag,
        move |x| {
            let (c, b, q) = coeffs.as_ref();
            Ok((0..n)
                .map(|j| {
                    let mut a = c[j].clone();
                    for i in 0..n {
                        a = &a + &b[i][j].scale(x[i]);
                    }
                    let s = x[(j + 1) % n];
                    &a + &q[j].scale(s * s)
                })
                .collect())
        },
        move |x| {
            let (_, b, q) = k2.as_ref();
            Ok((0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            if i == (j + 1) % n {
                                &b[i][j] + &q[j].scale(2.0 * x[i])
                            } else {
                                b[i][j].clone()
                            }
                        })
                        .collect()
                })
                .collect())
        },
    )
}

// ---------------------------------------------------------------------------
// Quaternions and sphere coordinates

pub(crate) fn quat_mul(p: [f64; 4], q: [f64; 4]) -> [f64; 4] {
    [
        p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
        p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
        p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
        p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0],
    ]
}

pub(crate) fn quat_conj(q: [f64; 4]) -> [f64; 4] {
    [q[0], -q[1], -q[2], -q[3]]
}

fn unit_quat(j: usize) -> [f64; 4] {
    let mut e = [0.0; 4];
    e[j] = 1.0;
    e
}

/// Matrix of `v ↦ p v`.
pub fn left_multiplication(p: [f64; 4]) -> Matrix {
    Matrix::from_fn(4, 4, |r, c| Complex64::new(quat_mul(p, unit_quat(c))[r], 0.0))
}

/// Matrix of `v ↦ v p`.
pub fn right_multiplication(p: [f64; 4]) -> Matrix {
    Matrix::from_fn(4, 4, |r, c| Complex64::new(quat_mul(unit_quat(c), p)[r], 0.0))
}

/// Unit quaternion `a` (up to sign) with `v ↦ a v ā` equal to the rotation `r` of `Im ℍ`.
fn quaternion_from_rotation(r: &[[f64; 3]; 3]) -> [f64; 4] {
    let t = r[0][0] + r[1][1] + r[2][2];
    let q = if t > 0.0 {
        let w = 0.5 * (1.0 + t).sqrt();
        [w, (r[2][1] - r[1][2]) / (4.0 * w), (r[0][2] - r[2][0]) / (4.0 * w), (r[1][0] - r[0][1]) / (4.0 * w)]
    } else if r[0][0] >= r[1][1] && r[0][0] >= r[2][2] {
        let x = 0.5 * (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt();
        [(r[2][1] - r[1][2]) / (4.0 * x), x, (r[0][1] + r[1][0]) / (4.0 * x), (r[0][2] + r[2][0]) / (4.0 * x)]
    } else if r[1][1] >= r[2][2] {
        let y = 0.5 * (1.0 - r[0][0] + r[1][1] - r[2][2]).sqrt();
        [(r[0][2] - r[2][0]) / (4.0 * y), (r[0][1] + r[1][0]) / (4.0 * y), y, (r[1][2] + r[2][1]) / (4.0 * y)]
    } else {
        let z = 0.5 * (1.0 - r[0][0] - r[1][1] + r[2][2]).sqrt();
        [(r[1][0] - r[0][1]) / (4.0 * z), (r[0][2] + r[2][0]) / (4.0 * z), (r[1][2] + r[2][1]) / (4.0 * z), z]
    };
    let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.map(|v| v / norm)
}

/// Factors `(a, b)` of `M ∈ SO(4)` written as `v ↦ a v b̄`, up to a common sign.
pub fn quaternion_factors(m: &Matrix) -> ([f64; 4], [f64; 4]) {
    let col = |c: usize| -> [f64; 4] { [m[(0, c)].re, m[(1, c)].re, m[(2, c)].re, m[(3, c)].re] };
    // c = M(1) = a b̄, and v ↦ M(v) c̄ = a v ā.
    let cbar = quat_conj(col(0));
    let mut r = [[0.0; 3]; 3];
    for s in 0..3 {
        let w = quat_mul(col(s + 1), cbar);
        for (row, entry) in r.iter_mut().enumerate() {
            entry[s] = w[row + 1];
        }
    }
    let a = quaternion_from_rotation(&r);
    let b = quat_mul(cbar, a);
    (a, b)
}

/// Hyperspherical coordinates on `S^{m}`: `m-1` polar angles in `[0, π]`, one azimuth in `[0, 2π]`.
pub fn hyperspherical(angles: &[f64]) -> Vec<f64> {
    let m = angles.len();
    let mut v = vec![0.0; m + 1];
    let mut s = 1.0;
    for (i, a) in angles.iter().enumerate() {
        v[i] = s * a.cos();
        s *= a.sin();
    }
    v[m] = s;
    v
}

fn hyperspherical_box(m: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, PI); m.saturating_sub(1)];
    b.push((0.0, 2.0 * PI));
    b
}

/// Hopf coordinates on `S³`: `(η, a, b) ↦ (cos a sin η, sin a sin η, cos b cos η, sin b cos η)`.
pub fn hopf_coordinates(u: &[f64]) -> Vec<f64> {
    let (eta, a, b) = (u[0], u[1], u[2]);
    vec![a.cos() * eta.sin(), a.sin() * eta.sin(), b.cos() * eta.cos(), b.sin() * eta.cos()]
}

/// Orthonormal completion of `v` by Gram–Schmidt against a fixed reference frame, with `det = +1`.
fn gram_schmidt_lift(v: &[f64]) -> Result<Matrix> {
    let n = v.len();
    let reference = crate::lie_algebras::exp(
        &DMatrix::<f64>::from_fn(n, n, |r, c| match (r, c) {
            (r, c) if r + 1 == c => 0.7,
            (r, c) if c + 1 == r => -0.7,
            _ => 0.0,
        })
        .map(|x| Complex64::new(x, 0.0)),
    )
    .map(|z| z.re);
    let mut cols: Vec<nalgebra::DVector<f64>> = vec![nalgebra::DVector::from_column_slice(v)];
    for c in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = reference.column(c).into_owned();
        for q in &cols {
            let d = q.dot(&w);
            w -= q * d;
        }
        let norm = w.norm();
        if norm > 1e-6 {
            cols.push(w / norm);
        }
    }
    if cols.len() < n {
        return domain("reference frame degenerate for Gram–Schmidt completion");
    }
    let mut m = DMatrix::from_columns(&cols);
    if m.determinant() < 0.0 {
        let last = -m.column(n - 1);
        m.set_column(n - 1, &last);
    }
    Ok(m.map(|x| Complex64::new(x, 0.0)))
}

/// Monotone reparametrization of `[0, 2π]` used for alternative lifts.
fn warp(t: f64) -> f64 {
    t + 0.3 * t.sin()
}

// ---------------------------------------------------------------------------
// Splits and fibers

/// The named split of `𝔤` and, for homogeneous fibers with a known parametrization, the fiber.
///
/// Names: `trivial`, `whole`, `sphere` (SO(n)/SO(n-1)), `b1`, `b2` (SO(4) by the
/// two su(2) ideals), `su` (U(n)/SU(n)), `u<m>` (U(n)/U(m)).
pub fn split_with_fiber(tag: AlgebraTag, name: &str) -> Result<(ReductiveSplit, Option<FiberParametrization>)> {
    let subgroup = match name {
        "trivial" => Subgroup::Trivial,
        "whole" => Subgroup::Whole,
        "sphere" => Subgroup::SphereStabilizer,
        "b1" => Subgroup::CommutantOfI,
        "b2" => Subgroup::CommutantOfK,
        "su" => Subgroup::SpecialUnitary,
        s if s.starts_with('u') && s[1..].parse::<usize>().is_ok() => Subgroup::LowerRightUnitary(s[1..].parse().unwrap_or(0)),
        _ => {
            return Err(Error::Unknown {
                kind: "split",
                name: name.to_string(),
            })
        }
    };
    let split = standard_split(tag, subgroup)?;
    let fiber = match (tag, subgroup) {
        (AlgebraTag::U(1), Subgroup::Trivial) => Some(
            FiberParametrization::new(vec![(0.0, 2.0 * PI)], 1.0, |u| Ok(u1_group(u[0])))
                .with_lift(|u| Ok(u1_group(warp(u[0])))),
        ),
        (AlgebraTag::So(2), Subgroup::Trivial) | (AlgebraTag::So(_), Subgroup::SphereStabilizer) => {
            let n = tag.size();
            Some(
                FiberParametrization::new(hyperspherical_box(n - 1), 1.0, |u| minimal_rotation(&hyperspherical(u)))
                    .with_lift(|u| {
                        let mut w = u.to_vec();
                        let last = w.len() - 1;
                        w[last] = warp(w[last]);
                        gram_schmidt_lift(&hyperspherical(&w))
                    }),
            )
        }
        (AlgebraTag::U(n), Subgroup::SpecialUnitary) => Some(
            FiberParametrization::new(vec![(0.0, 2.0 * PI)], 1.0, move |u| {
                let mut m = Matrix::identity(n, n);
                m[(0, 0)] = Complex64::from_polar(1.0, u[0]);
                Ok(m)
            })
            .with_lift(move |u| Ok(Matrix::identity(n, n) * Complex64::from_polar(1.0, u[0] / n as f64))),
        ),
        (AlgebraTag::So(4), Subgroup::CommutantOfI) => Some(
            // Cosets of right multiplications are labelled by ±p in v ↦ p v.
            FiberParametrization::new(hyperspherical_box(3), 2.0, |u| Ok(left_multiplication(to_quat(&hyperspherical(u)))))
                .with_lift(|u| {
                    let p = to_quat(&hyperspherical(u));
                    Ok(left_multiplication(p) * right_multiplication(quat_conj(twist(p))))
                }),
        ),
        (AlgebraTag::So(4), Subgroup::CommutantOfK) => Some(
            FiberParametrization::new(hyperspherical_box(3), 2.0, |u| {
                Ok(right_multiplication(quat_conj(to_quat(&hyperspherical(u)))))
            })
            .with_lift(|u| {
                let p = to_quat(&hyperspherical(u));
                Ok(left_multiplication(twist(p)) * right_multiplication(quat_conj(p)))
            }),
        ),
        _ => None,
    };
    Ok((split, fiber))
}

fn u1_group(t: f64) -> Matrix {
    Matrix::from_element(1, 1, Complex64::from_polar(1.0, t))
}

fn to_quat(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

/// A unit quaternion depending smoothly on `p`, used to move within a coset.
fn twist(p: [f64; 4]) -> [f64; 4] {
    let f = 0.7 * p[1] + 0.4 * p[2] - 0.2;
    [f.cos(), 0.0, f.sin(), 0.0]
}

// ---------------------------------------------------------------------------
// Chains

fn stereographic_polar(theta: f64, phi: f64) -> (f64, f64, Vec<f64>) {
    let t = (0.5 * theta).tan();
    (t, 0.5 * (1.0 + t * t), vec![t * phi.cos(), t * phi.sin()])
}

/// `(θ, φ) ↦ tan(θ/2)(cos φ, sin φ)` over colatitudes `[θ₁, θ₂]`.
fn s2_band(theta1: f64, theta2: f64) -> Result<ParametrizedChain> {
    let map = SmoothMap::new(2, 2, |u| Ok(stereographic_polar(u[0], u[1]).2)).with_jacobian(|u| {
        let (t, dt, _) = stereographic_polar(u[0], u[1]);
        let (c, s) = (u[1].cos(), u[1].sin());
        Ok(DMatrix::from_row_slice(2, 2, &[dt * c, -t * s, dt * s, t * c]))
    });
    ParametrizedChain::new(vec![(theta1, theta2), (0.0, 2.0 * PI)], map)
}

/// Counterclockwise circle of colatitude `θ`.
fn s2_circle(theta: f64) -> Result<ParametrizedChain> {
    let r = (0.5 * theta).tan();
    let map = SmoothMap::new(1, 2, move |u| Ok(vec![r * u[0].cos(), r * u[0].sin()]))
        .with_jacobian(move |u| Ok(DMatrix::from_row_slice(2, 1, &[-r * u[0].sin(), r * u[0].cos()])));
    ParametrizedChain::new(vec![(0.0, 2.0 * PI)], map)
}

fn parse_angle(s: &str) -> Result<f64> {
    let v = match s {
        "pi6" => PI / 6.0,
        "pi4" => PI / 4.0,
        "pi3" => PI / 3.0,
        "pi2" => PI / 2.0,
        "2pi3" => 2.0 * PI / 3.0,
        _ => s.parse::<f64>().map_err(|_| Error::Domain(format!("bad colatitude {s}")))?,
    };
    if !(v > 0.0 && v < PI) {
        return domain("colatitude must lie in (0, π)");
    }
    Ok(v)
}

fn stereo_radius(z: &SectionZero) -> Option<f64> {
    z.point.as_ref().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `full_sphere`, `cap:<θ₀>` (also `cap_pi6`, `cap_pi3`, `cap_pi2`), `annulus:<θ₁>:<θ₂>`.
fn s2_chain(name: &str) -> Result<BaseChain> {
    if name == "full_sphere" {
        return Ok(BaseChain::new(name, s2_band(0.0, PI)?, Vec::new(), |_| true));
    }
    let parts: Vec<&str> = name.splitn(2, [':', '_']).collect();
    match parts.as_slice() {
        ["cap", rest] => {
            let theta = parse_angle(rest)?;
            let r = (0.5 * theta).tan();
            Ok(BaseChain::new(name, s2_band(0.0, theta)?, vec![s2_circle(theta)?], move |z| {
                stereo_radius(z).is_some_and(|d| d < r)
            }))
        }
        ["annulus", rest] => {
            let (a, b) = rest.split_once(':').map_or_else(|| domain("annulus needs two colatitudes"), Ok)?;
            let (t1, t2) = (parse_angle(a)?, parse_angle(b)?);
            if t1 >= t2 {
                return domain("annulus colatitudes must increase");
            }
            let (r1, r2) = ((0.5 * t1).tan(), (0.5 * t2).tan());
            Ok(BaseChain::new(
                name,
                s2_band(t1, t2)?,
                vec![s2_circle(t2)?, s2_circle(t1)?.reversed()],
                move |z| stereo_radius(z).is_some_and(|d| d > r1 && d < r2),
            ))
        }
        _ => domain(format!("unknown chain {name}")),
    }
}

/// `(ρ, χ, θ, φ) ↦ tan(ρ/2) v(χ, θ, φ)`: all of `S⁴` minus the South pole, positively oriented.
fn full_s4_chain() -> BaseChain {
    fn jacobian(u: &[f64]) -> DMatrix<f64> {
        let t = (0.5 * u[0]).tan();
        let dt = 0.5 * (1.0 + t * t);
        let (c1, s1, c2, s2, c3, s3) = (u[1].cos(), u[1].sin(), u[2].cos(), u[2].sin(), u[3].cos(), u[3].sin());
        let v = [c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3];
        let dchi = [-s1, c1 * c2, c1 * s2 * c3, c1 * s2 * s3];
        let dtheta = [0.0, -s1 * s2, s1 * c2 * c3, s1 * c2 * s3];
        let dphi = [0.0, 0.0, -s1 * s2 * s3, s1 * s2 * c3];
        DMatrix::from_fn(4, 4, |r, c| match c {
            0 => dt * v[r],
            1 => t * dchi[r],
            2 => t * dtheta[r],
            _ => t * dphi[r],
        })
    }
    let map = SmoothMap::new(4, 4, |u| {
        let t = (0.5 * u[0]).tan();
        Ok(hyperspherical(&u[1..]).iter().map(|v| t * v).collect())
    })
    .with_jacobian(|u| Ok(jacobian(u)));
    let domain_box = vec![(0.0, PI), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)];
    let chain = ParametrizedChain::new(domain_box, map).expect("valid box");
    let chain = if jacobian(&[1.0, 1.0, 1.0, 1.0]).determinant() < 0.0 { chain.reversed() } else { chain };
    BaseChain::new("full_s4", chain, Vec::new(), |_| true)
}

// ---------------------------------------------------------------------------
// Catalogue

/// The Hopf bundle over `S²` with its monopole connection; `H` trivial.
pub fn hopf_u1() -> NamedBundle {
    NamedBundle {
        name: "hopf_u1".into(),
        chart: BundleChart::new("hopf_u1", hopf_potential()),
        splits: vec!["trivial"],
        sections: Vec::new(),
        chains: vec!["full_sphere", "cap:<θ₀>", "annulus:<θ₁>:<θ₂>"],
        expected: vec![ExpectedConstant {
            name: "c1",
            value: 1.0,
            origin: "first Chern number of the Hopf line bundle",
        }],
        sample_radius: 0.8,
    }
}

/// The oriented frame bundle of the round `S²`; `B` is the unit tangent bundle.
pub fn unit_tangent_s2() -> NamedBundle {
    let north = || SectionZero {
        label: "north".into(),
        point: Some(vec![0.0, 0.0]),
        index: 1,
    };
    let south = || SectionZero {
        label: "south".into(),
        point: None,
        index: 1,
    };
    NamedBundle {
        name: "ut_s2".into(),
        chart: BundleChart::new("ut_s2", sphere_potential(2)),
        splits: vec!["sphere", "trivial"],
        sections: vec![
            // Gradient of the height function points toward the North pole.
            SectionWithZeros::new("height_gradient", |x| Ok(vec![-x[0], -x[1]]), vec![north(), south()]),
            SectionWithZeros::new("rotational", |x| Ok(vec![-x[1], x[0]]), vec![north(), south()]),
        ],
        chains: vec!["full_sphere", "cap:<θ₀>", "annulus:<θ₁>:<θ₂>"],
        expected: vec![ExpectedConstant {
            name: "euler",
            value: 2.0,
            origin: "Euler characteristic of S²",
        }],
        sample_radius: 0.8,
    }
}

/// The oriented frame bundle of the round `S⁴`, with the sphere bundle and
/// the two quaternionic-structure bundles as splits.
pub fn frame_bundle_s4() -> NamedBundle {
    NamedBundle {
        name: "frame_s4".into(),
        chart: BundleChart::new("frame_s4", sphere_potential(4)),
        splits: vec!["sphere", "b1", "b2", "trivial"],
        sections: Vec::new(),
        chains: vec!["full_s4"],
        expected: vec![
            ExpectedConstant {
                name: "euler",
                value: 2.0,
                origin: "Euler characteristic of S⁴",
            },
            ExpectedConstant {
                name: "p1",
                value: 0.0,
                origin: "first Pontryagin number of TS⁴",
            },
        ],
        sample_radius: 0.7,
    }
}

/// Charge-one instanton on `S⁴` as a U(2) bundle.
pub fn instanton_s4() -> NamedBundle {
    NamedBundle {
        name: "instanton_s4".into(),
        chart: BundleChart::new("instanton_s4", instanton_potential()),
        splits: vec!["su", "u1", "trivial"],
        sections: Vec::new(),
        chains: vec!["full_s4"],
        expected: vec![ExpectedConstant {
            name: "c2",
            value: -1.0,
            origin: "instanton number of the self-dual ideal of TS⁴ with the orientation of full_s4",
        }],
        sample_radius: 0.7,
    }
}

/// Trivial bundle with `A = 0`.
pub fn flat_bundle(tag: AlgebraTag, n: usize) -> NamedBundle {
    let name = format!("flat:{tag}:{n}");
    NamedBundle {
        chart: BundleChart::new(name.clone(), LocalPotential::flat(n, tag)),
        name,
        splits: default_splits(tag),
        sections: Vec::new(),
        chains: Vec::new(),
        expected: Vec::new(),
        sample_radius: 1.0,
    }
}

/// Polynomial random potential with the given seed.
pub fn generic_bundle(tag: AlgebraTag, n: usize, seed: u64) -> NamedBundle {
    let name = format!("generic:{tag}:{n}:{seed}");
    NamedBundle {
        chart: BundleChart::new(name.clone(), generic_potential(tag, n, seed)),
        name,
        splits: default_splits(tag),
        sections: Vec::new(),
        chains: Vec::new(),
        expected: Vec::new(),
        sample_radius: 0.6,
    }
}

fn default_splits(tag: AlgebraTag) -> Vec<&'static str> {
    match tag {
        AlgebraTag::So(4) => vec!["trivial", "sphere", "b1", "b2", "whole"],
        AlgebraTag::So(_) => vec!["trivial", "sphere", "whole"],
        AlgebraTag::U(1) => vec!["trivial", "whole"],
        AlgebraTag::U(_) => vec!["trivial", "su", "u1", "whole"],
        AlgebraTag::Su(_) => vec!["trivial", "whole"],
    }
}

// ---------------------------------------------------------------------------
// Degrees

/// Parametrization of the source sphere for degree integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereChart {
    /// Angle (d = 1) or hyperspherical angles (d = 3).
    Standard,
    /// Warped angle (d = 1) or Hopf coordinates (d = 3).
    Alternate,
}

fn sphere_chart(d: usize, chart: SphereChart) -> Result<(Vec<(f64, f64)>, fn(&[f64]) -> Vec<f64>)> {
    fn circle(u: &[f64]) -> Vec<f64> {
        vec![u[0].cos(), u[0].sin()]
    }
    fn warped_circle(u: &[f64]) -> Vec<f64> {
        let t = warp(u[0]);
        vec![t.cos(), t.sin()]
    }
    fn three(u: &[f64]) -> Vec<f64> {
        hyperspherical(u)
    }
    match (d, chart) {
        (1, SphereChart::Standard) => Ok((vec![(0.0, 2.0 * PI)], circle)),
        (1, SphereChart::Alternate) => Ok((vec![(0.0, 2.0 * PI)], warped_circle)),
        (3, SphereChart::Standard) => Ok((hyperspherical_box(3), three)),
        (3, SphereChart::Alternate) => Ok((vec![(0.0, 0.5 * PI), (0.0, 2.0 * PI), (0.0, 2.0 * PI)], hopf_coordinates)),
        _ => domain("degree integrals are provided for d = 1 and d = 3"),
    }
}

fn normalize(v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if !(n > 1e-14) || !n.is_finite() {
        return domain("map value is not a point of the sphere");
    }
    Ok(v.into_iter().map(|a| a / n).collect())
}

fn det(m: &DMatrix<f64>) -> f64 {
    m.determinant()
}

/// `∫ f*(vol)/|S^d|` for a map `S^d → S^d` given on unit vectors.
///
/// Derivatives are Richardson central differences with each stencil value
/// sign-aligned to the centre value, so maps defined only up to `±` (such as
/// quaternion lifts read off a rotation) are handled; for `d` odd the
/// integrand is invariant under a global sign flip.
pub fn winding_integral<F>(d: usize, map: F, quad_order: usize, chart: SphereChart) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (domain_box, param) = sphere_chart(d, chart)?;
    let sample: Vec<f64> = domain_box.iter().map(|(a, b)| a + 0.37 * (b - a)).collect();
    let orientation = {
        let m = tangent_frame(&|u: &[f64]| Ok(param(u)), &sample, d)?;
        det(&m).signum()
    };
    let f = |u: &[f64]| -> Result<Vec<f64>> { normalize(map(&param(u))?) };
    let total = integrate_box(&domain_box, quad_order, |u| Ok(det(&tangent_frame(&f, u, d)?)))?;
    let volume = match d {
        1 => 2.0 * PI,
        _ => 2.0 * PI * PI,
    };
    Ok(orientation * total / volume)
}

/// Columns `[f, ∂₁f, …, ∂_d f]` at `u`.
fn tangent_frame(f: &dyn Fn(&[f64]) -> Result<Vec<f64>>, u: &[f64], d: usize) -> Result<DMatrix<f64>> {
    let centre = f(u)?;
    let aligned = |w: &[f64]| -> Result<Vec<f64>> {
        let v = f(w)?;
        let s: f64 = v.iter().zip(&centre).map(|(a, b)| a * b).sum();
        Ok(if s < 0.0 { v.into_iter().map(|a| -a).collect() } else { v })
    };
    let fd = FdOptions::with_richardson(1e-3);
    let mut m = DMatrix::zeros(d + 1, d + 1);
    m.set_column(0, &nalgebra::DVector::from_column_slice(&centre));
    for c in 0..d {
        let mut e = vec![0.0; d];
        e[c] = 1.0;
        let dv: VecValue = fd.directional(u, &e, |w| Ok(VecValue(aligned(w)?)))?;
        m.set_column(c + 1, &nalgebra::DVector::from_column_slice(&dv.0));
    }
    Ok(m)
}

#[derive(Clone)]
struct VecValue(Vec<f64>);

impl crate::exterior_calculus::FormValue for VecValue {
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

/// Round a degree integral; errors unless it is more than `0.1` away from a half-integer.
pub fn round_degree(value: f64) -> Result<i64> {
    let n = value.round();
    let gap = 0.5 - (value - n).abs();
    if !(gap > 0.1) {
        return Err(Error::Precision { value, gap });
    }
    Ok(n as i64)
}

/// Degree of a map `S^d → S^d` (`d ∈ {1, 3}`) by integration.
pub fn winding_degree<F>(d: usize, map: F, quad_order: usize, chart: SphereChart) -> Result<i64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    round_degree(winding_integral(d, map, quad_order, chart)?)
}

/// Index of a zero of a planar section: degree of `s` on a small circle around `centre`.
pub fn zero_index(section: &SectionWithZeros, centre: &[f64], radius: f64, quad_order: usize) -> Result<i64> {
    winding_degree(
        1,
        |v| section.unit(&[centre[0] + radius * v[0], centre[1] + radius * v[1]]),
        quad_order,
        SphereChart::Standard,
    )
}

/// South-chart coordinates `y = D x/|x|²` with `D = diag(-1, 1, …)`; an involution.
pub fn south_coordinates(x: &[f64]) -> Result<Vec<f64>> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return domain("the North pole is not in the South chart");
    }
    Ok(x.iter().enumerate().map(|(i, v)| if i == 0 { -v / r2 } else { v / r2 }).collect())
}

/// Frame transition `e^N = e^S τ` on the overlap: `τ(n) = D(I - 2nnᵀ)`, `n = x/|x|`.
pub fn south_transition(x: &[f64]) -> Result<DMatrix<f64>> {
    let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return domain("transition undefined at the North pole");
    }
    let n = x.len();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let refl = if i == j { 1.0 } else { 0.0 } - 2.0 * x[i] * x[j] / (r * r);
        if i == 0 {
            -refl
        } else {
            refl
        }
    }))
}

/// Index of the South-pole zero of a section over `S²`, computed in the South chart.
pub fn south_zero_index(section: &SectionWithZeros, radius: f64, quad_order: usize) -> Result<i64> {
    winding_degree(
        1,
        |v| {
            let y = [radius * v[0], radius * v[1]];
            let x = south_coordinates(&y)?;
            let s = section.unit(&x)?;
            let tau = south_transition(&x)?;
            Ok((0..2).map(|i| tau[(i, 0)] * s[0] + tau[(i, 1)] * s[1]).collect())
        },
        quad_order,
        SphereChart::Standard,
    )
}

/// Parallel transport of the identity frame from the North pole to `x` along
/// the longitude `s ↦ tan(s/2) x/|x|`, by fixed-step RK4 on `ġ = -A(ẋ) g`.
pub fn longitude_transport(potential: &LocalPotential, x: &[f64], steps: usize) -> Result<Matrix> {
    let n = potential.tag().size();
    let r: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 || steps == 0 {
        return Ok(Matrix::identity(n, n));
    }
    let dir: Vec<f64> = x.iter().map(|v| v / r).collect();
    let rho = 2.0 * r.atan();
    let h = rho / steps as f64;
    let rhs = |s: f64, g: &Matrix| -> Result<Matrix> {
        let t = (0.5 * s).tan();
        let p: Vec<f64> = dir.iter().map(|d| t * d).collect();
        let v: Vec<f64> = dir.iter().map(|d| 0.5 * (1.0 + t * t) * d).collect();
        Ok(-(potential.apply(&p, &v)?.matrix() * g))
    };
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut g = Matrix::identity(n, n);
    for step in 0..steps {
        let s = step as f64 * h;
        let k1 = rhs(s, &g)?;
        let k2 = rhs(s + 0.5 * h, &(&g + &k1 * half))?;
        let k3 = rhs(s + 0.5 * h, &(&g + &k2 * half))?;
        let k4 = rhs(s + h, &(&g + &k3 * full))?;
        g += (k1 + k2 * two + k3 * two + k4) * sixth;
    }
    Ok(g)
}

/// Which quaternionic structure bundle: `B₁` (cosets of right multiplications,
/// labelled by the left factor) or `B₂` (labelled by the right factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuaternionicSection {
    Sigma1,
    Sigma2,
}

impl QuaternionicSection {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sigma1" | "sigma_1" | "b1" => Ok(QuaternionicSection::Sigma1),
            "sigma2" | "sigma_2" | "b2" => Ok(QuaternionicSection::Sigma2),
            _ => Err(Error::Unknown {
                kind: "section",
                name: format!("frame_s4/{name}"),
            }),
        }
    }
}

/// The `S³` lift of the transported quaternionic section at South-chart point `y ≠ 0`.
///
/// The section is the identity coset at the North pole, carried along
/// longitudes; in the South trivialization it is `τ(x) g^N(x)`, whose left or
/// right quaternion factor (up to sign) is the lift.
pub fn quaternionic_south_lift(which: QuaternionicSection, y: &[f64], steps: usize) -> Result<[f64; 4]> {
    if y.len() != 4 {
        return domain("quaternionic sections live over S⁴");
    }
    let x = south_coordinates(y)?;
    let g_north = longitude_transport(&sphere_potential(4), &x, steps)?;
    let tau = south_transition(&x)?.map(|v| Complex64::new(v, 0.0));
    let (a, b) = quaternion_factors(&(tau * g_north));
    Ok(match which {
        QuaternionicSection::Sigma1 => a,
        QuaternionicSection::Sigma2 => b,
    })
}

/// Degree of the `S³` lift on the sphere of radius `epsilon` around the South pole.
pub fn quaternionic_degree_integral(
    which: QuaternionicSection,
    epsilon: f64,
    quad_order: usize,
    steps: usize,
    chart: SphereChart,
) -> Result<f64> {
    winding_integral(
        3,
        |v| {
            let y: Vec<f64> = v.iter().map(|c| epsilon * c).collect();
            Ok(quaternionic_south_lift(which, &y, steps)?.to_vec())
        },
        quad_order,
        chart,
    )
}
