//! Ad-invariant polynomials as symmetric multilinear functionals, and their
//! evaluation on Lie-valued forms.
//!
//! Normalizations: `e(X) = Pf(X)/(2π)^k` on `so(2k)`, `c_j(X)` the degree-`j`
//! part of `det(1 + iX/2π)`, `P₁(X) = -Tr(X²)/(8π²)` and `trace_power_k(X) =
//! Re Tr(X^k)`. Multilinear values come from the inclusion-exclusion
//! polarization formula applied to the homogeneous polynomial.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::exterior_calculus::{bracket_wedge, shuffles, FormField};
use crate::lie_algebras::{AlgebraTag, LieAlgebraElement, Matrix};

const SKEW_TOL: f64 = 1e-10;

/// Pfaffian of a real skew-symmetric `2k×2k` matrix, by expansion along the first row.
pub fn pfaffian(x: &DMatrix<f64>) -> Result<f64> {
    let n = x.nrows();
    if x.ncols() != n {
        return domain("pfaffian of a non-square matrix");
    }
    if n % 2 == 1 {
        return domain(format!("pfaffian needs even size, got {n}"));
    }
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let defect = (x + x.transpose()).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if defect > SKEW_TOL * scale {
        return domain(format!("matrix is not skew-symmetric (defect {defect:e})"));
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(pf_rec(x, &idx))
}

fn pf_rec(x: &DMatrix<f64>, idx: &[usize]) -> f64 {
    match idx.len() {
        0 => 1.0,
        2 => x[(idx[0], idx[1])],
        _ => {
            let mut acc = 0.0;
            for j in 1..idx.len() {
                let a = x[(idx[0], idx[j])];
                if a == 0.0 {
                    continue;
                }
                let rest: Vec<usize> = idx[1..].iter().enumerate().filter(|(m, _)| m + 1 != j).map(|(_, &v)| v).collect();
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                acc += sign * a * pf_rec(x, &rest);
            }
            acc
        }
    }
}

/// Which named polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolynomialKind {
    Euler,
    Chern(usize),
    Pontryagin1,
    TracePower(usize),
}

/// A degree-`k` Ad-invariant polynomial on one matrix algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantPolynomial {
    kind: PolynomialKind,
    degree: usize,
    tag: AlgebraTag,
}

impl fmt::Display for InvariantPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PolynomialKind::Euler => write!(f, "euler on {}", self.tag),
            PolynomialKind::Chern(j) => write!(f, "c{j} on {}", self.tag),
            PolynomialKind::Pontryagin1 => write!(f, "p1 on {}", self.tag),
            PolynomialKind::TracePower(k) => write!(f, "tr^{k} on {}", self.tag),
        }
    }
}

/// Build a named polynomial. Accepted names: `euler`/`e`, `chern`, `chern_<j>`,
/// `c<j>`, `pontryagin_1`/`p1`, `trace_power`, `trace_power_<k>`. Where the name
/// carries an index it must agree with `k`.
pub fn make_polynomial(name: &str, k: usize, tag: AlgebraTag) -> Result<InvariantPolynomial> {
    if k == 0 {
        return domain("polynomial degree must be positive");
    }
    let lower = name.to_ascii_lowercase();
    let index = |prefix: &str| -> Option<Result<usize>> {
        lower.strip_prefix(prefix).map(|rest| {
            let rest = rest.trim_start_matches('_');
            if rest.is_empty() {
                return Ok(k);
            }
            match rest.parse::<usize>() {
                Ok(j) if j == k => Ok(j),
                Ok(j) => domain(format!("{name} has degree {j}, requested {k}")),
                Err(_) => domain(format!("unknown polynomial {name:?}")),
            }
        })
    };
    let kind = if lower == "euler" || lower == "e" {
        if tag != AlgebraTag::So(2 * k) {
            return domain(format!("euler of degree {k} needs so({}), got {tag}", 2 * k));
        }
        PolynomialKind::Euler
    } else if lower == "pontryagin_1" || lower == "p1" || lower == "pontryagin" {
        if k != 2 {
            return domain("pontryagin_1 has degree 2");
        }
        PolynomialKind::Pontryagin1
    } else if let Some(j) = index("trace_power") {
        PolynomialKind::TracePower(j?)
    } else if let Some(j) = index("chern").or_else(|| index("c")) {
        let j = j?;
        match tag {
            AlgebraTag::U(n) | AlgebraTag::Su(n) if j <= n => PolynomialKind::Chern(j),
            _ => return domain(format!("c{j} needs u(n) or su(n) with n >= {j}, got {tag}")),
        }
    } else {
        return domain(format!("unknown polynomial {name:?}"));
    };
    Ok(InvariantPolynomial { kind, degree: k, tag })
}

impl InvariantPolynomial {
    pub fn kind(&self) -> PolynomialKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tag(&self) -> AlgebraTag {
        self.tag
    }

    /// The same polynomial read on another algebra of matrices of the same
    /// size, e.g. `c₁` of `u(2)` restricted to `su(2)`.
    pub fn on_algebra(&self, tag: AlgebraTag) -> Result<Self> {
        if tag.size() != self.tag.size() {
            return domain("restriction needs matrices of the same size");
        }
        Ok(InvariantPolynomial { tag, ..self.clone() })
    }

    /// Homogeneous value `P(X)` on a raw matrix.
    pub fn homogeneous(&self, x: &Matrix) -> f64 {
        let k = self.degree as i32;
        match self.kind {
            PolynomialKind::Euler => {
                let re = x.map(|z| z.re);
                let pf = pf_rec(&re, &(0..re.nrows()).collect::<Vec<_>>());
                pf / (2.0 * PI).powi(k)
            }
            PolynomialKind::Pontryagin1 => -(x * x).trace().re / (8.0 * PI * PI),
            PolynomialKind::TracePower(p) => {
                let mut m = x.clone();
                for _ in 1..p {
                    m = &m * x;
                }
                m.trace().re
            }
            PolynomialKind::Chern(j) => {
                let m = x * Complex64::new(0.0, 1.0 / (2.0 * PI));
                elementary_from_traces(&m, j).re
            }
        }
    }

    /// `P(X)` on an element of the polynomial's algebra.
    pub fn eval(&self, x: &LieAlgebraElement) -> Result<f64> {
        self.check(x)?;
        Ok(self.homogeneous(x.matrix()))
    }

    fn check(&self, x: &LieAlgebraElement) -> Result<()> {
        if x.tag() != self.tag {
            return domain(format!("{self} evaluated on a {} element", x.tag()));
        }
        Ok(())
    }

    /// Polarization on raw matrices: `(1/k!) Σ_{S≠∅} (-1)^{k-|S|} P(Σ_{i∈S} X_i)`.
    pub(crate) fn polarize_matrices(&self, xs: &[&Matrix]) -> f64 {
        let k = xs.len();
        let n = self.tag.size();
        let mut acc = 0.0;
        for mask in 1u32..(1 << k) {
            let mut sum = Matrix::zeros(n, n);
            for (i, x) in xs.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    sum += *x;
                }
            }
            let sign = if (k - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * self.homogeneous(&sum);
        }
        let factorial: f64 = (1..=k).map(|m| m as f64).product();
        acc / factorial
    }
}

fn elementary_from_traces(m: &Matrix, j: usize) -> Complex64 {
    // Newton: r e_r = Σ_{i=1}^r (-1)^{i-1} e_{r-i} p_i with p_i = Tr(M^i).
    let mut powers = Vec::with_capacity(j);
    let mut acc = m.clone();
    for _ in 0..j {
        powers.push(acc.trace());
        acc = &acc * m;
    }
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for r in 1..=j {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 1..=r {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            s += e[r - i] * powers[i - 1] * sign;
        }
        e.push(s / r as f64);
    }
    e[j]
}

/// Symmetric multilinear value `P(X₁,…,X_k)`.
pub fn polarize_eval(p: &InvariantPolynomial, xs: &[&LieAlgebraElement]) -> Result<f64> {
    if xs.len() != p.degree {
        return domain(format!("{p} takes {} arguments, got {}", p.degree, xs.len()));
    }
    for x in xs {
        p.check(x)?;
    }
    let ms: Vec<&Matrix> = xs.iter().map(|x| x.matrix()).collect();
    Ok(p.polarize_matrices(&ms))
}

// ---------------------------------------------------------------------------
// Evaluation on forms

/// One Lie-valued form argument, evaluated on subsets of a fixed tangent list
/// given by increasing index lists.
pub struct FormArgument<'a> {
    degree: usize,
    eval: Box<dyn Fn(&[usize]) -> Result<LieAlgebraElement> + 'a>,
}

impl<'a> FormArgument<'a> {
    pub fn new<F>(degree: usize, eval: F) -> Self
    where
        F: Fn(&[usize]) -> Result<LieAlgebraElement> + 'a,
    {
        FormArgument {
            degree,
            eval: Box::new(eval),
        }
    }

    /// A form field at a point, reading tangents by index.
    pub fn from_field(field: &'a FormField<LieAlgebraElement>, point: &'a [f64], tangents: &'a [&'a [f64]]) -> Self {
        FormArgument::new(field.degree(), move |idx| {
            let t: Vec<&[f64]> = idx.iter().map(|&i| tangents[i]).collect();
            field.evaluate(point, &t)
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

/// `P(α₁,…,α_k)` on `count` tangents, summing over shuffles of the tangent indices.
pub fn eval_indexed(p: &InvariantPolynomial, args: &[FormArgument<'_>], count: usize) -> Result<f64> {
    if args.len() != p.degree {
        return domain(format!("{p} takes {} form arguments, got {}", p.degree, args.len()));
    }
    let degrees: Vec<usize> = args.iter().map(|a| a.degree).collect();
    if degrees.iter().sum::<usize>() != count {
        return domain(format!("form degrees {degrees:?} do not match {count} tangents"));
    }
    let mut acc = 0.0;
    for s in shuffles(&degrees) {
        let values: Vec<LieAlgebraElement> =
            args.iter().zip(&s.blocks).map(|(a, b)| (a.eval)(b)).collect::<Result<_>>()?;
        let refs: Vec<&LieAlgebraElement> = values.iter().collect();
        acc += s.sign * polarize_eval(p, &refs)?;
    }
    Ok(acc)
}

/// `P(α₁,…,α_k)` for form fields at a point.
pub fn eval_on_forms(
    p: &InvariantPolynomial,
    forms: &[&FormField<LieAlgebraElement>],
    point: &[f64],
    tangents: &[&[f64]],
) -> Result<f64> {
    if let Some(f) = forms.iter().find(|f| f.dim() != point.len()) {
        return domain(format!("form on a {}-dimensional chart at a {}-dimensional point", f.dim(), point.len()));
    }
    let args: Vec<FormArgument<'_>> = forms.iter().map(|f| FormArgument::from_field(f, point, tangents)).collect();
    eval_indexed(p, &args, tangents.len())
}

/// The scalar form `P(α₁,…,α_k)`.
pub fn polynomial_form(p: &InvariantPolynomial, forms: &[FormField<LieAlgebraElement>]) -> Result<FormField<f64>> {
    let dim = match forms.first() {
        Some(f) => f.dim(),
        None => return domain("polynomial of no forms"),
    };
    if forms.iter().any(|f| f.dim() != dim) {
        return domain("forms live on different charts");
    }
    if forms.len() != p.degree {
        return domain(format!("{p} takes {} form arguments, got {}", p.degree, forms.len()));
    }
    let degree = forms.iter().map(|f| f.degree()).sum();
    let (p, forms) = (p.clone(), forms.to_vec());
    Ok(FormField::new(dim, degree, 0.0, move |x, t| {
        let refs: Vec<&FormField<LieAlgebraElement>> = forms.iter().collect();
        eval_on_forms(&p, &refs, x, t)
    }))
}

/// `Σ_m (-1)^{p₁+⋯+p_m} P(α₁,…,[α_m,φ],…,α_k)`; zero for Ad-invariant `P`.
pub fn invariance_identity_residual(
    p: &InvariantPolynomial,
    forms: &[FormField<LieAlgebraElement>],
    phi: &FormField<LieAlgebraElement>,
    point: &[f64],
    tangents: &[&[f64]],
) -> Result<f64> {
    if phi.degree() != 1 {
        return domain("the invariance identity needs a 1-form φ");
    }
    let mut acc = 0.0;
    let mut running = 0usize;
    for m in 0..forms.len() {
        running += forms[m].degree();
        let mut args = forms.to_vec();
        args[m] = bracket_wedge(&forms[m], phi)?;
        let refs: Vec<&FormField<LieAlgebraElement>> = args.iter().collect();
        let sign = if running % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * eval_on_forms(p, &refs, point, tangents)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_algebras::{exp, standard_normal};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn matching_pfaffian(x: &DMatrix<f64>) -> f64 {
        // Sum over perfect matchings with crossing sign.
        fn rec(x: &DMatrix<f64>, free: Vec<usize>, pairs: &mut Vec<(usize, usize)>, acc: &mut f64) {
            if free.is_empty() {
                let mut perm = Vec::new();
                for &(a, b) in pairs.iter() {
                    perm.push(a);
                    perm.push(b);
                }
                let mut inv = 0;
                for i in 0..perm.len() {
                    for j in i + 1..perm.len() {
                        if perm[i] > perm[j] {
                            inv += 1;
                        }
                    }
                }
                let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
                *acc += sign * pairs.iter().map(|&(a, b)| x[(a, b)]).product::<f64>();
                return;
            }
            let a = free[0];
            for m in 1..free.len() {
                let b = free[m];
                let rest: Vec<usize> = free.iter().copied().filter(|&v| v != a && v != b).collect();
                pairs.push((a, b));
                rec(x, rest, pairs, acc);
                pairs.pop();
            }
        }
        let mut acc = 0.0;
        rec(x, (0..x.nrows()).collect(), &mut Vec::new(), &mut acc);
        acc
    }

    fn skew(n: usize, entries: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        let mut it = entries.iter();
        for a in 0..n {
            for b in a + 1..n {
                let v = *it.next().unwrap();
                m[(a, b)] = v;
                m[(b, a)] = -v;
            }
        }
        m
    }

    #[test]
    fn pfaffian_examples() {
        assert_eq!(pfaffian(&skew(2, &[3.5])).unwrap(), 3.5);
        let mut block = DMatrix::zeros(4, 4);
        block[(0, 1)] = 2.0;
        block[(1, 0)] = -2.0;
        block[(2, 3)] = -5.0;
        block[(3, 2)] = 5.0;
        assert_eq!(pfaffian(&block).unwrap(), -10.0);
        assert_eq!(pfaffian(&block).unwrap(), matching_pfaffian(&block));
        assert_eq!(pfaffian(&DMatrix::zeros(6, 6)).unwrap(), 0.0);
        assert!(pfaffian(&DMatrix::from_element(2, 2, 1.0)).is_err());
        assert!(pfaffian(&DMatrix::zeros(3, 3)).is_err());
    }

    proptest! {
        #[test]
        fn pfaffian_matches_matchings(n in prop::sample::select(vec![2usize, 4, 6]), seed in 0u64..1000) {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let entries: Vec<f64> = (0..n * (n - 1) / 2).map(|_| r.gen_range(-3i32..=3) as f64).collect();
            let m = skew(n, &entries);
            let pf = pfaffian(&m).unwrap();
            prop_assert_eq!(pf, matching_pfaffian(&m));
            let det = m.determinant();
            prop_assert!((pf * pf - det).abs() <= 1e-8 * det.abs().max(1.0));
        }
    }

    #[test]
    fn named_examples() {
        let e = make_polynomial("euler", 1, AlgebraTag::So(2)).unwrap();
        let x = LieAlgebraElement::from_real(&[vec![0.0, 1.7], vec![-1.7, 0.0]]).unwrap();
        assert!((e.eval(&x).unwrap() - 1.7 / (2.0 * PI)).abs() < 1e-15);

        let c1 = make_polynomial("c1", 1, AlgebraTag::U(1)).unwrap();
        let theta = 0.9;
        let u = LieAlgebraElement::new(
            AlgebraTag::U(1),
            Matrix::from_element(1, 1, Complex64::new(0.0, theta)),
            1e-12,
        )
        .unwrap();
        // det(1 + i·iθ/2π) = 1 - θ/2π: the linear coefficient carries the sign convention.
        assert!((c1.eval(&u).unwrap() + theta / (2.0 * PI)).abs() < 1e-15);

        assert!(make_polynomial("euler", 2, AlgebraTag::So(3)).is_err());
        assert!(make_polynomial("c3", 3, AlgebraTag::U(2)).is_err());
        assert!(make_polynomial("c2", 1, AlgebraTag::U(2)).is_err());
        assert!(make_polynomial("p1", 1, AlgebraTag::So(4)).is_err());
        assert!(make_polynomial("todd", 1, AlgebraTag::So(4)).is_err());
        assert_eq!(make_polynomial("chern_2", 2, AlgebraTag::U(2)).unwrap().kind(), PolynomialKind::Chern(2));
        assert_eq!(make_polynomial("trace_power", 3, AlgebraTag::U(2)).unwrap().kind(), PolynomialKind::TracePower(3));
    }

    #[test]
    fn chern_on_diagonal_is_elementary_symmetric() {
        let thetas = [0.4, -1.3, 2.2];
        let m = Matrix::from_fn(3, 3, |a, b| if a == b { Complex64::new(0.0, thetas[a]) } else { Complex64::new(0.0, 0.0) });
        let x = LieAlgebraElement::new(AlgebraTag::U(3), m, 1e-12).unwrap();
        // Eigenvalues of iX/2π are -θ/2π.
        let t: Vec<f64> = thetas.iter().map(|v| -v / (2.0 * PI)).collect();
        let expected = [
            t[0] + t[1] + t[2],
            t[0] * t[1] + t[0] * t[2] + t[1] * t[2],
            t[0] * t[1] * t[2],
        ];
        for j in 1..=3 {
            let c = make_polynomial("chern", j, AlgebraTag::U(3)).unwrap();
            assert!((c.eval(&x).unwrap() - expected[j - 1]).abs() < 1e-12);
        }
    }

    fn shipped() -> Vec<InvariantPolynomial> {
        vec![
            make_polynomial("euler", 1, AlgebraTag::So(2)).unwrap(),
            make_polynomial("euler", 2, AlgebraTag::So(4)).unwrap(),
            make_polynomial("euler", 3, AlgebraTag::So(6)).unwrap(),
            make_polynomial("c1", 1, AlgebraTag::U(2)).unwrap(),
            make_polynomial("c2", 2, AlgebraTag::U(2)).unwrap(),
            make_polynomial("c2", 2, AlgebraTag::Su(3)).unwrap(),
            make_polynomial("p1", 2, AlgebraTag::So(4)).unwrap(),
            make_polynomial("p1", 2, AlgebraTag::U(2)).unwrap(),
            make_polynomial("trace_power", 3, AlgebraTag::U(3)).unwrap(),
        ]
    }

    #[test]
    fn polarization_is_symmetric_multilinear_and_diagonal() {
        let mut r = rng();
        for p in shipped() {
            let k = p.degree();
            let xs: Vec<LieAlgebraElement> = (0..k).map(|_| LieAlgebraElement::random(p.tag(), &mut r, 1.0)).collect();
            let refs: Vec<&LieAlgebraElement> = xs.iter().collect();
            let v = polarize_eval(&p, &refs).unwrap();
            let mut rev = refs.clone();
            rev.reverse();
            assert!((polarize_eval(&p, &rev).unwrap() - v).abs() < 1e-12);
            if k >= 3 {
                let mut rot = refs.clone();
                rot.rotate_left(1);
                assert!((polarize_eval(&p, &rot).unwrap() - v).abs() < 1e-12);
            }
            let diag = vec![&xs[0]; k];
            assert!((polarize_eval(&p, &diag).unwrap() - p.eval(&xs[0]).unwrap()).abs() < 1e-12);
            let zero = LieAlgebraElement::zero(p.tag());
            let mut with_zero = refs.clone();
            with_zero[0] = &zero;
            assert!(polarize_eval(&p, &with_zero).unwrap().abs() < 1e-14);
            let y = LieAlgebraElement::random(p.tag(), &mut r, 1.0);
            let combo = &xs[0].scale(2.0) + &y.scale(-0.5);
            let mut a = refs.clone();
            a[0] = &combo;
            let mut b = refs.clone();
            b[0] = &y;
            let lin = 2.0 * v - 0.5 * polarize_eval(&p, &b).unwrap();
            assert!((polarize_eval(&p, &a).unwrap() - lin).abs() < 1e-12);
        }
        let p = make_polynomial("p1", 2, AlgebraTag::So(4)).unwrap();
        let wrong = LieAlgebraElement::random(AlgebraTag::So(3), &mut r, 1.0);
        assert!(polarize_eval(&p, &[&wrong, &wrong]).is_err());
    }

    #[test]
    fn infinitesimal_invariance() {
        let mut r = rng();
        for p in shipped() {
            let x = LieAlgebraElement::random(p.tag(), &mut r, 1.0);
            let z = LieAlgebraElement::random(p.tag(), &mut r, 1.0);
            let h = 1e-5;
            let plus = x.adjoint_action(&exp(z.scale(h).matrix()));
            let minus = x.adjoint_action(&exp(z.scale(-h).matrix()));
            let d = (p.homogeneous(plus.matrix()) - p.homogeneous(minus.matrix())) / (2.0 * h);
            assert!(d.abs() < 1e-8, "{p}: {d}");
        }
    }

    fn lie_one_form(tag: AlgebraTag, dim: usize, seed: u64) -> FormField<LieAlgebraElement> {
        // Affine coefficients: α_x(v) = Σ_i v_i (C_i + x_i D_i).
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<LieAlgebraElement> = (0..dim).map(|_| LieAlgebraElement::random(tag, &mut r, 1.0)).collect();
        let d: Vec<LieAlgebraElement> = (0..dim).map(|_| LieAlgebraElement::random(tag, &mut r, 1.0)).collect();
        FormField::new(dim, 1, LieAlgebraElement::zero(tag), move |x, t| {
            let mut acc = LieAlgebraElement::zero(tag);
            for i in 0..x.len() {
                acc = &acc + &(&c[i] + &d[i].scale(x[i])).scale(t[0][i]);
            }
            Ok(acc)
        })
    }

    fn random_vecs(r: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| (0..dim).map(|_| standard_normal(r)).collect()).collect()
    }

    #[test]
    fn eval_on_forms_examples() {
        let tag = AlgebraTag::So(4);
        let p1 = make_polynomial("p1", 2, tag).unwrap();
        let a = lie_one_form(tag, 5, 1);
        let b = lie_one_form(tag, 5, 2);
        let mut r = rng();
        let x = vec![0.1, 0.2, -0.3, 0.4, 0.0];
        let ts = random_vecs(&mut r, 2, 5);
        let t: Vec<&[f64]> = ts.iter().map(|v| v.as_slice()).collect();

        // Single argument.
        let tp = make_polynomial("trace_power", 1, AlgebraTag::U(2)).unwrap();
        let u = lie_one_form(AlgebraTag::U(2), 5, 3);
        let direct = tp.eval(&u.evaluate(&x, &t[..1]).unwrap()).unwrap();
        assert!((eval_on_forms(&tp, &[&u], &x, &t[..1]).unwrap() - direct).abs() < 1e-14);

        // Repeated tangent.
        let rep: Vec<&[f64]> = vec![t[0], t[0]];
        assert!(eval_on_forms(&p1, &[&a, &b], &x, &rep).unwrap().abs() < 1e-14);

        // Abelian odd forms square to zero.
        let tp2 = make_polynomial("trace_power", 2, AlgebraTag::U(1)).unwrap();
        let v = lie_one_form(AlgebraTag::U(1), 5, 4);
        assert!(eval_on_forms(&tp2, &[&v, &v], &x, &t).unwrap().abs() < 1e-14);

        // Definition oracle for two 1-forms.
        let (a0, a1) = (a.evaluate(&x, &t[..1]).unwrap(), a.evaluate(&x, &t[1..]).unwrap());
        let (b0, b1) = (b.evaluate(&x, &t[..1]).unwrap(), b.evaluate(&x, &t[1..]).unwrap());
        let oracle = polarize_eval(&p1, &[&a0, &b1]).unwrap() - polarize_eval(&p1, &[&a1, &b0]).unwrap();
        assert!((eval_on_forms(&p1, &[&a, &b], &x, &t).unwrap() - oracle).abs() < 1e-14);

        assert!(eval_on_forms(&p1, &[&a, &b], &x, &t[..1]).is_err());
    }

    #[test]
    fn eval_on_forms_is_alternating_and_multilinear() {
        let tag = AlgebraTag::So(4);
        let e = make_polynomial("euler", 2, tag).unwrap();
        let a = lie_one_form(tag, 4, 5);
        let sq = bracket_wedge(&a, &a).unwrap();
        let b = lie_one_form(tag, 4, 6);
        let mut r = rng();
        let x = vec![0.3, -0.1, 0.2, 0.5];
        let ts = random_vecs(&mut r, 3, 4);
        let t: Vec<&[f64]> = ts.iter().map(|v| v.as_slice()).collect();
        let v = eval_on_forms(&e, &[&a, &sq], &x, &t).unwrap();
        let swapped: Vec<&[f64]> = vec![t[1], t[0], t[2]];
        assert!((eval_on_forms(&e, &[&a, &sq], &x, &swapped).unwrap() + v).abs() < 1e-12);
        let cyc: Vec<&[f64]> = vec![t[1], t[2], t[0]];
        assert!((eval_on_forms(&e, &[&a, &sq], &x, &cyc).unwrap() - v).abs() < 1e-12);
        let ab = a.add_scaled(&b, 2.0).unwrap();
        let lhs = eval_on_forms(&e, &[&ab, &sq], &x, &t).unwrap();
        let rhs = v + 2.0 * eval_on_forms(&e, &[&b, &sq], &x, &t).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn invariance_identity_vanishes() {
        let tag = AlgebraTag::So(4);
        let mut r = rng();
        let a = lie_one_form(tag, 4, 7);
        let b = lie_one_form(tag, 4, 8);
        let phi = lie_one_form(tag, 4, 9);
        let sq = bracket_wedge(&b, &b).unwrap();
        let x = vec![0.2, 0.1, -0.4, 0.3];
        for name in ["p1", "euler"] {
            let p = make_polynomial(name, 2, tag).unwrap();
            let ts = random_vecs(&mut r, 4, 4);
            let t: Vec<&[f64]> = ts.iter().map(|v| v.as_slice()).collect();
            let res = invariance_identity_residual(&p, &[a.clone(), sq.clone()], &phi, &x, &t).unwrap();
            assert!(res.abs() < 1e-10, "{name}: {res}");
            let zero = FormField::new(4, 1, LieAlgebraElement::zero(tag), move |_, _| Ok(LieAlgebraElement::zero(tag)));
            let res0 = invariance_identity_residual(&p, &[a.clone(), sq.clone()], &zero, &x, &t).unwrap();
            assert_eq!(res0, 0.0);
        }
    }
}
