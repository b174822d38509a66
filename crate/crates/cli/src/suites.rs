//! The verification suites. Each acceptance criterion is one function
//! returning its records; the subcommands reuse them, or build a single
//! custom check when a bundle is named on the command line.

use std::f64::consts::PI;

use csforms_core::bundle_geometry::{
    base_characteristic_form, characteristic_form, exterior_derivative_at, fiber_integral_with_lift,
    heterotic_residual, obstruction_identity_check, phi_p_form, phi_p_term, psi_characteristic_form,
    transgression_residual, BundleChart, TotalForm, TotalTangent,
};
use csforms_core::bundle_zoo::{
    named_bundle, quaternionic_degree_integral, resolve_chart, round_degree, south_zero_index, zero_index,
    NamedBundle, QuaternionicSection, SphereChart,
};
use csforms_core::exact_coefficients::{
    build_table_by_recursion, cs_coefficient, fiber_constant, fiber_constant_closed_form, verify_linear_relations,
    CoefficientTable, Rational,
};
use csforms_core::exterior_calculus::{
    bracket_wedge, exterior_derivative, integrate, wedge, FdOptions, FormField, FormValue, ParametrizedChain,
    SmoothMap,
};
use csforms_core::invariant_polynomials::{
    invariance_identity_residual, make_polynomial, InvariantPolynomial, PolynomialKind,
};
use csforms_core::lie_algebras::{AlgebraTag, LieAlgebraElement};
use csforms_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, RunConfig};
use crate::report::Record;
use crate::CliError;

type Out = Result<Vec<Record>, CliError>;

// Tolerances. Exact checks use 0.
const ALGEBRAIC: f64 = 1e-10;
const FD_SINGLE: f64 = 1e-5;
const FD_PRODUCT: f64 = 1e-4;

const ANCHOR_COEFFS: &str = "A_ij closed form, both recursions and the linear relations behind dΦP = P(Ω) - P(Ψ)";
const ANCHOR_CS: &str = "A_i0 equals the Chern-Simons coefficient with the (k+i)! convention";
const ANCHOR_FIBER_CONST: &str = "fiber normalization constant k/((2k-1)2^(k-1))";
const ANCHOR_HETEROTIC: &str = "heterotic identity dΦP(ω) = P(Ω) - P(Ψ)";
const ANCHOR_NATURAL: &str = "naturally associated bundle: P(Ψ) = 0";
const ANCHOR_GB: &str = "Gauss-Bonnet: ∫ e(Ω) = χ";
const ANCHOR_OBSTRUCTION: &str = "∫_α e(Ω) = Σ a_j + ∫_∂α s*Φe(ω)";
const ANCHOR_CHERN: &str = "normalization ∫_S² c₁ = 1 for the Hopf bundle";
const ANCHOR_CHAR: &str = "characteristic number by quadrature";
const ANCHOR_FIBER: &str = "fiber normalization ∫_fiber Φe = 1";
const ANCHOR_FIBER_P1: &str = "∫ P₁(φ₁,[φ₁,φ₁]) over the ℝP³ fiber of B₁";
const ANCHOR_SPLIT: &str = "Pontryagin splitting P₁(Ψ₁) + P₁(Ψ₂) = P₁(Ω)";
const ANCHOR_SUM_RULE: &str = "sum rule dΦP₁(ω₁) + dΦP₁(ω₂) = P₁(Ω)";
const ANCHOR_CLOSED: &str = "TP(ω) closed when P(Ω) = 0";
const ANCHOR_CLOSED_PHI: &str = "ΦP(ω) closed when P(Ω) = 0 and P(Ψ) = 0";
const ANCHOR_DEGREE: &str = "quaternionic section lifts of degree 2 and -2 at the South pole";
const ANCHOR_INDEX: &str = "index of a zero as a local winding degree";

/// Shared run parameters for the suites.
pub struct Context<'a> {
    pub config: &'a RunConfig,
}

impl Context<'_> {
    /// An independent stream per check, determined by the seed and the stream name.
    fn rng(&self, stream: &str) -> ChaCha8Rng {
        // FNV-1a, stable across platforms and releases.
        let mut h: u64 = 0xcbf29ce484222325;
        for b in stream.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x100000001b3);
        }
        ChaCha8Rng::seed_from_u64(self.config.seed ^ h)
    }

    fn fd(&self) -> FdOptions {
        FdOptions::new(self.config.fd_step)
    }

    /// Richardson extrapolation at ten times the plain step, for checks
    /// whose tolerance is below the plain central-difference floor.
    fn fd_refined(&self) -> FdOptions {
        FdOptions::with_richardson(10.0 * self.config.fd_step)
    }

    fn order(&self, default: usize) -> usize {
        self.config.quad_order.unwrap_or(default)
    }

    fn points(&self) -> usize {
        self.config.points
    }
}

/// Max that propagates NaN, so a single bad sample fails the record.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn tangents(chart: &BundleChart, rng: &mut ChaCha8Rng, n: usize) -> Vec<TotalTangent> {
    (0..n).map(|_| chart.random_tangent(rng)).collect()
}

// ---------------------------------------------------------------------------
// Name resolution

/// Canonical key of a polynomial in the bundle catalogue.
fn poly_key(p: &InvariantPolynomial) -> String {
    match p.kind() {
        PolynomialKind::Euler => "euler".into(),
        PolynomialKind::Chern(j) => format!("c{j}"),
        PolynomialKind::Pontryagin1 => "p1".into(),
        PolynomialKind::TracePower(k) => format!("trace_power_{k}"),
    }
}

/// Build a polynomial by name, inferring the degree from the name or the algebra.
pub fn resolve_poly(name: &str, k: Option<usize>, tag: AlgebraTag) -> Result<InvariantPolynomial, CliError> {
    let lower = name.to_ascii_lowercase();
    let inferred = match lower.as_str() {
        "euler" | "e" => match tag {
            AlgebraTag::So(n) if n % 2 == 0 => Some(n / 2),
            _ => None,
        },
        "p1" | "pontryagin" | "pontryagin_1" => Some(2),
        _ => {
            let digits: String = lower.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
            digits.chars().rev().collect::<String>().parse().ok()
        }
    };
    let k = k.or(inferred).ok_or_else(|| CliError::Usage(format!("polynomial {name:?} needs --k")))?;
    Ok(make_polynomial(name, k, tag)?)
}

fn default_poly_name(chart: &BundleChart, split: Option<&str>) -> &'static str {
    if matches!(split, Some("b1" | "b2")) {
        return "p1";
    }
    match chart.tag() {
        AlgebraTag::So(n) if n % 2 == 0 => "euler",
        AlgebraTag::So(_) => "p1",
        AlgebraTag::U(1) => "c1",
        AlgebraTag::U(_) | AlgebraTag::Su(_) => "c2",
    }
}

/// `bundle[/split]` from the config, the `--split` flag taking precedence.
fn chart_spec(config: &RunConfig) -> Option<String> {
    let bundle = config.bundle.as_ref()?;
    Some(match &config.split {
        Some(s) => format!("{}/{s}", bundle.split('/').next().unwrap_or(bundle)),
        None => bundle.clone(),
    })
}

fn split_of(spec: &str) -> Option<&str> {
    spec.split_once('/').map(|(_, s)| s)
}

fn full_chain_name(bundle: &NamedBundle) -> Result<&'static str, CliError> {
    match bundle.chart().base_dim() {
        2 => Ok("full_sphere"),
        4 => Ok("full_s4"),
        n => Err(CliError::Usage(format!("no closed chain is catalogued for a {n}-dimensional base"))),
    }
}

// ---------------------------------------------------------------------------
// 1, 2: exact coefficients

pub fn coefficients(k_max: usize) -> Out {
    let mut out = Vec::new();
    for k in 1..=k_max as i64 {
        let closed = CoefficientTable::closed_form(k)?;
        let (mismatches, detail) = match build_table_by_recursion(k) {
            Ok(t) => {
                let bad = closed.iter().filter(|&(i, j, v)| t.get(i, j) != *v).count();
                (bad as f64, format!("{} entries", closed.len()))
            }
            Err(e @ Error::Inconsistent { .. }) => (f64::NAN, e.to_string()),
            Err(e) => return Err(e.into()),
        };
        out.push(
            Record::check(format!("coeffs/k={k:02}/recursion"), ANCHOR_COEFFS, mismatches, 0.0, 0.0)
                .criterion(1)
                .detail(detail),
        );
        let mut cs_bad = 0;
        for i in 0..k {
            if closed.get(i, 0) != cs_coefficient(k, i)? {
                cs_bad += 1;
            }
        }
        out.push(Record::check(format!("coeffs/k={k:02}/chern_simons"), ANCHOR_CS, cs_bad as f64, 0.0, 0.0).criterion(1));
        let top = closed.get(0, k - 1);
        out.push(
            Record::check(
                format!("coeffs/k={k:02}/a_0_top"),
                "A_0,k-1 = 1",
                (top.clone() - Rational::one()).abs().to_f64(),
                0.0,
                0.0,
            )
            .criterion(1)
            .detail(format!("A_0,{} = {top}", k - 1)),
        );
        let rel = verify_linear_relations(k)?;
        let failures = rel.failures().count();
        out.push(
            Record::check(format!("coeffs/k={k:02}/linear_relations"), ANCHOR_COEFFS, failures as f64, 0.0, 0.0)
                .criterion(1)
                .detail(format!("{} exact residuals", rel.entries.len())),
        );
    }
    Ok(out)
}

pub fn fiber_constants(k_max: usize) -> Out {
    let mut out = Vec::new();
    for k in 1..=k_max as i64 {
        let value = fiber_constant(k)?;
        // Independent oracle: the closed form assembled here from integers.
        let oracle = Rational::new(k, (2 * k - 1) * (1i64 << (k - 1)));
        let library = fiber_constant_closed_form(k)?;
        let bad = usize::from(value != oracle) + usize::from(library != oracle);
        out.push(
            Record::check(format!("fiber_constant/k={k:02}"), ANCHOR_FIBER_CONST, bad as f64, 0.0, 0.0)
                .criterion(2)
                .detail(format!("{value}")),
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 3, 4: pointwise identities on total spaces

pub const HETEROTIC_CASES: [(&str, &str); 5] = [
    ("hopf_u1", "c1"),
    ("ut_s2/sphere", "euler"),
    ("frame_s4/sphere", "euler"),
    ("frame_s4/b1", "p1"),
    ("frame_s4/b2", "p1"),
];

fn heterotic_case(ctx: &Context, spec: &str, poly_name: &str) -> Result<Record, CliError> {
    let (bundle, chart) = resolve_chart(spec)?;
    let poly = resolve_poly(poly_name, ctx.config.k, chart.tag())?;
    let name = format!("heterotic/{spec}/{}", poly_key(&poly));
    let mut rng = ctx.rng(&name);
    let mut worst = 0.0;
    for _ in 0..ctx.points() {
        let p = bundle.random_point(&mut rng);
        let t = tangents(&chart, &mut rng, 2 * poly.degree());
        worst = worse(worst, heterotic_residual(&chart, &poly, &p, &t, ctx.fd())?);
    }
    Ok(Record::check(name, ANCHOR_HETEROTIC, worst, 0.0, FD_PRODUCT)
        .detail(format!("max over {} points, fd step {:e}", ctx.points(), ctx.config.fd_step)))
}

pub fn heterotic(ctx: &Context) -> Out {
    HETEROTIC_CASES
        .iter()
        .map(|(spec, poly)| Ok(heterotic_case(ctx, spec, poly)?.criterion(3)))
        .collect()
}

pub const NATURAL_CASES: [(&str, &str); 4] = [
    ("ut_s2/sphere", "euler"),
    ("frame_s4/sphere", "euler"),
    ("instanton_s4/su", "c1"),
    ("generic:u(2):3:1/su", "c1"),
];

fn natural_case(ctx: &Context, spec: &str, poly_name: &str) -> Result<Record, CliError> {
    let (bundle, chart) = resolve_chart(spec)?;
    let poly = resolve_poly(poly_name, None, chart.tag())?;
    let form = psi_characteristic_form(&chart, &poly)?;
    let name = format!("natural/{spec}/{}", poly_key(&poly));
    let mut rng = ctx.rng(&name);
    let mut worst = 0.0;
    for _ in 0..ctx.points() {
        let p = bundle.random_point(&mut rng);
        let t = tangents(&chart, &mut rng, 2 * poly.degree());
        worst = worse(worst, form.evaluate(&p, &t)?.abs());
    }
    Ok(Record::check(name, ANCHOR_NATURAL, worst, 0.0, ALGEBRAIC).detail(format!("max |P(Ψ)| over {} points", ctx.points())))
}

pub fn naturally_associated(ctx: &Context) -> Out {
    NATURAL_CASES
        .iter()
        .map(|(spec, poly)| Ok(natural_case(ctx, spec, poly)?.criterion(4)))
        .collect()
}

// ---------------------------------------------------------------------------
// 5, 6: integrals over the base

fn characteristic_number(
    ctx: &Context,
    bundle: &NamedBundle,
    poly: &InvariantPolynomial,
    chain_name: &str,
    anchor: &str,
) -> Result<Record, CliError> {
    let chain = bundle.chain(chain_name)?;
    if !chain.boundary.is_empty() {
        return Err(CliError::Usage(format!(
            "chain {chain_name} has a boundary; use the obstruction subcommand"
        )));
    }
    let (order, tol) = match bundle.chart().base_dim() {
        2 => (ctx.order(24), 1e-8),
        _ => (ctx.order(8), 1e-4),
    };
    let value = integrate(&base_characteristic_form(bundle.chart(), poly)?, &chain.chain, order)?;
    let key = poly_key(poly);
    let name = format!("integral/{}/{chain_name}/{key}", bundle.name());
    let detail = format!("quadrature order {order}");
    Ok(match bundle.expected_value(&key) {
        Some(e) => Record::check(name, anchor, value, e, tol).detail(detail),
        None => Record::info(name, anchor, value).detail(detail),
    })
}

pub fn gauss_bonnet(ctx: &Context) -> Out {
    let ut = named_bundle("ut_s2")?;
    let s4 = named_bundle("frame_s4")?;
    let e1 = make_polynomial("euler", 1, AlgebraTag::So(2))?;
    let e2 = make_polynomial("euler", 2, AlgebraTag::So(4))?;
    let mut out = vec![
        characteristic_number(ctx, &ut, &e1, "full_sphere", ANCHOR_GB)?.criterion(5),
        characteristic_number(ctx, &s4, &e2, "full_s4", ANCHOR_GB)?.criterion(5),
    ];
    out.extend(caps(ctx, &["cap_pi6", "cap_pi3", "cap_pi2"], &["height_gradient"])?);
    Ok(out)
}

fn obstruction_case(ctx: &Context, bundle: &NamedBundle, chain: &str, section: &str) -> Result<Record, CliError> {
    let chart = bundle.chart_with_split("sphere")?;
    let e1 = make_polynomial("euler", 1, AlgebraTag::So(2))?;
    let order = ctx.order(24);
    let r = obstruction_identity_check(&chart, &e1, &bundle.chain(chain)?, bundle.section(section)?, order)?;
    Ok(
        Record::check(format!("obstruction/{}/{chain}/{section}", bundle.name()), ANCHOR_OBSTRUCTION, r.residual, 0.0, FD_PRODUCT)
            .detail(format!(
                "lhs {:.12} = {} + boundary {:.12}, quadrature order {order}",
                r.lhs, r.index_sum, r.boundary_term
            )),
    )
}

fn caps(ctx: &Context, chains: &[&str], sections: &[&str]) -> Out {
    let ut = named_bundle("ut_s2")?;
    let mut out = Vec::new();
    for chain in chains {
        for section in sections {
            out.push(obstruction_case(ctx, &ut, chain, section)?.criterion(5));
        }
    }
    Ok(out)
}

pub fn chern_anchor(ctx: &Context) -> Out {
    let hopf = named_bundle("hopf_u1")?;
    let c1 = make_polynomial("c1", 1, AlgebraTag::U(1))?;
    Ok(vec![characteristic_number(ctx, &hopf, &c1, "full_sphere", ANCHOR_CHERN)?.criterion(6)])
}

/// Every catalogued characteristic number of the shipped bundles.
fn catalogue_numbers(ctx: &Context, bundles: &[&str], only: Option<&str>) -> Out {
    let mut out = Vec::new();
    for name in bundles {
        let bundle = named_bundle(name)?;
        let chain = full_chain_name(&bundle)?;
        let tag = bundle.chart().tag();
        let wanted = only.map(|o| resolve_poly(o, ctx.config.k, tag)).transpose()?.map(|p| poly_key(&p));
        let keys: Vec<&str> = bundle.expected().iter().map(|e| e.name).collect();
        for key in keys {
            if wanted.as_deref().is_some_and(|w| w != key) {
                continue;
            }
            let poly = resolve_poly(key, None, tag)?;
            out.push(characteristic_number(ctx, &bundle, &poly, chain, ANCHOR_CHAR)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 7: fiber integrals

/// Fiber integral with the primary lift and, where available, the second one.
fn fiber_value(chart: &BundleChart, form: &TotalForm<f64>, x: &[f64], order: usize) -> Result<(f64, f64), CliError> {
    let a = fiber_integral_with_lift(form, x, order, 0)?;
    let b = match chart.fiber().map(|f| f.lift_count()) {
        Some(n) if n > 1 => fiber_integral_with_lift(form, x, order, 1)?,
        _ => a,
    };
    Ok((a, b))
}

pub fn fiber_normalization(ctx: &Context) -> Out {
    let mut out = Vec::new();
    let cases: [(&str, usize, f64); 2] = [("ut_s2/sphere", 24, 1e-8), ("frame_s4/sphere", 10, 1e-4)];
    for (spec, order, tol) in cases {
        let (bundle, chart) = resolve_chart(spec)?;
        let poly = resolve_poly("euler", None, chart.tag())?;
        let order = ctx.order(order);
        let x = bundle.random_base_point(&mut ctx.rng(&format!("fiber/{spec}")));
        let form = phi_p_form(&chart, &poly)?;
        let (a, b) = fiber_value(&chart, &form, &x, order)?;
        out.push(
            Record::check(format!("fiber/{spec}/phi_e"), ANCHOR_FIBER, a, 1.0, tol)
                .criterion(7)
                .detail(format!("quadrature order {order}")),
        );
        out.push(
            Record::check(format!("fiber/{spec}/phi_e/lift_independence"), ANCHOR_FIBER, (a - b).abs(), 0.0, FD_SINGLE)
                .criterion(7)
                .detail("difference between two fiber parametrizations"),
        );
    }

    let (bundle, _) = resolve_chart("frame_s4/b1")?;
    let x = bundle.random_base_point(&mut ctx.rng("fiber/frame_s4/quaternionic"));
    let order = ctx.order(10);
    for split in ["b1", "b2"] {
        let chart = bundle.chart_with_split(split)?;
        let p1 = make_polynomial("p1", 2, chart.tag())?;
        let literal = fiber_integral_with_lift(&phi_p_term(&chart, &p1, 1, 0)?, &x, order, 0)?;
        let full = fiber_integral_with_lift(&phi_p_form(&chart, &p1)?, &x, order, 0)?;
        let spec = format!("frame_s4/{split}");
        if split == "b1" {
            out.push(
                Record::check(format!("fiber/{spec}/p1_phi_bracket"), ANCHOR_FIBER_P1, literal, 1.0, FD_PRODUCT)
                    .criterion(7)
                    .detail("literal integrand with P₁ = -Tr(X²)/8π²; ΦP₁ = -(1/6) of it on the fiber"),
            );
        } else {
            out.push(
                Record::info(format!("fiber/{spec}/p1_phi_bracket"), "∫ P₁(φ₂,[φ₂,φ₂]) over the ℝP³ fiber of B₂", literal)
                    .criterion(7),
            );
        }
        let expected = if split == "b1" { 1.0 } else { -1.0 };
        out.push(
            Record::check(format!("fiber/{spec}/phi_p1"), "fiber integral of ΦP₁ on the ℝP³ fiber", full, expected, FD_PRODUCT)
                .criterion(7)
                .detail(format!("quadrature order {order}")),
        );
    }
    Ok(out)
}

fn fiber_custom(ctx: &Context, spec: &str) -> Out {
    let (bundle, chart) = resolve_chart(spec)?;
    let poly_name = ctx.config.poly.clone().unwrap_or_else(|| default_poly_name(&chart, split_of(spec)).into());
    let poly = resolve_poly(&poly_name, ctx.config.k, chart.tag())?;
    let order = ctx.order(if chart.fiber().map_or(1, |f| f.dim()) == 1 { 24 } else { 10 });
    let x = bundle.random_base_point(&mut ctx.rng(&format!("fiber/{spec}")));
    let form = phi_p_form(&chart, &poly)?;
    let (a, b) = fiber_value(&chart, &form, &x, order)?;
    let name = format!("fiber/{spec}/{}", poly_key(&poly));
    let main = if poly.kind() == PolynomialKind::Euler {
        Record::check(name.clone(), ANCHOR_FIBER, a, 1.0, if order >= 24 { 1e-8 } else { 1e-4 })
    } else {
        Record::info(name.clone(), "fiber integral of ΦP", a)
    };
    Ok(vec![
        main.detail(format!("quadrature order {order}")),
        Record::check(format!("{name}/lift_independence"), ANCHOR_FIBER, (a - b).abs(), 0.0, FD_SINGLE),
    ])
}

// ---------------------------------------------------------------------------
// 8: the quaternionic splitting of P₁

pub fn pontryagin_split(ctx: &Context) -> Out {
    let bundle = named_bundle("frame_s4")?;
    let b1 = bundle.chart_with_split("b1")?;
    let b2 = bundle.chart_with_split("b2")?;
    let p1 = make_polynomial("p1", 2, b1.tag())?;
    let (psi1, psi2) = (psi_characteristic_form(&b1, &p1)?, psi_characteristic_form(&b2, &p1)?);
    let omega = characteristic_form(&b1, &p1)?;
    let sum = phi_p_form(&b1, &p1)?.add_scaled(&phi_p_form(&b2, &p1)?, 1.0)?;

    let mut rng = ctx.rng("pontryagin_split");
    let (mut pointwise, mut sum_rule) = (0.0, 0.0);
    for _ in 0..ctx.points() {
        let p = bundle.random_point(&mut rng);
        let t = tangents(&b1, &mut rng, 4);
        let rhs = omega.evaluate(&p, &t)?;
        pointwise = worse(pointwise, (psi1.evaluate(&p, &t)? + psi2.evaluate(&p, &t)? - rhs).abs());
        sum_rule = worse(sum_rule, (exterior_derivative_at(&sum, &p, &t, ctx.fd())? - rhs).abs());
    }
    let s4 = make_polynomial("p1", 2, AlgebraTag::So(4))?;
    Ok(vec![
        Record::check("pontryagin/frame_s4/pointwise", ANCHOR_SPLIT, pointwise, 0.0, ALGEBRAIC)
            .criterion(8)
            .detail(format!("max over {} points", ctx.points())),
        Record::check("pontryagin/frame_s4/sum_rule", ANCHOR_SUM_RULE, sum_rule, 0.0, FD_PRODUCT)
            .criterion(8)
            .detail(format!("max over {} points, fd step {:e}", ctx.points(), ctx.config.fd_step)),
        characteristic_number(ctx, &bundle, &s4, "full_s4", "p₁(TS⁴) = 0")?.criterion(8),
    ])
}

// ---------------------------------------------------------------------------
// 9: closedness on flat bundles

const FLAT_TP: [(&str, &str); 4] = [
    ("flat:so(4):3/trivial", "euler"),
    ("flat:so(4):3/trivial", "p1"),
    ("flat:u(2):3/trivial", "c1"),
    ("flat:u(2):3/trivial", "c2"),
];

const FLAT_PHI: [(&str, &str); 3] = [
    ("flat:so(4):3/sphere", "euler"),
    ("flat:so(2):2/sphere", "euler"),
    ("flat:u(2):3/su", "c1"),
];

pub fn flat_closedness(ctx: &Context) -> Out {
    let samples = ctx.points().min(20);
    let mut out = Vec::new();
    for (is_tp, cases) in [(true, &FLAT_TP[..]), (false, &FLAT_PHI[..])] {
        for (spec, poly_name) in cases {
            let (bundle, chart) = resolve_chart(spec)?;
            let poly = resolve_poly(poly_name, None, chart.tag())?;
            let label = if is_tp { "d_tp" } else { "d_phi_p" };
            let name = format!("flat/{spec}/{}/{label}", poly_key(&poly));
            let phi = if is_tp { None } else { Some(phi_p_form(&chart, &poly)?) };
            let mut rng = ctx.rng(&name);
            let mut worst = 0.0;
            for _ in 0..samples {
                let p = bundle.random_point(&mut rng);
                let t = tangents(&chart, &mut rng, 2 * poly.degree());
                let r = match &phi {
                    None => transgression_residual(&chart, &poly, &p, &t, ctx.fd_refined())?,
                    Some(f) => exterior_derivative_at(f, &p, &t, ctx.fd_refined())?.abs(),
                };
                worst = worse(worst, r);
            }
            out.push(
                Record::check(name, if is_tp { ANCHOR_CLOSED } else { ANCHOR_CLOSED_PHI }, worst, 0.0, 1e-8)
                    .criterion(9)
                    .detail(format!("max over {samples} points, Richardson step {:e}", 10.0 * ctx.config.fd_step)),
            );
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 10: quaternionic degrees

const SOUTH_RADIUS: f64 = 0.1;

pub fn quaternionic_degrees(ctx: &Context, which: &[QuaternionicSection]) -> Out {
    let order = ctx.order(10);
    let steps = ctx.config.transport_steps;
    let mut out = Vec::new();
    let mut degrees = Vec::new();
    for &w in which {
        let label = match w {
            QuaternionicSection::Sigma1 => "sigma1",
            QuaternionicSection::Sigma2 => "sigma2",
        };
        let value = quaternionic_degree_integral(w, SOUTH_RADIUS, order, steps, SphereChart::Standard)?;
        let d = round_degree(value)?;
        let alt = round_degree(quaternionic_degree_integral(w, SOUTH_RADIUS, order, steps, SphereChart::Alternate)?)?;
        let detail = format!("ε = {SOUTH_RADIUS}, quadrature order {order}, {steps} transport steps");
        out.push(Record::info(format!("degree/{label}/s3_lift/integral"), ANCHOR_DEGREE, value).criterion(10).detail(detail));
        out.push(
            Record::check(format!("degree/{label}/s3_lift/rounding_gap"), "rounding gap > 0.1", (value - d as f64).abs(), 0.0, 0.4)
                .criterion(10)
                .non_blocking(),
        );
        out.push(
            Record::check(format!("degree/{label}/reparametrization"), "degree invariant under reparametrization", alt as f64, d as f64, 0.0)
                .criterion(10)
                .non_blocking(),
        );
        out.push(
            Record::info(format!("degree/{label}/rp3"), "degree of the induced map to SO(4)/H ≅ ℝP³", 2.0 * d as f64)
                .criterion(10),
        );
        degrees.push(d);
    }
    if degrees.len() == 2 {
        let (hi, lo) = (degrees[0].max(degrees[1]), degrees[0].min(degrees[1]));
        let detail = format!("S³ lift degrees {} and {}", degrees[0], degrees[1]);
        out.push(
            Record::check("degree/pair/max", ANCHOR_DEGREE, hi as f64, 2.0, 0.0)
                .criterion(10)
                .non_blocking()
                .detail(detail.clone()),
        );
        out.push(
            Record::check("degree/pair/min", ANCHOR_DEGREE, lo as f64, -2.0, 0.0)
                .criterion(10)
                .non_blocking()
                .detail(detail),
        );
        out.push(
            Record::check("degree/pair/sum", "the two degrees sum to 0", (hi + lo) as f64, 0.0, 0.0)
                .criterion(10)
                .non_blocking(),
        );
    }
    Ok(out)
}

fn section_indices(ctx: &Context, bundle: &NamedBundle, only: Option<&str>) -> Out {
    let order = ctx.order(24);
    let mut out = Vec::new();
    for s in bundle.sections() {
        if only.is_some_and(|o| o != s.name()) {
            continue;
        }
        for z in s.zeros() {
            let index = match &z.point {
                Some(c) => zero_index(s, c, 0.05, order)?,
                None => south_zero_index(s, 0.05, order)?,
            };
            out.push(Record::check(
                format!("index/{}/{}/{}", bundle.name(), s.name(), z.label),
                ANCHOR_INDEX,
                index as f64,
                z.index as f64,
                0.0,
            ));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("bundle {} has no matching sections", bundle.name())));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 11: calculus properties on random forms

/// All increasing index tuples of length `p` from `0..n`.
fn combinations(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in combinations(n, p - 1) {
            if rest.first().map_or(true, |&r| r > first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
    }
    out
}

/// `Σ_I sin(w_I·x + c_I) v_I dx_I` with random frequencies, phases and values.
fn random_form<V: FormValue>(
    rng: &mut ChaCha8Rng,
    dim: usize,
    degree: usize,
    zero: V,
    mut value: impl FnMut(&mut ChaCha8Rng) -> V,
) -> FormField<V> {
    let terms: Vec<(Vec<usize>, Vec<f64>, f64, V)> = combinations(dim, degree)
        .into_iter()
        .map(|idx| {
            let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
            (idx, w, rng.gen_range(0.0..2.0 * PI), value(rng))
        })
        .collect();
    let z = zero.clone();
    FormField::new(dim, degree, zero, move |x, t| {
        let mut acc = z.clone();
        for (idx, w, c, v) in &terms {
            let arg: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + c;
            let minor = nalgebra::DMatrix::from_fn(degree, degree, |a, b| t[a][idx[b]]).determinant();
            acc.add_scaled(v, arg.sin() * minor);
        }
        Ok(acc)
    })
}

fn random_vectors(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(|t| t.as_slice()).collect()
}

fn sign(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn calculus(ctx: &Context) -> Out {
    const DIM: usize = 5;
    let samples = ctx.points().min(20);
    let fd = ctx.fd();
    let mut rng = ctx.rng("calculus");
    let scalar = |rng: &mut ChaCha8Rng, p: usize| random_form(rng, DIM, p, 0.0, |r| r.gen_range(-1.0..1.0));
    let tag = AlgebraTag::Su(2);
    let lie = |rng: &mut ChaCha8Rng, p: usize| {
        random_form(rng, DIM, p, LieAlgebraElement::zero(tag), |r| LieAlgebraElement::random(tag, r, 1.0))
    };

    let (mut dd, mut leibniz, mut antisym, mut jacobi, mut d_bracket) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in 0..samples {
        let (p, q) = (s % 3, (s / 3) % 2 + 1);
        let x: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let alpha = scalar(&mut rng, p);
        let ddalpha = exterior_derivative(&exterior_derivative(&alpha, fd), fd);
        let t = random_vectors(&mut rng, DIM, p + 2);
        dd = worse(dd, ddalpha.evaluate(&x, &refs(&t))?.abs());

        let beta = scalar(&mut rng, q);
        let lhs = exterior_derivative(&wedge(&alpha, &beta)?, fd);
        let rhs = wedge(&exterior_derivative(&alpha, fd), &beta)?
            .add_scaled(&wedge(&alpha, &exterior_derivative(&beta, fd))?, sign(p))?;
        let t = random_vectors(&mut rng, DIM, p + q + 1);
        leibniz = worse(leibniz, (lhs.evaluate(&x, &refs(&t))? - rhs.evaluate(&x, &refs(&t))?).abs());

        let (a, b, c) = (lie(&mut rng, p), lie(&mut rng, q), lie(&mut rng, 1));
        let t = random_vectors(&mut rng, DIM, p + q);
        let ab = bracket_wedge(&a, &b)?.evaluate(&x, &refs(&t))?;
        let ba = bracket_wedge(&b, &a)?.evaluate(&x, &refs(&t))?;
        antisym = worse(antisym, (&ab + &ba.scale(sign(p * q))).max_abs());

        let r = 1;
        let t = random_vectors(&mut rng, DIM, p + q + r);
        let tr = refs(&t);
        let j1 = bracket_wedge(&a, &bracket_wedge(&b, &c)?)?.evaluate(&x, &tr)?.scale(sign(p * r));
        let j2 = bracket_wedge(&b, &bracket_wedge(&c, &a)?)?.evaluate(&x, &tr)?.scale(sign(q * p));
        let j3 = bracket_wedge(&c, &bracket_wedge(&a, &b)?)?.evaluate(&x, &tr)?.scale(sign(r * q));
        jacobi = worse(jacobi, (&(&j1 + &j2) + &j3).max_abs());

        let t = random_vectors(&mut rng, DIM, p + q + 1);
        let lhs = exterior_derivative(&bracket_wedge(&a, &b)?, fd).evaluate(&x, &refs(&t))?;
        let rhs = bracket_wedge(&exterior_derivative(&a, fd), &b)?
            .add_scaled(&bracket_wedge(&a, &exterior_derivative(&b, fd))?, sign(p))?
            .evaluate(&x, &refs(&t))?;
        d_bracket = worse(d_bracket, (&lhs - &rhs).max_abs());
    }

    // Stokes on a square and a cube.
    let mut stokes: f64 = 0.0;
    for (dim, order) in [(2usize, 24usize), (3, 10)] {
        let domain: Vec<(f64, f64)> = (0..dim).map(|i| (-0.5 + 0.1 * i as f64, 0.7 - 0.2 * i as f64)).collect();
        let chain = ParametrizedChain::new(domain, SmoothMap::identity(dim))?;
        for _ in 0..3 {
            let alpha = random_form(&mut rng, dim, dim - 1, 0.0, |r| r.gen_range(-1.0..1.0));
            let inside = integrate(&exterior_derivative(&alpha, fd), &chain, ctx.order(order))?;
            let mut boundary = 0.0;
            for face in chain.boundary() {
                boundary += integrate(&alpha, &face, ctx.order(order))?;
            }
            stokes = worse(stokes, (inside - boundary).abs());
        }
    }

    let mut out = vec![
        Record::check("calculus/d_squared", "d∘d = 0", dd, 0.0, FD_PRODUCT),
        Record::check("calculus/leibniz", "d(α∧β) = dα∧β + (-1)^p α∧dβ", leibniz, 0.0, FD_SINGLE),
        Record::check("calculus/stokes", "∫ dα = ∫_∂ α on a square and a cube", stokes, 0.0, FD_SINGLE),
        Record::check("calculus/bracket_symmetry", "[α,β] = -(-1)^pq [β,α]", antisym, 0.0, ALGEBRAIC),
        Record::check("calculus/bracket_jacobi", "graded Jacobi identity", jacobi, 0.0, ALGEBRAIC),
        Record::check("calculus/bracket_leibniz", "d[α,β] = [dα,β] + (-1)^p [α,dβ]", d_bracket, 0.0, FD_SINGLE),
    ];

    // Invariance identity for every polynomial family.
    let polys: [(&str, usize, AlgebraTag); 6] = [
        ("euler", 2, AlgebraTag::So(4)),
        ("p1", 2, AlgebraTag::So(4)),
        ("c1", 1, AlgebraTag::U(2)),
        ("c2", 2, AlgebraTag::U(3)),
        ("c3", 3, AlgebraTag::U(3)),
        ("trace_power", 3, AlgebraTag::Su(3)),
    ];
    for (name, k, tag) in polys {
        let poly = make_polynomial(name, k, tag)?;
        let mut worst = 0.0;
        for s in 0..samples {
            let degrees: Vec<usize> = (0..k).map(|m| (s + m) % 2 + usize::from(m == 0 && s % 3 == 0)).collect();
            let forms: Vec<FormField<LieAlgebraElement>> = degrees
                .iter()
                .map(|&p| random_form(&mut rng, DIM, p, LieAlgebraElement::zero(tag), |r| LieAlgebraElement::random(tag, r, 1.0)))
                .collect();
            let phi = random_form(&mut rng, DIM, 1, LieAlgebraElement::zero(tag), |r| LieAlgebraElement::random(tag, r, 1.0));
            let total: usize = degrees.iter().sum::<usize>() + 1;
            let x: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = random_vectors(&mut rng, DIM, total);
            worst = worse(worst, invariance_identity_residual(&poly, &forms, &phi, &x, &refs(&t))?.abs());
        }
        out.push(Record::check(
            format!("calculus/invariance/{}", poly_key(&poly)),
            "Σ (-1)^(p₁+…+p_m) P(α₁,…,[α_m,φ],…,α_k) = 0",
            worst,
            0.0,
            ALGEBRAIC,
        ));
    }
    Ok(out.into_iter().map(|r| r.criterion(11)).collect())
}

// ---------------------------------------------------------------------------
// Dispatch

/// Records of one acceptance criterion at the given configuration.
pub fn criterion(n: u32, config: &RunConfig) -> Out {
    let ctx = Context { config };
    match n {
        1 => coefficients(12),
        2 => fiber_constants(12),
        3 => heterotic(&ctx),
        4 => naturally_associated(&ctx),
        5 => gauss_bonnet(&ctx),
        6 => chern_anchor(&ctx),
        7 => fiber_normalization(&ctx),
        8 => pontryagin_split(&ctx),
        9 => flat_closedness(&ctx),
        10 => quaternionic_degrees(&ctx, &[QuaternionicSection::Sigma1, QuaternionicSection::Sigma2]),
        11 => calculus(&ctx),
        _ => Err(CliError::Usage(format!("no acceptance criterion {n}"))),
    }
}

pub const CRITERIA: std::ops::RangeInclusive<u32> = 1..=11;

/// Records for a subcommand.
pub fn records(config: &RunConfig) -> Out {
    let ctx = Context { config };
    let spec = chart_spec(config);
    match config.command {
        Command::Coeffs => {
            let k = config.k.unwrap_or(12);
            let mut out = coefficients(k)?;
            out.extend(fiber_constants(k)?);
            Ok(out)
        }
        Command::Identities => calculus(&ctx),
        Command::HeteroticCheck => match spec {
            None => heterotic(&ctx),
            Some(spec) => {
                let chart = resolve_chart(&spec)?.1;
                let poly = config.poly.clone().unwrap_or_else(|| default_poly_name(&chart, split_of(&spec)).into());
                Ok(vec![heterotic_case(&ctx, &spec, &poly)?])
            }
        },
        Command::GaussBonnet => match spec {
            None => {
                let mut out = gauss_bonnet(&ctx)?;
                out.retain(|r| r.name.starts_with("integral/"));
                Ok(out)
            }
            Some(spec) => {
                let (bundle, chart) = resolve_chart(&spec)?;
                let poly = resolve_poly(config.poly.as_deref().unwrap_or("euler"), config.k, chart.tag())?;
                let chain = match &config.chain {
                    Some(c) => c.clone(),
                    None => full_chain_name(&bundle)?.to_string(),
                };
                Ok(vec![characteristic_number(&ctx, &bundle, &poly, &chain, ANCHOR_GB)?])
            }
        },
        Command::ChernNumber => match spec {
            None => {
                let mut out = chern_anchor(&ctx)?;
                out.extend(catalogue_numbers(&ctx, &["frame_s4", "instanton_s4"], None)?);
                Ok(out)
            }
            Some(spec) => {
                let bundle = resolve_chart(&spec)?.0;
                match &config.chain {
                    Some(chain) => {
                        let name = config.poly.clone().unwrap_or_else(|| default_poly_name(bundle.chart(), None).into());
                        let poly = resolve_poly(&name, config.k, bundle.chart().tag())?;
                        Ok(vec![characteristic_number(&ctx, &bundle, &poly, chain, ANCHOR_CHAR)?])
                    }
                    None => {
                        let out = catalogue_numbers(&ctx, &[bundle.name()], config.poly.as_deref())?;
                        if out.is_empty() {
                            return Err(CliError::Usage(format!("no catalogued number for bundle {}", bundle.name())));
                        }
                        Ok(out)
                    }
                }
            }
        },
        Command::FiberNorm => match spec {
            None => fiber_normalization(&ctx),
            Some(spec) => fiber_custom(&ctx, &spec),
        },
        Command::PontryaginSplit => pontryagin_split(&ctx),
        Command::Obstruction => {
            let bundle = named_bundle(spec.as_deref().map_or("ut_s2", |s| s.split('/').next().unwrap_or(s)))?;
            if bundle.sections().is_empty() || bundle.chart().base_dim() != 2 {
                return Err(CliError::Usage(format!("obstruction checks need a bundle over S² with sections, got {}", bundle.name())));
            }
            if config.chain.is_none() && config.section.is_none() && spec.is_none() {
                return caps(&ctx, &["cap_pi6", "cap_pi3", "cap_pi2"], &["height_gradient", "rotational"]);
            }
            let chains: Vec<String> = match &config.chain {
                Some(c) => vec![c.clone()],
                None => vec!["cap_pi6".into(), "cap_pi3".into(), "cap_pi2".into()],
            };
            let sections: Vec<String> = match &config.section {
                Some(s) => vec![s.clone()],
                None => bundle.sections().iter().map(|s| s.name().to_string()).collect(),
            };
            let mut out = Vec::new();
            for c in &chains {
                for s in &sections {
                    out.push(obstruction_case(&ctx, &bundle, c, s)?);
                }
            }
            Ok(out)
        }
        Command::Degree => {
            let bundle_name = spec.as_deref().map_or("frame_s4", |s| s.split('/').next().unwrap_or(s));
            let bundle = named_bundle(bundle_name)?;
            match bundle.chart().base_dim() {
                4 if bundle.name() == "frame_s4" => {
                    let which = match &config.section {
                        Some(s) => vec![QuaternionicSection::parse(s)?],
                        None => vec![QuaternionicSection::Sigma1, QuaternionicSection::Sigma2],
                    };
                    quaternionic_degrees(&ctx, &which)
                }
                2 => section_indices(&ctx, &bundle, config.section.as_deref()),
                _ => Err(CliError::Usage(format!("no degree computation for bundle {}", bundle.name()))),
            }
        }
        Command::SuiteAll => {
            let mut out = Vec::new();
            for n in CRITERIA {
                out.extend(criterion(n, config)?);
            }
            Ok(out)
        }
    }
}
