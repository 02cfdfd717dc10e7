//! The isovolumetric function `f(v) = min_{|E|=v} P(E) - ∫_E g`: sampling,
//! one-sided derivatives, scaling fits and the two-bump kink.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::PeriodicGrid;
use crate::mask::Mask;
use crate::numeric::linear_fit;
use crate::solver::{minimize_volume_constrained, ConstrainedOptions, SolveResult, Status};
use crate::stencil::PerimeterStencil;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsovolSample {
    pub v: f64,
    pub f_lower: f64,
    pub f_upper: f64,
    /// Left derivative estimate (upper end of the multiplier bracket).
    pub lambda_minus: f64,
    /// Right derivative estimate (lower end of the multiplier bracket).
    pub lambda_plus: f64,
    pub status: Status,
    pub perimeter: f64,
    pub f_certified: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsovolCurve {
    pub samples: Vec<IsovolSample>,
    pub grid_id: String,
    pub stencil_id: String,
    pub forcing_id: String,
}

pub fn grid_id(g: &PeriodicGrid) -> String {
    let sides: Vec<String> = g.sides().iter().map(|s| s.to_string()).collect();
    let b: Vec<&str> = g.boundary().iter().map(|b| b.as_str()).collect();
    format!("{}@h={}[{}]", sides.join("x"), g.h(), b.join(","))
}

pub fn stencil_id(s: &PerimeterStencil) -> String {
    format!("d{}-pairs{}", s.dim(), 2 * s.offsets().len())
}

impl IsovolCurve {
    pub fn empty(grid: &PeriodicGrid, s: &PerimeterStencil) -> Self {
        Self { samples: Vec::new(), grid_id: grid_id(grid), stencil_id: stencil_id(s), forcing_id: String::new() }
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("v,f_lower,f_upper,lambda_minus,lambda_plus,status\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                s.v,
                s.f_lower,
                s.f_upper,
                s.lambda_minus,
                s.lambda_plus,
                s.status.as_str()
            ));
        }
        out
    }
}

impl IsovolSample {
    pub fn from_result(r: &SolveResult) -> Self {
        let (lp, lm) = match r.bracket {
            Some(b) => (b.lambda_lo, b.lambda_hi),
            None => {
                let l = r.multiplier.unwrap_or(0.0);
                (l, l)
            }
        };
        let f_upper = r.energy();
        Self {
            v: r.volume(),
            f_lower: r.f_lower.unwrap_or(f_upper).min(f_upper),
            f_upper,
            lambda_minus: lm,
            lambda_plus: lp,
            status: r.status,
            perimeter: r.perimeter(),
            f_certified: r.f_lower_certified,
        }
    }
}

/// Constrained solves at every volume of `v_list` (ascending, inside `(0, L^d)`).
/// Volumes are reported after rounding to whole cells.
pub fn isovolumetric_curve(
    g: &ScalarField,
    v_list: &[f64],
    s: &PerimeterStencil,
    opts: &ConstrainedOptions,
) -> Result<IsovolCurve> {
    let total = g.grid().total_volume();
    if v_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("volumes must be strictly increasing".into()));
    }
    if v_list.iter().any(|&v| !(v > 0.0 && v < total)) {
        return Err(Error::OutOfRange(format!("volumes must lie in (0, {total})")));
    }
    let samples = v_list
        .par_iter()
        .map(|&v| minimize_volume_constrained(g, v, s, opts).map(|r| IsovolSample::from_result(&r)))
        .collect::<Result<Vec<_>>>()?;
    let mut c = IsovolCurve::empty(g.grid(), s);
    c.samples = samples;
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneSided {
    pub left: f64,
    pub right: f64,
    /// Secant to the previous sample, if any.
    pub secant_left: Option<f64>,
    /// Secant to the next sample, if any.
    pub secant_right: Option<f64>,
}

/// Left and right derivative of `f` at `v`. At a sample the multiplier bracket
/// gives `(λ_minus, λ_plus)`; between samples both equal the secant.
pub fn one_sided_derivatives(curve: &IsovolCurve, v: f64) -> Result<OneSided> {
    let s = &curve.samples;
    if s.len() < 2 || v < s[0].v || v > s[s.len() - 1].v {
        return Err(Error::OutOfRange(format!("volume {v} outside the sampled range")));
    }
    let secant = |i: usize, j: usize| (s[j].f_upper - s[i].f_upper) / (s[j].v - s[i].v);
    let tol = 1e-12 * v.abs().max(1.0);
    if let Some(i) = s.iter().position(|x| (x.v - v).abs() <= tol) {
        let secant_left = (i > 0).then(|| secant(i - 1, i));
        let secant_right = (i + 1 < s.len()).then(|| secant(i, i + 1));
        return Ok(OneSided { left: s[i].lambda_minus, right: s[i].lambda_plus, secant_left, secant_right });
    }
    let j = s.iter().position(|x| x.v > v).expect("inside range");
    let m = secant(j - 1, j);
    Ok(OneSided { left: m, right: m, secant_left: Some(m), secant_right: Some(m) })
}

#[derive(Clone, Debug)]
pub struct SmallMultiplier {
    pub v: f64,
    pub lambda: f64,
    pub result: SolveResult,
}

/// Scans the constrained family over `samples` volumes spread geometrically
/// across `v_range` and returns the largest volume whose multiplier bracket
/// reaches into `[0, eps]`. The returned mask approximately solves `κ = g + λ`.
/// With `eps = ∞` the sample whose multiplier is nearest zero is returned.
pub fn find_small_multiplier(
    g: &ScalarField,
    v_range: (f64, f64),
    eps: f64,
    s: &PerimeterStencil,
    samples: usize,
    opts: &ConstrainedOptions,
) -> Result<SmallMultiplier> {
    let (lo, hi) = v_range;
    if !(lo > 0.0 && hi >= lo && hi < g.grid().total_volume()) || samples == 0 || !(eps >= 0.0) {
        return Err(Error::OutOfRange(format!("volume range ({lo}, {hi})")));
    }
    if g.mean().abs() > 1e-12 * g.sup_norm().max(1e-300) {
        log::warn!("forcing is not zero-mean");
    }
    let vs: Vec<f64> = if samples == 1 || hi == lo {
        vec![hi]
    } else {
        (0..samples).map(|i| lo * (hi / lo).powf(i as f64 / (samples - 1) as f64)).collect()
    };
    let results = vs.par_iter().map(|&v| minimize_volume_constrained(g, v, s, opts)).collect::<Result<Vec<_>>>()?;
    let lam = |r: &SolveResult| r.bracket.map_or(r.multiplier.unwrap_or(0.0), |b| b.midpoint());
    let reach = |r: &SolveResult| match r.bracket {
        Some(b) => b.lambda_hi >= 0.0 && b.lambda_lo <= eps,
        None => (0.0..=eps).contains(&lam(r)),
    };
    let pick = if eps.is_infinite() {
        results.iter().enumerate().min_by(|a, b| lam(a.1).abs().total_cmp(&lam(b.1).abs()).then(b.0.cmp(&a.0)))
    } else {
        results.iter().enumerate().filter(|(_, r)| reach(r)).next_back()
    };
    match pick {
        Some((_, r)) => Ok(SmallMultiplier { v: r.volume(), lambda: lam(r).max(0.0).min(eps), result: r.clone() }),
        None => {
            let near = results
                .iter()
                .min_by(|a, b| {
                    let da = (lam(a).clamp(0.0, eps) - lam(a)).abs();
                    let db = (lam(b).clamp(0.0, eps) - lam(b)).abs();
                    da.total_cmp(&db)
                })
                .expect("at least one sample");
            Err(Error::NoAdmissibleMultiplier { nearest_lambda: lam(near), nearest_volume: near.volume() })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub pairs: usize,
    /// `(v, v', f(v+v'), f(v) + f(v'))` for pairs beyond the slack.
    pub violations: Vec<(f64, f64, f64, f64)>,
    pub tol: f64,
    /// Largest `f(v+v') - f(v) - f(v')` seen.
    pub worst_excess: f64,
}

/// Checks `f(v+v') ≤ f(v) + f(v') + 2h ρ` on sampled pairs, where
/// `ρ = max P / v^{(d-1)/d}` is the largest perimeter density of the curve.
pub fn check_subadditivity(curve: &IsovolCurve, h: f64, dim: usize) -> SubadditivityReport {
    let s = &curve.samples;
    let e = (dim as f64 - 1.0) / dim as f64;
    let rho = s.iter().filter(|x| x.v > 0.0).map(|x| x.perimeter / x.v.powf(e)).fold(0.0, f64::max);
    let tol = 2.0 * h * rho;
    let mut pairs = 0;
    let mut violations = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..s.len() {
        for j in i..s.len() {
            let target = s[i].v + s[j].v;
            let Some(k) = s.iter().position(|x| (x.v - target).abs() <= 1e-9 * target) else {
                continue;
            };
            pairs += 1;
            let lhs = s[k].f_upper;
            let rhs = s[i].f_upper + s[j].f_upper;
            worst = worst.max(lhs - rhs);
            if lhs > rhs + tol {
                violations.push((s[i].v, s[j].v, lhs, rhs));
            }
        }
    }
    SubadditivityReport { pairs, violations, tol, worst_excess: if pairs == 0 { 0.0 } else { worst } }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// `min f / v^{(d-1)/d}` over the samples.
    pub c_fit: f64,
    /// `max f / v^{(d-1)/d}` over the samples.
    pub big_c_fit: f64,
    /// Slope off `(d-1)/d` by more than 0.05.
    pub violation: bool,
    pub decades: f64,
}

/// Log-log least squares of `f_upper` against `v`.
pub fn check_scaling(curve: &IsovolCurve, dim: usize) -> Result<ScalingFit> {
    let s: Vec<&IsovolSample> = curve.samples.iter().filter(|x| x.v > 0.0 && x.f_upper > 0.0).collect();
    if s.len() < 8 {
        return Err(Error::Insufficient(format!("{} positive samples, need 8", s.len())));
    }
    let decades = (s[s.len() - 1].v / s[0].v).log10();
    if decades < 1.5 - 1e-9 {
        return Err(Error::Insufficient(format!("samples span {decades:.2} decades, need 1.5")));
    }
    let x: Vec<f64> = s.iter().map(|p| p.v.ln()).collect();
    let y: Vec<f64> = s.iter().map(|p| p.f_upper.ln()).collect();
    let (intercept, slope) = linear_fit(&x, &y);
    let e = (dim as f64 - 1.0) / dim as f64;
    let ratios: Vec<f64> = s.iter().map(|p| p.f_upper / p.v.powf(e)).collect();
    let c_fit = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let big_c_fit = ratios.iter().copied().fold(0.0, f64::max);
    Ok(ScalingFit { slope, intercept, c_fit, big_c_fit, violation: (slope - e).abs() > 0.05, decades })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct TwoBumpRow {
    pub sample: IsovolSample,
    pub site: Site,
    pub center: [f64; 3],
    pub mask: Mask,
}

#[derive(Clone, Debug)]
pub struct TwoBumpReport {
    pub rows: Vec<TwoBumpRow>,
    /// Midpoint of the localized switching interval.
    pub v_star: Option<f64>,
    /// Last volume won by `a` and first won by `b`, after localization.
    pub switch: Option<(TwoBumpRow, TwoBumpRow)>,
    /// `λ_a - λ_b` across the switch, from the bracket midpoints.
    pub lambda_jump: Option<f64>,
    /// `|f(v_b) - f(v_a)|` across the switch.
    pub f_jump: Option<f64>,
    /// Allowed continuity slack `2h · max(P_a, P_b) / min(|E_a|, |E_b|)^{(d-1)/d}`.
    pub f_slack: Option<f64>,
}

fn classify(g: &ScalarField, r: &SolveResult, a: &[f64], b: &[f64]) -> TwoBumpRow {
    let grid = g.grid();
    let d = grid.dim();
    let c = r.mask.center_of_mass().unwrap_or([f64::NAN; 3]);
    let site = if grid.distance(&c[..d], a) <= grid.distance(&c[..d], b) { Site::A } else { Site::B };
    TwoBumpRow { sample: IsovolSample::from_result(r), site, center: c, mask: r.mask.clone() }
}

/// Samples `f` over `v_list`, labels each minimizer by the nearer bump and
/// localizes the first `a → b` switch by bisection in whole cells.
pub fn run_two_bump_example(
    g: &ScalarField,
    a: &[f64],
    b: &[f64],
    v_list: &[f64],
    s: &PerimeterStencil,
    opts: &ConstrainedOptions,
) -> Result<TwoBumpReport> {
    let d = g.grid().dim();
    if a.len() != d || b.len() != d {
        return Err(Error::OutOfRange("bump centres have the wrong dimension".into()));
    }
    let results = v_list.par_iter().map(|&v| minimize_volume_constrained(g, v, s, opts)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<TwoBumpRow> = results.iter().map(|r| classify(g, r, a, b)).collect();
    let Some(i) = rows.windows(2).position(|w| w[0].site == Site::A && w[1].site == Site::B) else {
        return Ok(TwoBumpReport { rows, v_star: None, switch: None, lambda_jump: None, f_jump: None, f_slack: None });
    };
    let hd = g.grid().cell_volume();
    let mut lo = rows[i].clone();
    let mut hi = rows[i + 1].clone();
    while ((hi.sample.v - lo.sample.v) / hd).round() > 1.0 {
        let mid = (0.5 * (lo.sample.v + hi.sample.v) / hd).round() * hd;
        let r = minimize_volume_constrained(g, mid, s, opts)?;
        let row = classify(g, &r, a, b);
        if row.site == Site::A {
            lo = row;
        } else {
            hi = row;
        }
    }
    let mid = |x: &IsovolSample| 0.5 * (x.lambda_minus + x.lambda_plus);
    let lambda_jump = mid(&lo.sample) - mid(&hi.sample);
    let f_jump = (hi.sample.f_upper - lo.sample.f_upper).abs();
    let e = (d as f64 - 1.0) / d as f64;
    let rho = (lo.sample.perimeter / lo.sample.v.powf(e)).max(hi.sample.perimeter / hi.sample.v.powf(e));
    let f_slack = 2.0 * g.grid().h() * rho;
    Ok(TwoBumpReport {
        v_star: Some(0.5 * (lo.sample.v + hi.sample.v)),
        rows,
        switch: Some((lo, hi)),
        lambda_jump: Some(lambda_jump),
        f_jump: Some(f_jump),
        f_slack: Some(f_slack),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    /// Component volumes, largest first.
    pub volumes: Vec<f64>,
    pub delta: f64,
    /// `⌊1 + (C/c)^d / δ^d⌋`.
    pub n_delta: usize,
    /// `Σ_{i ≥ N_δ} |E_i|` (components numbered from 1).
    pub tail: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn component_statistics(r: &SolveResult, delta: f64, c_fit: f64, big_c_fit: f64) -> Result<ComponentReport> {
    if !(delta > 0.0 && c_fit > 0.0 && big_c_fit >= c_fit) {
        return Err(Error::OutOfRange("need δ > 0 and 0 < c ≤ C".into()));
    }
    let d = r.mask.grid().dim() as i32;
    let volumes: Vec<f64> = r.mask.connected_components().iter().map(|c| c.volume()).collect();
    let n_delta = (1.0 + (big_c_fit / c_fit).powi(d) / delta.powi(d)).floor() as usize;
    let tail: f64 = volumes.iter().skip(n_delta.saturating_sub(1)).sum();
    let bound = delta * r.volume();
    Ok(ComponentReport { volumes, delta, n_delta, tail, bound, holds: tail <= bound * (1.0 + 1e-12) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlexFench {
    pub perimeter: f64,
    pub area: f64,
    pub min_curvature: f64,
    /// `(d-1) P`.
    pub lhs: f64,
    /// `|E| min κ`.
    pub rhs: f64,
    pub pass: bool,
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `(d-1) P(E) ≥ |E| min κ` for the ellipse with semi-axes `a ≥ b > 0`.
pub fn alexfench_check(a: f64, b: f64) -> Result<AlexFench> {
    if !(a >= b && b > 0.0 && a.is_finite()) {
        return Err(Error::OutOfRange(format!("ellipse axes ({a}, {b})")));
    }
    let speed = |t: f64| (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt();
    // four symmetric quarters keep the integrand smooth on each piece
    let quarter = integrate(&speed, 0.0, std::f64::consts::FRAC_PI_2, 1e-13 * a);
    let perimeter = 4.0 * quarter;
    let area = std::f64::consts::PI * a * b;
    let min_curvature = b / (a * a);
    let lhs = perimeter;
    let rhs = area * min_curvature;
    Ok(AlexFench { perimeter, area, min_curvature, lhs, rhs, pass: lhs >= rhs })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Ellipse perimeter from the modified arithmetic-geometric mean.
    fn agm_perimeter(a: f64, b: f64) -> f64 {
        let (mut x, mut y) = (a, b);
        for _ in 0..60 {
            let (nx, ny) = (0.5 * (x + y), (x * y).sqrt());
            x = nx;
            y = ny;
        }
        let agm = x;
        let (mut x, mut y, mut z) = (a * a, b * b, 0.0f64);
        while (x - y).abs() > 1e-15 * x {
            let r = ((x - z) * (y - z)).max(0.0).sqrt();
            let nx = 0.5 * (x + y);
            let ny = z + r;
            let nz = z - r;
            x = nx;
            y = ny;
            z = nz;
        }
        2.0 * std::f64::consts::PI * x / agm
    }

    #[test]
    fn ellipse_family() {
        for (a, b) in [(1.0, 1.0), (1.5, 1.0), (2.0, 1.0), (4.0, 1.0), (0.3, 0.1)] {
            let r = alexfench_check(a, b).unwrap();
            assert!(
                (r.perimeter - agm_perimeter(a, b)).abs() < 1e-8 * a,
                "{a} {b} {} {}",
                r.perimeter,
                agm_perimeter(a, b)
            );
            assert!(r.pass);
        }
        let c = alexfench_check(1.0, 1.0).unwrap();
        assert!((c.lhs / c.rhs - 2.0).abs() < 1e-12);
        let e = alexfench_check(2.0, 1.0).unwrap();
        assert!((e.perimeter - 9.688448220547675).abs() < 1e-9);
        assert!((e.rhs - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let tiny = alexfench_check(1e-6, 1e-6).unwrap();
        assert!((tiny.lhs / tiny.rhs - 2.0).abs() < 1e-9);
        assert!(alexfench_check(1.0, 2.0).is_err());
    }

    #[test]
    fn linear_curve_derivatives() {
        let samples = (1..=4)
            .map(|i| {
                let v = i as f64 * 0.1;
                IsovolSample {
                    v,
                    f_lower: 3.0 * v,
                    f_upper: 3.0 * v,
                    lambda_minus: 3.0,
                    lambda_plus: 3.0,
                    status: Status::ExactVolume,
                    perimeter: 1.0,
                    f_certified: None,
                }
            })
            .collect();
        let c = IsovolCurve { samples, grid_id: String::new(), stencil_id: String::new(), forcing_id: String::new() };
        let d = one_sided_derivatives(&c, 0.25).unwrap();
        assert!((d.left - 3.0).abs() < 1e-12 && (d.right - 3.0).abs() < 1e-12);
        let d = one_sided_derivatives(&c, 0.2).unwrap();
        assert_eq!((d.left, d.right), (3.0, 3.0));
        assert!(one_sided_derivatives(&c, 0.5).is_err());
    }

    #[test]
    fn component_formula() {
        let grid = PeriodicGrid::torus(2, 16, 1.0).unwrap();
        let s = PerimeterStencil::default_for(2);
        let g = ScalarField::zeros(grid.clone());
        let two = Mask::from_indices(grid.clone(), [0, 1, 16, 17, 8 * 16 + 8, 8 * 16 + 9, 9 * 16 + 8, 9 * 16 + 9]);
        let r = SolveResult::new(two, &g, &s, Status::Adjusted).unwrap();
        let rep = component_statistics(&r, 0.6, 1.0, 1.0).unwrap();
        assert_eq!(rep.n_delta, 3);
        assert_eq!(rep.tail, 0.0);
        assert!(rep.holds);
        let one = SolveResult::new(Mask::ball(&grid, &[0.5, 0.5], 0.2).unwrap(), &g, &s, Status::Adjusted).unwrap();
        for delta in [0.1, 0.3, 0.5] {
            assert_eq!(component_statistics(&one, delta, 1.0, 2.0).unwrap().tail, 0.0);
        }
    }
}
