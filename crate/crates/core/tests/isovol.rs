use std::f64::consts::PI;

use prescurv_core::isovol::*;
use prescurv_core::solver::*;
use prescurv_core::*;

fn zero(n: usize) -> (ScalarField, PerimeterStencil) {
    let grid = PeriodicGrid::torus(2, n, 1.0).unwrap();
    (ScalarField::zeros(grid), PerimeterStencil::default_for(2))
}

fn flat_torus_f(v: f64) -> f64 {
    (2.0 * (PI * v).sqrt()).min(2.0)
}

#[test]
fn zero_forcing_curve() {
    let (g, s) = zero(64);
    let vs = [0.02, 0.05, 0.1, 0.2, 0.3, 0.5];
    let c = isovolumetric_curve(&g, &vs, &s, &ConstrainedOptions::default()).unwrap();
    assert_eq!(c.samples.len(), vs.len());
    for x in &c.samples {
        let exact = flat_torus_f(x.v);
        let tol = 0.0275 + 2.0 / 64.0 / x.v.sqrt();
        assert!((x.f_upper / exact - 1.0).abs() < tol, "v {} f {}", x.v, x.f_upper);
        assert!(x.f_lower <= x.f_upper);
        assert!(x.lambda_plus <= x.lambda_minus);
        assert!(
            (x.v - vs.iter().copied().fold(f64::NAN, |a, b| if (b - x.v).abs() < 1.0 / 4096.0 { b } else { a })).abs()
                < 1.0 / 4096.0
        );
    }
    let half = &c.samples[5];
    assert!((half.f_upper - 2.0).abs() < 0.0275 * 2.0);
    assert!((0.5 * (half.lambda_minus + half.lambda_plus)).abs() < 0.1);
    let csv = c.to_csv();
    assert!(csv.starts_with("v,f_lower,f_upper,lambda_minus,lambda_plus,status\n"));
    assert_eq!(csv.lines().count(), 7);
    let d = one_sided_derivatives(&c, c.samples[2].v).unwrap();
    assert!(d.right <= d.left);
    assert!((d.left * (0.1 / PI).sqrt() - 1.0).abs() < 0.15, "{d:?} {:?}", c.samples[2]);
    let r = check_subadditivity(&c, 1.0 / 64.0, 2);
    assert!(r.violations.is_empty(), "{:?}", r.violations);
}

#[test]
fn curve_input_validation() {
    let (g, s) = zero(16);
    let o = ConstrainedOptions::default();
    assert!(isovolumetric_curve(&g, &[], &s, &o).unwrap().samples.is_empty());
    assert!(isovolumetric_curve(&g, &[0.2, 0.1], &s, &o).is_err());
    assert!(isovolumetric_curve(&g, &[0.0, 0.1], &s, &o).is_err());
    assert!(isovolumetric_curve(&g, &[0.5, 1.0], &s, &o).is_err());
}

#[test]
fn scaling_of_zero_forcing() {
    let (g, s) = zero(128);
    let vs: Vec<f64> = (0..9).map(|i| 0.004 * (0.25f64 / 0.004).powf(i as f64 / 8.0)).collect();
    let c = isovolumetric_curve(&g, &vs, &s, &ConstrainedOptions::default()).unwrap();
    let fit = check_scaling(&c, 2).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.03, "slope {}", fit.slope);
    assert!(!fit.violation);
    assert!(fit.c_fit <= fit.big_c_fit);
    assert!(fit.c_fit > 2.0 * PI.sqrt() * 0.95 && fit.big_c_fit < 2.0 * PI.sqrt() * 1.1);
    let mut short = c.clone();
    short.samples.truncate(7);
    assert!(matches!(check_scaling(&short, 2), Err(Error::Insufficient(_))));
    let mut narrow = c.clone();
    narrow.samples.retain(|x| x.v > 0.01);
    narrow.samples.extend(narrow.samples.clone());
    assert!(matches!(check_scaling(&narrow, 2), Err(Error::Insufficient(_))));
}

#[test]
fn small_multiplier_search() {
    let (g, s) = zero(48);
    let o = ConstrainedOptions::default();
    let any = find_small_multiplier(&g, (0.05, 0.45), f64::INFINITY, &s, 5, &o).unwrap();
    assert!((any.v - 0.45).abs() < 1e-3);
    assert!(any.result.mask.count() > 0);
    let none = find_small_multiplier(&g, (0.01, 0.1), 0.5, &s, 4, &o);
    assert!(matches!(none, Err(Error::NoAdmissibleMultiplier { .. })));
    assert!(find_small_multiplier(&g, (0.1, 0.05), 1.0, &s, 4, &o).is_err());
}

#[test]
fn two_bump_kink() {
    let grid = PeriodicGrid::torus(2, 64, 1.0).unwrap();
    let s = PerimeterStencil::default_for(2);
    let (a, b) = ([0.3, 0.5], [0.7, 0.5]);
    let g = build_field(&ForcingSpec::bump_pair(&a, &b, (10.0, 2.5), (0.05, 0.12)), &grid).unwrap();
    let vs: Vec<f64> = (1..=12).map(|i| i as f64 * 0.004).collect();
    let rep = run_two_bump_example(&g, &a, &b, &vs, &s, &ConstrainedOptions::default()).unwrap();
    assert_eq!(rep.rows[0].site, Site::A);
    assert_eq!(rep.rows.last().unwrap().site, Site::B);
    let (lo, hi) = rep.switch.clone().unwrap();
    assert!((hi.sample.v - lo.sample.v - grid.cell_volume()).abs() < 1e-12);
    assert!(rep.lambda_jump.unwrap() > 0.0);
    assert!(rep.f_jump.unwrap() <= rep.f_slack.unwrap());
    assert!(lo.mask.intersection(&hi.mask).unwrap().is_empty());
}

#[test]
fn components_of_disk() {
    let (g, s) = zero(64);
    let r = minimize_volume_constrained(&g, 0.1, &s, &ConstrainedOptions::default()).unwrap();
    let rep = component_statistics(&r, 0.25, 3.4, 3.6).unwrap();
    assert_eq!(rep.volumes.len(), 1);
    assert!(rep.holds && rep.tail == 0.0);
    assert!(component_statistics(&r, 0.0, 1.0, 2.0).is_err());
}
