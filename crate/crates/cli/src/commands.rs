use prescurv_core::forcing::{check_condg, solve_div_sigma};
use prescurv_core::homogenize::{rational_directions, surface_tension, SlabOptions};
use prescurv_core::isovol::{check_scaling, check_subadditivity, one_sided_derivatives, run_two_bump_example, Site};
use prescurv_core::solver::{check_lemma_vol, minimize_penalized};
use prescurv_core::{
    asymptotic_convergence, build_field, isovolumetric_curve, minimize_unconstrained, minimize_volume_constrained,
    wulff_shape, Anisotropy, ForcingSpec, PerimeterStencil, PeriodicGrid, ScalarField, SolveResult,
};

use crate::output::{num, opt, polygon_svg, Plot, Series};
use crate::verify;
use crate::{CliError, Command, Output, Run};

pub fn dispatch(run: &Run) -> Result<(), CliError> {
    let mut out = Output::create(&run.out, run.command.name(), &run.config)?;
    match run.command {
        Command::Solve => solve(run, &mut out)?,
        Command::Sweep => sweep(run, &mut out)?,
        Command::CheckG => check_g(run, &mut out)?,
        Command::Wulff => wulff(run, &mut out)?,
        Command::Asym => asym(run, &mut out)?,
        Command::ExampleNondiff => nondiff(run, &mut out)?,
        Command::OracleVerify => oracle_verify(run, &mut out)?,
    }
    let manifest = out.finish()?;
    println!("manifest {}", manifest.display());
    Ok(())
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn csv_row(cols: &[String]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    s
}

fn solve(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let g = c.field()?;
    let s = c.stencil()?;
    let total = g.grid().total_volume();
    let v = c.solve.v;
    if c.solve.mode != "unconstrained" && !(0.0..=total).contains(&v) {
        return Err(config_err(format!("solve.v = {v} outside [0, {total}]")));
    }
    let mut mu = None;
    let mut penalized = None;
    let mut lemma = None;
    let r: SolveResult = match c.solve.mode.as_str() {
        "constrained" => minimize_volume_constrained(&g, v, &s, &c.constrained_options())?,
        "penalized" => {
            let m = match c.solve.mu {
                Some(m) => m,
                None if v > 0.0 => 2.0 * g.sup_norm() + 2.0 / v.sqrt(),
                None => return Err(config_err("penalized solve at v = 0 needs solve.mu")),
            };
            let p = minimize_penalized(&g, m, v, &s, &c.constrained_options())?;
            mu = Some(m);
            penalized = Some(p.penalized_energy);
            if m > g.sup_norm() {
                lemma = Some(check_lemma_vol(&p.result, m, v, &g)?.holds);
            }
            p.result
        }
        _ => minimize_unconstrained(&g, c.solve.lambda, &s)?,
    };
    let rec = r.record();
    let header = "mode,v,lambda,mu,status,cells,volume,perimeter,g_integral,energy,multiplier,lambda_lo,lambda_hi,\
                  f_lower,f_lower_certified,penalized_energy,lemma_vol_holds";
    let row = [
        c.solve.mode.clone(),
        num(v),
        num(c.solve.lambda),
        opt(mu),
        rec.status.as_str().into(),
        rec.cells.to_string(),
        num(rec.volume),
        num(rec.perimeter),
        num(rec.g_integral),
        num(rec.energy),
        opt(rec.multiplier),
        opt(rec.bracket.map(|b| b.lambda_lo)),
        opt(rec.bracket.map(|b| b.lambda_hi)),
        opt(rec.f_lower),
        opt(rec.f_lower_certified),
        opt(penalized),
        lemma.map_or(String::new(), |b| b.to_string()),
    ];
    out.write("solve.csv", format!("{header}\n{}", csv_row(&row)))?;
    out.mask("mask.pgm", &r.mask)?;
    println!("{} v={} cells={} energy={}", rec.status.as_str(), num(rec.volume), rec.cells, num(rec.energy));
    Ok(())
}

fn sweep(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let vols = c.sweep_volumes()?;
    if vols.is_empty() {
        return Err(config_err("sweep.v_list is empty"));
    }
    let g = c.field()?;
    let s = c.stencil()?;
    let curve = isovolumetric_curve(&g, &vols, &s, &c.constrained_options())?;
    out.write("curve.csv", curve.to_csv())?;

    let mut d = String::from("v,lambda_minus,lambda_plus,secant_left,secant_right,central_secant,midpoint,width\n");
    for x in &curve.samples {
        let Ok(o) = one_sided_derivatives(&curve, x.v) else { continue };
        let central = o.secant_left.zip(o.secant_right).map(|(a, b)| 0.5 * (a + b));
        d.push_str(&csv_row(&[
            num(x.v),
            num(o.left),
            num(o.right),
            opt(o.secant_left),
            opt(o.secant_right),
            opt(central),
            num(0.5 * (o.left + o.right)),
            num(o.left - o.right),
        ]));
    }
    out.write("derivatives.csv", d)?;

    let dim = g.grid().dim();
    let mut rep = String::new();
    match check_scaling(&curve, dim) {
        Ok(f) => rep.push_str(&format!(
            "scaling_slope = {}\nscaling_intercept = {}\nc_fit = {}\nC_fit = {}\ndecades = {}\nscaling_violation = {}\n",
            num(f.slope),
            num(f.intercept),
            num(f.c_fit),
            num(f.big_c_fit),
            num(f.decades),
            f.violation
        )),
        Err(e) => rep.push_str(&format!("scaling = \"{e}\"\n")),
    }
    let sub = check_subadditivity(&curve, g.grid().h(), dim);
    rep.push_str(&format!(
        "subadditive_pairs = {}\nsubadditive_violations = {}\nsubadditive_tol = {}\nsubadditive_worst_excess = {}\n",
        sub.pairs,
        sub.violations.len(),
        num(sub.tol),
        num(sub.worst_excess)
    ));
    out.write("report.txt", &rep)?;

    let plot = Plot {
        title: format!("isovolumetric curve ({})", curve.grid_id),
        x_label: "v".into(),
        y_label: "f(v)".into(),
        series: vec![
            Series {
                name: "f upper".into(),
                color: "#1b2631",
                points: curve.samples.iter().map(|x| (x.v, x.f_upper)).collect(),
                slopes: curve.samples.iter().map(|x| Some((x.lambda_minus, x.lambda_plus))).collect(),
            },
            Series {
                name: "f lower".into(),
                color: "#7f8c8d",
                points: curve.samples.iter().map(|x| (x.v, x.f_lower)).collect(),
                slopes: Vec::new(),
            },
        ],
    };
    out.write("curve.svg", plot.svg())?;
    print!("{rep}");
    Ok(())
}

fn check_g(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let g = c.field()?;
    let s = c.stencil()?;
    let sigma = solve_div_sigma(&g)?;
    let lambda_star = check_condg(&g, &s)?;
    let rows = [
        ("mean", num(g.mean())),
        ("g_sup", num(g.sup_norm())),
        ("sigma_sup", num(sigma.sup_norm)),
        ("sigma_sampled_sup", num(sigma.sampled_sup)),
        ("divergence_residual", num(sigma.divergence_residual(&g))),
        ("lambda_star", num(lambda_star)),
        ("sigma_below_one", (sigma.sup_norm < 1.0).to_string()),
        ("sandwich_lower", num(1.0 - sigma.sup_norm)),
        ("sandwich_upper", num(1.0 + sigma.sup_norm)),
    ];
    let mut csv = String::from("key,value\n");
    for (k, v) in &rows {
        csv.push_str(&format!("{k},{v}\n"));
        println!("{k} = {v}");
    }
    out.write("check_g.csv", csv)?;
    Ok(())
}

fn directions(dim: usize, explicit: &[Vec<i64>], max_q: i64, quick: bool) -> Result<Vec<Vec<i64>>, CliError> {
    if explicit.is_empty() {
        return Ok(rational_directions(dim, if quick { max_q.min(2) } else { max_q }));
    }
    if explicit.iter().any(|q| q.len() != dim || q.iter().all(|&x| x == 0)) {
        return Err(config_err(format!("directions must be nonzero with {dim} entries")));
    }
    Ok(explicit.to_vec())
}

fn tension(
    g: &ScalarField,
    s: &PerimeterStencil,
    dirs: &[Vec<i64>],
    widths: &[usize],
    pad: Option<usize>,
) -> Result<Anisotropy, CliError> {
    let o = SlabOptions { widths: widths.to_vec(), pad, ..SlabOptions::default() };
    Ok(surface_tension(g, dirs, s, &o)?)
}

fn wulff(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let g = c.field()?;
    let s = c.stencil()?;
    let w = &c.wulff;
    let dirs = directions(g.grid().dim(), &w.directions, w.max_q, run.quick)?;
    let a = tension(&g, &s, &dirs, &w.widths, w.pad)?;
    out.write("tension.csv", a.to_csv())?;
    let mut shape = wulff_shape(&a, w.volume, None)?;
    out.write("wulff.txt", shape.vertex_text())?;
    let dim = shape.dim;
    if dim == 2 {
        out.write("wulff.svg", polygon_svg(&shape.vertices))?;
    }
    let radius = shape.vertices.iter().map(|p| p[..dim].iter().map(|x| x * x).sum::<f64>().sqrt()).fold(0.0, f64::max);
    let side = if run.quick { w.raster.min(64) } else { w.raster };
    let grid = PeriodicGrid::torus(dim, side, 3.0 * radius)?;
    let m = shape.rasterize(&grid);
    out.mask("wulff.pgm", &m)?;
    let rep = format!(
        "directions = {}\nvolume = {}\nunit_volume = {}\nf0 = {}\nperimeter = {}\nvertices = {}\nraster_volume = {}\n",
        a.samples.len(),
        num(shape.volume),
        num(shape.unit_volume),
        num(shape.f0),
        num(shape.perimeter),
        shape.vertices.len(),
        num(m.volume())
    );
    out.write("report.txt", &rep)?;
    print!("{rep}");
    Ok(())
}

fn asym(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    if c.asym.v_list.is_empty() {
        return Err(config_err("asym.v_list is empty"));
    }
    let g = c.field()?;
    let s = c.stencil()?;
    let dirs = directions(g.grid().dim(), &[], c.asym.max_q, run.quick)?;
    let a = tension(&g, &s, &dirs, &c.asym.widths, c.asym.pad)?;
    out.write("tension.csv", a.to_csv())?;
    let t = asymptotic_convergence(&g, &c.asym.v_list, &a, &s, &c.constrained_options())?;
    out.write("convergence.csv", t.to_csv())?;
    for r in &t.rows {
        println!("v={} symdiff={} gap={} limsup_ok={}", num(r.v), num(r.symdiff), num(r.gap), r.limsup_ok);
    }
    println!("strictly_decreasing = {}", t.strictly_decreasing);
    Ok(())
}

/// Bump centres, heights and radii of the two-bump preset.
pub const NONDIFF_A: [f64; 2] = [0.3, 0.5];
pub const NONDIFF_B: [f64; 2] = [0.7, 0.5];
pub const NONDIFF_HEIGHTS: (f64, f64) = (10.0, 2.5);
pub const NONDIFF_RADII: (f64, f64) = (0.05, 0.12);
pub const NONDIFF_N: usize = 256;

/// The preset forcing on an `n × n` unit torus.
pub fn nondiff_preset(n: usize) -> prescurv_core::Result<ScalarField> {
    let grid = PeriodicGrid::torus(2, n, 1.0)?;
    build_field(&ForcingSpec::bump_pair(&NONDIFF_A, &NONDIFF_B, NONDIFF_HEIGHTS, NONDIFF_RADII), &grid)
}

fn nondiff(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let s = c.stencil()?;
    let (g, a, b) = if c.forcing.kind == "bump_pair" {
        (c.field()?, c.forcing.a.clone(), c.forcing.b.clone())
    } else {
        if c.grid.dim != 2 {
            return Err(config_err("the two-bump preset is two-dimensional"));
        }
        (nondiff_preset(if run.quick { 64 } else { NONDIFF_N })?, NONDIFF_A.to_vec(), NONDIFF_B.to_vec())
    };
    if c.nondiff.v_list.is_empty() {
        return Err(config_err("nondiff.v_list is empty"));
    }
    let rep = run_two_bump_example(&g, &a, &b, &c.nondiff.v_list, &s, &c.constrained_options())?;
    let mut csv = String::from("v,f_lower,f_upper,lambda_minus,lambda_plus,site,cx,cy\n");
    for r in &rep.rows {
        let x = &r.sample;
        csv.push_str(&csv_row(&[
            num(x.v),
            num(x.f_lower),
            num(x.f_upper),
            num(x.lambda_minus),
            num(x.lambda_plus),
            if r.site == Site::A { "a" } else { "b" }.into(),
            num(r.center[0]),
            num(r.center[1]),
        ]));
    }
    out.write("nondiff.csv", csv)?;
    let mut t = format!(
        "v_star = {}\nlambda_jump = {}\nf_jump = {}\nf_slack = {}\n",
        opt(rep.v_star),
        opt(rep.lambda_jump),
        opt(rep.f_jump),
        opt(rep.f_slack)
    );
    if let Some((lo, hi)) = &rep.switch {
        t.push_str(&format!("v_a = {}\nv_b = {}\n", num(lo.sample.v), num(hi.sample.v)));
        out.mask("switch_a.pgm", &lo.mask)?;
        out.mask("switch_b.pgm", &hi.mask)?;
    } else {
        t.push_str("switch = none\n");
    }
    out.write("transition.txt", &t)?;
    let plot = Plot {
        title: "two-bump isovolumetric curve".into(),
        x_label: "v".into(),
        y_label: "f(v)".into(),
        series: vec![Series {
            name: "f upper".into(),
            color: "#1b2631",
            points: rep.rows.iter().map(|r| (r.sample.v, r.sample.f_upper)).collect(),
            slopes: rep.rows.iter().map(|r| Some((r.sample.lambda_minus, r.sample.lambda_plus))).collect(),
        }],
    };
    out.write("nondiff.svg", plot.svg())?;
    print!("{t}");
    Ok(())
}

fn oracle_verify(run: &Run, out: &mut Output) -> Result<(), CliError> {
    let c = &run.config;
    let text = match &c.verify.fixture {
        Some(p) => std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?,
        None => verify::BUNDLED_FIXTURE.to_string(),
    };
    let fx = verify::parse_fixture(&text)?;
    let mut checks = vec![verify::check_fixture(&fx, &PerimeterStencil::default_for(2))?];
    let seeds = if run.quick { c.verify.seeds.min(10) } else { c.verify.seeds };
    checks.extend(verify::check_random(seeds, c.seed)?);
    let mut csv = String::from("check,cases,failures\n");
    let mut failures = String::new();
    for k in &checks {
        csv.push_str(&format!("{},{},{}\n", k.name, k.cases, k.failures.len()));
        println!("{} {} ({} cases)", if k.passed() { "PASS" } else { "FAIL" }, k.name, k.cases);
        for f in &k.failures {
            failures.push_str(&format!("{}: {f}\n", k.name));
        }
    }
    out.write("verify.csv", csv)?;
    if !failures.is_empty() {
        out.write("failures.txt", &failures)?;
        eprint!("{failures}");
        return Err(CliError::Numeric(format!("{} verification failures", failures.lines().count())));
    }
    Ok(())
}
