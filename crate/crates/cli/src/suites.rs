//! Verification suites run by `geocontract verify`. Each suite evaluates a
//! list of spaces, each expected either to pass or, for non-examples such as
//! the grid, to fail; every intermediate profile is saved next to the report.

use std::path::Path;

use geocontract::asymptotics::{
    abel_steps, classify_growth, is_sublinear_window, preceq_fit, FunctionSamples, GrowthClass, SublinearVerdict,
};
use geocontract::divergence::{
    completely_superlinear_test, divergence_profile, parameter_robustness_check, DivergenceParams, Equivalence, SGrid,
    SuperlinearVerdict,
};
use geocontract::function::FunctionSpec;
use geocontract::morse::{morse_profile, MorseVerdict, PairPlan};
use geocontract::profile::Profile;
use geocontract::projection::{
    check_contracting, check_geodesic_image, contraction_profile, geodesic_image_profile, ContractionHypothesis,
    ProjectionParams,
};
use geocontract::report;
use geocontract::sampling::{geometric_grid, rounded_geometric_grid};
use geocontract::spaces::{divergence_necklace, grid_l1, log_space, necklace, sigma_sequence, tree, FamilyParams, MarkedSpace};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{default_radii, read_space, write_file, CliResult, Failure, RunConfig, SuiteArg};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    FailExpected,
}

impl Expectation {
    pub fn name(self) -> &'static str {
        match self {
            Expectation::Pass => "pass",
            Expectation::FailExpected => "fail-expected",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub witness: Option<Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpaceResult {
    pub space: String,
    pub expectation: Expectation,
    pub checks: Vec<Check>,
    /// All checks passed.
    pub holds: bool,
    /// `holds` matches the expectation.
    pub outcome_ok: bool,
    /// Files written for this space, relative to the report directory.
    pub artifacts: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub run_config: RunConfig,
    pub spaces: Vec<SpaceResult>,
    pub passed: bool,
}

impl SuiteReport {
    /// The checks responsible for a failed suite, or `None` when it passed.
    pub fn failure_witness(&self) -> Option<Value> {
        if self.passed {
            return None;
        }
        let failing: Vec<Value> = self
            .spaces
            .iter()
            .filter(|r| !r.outcome_ok)
            .map(|r| match r.expectation {
                Expectation::Pass => {
                    let bad: Vec<&Check> = r.checks.iter().filter(|c| !c.passed).collect();
                    json!({ "space": r.space, "failed_checks": bad })
                }
                Expectation::FailExpected => {
                    json!({ "space": r.space, "failed_checks": [], "note": "expected a failing check but every check held" })
                }
            })
            .collect();
        Some(Value::Array(failing))
    }
}

struct Entry {
    label: String,
    space: MarkedSpace,
    expect: Expectation,
    /// Run the divergence-parameter comparison (robustness suite).
    divergence: bool,
}

fn entry(label: &str, space: geocontract::Result<MarkedSpace>, expect: Expectation) -> CliResult<Entry> {
    Ok(Entry { label: label.into(), space: space?, expect, divergence: false })
}

fn half() -> FunctionSpec {
    FunctionSpec::linear(0.5)
}

fn builtin(suite: SuiteArg) -> CliResult<Vec<Entry>> {
    use Expectation::*;
    let sqrt = FunctionSpec::ceil_sqrt();
    let square = FunctionSpec::power(2.0);
    Ok(match suite {
        SuiteArg::Theorem14 => vec![
            entry("tree(2,10)", tree(2, 10), Pass)?,
            entry("log_space(r/2,2,12)", log_space(&half(), 2.0, 12), Pass)?,
            entry("necklace(ceil sqrt,4..60)", necklace(&sqrt, 4, 60), Pass)?,
            entry("grid_l1(120,60)", grid_l1(120, 60), FailExpected)?,
        ],
        SuiteArg::Theorem15 => vec![
            entry("divergence_necklace(r^2,1..40)", divergence_necklace(&square, 1, 40), Pass)?,
            entry("tree(2,10)", tree(2, 10), Pass)?,
            entry("grid_l1(120,60)", grid_l1(120, 60), FailExpected)?,
        ],
        SuiteArg::Git => vec![
            entry("necklace(ceil sqrt,4..60)", necklace(&sqrt, 4, 60), Pass)?,
            entry("tree(2,10)", tree(2, 10), Pass)?,
            entry("grid_l1(120,60)", grid_l1(120, 60), FailExpected)?,
        ],
        SuiteArg::Abel => vec![entry("log_space(r/2,2,16)", log_space(&half(), 2.0, 16), Pass)?],
        SuiteArg::Robustness => {
            let mut dn = entry("divergence_necklace(r^2,1..60)", divergence_necklace(&square, 1, 60), Pass)?;
            dn.divergence = true;
            vec![
                entry("necklace(ceil sqrt,4..200)", necklace(&sqrt, 4, 200), Pass)?,
                entry("log_space(r/2,2,16)", log_space(&half(), 2.0, 16), Pass)?,
                dn,
            ]
        }
    })
}

fn slug(label: &str) -> String {
    let s: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '-' }).collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

struct Recorder<'a> {
    dir: &'a Path,
    slug: String,
    run: &'a RunConfig,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

impl Recorder<'_> {
    fn save(&mut self, what: &str, text: &str) -> CliResult<()> {
        let name = format!("{}-{what}", self.slug);
        write_file(&self.dir.join(&name), text)?;
        self.artifacts.push(name);
        Ok(())
    }

    fn check(&mut self, name: &str, passed: bool, detail: String, witness: Option<Value>) {
        self.checks.push(Check { name: name.into(), passed, detail, witness });
    }
}

pub fn run_suite(suite: SuiteArg, space: Option<&Path>, run: &RunConfig, dir: &Path) -> CliResult<SuiteReport> {
    let entries = match space {
        Some(path) => {
            let s = read_space(path)?;
            let label = path.file_stem().map_or("space".into(), |t| t.to_string_lossy().into_owned());
            let divergence = s.gamma.is_some();
            vec![Entry { label, space: s, expect: Expectation::Pass, divergence }]
        }
        None => builtin(suite)?,
    };
    let mut spaces = Vec::new();
    for e in entries {
        let mut rec = Recorder { dir, slug: slug(&e.label), run, checks: Vec::new(), artifacts: Vec::new() };
        match suite {
            SuiteArg::Theorem14 => theorem14(&e.space, &mut rec)?,
            SuiteArg::Theorem15 => theorem15(&e.space, &mut rec)?,
            SuiteArg::Git => git(&e.space, &mut rec)?,
            SuiteArg::Abel => abel(&e.space, &mut rec)?,
            SuiteArg::Robustness => robustness(&e.space, e.divergence, &mut rec)?,
        }
        let holds = rec.checks.iter().all(|c| c.passed);
        let outcome_ok = holds == (e.expect == Expectation::Pass);
        spaces.push(SpaceResult {
            space: e.label,
            expectation: e.expect,
            checks: rec.checks,
            holds,
            outcome_ok,
            artifacts: rec.artifacts,
        });
    }
    let passed = spaces.iter().all(|r| r.outcome_ok);
    Ok(SuiteReport { suite: suite.name().into(), run_config: run.clone(), spaces, passed })
}

fn id_profile(s: &MarkedSpace, eps: f64, rec: &Recorder) -> CliResult<Profile> {
    let p = ProjectionParams::new(eps)?;
    Ok(contraction_profile(s, p, &FunctionSpec::Identity, s.valid_radius(), rec.run.sampling)?)
}

/// Step values on a geometric grid (4 per octave) from the first positive radius.
fn fit_samples(p: &Profile) -> CliResult<FunctionSamples> {
    let lo = p.samples.iter().map(|s| s.r).find(|&r| r > 0.0).unwrap_or(1.0);
    Ok(p.geometric_samples(lo, 4)?)
}

fn class_of(p: &Profile) -> CliResult<GrowthClass> {
    Ok(classify_growth(&fit_samples(p)?).class)
}

fn class_label(c: &GrowthClass) -> String {
    match c {
        GrowthClass::Power { alpha } => format!("power {alpha:.3}"),
        other => other.name().into(),
    }
}

/// Computes and saves the ρ₁ = id profile and checks the sublinear ratio rule.
fn contraction_sublinear(s: &MarkedSpace, rec: &mut Recorder) -> CliResult<Profile> {
    let p = id_profile(s, 0.0, rec)?;
    rec.save("contraction.csv", &report::profile_table(&p).to_csv())?;
    let f = fit_samples(&p)?;
    let verdict = is_sublinear_window(&f);
    let fit = classify_growth(&f);
    let worst = p
        .samples
        .iter()
        .filter(|q| q.r > 0.0)
        .max_by(|a, b| {
            let ra = a.value.unwrap_or(f64::INFINITY) / a.r;
            let rb = b.value.unwrap_or(f64::INFINITY) / b.r;
            ra.total_cmp(&rb).then(b.r.total_cmp(&a.r))
        })
        .map(|q| json!({ "r": q.r, "value": q.value, "witness": q.witness }));
    rec.check(
        "contraction-sublinear",
        verdict == SublinearVerdict::SublinearOnWindow,
        format!("rho(r)/r on [{}, {}]: {verdict:?}; fitted class {}", f.window().0, f.window().1, class_label(&fit.class)),
        worst,
    );
    Ok(p)
}

fn theorem14(s: &MarkedSpace, rec: &mut Recorder) -> CliResult<()> {
    contraction_sublinear(s, rec)?;
    let m = morse_profile(s, &[1.5, 2.0, 4.0], &PairPlan::default())?;
    rec.save("morse.csv", &report::morse_table(&m).to_csv())?;
    let curves: Vec<String> = m.curves.iter().map(|c| format!("L={} mu_hat {} {}", c.l, c.mu_hat, class_label(&c.fit.class))).collect();
    let worst = m.curves.iter().filter(|c| c.verdict != MorseVerdict::MorseOnWindow).chain(m.curves.iter()).next().map(|c| {
        let w = c.points.iter().find(|q| q.1 == c.mu_hat);
        json!({ "l": c.l, "mu_hat": c.mu_hat, "verdict": c.verdict, "separation": w.map(|q| q.0), "detour": w.map(|q| &q.2) })
    });
    rec.check("morse", m.verdict == MorseVerdict::MorseOnWindow, format!("{:?}: {}", m.verdict, curves.join("; ")), worst);
    Ok(())
}

/// Centre stride keeping divergence runs to about 128 centres per radius.
fn centre_grid(s: &MarkedSpace) -> CliResult<SGrid> {
    let n = s.gamma()?.points().len();
    Ok(if n <= 256 { SGrid::EveryVertex } else { SGrid::Stride { step: n / 128 } })
}

fn theorem15(s: &MarkedSpace, rec: &mut Recorder) -> CliResult<()> {
    contraction_sublinear(s, rec)?;
    let dp = DivergenceParams::new(1.0, 0.0, 1.0, 1.0)?;
    let rs = default_radii(s, &dp)?;
    let grid = centre_grid(s)?;
    let d = divergence_profile(s, &dp, &rs, &grid)?;
    rec.save("divergence.csv", &report::divergence_table(&d).to_csv())?;
    let v = completely_superlinear_test(&d, &rec.run.constant_box);
    let infinite = d.samples.iter().filter(|q| q.value.is_none()).count();
    let fit = d.finite_samples().ok().filter(|f| !f.is_empty()).map(|f| class_label(&classify_growth(&f).class));
    rec.check(
        "divergence-superlinear",
        v == SuperlinearVerdict::SuperlinearOnWindow,
        format!(
            "(L,A,lambda,kappa) = (1,0,1,1), {} radii up to {}, centres {}: {} infinite, finite fit {}",
            rs.len(),
            rs.last().copied().unwrap_or(0.0),
            d.s_grid,
            infinite,
            fit.unwrap_or_else(|| "none".into())
        ),
        Some(serde_json::to_value(&v).expect("verdict serializes")),
    );
    Ok(())
}

fn git(s: &MarkedSpace, rec: &mut Recorder) -> CliResult<()> {
    let rho = id_profile(s, 0.0, rec)?;
    rec.save("contraction.csv", &report::profile_table(&rho).to_csv())?;
    let gi = geodesic_image_profile(s, ProjectionParams::default(), 4.0, rec.run.sampling)?;
    rec.save("geodesic-image.csv", &report::geodesic_image_table(&gi).to_csv())?;
    let chk = check_geodesic_image(&gi, &rho, 0.0)?;
    rec.check("segments", !gi.empty, format!("{} segments at distance >= 4 from Y", chk.segments), None);
    for item in [1u8, 2] {
        let first = chk.failures.iter().find(|f| f.item == item);
        let holds = if item == 1 { chk.item1_holds } else { chk.item2_holds };
        rec.check(
            &format!("item{item}-envelope"),
            holds,
            format!("{} of {} segments exceed the item-{item} envelope", chk.failures.iter().filter(|f| f.item == item).count(), chk.segments),
            first.map(|f| serde_json::to_value(f).expect("failure serializes")),
        );
    }
    rec.check(
        "rho-sublinear",
        chk.rho_sublinear == SublinearVerdict::SublinearOnWindow,
        format!("fitted rho {} ({:?})", class_label(&chk.rho_fit.class), chk.rho_sublinear),
        None,
    );
    Ok(())
}

fn abel(s: &MarkedSpace, rec: &mut Recorder) -> CliResult<()> {
    let FamilyParams::LogSpace { rho, a, n } = &s.meta.params else {
        return Err(Failure::usage("invalid-params", "the abel suite needs a log_space document"));
    };
    let (a, n) = (*a, *n);
    if *rho == half() && a == 2.0 {
        let a16 = abel_steps(rho, a, 16.0)?;
        rec.check("abel-16", a16 == 4, format!("alpha(16) = {a16}"), None);
    }
    let data = sigma_sequence(rho, a, n.min(12))?;
    let bad = (0..data.sigma.len()).find(|&i| abel_steps(rho, a, data.sigma[i]).ok() != Some(i as u64));
    rec.check(
        "abel-sigma",
        bad.is_none(),
        format!("alpha(sigma(i)) = i for i <= {}", data.sigma.len() - 1),
        bad.map(|i| json!({ "i": i, "sigma": data.sigma[i] })),
    );
    let xs = geometric_grid(a, a.max(1.0) * 4096.0, 8);
    let mut eq_bad = None;
    for &x in &xs {
        let step = x - rho.eval(x);
        if step < a {
            continue;
        }
        let (whole, rest) = (abel_steps(rho, a, x)?, abel_steps(rho, a, step)?);
        if whole != rest + 1 {
            eq_bad = Some(json!({ "x": x, "alpha_x": whole, "alpha_x_minus_rho": rest }));
            break;
        }
    }
    rec.check("abel-equation", eq_bad.is_none(), format!("alpha(x) = alpha(x - rho(x)) + 1 on {} radii", xs.len()), eq_bad);

    let p = contraction_profile(s, ProjectionParams::default(), rho, s.valid_radius(), rec.run.sampling)?;
    rec.save("contraction-rho.csv", &report::profile_table(&p).to_csv())?;
    let h = ContractionHypothesis { rho1: rho.clone(), rho2: FunctionSpec::constant(a) };
    let c = check_contracting(&p, &h)?;
    rec.check(
        "rho-contracting",
        c.holds,
        format!("(rho, {a})-contracting: {} violations, max value {:?}", c.violations.len(), p.max_value()),
        c.violations.first().map(|v| serde_json::to_value(v).expect("violation serializes")),
    );

    let idp = id_profile(s, 0.0, rec)?;
    rec.save("contraction.csv", &report::profile_table(&idp).to_csv())?;
    let f = fit_samples(&idp)?;
    let radii: Vec<f64> = f.points().iter().map(|q| q.0).collect();
    let alpha = FunctionSamples::from_fn(&radii, |r| abel_steps(rho, a, r.max(a)).map_or(f64::NAN, |k| k as f64))?;
    let fwd = preceq_fit(&f, &alpha, &rec.run.constant_box);
    let bwd = preceq_fit(&alpha, &f, &rec.run.constant_box);
    rec.check(
        "profile-equivalent-to-alpha",
        fwd.is_some() && bwd.is_some(),
        format!("id profile {} vs alpha: profile <= alpha {}, alpha <= profile {}", class_label(&classify_growth(&f).class), fwd.is_some(), bwd.is_some()),
        Some(json!({ "profile_below_alpha": fwd, "alpha_below_profile": bwd })),
    );
    Ok(())
}

fn robustness(s: &MarkedSpace, divergence: bool, rec: &mut Recorder) -> CliResult<()> {
    let base_profile = id_profile(s, 0.0, rec)?;
    rec.save("contraction.csv", &report::profile_table(&base_profile).to_csv())?;
    let base = class_of(&base_profile)?;
    for eps in [1.0, 2.0] {
        let p = id_profile(s, eps, rec)?;
        rec.save(&format!("contraction-eps{eps}.csv"), &report::profile_table(&p).to_csv())?;
        let c = class_of(&p)?;
        rec.check(
            &format!("epsilon-{eps}"),
            c.same_kind(&base),
            format!("class {} vs {} at epsilon 0", class_label(&c), class_label(&base)),
            None,
        );
    }
    let wide = s.graph.neighborhood(&s.y, 2.0)?;
    let hd = s.graph.hausdorff_distance(&s.y, &wide)?;
    let moved = s.with_subspace(wide)?;
    let p = id_profile(&moved, 0.0, rec)?;
    rec.save("contraction-n2.csv", &report::profile_table(&p).to_csv())?;
    let c = class_of(&p)?;
    rec.check(
        "hausdorff-perturbation",
        c.same_kind(&base),
        format!("N_2(Y) at Hausdorff distance {hd}: class {} vs {}", class_label(&c), class_label(&base)),
        None,
    );
    if divergence {
        let top = s.valid_radius().min(s.gamma()?.length() / 2.0);
        let rs: Vec<f64> = rounded_geometric_grid(8.0, top, 4, s.graph.resolution()).into_iter().filter(|&r| r <= top).collect();
        let unit = DivergenceParams::new(1.0, 0.0, 1.0, 1.0)?;
        let grid = centre_grid(s)?;
        for (k, other) in [DivergenceParams::geodesic_default(), DivergenceParams::new(2.0, 0.0, 1.0, 2.0)?].into_iter().enumerate() {
            let tag = format!("{},{},{},{}", other.l, other.a, other.lambda, other.kappa);
            let rep = parameter_robustness_check(s, &unit, &other, &rs, &grid)?;
            if k == 0 {
                rec.save("divergence-1_0_1_1.csv", &report::divergence_table(&rep.first).to_csv())?;
            }
            rec.save(&format!("divergence-{}.csv", tag.replace(',', "_")), &report::divergence_table(&rep.second).to_csv())?;
            rec.check(
                &format!("divergence-({tag})"),
                rep.verdict == Equivalence::EquivalentOnWindow,
                format!("(1,0,1,1) vs ({tag}) on {} radii: {:?}", rs.len(), rep.verdict),
                Some(json!({ "first_below_second": rep.first_below_second, "second_below_first": rep.second_below_first })),
            );
        }
    }
    Ok(())
}
