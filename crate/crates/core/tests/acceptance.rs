//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use medmatch::cascade::{solve_stack, StackSpec, TissueGeometry};
use medmatch::channel::{backscatter_gain, one_way_gain, sample_channel, SurfaceSetting};
use medmatch::controller::Stage;
use medmatch::experiment::{median, run_links, LinkMode};
use medmatch::harness::{bench_strategies, cmd_backscatter, cmd_bench_controller, cmd_links, cmd_match, cmd_sweep};
use medmatch::matcher::{best_admittance, best_voltage, reflection_spectrum, SurfaceDrive, DEFAULT_SUSCEPTANCE_RANGE};
use medmatch::media::{fresnel_interface, Layer, Medium, DEFAULT_FREQUENCY};
use medmatch::scenario::{sha256_hex, Scenario};

const F: f64 = DEFAULT_FREQUENCY;
const STEPS: usize = 61;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn scenario(name: &str) -> (Scenario, String) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    Scenario::load(&path).unwrap()
}

fn within_time(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn c1_fresnel() -> Outcome {
    let start = Instant::now();
    let aw = fresnel_interface(&Medium::air(), &Medium::water(), F).unwrap();
    let aa = fresnel_interface(&Medium::air(), &Medium::air(), F).unwrap();
    let through_db = 10.0 * aw.through_power.log10();
    let exact_db = 10.0 * 0.36f64.log10();
    let pass = (aw.gamma - Complex64::new(-0.8, 0.0)).norm() < 1e-9
        && (aw.reflected_power - 0.64).abs() < 1e-9
        && (through_db - exact_db).abs() < 1e-9
        && (through_db + 4.44).abs() < 0.005
        && (10.0 * aa.through_power.log10()).abs() < 1e-9
        && within_time(start.elapsed(), 1.0);
    outcome(
        pass,
        format!(
            "gamma={:.12} reflected={:.12} through={:.6} dB air-air={:.1e} dB",
            aw.gamma.re,
            aw.reflected_power,
            through_db,
            10.0 * aa.through_power.log10()
        ),
    )
}

fn random_medium(rng: &mut ChaCha8Rng) -> Medium {
    Medium::new("m", rng.gen_range(1.0..100.0), 0.0).unwrap()
}

fn c2_cascade_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_fresnel: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b) = (random_medium(&mut rng), random_medium(&mut rng));
        let sol = solve_stack(&StackSpec::interface(a.clone(), b.clone()), Complex64::new(0.0, 0.0), F).unwrap();
        let fr = fresnel_interface(&a, &b, F).unwrap();
        worst_fresnel = worst_fresnel
            .max((sol.gamma - fr.gamma).norm())
            .max((sol.t - fr.t).norm());
    }
    let mut worst_energy: f64 = 0.0;
    let mut evaluated = 0;
    while evaluated < 1000 {
        let layers = (0..rng.gen_range(0..4))
            .map(|_| Layer::from_mm(random_medium(&mut rng), rng.gen_range(0.1..60.0)).unwrap())
            .collect::<Vec<_>>();
        let index = rng.gen_range(0..=layers.len());
        let stack = StackSpec::new(random_medium(&mut rng), layers, random_medium(&mut rng)).with_surface_index(index);
        let y = Complex64::new(0.0, rng.gen_range(-0.2..0.2));
        let Ok(sol) = solve_stack(&stack, y, F) else { continue };
        // |T|^2 Z_0 / Z_4 with Z_0, Z_4 the source and load impedances.
        let z_src = stack.source.intrinsic_impedance(F).unwrap().re;
        let z_load = stack.load.intrinsic_impedance(F).unwrap().re;
        let total = sol.gamma.norm_sqr() + sol.t.norm_sqr() * z_src / z_load;
        worst_energy = worst_energy.max((total - 1.0).abs());
        evaluated += 1;
    }
    let pass = worst_fresnel < 1e-12 && worst_energy < 1e-9 && within_time(start.elapsed(), 5.0);
    outcome(
        pass,
        format!("max |cascade - fresnel| = {worst_fresnel:.1e}, max energy error = {worst_energy:.1e}"),
    )
}

fn tissue(fat_mm: f64) -> StackSpec {
    StackSpec::air_tissue(TissueGeometry {
        fat_mm,
        ..TissueGeometry::default()
    })
    .unwrap()
}

fn reduction_at_f(stack: &StackSpec, y: Complex64) -> f64 {
    reflection_spectrum(stack, &SurfaceDrive::Admittance(y), &[F]).unwrap()[0].reduction_db
}

fn c3_matching_quality() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut cases: Vec<(String, StackSpec)> = (2..=12)
        .map(|g| (format!("water gap {g} mm"), StackSpec::air_water(g as f64).unwrap()))
        .collect();
    cases.extend((1..=10).map(|i| (format!("tissue fat {} mm", 5 * i), tissue(5.0 * i as f64))));
    for (name, stack) in &cases {
        let m = best_admittance(stack, F, DEFAULT_SUSCEPTANCE_RANGE, STEPS).unwrap();
        if m.through_power_db < -0.5 {
            failures.push(format!("{name}: {:.2} dB", m.through_power_db));
        }
    }
    for (name, stack) in [
        ("water default", StackSpec::air_water(6.0).unwrap()),
        ("tissue default", tissue(15.0)),
    ] {
        let m = best_admittance(&stack, F, DEFAULT_SUSCEPTANCE_RANGE, STEPS).unwrap();
        let r = reduction_at_f(&stack, m.best_admittance);
        if r < 10.0 {
            failures.push(format!("{name} reduction {r:.2} dB"));
        }
    }
    let pass = failures.is_empty() && within_time(start.elapsed(), 30.0);
    let detail = if failures.is_empty() {
        format!("{} stacks >= -0.5 dB, defaults reduce reflection >= 10 dB", cases.len())
    } else {
        format!("below target: {}", failures.join("; "))
    };
    outcome(pass, detail)
}

fn c4_transmission_gains() -> Outcome {
    let w = best_admittance(&StackSpec::air_water(6.0).unwrap(), F, DEFAULT_SUSCEPTANCE_RANGE, STEPS).unwrap();
    let t = best_admittance(&tissue(15.0), F, DEFAULT_SUSCEPTANCE_RANGE, STEPS).unwrap();
    let pass = (w.gain_db - 4.0).abs() <= 1.0 && (t.gain_db - 9.0).abs() <= 2.0;
    outcome(
        pass,
        format!(
            "water {:.2} dB, tissue {:.2} dB (1-D cascade model)",
            w.gain_db, t.gain_db
        ),
    )
}

fn c5_programmability() -> Outcome {
    let (s, _) = scenario("water_default.toml");
    let circuit = s.circuit().unwrap();
    let voltages = s.voltage_set().unwrap();
    let mut worst_gap: f64 = 0.0;
    let mut prev_b = f64::INFINITY;
    let mut monotone = true;
    let mut chosen = Vec::new();
    for g in 2..=12 {
        let stack = StackSpec::air_water(g as f64).unwrap();
        let cont = best_admittance(&stack, F, DEFAULT_SUSCEPTANCE_RANGE, STEPS).unwrap();
        let disc = best_voltage(&stack, &circuit, F, voltages.levels()).unwrap();
        worst_gap = worst_gap.max(cont.through_power_db - disc.through_power_db);
        monotone &= cont.best_admittance.im <= prev_b + 1e-9;
        prev_b = cont.best_admittance.im;
        chosen.push(format!("{}", disc.best_voltage.unwrap()));
    }
    outcome(
        worst_gap <= 1.0 && monotone,
        format!(
            "worst voltage shortfall {worst_gap:.3} dB, susceptance non-increasing: {monotone}, voltages [{}]",
            chosen.join(",")
        ),
    )
}

fn c6_controller_near_optimal() -> Outcome {
    let start = Instant::now();
    let (s, _) = scenario("controller_bench.toml");
    let bench = bench_strategies(&s, 100).unwrap();
    let med = |o: &[medmatch::experiment::LinkOutcome]| median(&o.iter().map(|x| x.gain_db).collect::<Vec<_>>());
    let (cv, ce, ev) = (
        med(&bench.column_voting),
        med(&bench.column_enumeration),
        med(&bench.element_voting),
    );
    let s12 = median(
        &bench
            .element_voting
            .iter()
            .map(|x| x.stage12_gain_db)
            .collect::<Vec<_>>(),
    );
    let s3 = median(
        &bench
            .element_voting
            .iter()
            .map(|x| x.stage3_gain_db)
            .collect::<Vec<_>>(),
    );
    let pass = (ce - cv) <= 1.0 && ev >= cv && s12 >= s3 && within_time(start.elapsed(), 120.0);
    outcome(
        pass,
        format!(
            "column voting {cv:.2} dB vs enumeration {ce:.2} dB, element {ev:.2} dB; stages 1+2 {s12:.2} dB vs stage 3 {s3:.2} dB"
        ),
    )
}

fn c7_budget() -> Outcome {
    let (s, _) = scenario("water_default.toml");
    let setup = s.link_setup(LinkMode::OneWay).unwrap();
    let outcomes = run_links(&setup, s.seed, 100).unwrap();
    let v = setup.controller.voltages.len();
    let n = setup.layout.elements();
    let mut bad = 0;
    let mut max_total = 0;
    for o in &outcomes {
        let t = &o.trace;
        let ok = t.count(Stage::Uniform) == v
            && t.count(Stage::Voting) == 2 * n
            && t.count(Stage::FineTune) <= 9
            && t.probes.len() <= 145;
        bad += usize::from(!ok);
        max_total = max_total.max(t.probes.len());
    }
    outcome(
        bad == 0 && n == 64,
        format!(
            "{} traces, stage counts {v}/{}/<=9, max total {max_total}, violations {bad}",
            outcomes.len(),
            2 * n
        ),
    )
}

fn c8_backscatter() -> Outcome {
    let (s, _) = scenario("water_default.toml");
    let one = s.link_setup(LinkMode::OneWay).unwrap();
    let back = s.link_setup(LinkMode::Backscatter).unwrap();
    let one_links = run_links(&one, s.seed, 45).unwrap();
    let back_links = run_links(&back, s.seed, 45).unwrap();
    let mut worst: f64 = 0.0;
    for o in &back_links {
        let ch = sample_channel(o.seeds.channel, &back.channel).unwrap();
        let cfg = &o.trace.best().unwrap().config;
        let g1 = one_way_gain(&ch, cfg, &back.response).unwrap();
        let g2 = backscatter_gain(&ch, &ch.reciprocal(), SurfaceSetting::Config(cfg), &back.response).unwrap();
        worst = worst.max((g2 - 2.0 * g1).abs());
    }
    let m1 = median(&one_links.iter().map(|o| o.gain_db).collect::<Vec<_>>());
    let m2 = median(&back_links.iter().map(|o| o.gain_db).collect::<Vec<_>>());
    outcome(
        worst < 1e-9 && m2 >= 2.0 * m1 - 1.0,
        format!("max |2x one-way - backscatter| = {worst:.1e} dB; median backscatter {m2:.2} dB vs one-way {m1:.2} dB"),
    )
}

fn c9_depth_invariance() -> Outcome {
    let (s, _) = scenario("lossy_depth.toml");
    let mut base = s.stack().unwrap();
    base.layers.pop();
    let at = |depth_mm: f64| base.clone().with_load_depth(depth_mm * 1e-3).unwrap();
    let y = best_admittance(&at(20.0), F, DEFAULT_SUSCEPTANCE_RANGE, STEPS)
        .unwrap()
        .best_admittance;
    let mut gains = Vec::new();
    let mut powers = Vec::new();
    for depth in (20..=100).step_by(10) {
        let stack = at(depth as f64);
        let on = solve_stack(&stack, y, F).unwrap().through_power_db();
        let off = solve_stack(&stack, Complex64::new(0.0, 0.0), F)
            .unwrap()
            .through_power_db();
        gains.push(on - off);
        powers.push(on);
    }
    let spread =
        gains.iter().fold(f64::NEG_INFINITY, |a, &g| a.max(g)) - gains.iter().fold(f64::INFINITY, |a, &g| a.min(g));
    let decreasing = powers.windows(2).all(|w| w[1] < w[0]);
    outcome(
        spread <= 1e-9 && decreasing && !base.is_lossless(),
        format!(
            "gain {:.4} dB, spread {spread:.1e} dB, power {:.2} -> {:.2} dB over 2-10 cm",
            gains[0],
            powers[0],
            powers[powers.len() - 1]
        ),
    )
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                let key = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(key, sha256_hex(&std::fs::read(&p).unwrap()));
            }
        }
    }
    out
}

fn c10_determinism() -> Outcome {
    let runs: Vec<BTreeMap<String, String>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path();
            let (w, wh) = scenario("water_default.toml");
            cmd_match(&w, &wh, &out.join("match")).unwrap();
            cmd_links(&w, &wh, &out.join("links"), Some(20)).unwrap();
            cmd_backscatter(&w, &wh, &out.join("backscatter"), Some(20)).unwrap();
            let (b, bh) = scenario("controller_bench.toml");
            cmd_bench_controller(&b, &bh, &out.join("bench"), Some(20)).unwrap();
            for name in [
                "water_gap_heatmap.toml",
                "tissue_gap_heatmap.toml",
                "tissue_fat_heatmap.toml",
            ] {
                let (s, h) = scenario(name);
                cmd_sweep(&s, &h, &out.join("sweep")).unwrap();
            }
            hash_dir(out)
        })
        .collect();
    let identical = runs[0] == runs[1] && !runs[0].is_empty();

    let (s, _) = scenario("water_default.toml");
    let setup = s.link_setup(LinkMode::OneWay).unwrap();
    let gains: Vec<f64> = run_links(&setup, s.seed, 100)
        .unwrap()
        .iter()
        .map(|o| o.gain_db)
        .collect();
    let m = median(&gains);
    outcome(
        identical && m >= 5.0,
        format!(
            "{} CSVs bit-identical: {identical}; median controller gain over 100 links {m:.2} dB",
            runs[0].len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 fresnel exactness", c1_fresnel),
        ("2 cascade reduction and energy", c2_cascade_reduction),
        ("3 matching quality", c3_matching_quality),
        ("4 transmission gains", c4_transmission_gains),
        ("5 programmability", c5_programmability),
        ("6 controller near-optimality", c6_controller_near_optimal),
        ("7 probe budget", c7_budget),
        ("8 backscatter doubling", c8_backscatter),
        ("9 depth invariance", c9_depth_invariance),
        ("10 determinism and controller gain", c10_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {name} ({:.2}s): {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
