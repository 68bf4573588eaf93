//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::panic;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use modescope::config::{RunConfig, SynthPreset};
use modescope::dmd::{
    fit_dmd, mode_report, reconstruct, sample_times, CycleDuration, DmdModel, PowerDefinition, RankSelection,
};
use modescope::multifractal::{
    besov_exponent, concavity_test, grid, singularity_spectrum, structure_functions, LevelRange,
    EXACT_CONCAVITY_TOL,
};
use modescope::pipeline::run;
use modescope::report::{emit_bundle, emit_mode_table, emit_stats, ArtifactClass, SeriesStats, MANIFEST_FILE};
use modescope::stats::{jarque_bera, summarize};
use modescope::synth::{
    gen_cascade, gen_linear_system, gen_planted_cycles, operator_with_spectrum, preset_specs, rng, PRICE_CYCLES,
    SALES_CYCLES,
};
use modescope::wavelet::{dwt_forward, dwt_inverse, mra, FilterPair, WaveletCoefficients};
use modescope::Panel;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(spent < limit, || format!("took {spent:.2?}, limit {limit:?}"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

const SEED: u64 = 20_240_601;

fn mode_table(model: &DmdModel, k: usize) -> Result<String, String> {
    let report = mode_report(model, PowerDefinition::SquaredAmplitude);
    let mut buf = Vec::new();
    emit_mode_table(&report, k, &mut buf).map_err(e)?;
    String::from_utf8(buf).map_err(e)
}

fn table(rows: &[(&str, &str)]) -> String {
    let mut s = String::from("mode,daily_frequency,duration\n");
    for (i, (f, d)) in rows.iter().enumerate() {
        s += &format!("{},{f},{d}\n", i + 1);
    }
    s
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let specs = preset_specs(&PRICE_CYCLES, 16, SEED);
    let panel = gen_planted_cycles(&specs, 1024, 1e-3, SEED).map_err(e)?;
    let model = fit_dmd(&panel, RankSelection::Rank(15)).map_err(e)?;
    let got = mode_table(&model, 8)?;
    within(start, Duration::from_secs(5))?;

    let expected = table(&[
        ("0.0011", "925"),
        ("0.0015", "654"),
        ("0.0000", "Inf"),
        ("0.2154", "5"),
        ("0.0517", "19"),
        ("0.0320", "31"),
        ("0.1436", "7"),
        ("0.0030", "332"),
    ]);
    ensure(got == expected, || format!("mode table\n{got}differs from\n{expected}"))?;
    let report = mode_report(&model, PowerDefinition::SquaredAmplitude);
    for row in report.top(8) {
        let ok = match row.duration {
            CycleDuration::Infinite => row.frequency == 0.0,
            CycleDuration::Days(d) => (1.0 / row.frequency).round() == d as f64,
        };
        ensure(ok, || format!("duration {} does not match 1/{}", row.duration, row.frequency))?;
        ensure(row.growth_rate.abs() < 1e-3, || {
            format!("mode {} growth {} is not mild", row.mode, row.growth_rate)
        })?;
    }
    Ok("top-8 table equals the price reference, round(1/f) = duration".into())
}

fn criterion_2() -> Outcome {
    let specs = preset_specs(&SALES_CYCLES, 20, SEED);
    let panel = gen_planted_cycles(&specs, 1024, 1e-3, SEED).map_err(e)?;
    let model = fit_dmd(&panel, RankSelection::Rank(18)).map_err(e)?;
    let got = mode_table(&model, 10)?;
    let zero_rows = got.lines().filter(|l| l.ends_with(",0.0000,Inf")).count();
    ensure(zero_rows >= 2, || format!("{zero_rows} zero-frequency rows in\n{got}"))?;
    let expected = table(&[
        ("0.0000", "Inf"),
        ("0.0000", "Inf"),
        ("0.0038", "263"),
        ("0.1081", "9"),
        ("0.3511", "3"),
        ("0.3801", "3"),
        ("0.0010", "1037"),
        ("0.4502", "2"),
        ("0.1488", "7"),
        ("0.0021", "469"),
    ]);
    ensure(got == expected, || format!("mode table\n{got}differs from\n{expected}"))?;
    Ok(format!("{zero_rows} modes at 0.0000/Inf; top-10 table equals the sales reference"))
}

/// Distinct eigenvalues: four conjugate pairs and four real values, moduli in
/// [0.5, 1.04].
fn random_spectrum(r: &mut impl Rng) -> Vec<Complex64> {
    loop {
        let mut eigs = Vec::with_capacity(12);
        for _ in 0..4 {
            let l = Complex64::from_polar(r.random_range(0.5..1.04), r.random_range(0.05..3.0));
            eigs.extend([l, l.conj()]);
        }
        for _ in 0..4 {
            let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
            eigs.push(Complex64::new(sign * r.random_range(0.5..1.04), 0.0));
        }
        let min_gap = (0..12)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| (eigs[i] - eigs[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if min_gap > 0.05 {
            return eigs;
        }
    }
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED);
    let (mut worst_eig, mut worst_rec) = (0.0f64, 0.0f64);
    for trial in 0..20 {
        let eigs = random_spectrum(&mut r);
        let a = operator_with_spectrum(&eigs, SEED + trial).map_err(e)?;
        let x0: Vec<f64> = (0..12).map(|_| r.sample(StandardNormal)).collect();
        let panel = gen_linear_system(&a, &x0, 200).map_err(e)?;
        let model = fit_dmd(&panel, RankSelection::Rank(12)).map_err(e)?;
        let mut unused: Vec<Complex64> = model.eigenvalues.clone();
        for l in &eigs {
            let (k, dist) = unused
                .iter()
                .enumerate()
                .map(|(k, m)| (k, (m - l).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or("fewer eigenvalues than planted")?;
            worst_eig = worst_eig.max(dist);
            unused.swap_remove(k);
        }
        let rec = reconstruct(&model, &sample_times(&model));
        worst_rec = worst_rec.max(rec.relative_error(panel.values()));
    }
    within(start, Duration::from_secs(10))?;
    ensure(worst_eig <= 1e-8, || format!("eigenvalue error {worst_eig:e}"))?;
    ensure(worst_rec <= 1e-6, || format!("reconstruction error {worst_rec:e}"))?;
    Ok(format!("20 operators: max |Δλ| {worst_eig:.1e}, max rel. reconstruction error {worst_rec:.1e}"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED);
    let (mut rt, mut parseval, mut additive) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    for filter in [FilterPair::haar(), FilterPair::db2()] {
        for levels in 1..=6 {
            for len in [64, 256, 1024] {
                for _ in 0..50 {
                    let x: Vec<f64> = (0..len).map(|_| r.sample(StandardNormal)).collect();
                    let coeffs = dwt_forward(&x, &filter, levels).map_err(e)?;
                    let back = dwt_inverse(&coeffs, &filter).map_err(e)?;
                    rt = rt.max(max_abs_diff(&x, &back));
                    let energy: f64 = x.iter().map(|v| v * v).sum();
                    parseval = parseval.max((coeffs.energy() - energy).abs());
                    let m = mra(&x, &filter, levels).map_err(e)?;
                    additive = additive.max(max_abs_diff(&x, &m.sum()));
                    count += 1;
                }
            }
        }
    }
    within(start, Duration::from_secs(5))?;
    ensure(rt <= 1e-10, || format!("round trip error {rt:e}"))?;
    ensure(parseval <= 1e-10, || format!("Parseval error {parseval:e}"))?;
    ensure(additive <= 1e-10, || format!("MRA additivity error {additive:e}"))?;
    Ok(format!(
        "{count} transforms: round trip {rt:.1e}, Parseval {parseval:.1e}, additivity {additive:.1e}"
    ))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Slope and largest residual of the least-squares line through the points.
fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let resid = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - icpt - slope * x).abs())
        .fold(0.0, f64::max);
    (slope, resid)
}

/// b(p) by direct summation over every level, independent of the library.
fn brute_force_b(c: &WaveletCoefficients, p_grid: &[f64]) -> Vec<f64> {
    let levels: Vec<f64> = (1..=c.levels()).map(|j| j as f64).collect();
    p_grid
        .iter()
        .map(|&p| {
            let logs: Vec<f64> = c
                .details
                .iter()
                .map(|d| d.iter().map(|v| v.abs().powf(p)).sum::<f64>().log2())
                .collect();
            1.0 + ols(&levels, &logs).0
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let depth = 10;
    let all_levels = LevelRange::new(1, depth).map_err(e)?;

    let sym = gen_cascade(depth, (0.7, 0.7), SEED).map_err(e)?;
    let p_pos = grid(0.0, 5.0, 0.25).map_err(e)?;
    let sf = structure_functions(&sym, &p_pos).map_err(e)?;
    let fit = besov_exponent(&sf, all_levels).map_err(e)?;
    let log_resid = fit.residuals.iter().copied().fold(0.0, f64::max);
    let (_, affine_resid) = ols(&p_pos, &fit.b);
    ensure(log_resid <= 1e-10, || format!("symmetric log-fit residual {log_resid:e}"))?;
    ensure(affine_resid <= 1e-10, || format!("symmetric b(p) not affine: residual {affine_resid:e}"))?;

    let (m0, m1) = (0.4, 0.6);
    let asym = gen_cascade(depth, (m0, m1), SEED).map_err(e)?;
    let p_grid = grid(-5.0, 5.0, 0.25).map_err(e)?;
    let alpha_grid = grid(0.5, 1.5, 0.01).map_err(e)?;
    let sf = structure_functions(&asym, &p_grid).map_err(e)?;
    let fit = besov_exponent(&sf, all_levels).map_err(e)?;
    let closed: Vec<f64> = p_grid.iter().map(|&p| 1.0 - (m0.powf(p) + m1.powf(p)).log2()).collect();
    let closed_err = max_abs_diff(&fit.b, &closed);
    ensure(closed_err <= 1e-10, || format!("b(p) off the closed form by {closed_err:e}"))?;

    let spectrum = singularity_spectrum(&fit.b, &p_grid, &alpha_grid).map_err(e)?;
    let concavity = concavity_test(&spectrum, EXACT_CONCAVITY_TOL).map_err(e)?;
    ensure(concavity.concave, || format!("second-difference gap {:e}", concavity.gap))?;

    let oracle_b = brute_force_b(&asym, &p_grid);
    let mut worst = 0.0f64;
    for pt in &spectrum {
        let (d, argmin) = p_grid
            .iter()
            .zip(&oracle_b)
            .map(|(&p, &b)| (pt.alpha * p - b + 1.0, p))
            .fold((f64::INFINITY, f64::NAN), |best, cur| if cur.0 < best.0 { cur } else { best });
        worst = worst.max((d - pt.d).abs());
        ensure(argmin == pt.argmin_p, || {
            format!("alpha {}: argmin p {} vs brute force {argmin}", pt.alpha, pt.argmin_p)
        })?;
    }
    ensure(worst <= 1e-12, || format!("Legendre values differ from brute force by {worst:e}"))?;
    let interior = spectrum
        .iter()
        .filter(|pt| pt.argmin_p > p_grid[0] && pt.argmin_p < p_grid[p_grid.len() - 1])
        .count();
    ensure(interior > 10, || format!("only {interior} interior Legendre points"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!(
        "affine residual {affine_resid:.1e}; concavity gap {:.1e}; brute-force Legendre diff {worst:.1e}",
        concavity.gap
    ))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED);
    let trials = 500;
    let mut rejections = 0;
    for _ in 0..trials {
        let x: Vec<f64> = (0..1024).map(|_| r.sample(StandardNormal)).collect();
        if jarque_bera(&x, 0.05).map_err(e)?.h {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    ensure((0.03..=0.07).contains(&rate), || format!("rejection rate {rate}"))?;

    let mut exact = vec![0.0; 8];
    exact.extend([-1.0, -1.0, 1.0, 1.0]);
    let summary = summarize(&exact).map_err(e)?;
    ensure(summary.skewness == Some(0.0) && summary.kurtosis == Some(3.0), || {
        format!("moments {:?} {:?}", summary.skewness, summary.kurtosis)
    })?;
    let jb = jarque_bera(&exact, 0.05).map_err(e)?;
    ensure(jb.statistic == 0.0 && jb.p_value == 1.0 && !jb.h, || format!("{jb:?}"))?;
    let mut buf = Vec::new();
    emit_stats(
        &[SeriesStats {
            id: "exact".into(),
            summary,
            jb: Some(jb),
        }],
        &mut buf,
    )
    .map_err(e)?;
    let text = String::from_utf8(buf).map_err(e)?;
    ensure(text.lines().nth(1).is_some_and(|l| l.ends_with(",0,1.00")), || {
        format!("(h,p) cells in {text}")
    })?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("rejection rate {rate:.3}; exact moments give JB 0, p 1"))
}

fn criterion_7() -> Outcome {
    let mut config = RunConfig::default();
    config.input.synth = Some(SynthPreset::Price);
    config.output.seed = SEED;
    let mut manifests = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(e)?;
        let bundle = run(&config).map_err(e)?;
        let manifest = emit_bundle(&bundle, dir.path()).map_err(e)?;
        ensure(manifest.classes().len() == 5, || format!("classes {:?}", manifest.classes()))?;
        ensure(manifest.classes().contains(&ArtifactClass::Multifractal), || "no multifractal".into())?;
        manifests.push(std::fs::read(dir.path().join(MANIFEST_FILE)).map_err(e)?);
    }
    ensure(manifests[0] == manifests[1], || "manifests differ between runs".into())?;
    Ok(format!("two runs, identical {}-byte manifests", manifests[0].len()))
}

fn criterion_8() -> Outcome {
    let price = gen_planted_cycles(&preset_specs(&PRICE_CYCLES, 16, SEED), 1024, 1e-3, SEED).map_err(e)?;
    let sales = gen_planted_cycles(&preset_specs(&SALES_CYCLES, 20, SEED), 1024, 1e-3, SEED).map_err(e)?;
    let mut r = rng(SEED);
    let noise: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..64).map(|_| r.sample(StandardNormal)).collect())
        .collect();
    let noise = Panel::from_rows(noise).map_err(e)?;
    let cases: [(&str, &Panel, RankSelection); 4] = [
        ("price", &price, RankSelection::Rank(15)),
        ("sales", &sales, RankSelection::Rank(18)),
        ("noise", &noise, RankSelection::default()),
        ("noise/energy 0.9", &noise, RankSelection::Energy(0.9)),
    ];
    for (name, panel, selection) in cases {
        let mut orders = Vec::new();
        for c in [0.1, 1.0, 10.0] {
            let model = fit_dmd(&panel.scaled(c).map_err(e)?, selection).map_err(e)?;
            orders.push(mode_report(&model, PowerDefinition::SquaredAmplitude).rank_order);
        }
        ensure(orders[0] == orders[1] && orders[1] == orders[2], || {
            format!("{name}: rank orders {orders:?}")
        })?;
    }
    Ok("rank order unchanged for c in {0.1, 1, 10} on 4 panels".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("price frequency arithmetic", criterion_1),
        ("sales zero-frequency modes", criterion_2),
        ("eigenvalue recovery", criterion_3),
        ("wavelet round trip", criterion_4),
        ("multifractal oracle", criterion_5),
        ("JB calibration", criterion_6),
        ("determinism", criterion_7),
        ("power-ranking invariance", criterion_8),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
