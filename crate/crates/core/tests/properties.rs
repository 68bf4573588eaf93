use proptest::prelude::*;

use modescope::dmd::{fit_dmd, mode_report, PowerDefinition, RankSelection};
use modescope::ingest::{load_panel, normalize, stack_for_plot, unstack, write_panel, IngestConfig, NormalizeMethod};
use modescope::multifractal::{besov_exponent, grid, singularity_spectrum, structure_functions, LevelRange};
use modescope::stats::{jarque_bera, summarize};
use modescope::wavelet::{dwt_forward, dwt_inverse, mra, FilterPair, WaveletCoefficients};
use modescope::Panel;

fn filter() -> impl Strategy<Value = FilterPair> {
    prop_oneof![Just(FilterPair::haar()), Just(FilterPair::db2())]
}

/// (levels, series) with a length that is a multiple of `2^levels`.
fn dyadic_series() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..=5, 1usize..=4).prop_flat_map(|(levels, blocks)| {
        let len = blocks << levels;
        (Just(levels), prop::collection::vec(-1e3f64..1e3, len))
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn scale(x: &[f64]) -> f64 {
    x.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn wavelet_round_trip((levels, x) in dyadic_series(), f in filter()) {
        let c = dwt_forward(&x, &f, levels).unwrap();
        let back = dwt_inverse(&c, &f).unwrap();
        prop_assert!(max_abs_diff(&x, &back) <= 1e-12 * scale(&x));
    }

    #[test]
    fn wavelet_parseval((levels, x) in dyadic_series(), f in filter()) {
        let c = dwt_forward(&x, &f, levels).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((c.energy() - energy).abs() <= 1e-12 * energy.max(1.0));
    }

    #[test]
    fn mra_components_are_orthogonal((levels, x) in dyadic_series(), f in filter()) {
        let m = mra(&x, &f, levels).unwrap();
        let mut parts = vec![m.approximation.clone()];
        parts.extend(m.details.iter().cloned());
        let tol = 1e-10 * dot(&x, &x).max(1.0);
        for i in 0..parts.len() {
            for j in 0..i {
                prop_assert!(dot(&parts[i], &parts[j]).abs() <= tol);
            }
        }
        prop_assert!(max_abs_diff(&x, &m.sum()) <= 1e-12 * scale(&x));
    }

    /// A circular shift by `2^J` samples shifts every MRA component by the
    /// same amount.
    #[test]
    fn mra_shift_covariance((levels, x) in dyadic_series(), f in filter()) {
        let shift = 1usize << levels;
        let mut shifted = x.clone();
        shifted.rotate_right(shift % x.len());
        let a = mra(&x, &f, levels).unwrap();
        let b = mra(&shifted, &f, levels).unwrap();
        let tol = 1e-11 * scale(&x);
        let mut expect = a.approximation.clone();
        expect.rotate_right(shift % x.len());
        prop_assert!(max_abs_diff(&expect, &b.approximation) <= tol);
        for (da, db) in a.details.iter().zip(&b.details) {
            let mut expect = da.clone();
            expect.rotate_right(shift % x.len());
            prop_assert!(max_abs_diff(&expect, db) <= tol);
        }
    }

    #[test]
    fn normalize_bounds(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 16), 1..5)) {
        let p = Panel::from_rows(rows).unwrap();
        let mm = normalize(&p, NormalizeMethod::Minmax);
        let z = normalize(&p, NormalizeMethod::Zscore);
        prop_assert_eq!(mm.series_ids(), p.series_ids());
        prop_assert_eq!(mm.times(), p.times());
        for (r, zr) in mm.values().iter().zip(z.values()) {
            prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            let mean = zr.iter().sum::<f64>() / zr.len() as f64;
            prop_assert!(mean.abs() <= 1e-12);
        }
        prop_assert_eq!(normalize(&p, NormalizeMethod::None), p);
    }

    #[test]
    fn stats_affine_invariance(
        x in prop::collection::vec(-10.0f64..10.0, 8..200),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
    ) {
        let s = summarize(&x).unwrap();
        prop_assume!(s.std > 1e-3);
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let t = summarize(&y).unwrap();
        prop_assert!(s.min <= s.median && s.median <= s.max);
        prop_assert!(s.kurtosis.unwrap() >= 1.0 - 1e-12);
        prop_assert!((s.skewness.unwrap() - t.skewness.unwrap()).abs() <= 1e-10);
        prop_assert!((s.kurtosis.unwrap() - t.kurtosis.unwrap()).abs() <= 1e-10);
        let (jx, jy) = (jarque_bera(&x, 0.05).unwrap(), jarque_bera(&y, 0.05).unwrap());
        prop_assert!((jx.statistic - jy.statistic).abs() <= 1e-10 * jx.statistic.max(1.0));
        prop_assert!((0.0..=1.0).contains(&jx.p_value));
        prop_assert_eq!(jx.h, jx.p_value < 0.05);
    }

    /// Every spectrum point lies below each supporting line and touches the
    /// one at its argmin.
    #[test]
    fn legendre_inequality(b in prop::collection::vec(-3.0f64..3.0, 9), alpha in prop::collection::vec(-2.0f64..2.0, 1..20)) {
        let p_grid = grid(-2.0, 2.0, 0.5).unwrap();
        let pts = singularity_spectrum(&b, &p_grid, &alpha).unwrap();
        for pt in &pts {
            for (p, bp) in p_grid.iter().zip(&b) {
                prop_assert!(pt.d <= pt.alpha * p - bp + 1.0);
            }
            let k = p_grid.iter().position(|&p| p == pt.argmin_p).unwrap();
            prop_assert_eq!(pt.d, pt.alpha * pt.argmin_p - b[k] + 1.0);
        }
    }

    #[test]
    fn besov_exponent_is_scale_free(
        details in prop::collection::vec(0.01f64..10.0, 62),
        c in 0.01f64..100.0,
    ) {
        // levels 1..=5 of a 64-sample transform hold 32, 16, 8, 4, 2 values
        let split = |d: &[f64]| {
            let mut out = Vec::new();
            let mut start = 0;
            for len in [32, 16, 8, 4, 2] {
                out.push(d[start..start + len].to_vec());
                start += len;
            }
            WaveletCoefficients { details: out, approx: vec![0.0, 0.0], len: 64, padding: (0, 0) }
        };
        let scaled: Vec<f64> = details.iter().map(|v| v * c).collect();
        let p_grid = grid(-2.0, 3.0, 0.5).unwrap();
        let range = LevelRange::new(1, 5).unwrap();
        let b1 = besov_exponent(&structure_functions(&split(&details), &p_grid).unwrap(), range).unwrap();
        let b2 = besov_exponent(&structure_functions(&split(&scaled), &p_grid).unwrap(), range).unwrap();
        prop_assert!(max_abs_diff(&b1.b, &b2.b) <= 1e-9);
    }

    #[test]
    fn ingest_round_trip(
        rows in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL, 6), 1..4),
        start in -1000i64..1000,
        step in 1i64..5,
    ) {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("B{}", i + 1)).collect();
        let times: Vec<i64> = (0..6).map(|k| start + step * k).collect();
        let p = Panel::new(ids, times, rows).unwrap();
        let mut buf = Vec::new();
        write_panel(&p, &mut buf).unwrap();
        let back = load_panel(buf.as_slice(), &IngestConfig::default()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn stack_unstack_inverse(rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 4), 1..4), gap in 0.5f64..4.0) {
        let p = Panel::from_rows(rows).unwrap();
        let back = unstack(&stack_for_plot(&p, gap).unwrap(), gap).unwrap();
        for (a, b) in p.values().iter().zip(back.values()) {
            prop_assert!(max_abs_diff(a, b) <= 1e-12 * (gap * 4.0));
        }
    }

    #[test]
    fn power_rank_is_scale_invariant(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 24), 2..6),
        c in prop_oneof![Just(0.1), Just(10.0), 1e-3f64..1e3],
    ) {
        let p = Panel::from_rows(rows).unwrap();
        let rank = RankSelection::Rank(p.n_series());
        let (Ok(m1), Ok(m2)) = (fit_dmd(&p, rank), fit_dmd(&p.scaled(c).unwrap(), rank)) else {
            return Ok(());
        };
        let r1 = mode_report(&m1, PowerDefinition::SquaredAmplitude);
        let r2 = mode_report(&m2, PowerDefinition::SquaredAmplitude);
        prop_assert_eq!(r1.rank_order, r2.rank_order);
    }
}
