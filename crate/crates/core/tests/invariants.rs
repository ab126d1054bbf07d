//! Structural invariants of band structures and spectra over random samples.

use hatano_core::bands::{band_structure, bandwidths};
use hatano_core::discriminant::{derivative_at, eval_disc};
use hatano_core::numerics::scalar::complex_abs;
use hatano_core::potential::sample_potential;
use hatano_core::spectrum::{eigvals_from, flow_from, SpectralParams};
use hatano_core::transfer::product;
use hatano_core::{BandStructureDD, DistributionSpec, DoubleDouble};
use proptest::prelude::*;

fn uniform_sample(n: usize, seed: u64, w: f64) -> hatano_core::PotentialSample {
    sample_potential(&DistributionSpec::uniform(-w / 2.0, w / 2.0), n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bands_are_ordered_and_separated(n in 4usize..64, seed in any::<u64>(), w in 0.5f64..4.0) {
        let s = uniform_sample(n, seed, w);
        let bs: BandStructureDD = band_structure(&s).unwrap();
        prop_assert_eq!(bs.roots.len(), n);
        prop_assert_eq!(bs.turning_points.len(), n - 1);
        for j in 0..n {
            let [l, r] = bs.bands[j];
            prop_assert!(l <= bs.roots[j] && bs.roots[j] <= r);
            prop_assert!(l < r);
            let e0 = bs.hermitian_eigenvalue(j);
            prop_assert!(l <= e0 && e0 <= r);
            if j + 1 < n {
                let tp = bs.turning_points[j];
                prop_assert!(r <= tp && tp <= bs.bands[j + 1][0]);
                prop_assert!(bs.roots[j] < tp && tp < bs.roots[j + 1]);
                // the trace reaches at least 2 in size between bands
                prop_assert!(bs.tp_value[j].logmag() >= 2f64.ln() - 1e-12);
                let sign = if (n - 1 - j) % 2 == 0 { 1 } else { -1 };
                prop_assert_eq!(bs.tp_value[j].sign(), sign);
                let d = derivative_at(&bs.values, tp).to_f64();
                let scale = bs.tp_value[j].to_f64().abs() * n as f64;
                prop_assert!(d.abs() <= 1e-12 * scale, "derivative {} at turning point {}", d, j);
            }
        }
        let (lo, hi) = bs.interval;
        prop_assert!(bs.bands[0][0].to_f64() >= lo && bs.bands[n - 1][1].to_f64() <= hi);
        prop_assert!(bandwidths(&bs).iter().all(|b| *b > 0.0));
    }

    #[test]
    fn band_edges_sit_at_level_two(n in 4usize..40, seed in any::<u64>()) {
        let s = uniform_sample(n, seed, 1.0);
        let bs: BandStructureDD = band_structure(&s).unwrap();
        for (j, [l, r]) in bs.bands.iter().enumerate() {
            for (e, side) in [(l, 0), (r, 1)] {
                let v = eval_disc(&s, *e).value.to_f64();
                prop_assert!((v.abs() - 2.0).abs() <= 1e-18 * n as f64 * 1e6, "band {} side {}: {}", j, side, v);
            }
        }
    }

    #[test]
    fn transfer_products_are_unimodular(n in 2usize..200, seed in any::<u64>(), e in -4.0f64..4.0) {
        let s = uniform_sample(n, seed, 2.0);
        let p = product(&s.values, DoubleDouble::from(e));
        let det = p.det();
        // det is 1 exactly; rounding enters relative to the squared entries,
        // so for large products only the magnitude bound is meaningful
        prop_assert!((det.to_f64() - 1.0).abs() <= 1e-26 * (2.0 * p.logscale()).exp().max(1.0));
    }

    #[test]
    fn spectra_keep_trace_and_conjugate_symmetry(n in 3usize..40, seed in any::<u64>(), g in 0.0f64..1.5) {
        let s = uniform_sample(n, seed, 2.0);
        let bs: BandStructureDD = band_structure(&s).unwrap();
        let spec = eigvals_from(&bs, &SpectralParams::new(n, g).unwrap()).unwrap();
        let z = spec.to_f64();
        prop_assert_eq!(z.len(), n);
        // Tr H = Σ v and Tr H² = Σ v² + 2n for n >= 3, independent of g
        let tr: f64 = s.values.iter().sum();
        let tr2: f64 = s.values.iter().map(|v| v * v).sum::<f64>() + 2.0 * n as f64;
        let sum: num_complex::Complex<f64> = z.iter().sum();
        let sum2: num_complex::Complex<f64> = z.iter().map(|x| x * x).sum();
        let scale = n as f64 * (2.0 * g.cosh() + 2.0).powi(2);
        prop_assert!((sum.re - tr).abs() <= 1e-10 * scale && sum.im.abs() <= 1e-10 * scale);
        prop_assert!((sum2.re - tr2).abs() <= 1e-10 * scale && sum2.im.abs() <= 1e-10 * scale);
        let mut conj: Vec<_> = z.iter().map(|x| x.conj()).collect();
        conj.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for (a, b) in z.iter().zip(&conj) {
            prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()));
        }
        prop_assert_eq!(spec.is_real.iter().filter(|r| !**r).count(), spec.complex_count());
    }

    #[test]
    fn real_eigenvalues_move_monotonically(n in 4usize..30, seed in any::<u64>()) {
        let s = uniform_sample(n, seed, 3.0);
        let bs: BandStructureDD = band_structure(&s).unwrap();
        let grid: Vec<f64> = (0..12).map(|i| 0.05 * i as f64).collect();
        let f = flow_from(&bs, &grid).unwrap();
        for j in 0..n {
            let traj = &f.trajectories[j];
            let real = &f.is_real[j];
            // once complex, always complex on this grid
            prop_assert!(real.windows(2).all(|w| w[0] || !w[1]));
            let start = traj[0].re;
            let mut last = DoubleDouble::ZERO;
            for i in 1..grid.len() {
                if !real[i] {
                    break;
                }
                let shift = (traj[i].re - start).abs();
                prop_assert!(shift >= last);
                last = shift;
                // a real eigenvalue stays between λ_j(0) and the turning point it moves toward
                if let Some(k) = bs.target_turning_point(j) {
                    let reach = (bs.turning_points[k] - start).abs().to_f64();
                    prop_assert!(complex_abs(traj[i] - traj[0]) <= reach * (1.0 + 1e-12));
                }
            }
        }
    }
}
