use fisher_core::compose::{product_triple, rescale_triple, MixtureSpec};
use fisher_core::flow::{density_on_grid, evolve};
use fisher_core::report::DefectReport;
use fisher_core::simplex::SimplexWaveSystem;
use fisher_core::transfer::{fourier_coefficients, ShellMetric};
use fisher_core::{integrands_at, EnvelopeFamily, FunctionalTriple, Jet, LogDensityJet, PeriodicGrid, TorusExpFamily};
use proptest::prelude::*;

fn sym_jet(v: &[f64]) -> Jet<2> {
    let h = [[v[2], v[3]], [v[3], v[4]]];
    let (a, b, c, d) = (v[5], v[6], v[7], v[8]);
    let t = [[[a, b], [b, c]], [[b, c], [c, d]]];
    Jet::new(v[0], [v[1], v[9]], h, t)
}

fn op_norm(h: &[[f64; 2]; 2]) -> f64 {
    let (a, b, d) = (h[0][0], h[0][1], h[1][1]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    (mid.abs() + rad).max((mid - rad).abs())
}

proptest! {
    #[test]
    fn integrand_bounds(v in prop::collection::vec(-3.0f64..3.0, 10)) {
        let jet = sym_jet(&v);
        let iv = integrands_at(&LogDensityJet::new(jet)).unwrap();
        prop_assert!(iv.j2 >= 0.0);
        let n = op_norm(jet.hess());
        prop_assert!(iv.j3 >= -2.0 * 2.0 * n.powi(3) - 1e-12);
    }

    #[test]
    fn triple_defect_and_ratio(i in 0.0f64..5.0, q in -1.0f64..5.0, d in -5.0f64..5.0) {
        let t = FunctionalTriple::new(i, q, d);
        prop_assert_eq!(t.defect, i * d - q * q);
        prop_assert_eq!(t.ratio.is_some(), q > 0.0);
    }

    #[test]
    fn products_add_and_rescaling_keeps_ratio(
        a in prop::array::uniform3(0.01f64..5.0),
        b in prop::array::uniform3(0.01f64..5.0),
        r in 0.05f64..20.0,
    ) {
        let (x, y) = (FunctionalTriple::new(a[0], a[1], a[2]), FunctionalTriple::new(b[0], b[1], b[2]));
        let p = product_triple(&x, &y);
        prop_assert_eq!(p.components(), [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
        let s = rescale_triple(&x, r).unwrap();
        let (r0, r1) = (x.ratio.unwrap(), s.ratio.unwrap());
        prop_assert!((r0 - r1).abs() <= 1e-14 * r0);
    }

    #[test]
    fn report_recomputes_defect(i in 0.0f64..1.0, q in 0.001f64..1.0, d in -1.0f64..1.0) {
        let mut r = DefectReport::new(0.05, 1000.0, &FunctionalTriple::new(i, q, d));
        r.d_val *= 2.0;
        let v = serde_json::to_value(&r).unwrap();
        prop_assert_eq!(v["defect"].as_f64().unwrap(), i * (2.0 * d) - q * q);
    }

    #[test]
    fn envelope_shift(radius in 0.1f64..1e4) {
        let fam = EnvelopeFamily::new(0.05, radius).unwrap();
        prop_assert!((fam.c_r() * radius * radius - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn shell_factors_bounded(m in -6i64..=6, n in -6i64..=6, radius in 0.5f64..50.0) {
        let metric = ShellMetric::triad();
        let s = metric.shell_factor(&[m, n], radius);
        if m == 0 && n == 0 {
            prop_assert_eq!(s, 1.0);
        } else {
            prop_assert!(s <= (-radius * radius / 2.0).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn real_fields_have_hermitian_coefficients(c in prop::collection::vec(-1.0f64..1.0, 6)) {
        let grid = PeriodicGrid::square(16).unwrap();
        let samples = grid.sample(|p| {
            c[0] + c[1] * p[0].cos() + c[2] * (p[1] - 0.3).sin() + c[3] * (p[0] + 2.0 * p[1]).cos()
                + c[4] * (3.0 * p[0]).sin() * p[1].cos() + c[5] * (p[0] - p[1]).cos().powi(2)
        });
        let table = fourier_coefficients(&samples, &grid, 4).unwrap();
        for (m, z) in table.modes() {
            let neg: Vec<i64> = m.iter().map(|x| -x).collect();
            prop_assert!((table.coeff(&neg) - z.conj()).norm() <= 1e-14);
        }
    }

    #[test]
    fn flow_keeps_unit_mass_and_positivity(eps in 0.0f64..0.2, t in 0.0f64..2.0) {
        let grid = PeriodicGrid::square(32).unwrap();
        let sd = evolve(&TorusExpFamily::new(eps), t, &grid, 12).unwrap();
        prop_assert!((sd.coeff(&[0, 0]).re - 1.0).abs() <= 1e-14);
        prop_assert!(density_on_grid(&sd, &grid).unwrap().iter().all(|&f| f > 0.0));
    }

    #[test]
    fn mixture_parameters_validated(eta in -1.0f64..2.0, r in -1.0f64..2.0, l in -10.0f64..50.0) {
        let ok = MixtureSpec::new(1.0, r, eta, l).is_ok();
        prop_assert_eq!(ok, eta > 0.0 && eta < 1.0 && r > 0.0 && l > 0.0);
    }
}

#[test]
fn simplex_roots_for_every_dimension() {
    for d in 2..=6 {
        let w = SimplexWaveSystem::build(d).unwrap();
        for r in w.roots() {
            let n: f64 = r.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() <= 1e-14);
        }
        for a in w.roots() {
            for b in w.roots() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!(
                    [-1.0, -0.5, 0.0, 0.5, 1.0].iter().any(|v| (dot - v).abs() <= 1e-14),
                    "d={d} dot={dot}"
                );
            }
        }
        for &(i, j, k) in w.triangles() {
            let (a, b, c) = (w.root(i, j).unwrap(), w.root(j, k).unwrap(), w.root(i, k).unwrap());
            assert!(a.iter().zip(b).zip(c).all(|((x, y), z)| (x + y - z).abs() <= 1e-14));
        }
    }
}
