use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use orlicz_flow::config::parse_config;
use orlicz_flow::flow::{rhs, run, FlowSpec, SolverOptions};
use orlicz_flow::geometry::{
    barycenter_of_surface_measure, build_grid, norm, radii_matrix, sigma_n, volume, Resolution, SphereGrid,
    SupportField,
};
use orlicz_flow::io::{parse_atoms_csv, parse_nodal_csv, parse_weight_table};
use orlicz_flow::measure::{hemisphere_check, min_segment_orlicz_norm, Atom, SphereMeasure};
use orlicz_flow::orlicz::{
    make_potential, make_regularized, orlicz_norm_weighted, CaseParams, PotentialCase, Weight,
};
use orlicz_flow::runner::perturbed_sphere;
use proptest::prelude::*;

fn circle(nodes: usize) -> Arc<SphereGrid> {
    build_grid(1, Resolution::Circle { nodes }).unwrap()
}

fn sphere(nlat: usize) -> Arc<SphereGrid> {
    build_grid(2, Resolution::LatLon { nlat, nlon: 2 * nlat }).unwrap()
}

fn grid_for(dim: usize) -> Arc<SphereGrid> {
    if dim == 1 {
        circle(128)
    } else {
        sphere(16)
    }
}

fn body(dim: usize, seed: u64, amplitude: f64) -> SupportField {
    perturbed_sphere(&grid_for(dim), 1.0, amplitude, 4, false, seed).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_scales_with_power_of_dimension(dim in 1usize..=2, seed in any::<u64>(), c in 0.1f64..10.0) {
        let h = body(dim, seed, 0.1);
        let lhs = sigma_n(&h.scaled(c));
        let rhs = sigma_n(&h).scaled(c.powi(dim as i32));
        // roundoff in each principal radius is amplified by the inverse square
        // of the smallest stencil spacing (next to the poles on S²)
        let (dt, dp) = h.grid().spacing();
        let finest = if dim == 1 { dt } else { dt.min((dt / 2.0).sin() * dp) };
        let tol = 64.0 * f64::EPSILON * (c * h.max()).powi(dim as i32) / (finest * finest);
        prop_assert!(max_abs_diff(lhs.values(), rhs.values()) <= tol);
    }

    #[test]
    fn sigma_ignores_translations(dim in 1usize..=2, seed in any::<u64>(), x in prop::array::uniform3(-0.3f64..0.3)) {
        let h = body(dim, seed, 0.1);
        let mut v = x;
        if dim == 1 {
            v[2] = 0.0;
        }
        let moved = SupportField::from_fn(h.grid(), |u| u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).unwrap();
        let shifted = SupportField::new(Arc::clone(h.grid()), h.values().iter().zip(moved.values()).map(|(a, b)| a + b).collect()).unwrap();
        // stencil error on the linear summand, relative to |v|
        let (dt, _) = h.grid().spacing();
        let tol = 10.0 * dt.powi(4) * norm(&v) + 1e-12;
        prop_assert!(max_abs_diff(sigma_n(&shifted).values(), sigma_n(&h).values()) <= tol);
    }

    #[test]
    fn surface_measure_has_zero_barycenter(dim in 1usize..=2, seed in any::<u64>()) {
        let h = body(dim, seed, 0.1);
        let b = barycenter_of_surface_measure(&h);
        // fourth-order stencil
        let (dt, _) = h.grid().spacing();
        prop_assert!(norm(&b) <= 0.1 * dt.powi(4) * h.max() + 1e-13, "{b:?}");
    }

    #[test]
    fn radii_of_round_spheres(dim in 1usize..=2, r in 0.1f64..10.0) {
        let h = SupportField::constant(&grid_for(dim), r);
        let rad = radii_matrix(&h);
        for i in 0..h.len() {
            for e in rad.eigenvalues(i) {
                prop_assert!((e - r).abs() <= 1e-12 * r);
            }
        }
        let exact = h.grid().unit_ball_volume() * r.powi(dim as i32 + 1);
        prop_assert!((volume(&h).unwrap() - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn orlicz_norm_is_homogeneous_and_saturates(
        values in prop::collection::vec(0.0f64..5.0, 1..40),
        masses in prop::collection::vec(0.01f64..2.0, 40),
        q in 0.5f64..4.0,
        c in prop::sample::select(vec![0.5, 2.0, 10.0]),
    ) {
        prop_assume!(values.iter().any(|v| *v > 1e-3));
        let masses = &masses[..values.len()];
        let phi = move |t: f64| t.powf(q);
        let n1 = orlicz_norm_weighted(&values, masses, &phi).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        let n2 = orlicz_norm_weighted(&scaled, masses, &phi).unwrap();
        prop_assert!((n2 - c * n1).abs() <= 1e-12 * c * n1);
        let total: f64 = masses.iter().sum();
        let avg: f64 = values.iter().zip(masses).map(|(v, m)| m * phi(v / n1)).sum::<f64>() / total;
        prop_assert!((avg - phi(1.0)).abs() <= 1e-10);
    }

    #[test]
    fn orlicz_norm_is_monotone(
        pairs in prop::collection::vec((0.0f64..5.0, 0.0f64..1.0), 1..40),
        masses in prop::collection::vec(0.01f64..2.0, 40),
        p in 1.5f64..5.0,
    ) {
        let lo: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
        let hi: Vec<f64> = pairs.iter().map(|(a, d)| a + d).collect();
        let masses = &masses[..lo.len()];
        let w = Weight::power_law(p);
        let pot = make_potential(&w, PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        let a = orlicz_norm_weighted(&lo, masses, &pot).unwrap();
        let b = orlicz_norm_weighted(&hi, masses, &pot).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn mollification_keeps_mass(
        atoms in prop::collection::vec((0.0f64..2.0 * PI, 0.05f64..3.0), 1..8),
        bandwidth in 0.2f64..0.7,
    ) {
        let g = circle(256);
        let atoms: Vec<Atom> = atoms.iter().map(|(t, m)| Atom { direction: [t.cos(), t.sin(), 0.0], mass: *m }).collect();
        let mu = SphereMeasure::from_atoms(&g, atoms, false).unwrap();
        let smooth = mu.mollify(bandwidth).unwrap();
        prop_assert!((smooth.total() - mu.total()).abs() <= 1e-10 * mu.total());
    }

    #[test]
    fn hemisphere_test_is_rotation_equivariant(
        angles in prop::collection::vec(0.0f64..2.0 * PI, 3..8),
        rot in 0.0f64..2.0 * PI,
    ) {
        let g = circle(512);
        let make = |shift: f64| {
            let atoms = angles.iter().map(|t| Atom { direction: [(t + shift).cos(), (t + shift).sin(), 0.0], mass: 1.0 }).collect();
            SphereMeasure::from_atoms(&g, atoms, false).unwrap()
        };
        let a = hemisphere_check(&make(0.0), false, 1e-6).min_plus;
        let b = hemisphere_check(&make(rot), false, 1e-6).min_plus;
        prop_assert!((a - b).abs() <= 1e-6 * angles.len() as f64, "{a} vs {b}");
    }

    #[test]
    fn segment_norm_ignores_measure_scale(c in 0.01f64..100.0, p in 2.0f64..4.0) {
        let g = circle(128);
        let atoms: Vec<Atom> = [0.3f64, 2.0, 4.0].iter().map(|t| Atom { direction: [t.cos(), t.sin(), 0.0], mass: 1.0 + t }).collect();
        let mu = SphereMeasure::from_atoms(&g, atoms, false).unwrap();
        let pot = make_potential(&Weight::power_law(p), PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        let a = min_segment_orlicz_norm(&mu, &pot, false).unwrap().value;
        let b = min_segment_orlicz_norm(&mu.scaled(c).unwrap(), &pot, false).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn regularized_potential_dominates(p in prop::sample::select(vec![0.5, 2.0, 3.0]), eps in 0.01f64..0.25) {
        let w = Weight::power_law(p);
        let rw = make_regularized(&w, 1, eps).unwrap();
        let base = rw.base_potential();
        for i in 0..200 {
            let s = 1e-6 * 1e12f64.powf(i as f64 / 199.0);
            prop_assert!(rw.potential(s) >= base.value(s) - 1e-12 * base.value(s).abs());
        }
    }

    #[test]
    fn closed_form_potential_matches_quadrature(p in 0.2f64..5.0, s in 0.01f64..50.0) {
        let pot = make_potential(&Weight::power_law(p), PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        let q = pot.value_by_quadrature(s).unwrap();
        prop_assert!((q - pot.value(s)).abs() <= 1e-10 * pot.value(s).abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parsers_never_panic(text in ".{0,200}", dim in 1usize..=2, len in 0usize..8) {
        let _ = parse_config(&text, Path::new("/nonexistent"), None);
        let _ = parse_atoms_csv(&text, dim);
        let _ = parse_nodal_csv(&text, len, "h");
        if let Ok(t) = parse_weight_table(&text) {
            let _ = Weight::from_table(&t);
        }
    }

    #[test]
    fn csv_like_inputs_never_panic(rows in prop::collection::vec(prop::collection::vec("-?[0-9]{0,3}(\\.[0-9]{0,3})?(e-?[0-9])?|nan|inf|x", 0..5), 0..6)) {
        let text: String = rows.iter().map(|r| r.join(",") + "\n").collect();
        if let Ok(v) = parse_nodal_csv(&text, rows.len(), "h") {
            prop_assert!(v.iter().all(|x| x.is_finite()));
        }
        if let Ok(a) = parse_atoms_csv(&text, 1) {
            prop_assert!(a.iter().all(|a| a.mass > 0.0));
        }
    }

    #[test]
    fn generated_configs_round_trip(
        nodes in 8usize..2048,
        p in 0.1f64..8.0,
        kind in prop::sample::select(vec!["normalized", "unnormalized"]),
        dt in 1e-5f64..1e-1,
        seed in 0u64..1000,
        amp in 0.0f64..0.1,
    ) {
        let text = format!(
            "mode = \"flow\"\nseed = {seed}\n[grid]\nnodes = {nodes}\n[body]\nshape = \"perturbed-sphere\"\namplitude = {amp}\n[weight]\np = {p}\n[flow]\nkind = \"{kind}\"\n[solver]\ndt_max = {dt}\n"
        );
        let cfg = parse_config(&text, Path::new("/tmp"), None).unwrap();
        let again = parse_config(&cfg.to_toml(), Path::new("/tmp"), None).unwrap();
        prop_assert_eq!(cfg, again);
    }
}

fn short_opts(t_max: f64) -> SolverOptions {
    SolverOptions {
        t_max,
        ..SolverOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn normalized_flow_keeps_energy_and_grows_volume(seed in any::<u64>(), p in prop::sample::select(vec![0.5, 2.0, 4.0])) {
        let g = circle(64);
        let h0 = perturbed_sphere(&g, 1.2, 0.05, 4, true, seed).unwrap();
        let pot = make_potential(&Weight::power_law(p), PotentialCase::Origin, 1, CaseParams::default()).unwrap();
        let spec = FlowSpec::normalized(SupportField::constant(&g, 1.0), pot, h0).unwrap();
        let out = run(&spec, &short_opts(0.2)).unwrap();
        prop_assert_eq!(out.checks.monotone_violations, 0);
        prop_assert!(out.checks.energy_drift.unwrap() <= 1e-6);
        prop_assert!(out.checks.even_defect.unwrap() <= 1e-8);
    }

    #[test]
    fn unnormalized_flow_raises_lyapunov(seed in any::<u64>(), p in prop::sample::select(vec![3.0, 4.0, 6.0])) {
        let g = circle(64);
        let h0 = perturbed_sphere(&g, 1.0, 0.05, 5, false, seed).unwrap();
        let spec = FlowSpec::unnormalized(SupportField::constant(&g, 1.0), Weight::power_law(p), None, h0).unwrap();
        let out = run(&spec, &short_opts(0.2)).unwrap();
        prop_assert_eq!(out.checks.monotone_quantity, Some("V-E"));
        prop_assert_eq!(out.checks.monotone_violations, 0);
    }

    #[test]
    fn christoffel_flow_only_grows(seed in any::<u64>(), p in 3.5f64..6.0) {
        let g = circle(64);
        let h0 = perturbed_sphere(&g, 0.5, 0.02, 4, false, seed).unwrap();
        let spec = FlowSpec::christoffel(SupportField::constant(&g, 1.0), p, 1, h0).unwrap();
        let out = run(&spec, &short_opts(0.2)).unwrap();
        prop_assert!(out.checks.min_increment.unwrap() >= 0.0);
    }

    #[test]
    fn stationary_spheres_have_zero_speed(f in 0.2f64..5.0, p in 2.5f64..6.0, dim in 1usize..=2) {
        // f r^{1-p} r^n = 1
        let r = f.powf(1.0 / (p - 1.0 - dim as f64));
        let g = grid_for(dim);
        let spec = FlowSpec::unnormalized(SupportField::constant(&g, f), Weight::power_law(p), None, SupportField::constant(&g, r));
        prop_assume!(spec.is_ok());
        let speed = rhs(&SupportField::constant(&g, r), &spec.unwrap()).unwrap();
        prop_assert!(speed.values().iter().all(|v| v.abs() <= 1e-10 * r));
    }
}
