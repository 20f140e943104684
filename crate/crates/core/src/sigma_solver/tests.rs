use super::*;
use crate::hankel_tau::etilde_det;
use crate::special_fn::erf;

fn grid(lo: f64, hi: f64, points: usize) -> GridSpec {
    GridSpec::new(lo, hi, points)
}

#[test]
fn resolvent_one_gives_erf() {
    let sol = solve_sigma(SigmaKind::Resolvent, 1, 0.0, &grid(-2.0, 2.0, 81), 1e-10).unwrap();
    for s in [-1.5, 0.0, 0.3, 1.7] {
        let e = assemble_quantity(Quantity::GapProbability, &sol, s, None).unwrap();
        assert!((e - (1.0 + erf(s)) / 2.0).abs() < 1e-8, "s={s}: {e}");
    }
    assert!(sol.max_residual < 100.0 * sol.tol);
}

#[test]
fn soft_u_sigma_matches_transcendent() {
    let g = grid(-6.0, 4.0, 101);
    let sig = solve_sigma(SigmaKind::SoftEtilde, 0, 0.0, &g, 1e-10).unwrap();
    let tr = transcendent_route_pii(0.0, &g, 1e-10).unwrap();
    for i in 0..g.points {
        assert!((sig.grid.value[i] - tr.grid.value[i]).abs() < 1e-7, "{}", sig.grid.grid[i]);
        assert!(tr.grid.d1[i] <= 0.0);
    }
}

#[test]
fn soft_resolvent_approaches_airy_density() {
    let tr = transcendent_route_pii(0.0, &grid(4.0, 4.0, 1), 1e-12).unwrap();
    let ai = airy_derivs(4.0, 1, &PrecisionConfig::default()).unwrap();
    let rho = ai[1] * ai[1] - 4.0 * ai[0] * ai[0];
    assert!(((tr.grid.value[0] - rho) / rho).abs() < 1e-6);
}

#[test]
fn piv_transcendent_matches_sigma() {
    let g = grid(-4.0, 2.0, 61);
    let sig = solve_sigma(SigmaKind::Etilde, 1, 2.0, &g, 1e-10).unwrap();
    let tr = transcendent_route_piv(SigmaKind::Etilde, 1, 2.0, &g, 1e-10).unwrap();
    let worst = (0..g.points).map(|i| (sig.grid.value[i] - tr.grid.value[i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn piv_transcendent_at_a_zero_has_the_epsilon_relation() {
    // U' = -eps q'/2 - q^2/2 - t q for one sign eps.
    let g = grid(-3.0, 1.0, 21);
    let (sol, tr) = transcendent::transcendent_piv_traced(SigmaKind::Etilde, 2, 0.0, &g, 1e-10).unwrap();
    let defect = |eps: f64| {
        (0..g.points)
            .map(|i| {
                let t = g.start + 0.2 * i as f64;
                let (q, q1) = (tr.q[i], tr.q1[i]);
                (sol.grid.d1[i] + eps * q1 / 2.0 + q * q / 2.0 + t * q).abs()
            })
            .fold(0.0, f64::max)
    };
    assert!(defect(1.0).min(defect(-1.0)) < 1e-8, "{} {}", defect(1.0), defect(-1.0));
}

#[test]
fn anchors_follow_the_boundary_expansions() {
    let u = boundary_anchor(SigmaKind::SoftEtilde, 0, 0.0, 1e-10).unwrap();
    assert!(u.t0 <= -8.0);
    let s0 = u.t0;
    assert!((u.value - (s0 * s0 / 4.0 - 1.0 / (8.0 * s0))).abs() < 1e-4);
    let half = asymptotic_series(SigmaKind::SoftEtilde, 0, 0.5, Direction::MinusInfinity, 20).unwrap();
    assert!(half.tail_coefficients.iter().all(|c| *c == 0.0));
    let h = boundary_anchor(SigmaKind::SoftEtilde, 0, 0.5, 1e-10).unwrap();
    assert_eq!(h.value, h.t0 * h.t0 / 4.0);
    let v = boundary_anchor(SigmaKind::CharPoly, 1, 0.0, 1e-10).unwrap();
    assert_eq!([v.value, v.d1, v.d2], [0.0; 3]);
    assert!(boundary_anchor(SigmaKind::Etilde, 3, 1.0, 1e-10).unwrap().truncation_error < 1e-10);
    assert!(matches!(boundary_anchor(SigmaKind::Etilde, 3, 1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn pmax_ratio_matches_determinants() {
    let sol = solve_sigma(SigmaKind::Etilde, 1, 2.0, &grid(-1.0, 2.0, 31), 1e-10).unwrap();
    let got = assemble_quantity(Quantity::PmaxRatio, &sol, 1.0, Some(0.0)).unwrap();
    let cfg = PrecisionConfig::default();
    let want = (-1.0f64).exp() * etilde_det(1, 2.0, 1.0, &cfg).unwrap() / etilde_det(1, 2.0, 0.0, &cfg).unwrap();
    assert!((got - want).abs() < 1e-6, "{got} {want}");
    assert!(matches!(assemble_quantity(Quantity::PmaxRatio, &sol, 3.0, Some(0.0)), Err(Error::Domain(_))));
    assert!(matches!(assemble_quantity(Quantity::RhoRatio, &sol, 1.0, Some(0.0)), Err(Error::Domain(_))));
}

#[test]
fn soft_gap_left_tail_has_bounded_remainder() {
    let sol = solve_sigma(SigmaKind::SoftResolvent, 0, 0.0, &grid(-8.0, 2.0, 101), 1e-10).unwrap();
    let rem = |s: f64| {
        let e = assemble_quantity(Quantity::SoftGapProbability, &sol, s, None).unwrap();
        e.ln() - (s * s * s / 12.0 + (-s).ln() / 8.0)
    };
    let (r6, r8) = (rem(-6.0), rem(-8.0));
    assert!(r6.abs() < 1.0 && r8.abs() < 1.0, "{r6} {r8}");
    // With the logarithm entering as -(1/8) log(-s) the remainder settles on
    // zeta'(-1) + ln(2)/24.
    let chi = -0.165_421_143_365_337_1 + std::f64::consts::LN_2 / 24.0;
    for (s, r) in [(-6.0f64, r6), (-8.0f64, r8)] {
        assert!((r + (-s).ln() / 4.0 - chi).abs() < 1e-3, "{s}: {r}");
    }
    let tw = assemble_quantity(Quantity::SoftGapProbability, &sol, -2.0, None).unwrap();
    assert!((tw - 0.413224).abs() < 1e-5, "{tw}");
}

#[test]
fn hamiltonian_identities() {
    assert!(identity_prop23_residual(1, (-2.0, 2.0), 1e-10).unwrap() < 1e-5);
    assert!(identity_prop26_residual((-4.0, 2.0), 1e-10).unwrap() < 1e-5);
    assert_eq!(identity_prop26_residual((1.0, 1.0), 1e-10).unwrap(), 0.0);
}

#[test]
fn determinant_route_agrees_with_the_ode() {
    let g = grid(-2.0, 2.0, 9);
    for (kind, a) in [(SigmaKind::Resolvent, 0.0), (SigmaKind::Etilde, 1.0), (SigmaKind::CharPoly, 2.0)] {
        let det = determinant_route(kind, 2, a, &g, 1e-10).unwrap();
        let ode = solve_sigma(kind, 2, a, &g, 1e-10).unwrap();
        for i in 0..g.points {
            assert!((det.grid.value[i] - ode.grid.value[i]).abs() < 1e-7, "{kind} {i}");
            assert!((det.grid.integral[i] - ode.grid.integral[i]).abs() < 1e-7, "{kind} {i}");
        }
    }
}

#[test]
fn residual_is_zero_on_exact_solutions() {
    // u = s^2/4 at a = 1/2, and R = 0 trivially for any N.
    assert_eq!(sigma_residual(SigmaKind::SoftEtilde, 0, 0.5, -3.0, 2.25, -1.5, 0.5), 0.0);
    assert_eq!(sigma_residual(SigmaKind::Resolvent, 4, 0.0, 1.0, 0.0, 0.0, 0.0), 0.0);
}

#[test]
fn parameter_validation() {
    assert!(solve_sigma(SigmaKind::CharPoly, 2, 0.5, &grid(0.0, 1.0, 3), 1e-8).is_err());
    assert!(solve_sigma(SigmaKind::SoftEtilde, 0, 0.3, &grid(0.0, 1.0, 3), 1e-8).is_err());
    assert!(solve_sigma(SigmaKind::Etilde, 0, 1.0, &grid(0.0, 1.0, 3), 1e-8).is_err());
    assert!(asymptotic_series(SigmaKind::CharPoly, 1, 1.0, Direction::MinusInfinity, 4).is_err());
}

#[test]
fn quintic_rules_are_exact() {
    // f = t^5 on two nodes.
    let g = GridFunction {
        grid: vec![0.0, 1.0],
        value: vec![0.0, 1.0],
        d1: vec![0.0, 5.0],
        d2: vec![0.0, 20.0],
        integral: vec![],
    };
    let run = hermite_running_integral(&g);
    assert!((run[1] - 1.0 / 6.0).abs() < 1e-15);
    let ends = [0.0, 0.0, 0.0, 1.0, 5.0, 20.0];
    assert!((quintic_integral(&ends, 0.5) - 0.5f64.powi(6) / 6.0).abs() < 1e-15);
}

#[test]
fn boundary_coefficients_are_recovered_by_fitting() {
    let u = fit_soft_u_tail(2.0, (-30.0, -12.0), 15, 1e-36).unwrap();
    assert!((u.coefficient(-1.0).unwrap() / 1.875 - 1.0).abs() < 1e-8);
    assert!(u.coefficient(-2.0).unwrap().abs() < 1e-10);
    assert!((u.coefficient(-4.0).unwrap() / 1.640625 - 1.0).abs() < 1e-6);
    let v = fit_soft_v_tail(1.0, (12.0, 20.0), 8, 1e-22).unwrap();
    let want = [-1.0, -0.25, 5.0 / 32.0];
    for (got, want) in v.coefficients.iter().zip(want) {
        assert!((got / want - 1.0).abs() < 1e-5, "{got} {want}");
    }
    assert!(fit_soft_v_tail(1.0, (-1.0, 2.0), 8, 1e-22).is_err());
}
