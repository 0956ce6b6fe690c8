use super::*;
use crate::angular::{ChannelBasis, Symmetry};
use crate::hamiltonian::InteractionModel;
use crate::pulse::{EnvelopeShape, Pulse};
use crate::radial::{BasisParams, KnotLaw};

fn space(l_max: usize, n_breakpoints: usize, r_max: f64, e_cut: f64) -> SpectralSpace {
    SpectralSpace::build(
        BasisParams {
            r_max,
            order: 7,
            n_breakpoints,
            knot_law: KnotLaw::SqrtRamp { r_match: r_max / 4.0 },
        },
        l_max,
        1.0,
        e_cut,
        None,
    )
    .unwrap()
}

fn hamiltonian(sp: &SpectralSpace, model: InteractionModel, pulse: Pulse, l_max: usize, m_max: usize) -> AssembledHamiltonian {
    let ch = ChannelBasis::new(l_max, m_max, Symmetry::ReflectionEven).unwrap();
    AssembledHamiltonian::assemble(model, pulse, ch, sp).unwrap()
}

fn cfg(dt: f64) -> PropagatorConfig {
    PropagatorConfig {
        dt,
        ..PropagatorConfig::for_frequency(3.5)
    }
}

#[test]
fn config_validation() {
    let mut c = PropagatorConfig::for_frequency(3.5);
    assert!(c.validate().is_ok());
    assert!((c.dt - 2.0 * std::f64::consts::PI / 3.5 / 200.0).abs() < 1e-15);
    c.krylov_dim_max = 1;
    assert!(c.validate().is_err());
    c.krylov_dim_max = 201;
    assert!(c.validate().is_err());
    c.krylov_dim_max = 40;
    c.dt = 0.0;
    assert!(c.validate().is_err());
}

#[test]
fn field_free_ground_state_only_rotates() {
    let sp = space(2, 60, 40.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 0.0, 3.5, 2.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::FirstOrder, pulse, 2, 1);
    let e0 = sp.energies(0)[0];
    assert!((e0 + 0.5).abs() < 1e-6);
    for dt in [0.01, 0.3, 2.0] {
        let g = h.ground_state(0.0);
        let out = step(&h, &g, dt, &cfg(dt)).unwrap();
        let overlap = g.inner(&out);
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        let want = Complex64::from_polar(1.0, -e0 * dt);
        assert!((overlap - want).norm() < 1e-12, "{overlap} vs {want}");
        assert!((out.t - dt).abs() < 1e-15);
    }
}

#[test]
fn steps_preserve_norm() {
    let sp = space(4, 60, 40.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 5.0, 3.5, 2.0).unwrap();
    for model in InteractionModel::ALL {
        let h = hamiltonian(&sp, model, pulse, 4, 1);
        let mut p = Propagator::new(&h, cfg(pulse.period() / 100.0), None).unwrap();
        let mut psi = h.ground_state(0.0);
        for _ in 0..50 {
            let before = psi.norm_sq();
            p.step(&mut psi, pulse.period() / 100.0).unwrap();
            assert!((psi.norm_sq() - before).abs() < 1e-13, "{model}");
        }
    }
}

#[test]
fn local_error_is_third_order() {
    let sp = space(3, 40, 30.0, 20.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 2.0, 3.5, 2.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::FirstOrder, pulse, 3, 1);
    let tight = PropagatorConfig {
        krylov_tol: 1e-16,
        krylov_dim_max: 60,
        ..cfg(1.0)
    };
    // A generic state at a time where the field and its derivatives are all nonzero.
    let mut p = Propagator::new(&h, tight, None).unwrap();
    let mut psi = h.ground_state(0.0);
    let t_probe = 0.37 * pulse.duration;
    let n = 40;
    for _ in 0..n {
        p.step(&mut psi, t_probe / n as f64).unwrap();
    }
    let big = pulse.duration;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for k in 8..=12 {
        let dt = big / 2f64.powi(k);
        let mut one = psi.clone();
        p.step(&mut one, dt).unwrap();
        let mut two = psi.clone();
        p.step(&mut two, dt / 2.0).unwrap();
        p.step(&mut two, dt / 2.0).unwrap();
        let diff: f64 = one
            .raw()
            .iter()
            .zip(two.raw())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        xs.push(dt.ln());
        ys.push(diff.ln());
    }
    let m = xs.len() as f64;
    let (sx, sy) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - sx) * (y - sy)).sum::<f64>()
        / xs.iter().map(|x| (x - sx) * (x - sx)).sum::<f64>();
    assert!(slope >= 2.9, "observed order {slope}, log errors {ys:?}");
}

#[test]
fn zero_window_returns_initial_state() {
    let sp = space(1, 30, 30.0, 30.0);
    let mut pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 2.0).unwrap();
    pulse.t_end = pulse.t_start;
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 1, 0);
    let psi0 = h.ground_state(pulse.t_start);
    let trace = propagate(&h, None, psi0.clone(), &cfg(0.01), &ProbeSchedule::default()).unwrap();
    assert_eq!(trace.steps, 0);
    assert_eq!(trace.final_state.raw(), psi0.raw());
    assert_eq!(trace.final_state.t, psi0.t);
}

#[test]
fn dipole_never_populates_m_nonzero() {
    let sp = space(4, 50, 40.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 10.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 4, 1);
    let schedule = ProbeSchedule {
        stride: 25,
        probes: vec![Probe::MNonzeroPopulation, Probe::Norm, Probe::GroundPopulation],
    };
    let trace = propagate(&h, None, h.ground_state(0.0), &cfg(pulse.period() / 50.0), &schedule).unwrap();
    let m = trace.probe(Probe::MNonzeroPopulation).unwrap();
    assert!(m.len() > 10);
    assert!(m.iter().all(|&x| x == 0.0));
    assert_eq!(trace.times.len(), m.len());
    assert!(trace.probe(Probe::GroundPopulation).unwrap().last().unwrap() < &1.0);
    assert_eq!(*trace.times.last().unwrap(), pulse.t_end);
    assert_eq!(trace.steps, 500);

    let nd = hamiltonian(&sp, InteractionModel::FirstOrder, pulse, 4, 1);
    let trace = propagate(&nd, None, nd.ground_state(0.0), &cfg(pulse.period() / 50.0), &schedule).unwrap();
    assert!(*trace.probe(Probe::MNonzeroPopulation).unwrap().last().unwrap() > 0.0);
}

#[test]
fn absorbed_fraction_balances_norm() {
    let sp = space(3, 60, 40.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 3.0, 3.5, 10.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 3, 0);
    let c = PropagatorConfig {
        mask: Some(MaskSpec { r_on: 25.0, exponent: 0.125 }),
        ..cfg(pulse.period() / 40.0)
    };
    assert!(propagate(&h, None, h.ground_state(0.0), &c, &ProbeSchedule::default()).is_err());
    let trace = propagate(&h, Some(&sp), h.ground_state(0.0), &c, &ProbeSchedule::default()).unwrap();
    let norm = trace.final_state.norm_sq();
    assert!(norm < 1.0);
    assert!(trace.absorbed_fraction > 0.0);
    assert!((trace.absorbed_fraction - (1.0 - norm)).abs() < 1e-12);
}

#[test]
fn mask_at_box_edge_is_identity() {
    let sp = space(2, 40, 30.0, 30.0);
    let ch = ChannelBasis::new(2, 0, Symmetry::Full).unwrap();
    let mask = MaskOperator::new(MaskSpec { r_on: 30.0, exponent: 0.125 }, &sp, &ch).unwrap();
    assert!(mask.is_identity());
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 2.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 2, 0);
    let mut psi = h.zero_state(0.0);
    for (i, x) in psi.raw_mut().iter_mut().enumerate() {
        *x = (i as f64 * 0.37).sin();
    }
    let out = apply_mask(&psi, &mask);
    assert_eq!(out.raw(), psi.raw());
}

#[test]
fn mask_leaves_ground_state_alone() {
    let sp = space(1, 80, 100.0, 30.0);
    let ch = ChannelBasis::new(1, 0, Symmetry::Full).unwrap();
    let mask = MaskOperator::new(MaskSpec { r_on: 50.0, exponent: 0.125 }, &sp, &ch).unwrap();
    assert!(!mask.is_identity());
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 2.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 1, 0);
    let g = h.ground_state(0.0);
    let out = apply_mask(&g, &mask);
    assert!((out.norm_sq() - 1.0).abs() < 1e-12);
}

#[test]
fn outgoing_packet_loses_norm_monotonically() {
    let sp = space(0, 80, 60.0, 30.0);
    let ch = ChannelBasis::new(0, 0, Symmetry::Full).unwrap();
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 0.0, 3.5, 40.0).unwrap();
    let h = AssembledHamiltonian::assemble(InteractionModel::Dipole, pulse, ch, &sp).unwrap();
    // Gaussian packet at r = 15 with momentum +2 outward, expanded in the eigenstates.
    let basis = &sp.basis;
    let n = sp.n_retained();
    let packet = |r: f64| Complex64::from_polar((-(r - 15.0).powi(2) / 8.0).exp(), 2.0 * r);
    let mut psi = h.zero_state(0.0);
    let spec = &sp.spectra[0];
    for (i, x) in trapezoid_projection(basis, spec, n, packet).into_iter().enumerate() {
        psi.set(0, i, x);
    }
    let norm = psi.norm_sq().sqrt();
    crate::hamiltonian::scale_raw(n, Complex64::new(1.0 / norm, 0.0), psi.raw_mut());
    let c = PropagatorConfig {
        mask: Some(MaskSpec { r_on: 35.0, exponent: 0.125 }),
        ..cfg(0.2)
    };
    let mut p = Propagator::new(&h, c, Some(&sp)).unwrap();
    let mut last = psi.norm_sq();
    let mut total = 0.0;
    for _ in 0..100 {
        let rep = p.step(&mut psi, 0.2).unwrap();
        total += rep.absorbed;
        let now = psi.norm_sq();
        assert!(now <= last + 1e-15, "{now} > {last}");
        last = now;
    }
    assert!(total > 0.5, "absorbed {total}");
}

/// ⟨χ_i | f⟩ for the eigenfunctions χ_i by trapezoidal quadrature.
fn trapezoid_projection(
    basis: &crate::radial::RadialBasis,
    spec: &crate::radial::ChannelSpectrum,
    n: usize,
    f: impl Fn(f64) -> Complex64,
) -> Vec<Complex64> {
    let m = 6000;
    let h = basis.r_max() / m as f64;
    let rows = spec.vectors.nrows();
    (0..n)
        .map(|i| {
            let v = &spec.vectors.as_slice()[i * rows..(i + 1) * rows];
            (1..m)
                .map(|j| {
                    let r = j as f64 * h;
                    f(r) * basis.eval_expansion(v, r) * h
                })
                .sum()
        })
        .collect()
}

#[test]
fn forward_then_backward_restores_state() {
    let sp = space(3, 50, 40.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 2.0, 3.5, 2.0).unwrap();
    for model in [InteractionModel::FirstOrder, InteractionModel::PgEnvelope] {
        let h = hamiltonian(&sp, model, pulse, 3, 1);
        let mut p = Propagator::new(&h, cfg(0.01), None).unwrap();
        let psi0 = h.ground_state(0.5);
        let mut psi = psi0.clone();
        let dt = pulse.period() / 100.0;
        for _ in 0..50 {
            p.step(&mut psi, dt).unwrap();
        }
        for _ in 0..50 {
            p.step(&mut psi, -dt).unwrap();
        }
        let fidelity = psi0.inner(&psi).norm_sqr();
        assert!((1.0 - fidelity).abs() < 1e-8, "{model}: {fidelity}");
        assert!((psi.t - 0.5).abs() < 1e-12);
    }
}

#[test]
fn resumed_run_is_bitwise_identical() {
    let sp = space(2, 40, 30.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 2.0, 3.5, 3.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::PgFull, pulse, 2, 1);
    let c = cfg(pulse.period() / 40.0);
    let full = propagate(&h, None, h.ground_state(0.0), &c, &ProbeSchedule::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.ndts");
    let policy = CheckpointPolicy {
        path: path.clone(),
        every_steps: 50,
        pulse_hash: pulse_hash(&pulse),
        config_hash: 7,
    };
    let first = Propagator::new(&h, c, None)
        .unwrap()
        .with_checkpoints(policy)
        .run_steps(h.ground_state(0.0), &ProbeSchedule::default(), 50)
        .unwrap();
    assert_eq!(first.steps, 50);
    let (header, state) = read_checkpoint(&path).unwrap();
    assert_eq!(header.pulse_hash, pulse_hash(&pulse));
    let resumed = propagate(&h, None, state, &c, &ProbeSchedule::default()).unwrap();
    assert_eq!(resumed.steps, 70);
    assert_eq!(resumed.final_state.raw(), full.final_state.raw());
}

#[test]
fn off_grid_start_is_rejected() {
    let sp = space(1, 30, 30.0, 30.0);
    let pulse = Pulse::with_cycles(EnvelopeShape::SinSquared, 1.0, 3.5, 2.0).unwrap();
    let h = hamiltonian(&sp, InteractionModel::Dipole, pulse, 1, 0);
    let c = cfg(pulse.period() / 40.0);
    assert!(propagate(&h, None, h.ground_state(0.001), &c, &ProbeSchedule::default()).is_err());
}
