use std::f64::consts::PI;

use atom_excitation::asymptotics::{deficit_integral, optimize_deficit};
use atom_excitation::dynamics::{default_grid, integrate, Field};
use atom_excitation::fock_single::{cauchy_schwarz_bound, pe_fock1_at, pe_trace_fock1};
use atom_excitation::optimizer::{optimize_duration, peak_excitation, ShapeFamily};
use atom_excitation::pulses::{LossModel, PulseShape};
use atom_excitation::quadrature;
use proptest::prelude::*;

fn shape_strategy() -> impl Strategy<Value = PulseShape> {
    prop_oneof![
        (0.2f64..4.0).prop_map(|t| PulseShape::square(t).unwrap()),
        (0.2f64..4.0).prop_map(|t| PulseShape::gaussian(t).unwrap()),
        (0.2f64..4.0).prop_map(|t| PulseShape::decaying_exp(t).unwrap()),
        (0.2f64..4.0, -1.0f64..1.0).prop_map(|(t, a)| PulseShape::rising_exp(t, a).unwrap()),
        (0.1f64..3.0, 0.2f64..4.0).prop_map(|(g, k)| PulseShape::atom_cavity_decay(g, k).unwrap()),
    ]
}

fn loss_strategy() -> impl Strategy<Value = LossModel> {
    (0.1f64..2.0, 0.0f64..2.0).prop_map(|(p, b)| LossModel::new(p, b).unwrap())
}

/// Double-integral form `2Γ_P ∫ e^{−Γ(t−t')} f(t') ∫ e^{−Γ(t'−t'')/2} f(t'') dt'' dt'`,
/// nested adaptive quadrature over each smooth piece.
fn double_integral_pe(shape: &PulseShape, loss: &LossModel, t: f64) -> f64 {
    let gamma = loss.gamma_total();
    let (a, _) = shape.integration_window();
    if t <= a {
        return 0.0;
    }
    let mut cuts: Vec<f64> = shape.breakpoints().into_iter().filter(|&b| b > a && b < t).collect();
    cuts.insert(0, a);
    cuts.push(t);
    let piecewise = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> f64 {
        let mut pts = vec![lo];
        pts.extend(cuts.iter().copied().filter(|&c| c > lo && c < hi));
        pts.push(hi);
        pts.windows(2).map(|w| quadrature::integrate(f, w[0], w[1], 1e-13)).sum()
    };
    let inner = |tp: f64| {
        if tp <= a {
            return 0.0;
        }
        piecewise(&|s| (-0.5 * gamma * (tp - s)).exp() * shape.amplitude(s), a, tp)
    };
    2.0 * loss.gamma_p() * piecewise(&|tp| (-gamma * (t - tp)).exp() * shape.amplitude(tp) * inner(tp), a, t)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, .. ProptestConfig::default() })]

    #[test]
    fn single_photon_excitation_below_cauchy_schwarz(shape in shape_strategy(), loss in loss_strategy(), u in 0.0f64..1.0) {
        let (a, b) = shape.integration_window();
        let grid: Vec<f64> = (1..=40).map(|i| a + (b - a + 3.0) * i as f64 / 40.0).collect();
        let res = pe_trace_fock1(&shape, &loss, &grid).unwrap();
        for (t, pe) in grid.iter().zip(&res.pe) {
            prop_assert!(*pe <= cauchy_schwarz_bound(&shape, &loss, *t) + 1e-9);
        }
        let t = a + u * (b - a);
        prop_assert!(pe_fock1_at(&shape, &loss, t) <= cauchy_schwarz_bound(&shape, &loss, t) + 1e-9);
    }

    #[test]
    fn single_photon_loss_scaling(shape in shape_strategy(), loss in loss_strategy(), u in 0.0f64..1.2) {
        // at fixed t, P_e depends on Γ_B only through Γ = Γ_P + Γ_B and the Γ_P prefactor
        let (a, b) = shape.integration_window();
        let t = a + u * (b - a);
        let reference = LossModel::new(loss.gamma_total(), 0.0).unwrap();
        let scaled = pe_fock1_at(&shape, &reference, t);
        let direct = pe_fock1_at(&shape, &loss, t);
        prop_assert!((direct - loss.coupling_ratio() * scaled).abs() < 1e-12);
    }

    #[test]
    fn coherent_and_fock_traces_stay_in_unit_interval(
        shape in shape_strategy(),
        loss in loss_strategy(),
        nbar in 0.1f64..20.0,
        photons in 1u32..8,
    ) {
        for field in [Field::Coherent { nbar }, Field::Fock { photons }] {
            let grid = default_grid(&shape, &loss, field, 200);
            let tr = integrate(&shape, &loss, field, &grid).unwrap();
            for pe in &tr.pe {
                prop_assert!((-1e-8..=1.0 + 1e-8).contains(pe), "{field:?}: {pe}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn double_integral_form_matches_squared_amplitude(shape in shape_strategy(), loss in loss_strategy(), u in 0.05f64..1.0) {
        let (a, b) = shape.integration_window();
        let b = b.min(a + 30.0);
        let t = a + u * (b - a);
        let single = pe_fock1_at(&shape, &loss, t);
        let double = double_integral_pe(&shape, &loss, t);
        prop_assert!((single - double).abs() < 1e-8, "{single} vs {double}");
    }
}

#[test]
fn hierarchy_approaches_coherent_as_photon_number_grows() {
    let loss = LossModel::lossless();
    let mut diffs = Vec::new();
    for n in [10u32, 20, 40, 80] {
        let fock = optimize_duration(ShapeFamily::Square, &loss, Field::Fock { photons: n }).unwrap().pe_max;
        let coh = optimize_duration(ShapeFamily::Square, &loss, Field::Coherent { nbar: n as f64 }).unwrap().pe_max;
        diffs.push(fock - coh);
        // the gap is the zero-order π²/16N gain
        let predicted = PI * PI / (16.0 * n as f64);
        assert!(((fock - coh) - predicted).abs() < 0.25 * predicted, "N={n}: {} vs {predicted}", fock - coh);
    }
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
}

#[test]
fn coherent_single_photon_level_does_not_follow_loss_scaling() {
    let lossless = LossModel::lossless();
    let mut worst = 0.0f64;
    for f in ShapeFamily::ALL {
        let p0 = optimize_duration(f, &lossless, Field::Coherent { nbar: 1.0 }).unwrap().pe_max;
        for ratio in [0.5, 0.75] {
            let loss = LossModel::from_coupling_ratio(ratio).unwrap();
            let p = optimize_duration(f, &loss, Field::Coherent { nbar: 1.0 }).unwrap().pe_max;
            worst = worst.max((p / p0 - ratio).abs());
        }
    }
    assert!(worst > 1e-2, "max deviation from Γ_P/Γ scaling only {worst}");
}

#[test]
fn reevaluating_at_optimum_reproduces_peak() {
    let loss = LossModel::new(1.0, 0.3).unwrap();
    for f in ShapeFamily::ALL {
        for field in [Field::Fock1, Field::Coherent { nbar: 2.0 }, Field::Fock { photons: 3 }] {
            let r = optimize_duration(f, &loss, field).unwrap();
            let again = peak_excitation(&f.build(r.param("T").unwrap()).unwrap(), &loss, field).unwrap();
            assert!((again.pe_max - r.pe_max).abs() < 1e-9, "{f} {field:?}");
        }
    }
}

#[test]
fn deficit_is_linear_in_total_rate() {
    for f in ShapeFamily::ALL {
        let shape = f.build(0.05).unwrap();
        let d0 = deficit_integral(&shape, 200.0, &LossModel::lossless()).unwrap();
        for gb in [0.25, 1.0, 3.0] {
            let d = deficit_integral(&shape, 200.0, &LossModel::new(1.0, gb).unwrap()).unwrap();
            assert!((d - d0 * (1.0 + gb)).abs() < 1e-12 * d, "{f}: {d} vs {}", d0 * (1.0 + gb));
        }
    }
}

#[test]
fn optimal_duration_independent_of_bath_loss() {
    for f in ShapeFamily::ALL {
        let a0 = optimize_deficit(f, 1.0, &LossModel::lossless()).unwrap().alpha;
        for gb in [0.5, 2.0] {
            let a = optimize_deficit(f, 1.0, &LossModel::new(1.0, gb).unwrap()).unwrap().alpha;
            assert!(((a - a0) / a0).abs() < 1e-6, "{f}: α {a} vs {a0}");
        }
    }
}

#[test]
fn first_order_prediction_tracks_dynamics() {
    let loss = LossModel::lossless();
    for f in ShapeFamily::ALL {
        let c = optimize_deficit(f, 1.0, &loss).unwrap();
        let gaps: Vec<f64> = [30.0, 100.0, 300.0]
            .iter()
            .map(|&nbar| {
                let predicted = 1.0 - c.coherent_pe(nbar, &loss);
                let ode = 1.0 - optimize_duration(f, &loss, Field::Coherent { nbar }).unwrap().pe_max;
                (ode - predicted).abs() / predicted
            })
            .collect();
        assert!(gaps[1] <= 0.15, "{f}: relative gap {} at n̄=100", gaps[1]);
        assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{f}: {gaps:?}");
    }
}
