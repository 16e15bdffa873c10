use std::f64::consts::PI;

use fermi_core::classical::{ClassicalState, HardWall, SmoothConfig, SmoothEvent, SmoothIntegrator};
use fermi_core::ScaledParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAMBDA: f64 = 1.7;
const KAPPA: f64 = 1e3;

fn tight() -> SmoothConfig {
    SmoothConfig { force_tol: 1e-8, ..SmoothConfig::default() }
}

/// A steep wall whose turning point for relative impact energy `energy` sits
/// `gap` above the mirror.
fn steep_wall(energy: f64, gap: f64, config: SmoothConfig) -> SmoothIntegrator {
    SmoothIntegrator::new(ScaledParams::new(energy * (KAPPA * gap).exp(), KAPPA, LAMBDA, 1.0).unwrap(), config)
}

fn first_bounce(integ: &SmoothIntegrator, s0: &ClassicalState, t_end: f64) -> Option<f64> {
    let mut first = None;
    integ
        .advance(s0, t_end, |e| {
            if let SmoothEvent::Bounce { t } = e {
                first.get_or_insert(t);
            }
        })
        .unwrap();
    first
}

fn random_state(rng: &mut ChaCha8Rng) -> ClassicalState {
    let t0 = rng.random_range(0.0..2.0 * PI);
    ClassicalState::new(LAMBDA * t0.sin() + rng.random_range(0.5..2.5), rng.random_range(-3.0..3.0), t0)
}

#[test]
fn single_bounce_matches_the_map() {
    let wall = HardWall::new(LAMBDA);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let s0 = random_state(&mut rng);
        let b = wall.bounce(&s0).unwrap();
        let u = b.p_in - LAMBDA * b.after.t.cos();
        let integ = steep_wall(0.5 * u * u, 1e-3, tight());
        let t = first_bounce(&integ, &s0, b.after.t + 1.0).expect("no bounce");
        assert!((t - b.after.t).abs() < 1e-3, "{s0:?}: {t} vs {}", b.after.t);
        // Momentum after the contact, compared a little later in free flight.
        let later = b.after.t + 0.2;
        let sm = integ.advance(&s0, later, |_| {}).unwrap();
        let hw = b.after.free_flight(later - b.after.t);
        assert!((sm.p - hw.p).abs() < 1e-2, "{s0:?}: p {} vs {}", sm.p, hw.p);
    }
}

#[test]
fn receding_mirror_still_counts_as_a_bounce() {
    // Catching up with a mirror that moves down at nearly λ: p stays negative.
    let t0 = PI - 0.05;
    let s0 = ClassicalState::new(LAMBDA * t0.sin() + 0.01, -2.5, t0);
    let wall = HardWall::new(LAMBDA);
    let b = wall.bounce(&s0).unwrap();
    assert!(b.after.p < 0.0, "{b:?}");
    let u = b.p_in - LAMBDA * b.after.t.cos();
    let integ = steep_wall(0.5 * u * u, 1e-3, tight());
    let t = first_bounce(&integ, &s0, b.after.t + 0.5).expect("bounce missed");
    assert!((t - b.after.t).abs() < 1e-3, "{t} vs {}", b.after.t);
}

#[test]
fn tighter_tolerance_converges_on_the_reflection() {
    let wall = HardWall::new(LAMBDA);
    let s0 = ClassicalState::new(1.0, 0.5, 0.3);
    let b = wall.bounce(&s0).unwrap();
    let u = b.p_in - LAMBDA * b.after.t.cos();
    let later = b.after.t + 0.5;
    let hw = b.after.free_flight(later - b.after.t);
    let err = |tol: f64| {
        // Effective hard-wall position of an exponential wall at V0 = 2u².
        let integ = SmoothIntegrator::new(
            ScaledParams::new(2.0 * u * u, KAPPA, LAMBDA, 1.0).unwrap(),
            SmoothConfig { force_tol: tol, ..SmoothConfig::default() },
        );
        (integ.advance(&s0, later, |_| {}).unwrap().p - hw.p).abs()
    };
    let (coarse, mid, fine) = (err(1e-4), err(1e-6), err(1e-8));
    assert!(coarse > mid && mid > fine, "{coarse} {mid} {fine}");
    assert!(fine < 1e-4, "{fine}");
}
