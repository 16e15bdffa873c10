use std::f64::consts::PI;
use std::path::PathBuf;

use fermi_bouncer::config::Pipeline;
use fermi_bouncer::{load_config, parse_config};
use proptest::prelude::*;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_in_window_config_resolves_to_defaults() {
    let c = load_config(&shipped("in_window.toml"), &[]).unwrap();
    let p = c.scaled_params().unwrap();
    assert_eq!((p.v0, p.kappa, p.lambda, p.kbar), (1.0, 1.0, 1.7, 1.0));
    assert_eq!(c.schedule.t_end, 500.0);
    assert_eq!(c.initial.wavepacket.delta_p, 0.5);
    assert!((c.initial.wavepacket.center_p - 2.0 * PI * PI).abs() < 1e-12);
    assert_eq!((c.grid.z_min, c.grid.z_max, c.grid.n_points), (-20.0, 1200.0, 1 << 15));
    assert_eq!(c.dynamics.quantum.step, 2e-3);
    assert!(c.dynamics.quantum.auto_step);
    assert!(!c.dynamics.quantum.absorber);
    assert_eq!(c.pipeline, Pipeline::Both);
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(shipped("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            load_config(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
    let outside = load_config(&shipped("outside_window.toml"), &[]).unwrap();
    assert_eq!(outside.scaled_params().unwrap().lambda, 2.4);
    assert!(outside.dynamics.quantum.absorber);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn resolved_configs_round_trip(
        lambda in 0.0f64..5.0,
        kappa in 0.01f64..100.0,
        n in 1usize..100_000,
        t_end in 1.0f64..2000.0,
        snaps in proptest::collection::btree_set(1u32..1000, 0..5),
        // TOML integers are signed 64-bit.
        seed in proptest::option::of(0u64..=i64::MAX as u64),
        classical in any::<bool>(),
    ) {
        let snapshots: Vec<f64> = snaps.iter().map(|&s| s as f64 * t_end / 1000.0).collect();
        let mut set = vec![
            format!("physics.scaled.lambda={lambda:?}"),
            format!("physics.scaled.kappa={kappa:?}"),
            format!("initial.ensemble.n={n}"),
            format!("schedule.t_end={t_end:?}"),
            format!("schedule.snapshots={snapshots:?}"),
        ];
        let seed = if classical { Some(seed.unwrap_or(1)) } else { seed };
        if let Some(s) = seed {
            set.push(format!("seed={s}"));
        }
        if classical {
            set.push("pipeline=\"classical\"".into());
        }
        let base = "[physics.scaled]\nv0 = 1.0\nkappa = 1.0\nlambda = 1.0\nkbar = 1.0\n";
        let c = parse_config(base, &set).unwrap();
        let text = c.to_toml().unwrap();
        let again = parse_config(&text, &[]).unwrap();
        prop_assert_eq!(&c, &again);
        prop_assert_eq!(text, again.to_toml().unwrap());
    }
}
