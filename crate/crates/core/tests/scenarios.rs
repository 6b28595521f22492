use std::path::{Path, PathBuf};

use avexplain::world::{load_scenario, sample_initial_states, Scenario};

fn load(name: &str) -> Scenario {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(path).unwrap()
}

#[test]
fn bundled_scenarios_have_three_vehicles_and_one_junction() {
    for name in ["s1.toml", "s2.toml"] {
        let sc = load(name);
        assert_eq!(sc.vehicles.len(), 3, "{name}");
        assert_eq!(sc.non_ego().count(), 2, "{name}");
        assert_eq!(sc.layout.junctions().len(), 1, "{name}");
        sc.validate().unwrap();
    }
}

#[test]
fn sampled_initial_speeds_stay_in_range() {
    for name in ["s1.toml", "s2.toml"] {
        let sc = load(name);
        for seed in 0..200 {
            let states = sample_initial_states(&sc, seed);
            assert_eq!(states.vehicles.len(), sc.vehicles.len());
            for spec in &sc.vehicles {
                let v = states.vehicles[&spec.id].speed;
                let (lo, hi) = spec.speed_range_mps;
                assert!((lo..=hi).contains(&v), "{name} seed {seed}: vehicle {} at {v}", spec.id);
            }
        }
    }
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let sc = load("s1.toml");
    assert_eq!(sample_initial_states(&sc, 9), sample_initial_states(&sc, 9));
    assert_ne!(sample_initial_states(&sc, 9), sample_initial_states(&sc, 10));
}
