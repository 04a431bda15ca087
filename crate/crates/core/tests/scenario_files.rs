use levelcross::model::{FileError, Scenario};
use levelcross::scenarios::{preset, PresetId};

#[test]
fn presets_survive_a_trip_through_disk() {
    let dir = std::env::temp_dir().join(format!("levelcross-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for id in PresetId::ALL {
        let path = dir.join(format!("{id}.json"));
        let s = preset(id);
        s.save(&path).unwrap();
        let back = Scenario::load(&path).unwrap();
        assert_eq!(back.to_json(), s.to_json());
        for a in [-0.25, 0.5, 1.75] {
            assert_eq!(
                levelcross::model::build_hamiltonian(&back, a).unwrap(),
                levelcross::model::build_hamiltonian(&s, a).unwrap()
            );
        }
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn missing_file_names_the_path() {
    let err = Scenario::load("/nonexistent/scenario.json").unwrap_err();
    assert!(matches!(err, FileError::Io { .. }));
    assert!(err.to_string().contains("/nonexistent/scenario.json"));
}

#[test]
fn malformed_files_are_rejected() {
    let good = preset(PresetId::Fig1).to_json();
    for bad in [
        good.replace("\"gamma_half\": 0.5", "\"gamma_half\": -0.5"),
        good.replace("1 - a/2", "1 - * a"),
        "{".to_string(),
    ] {
        assert!(Scenario::from_json(&bad).is_err(), "{bad}");
    }
}
