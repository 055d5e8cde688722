use proptest::prelude::*;

use relangle::cloud_io::{read_cloud_auto, write_feature_file, CloudData, FeatureCombination};
use relangle::{Label, LabelField, NormalField, PointCloud, RelativeAngleField};

fn six(v: f64) -> f64 {
    format!("{v:.6}").parse().unwrap()
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-3);
    [v[0] / l, v[1] / l, v[2] / l]
}

prop_compose! {
    fn arb_row()(
        p in prop::array::uniform3(-1000.0f64..1000.0),
        n in prop::array::uniform3(-1.0f64..1.0),
        a in 0.0f64..std::f64::consts::FRAC_PI_2,
        damaged in any::<bool>(),
    ) -> ([f64; 3], [f64; 3], f64, bool) {
        (p, unit(n), a, damaged)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feature_files_round_trip(rows in prop::collection::vec(arb_row(), 1..60), combo in 1u8..=6) {
        let combination = FeatureCombination::from_id(combo).unwrap();
        let cloud = PointCloud::new(rows.iter().map(|r| r.0).collect()).unwrap();
        let normals = NormalField::new(rows.iter().map(|r| r.1).collect(), 30);
        let angles = RelativeAngleField::new(rows.iter().map(|r| r.2).collect(), [0.0, 0.0, 1.0]);
        let labels = LabelField::new(
            rows.iter().map(|r| if r.3 { Label::Damaged } else { Label::Undamaged }).collect(),
        );

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.xyz");
        let bytes = write_feature_file(&path, &cloud, &labels, combination, Some(&normals), Some(&angles)).unwrap();
        prop_assert_eq!(bytes, std::fs::metadata(&path).unwrap().len());

        let back: CloudData = read_cloud_auto(&path).unwrap();
        prop_assert_eq!(back.labels.as_ref(), Some(&labels));
        for (got, want) in back.cloud.points().iter().zip(cloud.points()) {
            for c in 0..3 {
                prop_assert_eq!(got[c], six(want[c]));
            }
        }
        prop_assert_eq!(back.normals.is_some(), combination.uses_normal());
        prop_assert_eq!(back.angles.is_some(), combination.uses_angle());
        if let Some(n) = &back.normals {
            prop_assert_eq!(n.neighborhood(), 30);
            for (got, want) in n.normals().iter().zip(normals.normals()) {
                for c in 0..3 {
                    prop_assert_eq!(got[c], six(want[c]));
                }
            }
        }
        if let Some(a) = &back.angles {
            for (got, want) in a.angles().iter().zip(angles.angles()) {
                prop_assert_eq!(*got, six(*want));
            }
        }
    }
}

#[test]
fn single_point_combination_one_has_one_data_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.xyz");
    let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]]).unwrap();
    let labels = LabelField::uniform(Label::Undamaged, 1);
    write_feature_file(
        &path,
        &cloud,
        &labels,
        FeatureCombination::Position,
        None,
        None,
    )
    .unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let data_lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_lines, ["1.000000 2.000000 3.000000 0.000000"]);
}

#[test]
fn missing_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0]]).unwrap();
    let labels = LabelField::uniform(Label::Damaged, 1);
    let path = dir.path().join("x.xyz");
    assert!(write_feature_file(
        &path,
        &cloud,
        &labels,
        FeatureCombination::PositionAngle,
        None,
        None
    )
    .is_err());
    assert!(!path.exists());
}
