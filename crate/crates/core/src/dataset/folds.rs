use super::manifest::Manifest;
use crate::error::{Error, Result};

/// One leave-one-patient-out split. Frame sets are indices into
/// [`Manifest::frames`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub index: usize,
    pub held_out: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// One fold per patient: every frame of that patient, across all of their
/// videos, is held out for testing and the rest is used for training.
pub fn lopo_folds(m: &Manifest) -> Result<FoldPlan> {
    let patients = m.patient_ids();
    if patients.len() < 2 {
        return Err(Error::Protocol(format!(
            "leave-one-patient-out needs at least 2 patients, manifest has {}",
            patients.len()
        )));
    }
    let folds = patients
        .iter()
        .enumerate()
        .map(|(index, &pid)| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..m.frame_count()).partition(|&i| m.frames()[i].key.patient_id == pid);
            Fold {
                index,
                held_out: pid.to_owned(),
                train,
                test,
            }
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::manifest::{FrameKey, FrameRecord, Patient, Video};
    use crate::dataset::RegionIntensity;

    fn manifest(spec: &[(&str, &[&str])]) -> Manifest {
        let patients = spec
            .iter()
            .map(|(pid, videos)| Patient {
                patient_id: pid.to_string(),
                videos: videos
                    .iter()
                    .map(|vid| Video {
                        video_id: vid.to_string(),
                        fps: 6.0,
                        frames: (0..3)
                            .map(|i| FrameRecord {
                                key: FrameKey {
                                    patient_id: pid.to_string(),
                                    video_id: vid.to_string(),
                                    frame_index: i,
                                },
                                rgb_path: "x".into(),
                                landmark_path: "x".into(),
                                blendshape_path: "x".into(),
                                eye: RegionIntensity::Absent,
                                mouth: RegionIntensity::Absent,
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect();
        Manifest::new(patients).unwrap()
    }

    #[test]
    fn two_patients_two_folds() {
        let m = manifest(&[("a", &["v"]), ("b", &["v"])]);
        let plan = lopo_folds(&m).unwrap();
        assert_eq!(plan.folds.len(), 2);
        assert_eq!(plan.folds[0].test, vec![0, 1, 2]);
        assert_eq!(plan.folds[0].train, vec![3, 4, 5]);
        assert_eq!(plan.folds[1].held_out, "b");
    }

    #[test]
    fn multi_video_patient_stays_together() {
        let m = manifest(&[("a", &["v1", "v2"]), ("b", &["v"]), ("c", &["v1", "v2"])]);
        let plan = lopo_folds(&m).unwrap();
        for fold in &plan.folds {
            for (i, f) in m.frames().iter().enumerate() {
                let in_test = fold.test.contains(&i);
                assert_eq!(in_test, f.key.patient_id == fold.held_out);
                assert_eq!(fold.train.contains(&i), !in_test);
            }
        }
    }

    #[test]
    fn plan_ignores_manifest_order() {
        let a = lopo_folds(&manifest(&[("a", &["v"]), ("b", &["v"]), ("c", &["v"])])).unwrap();
        let b = lopo_folds(&manifest(&[("c", &["v"]), ("a", &["v"]), ("b", &["v"])])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_patient_is_protocol_error() {
        let m = manifest(&[("a", &["v"])]);
        assert!(matches!(lopo_folds(&m), Err(Error::Protocol(_))));
    }
}
