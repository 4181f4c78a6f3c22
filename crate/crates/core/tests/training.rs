//! Desk-scale training run on the synthetic fixture corpus.

use stain_core::dataset::{self, fixtures, AugmentationSpec, Split, SplitCounts};
use stain_core::dsp::FeatureConfig;
use stain_core::models::ModelKind;
use stain_core::trainkit::{self, TrainConfig};

#[test]
fn mean_epoch_loss_decreases_on_the_fixture_set() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = fixtures::write_fixture_corpus(&dir.path().join("corpus"), &fixtures::FixtureSpec::default()).unwrap();
    let counts = SplitCounts { test_pos: 1, test_neg: 1, ..SplitCounts::DESK };
    let index = dataset::build_dataset(&manifest, &AugmentationSpec::default(), counts, &dir.path().join("data")).unwrap();
    let train = trainkit::load_split(&index, Split::Train, &FeatureConfig::default()).unwrap();
    assert_eq!(train.len(), 400);

    let cfg = TrainConfig { epochs: 5, kind: ModelKind::Stain, ..TrainConfig::default() };
    let outcome = trainkit::train_examples(&train, &cfg, |_, _| {}).unwrap();
    let losses = &outcome.epoch_losses;
    assert_eq!(losses.len(), 5);
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    assert_eq!(outcome.meta.final_loss, losses[4]);
}
