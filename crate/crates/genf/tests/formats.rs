use genf::checkpoint::{self, Checkpoint};
use genf::config::ExperimentConfig;
use genf::csv_io::{read_series, write_series};
use genf_core::cwgan::{Cwgan, GenConfig};
use genf_core::data::RawSeries;
use genf_core::predictor::{PredConfig, Transformer};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_roundtrip(values in prop::collection::vec(-1e6f64..1e6, 2..40), k in 1usize..4, holes in prop::collection::vec(any::<bool>(), 40)) {
        let t = values.len() / k;
        prop_assume!(t >= 1);
        let mut s = RawSeries::new("unit-a", (0..k).map(|i| format!("f{i}")).collect(), values[..t * k].to_vec()).unwrap();
        // never blank the first row, like real ingestion data
        for (i, m) in s.missing.iter_mut().enumerate().skip(k) {
            if holes[i % holes.len()] {
                *m = true;
                s.values[i] = f64::NAN;
            }
        }
        let mut buf = Vec::new();
        write_series(std::slice::from_ref(&s), &mut buf).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(&back[0].missing, &s.missing);
        for (a, b) in back[0].values.iter().zip(&s.values) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    #[test]
    fn config_hash_roundtrips(eta in 0.0f64..100.0, epochs in 1usize..500, seeds in prop::collection::vec(0u64..1000, 1..6), n in 2usize..12) {
        let mut cfg = ExperimentConfig::default();
        cfg.gen.eta = eta;
        cfg.pred.epochs = epochs;
        cfg.experiment.seeds = seeds;
        cfg.experiment.n = n;
        cfg.experiment.l_set = vec![1, n - 1];
        let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn checkpoint_text_is_bit_exact(seed in any::<u64>()) {
        let gan = Cwgan::new(2, &GenConfig::default(), seed);
        let text = checkpoint::gan_checkpoint(&gan).to_text();
        let back = checkpoint::gan_from(&Checkpoint::parse(&text).unwrap()).unwrap();
        prop_assert_eq!(&back.generator.ps, &gan.generator.ps);
        prop_assert_eq!(&back.critic.ps, &gan.critic.ps);
        prop_assert_eq!(checkpoint::gan_checkpoint(&back).to_text(), text);
    }
}

#[test]
fn predictor_checkpoint_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.ckpt");
    let model = Transformer::new(3, 3, &PredConfig::default(), 11).unwrap();
    checkpoint::predictor_checkpoint(&model).save(&path).unwrap();
    let back = checkpoint::predictor_from(&Checkpoint::load(&path).unwrap()).unwrap();
    assert_eq!(back.ps, model.ps);
    assert_eq!((back.k, back.out_dim), (3, 3));

    let text = std::fs::read_to_string(&path).unwrap();
    let truncated = &text[..text.len() / 2];
    assert_eq!(Checkpoint::parse(truncated).unwrap_err().kind(), "checkpoint");
}

#[test]
fn bench_config_parses() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/bench.toml");
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.experiment.seeds, vec![0, 1, 2, 3, 4]);
    assert_eq!((cfg.experiment.m, cfg.experiment.n), (20, 8));
    let synth = cfg.data.synth.unwrap();
    assert_eq!((synth.units, synth.t), (200, 200));
}
