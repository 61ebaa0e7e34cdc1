//! Render the full figure set from synthetic artifacts, for eyeballing.
//!
//! ```sh
//! cargo run -p venation-report --example render_demo -- /tmp/demo_figs
//! ```

use venation_core::metrics::evaluate;
use venation_core::model::mobilenet_v2_config;
use venation_core::predictions::PredictionMatrix;
use venation_core::train::{EpochRecord, PhaseHistory, TrainingHistory};
use venation_report::figures::OutputFormat;
use venation_report::{render_figures, RunArtifacts};

fn main() {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "/tmp/venation_demo_figs".to_string());
    let dir = std::path::PathBuf::from(&out).join("mobilenet_v2");
    std::fs::create_dir_all(&dir).unwrap();

    let k = 15;
    let names: Vec<String> = (0..k).map(|i| format!("Species {:02}", i + 1)).collect();
    let mut state = 12345u32;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    for class in 0..k {
        for i in 0..15 {
            state = state.wrapping_mul(1664525).wrapping_add(1013904223);
            let noise = (state >> 16) as f64 / 65536.0;
            let winner = if noise < 0.92 { class } else { (class + 3) % k };
            let mut row = vec![0.02; k];
            row[winner] = 0.6 + 0.3 * noise;
            let sum: f64 = row.iter().sum();
            for v in &mut row {
                *v /= sum;
            }
            ids.push(format!("c{class}/img{i}.png"));
            labels.push(class);
            scores.push(row);
        }
    }
    let pm = PredictionMatrix {
        image_ids: ids,
        true_labels: labels,
        scores,
    };
    let report = evaluate::<f64>(&pm, &names).unwrap();
    report.save(&dir.join("metrics_test.json")).unwrap();
    report.save(&dir.join("metrics_train.json")).unwrap();
    mobilenet_v2_config(k)
        .unwrap()
        .save(&dir.join("model_config.json"))
        .unwrap();

    let mut records = Vec::new();
    for epoch in 1..=12 {
        records.push(EpochRecord {
            epoch,
            train_loss: 2.0 * (-0.3 * epoch as f64).exp() + 0.1,
            val_loss: 2.0 * (-0.25 * epoch as f64).exp() + 0.18,
            train_accuracy: 1.0 - 0.9 * (-0.35 * epoch as f64).exp(),
            val_accuracy: 1.0 - 0.9 * (-0.3 * epoch as f64).exp() - 0.03,
            learning_rate: 1e-3,
        });
    }
    TrainingHistory {
        phases: vec![PhaseHistory {
            name: "head".into(),
            records,
            best_epoch: 12,
            stopped_early: false,
        }],
    }
    .save(&dir.join("history.json"))
    .unwrap();

    let run = RunArtifacts::load(&dir).unwrap();
    let outcome = render_figures(&run, std::path::Path::new(&out), OutputFormat::Png).unwrap();
    for p in outcome.written {
        println!("{}", p.display());
    }
}
