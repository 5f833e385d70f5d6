//! Run the bundled scenario suite under every loss and print a table.

use ewd_core::geom::BoxDef;
use ewd_core::harness::{compare_losses, standard_scenarios};
use ewd_core::LossConfig;

fn main() {
    let losses = [
        LossConfig::egwd(),
        LossConfig::edwd(),
        LossConfig::gwd(),
        LossConfig::kld(),
        LossConfig::smooth_l1(BoxDef::Min),
        LossConfig::smooth_l1(BoxDef::Le),
    ];
    let cells = compare_losses(&standard_scenarios(), &losses).expect("non-empty suite");
    println!("{:<18} {:<14} {:>8} {:>10} {:>10} {:>8} {:>6} status", "scenario", "loss", "to_0.9", "dtheta0", "dtheta", "iou", "steps");
    for c in cells {
        println!(
            "{:<18} {:<14} {:>8} {:>10.3} {:>10.3} {:>8.4} {:>6} {}{}",
            c.scenario,
            c.loss,
            c.steps_to_iou_90.map_or("-".into(), |s| s.to_string()),
            c.initial_dtheta_deg.unwrap_or(f64::NAN),
            c.final_dtheta_deg.unwrap_or(f64::NAN),
            c.final_iou,
            c.steps,
            c.status,
            c.note.map(|n| format!(" ({n})")).unwrap_or_default(),
        );
    }
}
