use alloc::format;
use alloc::string::String;

use super::RankRow;

/// Aggregate test accuracies (in percent) for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSummary {
    pub task: String,
    pub dense: f64,
    pub sparse: f64,
    pub combined: f64,
}

impl TaskSummary {
    /// Gain of the combined oracle over the better single representation.
    pub fn delta(&self) -> f64 {
        self.combined - self.dense.max(self.sparse)
    }
}

pub fn render_combined_tsv(rows: &[TaskSummary]) -> String {
    let mut out = String::from("task\tdense\tsparse\tcombined\tdelta\n");
    for r in rows {
        out += &format!("{}\t{:.1}\t{:.1}\t{:.1}\t{:+.1}\n", r.task, r.dense, r.sparse, r.combined, r.delta());
    }
    out
}

/// Fixed-width table with the `Dense | Sparse | Combined | Δ` columns.
pub fn render_combined_table(rows: &[TaskSummary]) -> String {
    let mut out = format!("{:<6}{:>8}{:>8}{:>10}{:>7}\n", "Task", "Dense", "Sparse", "Combined", "Δ");
    for r in rows {
        out += &format!(
            "{:<6}{:>8.1}{:>8.1}{:>10.1}{:>7}\n",
            r.task,
            r.dense,
            r.sparse,
            r.combined,
            format!("{:+.1}", r.delta())
        );
    }
    out
}

pub fn render_rank_tsv(rows: &[RankRow]) -> String {
    let mut out = String::from("wrong_rank\ttype\tright_rank\tdifference\n");
    for r in rows {
        out += &format!("{}\t{}\t{}\t{}\n", r.wrong_rank, r.type_name, r.right_rank, r.difference);
    }
    out
}
