//! Work-precision rows and Pareto extraction.

#[derive(Debug, Clone, PartialEq)]
pub struct WorkPrecisionRow {
    pub model_id: String,
    pub parameters: usize,
    pub mse: f64,
    pub block_time_s: f64,
}

/// Indices of rows not dominated in both MSE and time (a row dominates
/// another when it is no worse in both metrics and strictly better in one).
pub fn pareto_front(rows: &[WorkPrecisionRow]) -> Vec<usize> {
    let mut front = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let dominated = rows.iter().enumerate().any(|(j, other)| {
            j != i
                && other.mse <= row.mse
                && other.block_time_s <= row.block_time_s
                && (other.mse < row.mse || other.block_time_s < row.block_time_s)
        });
        if !dominated {
            front.push(i);
        }
    }
    front
}

pub fn work_precision_csv(rows: &[WorkPrecisionRow], pareto: &[usize]) -> String {
    let mut out = String::from("model,parameters,rollout_mse,block_time_s,pareto\n");
    for (i, row) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{:.8e},{:.6e},{}\n",
            row.model_id,
            row.parameters,
            row.mse,
            row.block_time_s,
            if pareto.contains(&i) { 1 } else { 0 }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, mse: f64, time: f64) -> WorkPrecisionRow {
        WorkPrecisionRow {
            model_id: id.into(),
            parameters: 1000,
            mse,
            block_time_s: time,
        }
    }

    #[test]
    fn dominated_rows_are_excluded() {
        let rows = vec![row("a", 0.1, 1.0), row("b", 0.2, 2.0)];
        assert_eq!(pareto_front(&rows), vec![0]);
    }

    #[test]
    fn single_row_is_its_own_front() {
        let rows = vec![row("only", 0.5, 0.5)];
        assert_eq!(pareto_front(&rows), vec![0]);
    }

    #[test]
    fn front_is_order_independent_and_idempotent() {
        let mut rows = vec![
            row("a", 0.10, 3.0),
            row("b", 0.20, 1.0),
            row("c", 0.15, 2.0),
            row("d", 0.25, 2.5), // dominated by c and b
        ];
        let front: Vec<String> = pareto_front(&rows)
            .into_iter()
            .map(|i| rows[i].model_id.clone())
            .collect();
        rows.reverse();
        let front_rev: Vec<String> = pareto_front(&rows)
            .into_iter()
            .map(|i| rows[i].model_id.clone())
            .collect();
        let mut a = front.clone();
        a.sort();
        let mut b = front_rev.clone();
        b.sort();
        assert_eq!(a, b);
        assert!(!a.contains(&"d".to_string()));

        // idempotent: running the front on the front changes nothing
        let front_rows: Vec<WorkPrecisionRow> = pareto_front(&rows)
            .into_iter()
            .map(|i| rows[i].clone())
            .collect();
        assert_eq!(pareto_front(&front_rows).len(), front_rows.len());
    }

    #[test]
    fn ties_are_kept_on_the_front() {
        let rows = vec![row("a", 0.1, 1.0), row("t", 0.1, 1.0)];
        assert_eq!(pareto_front(&rows).len(), 2);
    }
}
