use std::io::Write;
use std::path::Path;

use impatience_core::markov::{
    build_uniformized_chain, erlang_stats, expected_jockey_time, jockey_benefit_probability, jockey_wait_closed_form,
    renege_fail_probability, renege_probability, stay_deadline_miss_probability, switch_outcome_probabilities,
    transient_pmf, TransientPmf, DEFAULT_EPS,
};

use crate::error::{AppError, AppResult};
use crate::output::{self, CsvOut};

/// Entries of the transient PMF shown.
pub const PMF_HEAD: usize = 5;

/// One state of a tenant at `k` requests from service in its queue, with
/// `k_j` requests in the target queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateArgs {
    pub k: u64,
    pub mu: f64,
    pub patience: f64,
    pub t0: f64,
    pub lambda_tar: f64,
    /// Horizon of the transient target-queue PMF.
    pub t: f64,
    pub k_j: u64,
    pub mu_j: f64,
}

/// Every closed-form quantity of the state, in display order.
pub fn estimate(a: &EstimateArgs) -> AppResult<Vec<(String, f64)>> {
    let erlang = erlang_stats(a.k, a.mu, a.t)?;
    let chain = build_uniformized_chain(a.lambda_tar, a.mu_j, DEFAULT_EPS)?;
    let start = TransientPmf::point_mass(a.k_j as usize);
    let pmf = transient_pmf(&chain, &start.mass, a.t, DEFAULT_EPS)?;
    let switch = switch_outcome_probabilities(&pmf, a.mu_j, a.lambda_tar, a.patience, a.t0)?;

    let mut rows = vec![
        ("mean_wait".to_string(), erlang.mean),
        ("wait_pdf_at_t".into(), erlang.pdf),
        ("wait_cdf_at_t".into(), erlang.cdf),
        ("renege_probability".into(), renege_probability(a.k, a.mu, a.patience)?),
        ("stay_finish_probability".into(), renege_fail_probability(a.k, a.mu, a.patience, a.t0)?),
        (
            "stay_deadline_miss_probability".into(),
            stay_deadline_miss_probability(a.k, a.mu, a.patience, a.t0)?,
        ),
    ];
    for i in 0..PMF_HEAD {
        rows.push((format!("target_pmf_{i}"), pmf.mass.get(i).copied().unwrap_or(0.0)));
    }
    rows.extend([
        ("target_pmf_truncation".into(), pmf.truncation_error),
        ("jockey_wait".into(), jockey_wait_closed_form(a.k_j, a.mu_j, a.lambda_tar)?),
        ("expected_jockey_time".into(), expected_jockey_time(&pmf, a.mu_j, a.lambda_tar)?),
        (
            "jockey_benefit_probability".into(),
            jockey_benefit_probability(a.k, a.mu, &pmf, a.mu_j, a.lambda_tar)?,
        ),
        ("switch_fail".into(), switch.fail),
        ("switch_success".into(), switch.success),
    ]);
    Ok(rows)
}

pub fn print_table(rows: &[(String, f64)], out: &mut impl Write) -> AppResult<()> {
    let width = rows.iter().map(|(q, _)| q.len()).max().unwrap_or(0);
    for (q, v) in rows {
        writeln!(out, "{q:<width$}  {v}").map_err(|e| AppError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

pub fn print_csv(rows: &[(String, f64)], out: &mut impl Write) -> AppResult<()> {
    let mut csv = CsvOut::new(out, output::ESTIMATE, Path::new("<stdout>"))?;
    for (q, v) in rows {
        csv.row(vec![q.clone(), v.to_string()])?;
    }
    csv.finish()?;
    Ok(())
}
