use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use matchlab::adversary::{builtin, run_adaptive_adversary};
use matchlab::balance::{
    averaging_process, balance_monotone_closed_form, relabel_to_diagonal, run_balance,
    strip_backward_edges,
};
use matchlab::combinatorics::{
    a_exact, d_triangle, derangement_sequence, factorial, rho_ranking_monotone, CountTriangle,
};
use matchlab::constants::{HALF_MINUS_HALF_INV_E, ONE_MINUS_INV_E};
use matchlab::pricing::{
    expected_price_mc, per_edge_bound_mc, removal_equality_check, slackness_mc,
};
use matchlab::ranking::{enumerate_ranking_exact, matched_at_rank_counts, ranking_monte_carlo};
use matchlab::rng::rng_from_seed;
use matchlab::scalar::EXACT_MAX_N;
use matchlab::verify::{run_verify, VerifyConfig, VerifyReport};
use matchlab::{sample_dn, validate_fractional, BipartiteGraph, Exact, Permutation, Scalar};

use crate::args::{
    AdversaryArgs, BalanceCmd, Cli, Command, GraphCmd, GraphSource, PricingCmd, RankingCmd,
    RhoArgs, TableKind, TablesArgs, VerifyArgs,
};
use crate::output::{Report, Table};

/// Result of a command plus whether it counts as success.
pub struct Outcome {
    pub report: Report,
    pub success: bool,
    pub summary: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            success: true,
            summary: None,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Tables(args) => tables(args).map(Into::into),
        Command::Rho(args) => rho(args).map(Into::into),
        Command::Ranking(cmd) => ranking(cmd).map(Into::into),
        Command::Balance(cmd) => balance(cli, cmd).map(Into::into),
        Command::Pricing(cmd) => pricing(cmd).map(Into::into),
        Command::Adversary(args) => adversary(args).map(Into::into),
        Command::Verify(args) => verify(args),
        Command::Graph(cmd) => graph(cmd).map(Into::into),
    }
}

fn cell(value: impl ToString) -> String {
    value.to_string()
}

fn load_graph(path: &Path) -> Result<BipartiteGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    BipartiteGraph::from_json(&text).with_context(|| format!("parsing graph {}", path.display()))
}

fn resolve(source: &GraphSource) -> Result<(BipartiteGraph, String)> {
    match (&source.graph, source.n) {
        (Some(path), _) => Ok((load_graph(path)?, path.display().to_string())),
        (None, Some(n)) => Ok((BipartiteGraph::monotone(n)?, format!("MonotoneG({n})"))),
        (None, None) => bail!("pass --n or --graph"),
    }
}

fn use_exact(cli: &Cli, n: usize) -> bool {
    !cli.float && (cli.exact || n <= EXACT_MAX_N)
}

fn tables(args: &TablesArgs) -> Result<Report> {
    let n_max = args.n_max;
    if n_max == 0 {
        bail!("--n-max must be at least 1");
    }
    match args.kind {
        TableKind::D => {
            let t = d_triangle(n_max)?;
            let mut header = vec!["n".to_string()];
            header.extend((1..=n_max).map(|i| format!("d(n,{i})")));
            let mut table = Table {
                header,
                rows: Vec::new(),
            };
            for n in 1..=n_max {
                let mut row = vec![cell(n)];
                row.extend(t.row(n).iter().map(cell));
                table.push(row);
            }
            Report::new(json!({ "kind": "d", "n_max": n_max, "triangle": t }), table)
        }
        TableKind::A => {
            let t = d_triangle(n_max)?;
            let mut table = Table::new(&["n", "a"]);
            let mut rows = Vec::new();
            for n in 1..=n_max {
                let a = t.row_sum(n);
                table.push(vec![cell(n), cell(&a)]);
                rows.push(json!({
                    "n": n,
                    "a": a.to_string(),
                    "a_row": t.a_row(n).iter().map(ToString::to_string).collect::<Vec<_>>(),
                }));
            }
            Report::new(json!({ "kind": "a", "n_max": n_max, "rows": rows }), table)
        }
        TableKind::Sequences => {
            let d = derangement_sequence(n_max);
            let mut table = Table::new(&["n", "factorial", "d", "a"]);
            let mut rows = Vec::new();
            for n in 1..=n_max {
                let a = a_exact(n)?;
                let f = factorial(n);
                table.push(vec![cell(n), cell(&f), cell(&d[n]), cell(&a)]);
                rows.push(json!({
                    "n": n,
                    "factorial": f.to_string(),
                    "d": d[n].to_string(),
                    "a": a.to_string(),
                }));
            }
            Report::new(
                json!({ "kind": "sequences", "n_max": n_max, "rows": rows }),
                table,
            )
        }
    }
}

fn rho(args: &RhoArgs) -> Result<Report> {
    let r = rho_ranking_monotone(args.n)?;
    let mut table = Table::new(&["n", "a_n", "rho", "nu"]);
    table.push(vec![cell(r.n), cell(&r.a_n), cell(&r.rho), r.nu.clone()]);
    let within = r.within_factorial_bound();
    Report::new(
        json!({
            "n": r.n,
            "a_n": r.a_n.to_string(),
            "rho": r.rho.to_string(),
            "rho_f64": r.rho.to_f64(),
            "nu": r.nu,
            "nu_f64": r.nu_f64,
            "nu_within_inverse_factorial": within,
        }),
        table,
    )
}

fn ranking(cmd: &RankingCmd) -> Result<Report> {
    match cmd {
        RankingCmd::Exact { n } => {
            let e = enumerate_ranking_exact(*n)?;
            let counts = matched_at_rank_counts(*n)?;
            let closed = a_exact(*n)?;
            let mut table = Table::new(&["rank", "matched"]);
            for (r, c) in counts.iter().enumerate() {
                table.push(vec![cell(r + 1), cell(c)]);
            }
            Report::new(
                json!({
                    "n": e.n,
                    "sum_of_sizes": e.sum_of_sizes.to_string(),
                    "permutations": e.permutations.to_string(),
                    "expectation": e.expectation.to_string(),
                    "expectation_f64": e.expectation_f64(),
                    "closed_form": closed.to_string(),
                    "agrees": e.sum_of_sizes == closed,
                    "matched_at_rank": counts.iter().map(ToString::to_string).collect::<Vec<_>>(),
                }),
                table,
            )
        }
        RankingCmd::Mc { source, mc } => {
            let (g, label) = resolve(source)?;
            let r = ranking_monte_carlo(&g, mc.trials, mc.seed)?;
            let mut table =
                Table::new(&["n", "trials", "seed", "mean", "stderr", "lower", "upper"]);
            table.push(vec![
                cell(r.n),
                cell(r.trials),
                cell(r.seed),
                cell(r.mean),
                cell(r.stderr),
                cell(r.lower_bound_theory),
                r.upper_bound_theory.map(cell).unwrap_or_default(),
            ]);
            Report::new(json!({ "graph": label, "estimate": r }), table)
        }
    }
}

fn balance_run<S: Scalar>(g: &BipartiteGraph, label: String, trace: bool) -> Result<Report> {
    let (f, steps) = run_balance::<S>(g);
    let validation = validate_fractional(g, &f);
    let mut table = Table::new(&["online", "budget", "threshold", "added"]);
    for s in &steps {
        table.push(vec![
            cell(s.online + 1),
            cell(&s.budget),
            s.threshold.as_ref().map(cell).unwrap_or_default(),
            cell(s.added_total()),
        ]);
    }
    let size = f.size();
    let mut result = json!({
        "graph": label,
        "n": g.n(),
        "mode": if S::EXACT { "exact" } else { "float" },
        "size": size.to_string(),
        "size_f64": size.to_f64(),
        "max_matching_size": g.max_matching_size(),
        "validation": validation,
        "loads_offline": f.loads_offline().iter().map(ToString::to_string).collect::<Vec<_>>(),
    });
    if trace {
        result["steps"] = serde_json::to_value(&steps)?;
    }
    Report::new(result, table)
}

fn balance_closed_form<S: Scalar>(n: usize) -> Result<Report> {
    let (k, size) = balance_monotone_closed_form::<S>(n)?;
    let deviation = size.to_f64() - ONE_MINUS_INV_E * n as f64;
    let mut table = Table::new(&["n", "k", "size", "deviation"]);
    table.push(vec![cell(n), cell(k), cell(&size), cell(deviation)]);
    Report::new(
        json!({
            "n": n,
            "mode": if S::EXACT { "exact" } else { "float" },
            "k": k,
            "size": size.to_string(),
            "size_f64": size.to_f64(),
            "deviation": deviation,
            "limit": HALF_MINUS_HALF_INV_E,
        }),
        table,
    )
}

fn balance(cli: &Cli, cmd: &BalanceCmd) -> Result<Report> {
    match cmd {
        BalanceCmd::Run { source, trace } => {
            let (g, label) = resolve(source)?;
            if use_exact(cli, g.n()) {
                balance_run::<Exact>(&g, label, *trace)
            } else {
                balance_run::<f64>(&g, label, *trace)
            }
        }
        BalanceCmd::ClosedForm { n } => {
            if use_exact(cli, *n) {
                balance_closed_form::<Exact>(*n)
            } else {
                balance_closed_form::<f64>(*n)
            }
        }
        BalanceCmd::Averaging { source, normalize } => {
            let (mut g, label) = resolve(source)?;
            if *normalize {
                g = strip_backward_edges(&relabel_to_diagonal(&g)?.0)?;
            }
            let trace = averaging_process::<Exact>(&g)?;
            let mono = averaging_process::<Exact>(&BipartiteGraph::monotone(g.n())?)?;
            let mut table = Table::new(&["round", "credit", "average", "maximum", "slackness"]);
            for i in 0..trace.n {
                table.push(vec![
                    cell(i + 1),
                    cell(&trace.credits[i]),
                    cell(&trace.averages[i]),
                    cell(&trace.maxima[i]),
                    cell(&trace.slackness[i]),
                ]);
            }
            Report::new(
                json!({
                    "graph": label,
                    "normalized_input": normalize,
                    "trace": trace,
                    "monotone_total": mono.total.to_string(),
                    "balance_at_least_averaging": trace.balance_total >= trace.total,
                    "averaging_at_least_monotone": trace.total >= mono.total,
                }),
                table,
            )
        }
    }
}

fn pricing(cmd: &PricingCmd) -> Result<Report> {
    match cmd {
        PricingCmd::Mc { source, mc } => {
            let (g, label) = resolve(source)?;
            let m = g.certify_perfect()?;
            let r = per_edge_bound_mc(&g, &m, mc.trials, mc.seed)?;
            let price = expected_price_mc(mc.trials, mc.seed)?;
            let mut table = Table::new(&["item", "mean", "stderr"]);
            for (i, (mean, se)) in r.means.iter().zip(&r.stderrs).enumerate() {
                table.push(vec![cell(i + 1), cell(mean), cell(se)]);
            }
            Report::new(
                json!({ "graph": label, "per_edge": r, "mean_price": price, "price_target": ONE_MINUS_INV_E }),
                table,
            )
        }
        PricingCmd::Slackness { n, mc } => {
            let r = slackness_mc(*n, mc.trials, mc.seed)?;
            let mut table = Table::new(&["n", "trials", "mean_sum", "stderr", "violations"]);
            table.push(vec![
                cell(r.n),
                cell(r.trials),
                cell(r.slackness_sum.mean),
                cell(r.slackness_sum.stderr),
                cell(r.violations),
            ]);
            Report::new(r, table)
        }
        PricingCmd::Removal { n, j, mc } => {
            if *j == 0 {
                bail!("--j is 1-based");
            }
            let r = removal_equality_check(*n, j - 1, mc.trials, mc.seed)?;
            let mut table = Table::new(&[
                "n",
                "j",
                "without_own",
                "without_last",
                "difference",
                "stderr",
            ]);
            table.push(vec![
                cell(n),
                cell(j),
                cell(r.without_own.mean),
                cell(r.without_last.mean),
                cell(r.difference.mean),
                cell(r.difference.stderr),
            ]);
            #[derive(Serialize)]
            struct Out<'a> {
                j_one_based: usize,
                #[serde(flatten)]
                comparison: &'a matchlab::pricing::RemovalComparison,
            }
            Report::new(
                Out {
                    j_one_based: *j,
                    comparison: &r,
                },
                table,
            )
        }
    }
}

fn adversary(args: &AdversaryArgs) -> Result<Report> {
    let pi = Permutation::random(args.n, &mut rng_from_seed(args.seed));
    let alg = builtin(args.alg.name(), Some(pi)).expect("every CLI algorithm is built in");
    let t = run_adaptive_adversary(alg.as_ref(), args.n)?;
    let mut table = Table::new(&["online", "revealed", "decision", "skipped_with_exposed"]);
    for s in &t.steps {
        table.push(vec![
            cell(s.online + 1),
            s.revealed
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(" "),
            s.decision.map(cell).unwrap_or_default(),
            cell(s.skipped_with_exposed),
        ]);
    }
    Report::new(t, table)
}

fn verify(args: &VerifyArgs) -> Result<Outcome> {
    let triangle = match &args.triangle {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(
                serde_json::from_str::<CountTriangle>(&text)
                    .with_context(|| format!("parsing triangle {}", path.display()))?,
            )
        }
        None => None,
    };
    let report: VerifyReport = run_verify(&VerifyConfig {
        n_max: args.n_max,
        trials: args.trials,
        seed: args.seed,
        triangle,
    });
    let mut table = Table::new(&[
        "name",
        "anchor",
        "passed",
        "measured",
        "expected",
        "tolerance",
    ]);
    for c in &report.checks {
        table.push(vec![
            c.name.clone(),
            c.anchor.clone(),
            cell(c.passed),
            c.measured.clone(),
            c.expected.clone(),
            c.tolerance.clone(),
        ]);
    }
    Ok(Outcome {
        success: report.passed,
        summary: Some(report.summary()),
        report: Report::new(&report, table)?,
    })
}

fn graph(cmd: &GraphCmd) -> Result<Report> {
    let (g, tau) = match cmd {
        GraphCmd::Monotone { n } => (BipartiteGraph::monotone(*n)?, None),
        GraphCmd::Dn { n, seed } => {
            let (g, tau) = sample_dn(*n, *seed)?;
            (g, Some(tau))
        }
    };
    let mut table = Table::new(&["online", "neighbors"]);
    for j in 0..g.n() {
        table.push(vec![
            cell(j + 1),
            g.neighbors(j)
                .iter()
                .map(|v| (v + 1).to_string())
                .collect::<Vec<_>>()
                .join(" "),
        ]);
    }
    let mut value = serde_json::to_value(&g)?;
    if let Some(tau) = tau {
        value["tau"] = json!(tau.items().iter().map(|v| v + 1).collect::<Vec<_>>());
    }
    let mut report = Report::new(value, table)?;
    report.raw = true;
    Ok(report)
}
