use std::fmt::Write as _;

use mingraph::selfcheck::{run_invariant_suites, Mutation, SuiteResult};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::output::OutDir;
use crate::{config, Common, Outcome};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Cases per property (overrides the configuration).
    #[arg(long)]
    cases: Option<u64>,

    /// Inject a known defect to check that the suites catch it.
    #[arg(long, value_parser = ["none", "slope-sign-flip"])]
    mutation: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvariantsConfig {
    pub seed: u64,
    pub cases: u64,
    pub mutation: Mutation,
    pub out: Option<std::path::PathBuf>,
}

impl Default for InvariantsConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            cases: 200,
            mutation: Mutation::None,
            out: None,
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn junit(results: &[SuiteResult]) -> String {
    let mut suites: Vec<&str> = results.iter().map(|r| r.suite.as_str()).collect();
    suites.dedup();
    let total_fail = results.iter().filter(|r| !r.passed()).count();
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(s, "<testsuites tests=\"{}\" failures=\"{total_fail}\">", results.len()).unwrap();
    for suite in suites {
        let members: Vec<&SuiteResult> = results.iter().filter(|r| r.suite == suite).collect();
        let fails = members.iter().filter(|r| !r.passed()).count();
        writeln!(s, "  <testsuite name=\"{suite}\" tests=\"{}\" failures=\"{fails}\">", members.len()).unwrap();
        for r in members {
            write!(s, "    <testcase classname=\"{suite}\" name=\"{}\"", r.property).unwrap();
            match &r.first_failure {
                None => s.push_str("/>\n"),
                Some(msg) => {
                    s.push_str(">\n");
                    writeln!(
                        s,
                        "      <failure message=\"{} of {} cases failed\">{}</failure>",
                        r.failures,
                        r.cases,
                        xml_escape(msg)
                    )
                    .unwrap();
                    s.push_str("    </testcase>\n");
                }
            }
        }
        s.push_str("  </testsuite>\n");
    }
    s.push_str("</testsuites>\n");
    s
}

pub fn run(common: &Common, args: &Args) -> CliResult<Outcome> {
    let mut cfg: InvariantsConfig = config::load(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(c) = args.cases {
        cfg.cases = c;
    }
    if let Some(m) = &args.mutation {
        cfg.mutation = if m == "slope-sign-flip" {
            Mutation::SlopeSignFlip
        } else {
            Mutation::None
        };
    }
    let mut out = OutDir::create(&common.out_dir(cfg.out.as_ref(), "invariants"))?;
    out.log("invariants started");
    let results = run_invariant_suites(cfg.seed, cfg.cases, cfg.mutation);
    out.write_json("invariants.json", &results)?;
    out.write_text("junit.xml", &junit(&results))?;

    let mut suites: Vec<&str> = results.iter().map(|r| r.suite.as_str()).collect();
    suites.dedup();
    for suite in suites {
        let members: Vec<&SuiteResult> = results.iter().filter(|r| r.suite == suite).collect();
        let passed = members.iter().filter(|r| r.passed()).count();
        println!("{suite}: {passed}/{} properties passed", members.len());
    }
    let failing: Vec<&SuiteResult> = results.iter().filter(|r| !r.passed()).collect();
    for r in &failing {
        println!(
            "FAIL {}::{} ({}/{} cases): {}",
            r.suite,
            r.property,
            r.failures,
            r.cases,
            r.first_failure.as_deref().unwrap_or("")
        );
    }
    let passed = failing.is_empty();
    out.finish("invariants", &cfg, passed)?;
    Ok(if passed {
        Outcome::Passed
    } else {
        let r = failing[0];
        Outcome::AssertionFailed(format!(
            "{}::{}: {}",
            r.suite,
            r.property,
            r.first_failure.as_deref().unwrap_or("")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn junit_counts_failures_per_suite() {
        let results = vec![
            SuiteResult {
                suite: "a".into(),
                property: "p".into(),
                cases: 3,
                failures: 0,
                first_failure: None,
            },
            SuiteResult {
                suite: "a".into(),
                property: "q".into(),
                cases: 3,
                failures: 2,
                first_failure: Some("x < y".into()),
            },
        ];
        let xml = junit(&results);
        assert!(xml.contains("<testsuites tests=\"2\" failures=\"1\">"));
        assert!(xml.contains("<testsuite name=\"a\" tests=\"2\" failures=\"1\">"));
        assert!(xml.contains("2 of 3 cases failed\">x &lt; y</failure>"));
    }
}
