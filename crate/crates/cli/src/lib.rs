//! Batch command surface: JSON instances in, versioned JSON or CSV reports out.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use randlab_core::calculus::{ExtensionBudget, MonotoneExtension};
use randlab_core::counterexample::{
    build_counterexample, default_enumeration, verify_denjoy_failure, OverlapPolicy,
};
use randlab_core::density::{low_density_open_set, lower_density_estimate, DensityMode};
use randlab_core::descriptor::OracleSpec;
use randlab_core::gen::{non_dyadic_point, random_enumeration, rng_for, Denominators};
use randlab_core::martingale::{
    check_fairness, force, ConditionSpec, ForcingStep, Martingale, MartingaleRef, TableMartingale,
};
use randlab_core::porosity::{porosity_test, PorosityParams};
use randlab_core::randomness::{
    build_domination_tests, build_escape_sets, capture_check, density_difference_test,
    DominationCase, TestFamily,
};
use randlab_core::suite::{escape_instance, run_all, DEFAULT_SEED, SCHEMA_VERSION};
use randlab_core::{BitString, Error, Inequality, IntervalSet, Rational, StagedOpenEnumeration};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Density,
    Porosity,
    Covering,
    Tests,
    Martingale,
    Extend,
    Counterexample,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Density => "density",
            Command::Porosity => "porosity",
            Command::Covering => "covering",
            Command::Tests => "tests",
            Command::Martingale => "martingale",
            Command::Extend => "extend",
            Command::Counterexample => "counterexample",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub depth: Option<usize>,
    pub stages: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunRequest {
    pub command: Command,
    /// Raw JSON instance; a seeded instance is generated when absent.
    pub instance: Option<String>,
    pub seed: u64,
    pub overrides: Overrides,
}

impl RunRequest {
    pub fn new(command: Command) -> Self {
        RunRequest {
            command,
            instance: None,
            seed: DEFAULT_SEED,
            overrides: Overrides::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Violation,
    SchemaError,
    BudgetExhausted,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::SchemaError => 2,
            Status::BudgetExhausted => 3,
        }
    }
}

/// Rows for CSV output.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: Command,
    pub seed: u64,
    /// Where the instance came from.
    pub source: String,
    pub status: Status,
    pub checked: usize,
    pub violations: Vec<Inequality>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub result: Value,
    #[serde(skip)]
    pub table: Option<Table>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// CSV of the command's curve table, or of every inequality in the report.
    pub fn to_csv(&self) -> String {
        let table = self
            .table
            .clone()
            .unwrap_or_else(|| inequality_table(&self.result));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header).expect("in-memory write");
        for row in &table.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} ({} inequalities checked, {} violated)",
            self.command.name(),
            serde_json::to_value(self.status).unwrap().as_str().unwrap(),
            self.checked,
            self.violations.len()
        );
        if let Some(e) = &self.error {
            s.push_str(&format!("\nerror: {e}"));
        }
        for n in &self.notes {
            s.push_str(&format!("\n  {n}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityInstance {
    pub class: IntervalSet,
    pub points: Vec<Rational>,
    #[serde(default = "default_density_depth")]
    pub depth: u32,
}

fn default_density_depth() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringInstance {
    pub class: IntervalSet,
    pub epsilon: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PorosityInstance {
    pub enumeration: StagedOpenEnumeration,
    pub c: u32,
    #[serde(default = "default_levels")]
    pub n_max: usize,
    #[serde(default = "default_stage_cap")]
    pub t_max: usize,
}

fn default_levels() -> usize {
    4
}

fn default_stage_cap() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestsInstance {
    /// Invariants of a given family and the components capturing `z` at the final stage.
    Invariants { family: TestFamily, z: Rational },
    /// Escape sets against a difference test.
    Escape {
        family: TestFamily,
        z: Rational,
        r: u32,
        #[serde(default = "default_levels")]
        m_max: usize,
    },
    /// The density difference test of an enumeration, then its escape sets.
    DensityDifference {
        enumeration: StagedOpenEnumeration,
        z: Rational,
        r: u32,
        #[serde(default = "default_levels")]
        n_max: usize,
        #[serde(default = "default_levels")]
        m_max: usize,
    },
    /// Solovay tests from a growth function `h`.
    Domination {
        enumeration: StagedOpenEnumeration,
        epsilon: Rational,
        z: Rational,
        h: Vec<usize>,
        case: DominationCase,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSpec {
    Length(usize),
    Absorb(TableMartingale),
    Save { eps: Rational, search_depth: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleInstance {
    pub condition: ConditionSpec,
    #[serde(default)]
    pub steps: Vec<StepSpec>,
    #[serde(default = "default_check_depth")]
    pub check_depth: usize,
}

fn default_check_depth() -> usize {
    12
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendInstance {
    pub oracle: OracleSpec,
    pub enumeration: StagedOpenEnumeration,
    #[serde(default = "default_precision")]
    pub n: u32,
    /// Evaluation grid `k·2^-grid_depth`.
    #[serde(default = "default_grid")]
    pub grid_depth: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stage: Option<u32>,
}

fn default_precision() -> u32 {
    10
}

fn default_grid() -> u32 {
    8
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<Vec<randlab_core::Interval>>,
    #[serde(default = "default_increases")]
    pub increases: usize,
    #[serde(default)]
    pub policy: OverlapPolicy,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
}

fn default_increases() -> usize {
    24
}

fn default_k_max() -> u32 {
    16
}

/// A validated instance for one command.
#[derive(Clone, Debug)]
pub enum Instance {
    Density(DensityInstance),
    Covering(CoveringInstance),
    Porosity(PorosityInstance),
    Tests(TestsInstance),
    Martingale(MartingaleInstance),
    Extend(ExtendInstance),
    Counterexample(CounterexampleInstance),
    VerifyAll,
}

/// Parses and validates an instance document for `command`.
pub fn decode_instance(command: Command, text: &str) -> Result<Instance, Error> {
    fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, Error> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }
    let inst = match command {
        Command::Density => Instance::Density(parse(text)?),
        Command::Covering => Instance::Covering(parse(text)?),
        Command::Porosity => Instance::Porosity(parse(text)?),
        Command::Tests => Instance::Tests(parse(text)?),
        Command::Martingale => Instance::Martingale(parse(text)?),
        Command::Extend => Instance::Extend(parse(text)?),
        Command::Counterexample => Instance::Counterexample(parse(text)?),
        Command::VerifyAll => Instance::VerifyAll,
    };
    validate(&inst)?;
    Ok(inst)
}

fn in_unit(x: &Rational, what: &str) -> Result<(), Error> {
    if x.in_unit() {
        Ok(())
    } else {
        Err(Error::Schema(format!("{what} = {x} outside [0, 1]")))
    }
}

fn validate(inst: &Instance) -> Result<(), Error> {
    let unit_set = |s: &IntervalSet| {
        s.parts()
            .iter()
            .try_for_each(|i| in_unit(&i.lo, "endpoint").and(in_unit(&i.hi, "endpoint")))
    };
    let unit_enum = |e: &StagedOpenEnumeration| {
        e.holes
            .iter()
            .try_for_each(|i| in_unit(&i.lo, "endpoint").and(in_unit(&i.hi, "endpoint")))
    };
    match inst {
        Instance::Density(d) => {
            unit_set(&d.class)?;
            d.points.iter().try_for_each(|z| in_unit(z, "point"))?;
        }
        Instance::Covering(c) => unit_set(&c.class)?,
        Instance::Porosity(p) => unit_enum(&p.enumeration)?,
        Instance::Tests(t) => match t {
            TestsInstance::Invariants { z, .. } | TestsInstance::Escape { z, .. } => {
                in_unit(z, "z")?
            }
            TestsInstance::DensityDifference { enumeration, z, .. }
            | TestsInstance::Domination { enumeration, z, .. } => {
                unit_enum(enumeration)?;
                in_unit(z, "z")?;
            }
        },
        Instance::Extend(x) => unit_enum(&x.enumeration)?,
        Instance::Counterexample(c) => {
            if let Some(list) = &c.intervals {
                list.iter()
                    .try_for_each(|i| in_unit(&i.lo, "endpoint").and(in_unit(&i.hi, "endpoint")))?;
            }
        }
        Instance::Martingale(_) | Instance::VerifyAll => {}
    }
    Ok(())
}

/// The seeded instance used when no document is supplied.
pub fn generated_instance(command: Command, seed: u64) -> Instance {
    let mut rng = rng_for(seed, 100, command as u64);
    let enumeration = random_enumeration(&mut rng, 8, Denominators::Bounded(64));
    match command {
        Command::Density => Instance::Density(DensityInstance {
            class: enumeration.final_class(),
            points: (0..4).map(|_| non_dyadic_point(&mut rng, 6)).collect(),
            depth: default_density_depth(),
        }),
        Command::Covering => Instance::Covering(CoveringInstance {
            class: enumeration.final_class(),
            epsilon: Rational::new(1, 2),
        }),
        Command::Porosity => Instance::Porosity(PorosityInstance {
            enumeration,
            c: 1,
            n_max: default_levels(),
            t_max: default_stage_cap(),
        }),
        Command::Tests => {
            let (family, z) =
                escape_instance(&mut rng, 12).expect("generator yields prefix-free cylinders");
            Instance::Tests(TestsInstance::Escape {
                family,
                z,
                r: 2,
                m_max: 4,
            })
        }
        Command::Martingale => {
            let leaves = (0..16)
                .map(|_| Rational::new(rand::Rng::gen_range(&mut rng, 0..=8), 4))
                .collect();
            let table = TableMartingale::from_leaves(4, leaves).expect("16 leaves");
            let unit =
                TableMartingale::from_leaves(1, vec![Rational::new(1, 2), Rational::new(3, 2)])
                    .expect("2 leaves");
            let q = table.value(&BitString::empty()) + Rational::one();
            Instance::Martingale(MartingaleInstance {
                condition: ConditionSpec {
                    sigma: BitString::empty(),
                    table,
                    q,
                },
                steps: vec![
                    StepSpec::Length(3),
                    StepSpec::Absorb(unit),
                    StepSpec::Save {
                        eps: Rational::new(1, 4),
                        search_depth: 8,
                    },
                ],
                check_depth: default_check_depth(),
            })
        }
        Command::Extend => Instance::Extend(ExtendInstance {
            oracle: OracleSpec::Polynomial {
                coeffs: vec![Rational::zero(), Rational::new(1, 2), Rational::one()],
            },
            enumeration,
            n: default_precision(),
            grid_depth: default_grid(),
            max_stage: None,
        }),
        Command::Counterexample => Instance::Counterexample(CounterexampleInstance {
            intervals: None,
            increases: default_increases(),
            policy: OverlapPolicy::Reject,
            k_max: default_k_max(),
        }),
        Command::VerifyAll => Instance::VerifyAll,
    }
}

struct Outcome {
    result: Value,
    ok: bool,
    notes: Vec<String>,
    table: Option<Table>,
}

impl Outcome {
    fn new(result: Value, ok: bool) -> Self {
        Outcome {
            result,
            ok,
            notes: Vec::new(),
            table: None,
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Runs one request. Identical requests give byte-identical reports.
pub fn execute(req: &RunRequest) -> Report {
    let (source, inst) = match &req.instance {
        Some(text) => (
            "instance document".to_string(),
            decode_instance(req.command, text),
        ),
        None => (
            format!(
                "generated: ChaCha8 seed {} stream 100 word {}",
                req.seed, req.command as u64
            ),
            Ok(generated_instance(req.command, req.seed)),
        ),
    };
    let base = |status: Status, error: Option<String>| Report {
        schema_version: SCHEMA_VERSION,
        command: req.command,
        seed: req.seed,
        source: source.clone(),
        status,
        checked: 0,
        violations: Vec::new(),
        notes: Vec::new(),
        error,
        result: Value::Null,
        table: None,
    };
    let outcome = inst.and_then(|i| run(i, req));
    match outcome {
        Err(e) => {
            let status = match e {
                Error::BudgetExhausted { .. } => Status::BudgetExhausted,
                _ => Status::SchemaError,
            };
            base(status, Some(e.to_string()))
        }
        Ok(o) => {
            let all = collect_inequalities(&o.result);
            let violations: Vec<Inequality> = all.iter().filter(|i| !i.holds).cloned().collect();
            let status = if o.ok && violations.is_empty() {
                Status::Ok
            } else {
                Status::Violation
            };
            Report {
                checked: all.len(),
                violations,
                notes: o.notes,
                result: o.result,
                table: o.table,
                ..base(status, None)
            }
        }
    }
}

fn run(inst: Instance, req: &RunRequest) -> Result<Outcome, Error> {
    let ov = &req.overrides;
    match inst {
        Instance::Density(mut d) => {
            if let Some(depth) = ov.depth {
                d.depth = depth as u32;
            }
            let rows = d
                .points
                .par_iter()
                .map(|z| {
                    let general =
                        lower_density_estimate(&d.class, z, d.depth, DensityMode::General)?;
                    let dyadic = lower_density_estimate(&d.class, z, d.depth, DensityMode::Dyadic)?;
                    Ok(json!({ "z": z, "general": general, "dyadic": dyadic }))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let table = Table {
                header: vec!["z".into(), "general".into(), "dyadic".into()],
                rows: rows
                    .iter()
                    .map(|r| {
                        vec![
                            plain(&r["z"]),
                            plain(&r["general"]["estimate"]),
                            plain(&r["dyadic"]["estimate"]),
                        ]
                    })
                    .collect(),
            };
            let mut o = Outcome::new(json!({ "instance": d, "estimates": rows }), true);
            o.table = Some(table);
            Ok(o)
        }
        Instance::Covering(c) => {
            let rep = low_density_open_set(&c.class, &c.epsilon)?;
            let ok = rep.all_hold();
            Ok(Outcome::new(json!({ "instance": c, "covering": rep }), ok))
        }
        Instance::Porosity(mut p) => {
            if let Some(depth) = ov.depth {
                p.n_max = depth;
            }
            if let Some(stages) = ov.stages {
                p.t_max = stages;
            }
            let rep = porosity_test(&p.enumeration, &PorosityParams::new(p.c), p.n_max, p.t_max)?;
            if rep.truncated {
                return Err(Error::BudgetExhausted {
                    stage: rep.stages_checked,
                    gap: Rational::zero(),
                });
            }
            let checks: Vec<Inequality> = rep
                .levels
                .iter()
                .map(|l| {
                    Inequality::le(
                        format!("λ(U_{} ∩ C) ≤ (1−2^-(c+2))^{}", l.n, l.n),
                        l.measure.clone(),
                        l.bound.clone(),
                    )
                })
                .collect();
            let mut o = Outcome::new(
                json!({ "instance": p, "porosity": rep, "checks": checks }),
                rep.all_hold(),
            );
            o.notes = rep.violation_notes.clone();
            o.table = Some(Table {
                header: vec!["n".into(), "measure".into(), "bound".into(), "holds".into()],
                rows: rep
                    .levels
                    .iter()
                    .map(|l| {
                        vec![
                            l.n.to_string(),
                            l.measure.to_string(),
                            l.bound.to_string(),
                            l.bound_ok.to_string(),
                        ]
                    })
                    .collect(),
            });
            Ok(o)
        }
        Instance::Tests(t) => run_tests(t, ov),
        Instance::Martingale(m) => run_martingale(m, ov),
        Instance::Extend(x) => run_extend(x, ov),
        Instance::Counterexample(mut c) => {
            if let Some(depth) = ov.depth {
                c.k_max = depth as u32;
            }
            if let Some(stages) = ov.stages {
                c.increases = stages;
            }
            let list = c
                .intervals
                .clone()
                .unwrap_or_else(|| default_enumeration(c.increases));
            let (plan, trace, f) = build_counterexample(&list, c.policy)?;
            let rep = verify_denjoy_failure(&plan, &trace, &f, c.k_max);
            let descriptor = OracleSpec::Counterexample {
                intervals: c.intervals.clone(),
                increases: c.increases,
                policy: c.policy,
            };
            let table = Table {
                header: [
                    "k",
                    "b_k",
                    "x_k",
                    "q",
                    "slope_squared",
                    "bound_squared",
                    "holds",
                ]
                .map(String::from)
                .to_vec(),
                rows: rep
                    .certificates
                    .iter()
                    .map(|r| {
                        vec![
                            r.k.to_string(),
                            r.b_k.to_string(),
                            r.x_k.to_string(),
                            r.q.to_string(),
                            r.slope_squared.to_string(),
                            r.bound_squared.to_string(),
                            r.holds.to_string(),
                        ]
                    })
                    .collect(),
            };
            let checks: Vec<Inequality> = rep
                .certificates
                .iter()
                .map(|r| {
                    Inequality::new(
                        format!("S_f(x_{k}, q)² ≥ 2^{k}", k = r.k),
                        r.slope_squared.clone(),
                        randlab_core::Relation::Ge,
                        r.bound_squared.clone(),
                    )
                })
                .collect();
            let mut o = Outcome::new(
                json!({ "instance": c, "plan": plan, "trace": trace, "oracle": descriptor, "report": rep, "checks": checks }),
                rep.all_hold(),
            );
            if !rep.not_realized.is_empty() {
                o.notes.push(format!(
                    "scales not realized by the enumeration: {:?}",
                    rep.not_realized
                ));
            }
            o.table = Some(table);
            Ok(o)
        }
        Instance::VerifyAll => {
            let results = run_all(req.seed);
            let ok = results.iter().all(|r| r.passed);
            let mut o = Outcome::new(json!({ "criteria": results }), ok);
            o.notes = results
                .iter()
                .map(|r| {
                    format!(
                        "[{}] {} {}: {}",
                        if r.passed { "PASS" } else { "FAIL" },
                        r.id,
                        r.name,
                        r.detail
                    )
                })
                .collect();
            o.table = Some(Table {
                header: ["id", "name", "passed", "checks", "failures"]
                    .map(String::from)
                    .to_vec(),
                rows: results
                    .iter()
                    .map(|r| {
                        vec![
                            r.id.to_string(),
                            r.name.clone(),
                            r.passed.to_string(),
                            r.checks.to_string(),
                            r.failures.to_string(),
                        ]
                    })
                    .collect(),
            });
            Ok(o)
        }
    }
}

fn run_tests(t: TestsInstance, ov: &Overrides) -> Result<Outcome, Error> {
    match t {
        TestsInstance::Invariants { family, z } => {
            let invariants = family.check_invariants();
            let capture = capture_check(&family, &z, family.max_stage());
            Ok(Outcome::new(
                json!({ "invariants": invariants, "capture": capture }),
                true,
            ))
        }
        TestsInstance::Escape {
            family,
            z,
            r,
            mut m_max,
        } => {
            if let Some(depth) = ov.depth {
                m_max = depth;
            }
            let rep = build_escape_sets(&family, r, m_max, &z)?;
            let ok = rep.all_hold();
            Ok(Outcome::new(json!({ "escape": rep }), ok))
        }
        TestsInstance::DensityDifference {
            enumeration,
            z,
            r,
            mut n_max,
            mut m_max,
        } => {
            if let Some(depth) = ov.depth {
                n_max = depth;
                m_max = depth;
            }
            let family = density_difference_test(&enumeration, n_max)?;
            let invariants = family.check_invariants();
            let rep = build_escape_sets(&family, r, m_max, &z)?;
            let ok = rep.all_hold();
            Ok(Outcome::new(
                json!({ "family": family, "invariants": invariants, "escape": rep }),
                ok,
            ))
        }
        TestsInstance::Domination {
            enumeration,
            epsilon,
            z,
            h,
            case,
        } => {
            let rep = build_domination_tests(&enumeration, &epsilon, &z, &h, case)?;
            let ok = rep.budget_ok && rep.claims_ok;
            Ok(Outcome::new(json!({ "domination": rep }), ok))
        }
    }
}

fn run_martingale(m: MartingaleInstance, ov: &Overrides) -> Result<Outcome, Error> {
    let check_depth = ov.depth.unwrap_or(m.check_depth);
    let start = m.condition.to_condition()?;
    let fairness = check_fairness(&*start.m, &BitString::empty(), m.condition.table.depth());
    let steps: Vec<ForcingStep> = m
        .steps
        .iter()
        .map(|s| match s {
            StepSpec::Length(n) => ForcingStep::Length(*n),
            StepSpec::Absorb(t) => ForcingStep::Absorb(Arc::new(t.clone()) as MartingaleRef),
            StepSpec::Save { eps, search_depth } => ForcingStep::Save {
                eps: eps.clone(),
                search_depth: *search_depth,
            },
        })
        .collect();
    let (trace, last) = force(start, &steps, check_depth)?;
    let ok = fairness.fair() && trace.all_hold();
    let mut o = Outcome::new(
        json!({
            "fairness": fairness,
            "trace": trace,
            "final": { "sigma": last.sigma, "q": last.q },
        }),
        ok,
    );
    o.notes = trace
        .records
        .iter()
        .filter(|r| !r.extends.holds)
        .map(|r| {
            format!(
                "{}: {}",
                r.step,
                r.extends.reason.clone().unwrap_or_default()
            )
        })
        .collect();
    Ok(o)
}

fn run_extend(x: ExtendInstance, ov: &Overrides) -> Result<Outcome, Error> {
    let oracle = x.oracle.build()?;
    let n = ov.depth.map_or(x.n, |d| d as u32);
    let mut budget = ExtensionBudget::for_precision(n);
    if let Some(t) = ov.stages.map(|s| s as u32).or(x.max_stage) {
        budget.max_stage = t;
    }
    let ext = MonotoneExtension::new(&*oracle, &x.enumeration, n, budget)?;
    let grid: Vec<Rational> = (0..=1u64 << x.grid_depth)
        .map(|k| Rational::dyadic(k, x.grid_depth))
        .collect();
    let values = grid
        .par_iter()
        .map(|p| ext.value(p))
        .collect::<Result<Vec<_>, Error>>()?;
    let tol = Rational::pow2(n as i64 - 1);
    let mut checks = Vec::new();
    for i in 1..grid.len() {
        checks.push(Inequality::le(
            format!("ĥ({}) ≤ ĥ({})", grid[i - 1], grid[i]),
            values[i - 1].clone(),
            values[i].clone(),
        ));
    }
    let class = ext.class();
    for (p, v) in grid.iter().zip(&values) {
        if class.contains(p) {
            let h = oracle.exact(p).ok_or(Error::InexactOracle)?;
            checks.push(Inequality::le(
                format!("|ĥ({p}) − h({p})| ≤ 2·2^-n"),
                (v - &h).abs(),
                tol.clone(),
            ));
        }
    }
    let table = Table {
        header: vec!["x".into(), "value".into()],
        rows: grid
            .iter()
            .zip(&values)
            .map(|(p, v)| vec![p.to_string(), v.to_string()])
            .collect(),
    };
    let curve: Vec<Value> = grid
        .iter()
        .zip(&values)
        .map(|(p, v)| json!([p, v]))
        .collect();
    let mut o = Outcome::new(
        json!({ "instance": x, "curve": curve, "checks": checks }),
        true,
    );
    o.table = Some(table);
    Ok(o)
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn as_inequality(v: &Value) -> Option<Inequality> {
    let o = v.as_object()?;
    if ["label", "lhs", "rhs", "relation", "holds"]
        .iter()
        .all(|k| o.contains_key(*k))
        && o.len() == 5
    {
        serde_json::from_value(v.clone()).ok()
    } else {
        None
    }
}

/// Every inequality record nested anywhere in `v`, in document order.
pub fn collect_inequalities(v: &Value) -> Vec<Inequality> {
    let mut out = Vec::new();
    let mut stack = vec![v];
    while let Some(v) = stack.pop() {
        if let Some(i) = as_inequality(v) {
            out.push(i);
            continue;
        }
        match v {
            Value::Array(items) => stack.extend(items.iter().rev()),
            Value::Object(map) => stack.extend(map.values().rev()),
            _ => {}
        }
    }
    out
}

fn inequality_table(v: &Value) -> Table {
    Table {
        header: ["label", "lhs", "relation", "rhs", "holds"]
            .map(String::from)
            .to_vec(),
        rows: collect_inequalities(v)
            .into_iter()
            .map(|i| {
                vec![
                    i.label,
                    i.lhs.to_string(),
                    plain(&to_value(&i.relation)),
                    i.rhs.to_string(),
                    i.holds.to_string(),
                ]
            })
            .collect(),
    }
}
