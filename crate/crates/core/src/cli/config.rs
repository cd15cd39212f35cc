//! Experiment configuration: TOML with exact `"p/q"` and decimal literals.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde_json::{json, Map, Value};
use toml::Table;

use crate::attractor::{disjunctive_base, DEFAULT_SINGLETON_TOL};
use crate::exact::{parse_q, q, q_from_f64, to_f64, Point, Q};
use crate::fiber::{FiberMap, PLMap, ProductMap, SkewSystem};
use crate::measures::{FiberLaw, Reference};
use crate::rng;
use crate::symbolic::{MarkovSpec, Symbol, SymbolWindow};
use crate::zoo::{self, ZooMeta, ZooSystem};

pub const EXPERIMENTS: &[&str] = &[
    "code",
    "spine",
    "target",
    "split-check",
    "decay",
    "wasserstein-curve",
    "sync-curve",
    "omega",
    "graph-sample",
];

#[derive(Clone, Debug)]
pub enum Experiment {
    Code {
        theta: SymbolWindow,
        max_depth: usize,
        tol: f64,
    },
    Spine {
        theta: SymbolWindow,
        depth: usize,
        over_target: bool,
        target_iter: usize,
        target_tol: f64,
    },
    Target {
        max_iter: usize,
        tol: f64,
    },
    SplitCheck {
        word_a: Vec<Symbol>,
        word_b: Vec<Symbol>,
        sweep_words: usize,
        sweep_max_len: usize,
    },
    Decay {
        depths: Vec<usize>,
        n_samples: usize,
    },
    WassersteinCurve {
        n_atoms: usize,
        law: FiberLaw,
        depths: Vec<usize>,
        word_length: usize,
        base_depth: usize,
        tol: f64,
        reference: Reference,
    },
    SyncCurve {
        theta: SymbolWindow,
        x: Point,
        depths: Vec<usize>,
        max_depth: usize,
        tol: f64,
    },
    Omega {
        theta: SymbolWindow,
        x: Vec<f64>,
        burn_in: usize,
        n_iter: usize,
        n_atoms: usize,
        word_length: usize,
        tol: f64,
        cylinder_depth: usize,
        threshold: f64,
    },
    GraphSample {
        n_points: usize,
        word_length: usize,
        tol: f64,
    },
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub zoo: ZooSystem,
    pub kind: String,
    pub experiment: Experiment,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// The resolved configuration, embedded in `results.json`.
    pub config: Value,
}

/// Reads one table, recording resolved values and problems.
struct Reader<'a> {
    path: String,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
    out: Map<String, Value>,
    findings: Vec<String>,
}

fn describe(v: &toml::Value) -> String {
    v.to_string()
}

impl<'a> Reader<'a> {
    fn new(path: &str, table: Option<&'a Table>) -> Self {
        Self {
            path: path.to_string(),
            table,
            used: BTreeSet::new(),
            out: Map::new(),
            findings: Vec::new(),
        }
    }

    fn key(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a toml::Value> {
        self.used.insert(key.to_string());
        self.table.and_then(|t| t.get(key))
    }

    fn bad(&mut self, key: &str, want: &str, got: &toml::Value) {
        let k = self.key(key);
        self.findings
            .push(format!("{k}: expected {want}, got {}", describe(got)));
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        let v = match self.get(key) {
            None => default,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(other) => {
                self.bad(key, "a nonnegative integer", other);
                default
            }
        };
        self.out.insert(key.into(), json!(v));
        v
    }

    fn opt_u64(&mut self, key: &str) -> Option<u64> {
        match self.get(key) {
            None => None,
            Some(toml::Value::Integer(i)) if *i >= 0 => {
                self.out.insert(key.into(), json!(*i));
                Some(*i as u64)
            }
            Some(other) => {
                self.bad(key, "a nonnegative integer", other);
                None
            }
        }
    }

    fn number(&mut self, key: &str, v: &toml::Value) -> Option<Q> {
        let parsed = match v {
            toml::Value::Integer(i) => Some(Q::from_integer((*i).into())),
            toml::Value::Float(f) => q_from_f64(*f).ok(),
            toml::Value::String(s) => parse_q(s).ok(),
            _ => None,
        };
        if parsed.is_none() {
            self.bad(key, "a number or a \"p/q\" string", v);
        }
        parsed
    }

    fn q(&mut self, key: &str, default: Q) -> Q {
        let v = match self.get(key) {
            None => default,
            Some(raw) => self.number(key, raw).unwrap_or(default),
        };
        self.out.insert(key.into(), json!(v.to_string()));
        v
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        let v = match self.get(key) {
            None => default,
            Some(raw) => self.number(key, raw).map(|q| to_f64(&q)).unwrap_or(default),
        };
        self.out.insert(key.into(), json!(v));
        v
    }

    fn string(&mut self, key: &str, default: &str) -> String {
        let v = match self.get(key) {
            None => default.to_string(),
            Some(toml::Value::String(s)) => s.clone(),
            Some(other) => {
                self.bad(key, "a string", other);
                default.to_string()
            }
        };
        self.out.insert(key.into(), json!(v));
        v
    }

    fn int_list(&mut self, key: &str, raw: &toml::Value) -> Option<Vec<i64>> {
        match raw {
            toml::Value::Array(items) => {
                let ints: Option<Vec<i64>> = items.iter().map(|v| v.as_integer()).collect();
                if ints.is_none() {
                    self.bad(key, "an array of integers", raw);
                }
                ints
            }
            _ => {
                self.bad(key, "an array of integers", raw);
                None
            }
        }
    }

    /// An explicit list, or `{ start, stop, step }` with `stop` included.
    fn depths(&mut self, key: &str, default: Vec<usize>) -> Vec<usize> {
        let v = match self.get(key) {
            None => default,
            Some(toml::Value::Table(t)) => {
                let field =
                    |name: &str| t.get(name).and_then(|v| v.as_integer()).filter(|&i| i >= 0);
                match (field("start"), field("stop"), field("step")) {
                    (Some(a), Some(b), Some(s)) if s > 0 => {
                        (a..=b).step_by(s as usize).map(|d| d as usize).collect()
                    }
                    _ => {
                        let k = self.key(key);
                        self.findings.push(format!(
                            "{k}: range needs nonnegative start, stop and positive step"
                        ));
                        default
                    }
                }
            }
            Some(raw) => match self.int_list(key, raw) {
                Some(list) if list.iter().all(|&d| d >= 0) => {
                    list.into_iter().map(|d| d as usize).collect()
                }
                Some(_) => {
                    self.bad(key, "nonnegative depths", raw);
                    default
                }
                None => default,
            },
        };
        if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
            let k = self.key(key);
            self.findings.push(format!(
                "{k}: depths must be nonempty and strictly increasing"
            ));
        }
        self.out.insert(key.into(), json!(v));
        v
    }

    fn symbols(&mut self, key: &str, k: usize) -> Option<Vec<Symbol>> {
        let raw = self.get(key)?;
        let list = self.int_list(key, raw)?;
        if let Some(bad) = list.iter().find(|&&s| s < 1 || s as usize > k) {
            let name = self.key(key);
            self.findings
                .push(format!("{name}: symbol {bad} outside 1..={k}"));
            return None;
        }
        let out: Vec<Symbol> = list.into_iter().map(|s| s as Symbol).collect();
        self.out.insert(key.into(), json!(out));
        Some(out)
    }

    fn point(&mut self, key: &str, dim: usize, default: Point) -> Point {
        let v = match self.get(key) {
            None => default,
            Some(toml::Value::Array(items)) => {
                let parsed: Option<Vec<Q>> = items.iter().map(|it| self.number(key, it)).collect();
                match parsed {
                    Some(p) if p.len() == dim => p,
                    Some(p) => {
                        let k = self.key(key);
                        self.findings
                            .push(format!("{k}: expected {dim} coordinates, got {}", p.len()));
                        default
                    }
                    None => default,
                }
            }
            Some(raw) => {
                self.bad(key, "an array of coordinates", raw);
                default
            }
        };
        if v.iter().any(|c| !crate::exact::in_unit(c)) {
            let k = self.key(key);
            self.findings
                .push(format!("{k}: coordinates must lie in [0, 1]"));
        }
        self.out.insert(
            key.into(),
            json!(v.iter().map(|c| c.to_string()).collect::<Vec<_>>()),
        );
        v
    }

    /// Flags keys that were never read.
    fn finish(mut self, skip: &[&str]) -> (Map<String, Value>, Vec<String>) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(k) && !skip.contains(&k.as_str()) {
                    let name = self.key(k);
                    self.findings.push(format!("unknown key {name}"));
                }
            }
        }
        (self.out, self.findings)
    }
}

fn sub_table<'a>(
    table: Option<&'a Table>,
    key: &str,
    findings: &mut Vec<String>,
    path: &str,
) -> Option<&'a Table> {
    match table?.get(key)? {
        toml::Value::Table(t) => Some(t),
        other => {
            findings.push(format!(
                "{path}{key}: expected a table, got {}",
                describe(other)
            ));
            None
        }
    }
}

fn parse_pl(v: &toml::Value, key: &str, findings: &mut Vec<String>) -> Option<PLMap> {
    let t = v.as_table();
    let nodes = |name: &str| -> Option<Vec<Q>> {
        t?.get(name)?
            .as_array()?
            .iter()
            .map(|x| match x {
                toml::Value::Integer(i) => Some(Q::from_integer((*i).into())),
                toml::Value::Float(f) => q_from_f64(*f).ok(),
                toml::Value::String(s) => parse_q(s).ok(),
                _ => None,
            })
            .collect()
    };
    match (nodes("xs"), nodes("ys")) {
        (Some(xs), Some(ys)) => match PLMap::new(xs, ys) {
            Ok(f) => Some(f),
            Err(e) => {
                findings.push(format!("{key}: {e}"));
                None
            }
        },
        _ => {
            findings.push(format!("{key}: a map needs numeric arrays xs and ys"));
            None
        }
    }
}

fn pl_json(f: &PLMap) -> Value {
    json!({
        "xs": f.breakpoints().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
        "ys": f.values().iter().map(|y| y.to_string()).collect::<Vec<_>>(),
    })
}

fn maps_json(sys: &SkewSystem) -> Value {
    Value::Array(
        sys.maps()
            .iter()
            .map(|m| match m {
                FiberMap::Pl(f) => pl_json(f),
                FiberMap::Product(p) => {
                    json!({ "factors": p.factors().iter().map(pl_json).collect::<Vec<_>>() })
                }
            })
            .collect(),
    )
}

fn inline_maps(items: &toml::Value, findings: &mut Vec<String>) -> Option<Vec<FiberMap>> {
    let arr = match items.as_array() {
        Some(a) if !a.is_empty() => a,
        _ => {
            findings.push("system.maps: expected a nonempty array of maps".into());
            return None;
        }
    };
    let mut out = Vec::new();
    for (i, item) in arr.iter().enumerate() {
        let key = format!("system.maps[{i}]");
        if let Some(factors) = item.as_table().and_then(|t| t.get("factors")) {
            let parts: Option<Vec<PLMap>> = factors
                .as_array()
                .map(|fs| {
                    fs.iter()
                        .enumerate()
                        .map(|(j, f)| parse_pl(f, &format!("{key}.factors[{j}]"), findings))
                        .collect()
                })
                .unwrap_or(None);
            out.push(ProductMap::new(parts?).ok()?.into());
        } else {
            out.push(parse_pl(item, &key, findings)?.into());
        }
    }
    Some(out)
}

fn read_matrix(v: &toml::Value, findings: &mut Vec<String>) -> Option<Vec<Vec<f64>>> {
    let rows = v.as_array()?;
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let Some(cells) = row.as_array() else {
            findings.push(format!("base.transition row {}: expected an array", i + 1));
            return None;
        };
        let mut parsed = Vec::new();
        for c in cells {
            let value = match c {
                toml::Value::Integer(n) => Some(*n as f64),
                toml::Value::Float(f) => Some(*f),
                toml::Value::String(s) => parse_q(s).ok().map(|q| to_f64(&q)),
                _ => None,
            };
            match value {
                Some(x) => parsed.push(x),
                None => {
                    findings.push(format!(
                        "base.transition row {}: entry {} is not a number",
                        i + 1,
                        describe(c)
                    ));
                    return None;
                }
            }
        }
        out.push(parsed);
    }
    Some(out)
}

/// Row-level checks with messages that name the offending row.
fn check_matrix(p: &[Vec<f64>], findings: &mut Vec<String>) -> bool {
    let k = p.len();
    let mut ok = true;
    for (i, row) in p.iter().enumerate() {
        if row.len() != k {
            findings.push(format!(
                "base.transition row {}: has {} entries, expected {k}",
                i + 1,
                row.len()
            ));
            ok = false;
            continue;
        }
        if let Some(x) = row.iter().find(|x| **x < 0.0) {
            findings.push(format!("base.transition row {}: negative entry {x}", i + 1));
            ok = false;
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            findings.push(format!(
                "base.transition row {}: entries sum to {sum}, expected 1",
                i + 1
            ));
            ok = false;
        }
    }
    ok
}

fn build_system(root: &Table, seed: u64, findings: &mut Vec<String>) -> Option<(ZooSystem, Value)> {
    let sys_table = sub_table(Some(root), "system", findings, "");
    let mut r = Reader::new("system", sys_table);
    let preset = match r.get("preset") {
        None => None,
        Some(toml::Value::String(s)) => Some(s.clone()),
        Some(other) => {
            r.bad("preset", "a string", other);
            None
        }
    };
    let built: Option<ZooSystem> = match preset.as_deref() {
        None => {
            let maps = r.get("maps").and_then(|m| inline_maps(m, &mut r.findings));
            if maps.is_none() && r.table.and_then(|t| t.get("maps")).is_none() {
                r.findings
                    .push("system: give either a preset or inline maps".into());
            }
            maps.and_then(|maps| {
                let spec = MarkovSpec::uniform(maps.len().max(2)).ok()?;
                match SkewSystem::new(spec, maps) {
                    Ok(system) => Some(ZooSystem {
                        name: "inline",
                        system,
                        meta: ZooMeta::None,
                    }),
                    Err(e) => {
                        r.findings.push(format!("system.maps: {e}"));
                        None
                    }
                }
            })
        }
        Some(name) => {
            r.out.insert("preset".into(), json!(name));
            let result = match name {
                "binary_ifs" => Ok(zoo::build_binary_ifs()),
                "middle_third" => Ok(zoo::build_middle_third()),
                "porcupine" => Ok(zoo::build_porcupine()),
                "uniform_contraction" => {
                    let c = r.q("c", q(1, 2));
                    let k = r.usize("k", 2);
                    zoo::build_uniform_contraction(c, k)
                }
                "identity" => {
                    let k = r.usize("k", 2);
                    let m = r.usize("m", 1);
                    zoo::build_identity(k, m)
                }
                "contraction_cover" => {
                    let extra = match r.get("extra_maps") {
                        None => Some(vec![]),
                        Some(v) => v
                            .as_array()
                            .map(|a| {
                                a.iter()
                                    .enumerate()
                                    .map(|(i, f)| {
                                        parse_pl(
                                            f,
                                            &format!("system.extra_maps[{i}]"),
                                            &mut r.findings,
                                        )
                                    })
                                    .collect::<Option<Vec<_>>>()
                            })
                            .unwrap_or(None),
                    };
                    match extra {
                        Some(e) => zoo::build_contraction_cover(e),
                        None => Err(crate::Error::InvalidParameter(
                            "unreadable extra_maps".into(),
                        )),
                    }
                }
                "msplits" => {
                    let m = r.usize("m", 1);
                    let p11 = r.f64("p11", 0.5);
                    let p21 = r.f64("p21", 0.5);
                    zoo::build_msplits(m, p11, p21)
                }
                "theorem2" => {
                    let m = r.usize("m", 2);
                    zoo::build_theorem2_family(m)
                }
                other => {
                    let names: Vec<&str> = zoo::PRESETS.iter().map(|p| p.0).collect();
                    r.findings.push(format!(
                        "system.preset: unknown preset {other:?} (known: {})",
                        names.join(", ")
                    ));
                    return finish_failed(r, findings);
                }
            };
            match result {
                Ok(z) => Some(z),
                Err(e) => {
                    r.findings.push(format!("system: {e}"));
                    None
                }
            }
        }
    };

    // optional perturbation
    let perturb = sub_table(sys_table, "perturb", &mut r.findings, "system.");
    r.used.insert("perturb".into());
    let mut perturb_json = Value::Null;
    let mut zoo_system = built;
    if perturb.is_some() {
        let mut pr = Reader::new("system.perturb", perturb);
        let delta = pr.q("delta", q(1, 1000));
        let pseed = pr.opt_u64("seed").unwrap_or(seed);
        pr.out.insert("seed".into(), json!(pseed));
        let (out, f) = pr.finish(&[]);
        r.findings.extend(f);
        perturb_json = Value::Object(out);
        if let Some(z) = zoo_system.as_mut() {
            match zoo::perturb_system(&z.system, &delta, pseed) {
                Ok(s) => z.system = s,
                Err(e) => r.findings.push(format!("system.perturb: {e}")),
            }
        }
    }
    let (mut out, f) = r.finish(&["maps"]);
    findings.extend(f);
    if !perturb_json.is_null() {
        out.insert("perturb".into(), perturb_json);
    }
    let mut zoo_system = zoo_system?;

    // base override
    let base = sub_table(Some(root), "base", findings, "");
    let mut base_json = Value::Null;
    if let Some(b) = base {
        let mut br = Reader::new("base", Some(b));
        let transition = br
            .get("transition")
            .and_then(|v| read_matrix(v, &mut br.findings));
        let stationary = br.get("stationary").map(|v| match v.as_array() {
            Some(a) => a
                .iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)))
                .collect(),
            None => None,
        });
        let (_, f) = br.finish(&[]);
        findings.extend(f);
        let Some(p) = transition else {
            findings.push("base.transition: required when [base] is present".into());
            return None;
        };
        if !check_matrix(&p, findings) {
            return None;
        }
        let spec = match stationary {
            None => MarkovSpec::new(p.clone()),
            Some(Some(pi)) => MarkovSpec::with_stationary(p.clone(), pi),
            Some(None) => {
                findings.push("base.stationary: expected an array of numbers".into());
                return None;
            }
        };
        let spec = match spec {
            Ok(s) => s,
            Err(e) => {
                findings.push(format!("base: {e}"));
                return None;
            }
        };
        base_json = json!({ "transition": p, "stationary": spec.stationary() });
        match SkewSystem::new(spec, zoo_system.system.maps().to_vec()) {
            Ok(s) => zoo_system.system = s,
            Err(e) => {
                findings.push(format!("base: {e}"));
                return None;
            }
        }
    }
    if base_json.is_null() {
        let spec = zoo_system.system.spec();
        base_json = json!({ "transition": spec.transition(), "stationary": spec.stationary() });
    }
    out.insert("maps".into(), maps_json(&zoo_system.system));
    Some((zoo_system, json!({ "system": out, "base": base_json })))
}

fn finish_failed(r: Reader<'_>, findings: &mut Vec<String>) -> Option<(ZooSystem, Value)> {
    let (_, f) = r.finish(&["maps", "perturb", "c", "k", "m", "p11", "p21", "extra_maps"]);
    findings.extend(f);
    None
}

/// Reads `past`, `past_tail`, `future` and `future_tail` (default: the past
/// tail).
fn read_theta(r: &mut Reader<'_>, key: &str, k: usize) -> Option<SymbolWindow> {
    let raw = r.get(key)?;
    let Some(t) = raw.as_table() else {
        r.bad(
            key,
            "a table with past, past_tail, future and future_tail",
            raw,
        );
        return None;
    };
    let mut tr = Reader::new(&r.key(key), Some(t));
    let past = tr.symbols("past", k).unwrap_or_default();
    tr.out.insert("past".into(), json!(past));
    let past_tail = tr.symbols("past_tail", k);
    let future = tr.symbols("future", k).unwrap_or_default();
    tr.out.insert("future".into(), json!(future));
    let future_tail = tr.symbols("future_tail", k).or_else(|| past_tail.clone());
    let (out, f) = tr.finish(&[]);
    r.findings.extend(f);
    let Some(past_tail) = past_tail.filter(|t| !t.is_empty()) else {
        let name = r.key(key);
        r.findings
            .push(format!("{name}.past_tail: required, nonempty"));
        return None;
    };
    let future_tail = future_tail.unwrap_or_else(|| past_tail.clone());
    let mut out = out;
    out.insert("future_tail".into(), json!(future_tail));
    r.out.insert(key.into(), Value::Object(out));
    match SymbolWindow::from_past(k, &past, &past_tail, &future, &future_tail) {
        Ok(w) => Some(w),
        Err(e) => {
            let name = r.key(key);
            r.findings.push(format!("{name}: {e}"));
            None
        }
    }
}

fn require_theta(r: &mut Reader<'_>, k: usize) -> Option<SymbolWindow> {
    let theta = read_theta(r, "theta", k);
    if theta.is_none() && r.table.and_then(|t| t.get("theta")).is_none() {
        let name = r.key("theta");
        r.findings
            .push(format!("{name}: required for this experiment"));
    }
    theta
}

fn default_depths(start: usize, stop: usize, step: usize) -> Vec<usize> {
    (start..=stop).step_by(step).collect()
}

fn check_word_admissible(r: &mut Reader<'_>, name: &str, word: &[Symbol], spec: &MarkovSpec) {
    if word.is_empty() {
        let k = r.key(name);
        r.findings
            .push(format!("{k}: splitting words must be nonempty"));
        return;
    }
    if let Some(w) = word.windows(2).find(|w| spec.p(w[0], w[1]) <= 0.0) {
        let k = r.key(name);
        r.findings.push(format!(
            "{k}: split word {word:?} is not admissible: transition {} -> {} has probability 0",
            w[0], w[1]
        ));
    }
}

fn read_experiment(
    root: &Table,
    zoo: &ZooSystem,
    seed: u64,
    findings: &mut Vec<String>,
) -> Option<(String, Experiment, Value)> {
    let Some(table) = sub_table(Some(root), "experiment", findings, "") else {
        if root.get("experiment").is_none() {
            findings.push("experiment: section required".into());
        }
        return None;
    };
    let sys = &zoo.system;
    let (k, m) = (sys.alphabet_size(), sys.dim());
    let mut r = Reader::new("experiment", Some(table));
    let kind = r.string("kind", "");
    let exp = match kind.as_str() {
        "code" => {
            let theta = require_theta(&mut r, k);
            let max_depth = r.usize("max_depth", 1000);
            let tol = r.f64("tol", DEFAULT_SINGLETON_TOL);
            theta.map(|theta| Experiment::Code {
                theta,
                max_depth,
                tol,
            })
        }
        "spine" => {
            let theta = require_theta(&mut r, k);
            let depth = r.usize("depth", 200);
            let over = r.string("over", "target");
            if over != "target" && over != "fiber" {
                r.findings.push(format!(
                    "experiment.over: expected \"target\" or \"fiber\", got {over:?}"
                ));
            }
            let target_iter = r.usize("target_max_iter", 500);
            let target_tol = r.f64("target_tol", 1e-6);
            theta.map(|theta| Experiment::Spine {
                theta,
                depth,
                over_target: over == "target",
                target_iter,
                target_tol,
            })
        }
        "target" => {
            let max_iter = r.usize("max_iter", 500);
            let tol = r.f64("tol", 1e-6);
            Some(Experiment::Target { max_iter, tol })
        }
        "split-check" => {
            let defaults = match &zoo.meta {
                ZooMeta::Splitting { word_a, word_b, .. } => Some((word_a.clone(), word_b.clone())),
                _ => None,
            };
            let a = r
                .symbols("word_a", k)
                .or_else(|| defaults.as_ref().map(|d| d.0.clone()));
            let b = r
                .symbols("word_b", k)
                .or_else(|| defaults.as_ref().map(|d| d.1.clone()));
            let sweep_words = r.usize("sweep_words", 1000);
            let sweep_max_len = r.usize("sweep_max_len", 20);
            match (a, b) {
                (Some(a), Some(b)) => {
                    r.out.insert("word_a".into(), json!(a));
                    r.out.insert("word_b".into(), json!(b));
                    check_word_admissible(&mut r, "word_a", &a, sys.spec());
                    check_word_admissible(&mut r, "word_b", &b, sys.spec());
                    Some(Experiment::SplitCheck {
                        word_a: a,
                        word_b: b,
                        sweep_words,
                        sweep_max_len,
                    })
                }
                _ => {
                    r.findings.push("experiment.word_a/word_b: required unless the preset provides splitting words".into());
                    None
                }
            }
        }
        "decay" => {
            let depths = r.depths("depths", default_depths(10, 200, 10));
            let n_samples = r.usize("n_samples", 200);
            if n_samples < 100 {
                r.findings
                    .push("experiment.n_samples: at least 100 required".into());
            }
            Some(Experiment::Decay { depths, n_samples })
        }
        "wasserstein-curve" => {
            let n_atoms = r.usize("n_atoms", 500);
            let depths = r.depths("depths", default_depths(0, 60, 5));
            let word_length = r.usize("word_length", 80);
            let base_depth = r.usize("base_depth", 20);
            let tol = r.f64("tol", DEFAULT_SINGLETON_TOL);
            let law_name = r.string("fiber_law", "uniform");
            let law = match law_name.as_str() {
                "uniform" => Some(FiberLaw::Uniform),
                "dirac" => Some(FiberLaw::DiracAt(r.point("dirac_at", m, vec![q(1, 2); m]))),
                "grid" => Some(FiberLaw::GridOf(r.usize("grid", 10).max(1))),
                other => {
                    r.findings.push(format!(
                        "experiment.fiber_law: unknown law {other:?} (uniform, dirac, grid)"
                    ));
                    None
                }
            };
            let reference = match r.string("reference", "shared_base").as_str() {
                "shared_base" => Some(Reference::SharedBase),
                "fresh" => Some(Reference::Fresh),
                other => {
                    r.findings.push(format!(
                        "experiment.reference: unknown value {other:?} (shared_base, fresh)"
                    ));
                    None
                }
            };
            if 2 * n_atoms > crate::measures::ATOM_BUDGET {
                r.findings.push(format!(
                    "experiment.n_atoms: {n_atoms} per side exceeds the exact solver budget of {} atoms in total",
                    crate::measures::ATOM_BUDGET
                ));
            }
            match (law, reference) {
                (Some(law), Some(reference)) => Some(Experiment::WassersteinCurve {
                    n_atoms,
                    law,
                    depths,
                    word_length,
                    base_depth,
                    tol,
                    reference,
                }),
                _ => None,
            }
        }
        "sync-curve" => {
            let depths = r.depths("depths", default_depths(0, 60, 5));
            let max_depth = r.usize("max_depth", 400);
            let tol = r.f64("tol", 1e-12);
            let x = r.point("x", m, vec![q(1, 2); m]);
            let theta = match read_theta(&mut r, "theta", k) {
                Some(t) => Some(t),
                None if table.get("theta").is_none() => {
                    let half = max_depth + depths.last().copied().unwrap_or(0);
                    r.out.insert(
                        "theta".into(),
                        json!(format!("markov sample, half width {half}")),
                    );
                    Some(sys.spec().sample_window(half, &mut rng::stream(seed, 0)))
                }
                None => None,
            };
            theta.map(|theta| Experiment::SyncCurve {
                theta,
                x,
                depths,
                max_depth,
                tol,
            })
        }
        "omega" => {
            let burn_in = r.usize("burn_in", 1000);
            let n_iter = r.usize("n_iter", 100_000);
            let n_atoms = r.usize("n_atoms", 100);
            let word_length = r.usize("word_length", 60);
            let tol = r.f64("tol", DEFAULT_SINGLETON_TOL);
            let cylinder_depth = r.usize("cylinder_depth", 3).max(1);
            let threshold = r.f64("threshold", 0.05);
            let x: Vec<f64> = r
                .point("x", m, vec![q(1, 2); m])
                .iter()
                .map(to_f64)
                .collect();
            let theta = match read_theta(&mut r, "theta", k) {
                Some(t) => Some(t),
                None if table.get("theta").is_none() => {
                    let l = r.usize("disjunctive_word_length", 4);
                    match disjunctive_base(k, l, burn_in + n_iter + cylinder_depth) {
                        Ok(w) => Some(w),
                        Err(e) => {
                            r.findings.push(format!("experiment.theta: {e}"));
                            None
                        }
                    }
                }
                None => None,
            };
            theta.map(|theta| Experiment::Omega {
                theta,
                x,
                burn_in,
                n_iter,
                n_atoms,
                word_length,
                tol,
                cylinder_depth,
                threshold,
            })
        }
        "graph-sample" => {
            let n_points = r.usize("n_points", 100);
            let word_length = r.usize("word_length", 60);
            let tol = r.f64("tol", DEFAULT_SINGLETON_TOL);
            Some(Experiment::GraphSample {
                n_points,
                word_length,
                tol,
            })
        }
        "" => {
            r.findings.push(format!(
                "experiment.kind: required (one of {})",
                EXPERIMENTS.join(", ")
            ));
            None
        }
        other => {
            r.findings.push(format!(
                "experiment.kind: unknown experiment {other:?} (one of {})",
                EXPERIMENTS.join(", ")
            ));
            None
        }
    };
    let (out, f) = r.finish(&[]);
    let clean = f.is_empty();
    findings.extend(f);
    match exp {
        Some(e) if clean => Some((kind, e, Value::Object(out))),
        _ => None,
    }
}

/// Parses and validates a configuration. `seed_override` replaces the
/// configured seed.
pub fn load(text: &str, seed_override: Option<u64>) -> Result<Resolved, Vec<String>> {
    let root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(vec![format!("config is not valid TOML: {e}")]),
    };
    let mut findings = Vec::new();
    let mut top = Reader::new("", Some(&root));
    let seed = top.opt_u64("seed");
    let seed = seed_override.or(seed);
    if seed.is_none() {
        findings.push("seed required".to_string());
    }
    let out_table = sub_table(Some(&root), "output", &mut findings, "");
    let out_dir = out_table.and_then(|t| {
        let mut or = Reader::new("output", Some(t));
        let dir = or.string("dir", "");
        let (_, f) = or.finish(&[]);
        findings.extend(f);
        (!dir.is_empty()).then(|| PathBuf::from(dir))
    });
    let (_, f) = top.finish(&["system", "base", "experiment", "output"]);
    findings.extend(f);

    let seed_value = seed.unwrap_or(0);
    let system = build_system(&root, seed_value, &mut findings);
    let experiment = system
        .as_ref()
        .and_then(|(z, _)| read_experiment(&root, z, seed_value, &mut findings));
    if !findings.is_empty() {
        return Err(findings);
    }
    let ((zoo, sys_json), (kind, experiment, exp_json)) = match (system, experiment) {
        (Some(s), Some(e)) => (s, e),
        _ => return Err(vec!["configuration could not be resolved".into()]),
    };
    let mut config = sys_json;
    config["seed"] = json!(seed_value);
    config["experiment"] = exp_json;
    if let Some(d) = &out_dir {
        config["output"] = json!({ "dir": d.to_string_lossy() });
    }
    Ok(Resolved {
        zoo,
        kind,
        experiment,
        seed: seed_value,
        out_dir,
        config,
    })
}

/// Builds only the system: `[system]`, optional `[base]` and an optional
/// `seed` used by `[system.perturb]`.
pub fn load_system(text: &str) -> Result<ZooSystem, Vec<String>> {
    let root: Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(vec![format!("config is not valid TOML: {e}")]),
    };
    let mut findings = Vec::new();
    let seed = root
        .get("seed")
        .and_then(|v| v.as_integer())
        .unwrap_or(0)
        .max(0) as u64;
    let system = build_system(&root, seed, &mut findings);
    match system {
        Some((z, _)) if findings.is_empty() => Ok(z),
        _ => Err(findings),
    }
}

/// Findings of a validation pass; empty means runnable.
pub fn validate(text: &str) -> Vec<String> {
    load(text, None).err().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config() {
        let text = r#"
            seed = 1
            [system]
            preset = "binary_ifs"
            [experiment]
            kind = "code"
            theta = { past_tail = [2] }
        "#;
        assert!(validate(text).is_empty(), "{:?}", validate(text));
        let r = load(text, None).unwrap();
        assert_eq!(r.kind, "code");
        assert_eq!(r.config["experiment"]["max_depth"], json!(1000));
        assert_eq!(r.config["experiment"]["theta"]["future_tail"], json!([2]));
    }

    #[test]
    fn missing_seed() {
        let text = "[system]\npreset = \"binary_ifs\"\n[experiment]\nkind = \"target\"\n";
        assert_eq!(validate(text), vec!["seed required".to_string()]);
        assert!(load(text, Some(4)).is_ok());
    }

    #[test]
    fn row_sum_names_row() {
        let text = r#"
            seed = 1
            [system]
            preset = "binary_ifs"
            [base]
            transition = [[0.5, 0.5], [0.5, 0.4]]
            [experiment]
            kind = "target"
        "#;
        let f = validate(text);
        assert_eq!(f.len(), 1);
        assert!(f[0].contains("row 2") && f[0].contains("0.9"), "{f:?}");
    }

    #[test]
    fn inadmissible_split_words() {
        let text = r#"
            seed = 1
            [system]
            preset = "msplits"
            p11 = 0
            [experiment]
            kind = "split-check"
            word_a = [1, 1, 2]
            word_b = [2, 2, 2]
        "#;
        let f = validate(text);
        assert!(
            f.iter()
                .any(|m| m.contains("word_a") && m.contains("not admissible")),
            "{f:?}"
        );
    }

    #[test]
    fn rationals_and_unknown_keys() {
        let text = r#"
            seed = 1
            [system]
            preset = "uniform_contraction"
            c = "1/3"
            colour = "red"
            [experiment]
            kind = "decay"
            depths = { start = 2, stop = 10, step = 4 }
        "#;
        let f = validate(text);
        assert_eq!(f, vec!["unknown key system.colour".to_string()]);
        let r = load(&text.replace("colour = \"red\"", ""), None).unwrap();
        assert_eq!(r.config["system"]["c"], json!("1/3"));
        assert_eq!(r.config["experiment"]["depths"], json!([2, 6, 10]));
    }

    #[test]
    fn inline_maps() {
        let text = r#"
            seed = 3
            [system]
            maps = [
                { xs = [0, 1], ys = [0, "1/2"] },
                { xs = [0, 1], ys = ["1/2", 1] },
            ]
            [experiment]
            kind = "target"
        "#;
        let r = load(text, None).unwrap();
        assert_eq!(r.zoo.system.alphabet_size(), 2);
        let bad = text.replace("ys = [0, \"1/2\"]", "ys = [\"1/2\", 0]");
        assert!(!validate(&bad).is_empty());
    }

    #[test]
    fn unknown_preset_and_kind() {
        let f = validate("seed = 1\n[system]\npreset = \"nope\"\n[experiment]\nkind = \"code\"\n");
        assert!(f.iter().any(|m| m.contains("unknown preset")));
        let f = validate(
            "seed = 1\n[system]\npreset = \"binary_ifs\"\n[experiment]\nkind = \"dance\"\n",
        );
        assert!(f.iter().any(|m| m.contains("unknown experiment")));
    }
}
