//! Parameter search: coordinate hill climbing (one parameter varied at a
//! time around the current point) followed by an exhaustive two-value grid
//! over the most effective parameters.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfs::CfsParams;

pub type ParamSet = BTreeMap<String, f64>;
pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum TuneError {
    #[error("evaluation failed for {params:?}: {source}")]
    Eval {
        params: ParamSet,
        #[source]
        source: BoxError,
    },
    #[error("invalid search space: {0}")]
    Space(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// Candidate values for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    /// A fixed list; the current value is always added.
    Candidates { candidates: Vec<f64> },
    /// Up to five values centered on the current one: `v ± step·{1,2}`
    /// (linear) or `v · step^{±1,±2}` (log), clamped to `[min, max]`.
    Stepped {
        step: f64,
        #[serde(default)]
        scale: Scale,
        #[serde(default = "neg_inf")]
        min: f64,
        #[serde(default = "pos_inf")]
        max: f64,
        #[serde(default)]
        integer: bool,
    },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

impl Axis {
    /// Sorted, de-duplicated candidates around `current` (always included).
    pub fn candidates(&self, current: f64) -> Vec<f64> {
        let mut vals = match self {
            Axis::Candidates { candidates } => candidates.clone(),
            Axis::Stepped { step, scale, min, max, integer } => (-2i32..=2)
                .map(|k| match scale {
                    Scale::Linear => current + f64::from(k) * step,
                    Scale::Log => current * step.powi(k),
                })
                .map(|v| if *integer { v.round() } else { v })
                .filter(|v| v.is_finite() && *v >= *min && *v <= *max)
                .collect(),
        };
        vals.push(current);
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "lowercase")]
pub enum StopRule {
    /// Stop when a round improves the score by at most this many units.
    Absolute(f64),
    /// Stop when a round improves the score by at most this fraction.
    Relative(f64),
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Absolute(5.0)
    }
}

impl StopRule {
    fn should_stop(&self, before: f64, after: f64) -> bool {
        match *self {
            StopRule::Absolute(t) => after - before <= t,
            StopRule::Relative(t) => {
                let base = before.abs().max(f64::EPSILON);
                (after - before) / base <= t
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub parameters: BTreeMap<String, Axis>,
    pub stop: StopRule,
    pub max_rounds: usize,
    /// How many parameters the grid refinement uses.
    pub grid_top: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self { parameters: BTreeMap::new(), stop: StopRule::default(), max_rounds: 10, grid_top: 5 }
    }
}

impl SearchSpace {
    /// Upper bound on distinct evaluations of [`tune`]: the starting point,
    /// per round every candidate plus the combined move, and the grid.
    pub fn evaluation_budget(&self) -> usize {
        let per_round: usize = self
            .parameters
            .values()
            .map(|axis| match axis {
                Axis::Candidates { candidates } => candidates.len() + 1,
                Axis::Stepped { .. } => 5,
            })
            .sum();
        1 + self.max_rounds * (per_round + 1) + (1usize << self.grid_top.min(self.parameters.len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    /// Varied parameter; `"initial"`, `"combined"` or `"grid"` for other
    /// evaluations.
    pub parameter: String,
    pub value: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct HillClimbResult {
    pub best: ParamSet,
    pub score: f64,
    pub trace: Vec<TraceRow>,
    pub rounds: usize,
    /// Parameters ranked by the best score reached while varying them in
    /// the last round they were varied, best first, with that round's
    /// runner-up value.
    pub ranking: Vec<(String, f64, Option<f64>)>,
    pub evaluations: usize,
}

/// Memoizing evaluator; counts distinct evaluations.
struct Evaluator<'a, F> {
    f: &'a F,
    cache: Mutex<HashMap<Vec<(String, u64)>, f64>>,
}

impl<'a, F, E> Evaluator<'a, F>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    fn new(f: &'a F) -> Self {
        Self { f, cache: Mutex::new(HashMap::new()) }
    }

    fn key(p: &ParamSet) -> Vec<(String, u64)> {
        p.iter().map(|(k, v)| (k.clone(), v.to_bits())).collect()
    }

    fn eval(&self, p: &ParamSet) -> Result<f64, TuneError> {
        let key = Self::key(p);
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let v = (self.f)(p).map_err(|e| TuneError::Eval { params: p.clone(), source: e.into() })?;
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }

    fn count(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

fn with(p: &ParamSet, name: &str, v: f64) -> ParamSet {
    let mut q = p.clone();
    q.insert(name.to_string(), v);
    q
}

/// Coordinate hill climbing from `initial` over the parameters of `space`.
pub fn hill_climb<F, E>(space: &SearchSpace, initial: &ParamSet, eval_fn: &F) -> Result<HillClimbResult, TuneError>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    let ev = Evaluator::new(eval_fn);
    hill_climb_with(space, initial, &ev)
}

fn hill_climb_with<F, E>(
    space: &SearchSpace,
    initial: &ParamSet,
    ev: &Evaluator<'_, F>,
) -> Result<HillClimbResult, TuneError>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    for name in space.parameters.keys() {
        if !initial.contains_key(name) {
            return Err(TuneError::Space(format!("no initial value for {name}")));
        }
    }
    let mut current = initial.clone();
    let mut score = ev.eval(&current)?;
    let mut trace = vec![TraceRow { round: 0, parameter: "initial".into(), value: f64::NAN, accuracy: score }];
    let mut active: Vec<String> = space.parameters.keys().cloned().collect();
    // name -> (best score while varied, runner-up value) from its last varied round
    let mut effect: BTreeMap<String, (f64, Option<f64>)> = BTreeMap::new();
    let mut rounds = 0;

    while rounds < space.max_rounds && !active.is_empty() {
        rounds += 1;
        let jobs: Vec<(String, f64)> = active
            .iter()
            .flat_map(|name| {
                space.parameters[name]
                    .candidates(current[name])
                    .into_iter()
                    .map(move |v| (name.clone(), v))
            })
            .collect();
        let scores: Vec<f64> = jobs
            .par_iter()
            .map(|(name, v)| ev.eval(&with(&current, name, *v)))
            .collect::<Result<_, _>>()?;

        let mut moves: BTreeMap<String, (f64, f64)> = BTreeMap::new();
        for name in &active {
            let mut tried: Vec<(f64, f64)> = jobs
                .iter()
                .zip(&scores)
                .filter(|((n, _), _)| n == name)
                .map(|((_, v), s)| (*v, *s))
                .collect();
            for &(v, s) in &tried {
                trace.push(TraceRow { round: rounds, parameter: name.clone(), value: v, accuracy: s });
            }
            // best first; ties keep the current value, then the smaller value
            let cur = current[name];
            tried.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| (b.0 == cur).cmp(&(a.0 == cur)))
                    .then_with(|| a.0.total_cmp(&b.0))
            });
            effect.insert(name.clone(), (tried[0].1, tried.get(1).map(|t| t.0)));
            if tried[0].1 > score && tried[0].0 != cur {
                moves.insert(name.clone(), tried[0]);
            }
        }
        if moves.is_empty() {
            break;
        }

        let mut combined = current.clone();
        for (name, (v, _)) in &moves {
            combined.insert(name.clone(), *v);
        }
        let combined_score = ev.eval(&combined)?;
        trace.push(TraceRow { round: rounds, parameter: "combined".into(), value: f64::NAN, accuracy: combined_score });
        let (best_name, (best_v, best_s)) = moves
            .iter()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then_with(|| b.0.cmp(a.0)))
            .map(|(n, m)| (n.clone(), *m))
            .expect("non-empty");
        let before = score;
        if combined_score >= best_s {
            current = combined;
            score = combined_score;
            active = moves.keys().cloned().collect();
        } else {
            // joint move interferes; keep only the strongest single move
            current.insert(best_name.clone(), best_v);
            score = best_s;
            active = vec![best_name];
        }
        if space.stop.should_stop(before, score) {
            break;
        }
    }

    let mut ranking: Vec<(String, f64, Option<f64>)> =
        effect.into_iter().map(|(n, (s, runner))| (n, s, runner)).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(HillClimbResult { best: current, score, trace, rounds, ranking, evaluations: ev.count() })
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub best: ParamSet,
    pub score: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
}

/// Exhaustive search over two values per parameter in `values` (the first
/// of each pair is normally the current value). Combinations are visited
/// with parameters in name order, first values first; the first
/// combination with the highest score wins.
pub fn grid_refine<F, E>(
    params: &ParamSet,
    values: &BTreeMap<String, [f64; 2]>,
    eval_fn: &F,
) -> Result<GridResult, TuneError>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    let ev = Evaluator::new(eval_fn);
    grid_refine_with(params, values, &ev, 0)
}

fn grid_refine_with<F, E>(
    params: &ParamSet,
    values: &BTreeMap<String, [f64; 2]>,
    ev: &Evaluator<'_, F>,
    round: usize,
) -> Result<GridResult, TuneError>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    let names: Vec<&String> = values.keys().collect();
    let n = names.len();
    let combos: Vec<ParamSet> = (0..1usize << n)
        .map(|mask| {
            let mut p = params.clone();
            for (i, name) in names.iter().enumerate() {
                // the first name varies slowest
                let bit = (mask >> (n - 1 - i)) & 1;
                p.insert((*name).clone(), values[*name][bit]);
            }
            p
        })
        .collect();
    let scores: Vec<f64> = combos.par_iter().map(|p| ev.eval(p)).collect::<Result<_, _>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    let trace = scores
        .iter()
        .map(|&s| TraceRow { round, parameter: "grid".into(), value: f64::NAN, accuracy: s })
        .collect();
    Ok(GridResult { best: combos[best].clone(), score: scores[best], evaluations: combos.len(), trace })
}

#[derive(Debug, Clone)]
pub struct TuneResult {
    pub best: ParamSet,
    pub score: f64,
    pub initial_score: f64,
    pub trace: Vec<TraceRow>,
    /// Distinct parameter sets evaluated.
    pub evaluations: usize,
    pub grid_parameters: Vec<String>,
}

/// Hill climbing, then grid refinement of the `space.grid_top` most
/// effective parameters between their final value and the runner-up.
pub fn tune<F, E>(space: &SearchSpace, initial: &ParamSet, eval_fn: &F) -> Result<TuneResult, TuneError>
where
    F: Fn(&ParamSet) -> Result<f64, E> + Sync,
    E: Into<BoxError>,
{
    let ev = Evaluator::new(eval_fn);
    let hc = hill_climb_with(space, initial, &ev)?;
    let initial_score = hc.trace[0].accuracy;
    let mut values = BTreeMap::new();
    for (name, _, runner) in hc.ranking.iter().take(space.grid_top) {
        let cur = hc.best[name];
        let alt = runner.filter(|r| *r != cur).unwrap_or(cur);
        values.insert(name.clone(), [cur, alt]);
    }
    let mut trace = hc.trace;
    let (best, score) = if values.is_empty() {
        (hc.best, hc.score)
    } else {
        let grid = grid_refine_with(&hc.best, &values, &ev, hc.rounds + 1)?;
        trace.extend(grid.trace);
        if grid.score > hc.score {
            (grid.best, grid.score)
        } else {
            (hc.best, hc.score)
        }
    };
    Ok(TuneResult {
        best,
        score,
        initial_score,
        trace,
        evaluations: ev.count(),
        grid_parameters: values.into_keys().collect(),
    })
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<(), TuneError> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace_csv(trace: &[TraceRow], path: &Path) -> Result<(), TuneError> {
    write_trace_csv(trace, std::fs::File::create(path)?)
}

/// Current values of the named numeric parameters.
pub fn param_set(params: &CfsParams, names: impl IntoIterator<Item = impl AsRef<str>>) -> crate::Result<ParamSet> {
    names
        .into_iter()
        .map(|n| Ok((n.as_ref().to_string(), params.get(n.as_ref())?)))
        .collect()
}

/// `base` with every entry of `set` applied.
pub fn apply_param_set(base: &CfsParams, set: &ParamSet) -> crate::Result<CfsParams> {
    let mut p = base.clone();
    for (k, v) in set {
        p.set(k, *v)?;
    }
    Ok(p)
}
