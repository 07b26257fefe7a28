//! Truth simulation and Monte Carlo harness.
//!
//! Every episode runs the chain filter and a pure absolute-measurement
//! baseline side by side on identical noise draws, audits the containment
//! guarantee against the true states, and accumulates the conservativeness
//! ratio: the 2-D position hull's largest edge under the proposed filter
//! over the same edge under the baseline.
//!
//! Determinism contract: a config plus a master seed fixes every byte of
//! the outputs. Episode seeds are derived from the master seed by run
//! index, and every agent and chain link gets its own derived noise
//! stream, so one agent's draws never depend on how long the chain is.
//! Summaries are merged in run order.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, Rotation2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{
    position_selector, predict, step_chain, update_absolute, AgentModel, AgentRole, ChainState,
    FilterError, MeasurementRecord, StepFlags,
};
use crate::geom::contiguous_span_bound;
use crate::set::{ExtConstrainedZonotope, IntervalHull, ZonotopeRecord};

type Z = ExtConstrainedZonotope<f64>;
type V = DVector<f64>;

pub const STATE_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Piecewise-constant acceleration segment, active from `from_step` until
/// the next segment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Maneuver {
    pub from_step: usize,
    pub accel: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub role: AgentRole,
    /// True initial state `[px, py, vx, vy]`.
    pub start: [f64; 4],
    /// Process-noise half-width per state component.
    pub process_noise: f64,
    /// Absolute-measurement-noise half-width per component.
    pub measurement_noise: f64,
    /// Range-noise interval `[r_lo, r_hi]` on the link to the predecessor.
    #[serde(default = "default_range_noise")]
    pub range_noise: [f64; 2],
    /// Open-loop turn rate (rad/s): the input steers the nominal velocity
    /// onto a circular arc. Zero means straight-line drift.
    #[serde(default)]
    pub turn_rate: f64,
    /// Extra acceleration segments, added on top of the turn input.
    #[serde(default)]
    pub maneuvers: Vec<Maneuver>,
}

fn default_range_noise() -> [f64; 2] {
    [-0.1, 0.1]
}

fn default_burn_in() -> usize {
    5
}

fn default_init_half_width() -> f64 {
    2.0
}

fn default_truth_noise_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Number of filter steps K.
    pub steps: usize,
    /// Sample period in seconds.
    pub period: f64,
    /// Ring segmentation count M.
    pub sectors: usize,
    pub seed: u64,
    /// Monte Carlo episode count.
    pub runs: usize,
    /// Ratio metric starts at step `burn_in` (skips the initial transient).
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Half-width of the initial enclosure box around each true start.
    #[serde(default = "default_init_half_width")]
    pub init_half_width: f64,
    /// Scales the noise actually injected into the truth without changing
    /// the filter's declared bounds. Values above 1 deliberately break the
    /// containment contract; only fault-injection tests should touch this.
    #[serde(default = "default_truth_noise_scale")]
    pub truth_noise_scale: f64,
    pub agents: Vec<AgentConfig>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.steps == 0 {
            return Err(SimError::Config("steps must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(SimError::Config("runs must be at least 1".into()));
        }
        if self.sectors < 8 {
            return Err(SimError::Config(format!(
                "sectors = {} is below the minimum of 8",
                self.sectors
            )));
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(SimError::Config(format!("period = {} s", self.period)));
        }
        if self.init_half_width <= 0.0 {
            return Err(SimError::Config("init_half_width must be positive".into()));
        }
        if self.truth_noise_scale <= 0.0 {
            return Err(SimError::Config("truth_noise_scale must be positive".into()));
        }
        if self.agents.is_empty() {
            return Err(SimError::Config("at least one agent required".into()));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let want = if i == 0 {
                AgentRole::Anchor
            } else {
                AgentRole::Ordinary
            };
            if a.role != want {
                return Err(SimError::Config(format!(
                    "agent {} must have role {:?}",
                    i, want
                )));
            }
            if a.process_noise < 0.0 || a.measurement_noise < 0.0 {
                return Err(SimError::Config(format!(
                    "agent {} has a negative noise half-width",
                    i
                )));
            }
            if a.range_noise[0] > a.range_noise[1] {
                return Err(SimError::Config(format!(
                    "agent {} range noise interval is inverted",
                    i
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: SimConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Double-integrator model shared by all agents: position integrates
    /// velocity, the input is a planar acceleration, the full state is
    /// measured directly.
    pub fn build_models(&self) -> Result<Vec<AgentModel<f64>>, SimError> {
        let t = self.period;
        let mut a = DMatrix::identity(STATE_DIM, STATE_DIM);
        a[(0, 2)] = t;
        a[(1, 3)] = t;
        let mut b = DMatrix::zeros(STATE_DIM, 2);
        b[(0, 0)] = 0.5 * t * t;
        b[(1, 1)] = 0.5 * t * t;
        b[(2, 0)] = t;
        b[(3, 1)] = t;
        self.agents
            .iter()
            .map(|agent| {
                Ok(AgentModel::new(
                    a.clone(),
                    b.clone(),
                    DMatrix::identity(STATE_DIM, STATE_DIM),
                    Z::from_box(V::zeros(STATE_DIM), V::from_element(STATE_DIM, agent.process_noise))
                        .map_err(FilterError::from)?,
                    Z::from_box(
                        V::zeros(STATE_DIM),
                        V::from_element(STATE_DIM, agent.measurement_noise),
                    )
                    .map_err(FilterError::from)?,
                    (agent.range_noise[0], agent.range_noise[1]),
                    agent.role,
                    position_selector(STATE_DIM),
                )?)
            })
            .collect()
    }

    /// Open-loop input schedule per agent: the turn term rotates the
    /// nominal velocity by `turn_rate * period` each step, maneuvers add
    /// their acceleration on top. The nominal velocity tracks both.
    pub fn input_schedules(&self) -> Vec<Vec<V>> {
        self.agents
            .iter()
            .map(|agent| {
                let t = self.period;
                let rot = Rotation2::new(agent.turn_rate * t);
                let mut v_nom = Vector2::new(agent.start[2], agent.start[3]);
                let mut schedule = Vec::with_capacity(self.steps);
                for k in 0..self.steps {
                    let man = agent
                        .maneuvers
                        .iter()
                        .filter(|m| m.from_step <= k)
                        .next_back()
                        .map(|m| Vector2::new(m.accel[0], m.accel[1]))
                        .unwrap_or_else(Vector2::zeros);
                    let turned = rot * v_nom;
                    let u = man + (turned - v_nom) / t;
                    v_nom = v_nom + u * t;
                    schedule.push(V::from_row_slice(&[u[0], u[1]]));
                }
                schedule
            })
            .collect()
    }
}

/// One agent-step of an episode, as written to the record stream.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub k: usize,
    pub agent: usize,
    pub true_state: Vec<f64>,
    pub y_abs: Vec<f64>,
    pub y_rel: Option<f64>,
    pub prior_lo: Vec<f64>,
    pub prior_hi: Vec<f64>,
    pub posterior_lo: Vec<f64>,
    pub posterior_hi: Vec<f64>,
    pub baseline_lo: Vec<f64>,
    pub baseline_hi: Vec<f64>,
    /// The intersection set before hull re-representation.
    pub posterior_set: ZonotopeRecord,
    /// True state is a member of the pre-hull posterior.
    pub contained: bool,
    pub flags: StepFlags,
}

/// Per-agent tallies across one episode.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AgentRunStats {
    pub steps: usize,
    pub containment_breaches: usize,
    pub fallback_steps: usize,
    pub noncontiguous_steps: usize,
    /// Steps where the separation condition held numerically.
    pub separation_held_steps: usize,
    /// Separation held but the active sectors were not contiguous.
    pub contiguity_violations: usize,
    /// Separation held but the window span exceeded its bound.
    pub span_violations: usize,
    /// Baseline-dominance violations: some posterior half-width above the
    /// baseline's on a post-burn-in step.
    pub dominance_violations: usize,
    ratio_sum: f64,
    ratio_count: usize,
    diameter_sum: f64,
    baseline_diameter_sum: f64,
    diameter_count: usize,
}

impl AgentRunStats {
    /// Mean position-hull edge ratio vs the baseline, post burn-in.
    pub fn mean_ratio(&self) -> Option<f64> {
        (self.ratio_count > 0).then(|| self.ratio_sum / self.ratio_count as f64)
    }

    /// Mean largest edge of the position hull, post burn-in.
    pub fn mean_diameter(&self) -> Option<f64> {
        (self.diameter_count > 0).then(|| self.diameter_sum / self.diameter_count as f64)
    }

    pub fn mean_baseline_diameter(&self) -> Option<f64> {
        (self.diameter_count > 0).then(|| self.baseline_diameter_sum / self.diameter_count as f64)
    }
}

#[derive(Debug)]
pub struct RunLog {
    pub run: usize,
    pub records: Vec<StepRecord>,
    pub stats: Vec<AgentRunStats>,
    pub containment_ok: bool,
    /// Noise draws that escaped their declared set (only possible with
    /// truth_noise_scale above 1).
    pub noise_breaches: usize,
    pub aborted: Option<String>,
}

/// Largest edge of the position-block box: twice the larger half-width of
/// the first two hull components.
fn position_diameter(hull: &IntervalHull<f64>) -> f64 {
    let hw = hull.half_widths();
    2.0 * hw[0].max(hw[1])
}

fn to_vec(v: &V) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Uniform draw from the centered box with the given half-widths.
fn sample_box(rng: &mut ChaCha12Rng, half_widths: &V, scale: f64) -> V {
    V::from_fn(half_widths.nrows(), |i, _| {
        let h = half_widths[i] * scale;
        if h == 0.0 {
            0.0
        } else {
            rng.gen_range(-h..=h)
        }
    })
}

/// SplitMix64 step, used to derive independent episode seeds.
fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Runs one seeded episode: truth, measurements, the chain filter, and the
/// absolute-only baseline on identical draws. Filter-level inconsistencies
/// abort the episode and are recorded, not thrown.
pub fn run_episode(config: &SimConfig, run: usize) -> Result<RunLog, SimError> {
    config.validate()?;
    let models = config.build_models()?;
    let schedules = config.input_schedules();
    let n_agents = config.agents.len();
    let selector = position_selector::<f64>(STATE_DIM);

    // Independent derived streams per agent and per link keep each agent's
    // draws invariant under chain length.
    let episode_seed = derive_seed(config.seed, run as u64);
    let mut agent_rngs: Vec<ChaCha12Rng> = (0..n_agents)
        .map(|i| ChaCha12Rng::seed_from_u64(derive_seed(episode_seed, i as u64)))
        .collect();
    let mut link_rngs: Vec<ChaCha12Rng> = (0..n_agents.saturating_sub(1))
        .map(|i| ChaCha12Rng::seed_from_u64(derive_seed(episode_seed, (1u64 << 32) + i as u64)))
        .collect();

    let mut truth: Vec<V> = config
        .agents
        .iter()
        .map(|a| V::from_row_slice(&a.start))
        .collect();

    // Initial enclosures: a box of the configured half-width around the
    // true start, its center offset uniformly within half the half-width
    // so the truth starts away from the center but inside the box.
    let hw = config.init_half_width;
    let init: Vec<Z> = truth
        .iter()
        .zip(agent_rngs.iter_mut())
        .map(|(x, rng)| {
            let offset = sample_box(rng, &V::from_element(STATE_DIM, hw / 2.0), 1.0);
            Z::from_box(x + offset, V::from_element(STATE_DIM, hw))
                .map_err(|e| SimError::Filter(FilterError::from(e)))
        })
        .collect::<Result<_, _>>()?;

    let mut proposed = ChainState::new(init.clone()).map_err(SimError::Filter)?;
    let mut baseline = ChainState::new(init).map_err(SimError::Filter)?;

    let mut records = Vec::with_capacity(config.steps * n_agents);
    let mut stats = vec![AgentRunStats::default(); n_agents];
    let mut containment_ok = true;
    let mut noise_breaches = 0usize;
    let mut aborted = None;
    let span_bound = contiguous_span_bound(config.sectors);

    'steps: for k in 1..=config.steps {
        let inputs: Vec<V> = (0..n_agents).map(|i| schedules[i][k - 1].clone()).collect();

        // Truth propagation and measurement synthesis happen regardless of
        // filter state so both filters see identical draws.
        let mut y_abs = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let model = &models[i];
            let w = sample_box(
                &mut agent_rngs[i],
                &model.process_noise.interval_hull().map_err(FilterError::from)?.half_widths(),
                config.truth_noise_scale,
            );
            if !model.process_noise.contains_point(&w).unwrap_or(false) {
                noise_breaches += 1;
            }
            truth[i] = &model.dynamics * &truth[i] + &model.input * &inputs[i] + w;

            let v = sample_box(
                &mut agent_rngs[i],
                &model
                    .measurement_noise
                    .interval_hull()
                    .map_err(FilterError::from)?
                    .half_widths(),
                config.truth_noise_scale,
            );
            if !model.measurement_noise.contains_point(&v).unwrap_or(false) {
                noise_breaches += 1;
            }
            y_abs.push(&model.observation * &truth[i] + v);
        }
        let mut ranges = Vec::with_capacity(n_agents.saturating_sub(1));
        for i in 1..n_agents {
            let (r_lo, r_hi) = models[i].range_bounds;
            let r = if r_hi > r_lo {
                link_rngs[i - 1].gen_range(r_lo..=r_hi) * config.truth_noise_scale
            } else {
                r_lo
            };
            if r < r_lo - 1e-12 || r > r_hi + 1e-12 {
                noise_breaches += 1;
            }
            let d = (&selector * (&truth[i] - &truth[i - 1])).norm();
            ranges.push(d + r);
        }
        let meas = MeasurementRecord {
            absolute: y_abs,
            ranges,
        };

        let reports = match step_chain(&mut proposed, &meas, &models, &inputs, config.sectors) {
            Ok(r) => r,
            Err(e) => {
                aborted = Some(format!("step {}: {}", k, e));
                containment_ok = false;
                break 'steps;
            }
        };
        let base_hulls = match step_baseline(&mut baseline, &meas, &models, &inputs) {
            Ok(h) => h,
            Err(e) => {
                aborted = Some(format!("step {} (baseline): {}", k, e));
                containment_ok = false;
                break 'steps;
            }
        };

        for i in 0..n_agents {
            let r = &reports[i];
            let s = &mut stats[i];
            s.steps += 1;

            let contained = r.exact.contains_point(&truth[i]).unwrap_or(false);
            if !contained {
                s.containment_breaches += 1;
                containment_ok = false;
            }
            if r.flags.fallback {
                s.fallback_steps += 1;
            }
            if r.flags.noncontiguous {
                s.noncontiguous_steps += 1;
            }
            if r.flags.separation_ok == Some(true) {
                s.separation_held_steps += 1;
                if r.flags.noncontiguous {
                    s.contiguity_violations += 1;
                }
                if r.flags.window_span.map_or(false, |w| w >= span_bound) {
                    s.span_violations += 1;
                }
            }

            if k >= config.burn_in {
                let d_pro = position_diameter(&r.hull);
                let d_abs = position_diameter(&base_hulls[i]);
                s.diameter_sum += d_pro;
                s.baseline_diameter_sum += d_abs;
                s.diameter_count += 1;
                if i > 0 && d_abs > 1e-15 {
                    s.ratio_sum += d_pro / d_abs;
                    s.ratio_count += 1;
                }
                let hw_pro = r.hull.half_widths();
                let hw_abs = base_hulls[i].half_widths();
                if (0..STATE_DIM).any(|d| hw_pro[d] > hw_abs[d] + 1e-7) {
                    s.dominance_violations += 1;
                }
            }

            records.push(StepRecord {
                k,
                agent: i,
                true_state: to_vec(&truth[i]),
                y_abs: to_vec(&meas.absolute[i]),
                y_rel: (i > 0).then(|| meas.ranges[i - 1]),
                prior_lo: to_vec(r.prior_hull.lo()),
                prior_hi: to_vec(r.prior_hull.hi()),
                posterior_lo: to_vec(r.hull.lo()),
                posterior_hi: to_vec(r.hull.hi()),
                baseline_lo: to_vec(base_hulls[i].lo()),
                baseline_hi: to_vec(base_hulls[i].hi()),
                posterior_set: ZonotopeRecord::from(&r.exact),
                contained,
                flags: r.flags.clone(),
            });
        }
    }

    Ok(RunLog {
        run,
        records,
        stats,
        containment_ok,
        noise_breaches,
        aborted,
    })
}

/// Baseline step: identical prediction, absolute-measurement update only.
fn step_baseline(
    state: &mut ChainState<f64>,
    meas: &MeasurementRecord<f64>,
    models: &[AgentModel<f64>],
    inputs: &[V],
) -> Result<Vec<IntervalHull<f64>>, FilterError> {
    let l = state.agents.len();
    let mut hulls = Vec::with_capacity(l);
    for i in 0..l {
        let prior = predict(&state.agents[i].posterior, &models[i], &inputs[i])
            .map_err(|e| FilterError::Set { agent: i, source: e })?;
        let out = update_absolute(i, &prior, &meas.absolute[i], &models[i])?;
        let boxed = out.hull.to_zonotope();
        state.agents[i] = crate::filter::AgentEstimate {
            prior,
            posterior: boxed,
            hull: out.hull.clone(),
        };
        hulls.push(out.hull);
    }
    state.k += 1;
    Ok(hulls)
}

/// One row of the Monte Carlo summary.
#[derive(Debug, Clone, Serialize)]
pub struct McAgentRow {
    pub agent: usize,
    pub role: AgentRole,
    /// Fraction of agent-steps whose pre-hull posterior contained the
    /// true state.
    pub containment_rate: f64,
    /// Mean position-edge ratio vs the baseline (ordinary agents only).
    pub mean_ratio: Option<f64>,
    pub mean_position_diameter: f64,
    pub mean_baseline_diameter: f64,
    pub fallback_rate: f64,
    pub noncontiguous_steps: usize,
    pub separation_held_steps: usize,
    pub contiguity_violations: usize,
    pub span_violations: usize,
    pub dominance_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct McRunRow {
    pub run: usize,
    pub containment_ok: bool,
    pub aborted: Option<String>,
    /// Mean position diameter per agent, post burn-in.
    pub diameters: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct McSummary {
    pub runs: usize,
    pub steps: usize,
    pub sectors: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub total_agent_steps: usize,
    pub total_breaches: usize,
    pub noise_breaches: usize,
    pub aborted_runs: usize,
    pub agents: Vec<McAgentRow>,
    pub per_run: Vec<McRunRow>,
}

impl McSummary {
    pub fn all_contained(&self) -> bool {
        self.total_breaches == 0 && self.aborted_runs == 0
    }
}

/// Runs the configured episode count and merges the tallies in run order.
/// Episodes are independent and run in parallel; the merge is ordered, so
/// the summary is deterministic.
pub fn run_monte_carlo(config: &SimConfig) -> Result<McSummary, SimError> {
    config.validate()?;
    let logs: Vec<RunLog> = (0..config.runs)
        .into_par_iter()
        .map(|run| run_episode(config, run))
        .collect::<Result<_, _>>()?;

    let n_agents = config.agents.len();
    let mut rows: Vec<McAgentRow> = (0..n_agents)
        .map(|i| McAgentRow {
            agent: i,
            role: config.agents[i].role,
            containment_rate: 0.0,
            mean_ratio: None,
            mean_position_diameter: 0.0,
            mean_baseline_diameter: 0.0,
            fallback_rate: 0.0,
            noncontiguous_steps: 0,
            separation_held_steps: 0,
            contiguity_violations: 0,
            span_violations: 0,
            dominance_violations: 0,
        })
        .collect();

    let mut per_run = Vec::with_capacity(logs.len());
    let mut total_steps = 0usize;
    let mut total_breaches = 0usize;
    let mut noise_breaches = 0usize;
    let mut aborted_runs = 0usize;
    let mut acc = vec![(0usize, 0usize, 0f64, 0usize, 0f64, 0f64, 0usize, 0usize); n_agents];

    for log in &logs {
        if log.aborted.is_some() {
            aborted_runs += 1;
        }
        noise_breaches += log.noise_breaches;
        let mut diameters = Vec::with_capacity(n_agents);
        for (i, s) in log.stats.iter().enumerate() {
            total_steps += s.steps;
            total_breaches += s.containment_breaches;
            let a = &mut acc[i];
            a.0 += s.steps;
            a.1 += s.containment_breaches;
            a.2 += s.ratio_sum;
            a.3 += s.ratio_count;
            a.4 += s.diameter_sum;
            a.5 += s.baseline_diameter_sum;
            a.6 += s.diameter_count;
            a.7 += s.fallback_steps;
            let r = &mut rows[i];
            r.noncontiguous_steps += s.noncontiguous_steps;
            r.separation_held_steps += s.separation_held_steps;
            r.contiguity_violations += s.contiguity_violations;
            r.span_violations += s.span_violations;
            r.dominance_violations += s.dominance_violations;
            diameters.push(s.mean_diameter().unwrap_or(0.0));
        }
        per_run.push(McRunRow {
            run: log.run,
            containment_ok: log.containment_ok,
            aborted: log.aborted.clone(),
            diameters,
        });
    }

    for (i, row) in rows.iter_mut().enumerate() {
        let (steps, breaches, ratio_sum, ratio_count, dia_sum, base_sum, dia_count, fallbacks) =
            acc[i];
        row.containment_rate = if steps > 0 {
            1.0 - breaches as f64 / steps as f64
        } else {
            0.0
        };
        row.mean_ratio = (ratio_count > 0).then(|| ratio_sum / ratio_count as f64);
        if dia_count > 0 {
            row.mean_position_diameter = dia_sum / dia_count as f64;
            row.mean_baseline_diameter = base_sum / dia_count as f64;
        }
        row.fallback_rate = if steps > 0 {
            fallbacks as f64 / steps as f64
        } else {
            0.0
        };
    }

    Ok(McSummary {
        runs: config.runs,
        steps: config.steps,
        sectors: config.sectors,
        seed: config.seed,
        burn_in: config.burn_in,
        total_agent_steps: total_steps,
        total_breaches,
        noise_breaches,
        aborted_runs,
        agents: rows,
        per_run,
    })
}

/// Writes `summary.json` and `ratios.csv` into `dir`; both are
/// byte-deterministic functions of the summary. Returns the two paths.
pub fn write_mc_outputs(summary: &McSummary, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(summary).expect("summary serializes");
    json.push('\n');
    std::fs::write(&json_path, json)?;

    let csv_path = dir.join("ratios.csv");
    let mut csv = String::from("agent,mean_ratio,containment_rate,runs\n");
    for row in summary.agents.iter().filter(|r| r.role == AgentRole::Ordinary) {
        let ratio = row
            .mean_ratio
            .map(|r| format!("{:.6}", r))
            .unwrap_or_else(|| "NA".into());
        csv.push_str(&format!(
            "{},{},{:.6},{}\n",
            row.agent, ratio, row.containment_rate, summary.runs
        ));
    }
    std::fs::write(&csv_path, csv)?;
    Ok((json_path, csv_path))
}

/// Writes the per-step record stream of one episode as JSON lines.
pub fn write_run_log(log: &RunLog, path: &Path) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for rec in &log.records {
        serde_json::to_writer(&mut out, rec).expect("record serializes");
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// The four-agent benchmark scenario: an anchor with tight absolute
/// measurements and three chained agents with coarse ones, in rigid
/// rotation so every link's bearing sweeps the full circle. Three orbits
/// over the run keep the radial/tangential mixing strong, which is where
/// the range wedges earn their keep.
pub fn benchmark_config() -> SimConfig {
    let turn = 0.9424777960769379;
    let spacing = 8.0;
    let center = 12.0;
    let mk = |x: f64, role: AgentRole, v_meas: f64| AgentConfig {
        role,
        // Rigid rotation about (center, 0): velocity = turn * perp(offset).
        start: [x, 0.0, 0.0, turn * (x - center)],
        process_noise: 0.1,
        measurement_noise: v_meas,
        range_noise: [-0.1, 0.1],
        turn_rate: turn,
        maneuvers: Vec::new(),
    };
    SimConfig {
        steps: 40,
        period: 0.5,
        sectors: 64,
        seed: 7240,
        runs: 50,
        burn_in: 5,
        init_half_width: 2.0,
        truth_noise_scale: 1.0,
        agents: vec![
            mk(0.0, AgentRole::Anchor, 0.1),
            mk(spacing, AgentRole::Ordinary, 1.0),
            mk(2.0 * spacing, AgentRole::Ordinary, 1.0),
            mk(3.0 * spacing, AgentRole::Ordinary, 1.0),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> SimConfig {
        let mut cfg = benchmark_config();
        cfg.steps = 6;
        cfg.runs = 2;
        cfg.burn_in = 1;
        cfg.agents.truncate(2);
        cfg
    }

    #[test]
    fn validation_catches_bad_configs() {
        let mut cfg = tiny_config();
        cfg.sectors = 4;
        assert!(matches!(cfg.validate(), Err(SimError::Config(_))));

        let mut cfg = tiny_config();
        cfg.agents[1].role = AgentRole::Anchor;
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.agents.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.steps = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip_preserves_config() {
        let cfg = benchmark_config();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back = SimConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let cfg = benchmark_config();
        let mut text = toml::to_string_pretty(&cfg).unwrap();
        text.insert_str(0, "typo_field = 1\n");
        assert!(matches!(
            SimConfig::from_toml_str(&text),
            Err(SimError::Parse(_))
        ));
    }

    #[test]
    fn turn_schedule_rotates_velocity() {
        let mut cfg = tiny_config();
        cfg.agents[0].turn_rate = std::f64::consts::FRAC_PI_2; // quarter turn per second
        cfg.agents[0].start = [0.0, 0.0, 1.0, 0.0];
        let schedule = &cfg.input_schedules()[0];
        // After 4 steps of T=0.5 s the nominal velocity has turned by pi.
        let mut v = Vector2::new(1.0, 0.0);
        for u in schedule.iter().take(4) {
            v += Vector2::new(u[0], u[1]) * cfg.period;
        }
        assert!((v - Vector2::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn episode_is_deterministic() {
        let cfg = tiny_config();
        let a = run_episode(&cfg, 0).unwrap();
        let b = run_episode(&cfg, 0).unwrap();
        let ja = serde_json::to_string(&a.records).unwrap();
        let jb = serde_json::to_string(&b.records).unwrap();
        assert_eq!(ja, jb);
        let c = run_episode(&cfg, 1).unwrap();
        let jc = serde_json::to_string(&c.records).unwrap();
        assert_ne!(ja, jc, "different run index must draw different noise");
    }

    #[test]
    fn episode_contains_truth_and_counts_records() {
        let cfg = tiny_config();
        let log = run_episode(&cfg, 0).unwrap();
        assert!(log.aborted.is_none());
        assert!(log.containment_ok);
        assert_eq!(log.noise_breaches, 0);
        assert_eq!(log.records.len(), cfg.steps * cfg.agents.len());
        assert!(log.records.iter().all(|r| r.contained));
    }

    #[test]
    fn zero_noise_collapses_to_points() {
        let mut cfg = tiny_config();
        cfg.steps = 2;
        for a in &mut cfg.agents {
            a.process_noise = 0.0;
            a.measurement_noise = 0.0;
            a.range_noise = [0.0, 0.0];
        }
        let log = run_episode(&cfg, 0).unwrap();
        assert!(log.containment_ok);
        for rec in log.records.iter().filter(|r| r.k == 2) {
            for d in 0..STATE_DIM {
                assert!(
                    rec.posterior_hi[d] - rec.posterior_lo[d] < 1e-6,
                    "agent {} dim {} did not collapse",
                    rec.agent,
                    d
                );
            }
        }
    }

    #[test]
    fn overdriven_noise_breaks_containment() {
        let mut cfg = tiny_config();
        cfg.steps = 12;
        cfg.truth_noise_scale = 3.0;
        let log = run_episode(&cfg, 0).unwrap();
        assert!(log.noise_breaches > 0, "overdrive must escape declared sets");
        assert!(
            !log.containment_ok || log.aborted.is_some(),
            "containment audit failed to notice out-of-model noise"
        );
    }

    #[test]
    fn anchor_is_insulated_from_the_chain() {
        // The anchor's draws come first in the stream each step, so its
        // truth and estimates must match between a solo run and a chained
        // run with the same seed.
        let solo = {
            let mut c = tiny_config();
            c.agents.truncate(1);
            c
        };
        let chained = tiny_config();
        let a = run_episode(&solo, 0).unwrap();
        let b = run_episode(&chained, 0).unwrap();
        let pick = |log: &RunLog| -> Vec<StepRecord> {
            log.records.iter().filter(|r| r.agent == 0).cloned().collect()
        };
        let ja = serde_json::to_string(&pick(&a)).unwrap();
        let jb = serde_json::to_string(&pick(&b)).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn monte_carlo_summary_merges_in_order() {
        let cfg = tiny_config();
        let summary = run_monte_carlo(&cfg).unwrap();
        assert_eq!(summary.per_run.len(), 2);
        assert_eq!(summary.per_run[0].run, 0);
        assert_eq!(summary.per_run[1].run, 1);
        assert_eq!(
            summary.total_agent_steps,
            cfg.steps * cfg.agents.len() * cfg.runs
        );
        assert!(summary.all_contained());
        let row = &summary.agents[1];
        assert!(row.mean_ratio.is_some());
        assert!(row.dominance_violations == 0);
    }

    #[test]
    fn outputs_are_byte_identical_across_invocations() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let s1 = run_monte_carlo(&cfg).unwrap();
        let (j1, c1) = write_mc_outputs(&s1, &dir.path().join("a")).unwrap();
        let s2 = run_monte_carlo(&cfg).unwrap();
        let (j2, c2) = write_mc_outputs(&s2, &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(&j1).unwrap(),
            std::fs::read(&j2).unwrap(),
            "summary files differ"
        );
        assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());
    }
}
