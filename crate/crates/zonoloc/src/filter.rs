//! Sequential set-membership filter for a chain of agents.
//!
//! Agent 0 (the anchor) corrects its prediction with its absolute
//! measurement alone. Each later agent additionally holds a range reading
//! to its predecessor, turned into a wedge by the geometry layer and
//! intersected in. Updates run in chain order so each agent sees its
//! predecessor's posterior from the same step.
//!
//! Posteriors are re-represented as their interval hull after every update.
//! That trades tightness for a bounded representation size and makes the
//! per-step sets directly comparable across filters.
//!
//! The relative path is an optimization, not a soundness requirement: if
//! the wedge construction fails or the triple intersection comes back
//! empty (inconsistent geometry under LP tolerances), the update falls
//! back to the absolute measurement alone and flags the step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{relative_measurement_set, GeomError};
use crate::scalar::Real;
use crate::set::{ExtConstrainedZonotope, IntervalHull, SetError};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("inconsistent model: {0}")]
    BadModel(String),
    /// Even the absolute-measurement update is empty: the model or noise
    /// bounds do not explain the data. Nothing sound can be reported.
    #[error("agent {agent}: measurement update produced an empty set")]
    Inconsistent { agent: usize },
    #[error("agent {agent}: {source}")]
    Set {
        agent: usize,
        #[source]
        source: SetError,
    },
    #[error(transparent)]
    Shape(#[from] SetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Anchor,
    Ordinary,
}

/// Per-agent plant and noise description.
///
/// Noise sets are zonotopes (no constraints); the constructor enforces
/// this along with shape consistency and observability of `(C, A)`.
pub struct AgentModel<T: Real> {
    pub dynamics: DMatrix<T>,
    pub input: DMatrix<T>,
    pub observation: DMatrix<T>,
    pub process_noise: ExtConstrainedZonotope<T>,
    pub measurement_noise: ExtConstrainedZonotope<T>,
    /// Relative-range noise interval `[r_lo, r_hi]`.
    pub range_bounds: (T, T),
    pub role: AgentRole,
    /// Maps the state onto the plane the range measurement lives in.
    pub range_selector: DMatrix<T>,
}

impl<T: Real> AgentModel<T> {
    pub fn new(
        dynamics: DMatrix<T>,
        input: DMatrix<T>,
        observation: DMatrix<T>,
        process_noise: ExtConstrainedZonotope<T>,
        measurement_noise: ExtConstrainedZonotope<T>,
        range_bounds: (T, T),
        role: AgentRole,
        range_selector: DMatrix<T>,
    ) -> Result<Self, FilterError> {
        let n = dynamics.nrows();
        if dynamics.ncols() != n {
            return Err(FilterError::BadModel(format!(
                "dynamics must be square, got {}x{}",
                dynamics.nrows(),
                dynamics.ncols()
            )));
        }
        if input.nrows() != n {
            return Err(FilterError::BadModel(format!(
                "input matrix has {} rows, state dim is {}",
                input.nrows(),
                n
            )));
        }
        if observation.ncols() != n {
            return Err(FilterError::BadModel(format!(
                "observation matrix has {} cols, state dim is {}",
                observation.ncols(),
                n
            )));
        }
        if process_noise.dim() != n {
            return Err(FilterError::BadModel(format!(
                "process noise dim {} vs state dim {}",
                process_noise.dim(),
                n
            )));
        }
        if measurement_noise.dim() != observation.nrows() {
            return Err(FilterError::BadModel(format!(
                "measurement noise dim {} vs {} measurement rows",
                measurement_noise.dim(),
                observation.nrows()
            )));
        }
        if process_noise.constraint_count() != 0 || measurement_noise.constraint_count() != 0 {
            return Err(FilterError::BadModel(
                "noise sets must be plain zonotopes".into(),
            ));
        }
        if range_bounds.0 > range_bounds.1 {
            return Err(FilterError::BadModel(format!(
                "range noise interval [{}, {}] is inverted",
                range_bounds.0, range_bounds.1
            )));
        }
        if range_selector.nrows() != 2 || range_selector.ncols() != n {
            return Err(FilterError::BadModel(format!(
                "range selector must be 2x{}, got {}x{}",
                n,
                range_selector.nrows(),
                range_selector.ncols()
            )));
        }
        if !observable(&observation, &dynamics) {
            return Err(FilterError::BadModel(
                "(C, A) is not observable".into(),
            ));
        }
        Ok(Self {
            dynamics,
            input,
            observation,
            process_noise,
            measurement_noise,
            range_bounds,
            role,
            range_selector,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.nrows()
    }
}

/// Rank of the observability stack `[C; CA; ...; CA^(n-1)]` equals n.
fn observable<T: Real>(c: &DMatrix<T>, a: &DMatrix<T>) -> bool {
    let n = a.nrows();
    let p = c.nrows();
    let mut stack = DMatrix::zeros(p * n, n);
    let mut block = c.clone();
    for i in 0..n {
        stack.view_mut((i * p, 0), (p, n)).copy_from(&block);
        block = &block * a;
    }
    stack.rank(T::default_tol()) == n
}

/// Selector `[I2 0]` picking the leading position block out of the state.
pub fn position_selector<T: Real>(state_dim: usize) -> DMatrix<T> {
    debug_assert!(state_dim >= 2);
    DMatrix::from_fn(2, state_dim, |i, j| {
        if i == j {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// Per-step bookkeeping of how an agent's update went.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StepFlags {
    /// Relative path abandoned; posterior uses the absolute set only.
    pub fallback: bool,
    pub fallback_reason: Option<String>,
    /// Active sectors had holes (contiguity assumption violated).
    pub noncontiguous: bool,
    /// Emptiness LPs that failed during sector pruning.
    pub lp_failures: usize,
    /// Separation condition behind the contiguity guarantee held.
    pub separation_ok: Option<bool>,
    /// Angular span of the merged window, radians.
    pub window_span: Option<f64>,
}

/// Result of one agent's measurement update.
pub struct UpdateOutcome<T: Real> {
    /// The intersection before hull re-representation; audits check truth
    /// membership against this, the tightest set the filter ever holds.
    pub exact: ExtConstrainedZonotope<T>,
    pub hull: IntervalHull<T>,
    pub flags: StepFlags,
}

/// Prediction step: propagate the posterior through the dynamics, shift by
/// the known input, and widen by the process noise.
pub fn predict<T: Real>(
    posterior: &ExtConstrainedZonotope<T>,
    model: &AgentModel<T>,
    u: &DVector<T>,
) -> Result<ExtConstrainedZonotope<T>, SetError> {
    posterior
        .linear_map(&model.dynamics)?
        .translate(&(&model.input * u))?
        .minkowski_sum(&model.process_noise)
}

/// Measurement-space set `{y} + (-V)`: everything the noisy reading `y`
/// could have come from. Intersect with the prior through `C`.
pub fn absolute_measurement_set<T: Real>(
    y: &DVector<T>,
    noise: &ExtConstrainedZonotope<T>,
) -> Result<ExtConstrainedZonotope<T>, SetError> {
    let minus = ExtConstrainedZonotope::new(
        -noise.generators().clone(),
        y - noise.center(),
        DMatrix::zeros(0, noise.generator_count()),
        DVector::zeros(0),
        noise.xi_lo().clone(),
        noise.xi_hi().clone(),
    )?;
    Ok(minus)
}

fn hull_or_empty<T: Real>(
    set: &ExtConstrainedZonotope<T>,
) -> Result<Option<IntervalHull<T>>, SetError> {
    match set.interval_hull() {
        Ok(hull) => Ok(Some(hull)),
        Err(SetError::Empty) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Absolute-measurement-only update. This is the anchor's whole update and
/// the fallback/baseline update for everyone else; `agent` labels errors.
pub fn update_absolute<T: Real>(
    agent: usize,
    prior: &ExtConstrainedZonotope<T>,
    y: &DVector<T>,
    model: &AgentModel<T>,
) -> Result<UpdateOutcome<T>, FilterError> {
    let meas = absolute_measurement_set(y, &model.measurement_noise)
        .map_err(|e| FilterError::Set { agent, source: e })?;
    let exact = prior
        .generalized_intersect(&meas, &model.observation)
        .map_err(|e| FilterError::Set { agent, source: e })?;
    let hull = hull_or_empty(&exact)
        .map_err(|e| FilterError::Set { agent, source: e })?
        .ok_or(FilterError::Inconsistent { agent })?;
    Ok(UpdateOutcome {
        exact,
        hull,
        flags: StepFlags::default(),
    })
}

/// Anchor update: absolute measurement only.
pub fn update_anchor<T: Real>(
    prior: &ExtConstrainedZonotope<T>,
    y: &DVector<T>,
    model: &AgentModel<T>,
) -> Result<UpdateOutcome<T>, FilterError> {
    update_absolute(0, prior, y, model)
}

/// Chained-agent update: intersect the prior with the range wedge around
/// the predecessor's posterior and with the absolute measurement set.
///
/// `agent` is only used to label errors. `sectors` is the ring
/// segmentation count.
pub fn update_chain_agent<T: Real>(
    agent: usize,
    prior: &ExtConstrainedZonotope<T>,
    neighbor_posterior: &ExtConstrainedZonotope<T>,
    y_abs: &DVector<T>,
    y_rel: T,
    model: &AgentModel<T>,
    neighbor_selector: &DMatrix<T>,
    sectors: usize,
) -> Result<UpdateOutcome<T>, FilterError> {
    let meas = absolute_measurement_set(y_abs, &model.measurement_noise).map_err(|e| {
        FilterError::Set { agent, source: e }
    })?;
    let with_abs = prior
        .generalized_intersect(&meas, &model.observation)
        .map_err(|e| FilterError::Set { agent, source: e })?;

    let mut flags = StepFlags::default();
    let relative = build_wedge(
        neighbor_posterior,
        prior,
        y_rel,
        model,
        neighbor_selector,
        sectors,
        &mut flags,
    );

    if let Some(wedge) = relative {
        match with_abs.generalized_intersect(&wedge, &model.range_selector) {
            Ok(triple) => match hull_or_empty(&triple) {
                Ok(Some(hull)) => {
                    return Ok(UpdateOutcome {
                        exact: triple,
                        hull,
                        flags,
                    });
                }
                Ok(None) => {
                    flags.fallback = true;
                    flags.fallback_reason = Some("triple intersection empty".into());
                }
                Err(e) => {
                    flags.fallback = true;
                    flags.fallback_reason = Some(format!("hull LP failed: {}", e));
                }
            },
            Err(e) => {
                flags.fallback = true;
                flags.fallback_reason = Some(format!("wedge intersection failed: {}", e));
            }
        }
    }

    // Fallback: drop the relative measurement. This reproduces the pure
    // absolute-measurement update bit for bit.
    let hull = hull_or_empty(&with_abs)
        .map_err(|e| FilterError::Set { agent, source: e })?
        .ok_or(FilterError::Inconsistent { agent })?;
    Ok(UpdateOutcome {
        exact: with_abs,
        hull,
        flags,
    })
}

fn build_wedge<T: Real>(
    neighbor_posterior: &ExtConstrainedZonotope<T>,
    prior: &ExtConstrainedZonotope<T>,
    y_rel: T,
    model: &AgentModel<T>,
    neighbor_selector: &DMatrix<T>,
    sectors: usize,
    flags: &mut StepFlags,
) -> Option<ExtConstrainedZonotope<T>> {
    // The wedge lives in the plane of the agent being updated, anchored at
    // the neighbor's selected position.
    let (r_lo, r_hi) = model.range_bounds;
    match relative_measurement_set(
        neighbor_posterior,
        prior,
        y_rel,
        r_lo,
        r_hi,
        neighbor_selector,
        sectors,
    ) {
        Ok((wedge, diag)) => {
            flags.noncontiguous = !diag.contiguous;
            flags.lp_failures = diag.lp_failures;
            flags.separation_ok = Some(diag.separation_ok);
            flags.window_span = Some(diag.window.angular_span::<f64>());
            Some(wedge)
        }
        Err(e @ GeomError::SpanTooWide(_))
        | Err(e @ GeomError::NoActiveSector)
        | Err(e @ GeomError::BadRange(_)) => {
            flags.fallback = true;
            flags.fallback_reason = Some(e.to_string());
            None
        }
        Err(e) => {
            flags.fallback = true;
            flags.fallback_reason = Some(format!("wedge construction failed: {}", e));
            None
        }
    }
}

/// Current estimate for one agent.
#[derive(Clone)]
pub struct AgentEstimate<T: Real> {
    /// Latest prediction (equals the posterior before the first step).
    pub prior: ExtConstrainedZonotope<T>,
    /// Posterior in box re-representation.
    pub posterior: ExtConstrainedZonotope<T>,
    pub hull: IntervalHull<T>,
}

/// Filter state across the chain, agent 0 first.
pub struct ChainState<T: Real> {
    pub k: usize,
    pub agents: Vec<AgentEstimate<T>>,
}

impl<T: Real> ChainState<T> {
    /// Starts every agent from a known initial enclosure.
    pub fn new(initial: Vec<ExtConstrainedZonotope<T>>) -> Result<Self, FilterError> {
        let agents = initial
            .into_iter()
            .enumerate()
            .map(|(i, set)| {
                let hull = set
                    .interval_hull()
                    .map_err(|e| FilterError::Set { agent: i, source: e })?;
                let boxed = hull.to_zonotope();
                Ok(AgentEstimate {
                    prior: boxed.clone(),
                    posterior: boxed,
                    hull,
                })
            })
            .collect::<Result<Vec<_>, FilterError>>()?;
        Ok(Self { k: 0, agents })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }
}

/// Measurements for one step: one absolute reading per agent, one range
/// reading per chain link (entry `i - 1` is the link from agent `i` to its
/// predecessor).
pub struct MeasurementRecord<T: Real> {
    pub absolute: Vec<DVector<T>>,
    pub ranges: Vec<T>,
}

/// What one agent did during a step, for logging and audits.
pub struct AgentStepReport<T: Real> {
    pub prior: ExtConstrainedZonotope<T>,
    pub prior_hull: IntervalHull<T>,
    pub exact: ExtConstrainedZonotope<T>,
    pub hull: IntervalHull<T>,
    pub flags: StepFlags,
}

/// One full filter step: predict every agent, update the anchor, then walk
/// the chain so each agent uses its predecessor's fresh posterior.
pub fn step_chain<T: Real>(
    state: &mut ChainState<T>,
    measurements: &MeasurementRecord<T>,
    models: &[AgentModel<T>],
    inputs: &[DVector<T>],
    sectors: usize,
) -> Result<Vec<AgentStepReport<T>>, FilterError> {
    let l = state.agents.len();
    if l == 0 {
        return Err(FilterError::BadModel("empty chain".into()));
    }
    if models.len() != l || inputs.len() != l || measurements.absolute.len() != l {
        return Err(FilterError::BadModel(format!(
            "chain of {} agents given {} models, {} inputs, {} measurements",
            l,
            models.len(),
            inputs.len(),
            measurements.absolute.len()
        )));
    }
    if measurements.ranges.len() + 1 != l {
        return Err(FilterError::BadModel(format!(
            "{} range readings for {} links",
            measurements.ranges.len(),
            l - 1
        )));
    }
    if models[0].role != AgentRole::Anchor {
        return Err(FilterError::BadModel("agent 0 must be the anchor".into()));
    }

    let mut priors = Vec::with_capacity(l);
    for i in 0..l {
        priors.push(
            predict(&state.agents[i].posterior, &models[i], &inputs[i])
                .map_err(|e| FilterError::Set { agent: i, source: e })?,
        );
    }

    let mut reports = Vec::with_capacity(l);
    for i in 0..l {
        let outcome = if i == 0 {
            update_anchor(&priors[0], &measurements.absolute[0], &models[0])?
        } else {
            // Predecessor's posterior was refreshed earlier this loop.
            update_chain_agent(
                i,
                &priors[i],
                &state.agents[i - 1].posterior,
                &measurements.absolute[i],
                measurements.ranges[i - 1],
                &models[i],
                &models[i - 1].range_selector,
                sectors,
            )?
        };
        let prior_hull = priors[i]
            .interval_hull()
            .map_err(|e| FilterError::Set { agent: i, source: e })?;
        let boxed = outcome.hull.to_zonotope();
        state.agents[i] = AgentEstimate {
            prior: priors[i].clone(),
            posterior: boxed,
            hull: outcome.hull.clone(),
        };
        reports.push(AgentStepReport {
            prior: priors[i].clone(),
            prior_hull,
            exact: outcome.exact,
            hull: outcome.hull,
            flags: outcome.flags,
        });
    }
    state.k += 1;
    Ok(reports)
}
