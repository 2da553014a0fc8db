//! Lane-change (cut-in) encounter model: event sampling from segmented
//! input distributions and a deterministic ego-vehicle simulation with
//! adaptive cruise control and emergency braking.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{
    BoundedExponential, Dist, DistError, MixtureBoundedNormal, Piece, PiecewiseMixture,
    Univariate,
};
use crate::rng::{self, purpose};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid ego configuration: {0}")]
    Ego(String),
    #[error("invalid scenario model: {0}")]
    Model(String),
    #[error("unknown preset {0:?} (known: {known})", known = PRESETS.join(", "))]
    UnknownPreset(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// One cut-in: lead speed `v_l` (m/s), initial range `r_l` (m) and
/// time-to-collision `ttc_l = −R/Ṙ` (s). `ttc_l = ∞` means no closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneChangeEvent {
    pub v_l: f64,
    pub r_l: f64,
    pub ttc_l: f64,
}

impl LaneChangeEvent {
    /// Builds an event from the sampled inverses `TTC⁻¹` and `R⁻¹`.
    pub fn from_inverses(v_l: f64, ttc_inv: f64, r_inv: f64) -> Self {
        Self { v_l, r_l: 1.0 / r_inv, ttc_l: 1.0 / ttc_inv }
    }

    /// `Ṙ_L = −R_L / TTC_L`, negative while closing.
    pub fn range_rate(&self) -> f64 {
        -self.r_l / self.ttc_l
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.v_l > 0.0 && self.r_l > 0.0 && self.ttc_l > 0.0)
            || self.v_l.is_nan()
            || self.r_l.is_nan()
            || self.ttc_l.is_nan()
        {
            return Err(ScenarioError::Model(format!(
                "event needs positive v_l, r_l and ttc_l, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Ego vehicle: constant-time-headway ACC with emergency braking.
///
/// ACC commands `a = k1 (R − h v_ego) − k2 (v_ego − v_lead)`, limited to
/// `[−comfort_decel, 0]`: the ego cruises at its initial (set) speed and
/// only slows down. Once the time to collision drops below `aeb_ttc`, the
/// AEB latches full braking at `max_decel`. Commands reach the vehicle
/// after `delay`.
///
/// The ACC law is held over each `step`, sampled at the step midpoint;
/// motion within a step is integrated exactly, and the AEB trigger time is
/// solved exactly rather than snapped to the step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoConfig {
    /// Desired time headway `h` (s).
    pub headway: f64,
    /// Gap gain `k1` (1/s²).
    pub k1: f64,
    /// Closing-speed gain `k2` (1/s).
    pub k2: f64,
    /// Deceleration limit of the ACC (m/s², positive).
    pub comfort_decel: f64,
    /// AEB trigger threshold on the instantaneous TTC (s).
    pub aeb_ttc: f64,
    /// AEB braking deceleration (m/s², positive).
    pub max_decel: f64,
    /// Actuator delay (s); a whole number of steps.
    pub delay: f64,
    /// Controller step (s).
    pub step: f64,
    /// Simulated time limit (s).
    pub horizon: f64,
}

impl Default for EgoConfig {
    fn default() -> Self {
        Self {
            headway: 1.5,
            k1: 0.2,
            k2: 0.6,
            comfort_decel: 3.0,
            aeb_ttc: 1.5,
            max_decel: 8.0,
            delay: 0.1,
            step: 0.01,
            horizon: 15.0,
        }
    }
}

impl EgoConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = [
            ("headway", self.headway),
            ("k1", self.k1),
            ("k2", self.k2),
            ("comfort_decel", self.comfort_decel),
            ("aeb_ttc", self.aeb_ttc),
            ("max_decel", self.max_decel),
            ("step", self.step),
            ("horizon", self.horizon),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(ScenarioError::Ego(format!("{name} must be positive, got {v}")));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(ScenarioError::Ego(format!("delay must be nonnegative, got {}", self.delay)));
        }
        if self.step > 0.1 {
            return Err(ScenarioError::Ego(format!("step must be at most 0.1 s, got {}", self.step)));
        }
        if self.horizon < 5.0 {
            return Err(ScenarioError::Ego(format!("horizon must be at least 5 s, got {}", self.horizon)));
        }
        let steps = self.delay / self.step;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(ScenarioError::Ego(format!(
                "delay {} is not a whole number of {} s steps",
                self.delay, self.step
            )));
        }
        Ok(())
    }

    /// The same controller with half the step.
    pub fn halved(&self) -> Self {
        Self { step: 0.5 * self.step, ..self.clone() }
    }

    fn delay_steps(&self) -> usize {
        (self.delay / self.step).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Crash,
    /// Closing speed reached zero.
    Separating,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub crashed: bool,
    /// Smallest range over the run (m); 0 on a crash.
    pub min_range: f64,
    /// Largest deceleration needed to stop closing within the current
    /// range, `c²/(2R)`, over the run (m/s²); `∞` on a crash.
    pub peak_required_decel: f64,
    /// Time of termination (s).
    pub time: f64,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t: f64,
    pub range: f64,
    pub ego_speed: f64,
    /// Acceleration applied over the following step.
    pub accel: f64,
}

trait Recorder {
    const ON: bool;
    fn record(&mut self, p: TracePoint);
}

struct NoTrace;

impl Recorder for NoTrace {
    const ON: bool = false;
    fn record(&mut self, _: TracePoint) {}
}

impl Recorder for Vec<TracePoint> {
    const ON: bool = true;
    fn record(&mut self, p: TracePoint) {
        self.push(p);
    }
}

struct State {
    range: f64,
    closing: f64,
    ego_speed: f64,
    min_range: f64,
    peak_drac: f64,
}

enum Stop {
    Crash(f64),
    Separating(f64),
}

impl State {
    /// Exact motion under constant acceleration `a ≤ 0` for `dur`; reports
    /// a crash or the closing speed reaching zero inside the interval.
    fn advance(&mut self, a: f64, dur: f64) -> Option<Stop> {
        let (r, c) = (self.range, self.closing);
        if a < 0.0 && c + a * dur <= 0.0 {
            let tau = -c / a;
            let r_star = r - 0.5 * c * tau;
            if r_star <= 0.0 {
                return Some(Stop::Crash(crash_time(r, c, a)));
            }
            self.range = r_star;
            self.ego_speed += a * tau;
            self.closing = 0.0;
            self.min_range = self.min_range.min(r_star);
            return Some(Stop::Separating(tau));
        }
        let r_next = r - c * dur - 0.5 * a * dur * dur;
        if r_next <= 0.0 {
            return Some(Stop::Crash(crash_time(r, c, a)));
        }
        self.range = r_next;
        self.closing = c + a * dur;
        self.ego_speed += a * dur;
        self.min_range = self.min_range.min(r_next);
        self.note_drac();
        None
    }

    fn note_drac(&mut self) {
        if self.closing > 0.0 {
            self.peak_drac = self.peak_drac.max(self.closing * self.closing / (2.0 * self.range));
        }
    }
}

/// First root of `r − c τ − a τ²/2`.
fn crash_time(r: f64, c: f64, a: f64) -> f64 {
    let disc = (c * c + 2.0 * a * r).max(0.0);
    2.0 * r / (c + disc.sqrt())
}

/// First `τ ∈ (0, ∞)` where `R(τ) − T·c(τ)` reaches zero under constant
/// `a`, or `∞`.
fn aeb_crossing(r: f64, c: f64, a: f64, ttc: f64) -> f64 {
    // A τ² + B τ + C with A ≥ 0 and C > 0
    let big_a = -0.5 * a;
    let big_b = -(c + ttc * a);
    let big_c = r - ttc * c;
    if big_b >= 0.0 {
        return f64::INFINITY;
    }
    let disc = big_b * big_b - 4.0 * big_a * big_c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = 0.5 * (-big_b + disc.sqrt());
    big_c / q
}

fn acc_command(range: f64, ego_speed: f64, closing: f64, ego: &EgoConfig) -> f64 {
    let law = ego.k1 * (range - ego.headway * ego_speed) - ego.k2 * closing;
    law.clamp(-ego.comfort_decel, 0.0)
}

fn run<T: Recorder>(event: &LaneChangeEvent, ego: &EgoConfig, trace: &mut T) -> SimOutcome {
    let closing = event.r_l / event.ttc_l;
    let mut s = State {
        range: event.r_l,
        closing,
        ego_speed: event.v_l + closing,
        min_range: event.r_l,
        peak_drac: 0.0,
    };
    let done = |s: &State, time: f64, termination| SimOutcome {
        crashed: termination == Termination::Crash,
        min_range: if termination == Termination::Crash { 0.0 } else { s.min_range },
        peak_required_decel: if termination == Termination::Crash { f64::INFINITY } else { s.peak_drac },
        time,
        termination,
    };
    if !(closing > 0.0) || !event.r_l.is_finite() {
        return done(&s, 0.0, Termination::Separating);
    }
    s.note_drac();
    let dt = ego.step;
    let n_steps = (ego.horizon / dt).round() as usize;
    let delay = ego.delay_steps();
    let mut pending: VecDeque<f64> = VecDeque::with_capacity(delay + 1);
    pending.extend(std::iter::repeat_n(0.0, delay));
    let mut nonzero_pending = 0usize;
    // time full braking reaches the wheels, once the AEB has fired
    let mut brake_at = f64::INFINITY;
    if s.range <= ego.aeb_ttc * s.closing {
        brake_at = ego.delay_steps() as f64 * dt;
    }
    let mut k = 0usize;
    while k < n_steps {
        let t = k as f64 * dt;
        // cruising shortcut: with nothing queued and the ACC law above
        // zero, the motion is linear and neither AEB nor crash can occur
        if brake_at.is_infinite() && nonzero_pending == 0 {
            let slack = s.range - ego.headway * s.ego_speed - ego.k2 / ego.k1 * s.closing;
            if slack > 0.0 {
                // at constant speeds the slack shrinks at rate c
                let free = ((slack / s.closing) / dt).floor() as usize;
                let jump = free.saturating_sub(1).min(n_steps - k);
                if jump >= 2 {
                    let start = s.range;
                    for j in 0..jump {
                        if T::ON {
                            trace.record(TracePoint {
                                t: (k + j) as f64 * dt,
                                range: start - s.closing * j as f64 * dt,
                                ego_speed: s.ego_speed,
                                accel: 0.0,
                            });
                        }
                    }
                    s.range = start - s.closing * jump as f64 * dt;
                    s.min_range = s.range;
                    s.note_drac();
                    k += jump;
                    continue;
                }
            }
        }
        let command = if brake_at.is_finite() {
            -ego.max_decel
        } else if let Some(&a) = pending.front() {
            // the law is sampled at mid-step, where the state is already
            // fixed by the queued acceleration
            let h = 0.5 * dt;
            acc_command(
                s.range - s.closing * h - 0.5 * a * h * h,
                s.ego_speed + a * h,
                s.closing + a * h,
                ego,
            )
        } else {
            acc_command(s.range, s.ego_speed, s.closing, ego)
        };
        pending.push_back(command);
        if command != 0.0 {
            nonzero_pending += 1;
        }
        let queued = pending.pop_front().expect("queue holds the delay");
        if queued != 0.0 {
            nonzero_pending -= 1;
        }
        // split the step where braking takes over
        let mut tau = 0.0;
        while tau < dt {
            let now = t + tau;
            let braking = now >= brake_at;
            let a = if braking { -ego.max_decel } else { queued };
            let mut end = if !braking && brake_at < t + dt { brake_at - t } else { dt };
            if T::ON && tau == 0.0 {
                trace.record(TracePoint { t, range: s.range, ego_speed: s.ego_speed, accel: a });
            }
            if brake_at.is_infinite() {
                let cross = aeb_crossing(s.range, s.closing, a, ego.aeb_ttc);
                if tau + cross < end {
                    end = tau + cross;
                    brake_at = t + end + delay as f64 * dt;
                }
            }
            match s.advance(a, end - tau) {
                Some(Stop::Crash(x)) => return done(&s, now + x, Termination::Crash),
                Some(Stop::Separating(x)) => return done(&s, now + x, Termination::Separating),
                None => {}
            }
            tau = end;
        }
        k += 1;
    }
    done(&s, n_steps as f64 * dt, Termination::Horizon)
}

/// Runs the encounter. Pure: identical inputs give bit-identical outputs.
pub fn simulate(event: &LaneChangeEvent, ego: &EgoConfig) -> SimOutcome {
    run(event, ego, &mut NoTrace)
}

/// [`simulate`] plus the state at every controller step.
pub fn simulate_traced(event: &LaneChangeEvent, ego: &EgoConfig) -> (SimOutcome, Vec<TracePoint>) {
    let mut trace = Vec::new();
    let outcome = run(event, ego, &mut trace);
    (outcome, trace)
}

/// Crash indicator `I_ε`.
pub fn indicator(event: &LaneChangeEvent, ego: &EgoConfig) -> bool {
    simulate(event, ego).crashed
}

/// Lead-speed distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpeedSampler {
    Uniform { low: f64, high: f64 },
    /// Resample observed speeds with replacement.
    Empirical { values: Vec<f64> },
    Constant { value: f64 },
}

impl SpeedSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SpeedSampler::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
            SpeedSampler::Empirical { values } => values[rng.gen_range(0..values.len())],
            SpeedSampler::Constant { value } => *value,
        }
    }

    /// Smallest and largest speed the sampler can produce.
    pub fn range(&self) -> (f64, f64) {
        match self {
            SpeedSampler::Uniform { low, high } => (*low, *high),
            SpeedSampler::Empirical { values } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
            SpeedSampler::Constant { value } => (*value, *value),
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let ok = match self {
            SpeedSampler::Uniform { low, high } => *low > 0.0 && high > low && high.is_finite(),
            SpeedSampler::Empirical { values } => {
                !values.is_empty() && values.iter().all(|v| *v > 0.0 && v.is_finite())
            }
            SpeedSampler::Constant { value } => *value > 0.0 && value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(ScenarioError::Model(format!("invalid lead-speed sampler {self:?}")))
        }
    }
}

/// Lead-speed segment `[lower, upper)` with its `TTC⁻¹` distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lower: f64,
    pub upper: f64,
    pub ttc_inv: Dist,
}

/// Segmented encounter model: `v_L` from its sampler, `TTC⁻¹` from the
/// segment containing `v_L`, and `R⁻¹` independently of both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub name: String,
    pub speed: SpeedSampler,
    pub segments: Vec<Segment>,
    pub range_inv: Dist,
    #[serde(default)]
    pub ego: EgoConfig,
}

/// Speed segment bounds used by the presets and by fitting.
pub const SEGMENT_BOUNDS: [f64; 4] = [5.0, 15.0, 25.0, 35.0];

impl ScenarioModel {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.speed.validate()?;
        self.ego.validate()?;
        if self.segments.is_empty() {
            return Err(ScenarioError::Model("at least one speed segment is required".into()));
        }
        for w in self.segments.windows(2) {
            if w[0].upper != w[1].lower {
                return Err(ScenarioError::Model(format!(
                    "segments [{}, {}) and [{}, {}) are not contiguous",
                    w[0].lower, w[0].upper, w[1].lower, w[1].upper
                )));
            }
        }
        if self.segments.iter().any(|s| !(s.lower < s.upper)) {
            return Err(ScenarioError::Model("segment bounds must increase".into()));
        }
        let (lo, hi) = self.speed.range();
        let first = self.segments[0].lower;
        let last = self.segments[self.segments.len() - 1].upper;
        if lo < first || hi > last {
            return Err(ScenarioError::Model(format!(
                "speed sampler range [{lo}, {hi}] is not covered by segments [{first}, {last}]"
            )));
        }
        for d in self.segments.iter().map(|s| &s.ttc_inv).chain([&self.range_inv]) {
            if d.support().0 < 0.0 {
                return Err(ScenarioError::Model("inverse variables must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// Index of the segment holding `v`; the last segment is closed above.
    pub fn segment_of(&self, v: f64) -> usize {
        self.segments
            .iter()
            .position(|s| v < s.upper)
            .unwrap_or(self.segments.len() - 1)
    }

    /// Draws `(v_L, segment, TTC⁻¹, R⁻¹)` with the given `TTC⁻¹` law per
    /// segment and `R⁻¹` law, in that order from `rng`.
    pub fn sample_inputs_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        ttc_inv: &[&Dist],
        range_inv: &Dist,
    ) -> (f64, usize, f64, f64) {
        let v = self.speed.sample(rng);
        let seg = self.segment_of(v);
        let t = ttc_inv[seg].sample_one(rng);
        let r = range_inv.sample_one(rng);
        (v, seg, t, r)
    }

    pub fn ttc_dists(&self) -> Vec<&Dist> {
        self.segments.iter().map(|s| &s.ttc_inv).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let model: Self =
            serde_json::from_str(text).map_err(|e| ScenarioError::Model(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Draws one event from the model.
pub fn sample_event<R: Rng + ?Sized>(model: &ScenarioModel, rng: &mut R) -> LaneChangeEvent {
    let (v, _, t, r) = model.sample_inputs_with(rng, &model.ttc_dists(), &model.range_inv);
    LaneChangeEvent::from_inverses(v, t, r)
}

pub const PRESETS: [&str; 3] = ["desk-rare", "desk-rare-empirical", "desk-common"];

fn exp_piece(rate: f64, lower: f64, upper: f64) -> Result<Piece, DistError> {
    Ok(Piece::Exponential(BoundedExponential::new(rate, lower, upper)?))
}

/// `TTC⁻¹` law: a two-component half-normal body on `[0, cut)` and an
/// exponential tail on `[cut, ∞)`.
fn ttc_inv_model(
    body_weights: [f64; 2],
    body_sigmas: [f64; 2],
    cut: f64,
    tail_weight: f64,
    tail_rate: f64,
) -> Result<Dist, DistError> {
    let body = MixtureBoundedNormal::new(body_weights.to_vec(), &body_sigmas, 0.0, cut)?;
    let tail = exp_piece(tail_rate, cut, f64::INFINITY)?;
    Ok(Dist::Piecewise(PiecewiseMixture::new(
        vec![cut],
        vec![1.0 - tail_weight, tail_weight],
        vec![Piece::NormalMixture(body), tail],
    )?))
}

/// `R⁻¹` law: three bounded exponential pieces.
fn range_inv_model(cuts: [f64; 2], weights: [f64; 3], rates: [f64; 3]) -> Result<Dist, DistError> {
    Ok(Dist::Piecewise(PiecewiseMixture::new(
        cuts.to_vec(),
        weights.to_vec(),
        vec![
            exp_piece(rates[0], 0.0, cuts[0])?,
            exp_piece(rates[1], cuts[0], cuts[1])?,
            exp_piece(rates[2], cuts[1], f64::INFINITY)?,
        ],
    )?))
}

/// Ground-truth encounter models.
///
/// * `desk-rare`: lead speed uniform on [5, 35] m/s; crash probability
///   about 5e-5 under the default ego.
/// * `desk-rare-empirical`: the same laws with lead speed resampled from
///   2000 uniform draws made with `seed`.
/// * `desk-common`: heavier `TTC⁻¹` tails, crash probability of order 1e-2,
///   for quick checks.
///
/// Only `desk-rare-empirical` uses the seed.
pub fn synthetic_model(preset: &str, seed: u64) -> Result<ScenarioModel, ScenarioError> {
    // R > 50 m is very rare; the crash set needs a large range at a short TTC
    let range_inv = range_inv_model([0.02, 0.1], [0.0002, 0.5998, 0.4], [1.0, 5.0, 10.0])?;
    // faster traffic sees slightly more sharp cut-ins
    let rare = |i: usize| -> Result<Dist, DistError> {
        let tail_w = [0.016, 0.02, 0.024][i];
        ttc_inv_model([0.6, 0.4], [0.05, 0.12], 0.3, tail_w, 15.0)
    };
    let segments = |f: &dyn Fn(usize) -> Result<Dist, DistError>| -> Result<Vec<Segment>, ScenarioError> {
        (0..3)
            .map(|i| {
                Ok(Segment { lower: SEGMENT_BOUNDS[i], upper: SEGMENT_BOUNDS[i + 1], ttc_inv: f(i)? })
            })
            .collect()
    };
    let model = match preset {
        "desk-rare" => ScenarioModel {
            name: preset.into(),
            speed: SpeedSampler::Uniform { low: 5.0, high: 35.0 },
            segments: segments(&rare)?,
            range_inv,
            ego: EgoConfig::default(),
        },
        "desk-rare-empirical" => {
            let mut rng = rng::stream(seed, purpose::PRESET, 0);
            let values = (0..2000).map(|_| 5.0 + 30.0 * rng.gen::<f64>()).collect();
            ScenarioModel {
                name: preset.into(),
                speed: SpeedSampler::Empirical { values },
                segments: segments(&rare)?,
                range_inv,
                ego: EgoConfig::default(),
            }
        }
        "desk-common" => {
            let common = |i: usize| -> Result<Dist, DistError> {
                let tail_w = [0.16, 0.2, 0.24][i];
                ttc_inv_model([0.6, 0.4], [0.05, 0.12], 0.3, tail_w, 4.0)
            };
            ScenarioModel {
                name: preset.into(),
                speed: SpeedSampler::Uniform { low: 5.0, high: 35.0 },
                segments: segments(&common)?,
                range_inv,
                ego: EgoConfig::default(),
            }
        }
        other => return Err(ScenarioError::UnknownPreset(other.into())),
    };
    model.validate()?;
    Ok(model)
}
