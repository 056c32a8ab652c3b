//! Stage scheduling: a deterministic single-threaded step mode driven by a
//! virtual clock, and a threaded mode with one thread per stage.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::io::{Sink, SinkFrame, Source};
use super::mailbox::{mailbox, Disconnected, Envelope, MailboxReader, MailboxWriter};
use super::metrics::{PipelineMetrics, SinkMetrics, StageFailure, StageMetrics};
use super::stage::{Body, Packet, Stage};
use super::stale::{apply_stale_policy, StalePolicy, Status};
use super::wire::WireError;
use crate::skeleton::JointConfiguration;

pub const DEFAULT_TICK_US: u64 = 1_000;
pub const DEFAULT_SINK_PERIOD_US: u64 = 33_333;

/// Longest a threaded stage blocks before re-checking its fault schedule.
const POLL: Duration = Duration::from_millis(2);

pub const SOURCE: &str = "source";
pub const SINK: &str = "sink";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkCadence {
    /// Emit every `period_us`, applying the stale policy.
    Period(u64),
    /// Emit each arriving joint frame as is, with the status it carries.
    OnArrival,
}

/// Scripted misbehaviour, timed on the pipeline clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// The stage does nothing during the window.
    Stall { from_us: u64, duration_us: u64 },
    /// The stage stops for good.
    Kill { at_us: u64 },
    /// The stage panics on its first step at or after `at_us`.
    Panic { at_us: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fault {
    pub stage: String,
    pub kind: FaultKind,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stale: StalePolicy,
    pub cadence: SinkCadence,
    /// Virtual time advanced per step-mode tick.
    pub tick_us: u64,
    /// Playback speed for paced sources.
    pub speed: f64,
    pub faults: Vec<Fault>,
}

impl PipelineConfig {
    pub fn new(stale: StalePolicy) -> Self {
        Self {
            stale,
            cadence: SinkCadence::Period(DEFAULT_SINK_PERIOD_US),
            tick_us: DEFAULT_TICK_US,
            speed: 1.0,
            faults: Vec::new(),
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline: {0}")]
    Config(String),
}

#[derive(Debug)]
pub struct RunReport {
    pub metrics: PipelineMetrics,
    /// Read or decode failure that ended the source early.
    pub source_error: Option<WireError>,
    pub sink_error: Option<std::io::Error>,
}

/// Live view of a pipeline's counters, usable from another thread while
/// it runs.
#[derive(Clone, Default)]
pub struct MetricsHandle {
    stages: Vec<Arc<Mutex<StageMetrics>>>,
    sink: Arc<Mutex<SinkMetrics>>,
    failures: Arc<Mutex<Vec<StageFailure>>>,
    elapsed: Arc<Mutex<Duration>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl MetricsHandle {
    pub fn snapshot(&self) -> PipelineMetrics {
        PipelineMetrics {
            stages: self.stages.iter().map(|m| lock(m).clone()).collect(),
            sink: lock(&self.sink).clone(),
            failures: lock(&self.failures).clone(),
            elapsed: *lock(&self.elapsed),
        }
    }

    fn fail(&self, stage: &str, at_us: u64, reason: String) {
        log::warn!("stage {stage} failed at {at_us}us: {reason}");
        lock(&self.failures).push(StageFailure {
            stage: stage.to_owned(),
            at_us,
            reason,
        });
    }
}

/// Source, then the stages in order, then the sink, connected by
/// latest-value mailboxes.
pub struct Pipeline {
    source: Box<dyn Source>,
    stages: Vec<Box<dyn Stage>>,
    sink: Box<dyn Sink>,
    config: PipelineConfig,
    metrics: MetricsHandle,
}

impl Pipeline {
    pub fn new(
        source: Box<dyn Source>,
        stages: Vec<Box<dyn Stage>>,
        sink: Box<dyn Sink>,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        let mut names = vec![SOURCE.to_owned()];
        names.extend(stages.iter().map(|s| s.name().to_owned()));
        names.push(SINK.to_owned());
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PipelineError::Config(format!("duplicate stage name {n:?}")));
            }
        }
        for f in &config.faults {
            if !names.contains(&f.stage) {
                return Err(PipelineError::Config(format!(
                    "fault targets unknown stage {:?}",
                    f.stage
                )));
            }
        }
        if config.tick_us == 0 {
            return Err(PipelineError::Config("tick must be positive".into()));
        }
        if config.cadence == SinkCadence::Period(0) {
            return Err(PipelineError::Config("sink period must be positive".into()));
        }
        if !(config.speed.is_finite() && config.speed > 0.0) {
            return Err(PipelineError::Config("speed must be positive".into()));
        }
        let metrics = MetricsHandle {
            stages: names
                .iter()
                .map(|n| Arc::new(Mutex::new(StageMetrics::new(n))))
                .collect(),
            ..Default::default()
        };
        Ok(Self {
            source,
            stages,
            sink,
            config,
            metrics,
        })
    }

    pub fn metrics(&self) -> MetricsHandle {
        self.metrics.clone()
    }

    fn plan(&self, name: &str) -> FaultPlan {
        FaultPlan(
            self.config
                .faults
                .iter()
                .filter(|f| f.stage == name)
                .map(|f| f.kind)
                .collect(),
        )
    }

    /// Runs to completion on the calling thread. Each tick the source
    /// releases at most one due packet, every stage then takes at most one
    /// packet, and the sink acts; processing takes no virtual time.
    pub fn run_step(self) -> RunReport {
        let tick = self.config.tick_us;
        let mut wiring = Wiring::build(&self);
        let Pipeline {
            source,
            stages,
            sink,
            config,
            metrics,
        } = self;
        let mut src = SourceNode::new(
            source,
            wiring.source_out.take(),
            wiring.plans.remove(0),
            &metrics,
            config.speed,
        );
        let mut nodes: Vec<StageNode> = stages
            .into_iter()
            .enumerate()
            .map(|(i, stage)| StageNode {
                stage,
                inbox: wiring.inboxes.remove(0),
                outbox: wiring.outboxes.remove(0),
                plan: wiring.plans.remove(0),
                metrics: metrics.stages[i + 1].clone(),
                rejected: 0,
                put_failed: 0,
            })
            .collect();
        let mut snk = SinkNode::new(sink, wiring.sink_in.take(), wiring.plans.remove(0), &metrics, &config);

        let mut now = 0;
        loop {
            src.step(now, &metrics);
            for node in &mut nodes {
                node.step(|| now, &metrics, |r| r.try_take());
            }
            snk.step(|| now, &metrics, |r| r.try_take());

            let drained = nodes.iter().all(|n| n.inbox.as_ref().map_or(true, |r| r.is_empty()))
                && snk.inbox.as_ref().map_or(true, |r| r.is_empty());
            if src.done && drained {
                break;
            }
            now += tick;
        }
        snk.state.finish(now);
        *lock(&metrics.elapsed) = Duration::from_micros(now);
        snk.finalize(&metrics);
        RunReport {
            metrics: metrics.snapshot(),
            source_error: src.error,
            sink_error: snk.state.error,
        }
    }

    /// Runs with one thread per source and stage; the sink runs on the
    /// calling thread. Returns once the source has ended and everything
    /// upstream of the sink has drained or stopped.
    pub fn run_threaded(self) -> RunReport {
        let mut wiring = Wiring::build(&self);
        let Pipeline {
            source,
            stages,
            sink,
            config,
            metrics,
        } = self;
        let start = Instant::now();
        let clock = move || start.elapsed().as_micros() as u64;
        let source_done = AtomicBool::new(false);

        let mut src = SourceNode::new(
            source,
            wiring.source_out.take(),
            wiring.plans.remove(0),
            &metrics,
            config.speed,
        );
        let nodes: Vec<StageNode> = stages
            .into_iter()
            .enumerate()
            .map(|(i, stage)| StageNode {
                stage,
                inbox: wiring.inboxes.remove(0),
                outbox: wiring.outboxes.remove(0),
                plan: wiring.plans.remove(0),
                metrics: metrics.stages[i + 1].clone(),
                rejected: 0,
                put_failed: 0,
            })
            .collect();
        let mut snk = SinkNode::new(sink, wiring.sink_in.take(), wiring.plans.remove(0), &metrics, &config);

        let source_error = std::thread::scope(|s| {
            let source_thread = s.spawn(|| {
                struct Done<'a>(&'a AtomicBool);
                impl Drop for Done<'_> {
                    fn drop(&mut self) {
                        self.0.store(true, Ordering::Release);
                    }
                }
                let _done = Done(&source_done);
                while !src.done {
                    let now = clock();
                    match src.next_due(now) {
                        Some(due) if due > now => {
                            std::thread::sleep(Duration::from_micros(due - now).min(POLL));
                        }
                        _ => {
                            if src.step(clock(), &metrics) {
                                std::thread::sleep(POLL);
                            }
                        }
                    }
                }
                src.error
            });
            for mut node in nodes {
                let metrics = &metrics;
                s.spawn(move || {
                    while node.alive() {
                        if node.step(clock, metrics, |r| r.take_timeout(POLL)) {
                            std::thread::sleep(POLL);
                        }
                    }
                });
            }

            loop {
                let finished = source_done.load(Ordering::Acquire);
                if !snk.alive {
                    if finished {
                        break;
                    }
                    std::thread::sleep(POLL);
                    continue;
                }
                if finished && snk.inbox.is_none() {
                    break;
                }
                let now = clock();
                let wait = match snk.state.cadence {
                    SinkCadence::Period(_) => {
                        Duration::from_micros(snk.state.next_emit_us.saturating_sub(now)).min(POLL)
                    }
                    SinkCadence::OnArrival => POLL,
                };
                if snk.inbox.is_none() {
                    std::thread::sleep(wait);
                }
                if snk.step(clock, &metrics, |r| r.take_timeout(wait)) {
                    std::thread::sleep(POLL);
                }
                *lock(&metrics.elapsed) = start.elapsed();
            }
            snk.state.finish(clock());
            *lock(&metrics.elapsed) = start.elapsed();
            source_thread.join().unwrap_or(None)
        });
        snk.finalize(&metrics);
        RunReport {
            metrics: metrics.snapshot(),
            source_error,
            sink_error: snk.state.error,
        }
    }
}

struct Wiring {
    source_out: Option<MailboxWriter<Packet>>,
    inboxes: Vec<Option<MailboxReader<Packet>>>,
    outboxes: Vec<Option<MailboxWriter<Packet>>>,
    sink_in: Option<MailboxReader<Packet>>,
    /// Source, stages, sink.
    plans: Vec<FaultPlan>,
}

impl Wiring {
    fn build(p: &Pipeline) -> Self {
        let n = p.stages.len();
        let (mut writers, mut readers): (Vec<_>, Vec<_>) = (0..=n).map(|_| mailbox()).unzip();
        let sink_in = readers.pop();
        let source_out = Some(writers.remove(0));
        let mut plans = vec![p.plan(SOURCE)];
        plans.extend(p.stages.iter().map(|s| p.plan(s.name())));
        plans.push(p.plan(SINK));
        Self {
            source_out,
            inboxes: readers.into_iter().map(Some).collect(),
            outboxes: writers.into_iter().map(Some).collect(),
            sink_in,
            plans,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct FaultPlan(Vec<FaultKind>);

enum Action {
    Run,
    Stall,
    Die(&'static str),
    Panic,
}

impl FaultPlan {
    fn action(&self, now: u64) -> Action {
        for f in &self.0 {
            if let FaultKind::Kill { at_us } = *f {
                if now >= at_us {
                    return Action::Die("killed");
                }
            }
        }
        for f in &self.0 {
            match *f {
                FaultKind::Panic { at_us } if now >= at_us => return Action::Panic,
                FaultKind::Stall { from_us, duration_us } if now >= from_us && now - from_us < duration_us => {
                    return Action::Stall;
                }
                _ => {}
            }
        }
        Action::Run
    }
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    e.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| e.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

struct SourceNode {
    source: Box<dyn Source>,
    outbox: Option<MailboxWriter<Packet>>,
    plan: FaultPlan,
    metrics: Arc<Mutex<StageMetrics>>,
    speed: f64,
    pending: Option<Packet>,
    first_ts: Option<u64>,
    done: bool,
    error: Option<WireError>,
}

impl SourceNode {
    fn new(
        source: Box<dyn Source>,
        outbox: Option<MailboxWriter<Packet>>,
        plan: FaultPlan,
        metrics: &MetricsHandle,
        speed: f64,
    ) -> Self {
        Self {
            source,
            outbox,
            plan,
            metrics: metrics.stages[0].clone(),
            speed,
            pending: None,
            first_ts: None,
            done: false,
            error: None,
        }
    }

    fn stop(&mut self) {
        self.done = true;
        self.pending = None;
        self.outbox = None;
    }

    /// Pipeline time at which the pending packet is due, if one is pending.
    fn next_due(&mut self, _now: u64) -> Option<u64> {
        let p = self.pending.as_ref()?;
        if !self.source.paced() {
            return Some(0);
        }
        let first = *self.first_ts.get_or_insert(p.timestamp_us);
        Some((p.timestamp_us.saturating_sub(first) as f64 / self.speed).round() as u64)
    }

    /// Returns whether the source is stalled.
    fn step(&mut self, now: u64, handle: &MetricsHandle) -> bool {
        if self.done {
            return false;
        }
        let inject = match self.plan.action(now) {
            Action::Die(reason) => {
                handle.fail(SOURCE, now, reason.into());
                self.stop();
                return false;
            }
            Action::Stall => return true,
            Action::Panic => true,
            Action::Run => false,
        };
        if self.pending.is_none() {
            let started = Instant::now();
            let read = catch_unwind(AssertUnwindSafe(|| {
                if inject {
                    panic!("injected fault");
                }
                self.source.next_packet()
            }));
            match read {
                Ok(Ok(Some(p))) => {
                    let mut m = lock(&self.metrics);
                    m.frames_in += 1;
                    m.latency.record(started.elapsed());
                    drop(m);
                    self.pending = Some(p);
                }
                Ok(Ok(None)) => {
                    self.stop();
                    return false;
                }
                Ok(Err(e)) => {
                    handle.fail(SOURCE, now, e.to_string());
                    self.error = Some(e);
                    self.stop();
                    return false;
                }
                Err(panic) => {
                    handle.fail(SOURCE, now, format!("panicked: {}", panic_message(&*panic)));
                    self.stop();
                    return false;
                }
            }
        }
        if self.next_due(now).is_some_and(|due| due <= now) {
            let mut p = self.pending.take().expect("due implies pending");
            p.origin_us = now;
            let sent = self.outbox.as_ref().map(|o| o.put(p, now));
            let mut m = lock(&self.metrics);
            match sent {
                Some(Ok(_)) => m.frames_out += 1,
                _ => m.drops += 1,
            }
        }
        false
    }
}

struct StageNode {
    stage: Box<dyn Stage>,
    inbox: Option<MailboxReader<Packet>>,
    outbox: Option<MailboxWriter<Packet>>,
    plan: FaultPlan,
    metrics: Arc<Mutex<StageMetrics>>,
    rejected: u64,
    put_failed: u64,
}

impl StageNode {
    fn alive(&self) -> bool {
        self.inbox.is_some()
    }

    fn stop(&mut self) {
        self.refresh();
        self.inbox = None;
        self.outbox = None;
    }

    fn refresh(&self) {
        if let Some(inbox) = &self.inbox {
            let s = inbox.stats();
            let mut m = lock(&self.metrics);
            m.frames_in = s.puts;
            m.drops = s.drops + self.rejected + self.put_failed;
        }
    }

    /// Returns whether the stage is stalled.
    fn step(
        &mut self,
        clock: impl Fn() -> u64,
        handle: &MetricsHandle,
        take: impl FnOnce(&MailboxReader<Packet>) -> Result<Option<Envelope<Packet>>, Disconnected>,
    ) -> bool {
        let now = clock();
        let Some(inbox) = &self.inbox else {
            return false;
        };
        let name = self.stage.name().to_owned();
        let inject = match self.plan.action(now) {
            Action::Die(reason) => {
                handle.fail(&name, now, reason.into());
                self.stop();
                return false;
            }
            Action::Stall => return true,
            Action::Panic => true,
            Action::Run => false,
        };
        let env = match take(inbox) {
            Ok(Some(env)) => env,
            Ok(None) => {
                self.refresh();
                return false;
            }
            Err(Disconnected) => {
                self.stop();
                return false;
            }
        };
        let started = Instant::now();
        let stage = &mut self.stage;
        let result = catch_unwind(AssertUnwindSafe(|| {
            if inject {
                panic!("injected fault");
            }
            stage.process(env.value)
        }));
        let elapsed = started.elapsed();
        match result {
            Ok(Ok(packet)) => {
                let sent = self.outbox.as_ref().map(|o| o.put(packet, clock()));
                let mut m = lock(&self.metrics);
                m.latency.record(elapsed);
                match sent {
                    Some(Ok(_)) => m.frames_out += 1,
                    _ => self.put_failed += 1,
                }
            }
            Ok(Err(e)) => {
                log::debug!("stage {name} rejected frame: {e}");
                self.rejected += 1;
            }
            Err(panic) => {
                self.rejected += 1;
                handle.fail(&name, now, format!("panicked: {}", panic_message(&*panic)));
                self.stop();
                return false;
            }
        }
        self.refresh();
        false
    }
}

struct SinkNode {
    state: SinkState,
    inbox: Option<MailboxReader<Packet>>,
    plan: FaultPlan,
    metrics: Arc<Mutex<StageMetrics>>,
    alive: bool,
}

impl SinkNode {
    fn new(
        sink: Box<dyn Sink>,
        inbox: Option<MailboxReader<Packet>>,
        plan: FaultPlan,
        metrics: &MetricsHandle,
        config: &PipelineConfig,
    ) -> Self {
        Self {
            state: SinkState {
                sink,
                policy: config.stale.clone(),
                cadence: config.cadence,
                last_good: None,
                new_arrival: false,
                previous: None,
                next_emit_us: 0,
                metrics: metrics.sink.clone(),
                error: None,
            },
            inbox,
            plan,
            metrics: metrics.stages.last().expect("sink metrics").clone(),
            alive: true,
        }
    }

    fn step(
        &mut self,
        clock: impl Fn() -> u64,
        handle: &MetricsHandle,
        take: impl FnOnce(&MailboxReader<Packet>) -> Result<Option<Envelope<Packet>>, Disconnected>,
    ) -> bool {
        let now = clock();
        if !self.alive {
            return false;
        }
        match self.plan.action(now) {
            Action::Die(reason) => {
                handle.fail(SINK, now, reason.into());
                self.finalize(handle);
                self.inbox = None;
                self.alive = false;
                return false;
            }
            Action::Panic => {
                handle.fail(SINK, now, "panicked: injected fault".into());
                self.finalize(handle);
                self.inbox = None;
                self.alive = false;
                return false;
            }
            Action::Stall => return true,
            Action::Run => {}
        }
        if let Some(inbox) = &self.inbox {
            match take(inbox) {
                Ok(Some(env)) => self.state.arrive(env, clock()),
                Ok(None) => {}
                Err(Disconnected) => {
                    self.finalize(handle);
                    self.inbox = None;
                }
            }
        }
        self.state.tick(clock());
        false
    }

    fn finalize(&self, _: &MetricsHandle) {
        if let Some(inbox) = &self.inbox {
            let s = inbox.stats();
            let mut m = lock(&self.metrics);
            m.frames_in = s.puts;
            m.frames_out = s.takes;
            m.drops = s.drops;
        }
    }
}

struct SinkState {
    sink: Box<dyn Sink>,
    policy: StalePolicy,
    cadence: SinkCadence,
    /// Newest joint configuration and the pipeline time it arrived.
    last_good: Option<(JointConfiguration, u64)>,
    new_arrival: bool,
    previous: Option<Status>,
    next_emit_us: u64,
    metrics: Arc<Mutex<SinkMetrics>>,
    error: Option<std::io::Error>,
}

impl SinkState {
    fn arrive(&mut self, env: Envelope<Packet>, now: u64) {
        {
            let mut m = lock(&self.metrics);
            m.arrivals += 1;
            m.end_to_end
                .record(Duration::from_micros(now.saturating_sub(env.value.origin_us)));
        }
        match env.value.body {
            Body::Joints(config, status) => {
                if self.cadence == SinkCadence::OnArrival {
                    self.emit(&config, status);
                }
                self.last_good = Some((config, now));
                self.new_arrival = true;
            }
            other => log::debug!("sink ignores {} packet {}", other.kind(), env.value.sequence),
        }
    }

    fn tick(&mut self, now: u64) {
        let SinkCadence::Period(period) = self.cadence else {
            return;
        };
        if now < self.next_emit_us {
            return;
        }
        self.emit_current(now);
        self.next_emit_us += period;
        if self.next_emit_us <= now {
            // fell behind: keep the phase, skip the missed slots
            self.next_emit_us += (now - self.next_emit_us) / period * period + period;
        }
    }

    fn emit_current(&mut self, now: u64) {
        let age = self
            .last_good
            .as_ref()
            .map_or(Duration::ZERO, |(_, at)| Duration::from_micros(now.saturating_sub(*at)));
        let (config, status) = apply_stale_policy(self.last_good.as_ref().map(|(c, _)| c), age, &self.policy);
        self.emit(&config, status);
        self.new_arrival = false;
    }

    fn emit(&mut self, config: &JointConfiguration, status: Status) {
        lock(&self.metrics).count(status, self.previous);
        self.previous = Some(status);
        if self.error.is_some() {
            return;
        }
        let frame = SinkFrame {
            configuration: config.clone(),
            status,
        };
        if let Err(e) = self.sink.emit(&frame) {
            log::error!("sink write failed: {e}");
            self.error = Some(e);
        }
    }

    /// Emits a frame that arrived after the last periodic emission, then
    /// flushes.
    fn finish(&mut self, now: u64) {
        if matches!(self.cadence, SinkCadence::Period(_)) && self.new_arrival {
            self.emit_current(now);
        }
        if self.error.is_none() {
            if let Err(e) = self.sink.flush() {
                self.error = Some(e);
            }
        }
    }
}
