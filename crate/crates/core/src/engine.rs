//! Assembling and running a complete pipeline from one configuration.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::ik::IkOptions;
use crate::pipeline::io::{DualWireSource, FrameDecoder, TextSink, WireSink, WireSource};
use crate::pipeline::runner::DEFAULT_SINK_PERIOD_US;
use crate::pipeline::stage::{IkStage, LiftStage, RetargetStage};
use crate::pipeline::stale::{DEFAULT_FRESH_MS, DEFAULT_HOLD_MS};
use crate::pipeline::{Pipeline, PipelineConfig, RunReport, Sink, SinkCadence, Source, Stage, StalePolicy};
use crate::retarget::{RetargetMap, RetargetOptions, DEFAULT_EPSILON_BASIS};
use crate::skeleton::{AvatarRig, JointConfiguration, LandmarkScheme, DEFAULT_CONFIDENCE_THRESHOLD};
use crate::stereo::{CameraPair, LiftOptions, DEFAULT_SYNC_WINDOW_US};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("cannot bind or connect {endpoint}: {source}")]
    Bind { endpoint: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> EngineError {
    EngineError::Config(e.to_string())
}

/// Where frames come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    /// `file:PATH`: recorded 3D keypoint or joint frames.
    File(PathBuf),
    /// `listen:HOST:PORT`: accept one producer connection.
    Listen(String),
    /// `dual-file:A,B`: two recorded pixel-frame streams.
    DualFile(PathBuf, PathBuf),
    /// `dual-listen:A,B`: two producer connections.
    DualListen(String, String),
}

impl InputSpec {
    pub fn is_dual(&self) -> bool {
        matches!(self, InputSpec::DualFile(..) | InputSpec::DualListen(..))
    }

    pub fn is_live(&self) -> bool {
        matches!(self, InputSpec::Listen(_) | InputSpec::DualListen(..))
    }
}

fn split_pair(rest: &str, spec: &str) -> Result<(String, String), String> {
    match rest.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_owned(), b.to_owned())),
        _ => Err(format!("{spec:?}: expected two comma-separated endpoints")),
    }
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| format!("{s:?}: expected KIND:VALUE"))?;
        if rest.is_empty() {
            return Err(format!("{s:?}: missing value"));
        }
        match kind {
            "file" => Ok(Self::File(rest.into())),
            "listen" => Ok(Self::Listen(rest.into())),
            "dual-file" => split_pair(rest, s).map(|(a, b)| Self::DualFile(a.into(), b.into())),
            "dual-listen" => split_pair(rest, s).map(|(a, b)| Self::DualListen(a, b)),
            _ => Err(format!("{s:?}: unknown input kind {kind:?}")),
        }
    }
}

impl TryFrom<String> for InputSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Where joint configurations go.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum OutputSpec {
    /// `stdout`: one text line per frame.
    #[default]
    Stdout,
    /// `text:PATH`: text lines to a file.
    Text(PathBuf),
    /// `file:PATH`: recorded joint frames.
    File(PathBuf),
    /// `connect:HOST:PORT`: joint frames over a stream socket.
    Connect(String),
}

impl FromStr for OutputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "stdout" {
            return Ok(Self::Stdout);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("{s:?}: expected stdout or KIND:VALUE"))?;
        if rest.is_empty() {
            return Err(format!("{s:?}: missing value"));
        }
        match kind {
            "text" => Ok(Self::Text(rest.into())),
            "file" => Ok(Self::File(rest.into())),
            "connect" => Ok(Self::Connect(rest.into())),
            _ => Err(format!("{s:?}: unknown output kind {kind:?}")),
        }
    }
}

impl TryFrom<String> for OutputSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StaleSection {
    pub fresh_ms: u64,
    pub hold_ms: u64,
}

impl Default for StaleSection {
    fn default() -> Self {
        Self {
            fresh_ms: DEFAULT_FRESH_MS,
            hold_ms: DEFAULT_HOLD_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkSection {
    pub max_iterations: usize,
    /// Absolute end-effector tolerance in metres; unset means relative to
    /// each chain's reach.
    pub tolerance: Option<f64>,
}

impl Default for IkSection {
    fn default() -> Self {
        let d = IkOptions::default();
        Self {
            max_iterations: d.max_iterations,
            tolerance: d.position_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SinkSection {
    pub period_us: u64,
    /// Emit every arriving joint frame unchanged instead of on a period.
    pub passthrough: bool,
}

impl Default for SinkSection {
    fn default() -> Self {
        Self {
            period_us: DEFAULT_SINK_PERIOD_US,
            passthrough: false,
        }
    }
}

/// Everything needed to run the engine. Unset document paths fall back to
/// the built-in 33-landmark scheme, humanoid rig and limb map.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub scheme: Option<PathBuf>,
    pub rig: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    #[serde(deserialize_with = "de_opt_input")]
    pub input: Option<InputSpec>,
    #[serde(deserialize_with = "de_output")]
    pub output: OutputSpec,
    pub stale: StaleSection,
    pub ik: IkSection,
    pub sink: SinkSection,
    pub sync_window_ms: f64,
    pub confidence_threshold: f64,
    /// Deterministic single-threaded scheduling on a virtual clock.
    pub step: bool,
    /// Playback speed of recorded inputs.
    pub speed: f64,
}

fn de_opt_input<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<InputSpec>, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map(Some).map_err(serde::de::Error::custom)
}

fn de_output<'de, D: serde::Deserializer<'de>>(d: D) -> Result<OutputSpec, D::Error> {
    let s = String::deserialize(d)?;
    s.parse().map_err(serde::de::Error::custom)
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            scheme: None,
            rig: None,
            map: None,
            calibration: None,
            input: None,
            output: OutputSpec::Stdout,
            stale: StaleSection::default(),
            ik: IkSection::default(),
            sink: SinkSection::default(),
            sync_window_ms: DEFAULT_SYNC_WINDOW_US as f64 / 1e3,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            step: false,
            speed: 1.0,
        }
    }
}

impl EngineConfig {
    pub fn from_toml_str(doc: &str) -> Result<Self, EngineError> {
        toml::from_str(doc).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn ik_options(&self) -> IkOptions {
        IkOptions {
            max_iterations: self.ik.max_iterations,
            position_tolerance: self.ik.tolerance,
            ..IkOptions::default()
        }
    }

    fn sync_window_us(&self) -> Result<u64, EngineError> {
        if !(self.sync_window_ms.is_finite() && self.sync_window_ms >= 0.0) {
            return Err(config_err("sync_window_ms must be non-negative"));
        }
        Ok((self.sync_window_ms * 1e3).round() as u64)
    }
}

/// Loaded documents plus the configuration that named them.
pub struct Engine {
    pub config: EngineConfig,
    pub scheme: Arc<LandmarkScheme>,
    pub rig: Arc<AvatarRig>,
    pub map: Arc<RetargetMap>,
    pub calibration: Option<CameraPair>,
}

impl Engine {
    /// Loads and cross-checks every document the configuration names.
    pub fn new(config: EngineConfig) -> Result<Self, EngineError> {
        let scheme = match &config.scheme {
            Some(p) => LandmarkScheme::load(p).map_err(config_err)?,
            None => LandmarkScheme::full_body_33(),
        };
        let rig = match &config.rig {
            Some(p) => AvatarRig::load(p).map_err(config_err)?,
            None => AvatarRig::default_humanoid(),
        };
        let map = match &config.map {
            Some(p) => RetargetMap::load(p, &scheme, &rig).map_err(config_err)?,
            None => RetargetMap::default_for(&scheme, &rig).map_err(config_err)?,
        };
        let calibration = match &config.calibration {
            Some(p) => Some(CameraPair::load(p).map_err(config_err)?),
            None => None,
        };
        if config.input.as_ref().is_some_and(InputSpec::is_dual) && calibration.is_none() {
            return Err(config_err("dual-camera input requires a calibration file"));
        }
        if config.step && config.input.as_ref().is_some_and(InputSpec::is_live) {
            return Err(config_err("step mode needs recorded input"));
        }
        if config.confidence_threshold.is_nan() || !(0.0..=1.0).contains(&config.confidence_threshold) {
            return Err(config_err("confidence_threshold must be within [0, 1]"));
        }
        if config.ik.max_iterations == 0 || config.ik.tolerance.is_some_and(|t| !(t > 0.0)) {
            return Err(config_err("ik needs max_iterations > 0 and a positive tolerance"));
        }
        config.sync_window_us()?;
        Ok(Self {
            config,
            scheme: Arc::new(scheme),
            rig: Arc::new(rig),
            map: Arc::new(map),
            calibration,
        })
    }

    /// Lift (with a calibration), retarget and IK stages.
    pub fn stages(&self) -> Result<Vec<Box<dyn Stage>>, EngineError> {
        let mut stages: Vec<Box<dyn Stage>> = Vec::new();
        if let Some(pair) = &self.calibration {
            stages.push(Box::new(LiftStage::new(
                pair.clone(),
                LiftOptions {
                    sync_window_us: self.config.sync_window_us()?,
                    confidence_threshold: self.config.confidence_threshold,
                },
            )));
        }
        stages.push(Box::new(RetargetStage::new(
            self.map.clone(),
            &self.rig,
            RetargetOptions {
                confidence_threshold: self.config.confidence_threshold,
                epsilon_basis: DEFAULT_EPSILON_BASIS,
            },
        )));
        stages.push(Box::new(IkStage::new(self.rig.clone(), self.config.ik_options())));
        Ok(stages)
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, EngineError> {
        let s = &self.config.stale;
        let stale =
            StalePolicy::new(s.fresh_ms, s.hold_ms, JointConfiguration::neutral(&self.rig)).map_err(config_err)?;
        let mut pc = PipelineConfig::new(stale);
        pc.cadence = if self.config.sink.passthrough {
            SinkCadence::OnArrival
        } else {
            SinkCadence::Period(self.config.sink.period_us)
        };
        pc.speed = self.config.speed;
        Ok(pc)
    }

    fn decoder(&self) -> FrameDecoder {
        FrameDecoder {
            scheme: self.scheme.clone(),
            rig: self.rig.clone(),
        }
    }

    pub fn open_source(&self) -> Result<Box<dyn Source>, EngineError> {
        let input = self.config.input.as_ref().ok_or_else(|| config_err("no input given"))?;
        let window = self.config.sync_window_us()?;
        Ok(match input {
            InputSpec::File(p) => Box::new(WireSource::new(open_file(p)?, self.decoder(), true)),
            InputSpec::DualFile(a, b) => Box::new(DualWireSource::new(
                open_file(a)?,
                open_file(b)?,
                self.scheme.clone(),
                window,
                true,
            )),
            InputSpec::Listen(addr) => Box::new(WireSource::new(accept_one(addr)?, self.decoder(), false)),
            InputSpec::DualListen(a, b) => {
                let (la, lb) = (bind(a)?, bind(b)?);
                Box::new(DualWireSource::new(
                    accept(&la, a)?,
                    accept(&lb, b)?,
                    self.scheme.clone(),
                    window,
                    false,
                ))
            }
        })
    }

    pub fn open_sink(&self) -> Result<Box<dyn Sink>, EngineError> {
        let create = |p: &Path| {
            File::create(p)
                .map(BufWriter::new)
                .map_err(|e| EngineError::Runtime(format!("cannot create {}: {e}", p.display())))
        };
        Ok(match &self.config.output {
            OutputSpec::Stdout => Box::new(TextSink::new(std::io::stdout(), &self.rig)),
            OutputSpec::Text(p) => Box::new(TextSink::new(create(p)?, &self.rig)),
            OutputSpec::File(p) => Box::new(WireSink::new(create(p)?)),
            OutputSpec::Connect(addr) => {
                let stream = TcpStream::connect(addr).map_err(|source| EngineError::Bind {
                    endpoint: addr.clone(),
                    source,
                })?;
                Box::new(WireSink::new(BufWriter::new(stream)))
            }
        })
    }

    pub fn pipeline(&self) -> Result<Pipeline, EngineError> {
        let sink = self.open_sink()?;
        let source = self.open_source()?;
        Pipeline::new(source, self.stages()?, sink, self.pipeline_config()?).map_err(config_err)
    }

    /// Runs to the end of input. A source read failure or sink write failure
    /// is an error after the run; failures of middle stages are only
    /// reported in the metrics.
    pub fn run(&self) -> Result<RunReport, EngineError> {
        let pipeline = self.pipeline()?;
        let report = if self.config.step {
            pipeline.run_step()
        } else {
            pipeline.run_threaded()
        };
        Ok(report)
    }
}

fn open_file(p: &Path) -> Result<Box<dyn Read + Send>, EngineError> {
    File::open(p)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn Read + Send>)
        .map_err(|e| config_err(format!("cannot open input {}: {e}", p.display())))
}

fn bind(addr: &str) -> Result<TcpListener, EngineError> {
    TcpListener::bind(addr).map_err(|source| EngineError::Bind {
        endpoint: addr.to_owned(),
        source,
    })
}

fn accept(listener: &TcpListener, addr: &str) -> Result<Box<dyn Read + Send>, EngineError> {
    log::info!("waiting for a producer on {addr}");
    let (stream, peer) = listener.accept().map_err(|source| EngineError::Bind {
        endpoint: addr.to_owned(),
        source,
    })?;
    log::info!("producer connected from {peer}");
    Ok(Box::new(BufReader::new(stream)))
}

fn accept_one(addr: &str) -> Result<Box<dyn Read + Send>, EngineError> {
    accept(&bind(addr)?, addr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_specs_parse() {
        assert_eq!("file:a.bin".parse(), Ok(InputSpec::File("a.bin".into())));
        assert_eq!(
            "listen:127.0.0.1:9000".parse(),
            Ok(InputSpec::Listen("127.0.0.1:9000".into()))
        );
        assert_eq!("dual-file:a,b".parse(), Ok(InputSpec::DualFile("a".into(), "b".into())));
        assert!("dual-file:a".parse::<InputSpec>().is_err());
        assert!("tape:x".parse::<InputSpec>().is_err());
        assert!("file:".parse::<InputSpec>().is_err());
    }

    #[test]
    fn output_specs_parse() {
        assert_eq!("stdout".parse(), Ok(OutputSpec::Stdout));
        assert_eq!("file:o.bin".parse(), Ok(OutputSpec::File("o.bin".into())));
        assert_eq!("connect:h:1".parse(), Ok(OutputSpec::Connect("h:1".into())));
    }

    #[test]
    fn config_document_overrides_defaults() {
        let c = EngineConfig::from_toml_str(
            r#"
            input = "file:rec.bin"
            step = true
            [ik]
            max_iterations = 50
            tolerance = 0.002
            [stale]
            hold_ms = 500
            "#,
        )
        .unwrap();
        assert_eq!(c.input, Some(InputSpec::File("rec.bin".into())));
        assert_eq!(c.ik.max_iterations, 50);
        assert_eq!(c.ik.tolerance, Some(0.002));
        assert_eq!(c.stale.fresh_ms, DEFAULT_FRESH_MS);
        assert_eq!(c.stale.hold_ms, 500);
        assert_eq!(c.output, OutputSpec::Stdout);
        assert!(EngineConfig::from_toml_str("colour = 1").is_err());
    }

    #[test]
    fn dual_input_needs_calibration() {
        let config = EngineConfig {
            input: Some(InputSpec::DualFile("a".into(), "b".into())),
            ..Default::default()
        };
        assert!(matches!(Engine::new(config), Err(EngineError::Config(_))));
    }

    #[test]
    fn missing_rig_names_the_path() {
        let config = EngineConfig {
            rig: Some("/nonexistent/rig.toml".into()),
            ..Default::default()
        };
        let Err(EngineError::Config(msg)) = Engine::new(config) else {
            panic!("expected config error");
        };
        assert!(msg.contains("/nonexistent/rig.toml"), "{msg}");
    }
}
