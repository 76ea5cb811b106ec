//! JSON-lines logging to stderr. Stage timings are emitted under the
//! `timing` target with their fields inlined.

use std::io::Write;
use std::time::Instant;

use serde_json::{json, Map, Value};

pub const TIMING_TARGET: &str = "timing";

pub fn init(verbose: bool) {
    let default = if verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format(|buf, record| {
            let mut obj = Map::new();
            obj.insert("ts".into(), json!(buf.timestamp_millis().to_string()));
            obj.insert("level".into(), json!(record.level().as_str()));
            obj.insert("target".into(), json!(record.target()));
            let msg = record.args().to_string();
            match serde_json::from_str::<Value>(&msg) {
                Ok(Value::Object(fields)) if record.target() == TIMING_TARGET => obj.extend(fields),
                _ => {
                    obj.insert("msg".into(), json!(msg));
                }
            }
            writeln!(buf, "{}", Value::Object(obj))
        })
        .target(env_logger::Target::Stderr)
        .init();
}

/// Measures one pipeline stage and logs its wall time when finished.
pub struct StageTimer {
    stage: &'static str,
    recording: Option<String>,
    started: Instant,
}

impl StageTimer {
    pub fn start(stage: &'static str, recording: Option<&str>) -> Self {
        StageTimer {
            stage,
            recording: recording.map(str::to_string),
            started: Instant::now(),
        }
    }

    /// Log and return the elapsed seconds.
    pub fn finish(self) -> f64 {
        let secs = self.started.elapsed().as_secs_f64();
        let mut fields = json!({"stage": self.stage, "seconds": secs});
        if let Some(s) = self.recording {
            fields["recording"] = json!(s);
        }
        log::info!(target: TIMING_TARGET, "{fields}");
        secs
    }
}
