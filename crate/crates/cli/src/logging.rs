//! Line-delimited JSON logging on standard error.

use log::{Level, LevelFilter, Log, Metadata, Record};

struct JsonLogger;

impl Log for JsonLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let line = serde_json::json!({
            "level": record.level().as_str().to_ascii_lowercase(),
            "target": record.target(),
            "message": record.args().to_string(),
        });
        eprintln!("{line}");
    }

    fn flush(&self) {}
}

static LOGGER: JsonLogger = JsonLogger;

/// Installs the logger once; the level comes from `FARFIELD_LOG`
/// (`error`, `warn`, `info`, `debug`, `trace`), default `info`.
pub fn init() {
    let level = std::env::var("FARFIELD_LOG")
        .ok()
        .and_then(|v| v.parse::<Level>().ok())
        .map_or(LevelFilter::Info, |l| l.to_level_filter());
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(level);
    }
}
