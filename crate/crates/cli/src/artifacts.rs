//! Mission log directory: raw frames, per-ping correlation peaks, beam
//! patterns, and position fixes.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use r2usbl_core::detector::MultichannelFrame;
use r2usbl_core::pipeline::PingResult;

use crate::rawfile::{self, SampleFormat};
use crate::sentence::format_fix_sentence;

pub struct MissionLogger {
    dir: PathBuf,
    peaks: BufWriter<File>,
    beams: BufWriter<File>,
    fixes: BufWriter<File>,
    sentences: BufWriter<File>,
    events: BufWriter<File>,
    log_raw: bool,
    capture_format: SampleFormat,
}

impl MissionLogger {
    pub fn create(
        dir: &Path,
        log_raw: bool,
        capture_format: SampleFormat,
    ) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        if log_raw {
            fs::create_dir_all(dir.join("frames"))?;
        }
        let open = |name: &str| -> std::io::Result<BufWriter<File>> {
            Ok(BufWriter::new(
                OpenOptions::new().create(true).append(true).open(dir.join(name))?,
            ))
        };
        let mut peaks = open("peaks.csv")?;
        writeln!(peaks, "ping,channel,peak_index,peak_value,normalized_peak,snr_db")?;
        let mut beams = open("beams.csv")?;
        writeln!(beams, "ping,angle_deg,power")?;
        let mut fixes = open("fixes.csv")?;
        writeln!(
            fixes,
            "ping,trigger_epoch_ns,tof_s,slant_range_m,relative_bearing_deg,absolute_bearing_deg,horizontal_range_m,north_m,east_m,gain_db,snr_db,quality"
        )?;
        Ok(Self {
            dir: dir.to_path_buf(),
            peaks,
            beams,
            fixes,
            sentences: open("sentences.log")?,
            events: open("events.log")?,
            log_raw,
            capture_format,
        })
    }

    pub fn log_raw_frame(&mut self, ping: u64, frame: &MultichannelFrame) -> std::io::Result<()> {
        if !self.log_raw {
            return Ok(());
        }
        let path = self.dir.join("frames").join(format!("ping_{ping:05}.r2ub"));
        let mut file = BufWriter::new(File::create(path)?);
        rawfile::write_frame(&mut file, frame, self.capture_format)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        file.flush()
    }

    pub fn log_ping(&mut self, ping: u64, result: &PingResult) -> std::io::Result<()> {
        let corr = &result.correlation;
        for ch in 0..corr.peak_indices.len() {
            writeln!(
                self.peaks,
                "{ping},{ch},{},{:.6},{:.6},{:.2}",
                corr.peak_indices[ch],
                corr.peak_values[ch],
                corr.normalized_peaks[ch],
                corr.snr_db[ch],
            )?;
        }
        for (angle, power) in result.pattern.angles_deg.iter().zip(result.pattern.powers.iter()) {
            writeln!(self.beams, "{ping},{angle},{power:.6e}")?;
        }
        let f = &result.fix;
        writeln!(
            self.fixes,
            "{ping},{},{:.9},{:.3},{:.3},{:.3},{:.3},{:.3},{:.3},{:.1},{:.1},{}",
            f.trigger_epoch_ns,
            f.tof_s,
            f.slant_range_m,
            f.relative_bearing_deg,
            f.absolute_bearing_deg,
            f.horizontal_range_m,
            f.north_m,
            f.east_m,
            f.gain_db,
            f.snr_db,
            f.quality.as_str(),
        )?;
        self.sentences.write_all(format_fix_sentence(f).as_bytes())?;
        Ok(())
    }

    pub fn log_event(&mut self, ping: u64, message: &str) -> std::io::Result<()> {
        writeln!(self.events, "ping {ping}: {message}")
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.peaks.flush()?;
        self.beams.flush()?;
        self.fixes.flush()?;
        self.sentences.flush()?;
        self.events.flush()
    }
}
