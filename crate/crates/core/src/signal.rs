//! Drive waveforms and input encoders.
//!
//! A [`Waveform`] is an ordered list of constant pulses and 50%-duty square
//! segments. Square segments take the value `offset + amplitude/2` during the
//! first half of each period and `offset − amplitude/2` during the second.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_PERIOD: f64 = 1.134e-3;
pub const INIT_PULSE_DURATION: f64 = 0.5e-3;
pub const INIT_PULSE_AMPLITUDE: f64 = 0.2;
pub const SETTLING_GAP: f64 = 2.0e-3;
pub const DEFAULT_STREAM_OFFSET: f64 = 0.01;
pub const DEFAULT_U_LOW: f64 = 0.1;
pub const DEFAULT_U_HIGH: f64 = 0.25;
/// Drive amplitudes for the 2-bit words 00, 01, 10, 11.
pub const PAPER_2BIT_AMPLITUDES: [f64; 4] = [0.161, 0.188, 0.299, 0.346];

/// Relative tolerance when checking that durations are whole multiples.
const MULTIPLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Pulse,
    Square { period: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub amplitude: f64,
    pub offset: f64,
    pub duration: f64,
}

/// Number of whole `unit`s in `span`, or `None` if not a whole multiple.
pub(crate) fn whole_multiple(span: f64, unit: f64) -> Option<usize> {
    let q = span / unit;
    let n = q.round();
    if n >= 1.0 && ((q - n) / n).abs() < MULTIPLE_TOL {
        Some(n as usize)
    } else {
        None
    }
}

impl Segment {
    /// Constant level held for `duration`.
    pub fn pulse(amplitude: f64, duration: f64) -> Result<Self> {
        let s = Self {
            kind: SegmentKind::Pulse,
            amplitude,
            offset: 0.0,
            duration,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn square(amplitude: f64, offset: f64, period: f64, periods: usize) -> Result<Self> {
        let s = Self {
            kind: SegmentKind::Square { period },
            amplitude,
            offset,
            duration: period * periods as f64,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.offset.is_finite()) {
            return Err(Error::NonFinite("segment level"));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(invalid("duration", "must be positive"));
        }
        if let SegmentKind::Square { period } = self.kind {
            if !(period.is_finite() && period > 0.0) {
                return Err(invalid("period", "must be positive"));
            }
            if whole_multiple(self.duration, period).is_none() {
                return Err(invalid("duration", "square segment must span whole periods"));
            }
        }
        Ok(())
    }

    pub fn high(&self) -> f64 {
        match self.kind {
            SegmentKind::Pulse => self.amplitude,
            SegmentKind::Square { .. } => self.offset + 0.5 * self.amplitude,
        }
    }

    pub fn low(&self) -> f64 {
        match self.kind {
            SegmentKind::Pulse => self.amplitude,
            SegmentKind::Square { .. } => self.offset - 0.5 * self.amplitude,
        }
    }

    /// Value at local time `tau` in `[0, duration)`.
    fn value_local(&self, tau: f64) -> f64 {
        match self.kind {
            SegmentKind::Pulse => self.amplitude,
            SegmentKind::Square { period } => {
                let phase = tau.rem_euclid(period);
                if phase < 0.5 * period {
                    self.high()
                } else {
                    self.low()
                }
            }
        }
    }

    fn negated(&self) -> Self {
        Self {
            amplitude: -self.amplitude,
            offset: -self.offset,
            ..*self
        }
    }
}

/// Piecewise drive signal `u(t)` on `[0, duration]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    segments: Vec<Segment>,
}

impl Waveform {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            s.validate()?;
        }
        Ok(Self { segments })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Appends all segments of `other`.
    pub fn concat(mut self, other: &Waveform) -> Self {
        self.segments.extend_from_slice(&other.segments);
        self
    }

    /// The drive `−u(t)`.
    pub fn negated(&self) -> Self {
        Self {
            segments: self.segments.iter().map(Segment::negated).collect(),
        }
    }

    /// Samples `u(t)`. Segments are right-continuous; `t = duration` returns
    /// the final level.
    pub fn value(&self, t: f64) -> Result<f64> {
        let duration = self.duration();
        if self.segments.is_empty() || !(0.0..=duration).contains(&t) {
            return Err(Error::OutOfRange { t, duration });
        }
        let mut start = 0.0;
        for s in &self.segments {
            if t < start + s.duration {
                return Ok(s.value_local(t - start));
            }
            start += s.duration;
        }
        let last = self.segments.last().expect("nonempty");
        Ok(last.value_local(last.duration * (1.0 - 1e-12)))
    }

    /// Per-step drive levels on a uniform grid of step `dt`. Every segment
    /// duration (and every square half-period) must be a whole number of
    /// steps, so each step sees a constant level.
    pub fn discretize(&self, dt: f64) -> Result<Vec<f64>> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        let mut out = Vec::new();
        for (idx, s) in self.segments.iter().enumerate() {
            let n = whole_multiple(s.duration, dt).ok_or(Error::MisalignedStep {
                dt,
                segment: idx,
                what: "duration",
            })?;
            match s.kind {
                SegmentKind::Pulse => out.extend(std::iter::repeat_n(s.amplitude, n)),
                SegmentKind::Square { period } => {
                    let half = whole_multiple(0.5 * period, dt).ok_or(Error::MisalignedStep {
                        dt,
                        segment: idx,
                        what: "half period",
                    })?;
                    let (hi, lo) = (s.high(), s.low());
                    out.extend((0..n).map(|k| if (k / half) % 2 == 0 { hi } else { lo }));
                }
            }
        }
        Ok(out)
    }
}

/// Map from big-endian word index to drive amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTable {
    n_bits: usize,
    amplitudes: Vec<f64>,
}

impl AmplitudeTable {
    /// Linear table over `[u_min, u_max]`.
    pub fn linear(n_bits: usize, u_min: f64, u_max: f64) -> Result<Self> {
        check_bits(n_bits)?;
        if !(u_min.is_finite() && u_max.is_finite() && u_min < u_max) {
            return Err(invalid("u_min/u_max", "need finite u_min < u_max"));
        }
        let last = ((1usize << n_bits) - 1) as f64;
        let amplitudes = (0..1usize << n_bits)
            .map(|k| u_min + (k as f64 / last) * (u_max - u_min))
            .collect();
        Ok(Self { n_bits, amplitudes })
    }

    pub fn explicit(n_bits: usize, amplitudes: Vec<f64>) -> Result<Self> {
        check_bits(n_bits)?;
        if amplitudes.len() != 1 << n_bits {
            return Err(invalid(
                "amplitudes",
                format!("expected {} entries, got {}", 1 << n_bits, amplitudes.len()),
            ));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("amplitude"));
        }
        if amplitudes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("amplitudes", "must be strictly increasing"));
        }
        Ok(Self { n_bits, amplitudes })
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn words(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude_of_index(&self, index: usize) -> f64 {
        self.amplitudes[index]
    }

    pub fn encode_word(&self, word: &[u8]) -> Result<f64> {
        Ok(self.amplitudes[word_index(word, self.n_bits)?])
    }
}

fn check_bits(n_bits: usize) -> Result<()> {
    if (1..=8).contains(&n_bits) {
        Ok(())
    } else {
        Err(invalid("n_bits", format!("{n_bits} not in [1, 8]")))
    }
}

/// Big-endian index of a bit word, e.g. `[a, b]` → `2a + b`.
pub fn word_index(word: &[u8], n_bits: usize) -> Result<usize> {
    if word.len() != n_bits {
        return Err(Error::Shape(format!(
            "word has {} bits, table expects {n_bits}",
            word.len()
        )));
    }
    word.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok(acc * 2 + b as usize),
        _ => Err(invalid("word", format!("bit value {b} is not 0/1"))),
    })
}

/// Inverse of [`word_index`].
pub fn index_word(index: usize, n_bits: usize) -> Vec<u8> {
    (0..n_bits).rev().map(|k| ((index >> k) & 1) as u8).collect()
}

pub fn encode_word(word: &[u8], table: &AmplitudeTable) -> Result<f64> {
    table.encode_word(word)
}

/// One square period per bit at `u_low` / `u_high`, all sharing `offset`.
pub fn encode_stream(bits: &[u8], u_low: f64, u_high: f64, offset: f64, period: f64) -> Result<Waveform> {
    if bits.is_empty() {
        return Err(invalid("bits", "stream is empty"));
    }
    let segments = bits
        .iter()
        .map(|&b| {
            let amp = match b {
                0 => u_low,
                1 => u_high,
                _ => return Err(invalid("bits", format!("bit value {b} is not 0/1"))),
            };
            Segment::square(amp, offset, period, 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Waveform::new(segments)
}

/// Constant-amplitude square drive of `periods` periods.
pub fn square_wave(amplitude: f64, offset: f64, period: f64, periods: usize) -> Result<Waveform> {
    Waveform::new(vec![Segment::square(amplitude, offset, period, periods)?])
}

/// Initialization pulse of polarity `±1`, zero settling gap, then `data`.
pub fn build_drive(polarity: i8, data: &Waveform) -> Result<Waveform> {
    Ok(init_prefix(polarity)?.concat(data))
}

/// Pulse plus settling gap only.
pub fn init_prefix(polarity: i8) -> Result<Waveform> {
    let sign = polarity_sign(polarity)?;
    Waveform::new(vec![
        Segment::pulse(sign * INIT_PULSE_AMPLITUDE, INIT_PULSE_DURATION)?,
        Segment::pulse(0.0, SETTLING_GAP)?,
    ])
}

pub(crate) fn polarity_sign(polarity: i8) -> Result<f64> {
    match polarity {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        p => Err(invalid("polarity", format!("{p} is not +1 or -1"))),
    }
}
